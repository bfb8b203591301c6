#pragma once

// Experiment configuration (JSON, schema_version 1).
//
// {
//   "schema_version": 1,
//   "preset": "sioux-falls",             optional; fills every field below
//   "game": {"type": "routing" | "synthetic-rkhs" | "tabular", ...},
//   "T": 100, "runs": 5, "seed": 0,
//   "output_dir": "out",
//   "threads": 0,                        0: hardware concurrency
//   "learners": [ {"label": "...", "type": "cgpmw", ...}, ... ],
//   "analysis": {"delta": 0.1}
// }
//
// Each entry of "learners" is one learner configuration: every player runs
// it, except players listed in its optional "overrides". Run r of every
// configuration uses seed + r for its streams; the game itself (contexts,
// reward bounds) is drawn from the master seed and shared by all runs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgame/errors.hpp"

#ifndef CGAME_DEFAULT_DATA_DIR
#define CGAME_DEFAULT_DATA_DIR "data"
#endif

namespace cgame {

struct LearnerOverride {
  std::vector<std::size_t> players;
  nlohmann::json learner;
};

struct LearnerConfig {
  std::string label;
  nlohmann::json spec;  // type and hyperparameters
  std::vector<LearnerOverride> overrides;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string preset;
  nlohmann::json game;
  std::size_t T = 100;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::size_t threads = 0;
  std::vector<LearnerConfig> learners;
  double delta = 0.1;
};

inline std::string default_data_dir() {
  if (const char* d = std::getenv("CGAME_DATA_DIR")) return d;
  return CGAME_DEFAULT_DATA_DIR;
}

// ---------------------------------------------------------------------------
// Presets

inline nlohmann::json preset_json(const std::string& name) {
  using nlohmann::json;
  if (name == "sioux-falls") {
    const std::string dir = default_data_dir() + "/sioux_falls";
    // Kernel hyperparameters picked offline on random plays of this network.
    json gp = {{"beta", 2.0}, {"lambda", 1e-4}, {"variance", 0.1}, {"own_offset", 1.0}, {"data_budget", 500}};
    json cgpmw = gp;
    cgpmw["type"] = "cgpmw";
    cgpmw["kernel"] = "routing-contextual";
    cgpmw["eta"] = "theory";
    json gpmw = gp;
    gpmw["type"] = "gpmw";
    gpmw["kernel"] = "routing-blind";
    gpmw["label"] = "gpmw";
    json eq7 = cgpmw;
    eq7["label"] = "cgpmw-stochastic";
    eq7["strategy"] = "stochastic";
    json eq5 = cgpmw;
    eq5["label"] = "cgpmw-net";
    eq5["strategy"] = "net";
    eq5["radius_per_edge"] = 5000.0;
    return {{"schema_version", 1},
            {"game",
             {{"type", "routing"},
              {"net", dir + "/SiouxFalls_net.tntp"},
              {"trips", dir + "/SiouxFalls_trips.tntp"},
              {"routes", 5},
              {"demand_multiplier", 1.0},
              {"profiles", 10},
              {"scaler_samples", 10000},
              {"noise", 0.001},
              {"max_agents", 0},
              {"reward_scale", "log"},
              {"norm_quantile", 0.9}}},
            {"T", 100},
            {"runs", 5},
            {"seed", 0},
            {"output_dir", "out/sioux-falls"},
            {"learners",
             {eq7,
              eq5,
              gpmw,
              {{"label", "robust-lin-exp3"}, {"type", "robust-lin-exp3"}, {"eta", 0.3}, {"gamma", 0.2}},
              {{"label", "no-learning"}, {"type", "no-learning"}}}}};
  }
  if (name == "synthetic-small") {
    return {{"schema_version", 1},
            {"game",
             {{"type", "synthetic-rkhs"},
              {"players", 2},
              {"actions", 3},
              {"context_dim", 1},
              {"num_contexts", 2},
              {"num_centers", 10},
              {"noise", 0.01},
              {"kernel", {{"type", "squared-exponential"}, {"lengthscales", {0.5}}}}}},
            {"T", 2000},
            {"runs", 1},
            {"seed", 0},
            {"output_dir", "out/synthetic-small"},
            {"learners",
             {{{"label", "cgpmw-stochastic"},
               {"type", "cgpmw"},
               {"strategy", "stochastic"},
               {"kernel", "game"},
               {"beta", {{"delta", 0.1}}},
               {"eta", "theory"},
               {"known_contexts", true}}}}};
  }
  throw ConfigError("preset", "unknown preset '" + name + "' (known: sioux-falls, synthetic-small)");
}

// ---------------------------------------------------------------------------
// Parsing with field paths in errors

namespace detail {

template <class T>
T field(const nlohmann::json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "/" + key, "has the wrong type");
  }
}

inline void merge_into(nlohmann::json& base, const nlohmann::json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge_into(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

}  // namespace detail

inline const std::vector<std::string>& learner_types() {
  static const std::vector<std::string> t = {"cgpmw", "gpmw", "exp3", "s-exp3", "robust-lin-exp3",
                                             "no-learning"};
  return t;
}

inline void validate_learner_spec(const nlohmann::json& spec, const std::string& path) {
  if (!spec.is_object()) throw ConfigError(path, "must be an object");
  if (!spec.contains("type")) throw ConfigError(path + "/type", "is required");
  if (!spec.at("type").is_string()) throw ConfigError(path + "/type", "must be a string");
  const std::string type = spec.at("type").get<std::string>();
  bool known = false;
  for (const auto& t : learner_types()) known = known || t == type;
  if (!known) throw ConfigError(path + "/type", "unknown learner type '" + type + "'");
  if (type == "cgpmw") {
    const std::string s = detail::field<std::string>(spec, "strategy", path, "stochastic");
    if (s != "finite" && s != "net" && s != "stochastic") {
      throw ConfigError(path + "/strategy", "must be finite, net or stochastic");
    }
    if (s == "net" && !spec.contains("radius") && !spec.contains("radius_per_edge")) {
      throw ConfigError(path + "/radius", "the net strategy needs radius or radius_per_edge");
    }
  }
  if (spec.contains("lambda")) {
    double l = detail::field<double>(spec, "lambda", path, 1.0);
    if (!(l > 0.0)) throw ConfigError(path + "/lambda", "must be positive");
    if (l < 1.0 && spec.contains("beta") && spec.at("beta").is_object()) {
      throw ConfigError(path + "/lambda", "the theoretical beta schedule needs lambda >= 1");
    }
  }
  if (spec.contains("eta")) {
    const auto& e = spec.at("eta");
    if (e.is_number()) {
      if (!(e.get<double>() > 0.0)) throw ConfigError(path + "/eta", "must be positive");
    } else if (e.is_string()) {
      const std::string r = e.get<std::string>();
      if (r != "theory" && r != "visits" && r != "horizon") {
        throw ConfigError(path + "/eta", "must be a number or theory, visits, horizon");
      }
    } else {
      throw ConfigError(path + "/eta", "has the wrong type");
    }
  }
  if (spec.contains("beta")) {
    const auto& b = spec.at("beta");
    if (b.is_number()) {
      if (!(b.get<double>() >= 0.0)) throw ConfigError(path + "/beta", "must be >= 0");
    } else if (b.is_object()) {
      double delta = detail::field<double>(b, "delta", path + "/beta", 0.1);
      if (!(delta > 0.0 && delta < 1.0)) throw ConfigError(path + "/beta/delta", "must be in (0,1)");
    } else {
      throw ConfigError(path + "/beta", "must be a number or a theory object");
    }
  }
}

inline ExperimentConfig parse_config(nlohmann::json j) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  if (j.contains("preset") && !j.at("preset").is_null()) {
    if (!j.at("preset").is_string()) throw ConfigError("/preset", "must be a string");
    nlohmann::json base = preset_json(j.at("preset").get<std::string>());
    nlohmann::json over = j;
    over.erase("preset");
    detail::merge_into(base, over);
    base["preset"] = j.at("preset");
    j = std::move(base);
  }
  ExperimentConfig c;
  c.schema_version = detail::field<int>(j, "schema_version", "", 1);
  if (c.schema_version != 1) throw ConfigError("/schema_version", "unsupported version");
  c.preset = detail::field<std::string>(j, "preset", "", "");
  if (!j.contains("game") || !j.at("game").is_object()) throw ConfigError("/game", "is required");
  c.game = j.at("game");
  if (!c.game.contains("type") || !c.game.at("type").is_string()) {
    throw ConfigError("/game/type", "is required");
  }
  const std::string gt = c.game.at("type").get<std::string>();
  if (gt != "routing" && gt != "synthetic-rkhs" && gt != "tabular") {
    throw ConfigError("/game/type", "unknown game type '" + gt + "'");
  }
  if (gt == "routing") {
    for (const char* key : {"net", "trips"}) {
      if (!c.game.contains(key) || !c.game.at(key).is_string()) {
        throw ConfigError(std::string("/game/") + key, "is required");
      }
      if (!std::filesystem::exists(c.game.at(key).get<std::string>())) {
        throw ConfigError(std::string("/game/") + key,
                          "file not found: " + c.game.at(key).get<std::string>());
      }
    }
  }
  long long T = detail::field<long long>(j, "T", "", 100);
  if (T < 1) throw ConfigError("/T", "must be >= 1");
  c.T = static_cast<std::size_t>(T);
  long long runs = detail::field<long long>(j, "runs", "", 5);
  if (runs < 1) throw ConfigError("/runs", "must be >= 1");
  c.runs = static_cast<std::size_t>(runs);
  c.seed = detail::field<std::uint64_t>(j, "seed", "", 0);
  c.output_dir = detail::field<std::string>(j, "output_dir", "", "out");
  c.threads = detail::field<std::size_t>(j, "threads", "", 0);
  if (j.contains("analysis")) c.delta = detail::field<double>(j.at("analysis"), "delta", "/analysis", 0.1);

  if (!j.contains("learners") || !j.at("learners").is_array() || j.at("learners").empty()) {
    throw ConfigError("/learners", "needs at least one learner configuration");
  }
  const auto& ls = j.at("learners");
  for (std::size_t k = 0; k < ls.size(); ++k) {
    const std::string path = "/learners/" + std::to_string(k);
    const auto& l = ls[k];
    validate_learner_spec(l, path);
    LearnerConfig lc;
    lc.label = detail::field<std::string>(l, "label", path, l.at("type").get<std::string>());
    if (lc.label.empty() || lc.label.find_first_of("/\\ ") != std::string::npos) {
      throw ConfigError(path + "/label", "must be non-empty without spaces or slashes");
    }
    for (const auto& other : c.learners) {
      if (other.label == lc.label) throw ConfigError(path + "/label", "duplicate label");
    }
    lc.spec = l;
    lc.spec.erase("overrides");
    if (l.contains("overrides")) {
      const auto& ov = l.at("overrides");
      if (!ov.is_array()) throw ConfigError(path + "/overrides", "must be an array");
      for (std::size_t m = 0; m < ov.size(); ++m) {
        const std::string op = path + "/overrides/" + std::to_string(m);
        LearnerOverride o;
        if (!ov[m].contains("players") || !ov[m].at("players").is_array()) {
          throw ConfigError(op + "/players", "is required");
        }
        o.players = detail::field<std::vector<std::size_t>>(ov[m], "players", op, {});
        if (!ov[m].contains("learner")) throw ConfigError(op + "/learner", "is required");
        o.learner = ov[m].at("learner");
        validate_learner_spec(o.learner, op + "/learner");
        lc.overrides.push_back(std::move(o));
      }
    }
    c.learners.push_back(std::move(lc));
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(std::move(j));
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json ls = nlohmann::json::array();
  for (const auto& l : c.learners) {
    nlohmann::json s = l.spec;
    s["label"] = l.label;
    if (!l.overrides.empty()) {
      s["overrides"] = nlohmann::json::array();
      for (const auto& o : l.overrides) s["overrides"].push_back({{"players", o.players}, {"learner", o.learner}});
    }
    ls.push_back(s);
  }
  nlohmann::json j = {{"schema_version", c.schema_version},
                      {"game", c.game},
                      {"T", c.T},
                      {"runs", c.runs},
                      {"seed", c.seed},
                      {"output_dir", c.output_dir},
                      {"threads", c.threads},
                      {"learners", ls},
                      {"analysis", {{"delta", c.delta}}}};
  if (!c.preset.empty()) j["resolved_from_preset"] = c.preset;
  return j;
}

}  // namespace cgame
