#pragma once

// Experiment orchestration: game and learner construction from JSON, seeded
// runs, traces, per-run analysis and the aggregate CSVs consumed by plotting.
//
// Layout of an output directory:
//   config.json                    resolved configuration
//   game.json                      game description (input to `analyze`)
//   aggregate_<label>.csv          round,learner,loss_mean,loss_std,congestion_mean,congestion_std
//   summary.json
//   <label>/run_<r>/trace.csv
//   <label>/run_<r>/trace.json
//   <label>/run_<r>/analysis.json
//
// loss_* is the time-averaged loss (1/t) sum_{tau<=t} mean_i (1 - r^i_tau)
// across runs; congestion_* the network-average congestion of round t (zero
// for games without a network).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "cgame/analysis.hpp"
#include "cgame/baselines.hpp"
#include "cgame/cgpmw.hpp"
#include "cgame/game.hpp"
#include "cgame/harness/config.hpp"
#include "cgame/routing.hpp"

namespace cgame {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Games

struct GameBundle {
  std::shared_ptr<const ContextualGame> game;
  std::function<std::unique_ptr<ContextSource>()> make_source;
  std::optional<ContextDistribution> zeta;
  nlohmann::json description;  // complete: rebuilding from it gives the same game
};

inline const RoutingGame* as_routing(const ContextualGame& g) {
  return dynamic_cast<const RoutingGame*>(&g);
}

inline GameBundle make_game(nlohmann::json desc, std::uint64_t master_seed) {
  const std::string type = desc.at("type").get<std::string>();
  if (!desc.contains("seed")) desc["seed"] = master_seed;
  const auto seed = desc.at("seed").get<std::uint64_t>();
  GameBundle b;
  try {
    if (type == "routing") {
      RoutingOptions o;
      o.routes = desc.value("routes", o.routes);
      o.demand_multiplier = desc.value("demand_multiplier", o.demand_multiplier);
      o.profiles = desc.value("profiles", o.profiles);
      o.scaler_samples = desc.value("scaler_samples", o.scaler_samples);
      o.noise = desc.value("noise", o.noise);
      o.max_agents = desc.value("max_agents", o.max_agents);
      o.norm_quantile = desc.value("norm_quantile", o.norm_quantile);
      const std::string rs = desc.value("reward_scale", std::string("linear"));
      if (rs != "linear" && rs != "log") throw ConfigError("/game/reward_scale", "must be linear or log");
      o.reward_scale = rs == "log" ? RewardScale::log : RewardScale::linear;
      o.seed = seed;
      TntpData data = load_tntp(desc.at("net").get<std::string>(), desc.at("trips").get<std::string>());
      auto g = std::make_shared<RoutingGame>(std::move(data.network), std::move(data.agents), o);
      b.zeta = g->zeta();
      b.game = g;
    } else if (type == "synthetic-rkhs") {
      SyntheticGameOptions o = SyntheticRkhsGame::options_from_json(desc);
      o.seed = seed;
      auto g = std::make_shared<SyntheticRkhsGame>(o);
      const std::size_t nz = desc.value("num_contexts", std::size_t{2});
      if (nz > 0) {
        Rng rng = derive_stream(seed, StreamKind::setup, 7);
        ContextDistribution zeta;
        for (std::size_t k = 0; k < nz; ++k) {
          Vector z(o.context_dim);
          for (double& v : z) v = uniform01(rng);
          zeta.support.push_back(std::move(z));
        }
        b.zeta = zeta;
      }
      b.game = g;
      desc = g->describe();
      desc["num_contexts"] = nz;
    } else if (type == "tabular") {
      auto g = std::make_shared<TabularGame>(TabularGame::from_json(desc));
      ContextDistribution zeta;
      zeta.support = g->contexts();
      if (desc.contains("weights")) zeta.weights = desc.at("weights").get<Vector>();
      b.zeta = zeta;
      b.game = g;
    } else {
      throw ConfigError("/game/type", "unknown game type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("/game", e.what());
  }
  if (b.zeta) {
    ContextDistribution zeta = *b.zeta;
    b.make_source = [zeta] { return std::make_unique<FiniteIid>(zeta); };
  } else {
    const std::size_t c = desc.value("context_dim", std::size_t{1});
    b.make_source = [c] { return std::make_unique<BoxUniform>(c); };
  }
  b.description = desc;
  return b;
}

// ---------------------------------------------------------------------------
// Learners

// k1(own) * k2(load) with k1 linear (own_offset 0) or affine, k2 polynomial.
inline KernelSpec routing_kernel(const RoutingGame& g, std::size_t i, bool contextual, int degree = 4,
                                 double offset = 1.0, double variance = 1.0, double own_offset = 0.0) {
  InputMap own{Projection::own, Normalization::scale, g.own_scale(i)};
  InputMap load = contextual
                      ? InputMap{Projection::load_over_context, Normalization::scale, g.bounds().ratio_norm[i]}
                      : InputMap{Projection::own_plus_opponents, Normalization::scale, g.bounds().load_norm[i]};
  KernelSpec k1 = own_offset > 0.0 ? KernelSpec::polynomial(1, own_offset, own) : KernelSpec::linear(own);
  KernelSpec k = KernelSpec::product({k1, KernelSpec::polynomial(degree, offset, load)});
  k.variance = variance;
  return k;
}

inline KernelSpec resolve_kernel(const nlohmann::json& spec, const ContextualGame& game, std::size_t i,
                                 bool blind, const std::string& path) {
  nlohmann::json k = spec.contains("kernel") ? spec.at("kernel") : nlohmann::json();
  if (k.is_null()) {
    if (as_routing(game)) k = blind ? "routing-blind" : "routing-contextual";
    else if (dynamic_cast<const SyntheticRkhsGame*>(&game)) k = "game";
    else return KernelSpec::squared_exponential({0.5});
  }
  if (k.is_string()) {
    const std::string name = k.get<std::string>();
    if (name == "routing-contextual" || name == "routing-blind") {
      const RoutingGame* rg = as_routing(game);
      if (!rg) throw ConfigError(path + "/kernel", name + " needs a routing game");
      return routing_kernel(*rg, i, name == "routing-contextual", spec.value("degree", 4),
                            spec.value("offset", 1.0), spec.value("variance", 1.0),
                            spec.value("own_offset", 0.0));
    }
    if (name == "game") {
      auto* sg = dynamic_cast<const SyntheticRkhsGame*>(&game);
      if (!sg) throw ConfigError(path + "/kernel", "'game' needs a synthetic game");
      return sg->kernel();
    }
    throw ConfigError(path + "/kernel", "unknown kernel keyword '" + name + "'");
  }
  try {
    return k.get<KernelSpec>();
  } catch (const std::exception& e) {
    throw ConfigError(path + "/kernel", e.what());
  }
}

struct LearnerContext {
  const ContextualGame* game = nullptr;
  std::size_t player = 0;
  std::size_t T = 1;
  std::optional<ContextDistribution> zeta;
};

inline LearnerPtr make_learner(const nlohmann::json& spec, const LearnerContext& ctx, const std::string& path) {
  const ContextualGame& game = *ctx.game;
  const std::size_t i = ctx.player;
  const std::size_t K = game.num_actions(i);
  const std::string type = spec.at("type").get<std::string>();
  try {
    if (type == "no-learning") return std::make_unique<NoLearning>(K);
    if (type == "exp3" || type == "s-exp3") {
      Exp3Options o;
      if (spec.contains("eta")) o.eta = spec.at("eta").get<double>();
      o.gamma = spec.value("gamma", 0.0);
      o.horizon = ctx.T;
      o.contextual = type == "s-exp3";
      return std::make_unique<Exp3>(K, o);
    }
    if (type == "robust-lin-exp3") {
      RobustLinExp3Options o;
      o.eta = spec.value("eta", 0.3);
      o.gamma = spec.value("gamma", 0.2);
      if (ctx.zeta) {
        ContextDistribution obs;
        for (const auto& z : ctx.zeta->support) obs.support.push_back(game.observed_context(i, z));
        obs.weights = ctx.zeta->weights;
        o.contexts = obs;
      }
      if (const RoutingGame* rg = as_routing(game)) {
        for (std::size_t e : rg->agents()[i].edges) o.feature_scale.push_back(1.2 * rg->network().links[e].capacity);
      }
      if (!o.contexts) throw ConfigError(path, "robust-lin-exp3 needs a known context distribution");
      return std::make_unique<RobustLinExp3>(K, o);
    }
    const bool blind = type == "gpmw";
    CgpmwOptions o;
    o.kernel = resolve_kernel(spec, game, i, blind, path);
    o.lambda = spec.value("lambda", 1.0);
    o.horizon = ctx.T;
    if (spec.contains("data_budget")) o.data_budget = spec.at("data_budget").get<std::size_t>();
    if (spec.contains("beta") && spec.at("beta").is_object()) {
      const auto& b = spec.at("beta");
      o.beta.theory = true;
      double B = 1.0;
      if (auto* sg = dynamic_cast<const SyntheticRkhsGame*>(&game)) B = sg->bound(i);
      o.beta.B = b.value("B", B);
      o.beta.noise = b.value("noise", game.noise_sigma());
      o.beta.delta = b.value("delta", 0.1);
    } else {
      o.beta.constant = spec.value("beta", 2.0);
    }
    if (blind) {
      o.strategy = ContextStrategy::finite;
      o.drop_context = true;
      o.eta_rule = EtaRule::horizon;
    } else {
      const std::string s = spec.value("strategy", std::string("stochastic"));
      o.strategy = s == "finite" ? ContextStrategy::finite
                   : s == "net"  ? ContextStrategy::net
                                 : ContextStrategy::stochastic;
      if (spec.contains("radius")) o.radius = spec.at("radius").get<double>();
      if (spec.contains("radius_per_edge")) {
        const Vector probe = game.observed_context(i, ctx.zeta ? ctx.zeta->support.front() : Vector{});
        o.radius = spec.at("radius_per_edge").get<double>() * static_cast<double>(probe.size());
      }
      if (spec.value("known_contexts", false)) {
        if (!ctx.zeta) throw ConfigError(path + "/known_contexts", "the game has no finite context set");
        std::vector<Vector> known;
        for (const auto& z : ctx.zeta->support) known.push_back(game.observed_context(i, z));
        o.known_contexts = known;
      }
    }
    if (spec.contains("eta")) {
      const auto& e = spec.at("eta");
      if (e.is_number()) {
        o.eta_rule = EtaRule::constant;
        o.eta_constant = e.get<double>();
      } else {
        const std::string r = e.get<std::string>();
        if (r == "visits") o.eta_rule = EtaRule::visits;
        else if (r == "horizon") o.eta_rule = EtaRule::horizon;
        else if (!blind) o.eta_rule = EtaRule::theory;
      }
    }
    return std::make_unique<CgpmwLearner>(game.action_features(i), o);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, e.what());
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
}

inline std::vector<LearnerPtr> make_population(const LearnerConfig& lc, const GameBundle& b, std::size_t T,
                                               const std::string& path) {
  const std::size_t N = b.game->num_players();
  std::vector<const nlohmann::json*> spec(N, &lc.spec);
  std::vector<std::string> where(N, path);
  for (std::size_t m = 0; m < lc.overrides.size(); ++m) {
    for (std::size_t p : lc.overrides[m].players) {
      if (p >= N) throw ConfigError(path + "/overrides/" + std::to_string(m) + "/players", "player out of range");
      spec[p] = &lc.overrides[m].learner;
      where[p] = path + "/overrides/" + std::to_string(m) + "/learner";
    }
  }
  std::vector<LearnerPtr> out;
  out.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    out.push_back(make_learner(*spec[i], LearnerContext{b.game.get(), i, T, b.zeta}, where[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
  std::string label;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  GameTrace trace;
  Vector mean_loss;   // per round, over players
  Vector congestion;  // per round; 0 without a network
  nlohmann::json learner_diagnostics;
};

inline RunResult run_once(const GameBundle& b, const LearnerConfig& lc, std::size_t lc_index, std::size_t T,
                          std::uint64_t seed, std::size_t run) {
  const ContextualGame& game = *b.game;
  const RoutingGame* rg = as_routing(game);
  auto learners = make_population(lc, b, T, "/learners/" + std::to_string(lc_index));
  std::vector<Learner*> ptrs;
  for (auto& l : learners) ptrs.push_back(l.get());
  auto source = b.make_source();
  RunStreams streams = RunStreams::derive(seed, game.num_players());
  RunResult res;
  res.label = lc.label;
  res.run = run;
  res.seed = seed;
  res.trace = new_trace(game);
  for (std::size_t t = 0; t < T; ++t) {
    TraceRow row = play_round(game, ptrs, *source, t, streams);
    double loss = 0.0;
    for (double r : row.rewards) loss += 1.0 - r;
    res.mean_loss.push_back(loss / static_cast<double>(row.rewards.size()));
    res.congestion.push_back(rg ? rg->average_congestion(row.joint, row.context) : 0.0);
    if (rg) row.distributions.clear();  // 528 x K per round; not needed for analysis
    res.trace.rows.push_back(std::move(row));
  }
  if (ptrs.size() <= 16) {
    res.learner_diagnostics = nlohmann::json::array();
    for (auto* l : ptrs) res.learner_diagnostics.push_back({{"kind", l->kind()}, {"state", l->diagnostics()}});
  } else {
    std::size_t clamps = 0;
    for (auto* l : ptrs) clamps += l->diagnostics().value("variance_clamps", std::size_t{0});
    res.learner_diagnostics = {{"kind", ptrs.front()->kind()}, {"players", ptrs.size()},
                               {"variance_clamps_total", clamps}};
  }
  return res;
}

inline void write_routing_trace_csv(std::ostream& os, const RoutingGame& g, const RunResult& r) {
  os << "round,agent,action,raw_reward,scaled_loss,avg_congestion\n";
  Vector raw;
  for (std::size_t t = 0; t < r.trace.size(); ++t) {
    const auto& row = r.trace.rows[t];
    g.raw_rewards(row.joint, row.context, raw);
    const std::string cong = format_double(r.congestion[t]);
    for (std::size_t i = 0; i < row.joint.size(); ++i) {
      os << t + 1 << ',' << i << ',' << row.joint[i] << ',' << format_double(raw[i]) << ','
         << format_double(1.0 - row.rewards[i]) << ',' << cong << '\n';
    }
  }
}

inline nlohmann::json run_analysis(const GameBundle& b, const RunResult& r, double delta) {
  ReportOptions ro;
  ro.delta = delta;
  ro.zeta = b.zeta;
  nlohmann::json j = analysis_report(*b.game, r.trace, ro);
  j["learner"] = r.label;
  j["run"] = r.run;
  j["seed"] = r.seed;
  double cum = 0.0;
  for (double l : r.mean_loss) cum += l;
  j["time_averaged_loss"] = cum / static_cast<double>(r.mean_loss.size());
  double cg = 0.0;
  for (double c : r.congestion) cg += c;
  j["mean_congestion"] = cg / static_cast<double>(r.congestion.size());
  j["learners"] = r.learner_diagnostics;
  return j;
}

inline std::size_t resolve_threads(std::size_t configured) {
  if (const char* env = std::getenv("CGAME_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0) throw ConfigError("CGAME_THREADS", "must be a non-negative integer");
    configured = static_cast<std::size_t>(v);
  }
  if (configured == 0) configured = std::max(1u, std::thread::hardware_concurrency());
  return configured;
}

// Runs `n` jobs on up to `threads` workers; rethrows the first failure.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& job) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= n) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (error) return;
      }
      try {
        job(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  threads = std::min(threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

struct AggregateRow {
  double loss_mean = 0.0, loss_std = 0.0, congestion_mean = 0.0, congestion_std = 0.0;
};

inline std::pair<double, double> mean_std(const Vector& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

inline std::vector<AggregateRow> aggregate(const std::vector<const RunResult*>& runs, std::size_t T) {
  std::vector<AggregateRow> out(T);
  std::vector<double> cum(runs.size(), 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Vector loss, cong;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      cum[r] += runs[r]->mean_loss[t];
      loss.push_back(cum[r] / static_cast<double>(t + 1));
      cong.push_back(runs[r]->congestion[t]);
    }
    std::tie(out[t].loss_mean, out[t].loss_std) = mean_std(loss);
    std::tie(out[t].congestion_mean, out[t].congestion_std) = mean_std(cong);
  }
  return out;
}

inline void write_aggregate_csv(std::ostream& os, const std::string& label, const std::vector<AggregateRow>& rows) {
  os << "round,learner,loss_mean,loss_std,congestion_mean,congestion_std\n";
  for (std::size_t t = 0; t < rows.size(); ++t) {
    os << t + 1 << ',' << label << ',' << format_double(rows[t].loss_mean) << ',' << format_double(rows[t].loss_std)
       << ',' << format_double(rows[t].congestion_mean) << ',' << format_double(rows[t].congestion_std) << '\n';
  }
}

struct ExperimentSummary {
  fs::path output_dir;
  std::vector<std::string> files;  // relative to output_dir
  nlohmann::json summary;
};

// Runs every (learner configuration, run) pair and writes all artifacts.
// Files are written to a staging directory first and moved into place only
// when everything succeeded; on failure nothing new is left behind.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  fs::path out = cfg.output_dir;
  if (const char* env = std::getenv("CGAME_OUTPUT_DIR")) out = env;
  fs::create_directories(out);
  const fs::path staging = out / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  fs::create_directories(staging);
  ExperimentSummary res;
  res.output_dir = out;
  try {
    GameBundle bundle = make_game(cfg.game, cfg.seed);
    if (log) *log << "game: " << bundle.game->num_players() << " players\n";
    const std::size_t L = cfg.learners.size();
    // Build every population once up front so configuration errors surface
    // before any simulation time is spent.
    for (std::size_t k = 0; k < L; ++k) make_population(cfg.learners[k], bundle, cfg.T, "/learners/" + std::to_string(k));

    std::vector<RunResult> results(L * cfg.runs);
    std::vector<nlohmann::json> analyses(L * cfg.runs);
    std::mutex log_mu;
    parallel_for(results.size(), resolve_threads(cfg.threads), [&](std::size_t job) {
      const std::size_t k = job / cfg.runs, r = job % cfg.runs;
      results[job] = run_once(bundle, cfg.learners[k], k, cfg.T, cfg.seed + r, r);
      analyses[job] = run_analysis(bundle, results[job], cfg.delta);
      if (log) {
        std::lock_guard<std::mutex> lock(log_mu);
        *log << cfg.learners[k].label << " run " << r << ": time-averaged loss "
             << analyses[job]["time_averaged_loss"].get<double>() << "\n";
      }
    });

    auto write = [&](const fs::path& rel, const std::function<void(std::ostream&)>& fn) {
      fs::path p = staging / rel;
      fs::create_directories(p.parent_path());
      std::ofstream os(p);
      if (!os) throw InputError("cannot write " + p.string());
      fn(os);
      if (!os) throw InputError("write failed: " + p.string());
      res.files.push_back(rel.generic_string());
    };

    write("config.json", [&](std::ostream& os) { os << config_to_json(cfg).dump(2) << '\n'; });
    write("game.json", [&](std::ostream& os) { os << bundle.description.dump(2) << '\n'; });
    const RoutingGame* rg = as_routing(*bundle.game);
    nlohmann::json summary = {{"T", cfg.T}, {"runs", cfg.runs}, {"seed", cfg.seed}, {"learners", nlohmann::json::array()}};
    for (std::size_t k = 0; k < L; ++k) {
      std::vector<const RunResult*> runs;
      Vector final_loss, mean_cong;
      for (std::size_t r = 0; r < cfg.runs; ++r) {
        const std::size_t job = k * cfg.runs + r;
        const RunResult& rr = results[job];
        runs.push_back(&rr);
        const fs::path dir = fs::path(cfg.learners[k].label) / ("run_" + std::to_string(r));
        write(dir / "trace.csv", [&](std::ostream& os) {
          if (rg) write_routing_trace_csv(os, *rg, rr);
          else write_trace_csv(os, rr.trace);
        });
        write(dir / "trace.json", [&](std::ostream& os) { os << nlohmann::json(rr.trace).dump() << '\n'; });
        write(dir / "analysis.json", [&](std::ostream& os) { os << analyses[job].dump(2) << '\n'; });
        final_loss.push_back(analyses[job]["time_averaged_loss"].get<double>());
        mean_cong.push_back(analyses[job]["mean_congestion"].get<double>());
      }
      auto agg = aggregate(runs, cfg.T);
      write("aggregate_" + cfg.learners[k].label + ".csv",
            [&](std::ostream& os) { write_aggregate_csv(os, cfg.learners[k].label, agg); });
      auto [fl_m, fl_s] = mean_std(final_loss);
      auto [mc_m, mc_s] = mean_std(mean_cong);
      nlohmann::json regrets = nlohmann::json::array();
      for (std::size_t r = 0; r < cfg.runs; ++r) regrets.push_back(analyses[k * cfg.runs + r]["mean_regret"]);
      summary["learners"].push_back({{"label", cfg.learners[k].label},
                                     {"final_time_averaged_loss_mean", fl_m},
                                     {"final_time_averaged_loss_std", fl_s},
                                     {"mean_congestion_mean", mc_m},
                                     {"mean_congestion_std", mc_s},
                                     {"mean_regret_per_run", regrets}});
    }
    if (rg) summary["reward_clamps"] = rg->clamp_count();
    write("summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
    res.summary = summary;

    for (const auto& rel : res.files) {
      fs::path dst = out / rel;
      fs::create_directories(dst.parent_path());
      fs::rename(staging / rel, dst);
    }
    fs::remove_all(staging);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  return res;
}

// ---------------------------------------------------------------------------
// analyze

inline GameTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open trace " + path);
  nlohmann::json j;
  try {
    in >> j;
    return j.get<GameTrace>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid trace file: ") + e.what());
  }
}

inline nlohmann::json analyze(const std::string& trace_path, const std::string& game_path, double delta = 0.1) {
  std::ifstream in(game_path);
  if (!in) throw InputError("cannot open game description " + game_path);
  nlohmann::json desc;
  try {
    in >> desc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid game description: ") + e.what());
  }
  GameBundle b = make_game(desc, desc.value("seed", std::uint64_t{0}));
  GameTrace trace = load_trace(trace_path);
  if (trace.size() == 0) throw InputError("trace has no rounds");
  ReportOptions ro;
  ro.delta = delta;
  ro.zeta = b.zeta;
  return analysis_report(*b.game, trace, ro);
}

}  // namespace cgame
