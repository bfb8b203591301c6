// cgame: run contextual-game experiments and inspect routing networks.
//
//   cgame run --preset sioux-falls --learner cgpmw-stochastic --T 100 --runs 5 --seed 0
//   cgame run --config exp.json --output-dir out
//   cgame analyze --trace out/x/run_0/trace.json --game out/game.json
//   cgame routes --net N.tntp --origin 1 --destination 20 --K 5
//   cgame net-info --net N.tntp [--trips T.tntp]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.
// CGAME_OUTPUT_DIR overrides the output directory, CGAME_THREADS the number
// of worker threads.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgame/harness/config.hpp"
#include "cgame/harness/experiment.hpp"
#include "cgame/routing.hpp"

namespace {

using nlohmann::json;

struct RunArgs {
  std::string config, preset, output_dir;
  std::vector<std::string> learners;
  std::optional<std::size_t> T, runs, threads;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  json j;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw cgame::ConfigError("--config", "cannot open " + a.config);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw cgame::ConfigError("--config", e.what());
    }
  }
  if (!a.preset.empty()) j["preset"] = a.preset;
  if (j.is_null() || j.empty()) throw cgame::ConfigError("--config", "give --config or --preset");
  if (a.T) j["T"] = *a.T;
  if (a.runs) j["runs"] = *a.runs;
  if (a.seed) j["seed"] = *a.seed;
  if (a.threads) j["threads"] = *a.threads;
  if (!a.output_dir.empty()) j["output_dir"] = a.output_dir;
  cgame::ExperimentConfig cfg = cgame::parse_config(j);
  if (!a.learners.empty()) {
    std::vector<cgame::LearnerConfig> kept;
    for (const auto& want : a.learners) {
      bool found = false;
      for (const auto& l : cfg.learners) {
        if (l.label == want) {
          kept.push_back(l);
          found = true;
        }
      }
      if (!found) throw cgame::ConfigError("--learner", "no learner labelled '" + want + "'");
    }
    cfg.learners = std::move(kept);
  }
  auto res = cgame::run_experiment(cfg, a.quiet ? nullptr : &std::cerr);
  std::cout << res.summary.dump(2) << '\n';
  std::cerr << "wrote " << res.files.size() << " files to " << res.output_dir.string() << '\n';
  return 0;
}

int cmd_analyze(const std::string& trace, const std::string& game, double delta, const std::string& out) {
  json r = cgame::analyze(trace, game, delta);
  if (out.empty()) {
    std::cout << r.dump(2) << '\n';
  } else {
    std::ofstream os(out);
    if (!os) throw cgame::InputError("cannot write " + out);
    os << r.dump(2) << '\n';
  }
  return 0;
}

cgame::Network load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cgame::InputError("cannot open " + path);
  return cgame::parse_tntp_net(in);
}

int cmd_routes(const std::string& net_path, const std::string& trips_path, int origin, int destination,
               std::size_t K) {
  cgame::Network net = load_net(net_path);
  std::vector<std::pair<int, int>> pairs;
  if (origin > 0 && destination > 0) {
    pairs.emplace_back(origin, destination);
  } else {
    if (trips_path.empty()) throw cgame::ConfigError("--origin", "give --origin/--destination or --trips");
    std::ifstream in(trips_path);
    if (!in) throw cgame::InputError("cannot open " + trips_path);
    for (const auto& s : cgame::parse_tntp_trips(in)) pairs.emplace_back(s.origin, s.destination);
  }
  json out = json::array();
  for (auto [o, d] : pairs) {
    cgame::RouteSet rs = cgame::k_shortest_routes(net, o, d, K);
    json routes = json::array();
    for (const auto& r : rs.routes) routes.push_back({{"nodes", r.nodes}, {"links", r.links}, {"cost", r.cost}});
    out.push_back({{"origin", o}, {"destination", d}, {"incomplete", rs.incomplete}, {"routes", routes}});
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_net_info(const std::string& net_path, const std::string& trips_path) {
  cgame::Network net = load_net(net_path);
  double cap_min = 1e300, cap_max = 0.0, fft = 0.0;
  for (const auto& l : net.links) {
    cap_min = std::min(cap_min, l.capacity);
    cap_max = std::max(cap_max, l.capacity);
    fft += l.free_flow_time;
  }
  json info = {{"zones", net.zones},
               {"nodes", net.nodes},
               {"links", net.links.size()},
               {"first_thru_node", net.first_thru_node},
               {"capacity_min", cap_min},
               {"capacity_max", cap_max},
               {"free_flow_time_total", fft}};
  if (!trips_path.empty()) {
    std::ifstream in(trips_path);
    if (!in) throw cgame::InputError("cannot open " + trips_path);
    auto stubs = cgame::parse_tntp_trips(in);
    double total = 0.0;
    for (const auto& s : stubs) total += s.demand;
    info["od_pairs"] = stubs.size();
    info["total_demand"] = total;
  }
  std::cout << info.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual game experiments"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run an experiment and write traces, analyses and aggregates");
  run->add_option("--config", ra.config, "experiment JSON");
  run->add_option("--preset", ra.preset, "sioux-falls | synthetic-small");
  run->add_option("--learner", ra.learners, "keep only these learner labels");
  run->add_option("--T", ra.T, "rounds");
  run->add_option("--runs", ra.runs, "independent runs");
  run->add_option("--seed", ra.seed, "master seed");
  run->add_option("--threads", ra.threads, "worker threads (0: all cores)");
  run->add_option("--output-dir", ra.output_dir, "output directory");
  run->add_flag("--quiet", ra.quiet, "no progress on stderr");

  std::string trace, game, out;
  double delta = 0.1;
  auto* an = app.add_subcommand("analyze", "analyze a trace against its game description");
  an->add_option("--trace", trace, "trace.json")->required();
  an->add_option("--game", game, "game.json")->required();
  an->add_option("--delta", delta, "confidence for the context-distribution bound");
  an->add_option("--out", out, "write the report here instead of stdout");

  std::string net_path, trips_path;
  int origin = 0, destination = 0;
  std::size_t K = 5;
  auto* routes = app.add_subcommand("routes", "enumerate the K shortest loopless routes");
  routes->add_option("--net", net_path, "network file")->required();
  routes->add_option("--trips", trips_path, "trip table: every OD pair");
  routes->add_option("--origin", origin);
  routes->add_option("--destination", destination);
  routes->add_option("--K", K, "routes per pair");

  auto* info = app.add_subcommand("net-info", "summarize a network and trip table");
  info->add_option("--net", net_path, "network file")->required();
  info->add_option("--trips", trips_path, "trip table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(ra);
    if (*an) return cmd_analyze(trace, game, delta, out);
    if (*routes) return cmd_routes(net_path, trips_path, origin, destination, K);
    if (*info) return cmd_net_info(net_path, trips_path);
  } catch (const cgame::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
