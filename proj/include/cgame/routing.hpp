#pragma once

// Contextual traffic routing on a TNTP network.
//
// Agent i sends demand d_i from O_i to D_i along one of K precomputed routes.
// Edge travel times follow the BPR model t_e(x, z) = f_e (1 + 0.15 (x / z)^4)
// where x is the total load on e and z the edge capacity, which is the
// context and changes every round. An agent's raw reward is minus its total
// travel time, d_i sum_{e in route} t_e; the learner-facing reward rescales it
// to [0,1] with per-agent bounds estimated by sampling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgame/errors.hpp"
#include "cgame/game.hpp"
#include "cgame/learner.hpp"
#include "cgame/numeric.hpp"
#include "cgame/rng.hpp"

namespace cgame {

struct Link {
  int from = 0;  // node ids as in the file (1-based)
  int to = 0;
  double capacity = 0.0;
  double length = 0.0;
  double free_flow_time = 0.0;
  double b = 0.15;
  double power = 4.0;
  double speed = 0.0;
  double toll = 0.0;
  int type = 1;

  bool operator==(const Link&) const = default;
};

struct Network {
  std::size_t zones = 0;
  std::size_t nodes = 0;
  int first_thru_node = 1;
  std::vector<Link> links;

  std::size_t num_edges() const { return links.size(); }
  bool operator==(const Network&) const = default;
};

struct AgentStub {
  int origin = 0;
  int destination = 0;
  double demand = 0.0;

  bool operator==(const AgentStub&) const = default;
};

struct TntpData {
  Network network;
  std::vector<AgentStub> agents;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& tok, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, std::string("expected a number for ") + what + ", got '" + tok + "'");
  }
}

// "<KEY> value" metadata line; returns false for anything else.
inline bool metadata(const std::string& s, std::string& key, std::string& value) {
  if (s.empty() || s[0] != '<') return false;
  auto close = s.find('>');
  if (close == std::string::npos) return false;
  key = s.substr(1, close - 1);
  value = trim(s.substr(close + 1));
  return true;
}

}  // namespace detail

inline Network parse_tntp_net(std::istream& in) {
  Network net;
  std::string raw;
  std::size_t line = 0;
  bool in_header = true;
  std::size_t declared_links = 0;
  bool have_declared = false;
  int max_node = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = detail::trim(raw);
    if (in_header) {
      std::string key, value;
      if (detail::metadata(s, key, value)) {
        if (key == "END OF METADATA") {
          in_header = false;
        } else if (key == "NUMBER OF ZONES") {
          net.zones = static_cast<std::size_t>(detail::parse_number(value, line, "zones"));
        } else if (key == "NUMBER OF NODES") {
          net.nodes = static_cast<std::size_t>(detail::parse_number(value, line, "nodes"));
        } else if (key == "FIRST THRU NODE") {
          net.first_thru_node = static_cast<int>(detail::parse_number(value, line, "first thru node"));
        } else if (key == "NUMBER OF LINKS") {
          declared_links = static_cast<std::size_t>(detail::parse_number(value, line, "links"));
          have_declared = true;
        }
        continue;
      }
      if (s.empty()) continue;
      // No metadata block: treat the file as data only.
      in_header = false;
    }
    if (s.empty() || s[0] == '~' || s[0] == '<') continue;
    auto semi = s.find(';');
    if (semi != std::string::npos) s = s.substr(0, semi);
    std::istringstream ls(s);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() < 5) throw ParseError(line, "link line needs at least 5 columns");
    Link l;
    l.from = static_cast<int>(detail::parse_number(tok[0], line, "init node"));
    l.to = static_cast<int>(detail::parse_number(tok[1], line, "term node"));
    l.capacity = detail::parse_number(tok[2], line, "capacity");
    l.length = detail::parse_number(tok[3], line, "length");
    l.free_flow_time = detail::parse_number(tok[4], line, "free flow time");
    if (tok.size() > 5) l.b = detail::parse_number(tok[5], line, "b");
    if (tok.size() > 6) l.power = detail::parse_number(tok[6], line, "power");
    if (tok.size() > 7) l.speed = detail::parse_number(tok[7], line, "speed");
    if (tok.size() > 8) l.toll = detail::parse_number(tok[8], line, "toll");
    if (tok.size() > 9) l.type = static_cast<int>(detail::parse_number(tok[9], line, "type"));
    if (l.from < 1 || l.to < 1) throw ParseError(line, "node ids must be >= 1");
    if (!(l.capacity > 0.0)) throw ParseError(line, "capacity must be positive");
    if (!(l.free_flow_time > 0.0)) throw ParseError(line, "free flow time must be positive");
    max_node = std::max({max_node, l.from, l.to});
    net.links.push_back(l);
  }
  if (net.links.empty()) throw ParseError(line, "no links");
  if (have_declared && declared_links != net.links.size()) {
    throw ParseError(line, "header declares " + std::to_string(declared_links) + " links, found " +
                               std::to_string(net.links.size()));
  }
  if (net.nodes == 0) net.nodes = static_cast<std::size_t>(max_node);
  if (static_cast<std::size_t>(max_node) > net.nodes) {
    throw ParseError(line, "link refers to a node beyond the declared node count");
  }
  return net;
}

inline std::vector<AgentStub> parse_tntp_trips(std::istream& in, std::size_t* zones_out = nullptr) {
  std::vector<AgentStub> out;
  std::string raw;
  std::size_t line = 0;
  int origin = -1;
  std::size_t zones = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = detail::trim(raw);
    std::string key, value;
    if (detail::metadata(s, key, value)) {
      if (key == "NUMBER OF ZONES") {
        zones = static_cast<std::size_t>(detail::parse_number(value, line, "zones"));
      }
      continue;
    }
    if (s.empty() || s[0] == '~') continue;
    if (s.rfind("Origin", 0) == 0) {
      origin = static_cast<int>(detail::parse_number(detail::trim(s.substr(6)), line, "origin"));
      continue;
    }
    if (origin < 0) throw ParseError(line, "destination entries before any 'Origin' line");
    std::istringstream ls(s);
    std::string entry;
    while (std::getline(ls, entry, ';')) {
      entry = detail::trim(entry);
      if (entry.empty()) continue;
      auto colon = entry.find(':');
      if (colon == std::string::npos) throw ParseError(line, "expected 'destination : demand'");
      int dest = static_cast<int>(
          detail::parse_number(detail::trim(entry.substr(0, colon)), line, "destination"));
      double d = detail::parse_number(detail::trim(entry.substr(colon + 1)), line, "demand");
      if (d < 0.0) throw ParseError(line, "negative demand");
      if (d > 0.0 && dest != origin) out.push_back({origin, dest, d});
    }
  }
  if (zones_out) *zones_out = zones;
  return out;
}

inline TntpData load_tntp(const std::string& net_path, const std::string& trips_path) {
  std::ifstream nf(net_path);
  if (!nf) throw InputError("cannot open network file " + net_path);
  std::ifstream tf(trips_path);
  if (!tf) throw InputError("cannot open trips file " + trips_path);
  TntpData d;
  d.network = parse_tntp_net(nf);
  d.agents = parse_tntp_trips(tf);
  for (const auto& a : d.agents) {
    if (a.origin < 1 || a.destination < 1 || static_cast<std::size_t>(a.origin) > d.network.nodes ||
        static_cast<std::size_t>(a.destination) > d.network.nodes) {
      throw InputError("trips file refers to a node outside the network");
    }
  }
  return d;
}

inline void write_tntp_net(std::ostream& os, const Network& net) {
  os << "<NUMBER OF ZONES> " << net.zones << "\n<NUMBER OF NODES> " << net.nodes
     << "\n<FIRST THRU NODE> " << net.first_thru_node << "\n<NUMBER OF LINKS> " << net.links.size()
     << "\n<END OF METADATA>\n\n\n"
     << "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n";
  for (const auto& l : net.links) {
    os << '\t' << l.from << '\t' << l.to << '\t' << format_double(l.capacity) << '\t'
       << format_double(l.length) << '\t' << format_double(l.free_flow_time) << '\t'
       << format_double(l.b) << '\t' << format_double(l.power) << '\t' << format_double(l.speed)
       << '\t' << format_double(l.toll) << '\t' << l.type << "\t;\n";
  }
}

inline void write_tntp_trips(std::ostream& os, const std::vector<AgentStub>& agents, std::size_t zones) {
  double total = 0.0;
  for (const auto& a : agents) total += a.demand;
  os << "<NUMBER OF ZONES> " << zones << "\n<TOTAL OD FLOW> " << format_double(total)
     << "\n<END OF METADATA>\n\n";
  int current = -1;
  for (const auto& a : agents) {
    if (a.origin != current) {
      current = a.origin;
      os << "\nOrigin \t" << current << "\n";
    }
    os << "    " << a.destination << " : " << format_double(a.demand) << ";\n";
  }
}

// ---------------------------------------------------------------------------
// Routes

struct Route {
  std::vector<int> nodes;
  std::vector<std::size_t> links;
  double cost = 0.0;  // free-flow time, summed along the path in order
};

struct RouteSet {
  std::vector<Route> routes;
  bool incomplete = false;  // fewer than K simple paths exist
};

namespace detail {

inline double path_cost(const Network& net, const std::vector<std::size_t>& links) {
  double c = 0.0;
  for (std::size_t l : links) c += net.links[l].free_flow_time;
  return c;
}

// (cost, node sequence) ordering.
inline bool route_less(const Route& a, const Route& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.nodes < b.nodes;
}

// Shortest path with lexicographic tie-breaking on the node sequence, avoiding
// banned links and nodes.
inline std::optional<Route> dijkstra_lex(const Network& net,
                                         const std::vector<std::vector<std::size_t>>& out,
                                         int source, int target,
                                         const std::vector<char>& banned_link,
                                         const std::vector<char>& banned_node) {
  struct Label {
    double cost;
    std::vector<int> nodes;
    std::vector<std::size_t> links;
  };
  auto worse = [](const Label& a, const Label& b) {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.nodes > b.nodes;
  };
  std::priority_queue<Label, std::vector<Label>, decltype(worse)> pq(worse);
  std::vector<char> done(net.nodes + 1, 0);
  pq.push({0.0, {source}, {}});
  while (!pq.empty()) {
    Label cur = pq.top();
    pq.pop();
    int u = cur.nodes.back();
    if (done[static_cast<std::size_t>(u)]) continue;
    done[static_cast<std::size_t>(u)] = 1;
    if (u == target) return Route{cur.nodes, cur.links, cur.cost};
    for (std::size_t l : out[static_cast<std::size_t>(u)]) {
      if (banned_link[l]) continue;
      int v = net.links[l].to;
      if (done[static_cast<std::size_t>(v)] || banned_node[static_cast<std::size_t>(v)]) continue;
      Label next{cur.cost + net.links[l].free_flow_time, cur.nodes, cur.links};
      next.nodes.push_back(v);
      next.links.push_back(l);
      pq.push(std::move(next));
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Yen's K loopless shortest paths by free-flow time.
inline RouteSet k_shortest_routes(const Network& net, int origin, int destination, std::size_t K) {
  if (origin == destination) throw InputError("k_shortest_routes: origin equals destination");
  if (origin < 1 || destination < 1 || static_cast<std::size_t>(origin) > net.nodes ||
      static_cast<std::size_t>(destination) > net.nodes) {
    throw InputError("k_shortest_routes: node out of range");
  }
  if (K == 0) throw InputError("k_shortest_routes: K must be >= 1");
  std::vector<std::vector<std::size_t>> out(net.nodes + 1);
  for (std::size_t l = 0; l < net.links.size(); ++l) {
    out[static_cast<std::size_t>(net.links[l].from)].push_back(l);
  }
  std::vector<char> banned_link(net.links.size(), 0);
  std::vector<char> banned_node(net.nodes + 1, 0);

  RouteSet res;
  auto first = detail::dijkstra_lex(net, out, origin, destination, banned_link, banned_node);
  if (!first) throw InputError("k_shortest_routes: destination unreachable");
  first->cost = detail::path_cost(net, first->links);
  res.routes.push_back(*first);

  std::vector<Route> candidates;
  while (res.routes.size() < K) {
    const Route& prev = res.routes.back();
    for (std::size_t s = 0; s + 1 < prev.nodes.size(); ++s) {
      const int spur = prev.nodes[s];
      std::vector<int> root_nodes(prev.nodes.begin(), prev.nodes.begin() + static_cast<std::ptrdiff_t>(s) + 1);
      std::vector<std::size_t> root_links(prev.links.begin(), prev.links.begin() + static_cast<std::ptrdiff_t>(s));
      std::fill(banned_link.begin(), banned_link.end(), 0);
      std::fill(banned_node.begin(), banned_node.end(), 0);
      for (const Route& r : res.routes) {
        if (r.nodes.size() > s && std::equal(root_nodes.begin(), root_nodes.end(), r.nodes.begin())) {
          banned_link[r.links[s]] = 1;
        }
      }
      for (std::size_t k = 0; k < s; ++k) banned_node[static_cast<std::size_t>(root_nodes[k])] = 1;
      auto spur_path = detail::dijkstra_lex(net, out, spur, destination, banned_link, banned_node);
      if (!spur_path) continue;
      Route total;
      total.nodes = root_nodes;
      total.nodes.insert(total.nodes.end(), spur_path->nodes.begin() + 1, spur_path->nodes.end());
      total.links = root_links;
      total.links.insert(total.links.end(), spur_path->links.begin(), spur_path->links.end());
      total.cost = detail::path_cost(net, total.links);
      bool seen = false;
      for (const Route& r : candidates) seen = seen || r.links == total.links;
      for (const Route& r : res.routes) seen = seen || r.links == total.links;
      if (!seen) candidates.push_back(std::move(total));
    }
    if (candidates.empty()) {
      res.incomplete = true;
      break;
    }
    auto best = std::min_element(candidates.begin(), candidates.end(), detail::route_less);
    res.routes.push_back(*best);
    candidates.erase(best);
  }
  return res;
}

// ---------------------------------------------------------------------------
// BPR model

inline double bpr_traveltime(double free_flow, double load, double capacity) {
  if (!(capacity > 0.0)) throw InputError("bpr_traveltime: capacity must be positive");
  const double r = load / capacity;
  return free_flow * (1.0 + 0.15 * r * r * r * r);
}

// -sum_e own[e] * t_e(own[e] + others[e], z[e]) over the edges the agent uses.
inline double agent_reward(const Network& net, const Vector& own, const Vector& others, const Vector& z) {
  const std::size_t E = net.num_edges();
  if (own.size() != E || others.size() != E || z.size() != E) {
    throw InputError("agent_reward: vectors must have one entry per edge");
  }
  double r = 0.0;
  for (std::size_t e = 0; e < E; ++e) {
    if (own[e] != 0.0) r -= own[e] * bpr_traveltime(net.links[e].free_flow_time, own[e] + others[e], z[e]);
  }
  return r;
}

// 0.15 (x_e / z_e)^4 per edge.
inline Vector congestion_metric(const Vector& load, const Vector& z) {
  if (load.size() != z.size()) throw InputError("congestion_metric: size mismatch");
  Vector c(load.size());
  for (std::size_t e = 0; e < load.size(); ++e) {
    if (!(z[e] > 0.0)) throw InputError("congestion_metric: capacity must be positive");
    double r = load[e] / z[e];
    c[e] = 0.15 * r * r * r * r;
  }
  return c;
}

// |Z| capacity profiles with z[e] ~ U[1e-3 C_e, 1.2 C_e]; zeta uniform on them.
inline ContextDistribution context_sampler(const Network& net, std::size_t profiles, std::uint64_t seed) {
  if (profiles == 0) throw InputError("context_sampler: need at least one profile");
  Rng rng = derive_stream(seed, StreamKind::setup, 1);
  ContextDistribution zeta;
  for (std::size_t k = 0; k < profiles; ++k) {
    Vector z(net.num_edges());
    for (std::size_t e = 0; e < z.size(); ++e) {
      const double C = net.links[e].capacity;
      z[e] = uniform(rng, 1e-3 * C, 1.2 * C);
    }
    zeta.support.push_back(std::move(z));
  }
  return zeta;
}

// ---------------------------------------------------------------------------
// Agents and the game

struct RoutingAgent {
  int origin = 0;
  int destination = 0;
  double demand = 0.0;
  std::vector<Route> routes;
  bool incomplete_routes = false;
  std::vector<std::size_t> edges;               // E^i, sorted link ids
  std::vector<std::vector<std::size_t>> local;  // per route: positions in `edges`
};

inline std::vector<RoutingAgent> build_agents(const Network& net, const std::vector<AgentStub>& stubs,
                                              std::size_t K, double demand_multiplier = 1.0) {
  std::vector<RoutingAgent> agents;
  agents.reserve(stubs.size());
  // Agents sharing an O/D pair share routes.
  std::map<std::pair<int, int>, RouteSet> cache;
  for (const auto& s : stubs) {
    RoutingAgent a;
    a.origin = s.origin;
    a.destination = s.destination;
    a.demand = s.demand * demand_multiplier;
    auto key = std::make_pair(s.origin, s.destination);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, k_shortest_routes(net, s.origin, s.destination, K)).first;
    a.routes = it->second.routes;
    a.incomplete_routes = it->second.incomplete;
    std::set<std::size_t> edges;
    for (const auto& r : a.routes) edges.insert(r.links.begin(), r.links.end());
    a.edges.assign(edges.begin(), edges.end());
    for (const auto& r : a.routes) {
      std::vector<std::size_t> loc;
      for (std::size_t l : r.links) {
        loc.push_back(static_cast<std::size_t>(
            std::lower_bound(a.edges.begin(), a.edges.end(), l) - a.edges.begin()));
      }
      a.local.push_back(std::move(loc));
    }
    agents.push_back(std::move(a));
  }
  return agents;
}

struct RewardBounds {
  Vector lo;
  Vector hi;
  // Per agent, the `norm_quantile` quantile over the sample of the norms of
  // the learner inputs (x^i + x^{-i}) and (x^i + x^{-i}) / z restricted to
  // E^i (quantile 1: the largest norm seen).
  Vector load_norm;
  Vector ratio_norm;
};

namespace detail {

inline void accumulate_loads(const std::vector<RoutingAgent>& agents, std::span<const std::size_t> joint,
                             std::size_t E, Vector& load) {
  load.assign(E, 0.0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t l : agents[i].routes[joint[i]].links) load[l] += agents[i].demand;
  }
}

// Raw reward of agent i on route a, given total loads that include agent i
// on route `current`.
inline double raw_route_reward(const Network& net, const RoutingAgent& ag, std::size_t a,
                               std::size_t current, const Vector& load, const Vector& z) {
  const auto& cur = ag.routes[current].links;
  double r = 0.0;
  for (std::size_t l : ag.routes[a].links) {
    double x = load[l];
    if (a != current && std::find(cur.begin(), cur.end(), l) == cur.end()) x += ag.demand;
    r -= ag.demand * bpr_traveltime(net.links[l].free_flow_time, x, z[l]);
  }
  return r;
}

}  // namespace detail

// Per-agent raw reward range over `samples` random (context, joint route)
// draws. Throws DegenerateError for an agent whose reward never varies.
inline RewardBounds reward_scaler(const Network& net, const std::vector<RoutingAgent>& agents,
                                  const ContextDistribution& zeta, std::size_t samples, std::uint64_t seed,
                                  double norm_quantile = 1.0) {
  if (samples == 0) throw InputError("reward_scaler: samples must be >= 1");
  if (!(norm_quantile > 0.0 && norm_quantile <= 1.0)) throw InputError("reward_scaler: norm quantile must be in (0, 1]");
  const std::size_t N = agents.size();
  const std::size_t E = net.num_edges();
  RewardBounds b;
  b.lo.assign(N, std::numeric_limits<double>::infinity());
  b.hi.assign(N, -std::numeric_limits<double>::infinity());
  b.load_norm.assign(N, 0.0);
  b.ratio_norm.assign(N, 0.0);
  Rng rng = derive_stream(seed, StreamKind::setup, 2);
  const bool keep = norm_quantile < 1.0;
  std::vector<std::vector<float>> lns(keep ? N : 0), rns(keep ? N : 0);
  JointAction joint(N);
  Vector load;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector& z = zeta.support[uniform_index(rng, zeta.support.size())];
    for (std::size_t i = 0; i < N; ++i) joint[i] = uniform_index(rng, agents[i].routes.size());
    detail::accumulate_loads(agents, joint, E, load);
    for (std::size_t i = 0; i < N; ++i) {
      double r = detail::raw_route_reward(net, agents[i], joint[i], joint[i], load, z);
      b.lo[i] = std::min(b.lo[i], r);
      b.hi[i] = std::max(b.hi[i], r);
      double ln = 0.0, rn = 0.0;
      for (std::size_t l : agents[i].edges) {
        ln += load[l] * load[l];
        rn += (load[l] / z[l]) * (load[l] / z[l]);
      }
      b.load_norm[i] = std::max(b.load_norm[i], std::sqrt(ln));
      b.ratio_norm[i] = std::max(b.ratio_norm[i], std::sqrt(rn));
      if (keep) {
        lns[i].push_back(static_cast<float>(std::sqrt(ln)));
        rns[i].push_back(static_cast<float>(std::sqrt(rn)));
      }
    }
  }
  if (keep) {
    const std::size_t k = std::min(samples - 1, static_cast<std::size_t>(norm_quantile * static_cast<double>(samples)));
    for (std::size_t i = 0; i < N; ++i) {
      std::nth_element(lns[i].begin(), lns[i].begin() + static_cast<std::ptrdiff_t>(k), lns[i].end());
      std::nth_element(rns[i].begin(), rns[i].begin() + static_cast<std::ptrdiff_t>(k), rns[i].end());
      b.load_norm[i] = lns[i][k];
      b.ratio_norm[i] = rns[i][k];
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!(b.hi[i] > b.lo[i])) {
      throw DegenerateError("reward_scaler: agent " + std::to_string(i) + " (" +
                            std::to_string(agents[i].origin) + "->" + std::to_string(agents[i].destination) +
                            ") has a constant reward over the sample");
    }
  }
  return b;
}

enum class RewardScale { linear, log };

struct RoutingOptions {
  std::size_t routes = 5;
  double demand_multiplier = 1.0;
  std::size_t profiles = 10;
  std::size_t scaler_samples = 10000;
  double noise = 0.001;
  // Keep only this many agents (evenly spaced in file order); 0 keeps all.
  std::size_t max_agents = 0;
  // linear: (raw - lo) / (hi - lo). log: the same on -log(-raw), i.e. on log
  // travel time, which keeps typical outcomes apart when a few sampled
  // contexts produce extreme travel times.
  RewardScale reward_scale = RewardScale::linear;
  double norm_quantile = 1.0;
  std::uint64_t seed = 0;
};

class RoutingGame : public ContextualGame {
 public:
  RoutingGame(Network net, std::vector<AgentStub> stubs, RoutingOptions opt)
      : net_(std::move(net)), opt_(opt), clamps_(std::make_shared<std::atomic<std::size_t>>(0)) {
    if (opt_.max_agents > 0 && opt_.max_agents < stubs.size()) {
      std::vector<AgentStub> kept;
      const std::size_t n = stubs.size();
      for (std::size_t k = 0; k < opt_.max_agents; ++k) kept.push_back(stubs[k * n / opt_.max_agents]);
      stubs = std::move(kept);
    }
    stubs_ = stubs;
    agents_ = build_agents(net_, stubs, opt_.routes, opt_.demand_multiplier);
    if (agents_.empty()) throw InputError("routing game: no agents");
    zeta_ = context_sampler(net_, opt_.profiles, opt_.seed);
    bounds_ = reward_scaler(net_, agents_, zeta_, opt_.scaler_samples, opt_.seed, opt_.norm_quantile);
  }

  std::size_t num_players() const override { return agents_.size(); }
  std::size_t num_actions(std::size_t i) const override { return agents_.at(i).routes.size(); }
  double noise_sigma() const override { return opt_.noise; }

  const Network& network() const { return net_; }
  const std::vector<RoutingAgent>& agents() const { return agents_; }
  const ContextDistribution& zeta() const { return zeta_; }
  const RewardBounds& bounds() const { return bounds_; }
  const RoutingOptions& options() const { return opt_; }
  std::size_t clamp_count() const { return clamps_->load(std::memory_order_relaxed); }

  Vector loads(std::span<const std::size_t> joint) const {
    check_joint(joint);
    Vector load;
    detail::accumulate_loads(agents_, joint, net_.num_edges(), load);
    return load;
  }

  double scale(std::size_t i, double raw) const {
    double s;
    if (opt_.reward_scale == RewardScale::log) {
      const double t = -std::log(-std::min(raw, -1e-300));
      const double lo = -std::log(-bounds_.lo[i]), hi = -std::log(-bounds_.hi[i]);
      s = (t - lo) / (hi - lo);
    } else {
      s = (raw - bounds_.lo[i]) / (bounds_.hi[i] - bounds_.lo[i]);
    }
    if (s < 0.0 || s > 1.0) {
      clamps_->fetch_add(1, std::memory_order_relaxed);
      s = std::clamp(s, 0.0, 1.0);
    }
    return s;
  }

  void raw_rewards(std::span<const std::size_t> joint, const Vector& z, Vector& out) const {
    check_context(z);
    Vector load = loads(joint);
    out.resize(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      out[i] = detail::raw_route_reward(net_, agents_[i], joint[i], joint[i], load, z);
    }
  }

  void rewards(std::span<const std::size_t> joint, const Vector& z, Vector& out) const override {
    raw_rewards(joint, z, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale(i, out[i]);
  }

  void deviation_rewards(std::span<const std::size_t> joint, const Vector& z,
                         std::vector<Vector>& out) const override {
    check_context(z);
    Vector load = loads(joint);
    out.resize(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& ag = agents_[i];
      out[i].resize(ag.routes.size());
      for (std::size_t a = 0; a < ag.routes.size(); ++a) {
        out[i][a] = scale(i, detail::raw_route_reward(net_, ag, a, joint[i], load, z));
      }
    }
  }

  // Route incidence on E^i, scaled by demand.
  std::vector<Vector> action_features(std::size_t i) const override {
    const auto& ag = agents_.at(i);
    std::vector<Vector> f;
    for (const auto& loc : ag.local) {
      Vector x(ag.edges.size(), 0.0);
      for (std::size_t p : loc) x[p] = ag.demand;
      f.push_back(std::move(x));
    }
    return f;
  }

  Vector observed_context(std::size_t i, const Vector& z) const override {
    const auto& ag = agents_.at(i);
    Vector o(ag.edges.size());
    for (std::size_t p = 0; p < ag.edges.size(); ++p) o[p] = z[ag.edges[p]];
    return o;
  }

  // Opponents' aggregate load sum_{j != i} x^j on E^i.
  void opponent_features(std::span<const std::size_t> joint, std::vector<Vector>& out) const override {
    Vector load = loads(joint);
    out.resize(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const auto& ag = agents_[i];
      Vector& o = out[i];
      o.resize(ag.edges.size());
      for (std::size_t p = 0; p < ag.edges.size(); ++p) o[p] = load[ag.edges[p]];
      for (std::size_t p : ag.local[joint[i]]) o[p] -= ag.demand;
    }
  }

  double average_congestion(std::span<const std::size_t> joint, const Vector& z) const {
    Vector c = congestion_metric(loads(joint), z);
    double s = 0.0;
    for (double v : c) s += v;
    return s / static_cast<double>(c.size());
  }

  // Largest route-vector norm of agent i (scale for the own-action kernel).
  double own_scale(std::size_t i) const {
    const auto& ag = agents_.at(i);
    std::size_t longest = 0;
    for (const auto& r : ag.routes) longest = std::max(longest, r.links.size());
    return ag.demand * std::sqrt(static_cast<double>(longest));
  }

  nlohmann::json describe() const override {
    return {{"type", "routing"},
            {"routes", opt_.routes},
            {"demand_multiplier", opt_.demand_multiplier},
            {"profiles", opt_.profiles},
            {"scaler_samples", opt_.scaler_samples},
            {"noise", opt_.noise},
            {"max_agents", opt_.max_agents},
            {"reward_scale", opt_.reward_scale == RewardScale::log ? "log" : "linear"},
            {"norm_quantile", opt_.norm_quantile},
            {"seed", opt_.seed}};
  }

 private:
  void check_context(const Vector& z) const {
    if (z.size() != net_.num_edges()) throw InputError("routing: context must have one entry per edge");
  }

  Network net_;
  RoutingOptions opt_;
  std::vector<AgentStub> stubs_;
  std::vector<RoutingAgent> agents_;
  ContextDistribution zeta_;
  RewardBounds bounds_;
  std::shared_ptr<std::atomic<std::size_t>> clamps_;
};

}  // namespace cgame
