#pragma once

// Post-hoc analysis of a played trace with the true reward functions:
// contextual regret, empirical policies and equilibrium gaps, optimal
// contextual welfare, smoothness certificates and the efficiency bound.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cgame/errors.hpp"
#include "cgame/game.hpp"
#include "cgame/numeric.hpp"

namespace cgame {

// dev[t][i][a] = r^i(a, a_t^{-i}, z_t)
using DeviationTable = std::vector<std::vector<Vector>>;

inline DeviationTable deviation_table(const ContextualGame& game, const GameTrace& trace) {
  DeviationTable dev(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) {
    game.deviation_rewards(trace.rows[t].joint, trace.rows[t].context, dev[t]);
  }
  return dev;
}

// Distinct contexts of a trace in order of first appearance.
struct ContextGroups {
  std::vector<Vector> contexts;
  std::vector<std::size_t> group_of_round;
  std::vector<std::size_t> visits;
};

inline ContextGroups group_contexts(const GameTrace& trace) {
  ContextGroups g;
  std::map<BitKey, std::size_t> index;
  for (const auto& row : trace.rows) {
    auto [it, inserted] = index.emplace(bit_key(row.context), g.contexts.size());
    if (inserted) {
      g.contexts.push_back(row.context);
      g.visits.push_back(0);
    }
    g.group_of_round.push_back(it->second);
    ++g.visits[it->second];
  }
  return g;
}

struct RegretResult {
  double regret = 0.0;      // best policy value minus realized value
  double best_value = 0.0;  // sum_t r(pi*(z_t), a_t^{-i}, z_t)
  double realized = 0.0;    // sum_t r(a_t, z_t)
  std::vector<Vector> contexts;
  std::vector<std::size_t> policy;  // pi*(contexts[k]), ties to the lowest index
};

// Contextual regret. The best policy decomposes per observed context: for each
// z, the best fixed action against the rounds where z occurred.
inline RegretResult contextual_regret(const GameTrace& trace, std::size_t player,
                                      const DeviationTable& dev) {
  if (player >= trace.num_players) throw InputError("contextual_regret: player out of range");
  if (dev.size() != trace.size()) throw InputError("contextual_regret: deviation table mismatch");
  ContextGroups groups = group_contexts(trace);
  const std::size_t K = trace.num_actions.at(player);
  std::vector<Vector> sums(groups.contexts.size(), Vector(K, 0.0));
  RegretResult res;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const Vector& d = dev[t].at(player);
    if (d.size() != K) throw InputError("contextual_regret: oracle and trace disagree on K");
    Vector& s = sums[groups.group_of_round[t]];
    for (std::size_t a = 0; a < K; ++a) s[a] += d[a];
    res.realized += trace.rows[t].rewards[player];
  }
  for (const Vector& s : sums) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < K; ++a) {
      if (s[a] > s[best]) best = a;
    }
    res.policy.push_back(best);
    res.best_value += s[best];
  }
  res.contexts = std::move(groups.contexts);
  res.regret = res.best_value - res.realized;
  return res;
}

inline RegretResult contextual_regret(const ContextualGame& game, const GameTrace& trace,
                                      std::size_t player) {
  return contextual_regret(trace, player, deviation_table(game, trace));
}

// ---------------------------------------------------------------------------
// Empirical policy rho_T

struct EmpiricalPolicy {
  struct Entry {
    Vector context;
    std::size_t visits = 0;
    std::map<JointAction, std::size_t> counts;
  };

  std::vector<std::size_t> num_actions;
  std::size_t rounds = 0;
  std::vector<Entry> entries;
  std::map<BitKey, std::size_t> index;

  const Entry* find(const Vector& z) const {
    auto it = index.find(bit_key(z));
    return it == index.end() ? nullptr : &entries[it->second];
  }

  // rho_T(z) as (joint action, probability) pairs; uniform over all joint
  // actions for contexts never observed.
  std::vector<std::pair<JointAction, double>> at(const Vector& z, double guard = 1e6) const {
    std::vector<std::pair<JointAction, double>> out;
    if (const Entry* e = find(z)) {
      for (const auto& [a, c] : e->counts) {
        out.emplace_back(a, static_cast<double>(c) / static_cast<double>(e->visits));
      }
      return out;
    }
    double total = 1.0;
    for (std::size_t k : num_actions) total *= static_cast<double>(k);
    if (total > guard) throw SizeError("empirical_policy: uniform default too large to enumerate");
    const auto n = static_cast<std::size_t>(total);
    JointAction a(num_actions.size(), 0);
    for (std::size_t idx = 0; idx < n; ++idx) {
      std::size_t r = idx;
      for (std::size_t i = num_actions.size(); i-- > 0;) {
        a[i] = r % num_actions[i];
        r /= num_actions[i];
      }
      out.emplace_back(a, 1.0 / total);
    }
    return out;
  }
};

inline EmpiricalPolicy empirical_policy(const GameTrace& trace) {
  if (trace.size() == 0) throw InputError("empirical_policy: empty trace");
  EmpiricalPolicy p;
  p.num_actions = trace.num_actions;
  p.rounds = trace.size();
  for (const auto& row : trace.rows) {
    auto [it, inserted] = p.index.emplace(bit_key(row.context), p.entries.size());
    if (inserted) p.entries.push_back({row.context, 0, {}});
    auto& e = p.entries[it->second];
    ++e.visits;
    ++e.counts[row.joint];
  }
  return p;
}

namespace detail {

// Per player: max_a E_rho[r^i(a, a^{-i}, z)] - E_rho[r^i(a, z)], weighted by
// `weight`, given rho as counts or probabilities.
template <class Dist>
void add_deviation_gains(const ContextualGame& game, const Vector& z, const Dist& rho,
                         double weight, Vector& gains) {
  const std::size_t N = game.num_players();
  std::vector<Vector> dev_sum(N);
  Vector played(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) dev_sum[i].assign(game.num_actions(i), 0.0);
  std::vector<Vector> dev;
  Vector r;
  for (const auto& [joint, mass] : rho) {
    const double m = static_cast<double>(mass);
    game.deviation_rewards(joint, z, dev);
    game.rewards(joint, z, r);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t a = 0; a < dev[i].size(); ++a) dev_sum[i][a] += m * dev[i][a];
      played[i] += m * r[i];
    }
  }
  for (std::size_t i = 0; i < N; ++i) {
    double best = *std::max_element(dev_sum[i].begin(), dev_sum[i].end());
    gains[i] += weight * (best - played[i]);
  }
}

}  // namespace detail

struct GapResult {
  double epsilon = 0.0;  // max over players
  Vector per_player;
};

// Smallest eps for which rho_T is an eps-c-CCE of the played game:
// max_i (1/T) sum_z T_z [max_a E_rho(z) r^i(a, .) - E_rho(z) r^i].
inline GapResult cce_gap(const ContextualGame& game, const GameTrace& trace) {
  EmpiricalPolicy rho = empirical_policy(trace);
  GapResult g;
  g.per_player.assign(game.num_players(), 0.0);
  for (const auto& e : rho.entries) {
    // counts are T_z * rho(z)
    detail::add_deviation_gains(game, e.context, e.counts, 1.0, g.per_player);
  }
  for (double& v : g.per_player) v /= static_cast<double>(rho.rounds);
  g.epsilon = *std::max_element(g.per_player.begin(), g.per_player.end());
  return g;
}

// Same gap with the outer expectation over a supplied finite law zeta.
inline GapResult c_zeta_cce_gap(const EmpiricalPolicy& rho, const ContextualGame& game,
                                const ContextDistribution& zeta) {
  if (zeta.support.empty()) throw InputError("c_zeta_cce_gap: empty support");
  if (!zeta.weights.empty()) {
    if (zeta.weights.size() != zeta.support.size()) {
      throw InputError("c_zeta_cce_gap: weights and support differ in length");
    }
    double s = 0.0;
    for (double w : zeta.weights) {
      if (!(w >= 0.0)) throw InputError("c_zeta_cce_gap: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InputError("c_zeta_cce_gap: weights must sum to 1");
  }
  std::map<BitKey, std::size_t> support;
  for (std::size_t k = 0; k < zeta.support.size(); ++k) support.emplace(bit_key(zeta.support[k]), k);
  for (const auto& e : rho.entries) {
    if (!support.count(bit_key(e.context))) {
      throw InputError("c_zeta_cce_gap: an observed context is outside the support of zeta");
    }
  }
  GapResult g;
  g.per_player.assign(game.num_players(), 0.0);
  for (std::size_t k = 0; k < zeta.support.size(); ++k) {
    detail::add_deviation_gains(game, zeta.support[k], rho.at(zeta.support[k]), zeta.weight(k),
                                g.per_player);
  }
  g.epsilon = *std::max_element(g.per_player.begin(), g.per_player.end());
  return g;
}

// Informational high-probability bound on the c-zeta-CCE gap, as printed:
// 2 sqrt(log(|Z| |A|) / 2 + log(2/delta) / (2T)) + max_i R^i / T.
inline double c_zeta_cce_bound(std::size_t num_contexts, double num_joint_actions, double delta,
                               std::size_t T, double max_avg_regret) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("c_zeta_cce_bound: delta must be in (0,1)");
  if (T == 0) throw InputError("c_zeta_cce_bound: T must be positive");
  const double lz = std::log(static_cast<double>(num_contexts) * num_joint_actions);
  return 2.0 * std::sqrt(lz / 2.0 + std::log(2.0 / delta) / (2.0 * static_cast<double>(T))) +
         max_avg_regret;
}

// ---------------------------------------------------------------------------
// Welfare

inline double welfare(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v;
  return s;
}

struct WelfareOptimum {
  double value = 0.0;  // (1/T) sum_z T_z max_a Gamma(a, z)
  std::vector<Vector> contexts;
  std::vector<JointAction> best;  // per distinct context, first maximizer
  std::vector<double> best_welfare;
};

inline WelfareOptimum optimal_contextual_welfare(const ContextualGame& game,
                                                 const std::vector<Vector>& round_contexts,
                                                 double guard = 1e6) {
  if (round_contexts.empty()) throw InputError("optimal_contextual_welfare: no rounds");
  JointSpace space(game, guard);
  std::map<BitKey, std::size_t> index;
  std::vector<std::size_t> visits;
  WelfareOptimum out;
  for (const auto& z : round_contexts) {
    auto [it, inserted] = index.emplace(bit_key(z), out.contexts.size());
    if (inserted) {
      out.contexts.push_back(z);
      visits.push_back(0);
    }
    ++visits[it->second];
  }
  Vector r;
  double total = 0.0;
  for (std::size_t k = 0; k < out.contexts.size(); ++k) {
    double best = -std::numeric_limits<double>::infinity();
    JointAction best_a;
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      JointAction a = space.decode(idx);
      game.rewards(a, out.contexts[k], r);
      double w = welfare(r);
      if (w > best) {
        best = w;
        best_a = a;
      }
    }
    out.best.push_back(best_a);
    out.best_welfare.push_back(best);
    total += static_cast<double>(visits[k]) * best;
  }
  out.value = total / static_cast<double>(round_contexts.size());
  return out;
}

inline std::vector<Vector> trace_contexts(const GameTrace& trace) {
  std::vector<Vector> z;
  z.reserve(trace.size());
  for (const auto& row : trace.rows) z.push_back(row.context);
  return z;
}

inline double average_welfare(const GameTrace& trace) {
  if (trace.size() == 0) throw InputError("average_welfare: empty trace");
  double s = 0.0;
  for (const auto& row : trace.rows) s += welfare(row.rewards);
  return s / static_cast<double>(trace.size());
}

// ---------------------------------------------------------------------------
// Smoothness: sum_i r^i(a2^i, a1^{-i}, z) >= lambda Gamma(a2, z) - mu Gamma(a1, z)
// for every pair of outcomes (a1, a2).

struct SmoothnessWitness {
  JointAction a1;
  JointAction a2;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct SmoothnessCheck {
  bool ok = true;
  std::optional<SmoothnessWitness> witness;
};

namespace detail {

struct OutcomeTables {
  JointSpace space;
  std::vector<JointAction> joints;
  Vector gamma;                           // Gamma(a)
  std::vector<std::vector<Vector>> dev;   // dev[a1][i][b] = r^i(b, a1^{-i})
};

inline OutcomeTables outcome_tables(const ContextualGame& game, const Vector& z, double guard) {
  OutcomeTables t{JointSpace(game, guard), {}, {}, {}};
  const std::size_t n = t.space.size();
  t.joints.reserve(n);
  t.gamma.resize(n);
  t.dev.resize(n);
  Vector r;
  for (std::size_t idx = 0; idx < n; ++idx) {
    t.joints.push_back(t.space.decode(idx));
    game.rewards(t.joints.back(), z, r);
    t.gamma[idx] = welfare(r);
    game.deviation_rewards(t.joints.back(), z, t.dev[idx]);
  }
  return t;
}

inline double mixed_sum(const OutcomeTables& t, std::size_t a1, std::size_t a2) {
  const JointAction& b = t.joints[a2];
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += t.dev[a1][i][b[i]];
  return s;
}

}  // namespace detail

// Enumerates |A|^2 pairs, so the guard is on |A| (default 10^4). Comparisons
// allow 1e-12 of rounding.
inline SmoothnessCheck smoothness_verify(const ContextualGame& game, const Vector& z, double lambda,
                                         double mu, double guard = 1e4) {
  detail::OutcomeTables t = detail::outcome_tables(game, z, guard);
  const std::size_t n = t.space.size();
  for (std::size_t a1 = 0; a1 < n; ++a1) {
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      double lhs = detail::mixed_sum(t, a1, a2);
      double rhs = lambda * t.gamma[a2] - mu * t.gamma[a1];
      if (lhs < rhs - 1e-12) return {false, SmoothnessWitness{t.joints[a1], t.joints[a2], lhs, rhs}};
    }
  }
  return {};
}

// Largest lambda for which the game is (lambda, mu)-smooth at z. Pairs with
// Gamma(a2) = 0 do not constrain lambda; if one of them fails for every lambda
// the result is -infinity.
inline double max_smoothness_lambda(const ContextualGame& game, const Vector& z, double mu,
                                    double guard = 1e4) {
  detail::OutcomeTables t = detail::outcome_tables(game, z, guard);
  const std::size_t n = t.space.size();
  double lambda = std::numeric_limits<double>::infinity();
  for (std::size_t a1 = 0; a1 < n; ++a1) {
    for (std::size_t a2 = 0; a2 < n; ++a2) {
      double num = detail::mixed_sum(t, a1, a2) + mu * t.gamma[a1];
      if (t.gamma[a2] > 0.0) {
        lambda = std::min(lambda, num / t.gamma[a2]);
      } else if (num < -1e-12) {
        return -std::numeric_limits<double>::infinity();
      }
    }
  }
  return lambda;
}

struct SmoothnessCertificate {
  struct Entry {
    Vector context;
    double lambda = 0.0;
    double mu = 0.0;
  };
  std::vector<Entry> entries;

  const Entry* find(const Vector& z) const {
    for (const auto& e : entries) {
      if (bitwise_equal(e.context, z)) return &e;
    }
    return nullptr;
  }

  // (lambda_bar, mu_bar) over the contexts of the trace: as stated, the max of
  // lambda and the min of mu; `conservative` takes min lambda and max mu.
  std::pair<double, double> aggregate(const GameTrace& trace, bool conservative = false) const {
    if (trace.size() == 0) throw InputError("certificate: empty trace");
    double lam = conservative ? std::numeric_limits<double>::infinity()
                              : -std::numeric_limits<double>::infinity();
    double mu = conservative ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::infinity();
    for (const auto& row : trace.rows) {
      const Entry* e = find(row.context);
      if (!e) throw InputError("certificate does not cover an observed context");
      if (conservative) {
        lam = std::min(lam, e->lambda);
        mu = std::max(mu, e->mu);
      } else {
        lam = std::max(lam, e->lambda);
        mu = std::min(mu, e->mu);
      }
    }
    return {lam, mu};
  }
};

// Verifies every entry exhaustively; throws InputError naming the first
// failing context.
inline void verify_certificate(const ContextualGame& game, const SmoothnessCertificate& cert) {
  for (const auto& e : cert.entries) {
    if (!smoothness_verify(game, e.context, e.lambda, e.mu).ok) {
      throw InputError("certificate entry fails the smoothness check");
    }
  }
}

struct EfficiencyBound {
  double realized = 0.0;  // (1/T) sum_t Gamma(a_t, z_t)
  double opt = 0.0;
  double lambda_bar = 0.0;
  double mu_bar = 0.0;
  double lower_bound = 0.0;
  bool holds = false;
};

// realized >= lambda_bar / (1 + mu_bar) OPT - sum_i R^i / (T (1 + mu_bar))
inline EfficiencyBound efficiency_bound(const ContextualGame& game, const GameTrace& trace,
                                        const SmoothnessCertificate& cert,
                                        std::span<const double> regrets, bool conservative = false) {
  if (regrets.size() != game.num_players()) throw InputError("efficiency_bound: one regret per player");
  EfficiencyBound b;
  std::tie(b.lambda_bar, b.mu_bar) = cert.aggregate(trace, conservative);
  b.realized = average_welfare(trace);
  b.opt = optimal_contextual_welfare(game, trace_contexts(trace)).value;
  double total_regret = 0.0;
  for (double r : regrets) total_regret += r;
  const double T = static_cast<double>(trace.size());
  b.lower_bound = b.lambda_bar / (1.0 + b.mu_bar) * b.opt - total_regret / (T * (1.0 + b.mu_bar));
  b.holds = b.realized >= b.lower_bound - 1e-12;
  return b;
}

// ---------------------------------------------------------------------------
// Report

struct ReportOptions {
  double delta = 0.1;  // for the informational c-zeta-CCE bound
  std::optional<ContextDistribution> zeta;
  double welfare_guard = 1e6;
};

inline nlohmann::json analysis_report(const ContextualGame& game, const GameTrace& trace,
                                      const ReportOptions& opt = {}) {
  if (trace.size() == 0) throw InputError("analysis: trace has no rounds");
  if (trace.num_players != game.num_players()) throw InputError("analysis: trace and game disagree on N");
  for (std::size_t i = 0; i < trace.num_players; ++i) {
    if (trace.num_actions.at(i) != game.num_actions(i)) {
      throw InputError("analysis: trace and game disagree on action counts");
    }
  }
  const double T = static_cast<double>(trace.size());
  DeviationTable dev = deviation_table(game, trace);
  nlohmann::json j;
  j["rounds"] = trace.size();
  j["players"] = trace.num_players;
  j["replay_matches"] = replay_matches(game, trace);
  Vector regrets;
  double max_avg = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.num_players; ++i) {
    RegretResult r = contextual_regret(trace, i, dev);
    regrets.push_back(r.regret);
    max_avg = std::max(max_avg, r.regret / T);
  }
  j["regret"] = regrets;
  j["max_average_regret"] = max_avg;
  double sum_regret = 0.0;
  for (double r : regrets) sum_regret += r;
  j["mean_regret"] = sum_regret / static_cast<double>(regrets.size());

  ContextGroups groups = group_contexts(trace);
  j["distinct_contexts"] = groups.contexts.size();

  try {
    GapResult gap = cce_gap(game, trace);
    j["cce_gap"] = gap.epsilon;
    j["cce_gap_matches_regret"] = std::abs(gap.epsilon - max_avg) <= 1e-9;
  } catch (const SizeError& e) {
    j["cce_gap"] = nullptr;
    j["cce_gap_skipped"] = e.what();
  }

  double realized = average_welfare(trace);
  j["average_welfare"] = realized;
  try {
    WelfareOptimum opt_w = optimal_contextual_welfare(game, trace_contexts(trace), opt.welfare_guard);
    j["optimal_welfare"] = opt_w.value;
  } catch (const SizeError& e) {
    j["optimal_welfare"] = nullptr;
    j["optimal_welfare_skipped"] = e.what();
  }

  if (opt.zeta) {
    try {
      GapResult zg = c_zeta_cce_gap(empirical_policy(trace), game, *opt.zeta);
      double joint = 1.0;
      for (std::size_t k : trace.num_actions) joint *= static_cast<double>(k);
      j["c_zeta_cce_gap"] = zg.epsilon;
      j["c_zeta_cce_bound"] = c_zeta_cce_bound(opt.zeta->support.size(), joint, opt.delta,
                                               trace.size(), max_avg);
      j["c_zeta_cce_bound_note"] =
          "first term printed as 2*sqrt(log(|Z||A|)/2 + log(2/delta)/(2T)); it does not vanish in T";
    } catch (const Error& e) {
      j["c_zeta_cce_gap"] = nullptr;
      j["c_zeta_cce_skipped"] = e.what();
    }
  }
  return j;
}

}  // namespace cgame
