#pragma once

// Multiplicative weights over K actions with full-information scores:
// p_t[a] is proportional to exp(eta_t * sum_{tau<t} g_tau(a)).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "cgame/errors.hpp"
#include "cgame/numeric.hpp"

namespace cgame {

struct MWState {
  Vector scores;
  std::size_t updates = 0;

  MWState() = default;
  explicit MWState(std::size_t K) : scores(K, 0.0) {
    if (K == 0) throw InputError("MWState: no actions");
  }

  std::size_t num_actions() const { return scores.size(); }

  void add(std::span<const double> g) {
    if (g.size() != scores.size()) throw InputError("MWState::add: score vector has wrong size");
    for (std::size_t a = 0; a < g.size(); ++a) scores[a] += g[a];
    ++updates;
  }
};

// exp(eta * s) normalized, shifted by max(s) first.
inline Vector softmax(std::span<const double> s, double eta) {
  Vector p(s.size());
  if (s.empty()) return p;
  double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    p[a] = std::exp(eta * (s[a] - m));
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

inline Vector uniform_distribution(std::size_t K) {
  return Vector(K, 1.0 / static_cast<double>(K));
}

inline Vector mw_distribution(const MWState& state, double eta) {
  if (!(eta > 0.0)) throw InputError("mw_distribution: eta must be positive");
  if (state.updates == 0) return uniform_distribution(state.num_actions());
  return softmax(state.scores, eta);
}

// 2 sqrt(log K / visits), visits counting the current round.
inline double rate_finite_or_net(std::size_t K, std::size_t visits) {
  if (visits == 0) throw InputError("rate_finite_or_net: visits must be >= 1");
  if (K == 0) throw InputError("rate_finite_or_net: K must be >= 1");
  return 2.0 * std::sqrt(std::log(static_cast<double>(K)) / static_cast<double>(visits));
}

inline double rate_stochastic(std::size_t K, std::size_t T) {
  if (T == 0) throw InputError("rate_stochastic: T must be >= 1");
  if (K == 0) throw InputError("rate_stochastic: K must be >= 1");
  return std::sqrt(8.0 * std::log(static_cast<double>(K)) / static_cast<double>(T));
}

// Realized regret of MW run on `g` with rates `eta` against `comparator`:
// sum_t g_t(a*) - sum_t <p_t, g_t>.
inline double mw_regret_audit(const std::vector<Vector>& g, std::span<const double> eta,
                              std::size_t comparator) {
  if (g.size() != eta.size()) throw InputError("mw_regret_audit: history and rates differ in length");
  if (g.empty()) return 0.0;
  const std::size_t K = g.front().size();
  if (comparator >= K) throw InputError("mw_regret_audit: comparator out of range");
  MWState state(K);
  double regret = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t) {
    if (g[t].size() != K) throw InputError("mw_regret_audit: ragged score history");
    Vector p = mw_distribution(state, eta[t]);
    regret += g[t][comparator] - dot(p, g[t]);
    state.add(g[t]);
  }
  return regret;
}

// log K / eta_T + sum_t eta_t / 8
inline double mw_regret_bound(std::size_t K, std::span<const double> eta) {
  if (eta.empty()) return 0.0;
  double s = 0.0;
  for (double e : eta) s += e;
  return std::log(static_cast<double>(K)) / eta.back() + s / 8.0;
}

}  // namespace cgame
