#pragma once

// Slow, direct reference computations for the tests. Nothing here calls into
// the library's factorizations, regret decomposition or MW code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cgame/game.hpp"
#include "cgame/kernels.hpp"
#include "cgame/rng.hpp"

namespace oracle {

using cgame::Point;
using cgame::Vector;

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

// mu = k^T (K + lambda I)^{-1} y, sigma^2 = k(x,x) - k^T (K + lambda I)^{-1} k
inline Posterior dense_posterior(const cgame::KernelSpec& spec, const std::vector<Point>& X,
                                 const std::vector<double>& y, double lambda, const Point& x) {
  const auto n = static_cast<Eigen::Index>(X.size());
  if (n == 0) return {0.0, cgame::kernel_eval(spec, x, x)};
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd k(n), yy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = cgame::kernel_eval(spec, X[i], X[j]);
    k(i) = cgame::kernel_eval(spec, X[i], x);
    yy(i) = y[i];
  }
  K += lambda * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Kinv = K.inverse();
  return {k.dot(Kinv * yy), cgame::kernel_eval(spec, x, x) - k.dot(Kinv * k)};
}

// 0.5 log det(I + K / lambda)
inline double dense_information_gain(const cgame::KernelSpec& spec, const std::vector<Point>& X,
                                     double lambda) {
  const auto n = static_cast<Eigen::Index>(X.size());
  if (n == 0) return 0.0;
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = cgame::kernel_eval(spec, X[i], X[j]) / lambda;
  }
  M += Eigen::MatrixXd::Identity(n, n);
  return 0.5 * std::log(M.determinant());
}

inline double player_reward(const cgame::ContextualGame& g, std::size_t i, cgame::JointAction joint,
                            std::size_t a, const Vector& z) {
  joint[i] = a;
  Vector r;
  g.rewards(joint, z, r);
  return r[i];
}

// Contextual regret by trying every map from observed contexts to actions.
inline double brute_force_regret(const cgame::ContextualGame& g, const cgame::GameTrace& tr, std::size_t i) {
  std::vector<Vector> ctx;
  std::vector<std::size_t> idx;
  for (const auto& row : tr.rows) {
    std::size_t k = 0;
    while (k < ctx.size() && !cgame::bitwise_equal(ctx[k], row.context)) ++k;
    if (k == ctx.size()) ctx.push_back(row.context);
    idx.push_back(k);
  }
  const std::size_t K = g.num_actions(i);
  std::size_t policies = 1;
  for (std::size_t k = 0; k < ctx.size(); ++k) policies *= K;
  double realized = 0.0;
  for (const auto& row : tr.rows) realized += row.rewards[i];
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pi(ctx.size());
  for (std::size_t p = 0; p < policies; ++p) {
    std::size_t code = p;
    for (auto& a : pi) {
      a = code % K;
      code /= K;
    }
    double v = 0.0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
      v += player_reward(g, i, tr.rows[t].joint, pi[idx[t]], tr.rows[t].context);
    }
    best = std::max(best, v);
  }
  return best - realized;
}

// Smoothness at z by direct enumeration of outcome pairs.
inline bool brute_force_smooth(const cgame::ContextualGame& g, const Vector& z, double lambda, double mu) {
  cgame::JointSpace space(g);
  Vector r;
  for (std::size_t p = 0; p < space.size(); ++p) {
    cgame::JointAction a1 = space.decode(p);
    g.rewards(a1, z, r);
    double w1 = 0.0;
    for (double v : r) w1 += v;
    for (std::size_t q = 0; q < space.size(); ++q) {
      cgame::JointAction a2 = space.decode(q);
      g.rewards(a2, z, r);
      double w2 = 0.0;
      for (double v : r) w2 += v;
      double lhs = 0.0;
      for (std::size_t i = 0; i < g.num_players(); ++i) lhs += player_reward(g, i, a1, a2[i], z);
      if (lhs < lambda * w2 - mu * w1 - 1e-12) return false;
    }
  }
  return true;
}

// Multiples of 1/8, so sums of a few of them are exact.
inline double dyadic(cgame::Rng& rng) { return static_cast<double>(cgame::uniform_index(rng, 9)) / 8.0; }

inline cgame::TabularGame random_tabular(cgame::Rng& rng, std::vector<std::size_t> K, std::size_t contexts,
                                         bool dyadic_payoffs = false, double floor = 0.0) {
  std::size_t joint = 1;
  for (std::size_t k : K) joint *= k;
  std::vector<Vector> zs;
  std::vector<std::vector<Vector>> pay(contexts);
  for (std::size_t c = 0; c < contexts; ++c) {
    zs.push_back({static_cast<double>(c) / 4.0});
    for (std::size_t j = 0; j < joint; ++j) {
      Vector r(K.size());
      for (double& v : r) v = dyadic_payoffs ? dyadic(rng) : floor + (1.0 - floor) * cgame::uniform01(rng);
      pay[c].push_back(r);
    }
  }
  return cgame::TabularGame(K, zs, pay);
}

// A trace of uniformly random play with the game's true rewards.
inline cgame::GameTrace random_trace(const cgame::TabularGame& g, std::size_t T, cgame::Rng& rng) {
  cgame::GameTrace tr = cgame::new_trace(g);
  for (std::size_t t = 0; t < T; ++t) {
    cgame::TraceRow row;
    row.round = t;
    row.context = g.contexts()[cgame::uniform_index(rng, g.contexts().size())];
    for (std::size_t i = 0; i < g.num_players(); ++i) row.joint.push_back(cgame::uniform_index(rng, g.num_actions(i)));
    g.rewards(row.joint, row.context, row.rewards);
    row.observed = row.rewards;
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

}  // namespace oracle
