#pragma once

// Greedy L1 covering of the context space. Each ball carries its own MW
// learner; a context farther than epsilon from every center opens a new ball
// centered at itself.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "cgame/errors.hpp"
#include "cgame/mw.hpp"
#include "cgame/numeric.hpp"

namespace cgame {

struct EpsilonNet {
  double radius = 1.0;
  std::size_t num_actions = 1;
  std::vector<Vector> centers;
  std::vector<MWState> states;

  EpsilonNet() = default;
  EpsilonNet(double eps, std::size_t K) : radius(eps), num_actions(K) {
    if (!(eps > 0.0)) throw InputError("EpsilonNet: radius must be positive");
    if (K == 0) throw InputError("EpsilonNet: no actions");
  }

  std::size_t size() const { return centers.size(); }
};

struct NetAssignment {
  std::size_t index = 0;
  bool created = false;
};

inline NetAssignment epsilon_net_assign(EpsilonNet& net, std::span<const double> z) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < net.centers.size(); ++c) {
    double d = l1_distance(net.centers[c], z);
    if (d < best_d) {  // strict: earliest center wins ties
      best_d = d;
      best = c;
    }
  }
  if (!net.centers.empty() && best_d <= net.radius) return {best, false};
  net.centers.emplace_back(z.begin(), z.end());
  net.states.emplace_back(net.num_actions);
  return {net.centers.size() - 1, true};
}

// (L_r L_p)^{-2/(c+2)} T^{-1/(c+2)}
inline double default_radius(double Lr, double Lp, std::size_t T, std::size_t c) {
  if (!(Lr > 0.0 && Lp > 0.0) || T == 0) throw InputError("default_radius: inputs must be positive");
  const double cd = static_cast<double>(c);
  return std::pow(Lr * Lp, -2.0 / (cd + 2.0)) * std::pow(static_cast<double>(T), -1.0 / (cd + 2.0));
}

}  // namespace cgame
