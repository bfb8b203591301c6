#pragma once

// Protocol shared by every learner: choose() then feedback(), alternating.
//
// Learners never see the game directly. At construction they get one feature
// vector per own action; each round they see the context as observed by the
// player and, in feedback, a feature vector summarizing the opponents' round
// actions (their encodings, or an aggregate such as edge loads).

#include <memory>
#include <string>

#include <json.hpp>

#include "cgame/numeric.hpp"
#include "cgame/rng.hpp"

namespace cgame {

struct Choice {
  std::size_t action = 0;
  Vector distribution;
};

class Learner {
 public:
  virtual ~Learner() = default;

  virtual std::size_t num_actions() const = 0;
  virtual Choice choose(const Vector& context, Rng& rng) = 0;
  virtual void feedback(const Vector& context, std::size_t action, const Vector& opponents,
                        double reward) = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json diagnostics() const { return nlohmann::json::object(); }
};

using LearnerPtr = std::unique_ptr<Learner>;

// A finite context law zeta.
struct ContextDistribution {
  std::vector<Vector> support;
  Vector weights;  // empty: uniform

  double weight(std::size_t k) const {
    return weights.empty() ? 1.0 / static_cast<double>(support.size()) : weights[k];
  }
};

}  // namespace cgame
