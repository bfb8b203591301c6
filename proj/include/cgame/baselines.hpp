#pragma once

// Comparison learners: no learning, Exp3 / S-Exp3, GP-MW (c.GP-MW blind to
// the context) and RobustLinExp3 for contextual linear bandits.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cgame/cgpmw.hpp"
#include "cgame/errors.hpp"
#include "cgame/learner.hpp"
#include "cgame/mw.hpp"
#include "cgame/numeric.hpp"
#include "cgame/rng.hpp"

namespace cgame {

// Always plays action 0 (in routing: the free-flow shortest route).
class NoLearning : public Learner {
 public:
  explicit NoLearning(std::size_t K) : K_(K) {
    if (K == 0) throw InputError("NoLearning: no actions");
  }
  std::size_t num_actions() const override { return K_; }
  std::string kind() const override { return "no-learning"; }

  Choice choose(const Vector&, Rng&) override {
    if (pending_) throw ProtocolError("NoLearning: choose called twice without feedback");
    pending_ = true;
    Vector p(K_, 0.0);
    p[0] = 1.0;
    return {0, p};
  }
  void feedback(const Vector&, std::size_t action, const Vector&, double) override {
    if (!pending_) throw ProtocolError("NoLearning: feedback without a preceding choose");
    if (action != 0) throw ProtocolError("NoLearning: feedback for an action it did not play");
    pending_ = false;
  }

 private:
  std::size_t K_;
  bool pending_ = false;
};

inline std::size_t no_learning_choose(const NoLearning&) { return 0; }

// ---------------------------------------------------------------------------
// Exp3 on rewards: p = (1 - gamma) softmax(eta * S) + gamma / K, where S holds
// importance-weighted cumulative reward estimates.

struct Exp3Weights {
  Vector estimates;
  std::size_t updates = 0;
};

inline Vector exp3_distribution(const Exp3Weights& w, double eta, double gamma) {
  const std::size_t K = w.estimates.size();
  Vector p = softmax(w.estimates, eta);
  for (double& v : p) v = (1.0 - gamma) * v + gamma / static_cast<double>(K);
  return p;
}

inline void exp3_step(Exp3Weights& w, std::size_t action, double reward, double sampled_prob) {
  if (!(sampled_prob > 0.0)) throw ProtocolError("exp3_step: sampled probability must be positive");
  if (action >= w.estimates.size()) throw InputError("exp3_step: action out of range");
  w.estimates[action] += reward / sampled_prob;
  ++w.updates;
}

// sqrt(2 log K / (T K))
inline double exp3_default_eta(std::size_t K, std::size_t T) {
  if (K == 0 || T == 0) throw InputError("exp3_default_eta: K and T must be positive");
  return std::sqrt(2.0 * std::log(static_cast<double>(K)) /
                   (static_cast<double>(T) * static_cast<double>(K)));
}

struct Exp3Options {
  std::optional<double> eta;  // default: exp3_default_eta(K, horizon)
  double gamma = 0.0;
  std::size_t horizon = 0;
  bool contextual = false;  // S-Exp3: one copy per observed context
};

class Exp3 : public Learner {
 public:
  Exp3(std::size_t K, Exp3Options opt) : K_(K), opt_(opt) {
    if (K == 0) throw InputError("Exp3: no actions");
    if (!(opt_.gamma >= 0.0 && opt_.gamma <= 1.0)) throw InputError("Exp3: gamma must be in [0,1]");
    // with one action any rate gives the same (only) play
    eta_ = opt_.eta ? *opt_.eta : K == 1 ? 1.0 : exp3_default_eta(K, opt_.horizon);
    if (!(eta_ > 0.0)) throw InputError("Exp3: eta must be positive");
  }

  std::size_t num_actions() const override { return K_; }
  std::string kind() const override { return opt_.contextual ? "s-exp3" : "exp3"; }
  double eta() const { return eta_; }

  const Exp3Weights* copy_for(const Vector& z) const {
    auto it = copies_.find(key(z));
    return it == copies_.end() ? nullptr : &it->second;
  }

  Choice choose(const Vector& context, Rng& rng) override {
    if (pending_) throw ProtocolError("Exp3: choose called twice without feedback");
    Exp3Weights& w = weights(context);
    Vector p = exp3_distribution(w, eta_, opt_.gamma);
    std::size_t a = sample_index(p, rng);
    pending_ = Pending{key(context), a, p[a]};
    return {a, std::move(p)};
  }

  void feedback(const Vector& context, std::size_t action, const Vector&, double reward) override {
    if (!pending_) throw ProtocolError("Exp3: feedback without a preceding choose");
    if (pending_->action != action || pending_->key != key(context)) {
      throw ProtocolError("Exp3: feedback does not match the preceding choose");
    }
    exp3_step(weights(context), action, reward, pending_->prob);
    pending_.reset();
  }

  nlohmann::json diagnostics() const override {
    return {{"eta", eta_}, {"gamma", opt_.gamma}, {"copies", copies_.size()}};
  }

 private:
  struct Pending {
    BitKey key;
    std::size_t action;
    double prob;
  };

  BitKey key(const Vector& z) const { return opt_.contextual ? bit_key(z) : BitKey{}; }

  Exp3Weights& weights(const Vector& z) {
    auto [it, inserted] = copies_.try_emplace(key(z));
    if (inserted) it->second.estimates.assign(K_, 0.0);
    return it->second;
  }

  std::size_t K_;
  Exp3Options opt_;
  double eta_ = 0.0;
  std::map<BitKey, Exp3Weights> copies_;
  std::optional<Pending> pending_;
};

// ---------------------------------------------------------------------------
// GP-MW: the c.GP-MW pipeline with the context removed from the kernel input
// and a single MW learner over all rounds.

inline CgpmwOptions gpmw_options(KernelSpec kernel, std::size_t horizon, double beta = 2.0) {
  CgpmwOptions o;
  o.strategy = ContextStrategy::finite;  // one group, since every context is dropped
  o.kernel = std::move(kernel);
  o.eta_rule = EtaRule::horizon;
  o.horizon = horizon;
  o.beta.theory = false;
  o.beta.constant = beta;
  o.drop_context = true;
  return o;
}

inline LearnerPtr make_gpmw(std::vector<Vector> action_features, KernelSpec kernel,
                            std::size_t horizon, double beta = 2.0) {
  return std::make_unique<CgpmwLearner>(std::move(action_features),
                                        gpmw_options(std::move(kernel), horizon, beta));
}

// ---------------------------------------------------------------------------
// RobustLinExp3. Losses l = 1 - reward are modelled as linear in a context
// feature map phi(z) = [1, z / scale], one parameter vector per action. With
// the context law known, Sigma = E[phi phi^T] and the per-round estimate for
// the played action is
//
//   theta_hat = Sigma^+ phi(z_t) l_t / pi_t(a_t | z_t),
//
// and the policy is pi(a|z) = (1 - gamma) softmax_a(-eta <phi(z), sum theta_hat_a>) + gamma / K.

struct RobustLinExp3Options {
  double eta = 0.3;
  double gamma = 0.2;
  std::optional<ContextDistribution> contexts;
  Vector feature_scale;  // per context coordinate; empty: 1
};

class RobustLinExp3 : public Learner {
 public:
  RobustLinExp3(std::size_t K, RobustLinExp3Options opt) : K_(K), opt_(std::move(opt)) {
    if (K == 0) throw InputError("RobustLinExp3: no actions");
    if (!opt_.contexts || opt_.contexts->support.empty()) {
      throw ConfigError("contexts", "RobustLinExp3 needs the context distribution");
    }
    if (!(opt_.eta > 0.0)) throw ConfigError("eta", "must be positive");
    if (!(opt_.gamma > 0.0 && opt_.gamma <= 1.0)) throw ConfigError("gamma", "must be in (0,1]");
    const auto& ctx = *opt_.contexts;
    if (!ctx.weights.empty() && ctx.weights.size() != ctx.support.size()) {
      throw ConfigError("contexts", "weights and support differ in length");
    }
    dim_ = ctx.support.front().size() + 1;
    if (!opt_.feature_scale.empty() && opt_.feature_scale.size() + 1 != dim_) {
      throw ConfigError("feature_scale", "length does not match the context dimension");
    }
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_),
                                                  static_cast<Eigen::Index>(dim_));
    for (std::size_t k = 0; k < ctx.support.size(); ++k) {
      Eigen::VectorXd f = phi(ctx.support[k]);
      sigma += ctx.weight(k) * f * f.transpose();
    }
    sigma_pinv_ = sigma.completeOrthogonalDecomposition().pseudoInverse();
    theta_.assign(K_, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_)));
  }

  std::size_t num_actions() const override { return K_; }
  std::string kind() const override { return "robust-lin-exp3"; }

  Vector policy(const Vector& z) const {
    Eigen::VectorXd f = phi(z);
    Vector s(K_);
    for (std::size_t a = 0; a < K_; ++a) s[a] = -f.dot(theta_[a]);
    Vector p = softmax(s, opt_.eta);
    for (double& v : p) v = (1.0 - opt_.gamma) * v + opt_.gamma / static_cast<double>(K_);
    return p;
  }

  Choice choose(const Vector& context, Rng& rng) override {
    if (pending_) throw ProtocolError("RobustLinExp3: choose called twice without feedback");
    Vector p = policy(context);
    std::size_t a = sample_index(p, rng);
    pending_ = Pending{context, a, p[a]};
    return {a, std::move(p)};
  }

  void feedback(const Vector& context, std::size_t action, const Vector&, double reward) override {
    robust_lin_exp3_step(context, action, reward);
  }

  void robust_lin_exp3_step(const Vector& context, std::size_t action, double reward) {
    if (!pending_) throw ProtocolError("RobustLinExp3: feedback without a preceding choose");
    if (pending_->action != action || !bitwise_equal(pending_->context, context)) {
      throw ProtocolError("RobustLinExp3: feedback does not match the preceding choose");
    }
    const double loss = 1.0 - reward;
    theta_[action] += sigma_pinv_ * phi(context) * (loss / pending_->prob);
    pending_.reset();
  }

 private:
  struct Pending {
    Vector context;
    std::size_t action;
    double prob;
  };

  Eigen::VectorXd phi(const Vector& z) const {
    if (z.size() + 1 != dim_) throw InputError("RobustLinExp3: context dimension mismatch");
    Eigen::VectorXd f(static_cast<Eigen::Index>(dim_));
    f[0] = 1.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      double s = opt_.feature_scale.empty() ? 1.0 : opt_.feature_scale[j];
      f[static_cast<Eigen::Index>(j + 1)] = z[j] / s;
    }
    return f;
  }

  std::size_t K_;
  RobustLinExp3Options opt_;
  std::size_t dim_ = 1;
  Eigen::MatrixXd sigma_pinv_;
  std::vector<Eigen::VectorXd> theta_;
  std::optional<Pending> pending_;
};

}  // namespace cgame
