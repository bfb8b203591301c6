#pragma once

// c.GP-MW: multiplicative weights fed with optimistic reward estimates
//
//   ucb_t(a) = min(mu_t(a, a^{-i}_t, z_t) + beta_t sigma_t(a, a^{-i}_t, z_t), 1)
//
// built from the player's own observations of rounds 1..t-1. The context
// strategy decides which past rounds contribute to the scores used at z_t:
//
//   finite      rounds with exactly the same context (bitwise)
//   net         rounds whose context fell in the same L1 ball
//   stochastic  all rounds, each ucb_tau re-evaluated at the current z_t

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgame/epsilon_net.hpp"
#include "cgame/errors.hpp"
#include "cgame/kernels.hpp"
#include "cgame/learner.hpp"
#include "cgame/mw.hpp"
#include "cgame/regression.hpp"
#include "cgame/rng.hpp"

namespace cgame {

enum class ContextStrategy { finite, net, stochastic };

enum class EtaRule {
  theory,    // finite/net: visits; stochastic: horizon
  visits,    // 2 sqrt(log K / visits), visits incl. the current round
  horizon,   // sqrt(8 log K / T)
  constant,
};

struct BetaRule {
  bool theory = false;
  double constant = 2.0;
  // theory schedule parameters
  double B = 1.0;
  double noise = 0.0;
  double delta = 0.1;
};

struct CgpmwOptions {
  ContextStrategy strategy = ContextStrategy::stochastic;
  KernelSpec kernel = KernelSpec::squared_exponential({1.0});
  double lambda = 1.0;
  EtaRule eta_rule = EtaRule::theory;
  double eta_constant = 0.1;
  std::size_t horizon = 0;  // T, needed by the horizon rule
  BetaRule beta;
  double radius = 1.0;  // net strategy
  std::optional<std::size_t> data_budget;
  // Stochastic strategy only: when the context set is known and finite,
  // scores for every known context are accumulated as rounds come in instead
  // of re-evaluating the whole history at each round.
  std::optional<std::vector<Vector>> known_contexts;
  // Feed an empty context to the model and to the strategy (GP-MW).
  bool drop_context = false;
  // Keep per-round (group, scores, eta) for audits.
  bool record_scores = false;
};

inline std::string to_string(ContextStrategy s) {
  switch (s) {
    case ContextStrategy::finite: return "finite";
    case ContextStrategy::net: return "net";
    case ContextStrategy::stochastic: return "stochastic";
  }
  return "?";
}

inline double ucb_value(const MeanVar& mv, double beta) {
  return std::min(mv.mean + beta * std::sqrt(mv.variance), 1.0);
}

class CgpmwLearner : public Learner {
 public:
  struct ScoreRecord {
    std::size_t group = 0;  // context key / ball index; 0 for stochastic
    Vector scores;          // g_t(a) = ucb_t(a, a^{-i}_t, z_t)
    double eta = 0.0;       // rate used to sample round t
  };

  CgpmwLearner(std::vector<Vector> action_features, CgpmwOptions options)
      : features_(std::move(action_features)),
        opt_(std::move(options)),
        model_(opt_.kernel, opt_.lambda, opt_.data_budget) {
    const std::size_t K = features_.size();
    if (K == 0) throw InputError("c.GP-MW: no actions");
    if (opt_.strategy == ContextStrategy::net) net_ = EpsilonNet(opt_.radius, K);
    if (uses_horizon() && opt_.horizon == 0) {
      throw InputError("c.GP-MW: the horizon learning rate needs T >= 1");
    }
    if (opt_.eta_rule == EtaRule::constant && !(opt_.eta_constant > 0.0)) {
      throw InputError("c.GP-MW: constant eta must be positive");
    }
    if (opt_.known_contexts) {
      if (opt_.strategy != ContextStrategy::stochastic) {
        throw InputError("c.GP-MW: known contexts apply to the stochastic strategy only");
      }
      for (const auto& z : *opt_.known_contexts) {
        Vector zz = opt_.drop_context ? Vector{} : z;
        if (known_index_.emplace(bit_key(zz), known_states_.size()).second) {
          known_points_.push_back(zz);
          known_states_.emplace_back(K);
        }
      }
    }
  }

  std::size_t num_actions() const override { return features_.size(); }
  std::string kind() const override {
    return opt_.drop_context ? "gpmw" : "cgpmw-" + to_string(opt_.strategy);
  }
  const CgpmwOptions& options() const { return opt_; }
  const PosteriorModel& model() const { return model_; }
  std::size_t rounds() const { return rounds_; }
  const std::vector<ScoreRecord>& score_log() const { return log_; }
  const EpsilonNet& net() const { return net_; }
  std::size_t finite_groups() const { return finite_.size(); }

  // MW state for a finite-strategy context, if any round has seen it.
  const MWState* finite_state(const Vector& z) const {
    auto it = finite_.find(bit_key(observed(z)));
    return it == finite_.end() ? nullptr : &states_[it->second];
  }

  // Distribution the learner would sample from at context z. Does not open
  // new context groups or balls.
  Vector distribution(const Vector& z) {
    Vector zz = observed(z);
    if (opt_.strategy == ContextStrategy::finite && !finite_.count(bit_key(zz))) {
      return uniform_distribution(features_.size());
    }
    if (opt_.strategy == ContextStrategy::net) {
      EpsilonNet probe = net_;
      NetAssignment as = epsilon_net_assign(probe, zz);
      if (as.created) return uniform_distribution(features_.size());
    }
    std::size_t group = 0;
    double eta = 0.0;
    return compute(zz, group, eta);
  }

  Choice choose(const Vector& context, Rng& rng) override {
    if (pending_) throw ProtocolError("c.GP-MW: choose called twice without feedback");
    Vector zz = observed(context);
    std::size_t group = 0;
    double eta = 0.0;
    Vector p = compute(zz, group, eta);
    std::size_t a = sample_index(p, rng);
    pending_ = Pending{zz, a, group, eta};
    return {a, std::move(p)};
  }

  void feedback(const Vector& context, std::size_t action, const Vector& opponents,
                double reward) override {
    if (!pending_) throw ProtocolError("c.GP-MW: feedback without a preceding choose");
    Vector zz = observed(context);
    if (action != pending_->action || !bitwise_equal(zz, pending_->context)) {
      throw ProtocolError("c.GP-MW: feedback does not match the preceding choose");
    }
    const double beta = current_beta();
    Pending pend = std::move(*pending_);
    pending_.reset();

    // ucb_t from the model of rounds 1..t-1.
    Vector g;
    if (opt_.strategy != ContextStrategy::stochastic || opt_.record_scores) {
      g = scores_at(opponents, zz, beta);
    }
    switch (opt_.strategy) {
      case ContextStrategy::finite:
      case ContextStrategy::net:
        states_or_balls(pend.group).add(g);
        break;
      case ContextStrategy::stochastic:
        if (opt_.known_contexts) {
          for (std::size_t k = 0; k < known_points_.size(); ++k) {
            known_states_[k].add(scores_at(opponents, known_points_[k], beta));
          }
        } else {
          history_.push_back({opponents, model_.snapshot(), beta});
        }
        break;
    }
    if (opt_.record_scores) log_.push_back({pend.group, g, pend.eta});

    model_.update(Point{features_[action], opponents, zz}, reward);
    ++rounds_;
  }

  nlohmann::json diagnostics() const override {
    nlohmann::json j = {{"rounds", rounds_},
                        {"data_size", model_.size()},
                        {"information_gain", model_.information_gain()},
                        {"variance_clamps", model_.variance_clamps()}};
    if (opt_.strategy == ContextStrategy::net) j["balls"] = net_.size();
    if (opt_.strategy == ContextStrategy::finite) j["contexts"] = finite_.size();
    return j;
  }

  double current_beta() const {
    if (!opt_.beta.theory) return opt_.beta.constant;
    return beta_schedule(opt_.beta.B, opt_.beta.noise, opt_.lambda, model_.information_gain(),
                         opt_.beta.delta, opt_.strategy != ContextStrategy::stochastic);
  }

 private:
  struct Pending {
    Vector context;
    std::size_t action;
    std::size_t group;
    double eta;
  };
  struct HistoryEntry {
    Vector opponents;
    Snapshot snapshot;  // model of rounds 1..tau-1
    double beta;        // beta_tau
  };

  Vector observed(const Vector& z) const { return opt_.drop_context ? Vector{} : z; }

  bool uses_horizon() const {
    return opt_.eta_rule == EtaRule::horizon ||
           (opt_.eta_rule == EtaRule::theory && opt_.strategy == ContextStrategy::stochastic);
  }

  double rate(std::size_t visits) const {
    const std::size_t K = features_.size();
    switch (opt_.eta_rule) {
      case EtaRule::constant: return opt_.eta_constant;
      case EtaRule::visits: return rate_finite_or_net(K, visits);
      case EtaRule::horizon: return rate_stochastic(K, opt_.horizon);
      case EtaRule::theory:
        return opt_.strategy == ContextStrategy::stochastic ? rate_stochastic(K, opt_.horizon)
                                                            : rate_finite_or_net(K, visits);
    }
    return 0.0;
  }

  MWState& states_or_balls(std::size_t group) {
    return opt_.strategy == ContextStrategy::net ? net_.states[group] : states_[group];
  }

  // ucb(a, opponents, z) for every own action, current model.
  Vector scores_at(const Vector& opponents, const Vector& z, double beta) const {
    Vector g(features_.size());
    for (std::size_t a = 0; a < features_.size(); ++a) {
      g[a] = ucb_value(model_.mean_var(Point{features_[a], opponents, z}), beta);
    }
    return g;
  }

  Vector compute(const Vector& z, std::size_t& group, double& eta) {
    const std::size_t K = features_.size();
    switch (opt_.strategy) {
      case ContextStrategy::finite: {
        auto [it, inserted] = finite_.emplace(bit_key(z), states_.size());
        if (inserted) states_.emplace_back(K);
        group = it->second;
        const MWState& s = states_[group];
        eta = rate(s.updates + 1);
        return mw_distribution(s, eta);
      }
      case ContextStrategy::net: {
        NetAssignment as = epsilon_net_assign(net_, z);
        group = as.index;
        const MWState& s = net_.states[group];
        eta = rate(s.updates + 1);
        return mw_distribution(s, eta);
      }
      case ContextStrategy::stochastic: {
        group = 0;
        eta = rate(rounds_ + 1);
        if (opt_.known_contexts) {
          auto it = known_index_.find(bit_key(z));
          if (it == known_index_.end()) {
            throw InputError("c.GP-MW: context outside the declared known set");
          }
          return mw_distribution(known_states_[it->second], eta);
        }
        MWState s(K);
        for (const HistoryEntry& h : history_) {
          for (std::size_t a = 0; a < K; ++a) {
            s.scores[a] += ucb_value(h.snapshot.mean_var(Point{features_[a], h.opponents, z}), h.beta);
          }
        }
        s.updates = history_.size();
        return mw_distribution(s, eta);
      }
    }
    throw StateError("c.GP-MW: unknown strategy");
  }

  std::vector<Vector> features_;
  CgpmwOptions opt_;
  PosteriorModel model_;
  std::size_t rounds_ = 0;
  std::optional<Pending> pending_;

  std::map<BitKey, std::size_t> finite_;
  std::vector<MWState> states_;
  EpsilonNet net_;
  std::vector<HistoryEntry> history_;
  std::map<BitKey, std::size_t> known_index_;
  std::vector<Vector> known_points_;
  std::vector<MWState> known_states_;
  std::vector<ScoreRecord> log_;
};

using LearnerState = CgpmwLearner;

inline Choice cgpmw_choose(CgpmwLearner& state, const Vector& z, Rng& rng) {
  return state.choose(z, rng);
}

inline void cgpmw_feedback(CgpmwLearner& state, const Vector& z, std::size_t action,
                           const Vector& opponents, double reward) {
  state.feedback(z, action, opponents, reward);
}

}  // namespace cgame
