#pragma once

// Repeated contextual games: nature reveals z_t, players choose simultaneously,
// each player receives r^i(a_t, z_t) in [0,1] plus Gaussian noise, and then
// observes (a summary of) the opponents' actions.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cgame/errors.hpp"
#include "cgame/kernels.hpp"
#include "cgame/learner.hpp"
#include "cgame/numeric.hpp"
#include "cgame/rng.hpp"

namespace cgame {

using JointAction = std::vector<std::size_t>;

class ContextualGame {
 public:
  virtual ~ContextualGame() = default;

  virtual std::size_t num_players() const = 0;
  virtual std::size_t num_actions(std::size_t i) const = 0;

  // out[i] = r^i(joint, z), every value in [0,1].
  virtual void rewards(std::span<const std::size_t> joint, const Vector& z, Vector& out) const = 0;

  // out[i][a] = r^i(a, joint^{-i}, z).
  virtual void deviation_rewards(std::span<const std::size_t> joint, const Vector& z,
                                 std::vector<Vector>& out) const {
    const std::size_t N = num_players();
    out.resize(N);
    JointAction alt(joint.begin(), joint.end());
    Vector r;
    for (std::size_t i = 0; i < N; ++i) {
      out[i].resize(num_actions(i));
      for (std::size_t a = 0; a < num_actions(i); ++a) {
        alt[i] = a;
        rewards(alt, z, r);
        out[i][a] = r[i];
      }
      alt[i] = joint[i];
    }
  }

  double reward(std::size_t i, std::span<const std::size_t> joint, const Vector& z) const {
    Vector r;
    rewards(joint, z, r);
    return r.at(i);
  }

  // Learner-facing views. Defaults: action a of K encoded as a/(K-1);
  // opponents as the vector of their encodings; the full context.
  virtual std::vector<Vector> action_features(std::size_t i) const {
    const std::size_t K = num_actions(i);
    std::vector<Vector> f(K);
    for (std::size_t a = 0; a < K; ++a) f[a] = {encode(a, K)};
    return f;
  }

  virtual Vector observed_context(std::size_t, const Vector& z) const { return z; }

  virtual void opponent_features(std::span<const std::size_t> joint,
                                 std::vector<Vector>& out) const {
    const std::size_t N = num_players();
    out.assign(N, Vector{});
    for (std::size_t i = 0; i < N; ++i) {
      out[i].reserve(N - 1);
      for (std::size_t j = 0; j < N; ++j) {
        if (j != i) out[i].push_back(encode(joint[j], num_actions(j)));
      }
    }
  }

  // Observation noise std (rewards live in [0,1], so this is the fraction of
  // the reward range).
  virtual double noise_sigma() const { return 0.0; }

  virtual nlohmann::json describe() const = 0;

  static double encode(std::size_t a, std::size_t K) {
    return K > 1 ? static_cast<double>(a) / static_cast<double>(K - 1) : 0.0;
  }

  void check_joint(std::span<const std::size_t> joint) const {
    if (joint.size() != num_players()) throw InputError("joint action has wrong number of players");
    for (std::size_t i = 0; i < joint.size(); ++i) {
      if (joint[i] >= num_actions(i)) throw InputError("joint action out of range");
    }
  }
};

// Mixed-radix indexing of joint actions; the last player varies fastest.
class JointSpace {
 public:
  JointSpace(const ContextualGame& g, double guard = 1e6) {
    double total = 1.0;
    for (std::size_t i = 0; i < g.num_players(); ++i) {
      sizes_.push_back(g.num_actions(i));
      total *= static_cast<double>(g.num_actions(i));
    }
    if (total > guard) {
      throw SizeError("joint action space has " + format_double(total) +
                      " elements, above the enumeration guard " + format_double(guard));
    }
    count_ = static_cast<std::size_t>(total);
  }

  std::size_t size() const { return count_; }

  JointAction decode(std::size_t index) const {
    JointAction a(sizes_.size());
    for (std::size_t i = sizes_.size(); i-- > 0;) {
      a[i] = index % sizes_[i];
      index /= sizes_[i];
    }
    return a;
  }

  std::size_t encode(std::span<const std::size_t> a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < sizes_.size(); ++i) idx = idx * sizes_[i] + a[i];
    return idx;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::size_t count_ = 1;
};

// ---------------------------------------------------------------------------
// Context generators

class ContextSource {
 public:
  virtual ~ContextSource() = default;
  virtual Vector next(std::size_t round, Rng& nature) = 0;
  // The law zeta, when contexts are i.i.d. from a known finite distribution.
  virtual std::optional<ContextDistribution> distribution() const { return std::nullopt; }
};

class FixedSequence : public ContextSource {
 public:
  explicit FixedSequence(std::vector<Vector> seq) : seq_(std::move(seq)) {
    if (seq_.empty()) throw InputError("FixedSequence: empty sequence");
  }
  Vector next(std::size_t round, Rng&) override {
    if (round >= seq_.size()) throw InputError("FixedSequence: ran past the end of the sequence");
    return seq_[round];
  }

 private:
  std::vector<Vector> seq_;
};

class FiniteIid : public ContextSource {
 public:
  explicit FiniteIid(ContextDistribution zeta) : zeta_(std::move(zeta)) {
    if (zeta_.support.empty()) throw InputError("FiniteIid: empty support");
    if (!zeta_.weights.empty()) {
      if (zeta_.weights.size() != zeta_.support.size()) {
        throw InputError("FiniteIid: weights and support differ in length");
      }
      double s = std::accumulate(zeta_.weights.begin(), zeta_.weights.end(), 0.0);
      if (std::abs(s - 1.0) > 1e-9) throw InputError("FiniteIid: weights must sum to 1");
    }
  }
  Vector next(std::size_t, Rng& nature) override {
    if (zeta_.weights.empty()) return zeta_.support[uniform_index(nature, zeta_.support.size())];
    return zeta_.support[sample_index(zeta_.weights, nature)];
  }
  std::optional<ContextDistribution> distribution() const override { return zeta_; }

 private:
  ContextDistribution zeta_;
};

// Uniform on [0,1]^c.
class BoxUniform : public ContextSource {
 public:
  explicit BoxUniform(std::size_t c) : c_(c) {}
  Vector next(std::size_t, Rng& nature) override {
    Vector z(c_);
    for (double& v : z) v = uniform01(nature);
    return z;
  }

 private:
  std::size_t c_;
};

class CallbackSource : public ContextSource {
 public:
  using Fn = std::function<Vector(std::size_t, Rng&)>;
  explicit CallbackSource(Fn fn) : fn_(std::move(fn)) {}
  Vector next(std::size_t round, Rng& nature) override { return fn_(round, nature); }

 private:
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  std::size_t round = 0;
  Vector context;
  JointAction joint;
  Vector rewards;   // true r^i
  Vector observed;  // noisy
  std::vector<Vector> distributions;
};

struct GameTrace {
  std::size_t num_players = 0;
  std::vector<std::size_t> num_actions;
  std::vector<TraceRow> rows;

  std::size_t size() const { return rows.size(); }
};

inline void to_json(nlohmann::json& j, const TraceRow& r) {
  j = {{"round", r.round},       {"context", r.context},   {"joint", r.joint},
       {"rewards", r.rewards},   {"observed", r.observed}, {"distributions", r.distributions}};
}

inline void from_json(const nlohmann::json& j, TraceRow& r) {
  r.round = j.at("round").get<std::size_t>();
  r.context = j.at("context").get<Vector>();
  r.joint = j.at("joint").get<JointAction>();
  r.rewards = j.at("rewards").get<Vector>();
  r.observed = j.at("observed").get<Vector>();
  r.distributions = j.value("distributions", std::vector<Vector>{});
}

inline void to_json(nlohmann::json& j, const GameTrace& t) {
  j = {{"num_players", t.num_players}, {"num_actions", t.num_actions}, {"rows", t.rows}};
}

inline void from_json(const nlohmann::json& j, GameTrace& t) {
  t.num_players = j.at("num_players").get<std::size_t>();
  t.num_actions = j.at("num_actions").get<std::vector<std::size_t>>();
  t.rows = j.at("rows").get<std::vector<TraceRow>>();
  for (const auto& r : t.rows) {
    if (r.joint.size() != t.num_players || r.rewards.size() != t.num_players) {
      throw InputError("trace row " + std::to_string(r.round) + " has the wrong number of players");
    }
  }
}

inline std::string join_doubles(std::span<const double> v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += format_double(v[k]);
  }
  return s;
}

// One line per (round, player).
inline void write_trace_csv(std::ostream& os, const GameTrace& t) {
  os << "round,player,action,reward,observed_reward,probability,context\n";
  for (const auto& r : t.rows) {
    const std::string ctx = join_doubles(r.context);
    for (std::size_t i = 0; i < t.num_players; ++i) {
      double p = r.distributions.empty() ? 1.0 : r.distributions[i][r.joint[i]];
      os << r.round + 1 << ',' << i << ',' << r.joint[i] << ',' << format_double(r.rewards[i]) << ','
         << format_double(r.observed[i]) << ',' << format_double(p) << ',' << ctx << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Playing

struct RunStreams {
  Rng nature;
  std::vector<Rng> choice;
  std::vector<Rng> noise;

  static RunStreams derive(std::uint64_t seed, std::size_t N) {
    RunStreams s{derive_stream(seed, StreamKind::nature), {}, {}};
    for (std::size_t i = 0; i < N; ++i) {
      s.choice.push_back(derive_stream(seed, StreamKind::choice, i));
      s.noise.push_back(derive_stream(seed, StreamKind::noise, i));
    }
    return s;
  }
};

// One round of the protocol. `polling_order` permutes the order in which
// learners are asked to choose; each draws from its own stream, so the row
// does not depend on it.
inline TraceRow play_round(const ContextualGame& game, std::span<Learner* const> learners,
                           ContextSource& source, std::size_t round, RunStreams& streams,
                           std::span<const std::size_t> polling_order = {}) {
  const std::size_t N = game.num_players();
  if (learners.size() != N) throw InputError("play_round: need one learner per player");
  TraceRow row;
  row.round = round;
  row.context = source.next(round, streams.nature);
  row.joint.assign(N, 0);
  row.distributions.assign(N, Vector{});

  std::vector<Vector> obs(N);
  auto poll = [&](std::size_t i) {
    obs[i] = game.observed_context(i, row.context);
    Choice c = learners[i]->choose(obs[i], streams.choice[i]);
    if (c.action >= game.num_actions(i)) throw ProtocolError("learner chose an invalid action");
    row.joint[i] = c.action;
    row.distributions[i] = std::move(c.distribution);
  };
  if (polling_order.empty()) {
    for (std::size_t i = 0; i < N; ++i) poll(i);
  } else {
    if (polling_order.size() != N) throw InputError("play_round: polling order has wrong size");
    for (std::size_t i : polling_order) poll(i);
  }

  game.rewards(row.joint, row.context, row.rewards);
  row.observed.resize(N);
  const double sigma = game.noise_sigma();
  for (std::size_t i = 0; i < N; ++i) {
    row.observed[i] = row.rewards[i] + (sigma > 0.0 ? sigma * standard_normal(streams.noise[i]) : 0.0);
  }

  std::vector<Vector> opp;
  game.opponent_features(row.joint, opp);
  for (std::size_t i = 0; i < N; ++i) {
    learners[i]->feedback(obs[i], row.joint[i], opp[i], row.observed[i]);
  }
  return row;
}

inline GameTrace new_trace(const ContextualGame& game) {
  GameTrace t;
  t.num_players = game.num_players();
  for (std::size_t i = 0; i < t.num_players; ++i) t.num_actions.push_back(game.num_actions(i));
  return t;
}

inline GameTrace run_game(const ContextualGame& game, std::span<Learner* const> learners,
                          ContextSource& source, std::size_t T, std::uint64_t seed) {
  GameTrace trace = new_trace(game);
  RunStreams streams = RunStreams::derive(seed, game.num_players());
  for (std::size_t t = 0; t < T; ++t) {
    trace.rows.push_back(play_round(game, learners, source, t, streams));
  }
  return trace;
}

// Recompute true rewards from the game; true when every stored value matches
// bit for bit.
inline bool replay_matches(const ContextualGame& game, const GameTrace& trace) {
  Vector r;
  for (const auto& row : trace.rows) {
    game.rewards(row.joint, row.context, r);
    if (!bitwise_equal(r, row.rewards)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Tabular game over a finite, enumerated context set.

class TabularGame : public ContextualGame {
 public:
  // payoffs[k][joint index][i] for context k; joint index as in JointSpace.
  TabularGame(std::vector<std::size_t> num_actions, std::vector<Vector> contexts,
              std::vector<std::vector<Vector>> payoffs, double noise = 0.0)
      : K_(std::move(num_actions)),
        contexts_(std::move(contexts)),
        payoffs_(std::move(payoffs)),
        noise_(noise) {
    if (K_.empty()) throw InputError("TabularGame: no players");
    if (contexts_.size() != payoffs_.size()) {
      throw InputError("TabularGame: one payoff table per context required");
    }
    std::size_t joint = 1;
    for (std::size_t k : K_) {
      if (k == 0) throw InputError("TabularGame: empty action set");
      joint *= k;
    }
    for (const auto& table : payoffs_) {
      if (table.size() != joint) throw InputError("TabularGame: payoff table has wrong size");
      for (const auto& r : table) {
        if (r.size() != K_.size()) throw InputError("TabularGame: payoff entry has wrong size");
        for (double v : r) {
          if (!(v >= 0.0 && v <= 1.0)) throw InputError("TabularGame: payoffs must lie in [0,1]");
        }
      }
    }
  }

  std::size_t num_players() const override { return K_.size(); }
  std::size_t num_actions(std::size_t i) const override { return K_.at(i); }
  double noise_sigma() const override { return noise_; }
  const std::vector<Vector>& contexts() const { return contexts_; }

  void rewards(std::span<const std::size_t> joint, const Vector& z, Vector& out) const override {
    check_joint(joint);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < K_.size(); ++i) idx = idx * K_[i] + joint[i];
    out = payoffs_[context_index(z)][idx];
  }

  std::size_t context_index(const Vector& z) const {
    for (std::size_t k = 0; k < contexts_.size(); ++k) {
      if (bitwise_equal(contexts_[k], z)) return k;
    }
    throw InputError("TabularGame: context not in the game's context set");
  }

  nlohmann::json describe() const override {
    return {{"type", "tabular"},   {"num_actions", K_}, {"contexts", contexts_},
            {"payoffs", payoffs_}, {"noise", noise_}};
  }

  static TabularGame from_json(const nlohmann::json& j) {
    return TabularGame(j.at("num_actions").get<std::vector<std::size_t>>(),
                       j.at("contexts").get<std::vector<Vector>>(),
                       j.at("payoffs").get<std::vector<std::vector<Vector>>>(),
                       j.value("noise", 0.0));
  }

 private:
  std::vector<std::size_t> K_;
  std::vector<Vector> contexts_;
  std::vector<std::vector<Vector>> payoffs_;
  double noise_;
};

// ---------------------------------------------------------------------------
// Synthetic game whose rewards are finite kernel expansions:
//
//   r^i(x) = 0.5 + s_i sum_j alpha_ij k(c_ij, x),   s_i = 1 / (2 sqrt(alpha^T K alpha))
//
// where x = (own encoding, opponents' encodings, z). The non-constant part g
// has RKHS norm 1/2 and |g(x)| <= |g|_k sqrt(k(x,x)) <= 1/2, so the values
// stay in [0,1] and bound(i) = 0.5.

struct SyntheticGameOptions {
  std::size_t players = 2;
  std::size_t actions = 3;
  std::size_t context_dim = 1;
  std::size_t num_centers = 10;
  double noise = 0.0;
  KernelSpec kernel = KernelSpec::squared_exponential({0.5});
  std::uint64_t seed = 0;
};

class SyntheticRkhsGame : public ContextualGame {
 public:
  explicit SyntheticRkhsGame(SyntheticGameOptions opt) : opt_(std::move(opt)) {
    validate(opt_.kernel);
    if (opt_.players == 0 || opt_.actions == 0) throw InputError("synthetic game: empty game");
    player_.resize(opt_.players);
    for (std::size_t i = 0; i < opt_.players; ++i) generate(i);
  }

  std::size_t num_players() const override { return opt_.players; }
  std::size_t num_actions(std::size_t) const override { return opt_.actions; }
  double noise_sigma() const override { return opt_.noise; }
  const SyntheticGameOptions& options() const { return opt_; }
  const KernelSpec& kernel() const { return opt_.kernel; }

  // RKHS norm of r^i - 0.5.
  double bound(std::size_t i) const { return player_.at(i).bound; }
  const std::vector<Point>& centers(std::size_t i) const { return player_.at(i).centers; }
  const Vector& alphas(std::size_t i) const { return player_.at(i).alpha; }
  double scale(std::size_t i) const { return player_.at(i).scale; }

  Point point(std::size_t i, std::span<const std::size_t> joint, const Vector& z) const {
    Point x;
    x.own = {encode(joint[i], opt_.actions)};
    for (std::size_t j = 0; j < opt_.players; ++j) {
      if (j != i) x.opponents.push_back(encode(joint[j], opt_.actions));
    }
    x.context = z;
    return x;
  }

  // r^i at an arbitrary input point.
  double value(std::size_t i, const Point& x) const {
    const auto& p = player_.at(i);
    PreparedPoint px = prepare(opt_.kernel, x);
    double g = 0.0;
    for (std::size_t j = 0; j < p.prepared.size(); ++j) {
      g += p.alpha[j] * kernel_eval(opt_.kernel, p.prepared[j], px);
    }
    return 0.5 + p.scale * g;
  }

  void rewards(std::span<const std::size_t> joint, const Vector& z, Vector& out) const override {
    check_joint(joint);
    if (z.size() != opt_.context_dim) throw InputError("synthetic game: context dimension mismatch");
    out.resize(opt_.players);
    for (std::size_t i = 0; i < opt_.players; ++i) out[i] = value(i, point(i, joint, z));
  }

  nlohmann::json describe() const override {
    return {{"type", "synthetic-rkhs"},
            {"players", opt_.players},
            {"actions", opt_.actions},
            {"context_dim", opt_.context_dim},
            {"num_centers", opt_.num_centers},
            {"noise", opt_.noise},
            {"kernel", opt_.kernel},
            {"seed", opt_.seed}};
  }

  static SyntheticGameOptions options_from_json(const nlohmann::json& j) {
    SyntheticGameOptions o;
    o.players = j.value("players", o.players);
    o.actions = j.value("actions", o.actions);
    o.context_dim = j.value("context_dim", o.context_dim);
    o.num_centers = j.value("num_centers", o.num_centers);
    o.noise = j.value("noise", o.noise);
    if (j.contains("kernel")) o.kernel = j.at("kernel").get<KernelSpec>();
    o.seed = j.value("seed", o.seed);
    return o;
  }

 private:
  struct PlayerFn {
    std::vector<Point> centers;
    std::vector<PreparedPoint> prepared;
    Vector alpha;
    double scale = 0.0;
    double bound = 0.0;
  };

  void generate(std::size_t i) {
    PlayerFn& p = player_[i];
    const std::size_t M = opt_.num_centers;
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt > 100) throw DegenerateError("synthetic game: could not draw non-degenerate centers");
      Rng rng = derive_stream(opt_.seed, StreamKind::setup, i * 1000 + attempt);
      p = PlayerFn{};
      for (std::size_t j = 0; j < M; ++j) {
        Point c;
        c.own = {uniform01(rng)};
        for (std::size_t k = 0; k + 1 < opt_.players; ++k) c.opponents.push_back(uniform01(rng));
        for (std::size_t k = 0; k < opt_.context_dim; ++k) c.context.push_back(uniform01(rng));
        p.prepared.push_back(prepare(opt_.kernel, c));
        p.centers.push_back(std::move(c));
        p.alpha.push_back(standard_normal(rng));
      }
      if (M == 0) return;  // constant 0.5
      double quad = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        for (std::size_t l = 0; l < M; ++l) {
          quad += p.alpha[j] * p.alpha[l] * kernel_eval(opt_.kernel, p.prepared[j], p.prepared[l]);
        }
      }
      if (!(quad > 1e-12)) continue;
      p.scale = 1.0 / (2.0 * std::sqrt(quad));
      p.bound = p.scale * std::sqrt(quad);
      return;
    }
  }

  SyntheticGameOptions opt_;
  std::vector<PlayerFn> player_;
};

inline SyntheticRkhsGame make_synthetic_rkhs_game(SyntheticGameOptions opt) {
  return SyntheticRkhsGame(std::move(opt));
}

}  // namespace cgame
