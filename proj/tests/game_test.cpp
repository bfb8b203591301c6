#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "cgame/baselines.hpp"
#include "cgame/cgpmw.hpp"
#include "cgame/game.hpp"
#include "oracles.hpp"

using namespace cgame;

namespace {

std::vector<LearnerPtr> exp3_players(const ContextualGame& g, std::size_t T) {
  std::vector<LearnerPtr> ls;
  for (std::size_t i = 0; i < g.num_players(); ++i) {
    ls.push_back(std::make_unique<Exp3>(g.num_actions(i), Exp3Options{std::nullopt, 0.1, T, true}));
  }
  return ls;
}

std::vector<Learner*> raw(const std::vector<LearnerPtr>& v) {
  std::vector<Learner*> out;
  for (const auto& l : v) out.push_back(l.get());
  return out;
}

}  // namespace

TEST_SUITE("game") {

TEST_CASE("joint space indexing") {
  Rng rng = derive_stream(1, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 3, 2}, 1);
  JointSpace s(g);
  CHECK(s.size() == 12);
  CHECK(s.decode(0) == JointAction{0, 0, 0});
  CHECK(s.decode(1) == JointAction{0, 0, 1});
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.encode(s.decode(k)) == k);
  CHECK_THROWS_AS(JointSpace(g, 5), SizeError);
}

TEST_CASE("tabular game lookups") {
  // payoffs[k][joint][i], last player fastest
  std::vector<std::vector<Vector>> pay = {{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}, {0.7, 0.8}}};
  TabularGame g({2, 2}, {{0.0}}, pay);
  JointAction a{1, 0};
  CHECK(g.reward(0, a, Vector{0.0}) == 0.5);
  CHECK(g.reward(1, a, Vector{0.0}) == 0.6);
  std::vector<Vector> dev;
  g.deviation_rewards(a, Vector{0.0}, dev);
  CHECK(dev[0] == Vector{0.1, 0.5});
  CHECK(dev[1] == Vector{0.6, 0.8});
  CHECK_THROWS_AS(g.reward(0, a, Vector{1.0}), InputError);
  CHECK_THROWS_AS(g.reward(0, JointAction{2, 0}, Vector{0.0}), InputError);
  CHECK_THROWS_AS(TabularGame({2, 2}, {{0.0}}, {{{1.5, 0.0}, {0, 0}, {0, 0}, {0, 0}}}), InputError);
  TabularGame back = TabularGame::from_json(g.describe());
  CHECK(back.describe() == g.describe());
}

TEST_CASE("synthetic rewards stay in [0, 1]") {
  SyntheticGameOptions o;
  o.players = 3;
  o.actions = 4;
  o.context_dim = 2;
  o.seed = 9;
  SyntheticRkhsGame g(o);
  BoxUniform box(2);
  Rng nature = derive_stream(1, StreamKind::nature);
  JointSpace s(g);
  for (int n = 0; n < 20; ++n) {
    Vector z = box.next(0, nature);
    for (std::size_t k = 0; k < s.size(); ++k) {
      Vector r;
      g.rewards(s.decode(k), z, r);
      for (double v : r) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    // value = 0.5 + s sum alpha k(c, x)
    const Point& c = g.centers(i)[0];
    double direct = 0.0;
    for (std::size_t j = 0; j < g.centers(i).size(); ++j) {
      direct += g.alphas(i)[j] * kernel_eval(g.kernel(), g.centers(i)[j], c);
    }
    CHECK(g.value(i, c) == doctest::Approx(0.5 + g.scale(i) * direct));
    CHECK(g.bound(i) > 0.0);
  }
  SyntheticRkhsGame again(o);
  CHECK(again.value(0, g.centers(0)[1]) == g.value(0, g.centers(0)[1]));
}

TEST_CASE("context sources") {
  Rng nature = derive_stream(2, StreamKind::nature);
  FixedSequence seq({{1.0}, {2.0}});
  CHECK(seq.next(0, nature) == Vector{1.0});
  CHECK(seq.next(1, nature) == Vector{2.0});
  CHECK_THROWS_AS(seq.next(2, nature), InputError);
  FiniteIid iid(ContextDistribution{{{0.0}, {1.0}}, {0.25, 0.75}});
  int ones = 0;
  for (int t = 0; t < 4000; ++t) ones += iid.next(t, nature)[0] == 1.0;
  CHECK(ones / 4000.0 == doctest::Approx(0.75).epsilon(0.05));
  CHECK(iid.distribution().has_value());
  CHECK_THROWS_AS(FiniteIid(ContextDistribution{{{0.0}}, {0.5}}), InputError);
}

TEST_CASE("runs are reproducible and replay") {
  Rng rng = derive_stream(3, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {3, 2}, 2);
  auto run = [&](std::uint64_t seed) {
    auto ls = exp3_players(g, 50);
    auto ptr = raw(ls);
    FiniteIid src(ContextDistribution{g.contexts(), {}});
    return run_game(g, ptr, src, 50, seed);
  };
  GameTrace a = run(4), b = run(4), c = run(5);
  CHECK(nlohmann::json(a) == nlohmann::json(b));
  CHECK(nlohmann::json(a) != nlohmann::json(c));
  CHECK(replay_matches(g, a));
  a.rows[3].rewards[0] += 1e-9;
  CHECK(!replay_matches(g, a));
}

TEST_CASE("polling order does not change the row") {
  SyntheticGameOptions o;
  o.noise = 0.05;
  SyntheticRkhsGame g(o);
  auto make = [&] {
    std::vector<LearnerPtr> ls;
    for (std::size_t i = 0; i < 2; ++i) {
      CgpmwOptions c;
      c.kernel = g.kernel();
      c.horizon = 10;
      ls.push_back(std::make_unique<CgpmwLearner>(g.action_features(i), c));
    }
    return ls;
  };
  auto l1 = make(), l2 = make();
  auto p1 = raw(l1), p2 = raw(l2);
  std::vector<Vector> zs;
  for (int t = 0; t < 10; ++t) zs.push_back({t % 2 ? 0.6 : 0.3});
  FixedSequence src(zs);
  RunStreams s1 = RunStreams::derive(8, 2), s2 = RunStreams::derive(8, 2);
  std::vector<std::size_t> reversed{1, 0};
  for (std::size_t t = 0; t < 10; ++t) {
    TraceRow a = play_round(g, p1, src, t, s1);
    TraceRow b = play_round(g, p2, src, t, s2, reversed);
    CHECK(a.joint == b.joint);
    CHECK(a.observed == b.observed);
  }
}

TEST_CASE("trace json and csv") {
  Rng rng = derive_stream(6, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 2}, 2);
  GameTrace t = oracle::random_trace(g, 5, rng);
  GameTrace back = nlohmann::json(t).get<GameTrace>();
  CHECK(nlohmann::json(back) == nlohmann::json(t));
  std::ostringstream os;
  write_trace_csv(os, t);
  std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == 11);
}

TEST_CASE("learners must match the players") {
  Rng rng = derive_stream(7, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 2}, 1);
  auto ls = exp3_players(g, 5);
  std::vector<Learner*> one{ls[0].get()};
  FixedSequence src(std::vector<Vector>{Vector{0.0}});
  CHECK_THROWS_AS(run_game(g, one, src, 5, 0), InputError);
}

}  // TEST_SUITE
