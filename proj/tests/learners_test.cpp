#include <doctest.h>

#include <cmath>

#include "cgame/baselines.hpp"
#include "cgame/cgpmw.hpp"
#include "cgame/epsilon_net.hpp"
#include "cgame/mw.hpp"

using namespace cgame;

namespace {

std::vector<Vector> encodings(std::size_t K) {
  std::vector<Vector> f;
  for (std::size_t a = 0; a < K; ++a) f.push_back({static_cast<double>(a) / static_cast<double>(K - 1)});
  return f;
}

CgpmwOptions opts(ContextStrategy s) {
  CgpmwOptions o;
  o.strategy = s;
  o.kernel = KernelSpec::squared_exponential({0.5});
  o.horizon = 50;
  o.radius = 0.3;
  return o;
}

}  // namespace

TEST_SUITE("mw") {

TEST_CASE("softmax and rates") {
  Vector p = softmax(Vector{0.0, std::log(3.0)}, 1.0);
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.75));
  Vector big = softmax(Vector{1e6, 1e6 + 1}, 1.0);
  CHECK(big[1] == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))));
  CHECK(rate_finite_or_net(4, 1) == doctest::Approx(2.0 * std::sqrt(std::log(4.0))));
  CHECK(rate_stochastic(4, 8) == doctest::Approx(std::sqrt(std::log(4.0))));
  CHECK_THROWS_AS(rate_finite_or_net(3, 0), InputError);
  CHECK_THROWS_AS(rate_stochastic(3, 0), InputError);
  MWState s(3);
  CHECK(mw_distribution(s, 0.5) == uniform_distribution(3));
  CHECK_THROWS_AS(mw_distribution(s, 0.0), InputError);
  CHECK_THROWS_AS(s.add(Vector{1.0}), InputError);
}

TEST_CASE("regret audit by hand") {
  // two rounds, K = 2: p1 uniform, p2 = softmax(eta * (1, 0))
  std::vector<Vector> g = {{1, 0}, {1, 0}};
  Vector eta = {1.0, 1.0};
  double p2 = std::exp(1.0) / (1 + std::exp(1.0));
  CHECK(mw_regret_audit(g, eta, 0) == doctest::Approx(2.0 - 0.5 - p2));
  CHECK(mw_regret_bound(2, eta) == doctest::Approx(std::log(2.0) + 0.25));
  CHECK_THROWS_AS(mw_regret_audit(g, Vector{1.0}, 0), InputError);
  CHECK_THROWS_AS(mw_regret_audit(g, eta, 2), InputError);
}

}  // TEST_SUITE

TEST_SUITE("epsilon_net") {

TEST_CASE("assignment") {
  EpsilonNet net(0.5, 2);
  CHECK(epsilon_net_assign(net, Vector{0.0, 0.0}).created);
  auto a = epsilon_net_assign(net, Vector{0.2, 0.3});
  CHECK(!a.created);
  CHECK(a.index == 0);
  CHECK(epsilon_net_assign(net, Vector{0.3, 0.3}).created);
  CHECK(net.size() == 2);
  // equidistant from both centers: the earlier one wins
  EpsilonNet line(1.0, 2);
  epsilon_net_assign(line, Vector{0.0});
  epsilon_net_assign(line, Vector{1.5});
  CHECK(epsilon_net_assign(line, Vector{0.75}).index == 0);
  CHECK_THROWS_AS(EpsilonNet(0.0, 2), InputError);
}

TEST_CASE("default radius") {
  CHECK(default_radius(1.0, 1.0, 1000, 1) == doctest::Approx(std::pow(1000.0, -1.0 / 3.0)));
  CHECK(default_radius(2.0, 2.0, 16, 2) == doctest::Approx(0.5 * 0.5));
  CHECK_THROWS_AS(default_radius(0.0, 1.0, 10, 1), InputError);
}

}  // TEST_SUITE

TEST_SUITE("cgpmw") {

TEST_CASE("first round is uniform and protocol is enforced") {
  for (auto s : {ContextStrategy::finite, ContextStrategy::net, ContextStrategy::stochastic}) {
    CgpmwLearner l(encodings(3), opts(s));
    Rng rng = derive_stream(1, StreamKind::choice);
    Choice c = l.choose(Vector{0.5}, rng);
    CHECK(c.distribution == uniform_distribution(3));
    CHECK_THROWS_AS(l.choose(Vector{0.5}, rng), ProtocolError);
    CHECK_THROWS_AS(l.feedback(Vector{0.5}, (c.action + 1) % 3, Vector{0.0}, 0.5), ProtocolError);
    l.feedback(Vector{0.5}, c.action, Vector{0.0}, 0.5);
    CHECK_THROWS_AS(l.feedback(Vector{0.5}, c.action, Vector{0.0}, 0.5), ProtocolError);
    CHECK(l.rounds() == 1);
  }
}

TEST_CASE("finite strategy keeps one learner per context") {
  auto o = opts(ContextStrategy::finite);
  o.record_scores = true;
  CgpmwLearner l(encodings(2), o);
  Rng rng = derive_stream(2, StreamKind::choice);
  for (int t = 0; t < 6; ++t) {
    Vector z{t % 2 == 0 ? 0.1 : 0.9};
    Choice c = l.choose(z, rng);
    l.feedback(z, c.action, Vector{0.0}, c.action == 0 ? 1.0 : 0.0);
  }
  CHECK(l.finite_groups() == 2);
  CHECK(l.finite_state(Vector{0.1})->updates == 3);
  CHECK(l.finite_state(Vector{0.5}) == nullptr);
  // unseen context: uniform
  CHECK(l.distribution(Vector{0.5}) == uniform_distribution(2));
  for (const auto& r : l.score_log()) {
    for (double g : r.scores) CHECK(g <= 1.0);
  }
}

TEST_CASE("scores use the model before the update") {
  auto o = opts(ContextStrategy::finite);
  o.record_scores = true;
  o.beta.constant = 0.0;
  CgpmwLearner l(encodings(2), o);
  Rng rng = derive_stream(3, StreamKind::choice);
  Choice c = l.choose(Vector{0.2}, rng);
  l.feedback(Vector{0.2}, c.action, Vector{1.0}, 0.9);
  // beta = 0 and an empty model: both scores are the prior mean 0
  CHECK(l.score_log()[0].scores == Vector{0.0, 0.0});
}

TEST_CASE("net strategy opens balls by distance") {
  auto o = opts(ContextStrategy::net);
  o.radius = 0.25;
  CgpmwLearner l(encodings(2), o);
  Rng rng = derive_stream(4, StreamKind::choice);
  for (double z : {0.0, 0.1, 0.2, 0.5, 0.6, 1.0}) {
    Choice c = l.choose(Vector{z}, rng);
    l.feedback(Vector{z}, c.action, Vector{0.0}, 0.5);
  }
  CHECK(l.net().size() == 3);
  CHECK(l.diagnostics().at("balls") == 3);
}

TEST_CASE("known contexts match the full history") {
  auto a = opts(ContextStrategy::stochastic);
  auto b = a;
  b.known_contexts = std::vector<Vector>{{0.2}, {0.7}};
  CgpmwLearner full(encodings(3), a), known(encodings(3), b);
  Rng r1 = derive_stream(5, StreamKind::choice), r2 = r1;
  Rng nature = derive_stream(5, StreamKind::nature);
  for (int t = 0; t < 20; ++t) {
    Vector z{uniform01(nature) < 0.5 ? 0.2 : 0.7};
    Vector opp{uniform01(nature)};
    Choice c1 = full.choose(z, r1), c2 = known.choose(z, r2);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(c1.distribution[k] - c2.distribution[k]) < 1e-12);
    REQUIRE(c1.action == c2.action);
    double y = 0.3 + 0.2 * static_cast<double>(c1.action);
    full.feedback(z, c1.action, opp, y);
    known.feedback(z, c2.action, opp, y);
  }
  Rng rng;
  CHECK_THROWS_AS(known.choose(Vector{0.5}, rng), InputError);
}

TEST_CASE("learns the better action") {
  auto o = opts(ContextStrategy::finite);
  o.eta_rule = EtaRule::constant;
  o.eta_constant = 1.0;
  o.beta.constant = 0.5;
  CgpmwLearner l(encodings(3), o);
  Rng rng = derive_stream(6, StreamKind::choice);
  Choice c;
  for (int t = 0; t < 60; ++t) {
    c = l.choose(Vector{0.0}, rng);
    l.feedback(Vector{0.0}, c.action, Vector{0.0}, c.action == 2 ? 0.9 : 0.1);
  }
  c = l.choose(Vector{0.0}, rng);
  CHECK(c.distribution[2] > 0.9);
}

TEST_CASE("theory beta grows with the information gain") {
  auto o = opts(ContextStrategy::finite);
  o.beta.theory = true;
  o.beta.B = 0.5;
  o.beta.noise = 0.1;
  CgpmwLearner l(encodings(2), o);
  double b0 = l.current_beta();
  CHECK(b0 == doctest::Approx(0.5 + 0.1 * std::sqrt(2.0 * std::log(2.0 / 0.1))));
  Rng rng;
  Choice c = l.choose(Vector{0.3}, rng);
  l.feedback(Vector{0.3}, c.action, Vector{0.0}, 0.5);
  CHECK(l.current_beta() > b0);
}

TEST_CASE("bad options") {
  CHECK_THROWS_AS(CgpmwLearner({}, opts(ContextStrategy::finite)), InputError);
  auto o = opts(ContextStrategy::stochastic);
  o.horizon = 0;
  CHECK_THROWS_AS(CgpmwLearner(encodings(2), o), InputError);
  auto k = opts(ContextStrategy::finite);
  k.known_contexts = std::vector<Vector>{{0.0}};
  CHECK_THROWS_AS(CgpmwLearner(encodings(2), k), InputError);
  auto e = opts(ContextStrategy::finite);
  e.eta_rule = EtaRule::constant;
  e.eta_constant = -1.0;
  CHECK_THROWS_AS(CgpmwLearner(encodings(2), e), InputError);
}

}  // TEST_SUITE

TEST_SUITE("baselines") {

TEST_CASE("no-learning plays the first route") {
  NoLearning l(4);
  Rng rng;
  Choice c = l.choose(Vector{}, rng);
  CHECK(c.action == 0);
  CHECK(c.distribution == Vector{1, 0, 0, 0});
  CHECK_THROWS_AS(l.feedback(Vector{}, 1, Vector{}, 0.0), ProtocolError);
  l.feedback(Vector{}, 0, Vector{}, 0.0);
  CHECK_THROWS_AS(l.feedback(Vector{}, 0, Vector{}, 0.0), ProtocolError);
}

TEST_CASE("exp3 update by hand") {
  Exp3Weights w{{0.0, 0.0}, 0};
  exp3_step(w, 1, 0.5, 0.25);
  CHECK(w.estimates == Vector{0.0, 2.0});
  Vector p = exp3_distribution(w, 0.5, 0.2);
  double q = std::exp(1.0) / (1 + std::exp(1.0));
  CHECK(p[1] == doctest::Approx(0.8 * q + 0.1));
  CHECK_THROWS_AS(exp3_step(w, 0, 0.5, 0.0), ProtocolError);
  CHECK(exp3_default_eta(2, 100) == doctest::Approx(std::sqrt(std::log(2.0) / 100.0)));
}

TEST_CASE("s-exp3 keeps a copy per context") {
  Exp3 l(2, Exp3Options{0.5, 0.0, 10, true});
  Rng rng = derive_stream(7, StreamKind::choice);
  for (double z : {0.1, 0.2, 0.1}) {
    Choice c = l.choose(Vector{z}, rng);
    l.feedback(Vector{z}, c.action, Vector{}, 1.0);
  }
  CHECK(l.copy_for(Vector{0.1})->updates == 2);
  CHECK(l.copy_for(Vector{0.3}) == nullptr);
  CHECK(l.diagnostics().at("copies") == 2);
  Exp3 plain(2, Exp3Options{0.5, 0.0, 10, false});
  Choice c = plain.choose(Vector{0.1}, rng);
  plain.feedback(Vector{0.1}, c.action, Vector{}, 1.0);
  CHECK(plain.copy_for(Vector{0.9}) != nullptr);
}

TEST_CASE("robust lin exp3 estimate by hand") {
  // one context z = 1 (scale 1): phi = (1, 1), Sigma = phi phi^T, Sigma^+ phi = phi / 2
  RobustLinExp3Options o;
  o.eta = 1.0;
  o.gamma = 0.5;
  o.contexts = ContextDistribution{{{1.0}}, {}};
  RobustLinExp3 l(2, o);
  CHECK(l.policy(Vector{1.0}) == Vector{0.5, 0.5});
  Rng rng = derive_stream(8, StreamKind::choice);
  Choice c = l.choose(Vector{1.0}, rng);
  l.feedback(Vector{1.0}, c.action, Vector{}, 0.0);
  // theta_a = phi / 2 * 1 / 0.5, so <phi, theta_a> = 2 for the played action
  Vector p = l.policy(Vector{1.0});
  double played = 0.5 * std::exp(-2.0) / (1 + std::exp(-2.0)) + 0.25;
  CHECK(p[c.action] == doctest::Approx(played));
  CHECK_THROWS_AS(RobustLinExp3(2, RobustLinExp3Options{}), ConfigError);
}

TEST_CASE("gpmw ignores the context") {
  auto l = make_gpmw(encodings(2), KernelSpec::squared_exponential({0.5}), 20);
  CHECK(l->kind() == "gpmw");
  Rng rng = derive_stream(9, StreamKind::choice);
  for (double z : {0.1, 0.9, 0.4}) {
    Choice c = l->choose(Vector{z}, rng);
    l->feedback(Vector{z}, c.action, Vector{0.5}, c.action == 0 ? 1.0 : 0.0);
  }
  auto* g = dynamic_cast<CgpmwLearner*>(l.get());
  REQUIRE(g);
  CHECK(g->finite_groups() == 1);
  CHECK(g->distribution(Vector{0.1}) == g->distribution(Vector{0.77}));
}

}  // TEST_SUITE
