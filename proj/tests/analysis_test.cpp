#include <doctest.h>

#include <cmath>

#include "cgame/analysis.hpp"
#include "oracles.hpp"

using namespace cgame;

TEST_SUITE("analysis") {

TEST_CASE("regret by hand") {
  // one player, two actions, rewards independent of the (absent) opponents
  TabularGame g({2}, {{0.0}, {1.0}}, {{{0.25}, {0.75}}, {{1.0}, {0.0}}});
  GameTrace t = new_trace(g);
  auto push = [&](double z, std::size_t a) {
    TraceRow r;
    r.context = {z};
    r.joint = {a};
    g.rewards(r.joint, r.context, r.rewards);
    r.observed = r.rewards;
    t.rows.push_back(r);
  };
  push(0.0, 0);
  push(1.0, 1);
  push(0.0, 1);
  RegretResult res = contextual_regret(g, t, 0);
  // best policy: z=0 -> 1, z=1 -> 0: 0.75 + 1 + 0.75
  CHECK(res.best_value == 2.5);
  CHECK(res.realized == 1.0);
  CHECK(res.regret == 1.5);
  CHECK(res.policy == std::vector<std::size_t>{1, 0});
  CHECK(oracle::brute_force_regret(g, t, 0) == 1.5);
}

TEST_CASE("regret equals policy enumeration") {
  Rng rng = derive_stream(21, StreamKind::setup);
  for (int n = 0; n < 200; ++n) {
    std::size_t K = 1 + uniform_index(rng, 3), Z = 1 + uniform_index(rng, 3), T = 1 + uniform_index(rng, 6);
    TabularGame g = oracle::random_tabular(rng, {K, 2}, Z, true);
    GameTrace t = oracle::random_trace(g, T, rng);
    for (std::size_t i = 0; i < 2; ++i) CHECK(contextual_regret(g, t, i).regret == oracle::brute_force_regret(g, t, i));
  }
}

TEST_CASE("cce gap equals the largest average regret") {
  Rng rng = derive_stream(22, StreamKind::setup);
  for (int n = 0; n < 50; ++n) {
    TabularGame g = oracle::random_tabular(rng, {2, 3, 2}, 3);
    GameTrace t = oracle::random_trace(g, 40, rng);
    double worst = -1e300;
    for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, contextual_regret(g, t, i).regret / 40.0);
    CHECK(std::abs(cce_gap(g, t).epsilon - worst) < 1e-12);
  }
}

TEST_CASE("empirical policy") {
  Rng rng = derive_stream(23, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 2}, 2);
  GameTrace t = oracle::random_trace(g, 30, rng);
  EmpiricalPolicy rho = empirical_policy(t);
  std::size_t total = 0;
  for (const auto& e : rho.entries) {
    double mass = 0.0;
    for (const auto& [a, p] : rho.at(e.context)) mass += p;
    CHECK(mass == doctest::Approx(1.0));
    total += e.visits;
  }
  CHECK(total == 30);
  // unseen context: uniform over the 4 joint actions
  CHECK(rho.at(Vector{9.0}).size() == 4);
}

TEST_CASE("c-zeta gap") {
  Rng rng = derive_stream(24, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 2}, 2);
  GameTrace t = oracle::random_trace(g, 60, rng);
  EmpiricalPolicy rho = empirical_policy(t);
  // with zeta equal to the empirical context frequencies, the two gaps agree
  ContextDistribution zeta;
  for (const auto& e : rho.entries) {
    zeta.support.push_back(e.context);
    zeta.weights.push_back(static_cast<double>(e.visits) / 60.0);
  }
  CHECK(c_zeta_cce_gap(rho, g, zeta).epsilon == doctest::Approx(cce_gap(g, t).epsilon));
  CHECK_THROWS_AS(c_zeta_cce_gap(rho, g, ContextDistribution{{{0.0}}, {}}), InputError);
  CHECK_THROWS_AS(c_zeta_cce_gap(rho, g, ContextDistribution{g.contexts(), {0.2, 0.2}}), InputError);
  double b = c_zeta_cce_bound(2, 4, 0.1, 100, 0.05);
  CHECK(b == doctest::Approx(2 * std::sqrt(std::log(8.0) / 2 + std::log(20.0) / 200) + 0.05));
}

TEST_CASE("optimal welfare") {
  Rng rng = derive_stream(25, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {3, 2}, 2);
  GameTrace t = oracle::random_trace(g, 20, rng);
  WelfareOptimum opt = optimal_contextual_welfare(g, trace_contexts(t));
  double direct = 0.0;
  JointSpace s(g);
  for (const auto& row : t.rows) {
    double best = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      Vector r;
      g.rewards(s.decode(k), row.context, r);
      best = std::max(best, r[0] + r[1]);
    }
    direct += best / 20.0;
  }
  CHECK(opt.value == doctest::Approx(direct));
  CHECK(average_welfare(t) <= opt.value + 1e-12);
}

TEST_CASE("smoothness") {
  // constant rewards: (1, 0)-smooth with equality
  TabularGame flat({2, 2}, {{0.0}}, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}});
  CHECK(smoothness_verify(flat, {0.0}, 1.0, 0.0).ok);
  CHECK(max_smoothness_lambda(flat, {0.0}, 0.0) == doctest::Approx(1.0));
  // deviating from (0,0) to (1,1) alone earns nothing, jointly it earns 1 each
  TabularGame coord({2, 2}, {{0.0}}, {{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}}});
  SmoothnessCheck c = smoothness_verify(coord, {0.0}, 1.0, 0.0);
  REQUIRE(!c.ok);
  CHECK(c.witness->a1 == JointAction{0, 0});
  CHECK(c.witness->a2 == JointAction{1, 1});
  CHECK(smoothness_verify(coord, {0.0}, 0.0, 0.0).ok);
  Rng rng = derive_stream(26, StreamKind::setup);
  for (int n = 0; n < 20; ++n) {
    TabularGame g = oracle::random_tabular(rng, {2, 3}, 1, false, 0.1);
    double lam = max_smoothness_lambda(g, {0.0}, 1.0);
    CHECK(oracle::brute_force_smooth(g, {0.0}, lam, 1.0));
    CHECK(!oracle::brute_force_smooth(g, {0.0}, lam + 1e-6, 1.0));
    CHECK(smoothness_verify(g, {0.0}, lam, 1.0).ok);
  }
}

TEST_CASE("efficiency bound") {
  TabularGame flat({2, 2}, {{0.0}}, {{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}}});
  Rng rng = derive_stream(27, StreamKind::setup);
  GameTrace t = oracle::random_trace(flat, 10, rng);
  SmoothnessCertificate cert{{{{0.0}, 1.0, 0.0}}};
  verify_certificate(flat, cert);
  Vector zero{0.0, 0.0};
  EfficiencyBound b = efficiency_bound(flat, t, cert, zero);
  CHECK(b.lower_bound == doctest::Approx(b.opt));
  CHECK(b.realized == doctest::Approx(b.opt));
  CHECK(b.holds);
  SmoothnessCertificate bad{{{{0.0}, 2.0, 0.0}}};
  CHECK_THROWS_AS(verify_certificate(flat, bad), InputError);
  SmoothnessCertificate missing{{{{1.0}, 1.0, 0.0}}};
  CHECK_THROWS_AS(efficiency_bound(flat, t, missing, zero), InputError);
}

TEST_CASE("certificate aggregation") {
  TabularGame g({1}, {{0.0}, {1.0}}, {{{0.5}}, {{0.5}}});
  GameTrace t = new_trace(g);
  for (double z : {0.0, 1.0}) {
    TraceRow r;
    r.context = {z};
    r.joint = {0};
    r.rewards = {0.5};
    r.observed = {0.5};
    t.rows.push_back(r);
  }
  SmoothnessCertificate cert{{{{0.0}, 0.5, 1.0}, {{1.0}, 0.8, 0.2}}};
  CHECK(cert.aggregate(t) == std::pair<double, double>{0.8, 0.2});
  CHECK(cert.aggregate(t, true) == std::pair<double, double>{0.5, 1.0});
}

TEST_CASE("report") {
  Rng rng = derive_stream(28, StreamKind::setup);
  TabularGame g = oracle::random_tabular(rng, {2, 2}, 2);
  GameTrace t = oracle::random_trace(g, 25, rng);
  ReportOptions o;
  o.zeta = ContextDistribution{g.contexts(), {}};
  nlohmann::json j = analysis_report(g, t, o);
  CHECK(j.at("rounds") == 25);
  CHECK(j.at("replay_matches") == true);
  CHECK(j.at("cce_gap_matches_regret") == true);
  CHECK(j.at("regret").size() == 2);
  CHECK(j.contains("c_zeta_cce_gap"));
  CHECK(j.at("average_welfare").get<double>() <= j.at("optimal_welfare").get<double>() + 1e-12);
  CHECK_THROWS_AS(analysis_report(g, new_trace(g)), InputError);
}

}  // TEST_SUITE
