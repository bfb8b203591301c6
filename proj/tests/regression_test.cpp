#include <doctest.h>

#include <cmath>

#include "cgame/regression.hpp"
#include "oracles.hpp"

using namespace cgame;

namespace {

Point random_point(Rng& rng) {
  return {{uniform01(rng)}, {uniform01(rng)}, {uniform01(rng), uniform01(rng)}};
}

}  // namespace

TEST_SUITE("regression") {

TEST_CASE("empty model is the prior") {
  PosteriorModel m(KernelSpec::squared_exponential({1.0}), 1.0);
  MeanVar mv = m.mean_var(Point{{0.3}, {}, {}});
  CHECK(mv.mean == 0.0);
  CHECK(mv.variance == doctest::Approx(1.0));
  CHECK(realized_information_gain(m) == 0.0);
}

TEST_CASE("one point by hand") {
  // k(x,x) = 1, lambda = 1: mu = y / 2, sigma^2 = 1 - 1/2
  auto spec = KernelSpec::squared_exponential({1.0});
  PosteriorModel m(spec, 1.0);
  Point x{{0.5}, {}, {}};
  m.update(x, 0.8);
  MeanVar mv = m.mean_var(x);
  CHECK(mv.mean == doctest::Approx(0.4));
  CHECK(mv.variance == doctest::Approx(0.5));
  CHECK(realized_information_gain(m) == doctest::Approx(0.5 * std::log(2.0)));
}

TEST_CASE("matches the dense formulas") {
  Rng rng = derive_stream(11, StreamKind::setup);
  for (auto spec : {KernelSpec::squared_exponential({0.4}), KernelSpec::matern(MaternSmoothness::five_halves, 0.7),
                    KernelSpec::polynomial(3, 1.0, {Projection::joint, Normalization::unit})}) {
    for (double lambda : {0.5, 1.0, 3.0}) {
      DataSet d;
      for (int n = 0; n < 30; ++n) d.append(random_point(rng), uniform(rng, -1, 1));
      PosteriorModel m = fit(spec, d, lambda);
      for (int q = 0; q < 5; ++q) {
        Point x = random_point(rng);
        auto o = oracle::dense_posterior(spec, d.inputs, d.targets, lambda, x);
        MeanVar mv = posterior_mean_var(m, x);
        CHECK(std::abs(mv.mean - o.mean) < 1e-8);
        CHECK(std::abs(mv.variance - o.variance) < 1e-8);
      }
      CHECK(std::abs(realized_information_gain(m) - oracle::dense_information_gain(spec, d.inputs, lambda)) < 1e-6);
      CHECK(m.variance_clamps() == 0);
    }
  }
}

TEST_CASE("incremental equals batch") {
  Rng rng = derive_stream(12, StreamKind::setup);
  auto spec = KernelSpec::squared_exponential({0.5});
  DataSet d;
  PosteriorModel inc(spec, 1.0);
  for (int n = 0; n < 25; ++n) {
    Point x = random_point(rng);
    double y = uniform01(rng);
    d.append(x, y);
    inc = incremental_update(inc, x, y);
  }
  PosteriorModel batch = fit(spec, d, 1.0);
  for (int q = 0; q < 10; ++q) {
    Point x = random_point(rng);
    CHECK(inc.mean_var(x).mean == batch.mean_var(x).mean);
    CHECK(inc.mean_var(x).variance == batch.mean_var(x).variance);
  }
}

TEST_CASE("copies and snapshots are independent") {
  Rng rng = derive_stream(13, StreamKind::setup);
  auto spec = KernelSpec::squared_exponential({0.5});
  PosteriorModel a(spec, 1.0);
  for (int n = 0; n < 5; ++n) a.update(random_point(rng), uniform01(rng));
  Snapshot snap = a.snapshot();
  Point q = random_point(rng);
  MeanVar before = snap.mean_var(q);
  PosteriorModel b = a;
  b.update(random_point(rng), 1.0);
  a.update(random_point(rng), 0.0);
  CHECK(snap.mean_var(q).mean == before.mean);
  CHECK(a.size() == 6);
  CHECK(b.size() == 6);
  DataSet da = a.data(), db = b.data();
  auto oa = oracle::dense_posterior(spec, da.inputs, da.targets, 1.0, q);
  auto ob = oracle::dense_posterior(spec, db.inputs, db.targets, 1.0, q);
  CHECK(std::abs(a.mean_var(q).mean - oa.mean) < 1e-10);
  CHECK(std::abs(b.mean_var(q).mean - ob.mean) < 1e-10);
}

TEST_CASE("data budget keeps the newest points") {
  Rng rng = derive_stream(14, StreamKind::setup);
  auto spec = KernelSpec::squared_exponential({0.5});
  PosteriorModel m(spec, 1.0, 4);
  DataSet all;
  for (int n = 0; n < 9; ++n) {
    Point x = random_point(rng);
    double y = uniform01(rng);
    all.append(x, y);
    m.update(x, y);
  }
  CHECK(m.size() == 4);
  std::vector<Point> X(all.inputs.end() - 4, all.inputs.end());
  std::vector<double> y(all.targets.end() - 4, all.targets.end());
  Point q = random_point(rng);
  CHECK(std::abs(m.mean_var(q).mean - oracle::dense_posterior(spec, X, y, 1.0, q).mean) < 1e-10);
  CHECK_THROWS_AS(PosteriorModel(spec, 1.0, 0), InputError);
}

TEST_CASE("ucb is capped at one") {
  PosteriorModel m(KernelSpec::squared_exponential({1.0}), 1.0);
  Point x{{0.0}, {}, {}};
  CHECK(ucb(m, x, 2.0) == 1.0);
  m.update(x, 0.2);
  MeanVar mv = m.mean_var(x);
  CHECK(ucb(m, x, 0.1) == doctest::Approx(mv.mean + 0.1 * std::sqrt(mv.variance)));
  CHECK_THROWS_AS(ucb(m, x, -1.0), InputError);
}

TEST_CASE("beta schedule") {
  CHECK(beta_schedule(1.0, 0.0, 1.0, 5.0, 0.1, true) == 1.0);
  double delta = 2.0 / std::exp(1.0);  // log(2 / delta) = 1
  CHECK(beta_schedule(1.0, 1.0, 1.0, 0.0, delta, true) == doctest::Approx(1.0 + std::sqrt(2.0)));
  CHECK(beta_schedule(1.0, 1.0, 4.0, 0.0, delta, true) == doctest::Approx(1.0 + 0.5 * std::sqrt(2.0)));
  CHECK_THROWS_AS(beta_schedule(1.0, 1.0, 1.0, 0.0, 1.5, true), InputError);
  CHECK_THROWS_AS(beta_schedule(-1.0, 1.0, 1.0, 0.0, 0.1, true), InputError);
}

TEST_CASE("bad inputs") {
  auto spec = KernelSpec::squared_exponential({1.0});
  CHECK_THROWS_AS(PosteriorModel(spec, 0.0), InputError);
  DataSet d;
  d.inputs.push_back(Point{{0.0}, {}, {}});
  CHECK_THROWS_AS(fit(spec, d, 1.0), InputError);
  PosteriorModel m(spec, 1.0);
  m.update(Point{{0.0}, {}, {}}, 1.0);
  CHECK_THROWS_AS(m.mean_var(Point{{0.0, 1.0}, {}, {}}), InputError);
}

}  // TEST_SUITE
