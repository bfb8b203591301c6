#pragma once

// Kernel ridge regression with an append-only Cholesky factor.
//
//   mu_t(x)      = k_t(x)^T (K_t + lambda I)^{-1} y_t
//   sigma_t^2(x) = k(x,x) - k_t(x)^T (K_t + lambda I)^{-1} k_t(x)
//
// With L L^T = K_t + lambda I, v = L^{-1} k_t(x) and u = L^{-1} y_t we get
// mu = <v, u> and sigma^2 = k(x,x) - |v|^2. Because L is lower triangular, the
// first m entries of v and u are exactly the quantities for the first m data
// points, so a factor of size n answers posterior queries for every prefix
// m <= n. Snapshots exploit this: they are (factor, prefix) pairs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "cgame/errors.hpp"
#include "cgame/kernels.hpp"

namespace cgame {

struct DataSet {
  std::vector<Point> inputs;
  std::vector<double> targets;

  void append(Point x, double y) {
    inputs.push_back(std::move(x));
    targets.push_back(y);
  }
  std::size_t size() const { return inputs.size(); }
};

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;
};

// Shared counter of variance clamps (sigma^2 < 0 from rounding).
struct RegressionTelemetry {
  std::atomic<std::size_t> variance_clamps{0};
};

class FactorStore {
 public:
  FactorStore(KernelSpec spec, double lambda) : spec_(std::move(spec)), lambda_(lambda) {
    cum_log_diag_.push_back(0.0);
  }

  std::size_t size() const { return rows_.size(); }
  const KernelSpec& spec() const { return spec_; }
  double lambda() const { return lambda_; }
  const Point& input(std::size_t i) const { return inputs_[i]; }
  double target(std::size_t i) const { return targets_[i]; }

  // Copy of the first m rows.
  std::shared_ptr<FactorStore> clone_prefix(std::size_t m) const {
    auto out = std::make_shared<FactorStore>(spec_, lambda_);
    out->inputs_.assign(inputs_.begin(), inputs_.begin() + static_cast<std::ptrdiff_t>(m));
    out->prepared_.assign(prepared_.begin(), prepared_.begin() + static_cast<std::ptrdiff_t>(m));
    out->targets_.assign(targets_.begin(), targets_.begin() + static_cast<std::ptrdiff_t>(m));
    out->rows_.assign(rows_.begin(), rows_.begin() + static_cast<std::ptrdiff_t>(m));
    out->u_.assign(u_.begin(), u_.begin() + static_cast<std::ptrdiff_t>(m));
    out->cum_log_diag_.assign(cum_log_diag_.begin(),
                              cum_log_diag_.begin() + static_cast<std::ptrdiff_t>(m) + 1);
    return out;
  }

  // v[j] = (L_m^{-1} k_m(x))_j for j < m.
  void solve_kernel_column(const PreparedPoint& x, std::size_t m, std::vector<double>& v) const {
    v.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      const std::vector<double>& row = rows_[j];
      double s = kernel_eval(spec_, prepared_[j], x);
      for (std::size_t l = 0; l < j; ++l) s -= row[l] * v[l];
      v[j] = s / row[j];
    }
  }

  MeanVar query(const PreparedPoint& x, std::size_t m, RegressionTelemetry* telemetry) const {
    thread_local std::vector<double> v;
    solve_kernel_column(x, m, v);
    double mean = 0.0;
    double explained = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      mean += v[j] * u_[j];
      explained += v[j] * v[j];
    }
    double var = kernel_eval(spec_, x, x) - explained;
    if (var < 0.0) {
      var = 0.0;
      if (telemetry) telemetry->variance_clamps.fetch_add(1, std::memory_order_relaxed);
    }
    return {mean, var};
  }

  // 0.5 log det(I + K_m / lambda)
  double information_gain(std::size_t m) const {
    return cum_log_diag_[m] - 0.5 * static_cast<double>(m) * std::log(lambda_);
  }

  void append(const Point& x, double y) {
    PreparedPoint px = prepare(spec_, x);
    const std::size_t n = rows_.size();
    std::vector<double> row;
    solve_kernel_column(px, n, row);
    double explained = 0.0;
    for (double e : row) explained += e * e;
    double d2 = kernel_eval(spec_, px, px) + lambda_ - explained;
    if (!(d2 > 0.0) || !std::isfinite(d2)) {
      throw FactorizationError(n + 1, "regularized Gram matrix is not positive definite");
    }
    double diag = std::sqrt(d2);
    double s = y;
    for (std::size_t j = 0; j < n; ++j) s -= row[j] * u_[j];
    row.push_back(diag);

    inputs_.push_back(x);
    prepared_.push_back(std::move(px));
    targets_.push_back(y);
    rows_.push_back(std::move(row));
    u_.push_back(s / diag);
    cum_log_diag_.push_back(cum_log_diag_.back() + std::log(diag));
  }

  // Entry (i, j) of L, j <= i.
  double factor(std::size_t i, std::size_t j) const { return rows_[i][j]; }

 private:
  KernelSpec spec_;
  double lambda_;
  std::vector<Point> inputs_;
  std::vector<PreparedPoint> prepared_;
  std::vector<double> targets_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> u_;
  std::vector<double> cum_log_diag_;
};

// Immutable view of a model as it was at some point: the first `prefix` data
// points of a shared factor.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(std::shared_ptr<const FactorStore> store, std::size_t prefix,
           std::shared_ptr<RegressionTelemetry> telemetry)
      : store_(std::move(store)), prefix_(prefix), telemetry_(std::move(telemetry)) {}

  std::size_t size() const { return prefix_; }
  const KernelSpec& spec() const { return store_->spec(); }

  MeanVar mean_var(const PreparedPoint& x) const {
    return store_->query(x, prefix_, telemetry_.get());
  }
  MeanVar mean_var(const Point& x) const { return mean_var(prepare(store_->spec(), x)); }

  double information_gain() const { return store_->information_gain(prefix_); }

 private:
  std::shared_ptr<const FactorStore> store_;
  std::size_t prefix_ = 0;
  std::shared_ptr<RegressionTelemetry> telemetry_;
};

class PosteriorModel {
 public:
  // lambda > 0 (the regret guarantees assume lambda >= 1); `budget` caps the number of retained points (oldest dropped).
  explicit PosteriorModel(KernelSpec spec, double lambda = 1.0,
                          std::optional<std::size_t> budget = std::nullopt)
      : budget_(budget), telemetry_(std::make_shared<RegressionTelemetry>()) {
    validate(spec);
    if (!(lambda > 0.0)) throw InputError("regularization lambda must be > 0");
    if (budget_ && *budget_ == 0) throw InputError("data budget must be positive");
    store_ = std::make_shared<FactorStore>(std::move(spec), lambda);
  }

  std::size_t size() const { return size_; }
  const KernelSpec& spec() const { return store_->spec(); }
  double lambda() const { return store_->lambda(); }
  std::optional<std::size_t> budget() const { return budget_; }

  DataSet data() const {
    DataSet d;
    for (std::size_t i = 0; i < size_; ++i) d.append(store_->input(i), store_->target(i));
    return d;
  }

  PreparedPoint prepare(const Point& x) const { return cgame::prepare(store_->spec(), x); }

  MeanVar mean_var(const PreparedPoint& x) const {
    return store_->query(x, size_, telemetry_.get());
  }
  MeanVar mean_var(const Point& x) const { return mean_var(prepare(x)); }

  // min(mu + beta * sigma, 1)
  double ucb(const PreparedPoint& x, double beta) const {
    MeanVar mv = mean_var(x);
    return std::min(mv.mean + beta * std::sqrt(mv.variance), 1.0);
  }
  double ucb(const Point& x, double beta) const { return ucb(prepare(x), beta); }

  double information_gain() const { return store_->information_gain(size_); }

  std::size_t variance_clamps() const {
    return telemetry_->variance_clamps.load(std::memory_order_relaxed);
  }

  // L_t, for tests.
  double factor(std::size_t i, std::size_t j) const { return store_->factor(i, j); }

  Snapshot snapshot() const { return Snapshot(store_, size_, telemetry_); }

  void update(const Point& x, double y) {
    if (budget_ && size_ + 1 > *budget_) {
      // Drop the oldest points and refactor what is kept.
      const std::size_t keep = *budget_ - 1;
      auto fresh = std::make_shared<FactorStore>(store_->spec(), store_->lambda());
      for (std::size_t i = size_ - keep; i < size_; ++i) {
        fresh->append(store_->input(i), store_->target(i));
      }
      fresh->append(x, y);
      store_ = std::move(fresh);
      size_ = store_->size();
      return;
    }
    if (store_->size() != size_) {
      // Another copy extended the shared factor past our prefix.
      store_ = store_->clone_prefix(size_);
    }
    store_->append(x, y);
    ++size_;
  }

 private:
  std::shared_ptr<FactorStore> store_;
  std::size_t size_ = 0;
  std::optional<std::size_t> budget_;
  std::shared_ptr<RegressionTelemetry> telemetry_;
};

// ---------------------------------------------------------------------------
// Free-function surface.

inline PosteriorModel fit(const KernelSpec& spec, const DataSet& data, double lambda = 1.0) {
  if (data.inputs.size() != data.targets.size()) {
    throw InputError("fit: inputs and targets differ in length");
  }
  PosteriorModel model(spec, lambda);
  for (std::size_t i = 0; i < data.size(); ++i) model.update(data.inputs[i], data.targets[i]);
  return model;
}

inline PosteriorModel incremental_update(PosteriorModel model, const Point& x, double y) {
  model.update(x, y);
  return model;
}

inline MeanVar posterior_mean_var(const PosteriorModel& model, const Point& x) {
  return model.mean_var(x);
}

inline double ucb(const PosteriorModel& model, const Point& x, double beta) {
  if (!(beta >= 0.0)) throw InputError("ucb: beta must be >= 0");
  return model.ucb(x, beta);
}

inline double realized_information_gain(const PosteriorModel& model) {
  return model.information_gain();
}

// beta_t = B + noise * lambda^{-1/2} * sqrt(2 (gamma_{t-1} + log(c / delta))),
// with c = 2 for the two-sided (adversarial-context) schedule and c = 1 for
// the stochastic-context schedule.
inline double beta_schedule(double B, double noise_sigma, double lambda, double gamma_prev,
                            double delta, bool two_sided) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("beta_schedule: delta must be in (0,1)");
  if (!(B >= 0.0)) throw InputError("beta_schedule: B must be >= 0");
  if (!(gamma_prev >= 0.0)) throw InputError("beta_schedule: gamma must be >= 0");
  if (!(lambda > 0.0)) throw InputError("beta_schedule: lambda must be positive");
  const double log_term = std::log((two_sided ? 2.0 : 1.0) / delta);
  return B + noise_sigma / std::sqrt(lambda) * std::sqrt(2.0 * (gamma_prev + log_term));
}

}  // namespace cgame
