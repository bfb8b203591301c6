#pragma once

// Positive-semidefinite kernels over context-action points.
//
// A point is the raw triple (own-action vector, opponents-aggregate vector,
// context vector). Every base kernel reads a projection of that triple,
// optionally normalized so that the kernel value stays in [-1, 1]. Products
// of kernels over different projections give the composite kernels used by
// the routing experiment, e.g. linear(own) * polynomial((own+opp)/context).

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cgame/errors.hpp"
#include "cgame/numeric.hpp"

namespace cgame {

struct Point {
  Vector own;
  Vector opponents;
  Vector context;
};

enum class Projection {
  own,
  opponents,
  context,
  own_plus_opponents,
  load_over_context,  // (own + opponents) / context, elementwise
  own_and_opponents,  // concatenation
  joint,              // concatenation of all three
};

enum class Normalization {
  none,
  unit,   // x / |x|
  scale,  // x / s, then capped at unit norm
};

struct InputMap {
  Projection projection = Projection::joint;
  Normalization normalization = Normalization::none;
  double scale = 1.0;
};

enum class MaternSmoothness { half, three_halves, five_halves };

struct KernelSpec;

struct LinearKernel {};

// ((<x,x'> + offset) / (1 + offset))^degree
struct PolynomialKernel {
  int degree = 4;
  double offset = 1.0;
};

// One lengthscale means isotropic; otherwise one per input dimension.
struct SquaredExponentialKernel {
  std::vector<double> lengthscales{1.0};
};

struct MaternKernel {
  MaternSmoothness smoothness = MaternSmoothness::five_halves;
  double lengthscale = 1.0;
};

struct ProductKernel {
  std::vector<KernelSpec> factors;
};

struct KernelSpec {
  using Kind = std::variant<LinearKernel, PolynomialKernel, SquaredExponentialKernel,
                            MaternKernel, ProductKernel>;
  Kind kind;
  // Ignored for products: each factor carries its own input map.
  InputMap input;
  // Signal variance in (0, 1]; multiplies the value.
  double variance = 1.0;

  static KernelSpec linear(InputMap in = {}) { return {LinearKernel{}, in}; }
  static KernelSpec polynomial(int degree, double offset, InputMap in = {}) {
    return {PolynomialKernel{degree, offset}, in};
  }
  static KernelSpec squared_exponential(std::vector<double> lengthscales, InputMap in = {}) {
    return {SquaredExponentialKernel{std::move(lengthscales)}, in};
  }
  static KernelSpec matern(MaternSmoothness nu, double lengthscale, InputMap in = {}) {
    return {MaternKernel{nu, lengthscale}, in};
  }
  static KernelSpec product(std::vector<KernelSpec> factors) {
    return {ProductKernel{std::move(factors)}, {}};
  }
};

namespace detail {

inline void require_same_size(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw InputError(std::string("projection ") + what + ": size mismatch " +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
}

inline Vector project(const Point& x, Projection p) {
  switch (p) {
    case Projection::own:
      return x.own;
    case Projection::opponents:
      return x.opponents;
    case Projection::context:
      return x.context;
    case Projection::own_plus_opponents: {
      require_same_size(x.own, x.opponents, "own+opponents");
      Vector out(x.own.size());
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.own[i] + x.opponents[i];
      return out;
    }
    case Projection::load_over_context: {
      require_same_size(x.own, x.opponents, "(own+opponents)/context");
      require_same_size(x.own, x.context, "(own+opponents)/context");
      Vector out(x.own.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(x.context[i] > 0.0)) {
          throw InputError("projection (own+opponents)/context: non-positive context entry");
        }
        out[i] = (x.own[i] + x.opponents[i]) / x.context[i];
      }
      return out;
    }
    case Projection::own_and_opponents: {
      Vector out(x.own);
      out.insert(out.end(), x.opponents.begin(), x.opponents.end());
      return out;
    }
    case Projection::joint: {
      Vector out(x.own);
      out.insert(out.end(), x.opponents.begin(), x.opponents.end());
      out.insert(out.end(), x.context.begin(), x.context.end());
      return out;
    }
  }
  throw InputError("unknown projection");
}

inline void normalize(Vector& v, const InputMap& in) {
  switch (in.normalization) {
    case Normalization::none:
      return;
    case Normalization::unit: {
      double n = norm2(v);
      if (n > 0.0) {
        for (double& e : v) e /= n;
      }
      return;
    }
    case Normalization::scale: {
      for (double& e : v) e /= in.scale;
      double n = norm2(v);
      if (n > 1.0) {
        for (double& e : v) e /= n;
      }
      return;
    }
  }
}

inline double matern_value(MaternSmoothness nu, double r) {
  switch (nu) {
    case MaternSmoothness::half:
      return std::exp(-r);
    case MaternSmoothness::three_halves: {
      double s = std::sqrt(3.0) * r;
      return (1.0 + s) * std::exp(-s);
    }
    case MaternSmoothness::five_halves: {
      double s = std::sqrt(5.0) * r;
      return (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
  }
  return 0.0;
}

template <class Visitor>
void for_each_leaf(const KernelSpec& spec, Visitor&& visit) {
  if (const auto* prod = std::get_if<ProductKernel>(&spec.kind)) {
    for (const auto& f : prod->factors) for_each_leaf(f, visit);
  } else {
    visit(spec);
  }
}

}  // namespace detail

// Throws InputError on malformed parameters.
inline void validate(const KernelSpec& spec) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PolynomialKernel>) {
          if (k.degree < 1) throw InputError("polynomial kernel: degree must be >= 1");
          if (!(k.offset >= 0.0)) throw InputError("polynomial kernel: offset must be >= 0");
        } else if constexpr (std::is_same_v<K, SquaredExponentialKernel>) {
          if (k.lengthscales.empty()) throw InputError("SE kernel: no lengthscale");
          for (double l : k.lengthscales) {
            if (!(l > 0.0)) throw InputError("SE kernel: lengthscales must be positive");
          }
        } else if constexpr (std::is_same_v<K, MaternKernel>) {
          if (!(k.lengthscale > 0.0)) throw InputError("Matern kernel: lengthscale must be positive");
        } else if constexpr (std::is_same_v<K, ProductKernel>) {
          if (k.factors.empty()) throw InputError("product kernel: no factors");
          for (const auto& f : k.factors) validate(f);
        }
      },
      spec.kind);
  if (!(spec.variance > 0.0 && spec.variance <= 1.0)) throw InputError("kernel variance must be in (0, 1]");
  if (spec.input.normalization == Normalization::scale && !(spec.input.scale > 0.0)) {
    throw InputError("input map: scale must be positive");
  }
}

// A point with every leaf projection computed and normalized once. Models
// cache these for their training inputs.
struct PreparedPoint {
  std::vector<Vector> leaves;
};

inline PreparedPoint prepare(const KernelSpec& spec, const Point& x) {
  PreparedPoint out;
  detail::for_each_leaf(spec, [&](const KernelSpec& leaf) {
    Vector v = detail::project(x, leaf.input.projection);
    detail::normalize(v, leaf.input);
    out.leaves.push_back(std::move(v));
  });
  return out;
}

namespace detail {

inline double eval_leaf(const KernelSpec& leaf, const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw InputError("kernel_eval: dimension mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          return dot(a, b);
        } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
          double base = (dot(a, b) + k.offset) / (1.0 + k.offset);
          double r = 1.0;
          for (int i = 0; i < k.degree; ++i) r *= base;
          return r;
        } else if constexpr (std::is_same_v<K, SquaredExponentialKernel>) {
          const bool iso = k.lengthscales.size() == 1;
          if (!iso && k.lengthscales.size() != a.size()) {
            throw InputError("SE kernel: " + std::to_string(k.lengthscales.size()) +
                             " lengthscales for input of dimension " + std::to_string(a.size()));
          }
          double s = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) {
            double d = (a[i] - b[i]) / (iso ? k.lengthscales[0] : k.lengthscales[i]);
            s += d * d;
          }
          return std::exp(-0.5 * s);
        } else if constexpr (std::is_same_v<K, MaternKernel>) {
          double s = 0.0;
          for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            s += d * d;
          }
          return matern_value(k.smoothness, std::sqrt(s) / k.lengthscale);
        } else {
          throw InputError("eval_leaf called on a product");
        }
      },
      leaf.kind);
}

inline double eval_prepared(const KernelSpec& spec, const PreparedPoint& a, const PreparedPoint& b,
                            std::size_t& leaf) {
  if (const auto* prod = std::get_if<ProductKernel>(&spec.kind)) {
    double v = spec.variance;
    for (const auto& f : prod->factors) v *= eval_prepared(f, a, b, leaf);
    return v;
  }
  double v = eval_leaf(spec, a.leaves.at(leaf), b.leaves.at(leaf));
  ++leaf;
  return spec.variance == 1.0 ? v : spec.variance * v;
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const PreparedPoint& a, const PreparedPoint& b) {
  std::size_t leaf = 0;
  return detail::eval_prepared(spec, a, b, leaf);
}

inline double kernel_eval(const KernelSpec& spec, const Point& x, const Point& y) {
  return kernel_eval(spec, prepare(spec, x), prepare(spec, y));
}

// ---------------------------------------------------------------------------
// JSON

inline std::string to_string(Projection p) {
  switch (p) {
    case Projection::own: return "own";
    case Projection::opponents: return "opponents";
    case Projection::context: return "context";
    case Projection::own_plus_opponents: return "own+opponents";
    case Projection::load_over_context: return "(own+opponents)/context";
    case Projection::own_and_opponents: return "own,opponents";
    case Projection::joint: return "joint";
  }
  return "?";
}

inline Projection projection_from_string(const std::string& s) {
  for (auto p : {Projection::own, Projection::opponents, Projection::context,
                 Projection::own_plus_opponents, Projection::load_over_context,
                 Projection::own_and_opponents, Projection::joint}) {
    if (to_string(p) == s) return p;
  }
  throw InputError("unknown projection '" + s + "'");
}

inline void to_json(nlohmann::json& j, const InputMap& in) {
  j = {{"projection", to_string(in.projection)}};
  switch (in.normalization) {
    case Normalization::none: j["normalization"] = "none"; break;
    case Normalization::unit: j["normalization"] = "unit"; break;
    case Normalization::scale:
      j["normalization"] = "scale";
      j["scale"] = in.scale;
      break;
  }
}

inline void from_json(const nlohmann::json& j, InputMap& in) {
  in = InputMap{};
  if (j.contains("projection")) in.projection = projection_from_string(j.at("projection"));
  std::string n = j.value("normalization", std::string("none"));
  if (n == "none") {
    in.normalization = Normalization::none;
  } else if (n == "unit") {
    in.normalization = Normalization::unit;
  } else if (n == "scale") {
    in.normalization = Normalization::scale;
    in.scale = j.at("scale").get<double>();
  } else {
    throw InputError("unknown normalization '" + n + "'");
  }
}

inline void to_json(nlohmann::json& j, const KernelSpec& spec) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          j = {{"type", "linear"}};
        } else if constexpr (std::is_same_v<K, PolynomialKernel>) {
          j = {{"type", "polynomial"}, {"degree", k.degree}, {"offset", k.offset}};
        } else if constexpr (std::is_same_v<K, SquaredExponentialKernel>) {
          j = {{"type", "squared-exponential"}, {"lengthscales", k.lengthscales}};
        } else if constexpr (std::is_same_v<K, MaternKernel>) {
          double nu = k.smoothness == MaternSmoothness::half           ? 0.5
                      : k.smoothness == MaternSmoothness::three_halves ? 1.5
                                                                       : 2.5;
          j = {{"type", "matern"}, {"nu", nu}, {"lengthscale", k.lengthscale}};
        } else {
          j = {{"type", "product"}, {"factors", nlohmann::json::array()}};
          for (const auto& f : k.factors) {
            nlohmann::json fj;
            to_json(fj, f);
            j["factors"].push_back(fj);
          }
        }
      },
      spec.kind);
  if (!std::holds_alternative<ProductKernel>(spec.kind)) j["input"] = spec.input;
  if (spec.variance != 1.0) j["variance"] = spec.variance;
}

inline void from_json(const nlohmann::json& j, KernelSpec& spec) {
  const std::string type = j.at("type").get<std::string>();
  spec = KernelSpec{};
  if (type == "linear") {
    spec.kind = LinearKernel{};
  } else if (type == "polynomial") {
    spec.kind = PolynomialKernel{j.value("degree", 4), j.value("offset", 1.0)};
  } else if (type == "squared-exponential") {
    SquaredExponentialKernel se;
    if (j.contains("lengthscales")) {
      se.lengthscales = j.at("lengthscales").get<std::vector<double>>();
    } else if (j.contains("lengthscale")) {
      se.lengthscales = {j.at("lengthscale").get<double>()};
    }
    spec.kind = se;
  } else if (type == "matern") {
    double nu = j.value("nu", 2.5);
    MaternKernel m;
    if (nu == 0.5) {
      m.smoothness = MaternSmoothness::half;
    } else if (nu == 1.5) {
      m.smoothness = MaternSmoothness::three_halves;
    } else if (nu == 2.5) {
      m.smoothness = MaternSmoothness::five_halves;
    } else {
      throw InputError("Matern kernel: nu must be 0.5, 1.5 or 2.5");
    }
    m.lengthscale = j.value("lengthscale", 1.0);
    spec.kind = m;
  } else if (type == "product") {
    ProductKernel p;
    for (const auto& f : j.at("factors")) {
      KernelSpec fs;
      from_json(f, fs);
      p.factors.push_back(std::move(fs));
    }
    spec.kind = std::move(p);
  } else {
    throw InputError("unknown kernel type '" + type + "'");
  }
  if (j.contains("input")) spec.input = j.at("input").get<InputMap>();
  spec.variance = j.value("variance", 1.0);
  validate(spec);
}

}  // namespace cgame
