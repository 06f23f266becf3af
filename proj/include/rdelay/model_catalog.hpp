#ifndef RDELAY_MODEL_CATALOG_HPP
#define RDELAY_MODEL_CATALOG_HPP

// Built-in nonlinearity pairs (F, H) with closed-form derivative data at the
// origin and the structural hypotheses each one satisfies.

#include <cmath>
#include <concepts>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rdelay/errors.hpp"
#include "rdelay/spectral_core.hpp"

namespace rdelay {

// Pointwise reaction terms of the local system
//   u_t = d u_xx + F(u, v),   v_t = d v_xx + (H(u) - v)/tau.
template <class R>
concept Reaction = requires(const R& r, double u, double v) {
  { r.F(u, v) } -> std::convertible_to<double>;
  { r.F_u(u, v) } -> std::convertible_to<double>;
  { r.F_v(u, v) } -> std::convertible_to<double>;
  { r.H(u) } -> std::convertible_to<double>;
  { r.H_u(u) } -> std::convertible_to<double>;
};

// Taylor data at (0, 0): F_u, F_v, H', F_uu, F_uv, F_vv, H''.
struct Coefficients {
  double a = 0, b = 0, k = 0, p = 0, q = 0, r = 0, l = 0;
};

namespace models {

inline void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw DomainError(std::string("model parameter ") + name + " must be positive");
}

// F = kappa u (1 - A u - B v), H = u.
struct Logistic {
  double kappa = 1.0, A = 0.5, B = 0.4;

  void validate() const {
    require_positive(kappa, "kappa");
    require_positive(A, "A");
    require_positive(B, "B");
  }
  double F(double u, double v) const { return kappa * u * (1.0 - A * u - B * v); }
  double F_u(double u, double v) const { return kappa * (1.0 - 2.0 * A * u - B * v); }
  double F_v(double u, double) const { return -kappa * B * u; }
  double H(double u) const { return u; }
  double H_u(double) const { return 1.0; }
  Coefficients coefficients() const { return {kappa, 0.0, 1.0, -2.0 * A * kappa, -B * kappa, 0.0, 0.0}; }
};

// F = kappa u (1 + A u - B v - C u^2), H = u.
struct LogisticCubic {
  double kappa = 1.0, A = 0.1, B = 2.0, C = 1.0;

  void validate() const {
    require_positive(kappa, "kappa");
    require_positive(A, "A");
    require_positive(B, "B");
    require_positive(C, "C");
  }
  double F(double u, double v) const { return kappa * u * (1.0 + A * u - B * v - C * u * u); }
  double F_u(double u, double v) const {
    return kappa * (1.0 + 2.0 * A * u - B * v - 3.0 * C * u * u);
  }
  double F_v(double u, double) const { return -kappa * B * u; }
  double H(double u) const { return u; }
  double H_u(double) const { return 1.0; }
  Coefficients coefficients() const { return {kappa, 0.0, 1.0, 2.0 * A * kappa, -B * kappa, 0.0, 0.0}; }
};

// F = kappa u (1 - A u - B v) / (1 + c A u + c B v), H = u.
struct FoodLimited {
  double kappa = 1.0, A = 0.5, B = 0.4, c = 1.0;

  void validate() const {
    require_positive(kappa, "kappa");
    require_positive(A, "A");
    require_positive(B, "B");
    require_positive(c, "c");
  }
  double F(double u, double v) const {
    return kappa * u * (1.0 - A * u - B * v) / (1.0 + c * A * u + c * B * v);
  }
  double F_u(double u, double v) const {
    const double num = 1.0 - A * u - B * v;
    const double den = 1.0 + c * A * u + c * B * v;
    // d/du [u num/den] = num/den + u (-A den - c A num)/den^2
    return kappa * (num / den + u * (-A * den - c * A * num) / (den * den));
  }
  double F_v(double u, double v) const {
    const double num = 1.0 - A * u - B * v;
    const double den = 1.0 + c * A * u + c * B * v;
    return kappa * u * (-B * den - c * B * num) / (den * den);
  }
  double H(double u) const { return u; }
  double H_u(double) const { return 1.0; }
  Coefficients coefficients() const {
    return {kappa, 0.0, 1.0, -2.0 * kappa * A * (1.0 + c), -kappa * B * (1.0 + c), 0.0, 0.0};
  }
};

// F = -chi u + theta v e^{-nu v}, H = u.
struct Nicholson {
  double chi = 0.8, theta = 1.0, nu = 0.6;

  void validate() const {
    require_positive(chi, "chi");
    require_positive(theta, "theta");
    require_positive(nu, "nu");
    if (!(theta > chi)) throw DomainError("nicholson: requires theta > chi");
  }
  double F(double u, double v) const { return -chi * u + theta * v * std::exp(-nu * v); }
  double F_u(double, double) const { return -chi; }
  double F_v(double, double v) const { return theta * std::exp(-nu * v) * (1.0 - nu * v); }
  double H(double u) const { return u; }
  double H_u(double) const { return 1.0; }
  Coefficients coefficients() const { return {-chi, theta, 1.0, 0.0, 0.0, -2.0 * theta * nu, 0.0}; }
};

// F = -chi u + theta v, H = u e^{-nu u}.
struct NicholsonVariant {
  double chi = 0.8, theta = 1.0, nu = 0.6;

  void validate() const {
    require_positive(chi, "chi");
    require_positive(theta, "theta");
    require_positive(nu, "nu");
    if (!(theta > chi)) throw DomainError("nicholson_variant: requires theta > chi");
  }
  double F(double u, double v) const { return -chi * u + theta * v; }
  double F_u(double, double) const { return -chi; }
  double F_v(double, double) const { return theta; }
  double H(double u) const { return u * std::exp(-nu * u); }
  double H_u(double u) const { return std::exp(-nu * u) * (1.0 - nu * u); }
  Coefficients coefficients() const { return {-chi, theta, 1.0, 0.0, 0.0, 0.0, -2.0 * nu}; }
};

// F = -chi u + theta v / (A + v), H = u.
struct Monod {
  double chi = 0.8, theta = 1.0, A = 1.0;

  void validate() const {
    require_positive(chi, "chi");
    require_positive(theta, "theta");
    require_positive(A, "A");
    if (!(theta > chi * A)) throw DomainError("monod: requires theta > chi * A");
  }
  double F(double u, double v) const { return -chi * u + theta * v / (A + v); }
  double F_u(double, double) const { return -chi; }
  double F_v(double, double v) const { return theta * A / ((A + v) * (A + v)); }
  double H(double u) const { return u; }
  double H_u(double) const { return 1.0; }
  Coefficients coefficients() const {
    return {-chi, theta / A, 1.0, 0.0, 0.0, -2.0 * theta / (A * A), 0.0};
  }
};

} // namespace models

// Witness data for the structural hypotheses.
struct GrowthBound {         // F(u,v) <= F1(u) u,  F1(u*) = 0,  0 < F1 < K0 on (0,u*)
  double u_star = 0.0;
  double K0 = 0.0;
  std::function<double(double)> F1;
};

struct LinearDominance {     // F(u,v) <= -K1 u + F2(v),  F2(v) <= K2 v,  H(u) <= K3 u
  double K1 = 0.0, K2 = 0.0, K3 = 0.0;
  std::function<double(double)> F2;
};

struct Assumptions {
  bool A3 = false;                    // a + b k > 0
  std::optional<GrowthBound> A4;
  std::optional<LinearDominance> A5;
  std::optional<double> A6a;          // K4: F2 <= K4
  std::optional<double> A6b;          // K5: H <= K5
  bool A7 = false;                    // F = u f(u,v), f_u < 0, f_v < 0, H' > 0
  bool cooperative_sublinear = false; // uniqueness via monotone-systems argument
};

class ModelSpec {
public:
  using Params = std::variant<models::Logistic, models::LogisticCubic, models::FoodLimited,
                              models::Nicholson, models::NicholsonVariant, models::Monod>;

  explicit ModelSpec(Params p) : params_(std::move(p)) {
    std::visit([](const auto& m) { m.validate(); }, params_);
  }

  static ModelSpec logistic(double kappa, double A, double B) {
    return ModelSpec(models::Logistic{kappa, A, B});
  }
  static ModelSpec logistic_cubic(double kappa, double A, double B, double C) {
    return ModelSpec(models::LogisticCubic{kappa, A, B, C});
  }
  static ModelSpec food_limited(double kappa, double A, double B, double c) {
    return ModelSpec(models::FoodLimited{kappa, A, B, c});
  }
  static ModelSpec nicholson(double chi, double theta, double nu) {
    return ModelSpec(models::Nicholson{chi, theta, nu});
  }
  static ModelSpec nicholson_variant(double chi, double theta, double nu) {
    return ModelSpec(models::NicholsonVariant{chi, theta, nu});
  }
  static ModelSpec monod(double chi, double theta, double A) {
    return ModelSpec(models::Monod{chi, theta, A});
  }

  // Name-based construction for configuration files. Unknown keys are
  // rejected; missing keys take the documented defaults of each model.
  static ModelSpec from_name(const std::string& name, const std::map<std::string, double>& kv);

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> n = {"logistic",  "logistic_cubic",    "food_limited",
                                               "nicholson", "nicholson_variant", "monod"};
    return n;
  }

  std::string name() const { return names()[params_.index()]; }
  const Params& params() const noexcept { return params_; }

  template <class Fn> decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), params_);
  }

  double F(double u, double v) const { return visit([&](const auto& m) { return m.F(u, v); }); }
  double F_u(double u, double v) const { return visit([&](const auto& m) { return m.F_u(u, v); }); }
  double F_v(double u, double v) const { return visit([&](const auto& m) { return m.F_v(u, v); }); }
  double H(double u) const { return visit([&](const auto& m) { return m.H(u); }); }
  double H_u(double u) const { return visit([&](const auto& m) { return m.H_u(u); }); }

  Coefficients coefficients() const {
    return visit([](const auto& m) { return m.coefficients(); });
  }

  Assumptions assumptions() const;

private:
  Params params_;
};

static_assert(Reaction<ModelSpec>);
static_assert(Reaction<models::Logistic>);

// Inputs in [-tol, 0) are clamped to zero; anything more negative is a
// domain violation. The solvers call the pointwise members directly.
inline constexpr double kNegativeInputTolerance = 1e-12;

namespace detail {
inline double clamp_density(double x, const char* what) {
  if (x >= 0.0) return x;
  if (x >= -kNegativeInputTolerance) return 0.0;
  throw DomainError(std::string(what) + ": negative density " + std::to_string(x));
}
} // namespace detail

inline Vector eval_F(const ModelSpec& model, const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw DomainError("eval_F: u and v sizes differ");
  return model.visit([&](const auto& m) {
    Vector out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
      out[i] = m.F(detail::clamp_density(u[i], "eval_F"), detail::clamp_density(v[i], "eval_F"));
    return out;
  });
}

inline Vector eval_H(const ModelSpec& model, const Vector& u) {
  return model.visit([&](const auto& m) {
    Vector out(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = m.H(detail::clamp_density(u[i], "eval_H"));
    return out;
  });
}

inline Coefficients coefficients(const ModelSpec& model) { return model.coefficients(); }

inline Assumptions assumption_witnesses(const ModelSpec& model) { return model.assumptions(); }

// ---------------------------------------------------------------------------

inline Assumptions ModelSpec::assumptions() const {
  const Coefficients c = coefficients();
  Assumptions out;
  out.A3 = c.a + c.b * c.k > 0.0;

  struct Visitor {
    Assumptions& out;
    void operator()(const models::Logistic& m) const {
      const double kappa = m.kappa, A = m.A;
      out.A4 = GrowthBound{1.0 / A, kappa, [kappa, A](double u) { return kappa * (1.0 - A * u); }};
      out.A7 = true;
    }
    void operator()(const models::LogisticCubic& m) const {
      const double kappa = m.kappa, A = m.A, C = m.C;
      // F1(u) = kappa (1 + A u - C u^2): positive root and interior maximum.
      const double u_star = (A + std::sqrt(A * A + 4.0 * C)) / (2.0 * C);
      const double K0 = kappa * (1.0 + A * A / (4.0 * C));
      out.A4 = GrowthBound{u_star, K0,
                           [kappa, A, C](double u) { return kappa * (1.0 + A * u - C * u * u); }};
    }
    void operator()(const models::FoodLimited& m) const {
      const double kappa = m.kappa, A = m.A, cc = m.c;
      out.A4 = GrowthBound{1.0 / A, kappa, [kappa, A, cc](double u) {
                             return kappa * (1.0 - A * u) / (1.0 + cc * A * u);
                           }};
      out.A7 = true;
    }
    void operator()(const models::Nicholson& m) const {
      const double theta = m.theta, nu = m.nu;
      out.A5 = LinearDominance{m.chi, theta, 1.0,
                               [theta, nu](double v) { return theta * v * std::exp(-nu * v); }};
      out.A6a = theta / (nu * std::numbers::e);
    }
    void operator()(const models::NicholsonVariant& m) const {
      const double theta = m.theta;
      out.A5 = LinearDominance{m.chi, theta, 1.0, [theta](double v) { return theta * v; }};
      out.A6b = 1.0 / (m.nu * std::numbers::e);
    }
    void operator()(const models::Monod& m) const {
      const double theta = m.theta, A = m.A;
      out.A5 = LinearDominance{m.chi, theta / A, 1.0,
                               [theta, A](double v) { return theta * v / (A + v); }};
      out.A6a = theta;
      out.cooperative_sublinear = true;
    }
  };
  std::visit(Visitor{out}, params_);
  return out;
}

inline ModelSpec ModelSpec::from_name(const std::string& name,
                                      const std::map<std::string, double>& kv) {
  auto pick = [&](std::initializer_list<std::string> allowed) {
    for (const auto& [key, value] : kv) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == key;
      if (!ok) throw DomainError("model '" + name + "' has no parameter '" + key + "'");
    }
    return [&kv](const std::string& key, double fallback) {
      auto it = kv.find(key);
      return it == kv.end() ? fallback : it->second;
    };
  };
  if (name == "logistic") {
    auto get = pick({"kappa", "A", "B"});
    return logistic(get("kappa", 1.0), get("A", 0.5), get("B", 0.4));
  }
  if (name == "logistic_cubic") {
    auto get = pick({"kappa", "A", "B", "C"});
    return logistic_cubic(get("kappa", 1.0), get("A", 0.1), get("B", 2.0), get("C", 1.0));
  }
  if (name == "food_limited") {
    auto get = pick({"kappa", "A", "B", "c"});
    return food_limited(get("kappa", 1.0), get("A", 0.5), get("B", 0.4), get("c", 1.0));
  }
  if (name == "nicholson") {
    auto get = pick({"chi", "theta", "nu"});
    return nicholson(get("chi", 0.8), get("theta", 1.0), get("nu", 0.6));
  }
  if (name == "nicholson_variant") {
    auto get = pick({"chi", "theta", "nu"});
    return nicholson_variant(get("chi", 0.8), get("theta", 1.0), get("nu", 0.6));
  }
  if (name == "monod") {
    auto get = pick({"chi", "theta", "A"});
    return monod(get("chi", 0.8), get("theta", 1.0), get("A", 1.0));
  }
  throw DomainError("unknown model '" + name + "'");
}

} // namespace rdelay

#endif
