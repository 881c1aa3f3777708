#pragma once

// Vector fields of the replicator and replicator-mutator equations in the
// reduced (x, y) chart, with analytic Jacobians.
//
// Two layers exist: the general form  xdot_i = sum_j x_j f_j Q_ji - x_i phi
// (valid for any payoffs and any admissible Q) and hand-expanded cubic
// polynomials for the named systems at the default payoffs. Tests check the
// two against each other.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "repmut/model.hpp"

namespace repmut {

enum class SystemId { replicator, tft_to_allc, alld_to_allc, uniform, general };

inline std::string_view to_string(SystemId id) {
  switch (id) {
    case SystemId::replicator: return "replicator";
    case SystemId::tft_to_allc: return "tft_to_allc";
    case SystemId::alld_to_allc: return "alld_to_allc";
    case SystemId::uniform: return "uniform";
    case SystemId::general: return "general";
  }
  return "general";
}

template <class S>
struct Vec2 {
  S x{};
  S y{};
  S norm() const {
    using std::hypot;
    return hypot(x, y);
  }
};

/// 2x2 Jacobian d(xdot, ydot)/d(x, y).
template <class S>
struct Jacobian2 {
  S xx{}, xy{}, yx{}, yy{};

  S trace() const { return xx + yy; }
  S det() const { return xx * yy - xy * yx; }
  S discriminant() const { return trace() * trace() / 4 - det(); }

  std::array<std::complex<S>, 2> eigenvalues() const {
    const S half = trace() / 2;
    const std::complex<S> root = std::sqrt(std::complex<S>(discriminant(), S(0)));
    return {half + root, half - root};
  }
};

using Jacobian = Jacobian2<double>;

namespace detail {

template <class S>
Vec2<S> tft_to_allc_poly(S x, S y, S mu, S c) {
  const S g1 = (c - 4) * y + x * (x + 3 * y - 3) + 2;
  const S g2 = c * (mu + y - 1) - 3 * mu + x * (2 * mu + x + 3 * y - 1);
  return {x * g1, y * g2};
}

template <class S>
Jacobian2<S> tft_to_allc_jac(S x, S y, S mu, S c) {
  const S g1 = (c - 4) * y + x * (x + 3 * y - 3) + 2;
  const S g2 = c * (mu + y - 1) - 3 * mu + x * (2 * mu + x + 3 * y - 1);
  return {g1 + x * (2 * x + 3 * y - 3), x * (c - 4 + 3 * x), y * (2 * mu + 2 * x + 3 * y - 1), g2 + y * (c + 3 * x)};
}

template <class S>
Vec2<S> alld_to_allc_poly(S x, S y, S mu, S c) {
  const S g1 = (c - 4) * y - 5 * mu + 4 * mu * (x + y) + x * (x + 3 * y - 3) + 2;
  const S g2 = c * (y - 1) + x * (x + 3 * y - 1);
  return {x * g1, y * g2};
}

template <class S>
Jacobian2<S> alld_to_allc_jac(S x, S y, S mu, S c) {
  const S g1 = (c - 4) * y - 5 * mu + 4 * mu * (x + y) + x * (x + 3 * y - 3) + 2;
  const S g2 = c * (y - 1) + x * (x + 3 * y - 1);
  return {g1 + x * (4 * mu + 2 * x + 3 * y - 3), x * (c - 4 + 4 * mu + 3 * x), y * (2 * x + 3 * y - 1),
          g2 + y * (c + 3 * x)};
}

template <class S>
Vec2<S> uniform_poly(S x, S y, S mu, S c) {
  const S h = (c - 4) * y + x * (x + 3 * y - 3) + 2;
  return {mu * (x * (11 * x + 9 * y - 16) - c * y) + x * h + 3 * mu,
          c * y * (2 * mu + y - 1) + 3 * mu + x * x * (y - mu) + x * (3 * y - 1) * (mu + y) - 9 * mu * y};
}

template <class S>
Jacobian2<S> uniform_jac(S x, S y, S mu, S c) {
  const S h = (c - 4) * y + x * (x + 3 * y - 3) + 2;
  return {mu * (22 * x + 9 * y - 16) + h + x * (2 * x + 3 * y - 3), mu * (9 * x - c) + x * (c - 4 + 3 * x),
          2 * x * (y - mu) + (3 * y - 1) * (mu + y), c * (2 * mu + 2 * y - 1) + x * x + x * (3 * mu + 6 * y - 1) - 9 * mu};
}

}  // namespace detail

/// Immutable vector field on the simplex chart.
class VectorField {
 public:
  /// Hand-expanded cubic field at the default payoffs. `general` is rejected.
  static VectorField named(SystemId id, double mu, double c) {
    VectorField f;
    f.id_ = id;
    f.params_ = ModelParams(id == SystemId::replicator ? 0.0 : mu, c);
    switch (id) {
      case SystemId::replicator: f.spec_ = MutationSpec::from_pattern(MutationPattern::none); break;
      case SystemId::tft_to_allc: f.spec_ = MutationSpec::from_pattern(MutationPattern::tft_to_allc); break;
      case SystemId::alld_to_allc: f.spec_ = MutationSpec::from_pattern(MutationPattern::alld_to_allc); break;
      case SystemId::uniform: f.spec_ = MutationSpec::from_pattern(MutationPattern::uniform); break;
      case SystemId::general: throw InvalidArgument("named_field: 'general' is not a named system");
    }
    f.params_.validate();
    f.q_ = mutation_q(f.spec_, f.params_.mu);
    f.closed_poly_ = true;
    return f;
  }

  /// General replicator-mutator field for arbitrary payoffs and mutation.
  static VectorField general(const ModelParams& p, const MutationSpec& spec) {
    p.validate();
    VectorField f;
    f.id_ = SystemId::general;
    f.params_ = p;
    f.spec_ = spec;
    f.q_ = mutation_q(spec, p.mu);
    f.closed_poly_ = false;
    return f;
  }

  /// Field for a system id; named systems at non-default payoffs fall back
  /// to the general form.
  static VectorField make(SystemId id, const ModelParams& p, const MutationSpec& custom = {}) {
    if (id == SystemId::general) return general(p, custom);
    if (p.payoffs.is_default()) return named(id, p.mu, p.cost);
    VectorField f = named(id, p.mu, p.cost);
    VectorField g = general(p, f.spec_);
    g.id_ = id;
    return g;
  }

  /// Same system at another (mu, c).
  VectorField with(double mu, double c) const {
    ModelParams p = params_;
    p.mu = id_ == SystemId::replicator ? 0.0 : mu;
    p.cost = c;
    VectorField f = *this;
    p.validate();
    f.params_ = p;
    f.q_ = mutation_q(spec_, p.mu);
    return f;
  }

  /// Time-reversed copy.
  VectorField reversed() const {
    VectorField f = *this;
    f.sign_ = -sign_;
    return f;
  }

  SystemId id() const { return id_; }
  const ModelParams& params() const { return params_; }
  double mu() const { return params_.mu; }
  double cost() const { return params_.cost; }
  const MutationSpec& mutation() const { return spec_; }
  const Eigen::Matrix3d& q() const { return q_; }
  bool uses_closed_polynomial() const { return closed_poly_; }

  template <class S>
  Vec2<S> eval(S x, S y) const {
    Vec2<S> v = closed_poly_ ? eval_poly(x, y) : eval_general(x, y);
    v.x *= S(sign_);
    v.y *= S(sign_);
    return v;
  }

  Vec2<double> operator()(double x, double y) const { return eval<double>(x, y); }
  Vec2<double> operator()(const SimplexState& s) const { return eval<double>(s.raw_x(), s.raw_y()); }

  template <class S>
  Jacobian2<S> jacobian(S x, S y) const {
    Jacobian2<S> j = closed_poly_ ? jac_poly(x, y) : jac_general(x, y);
    j.xx *= S(sign_);
    j.xy *= S(sign_);
    j.yx *= S(sign_);
    j.yy *= S(sign_);
    return j;
  }

  Jacobian jacobian(const SimplexState& s) const { return jacobian<double>(s.raw_x(), s.raw_y()); }

  /// Field at explicit (mu, c), keeping payoffs and mutation pattern. Used
  /// by extended systems that solve for the parameters themselves.
  template <class S>
  Vec2<S> eval_at(S x, S y, S mu, S c) const {
    Vec2<S> v = closed_poly_ ? poly_at(x, y, mu, c) : general_at(x, y, mu, c);
    v.x *= S(sign_);
    v.y *= S(sign_);
    return v;
  }

  template <class S>
  Jacobian2<S> jacobian_at(S x, S y, S mu, S c) const {
    Jacobian2<S> j = closed_poly_ ? poly_jac_at(x, y, mu, c) : general_jac_at(x, y, mu, c);
    j.xx *= S(sign_);
    j.xy *= S(sign_);
    j.yx *= S(sign_);
    j.yy *= S(sign_);
    return j;
  }

  /// Field evaluated through the general form regardless of the fast path.
  template <class S>
  Vec2<S> eval_general(S x, S y) const {
    return general_at(x, y, S(params_.mu), S(params_.cost));
  }

  template <class S>
  Jacobian2<S> jac_general(S x, S y) const {
    return general_jac_at(x, y, S(params_.mu), S(params_.cost));
  }

 private:
  template <class S>
  std::array<std::array<S, 3>, 3> payoffs_at(S c) const {
    const auto& g = params_.payoffs;
    return {{{S(g.P), S(g.P), S(g.T)}, {S(g.P) - c, S(g.R) - c, S(g.R) - c}, {S(g.S), S(g.R), S(g.R)}}};
  }

  template <class S>
  std::array<std::array<S, 3>, 3> q_at(S mu) const {
    std::array<std::array<S, 3>, 3> q{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) q[i][j] = S(i == j ? 1 : 0) - mu * S(spec_.matrix()(i, j));
    return q;
  }

  template <class S>
  Vec2<S> general_at(S x, S y, S mu, S c) const {
    const S z = S(1) - x - y;
    const std::array<S, 3> xs = {x, y, z};
    const auto a = payoffs_at(c);
    const auto q = q_at(mu);
    std::array<S, 3> f{};
    for (int i = 0; i < 3; ++i) f[i] = a[i][0] * x + a[i][1] * y + a[i][2] * z;
    const S phi = x * f[0] + y * f[1] + z * f[2];
    std::array<S, 2> out{};
    for (int i = 0; i < 2; ++i) {
      S inflow = 0;
      for (int j = 0; j < 3; ++j) inflow += xs[j] * f[j] * q[j][i];
      out[i] = inflow - xs[i] * phi;
    }
    return {out[0], out[1]};
  }

  template <class S>
  Jacobian2<S> general_jac_at(S x, S y, S mu, S c) const {
    const S z = S(1) - x - y;
    const std::array<S, 3> xs = {x, y, z};
    const std::array<S, 3> dx = {1, 0, -1};
    const std::array<S, 3> dy = {0, 1, -1};
    const auto a = payoffs_at(c);
    const auto q = q_at(mu);
    std::array<S, 3> f{}, fx{}, fy{};
    for (int i = 0; i < 3; ++i) {
      f[i] = a[i][0] * x + a[i][1] * y + a[i][2] * z;
      fx[i] = a[i][0] - a[i][2];
      fy[i] = a[i][1] - a[i][2];
    }
    // g_j = x_j f_j and its partials
    std::array<S, 3> gx{}, gy{};
    S phi = 0, phix = 0, phiy = 0;
    for (int j = 0; j < 3; ++j) {
      gx[j] = dx[j] * f[j] + xs[j] * fx[j];
      gy[j] = dy[j] * f[j] + xs[j] * fy[j];
      phi += xs[j] * f[j];
      phix += gx[j];
      phiy += gy[j];
    }
    std::array<S, 2> rx{}, ry{};
    for (int i = 0; i < 2; ++i) {
      S sx = 0, sy = 0;
      for (int j = 0; j < 3; ++j) {
        sx += gx[j] * q[j][i];
        sy += gy[j] * q[j][i];
      }
      rx[i] = sx - dx[i] * phi - xs[i] * phix;
      ry[i] = sy - dy[i] * phi - xs[i] * phiy;
    }
    return {rx[0], ry[0], rx[1], ry[1]};
  }

  template <class S>
  Vec2<S> eval_poly(S x, S y) const {
    return poly_at(x, y, S(params_.mu), S(params_.cost));
  }

  template <class S>
  Jacobian2<S> jac_poly(S x, S y) const {
    return poly_jac_at(x, y, S(params_.mu), S(params_.cost));
  }

  template <class S>
  Vec2<S> poly_at(S x, S y, S mu, S c) const {
    switch (id_) {
      case SystemId::replicator: return detail::tft_to_allc_poly<S>(x, y, S(0), c);
      case SystemId::tft_to_allc: return detail::tft_to_allc_poly<S>(x, y, mu, c);
      case SystemId::alld_to_allc: return detail::alld_to_allc_poly<S>(x, y, mu, c);
      case SystemId::uniform: return detail::uniform_poly<S>(x, y, mu, c);
      case SystemId::general: break;
    }
    return general_at(x, y, mu, c);
  }

  template <class S>
  Jacobian2<S> poly_jac_at(S x, S y, S mu, S c) const {
    switch (id_) {
      case SystemId::replicator: return detail::tft_to_allc_jac<S>(x, y, S(0), c);
      case SystemId::tft_to_allc: return detail::tft_to_allc_jac<S>(x, y, mu, c);
      case SystemId::alld_to_allc: return detail::alld_to_allc_jac<S>(x, y, mu, c);
      case SystemId::uniform: return detail::uniform_jac<S>(x, y, mu, c);
      case SystemId::general: break;
    }
    return general_jac_at(x, y, mu, c);
  }

  SystemId id_ = SystemId::replicator;
  ModelParams params_;
  MutationSpec spec_;
  Eigen::Matrix3d q_ = Eigen::Matrix3d::Identity();
  bool closed_poly_ = true;
  int sign_ = 1;
};

/// Replicator equation with cost at default payoffs.
inline Vec2<double> replicator_field(const SimplexState& s, double c) {
  return VectorField::named(SystemId::replicator, 0.0, c)(s);
}

/// General replicator-mutator derivative with an explicit Q.
inline Vec2<double> repmut_field(const SimplexState& s, double c, const Eigen::Matrix3d& q, const Payoffs& g = {}) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (q(i, j) < 0.0) throw InadmissibleMutation("Q has a negative entry");
    }
    if (std::abs(q.row(i).sum() - 1.0) > 1e-12) throw InadmissibleMutation("Q is not row-stochastic");
  }
  const ModelParams p(0.0, c, g);
  const Eigen::Vector3d xs(s.raw_x(), s.raw_y(), 1.0 - s.raw_x() - s.raw_y());
  const Eigen::Vector3d f = payoff_matrix(p) * xs;
  const double phi = xs.dot(f);
  const Eigen::Vector3d xf = xs.cwiseProduct(f);
  const Eigen::Vector3d out = q.transpose() * xf - xs * phi;
  return {out(0), out(1)};
}

inline Vec2<double> repmut_field(const SimplexState& s, double mu, double c, const MutationSpec& spec) {
  return repmut_field(s, c, mutation_q(spec, mu));
}

inline VectorField named_field(SystemId id, double mu, double c) { return VectorField::named(id, mu, c); }

inline SystemId parse_system_id(std::string_view s) {
  for (auto id : {SystemId::replicator, SystemId::tft_to_allc, SystemId::alld_to_allc, SystemId::uniform,
                  SystemId::general}) {
    if (to_string(id) == s) return id;
  }
  throw InvalidArgument("unknown system id: " + std::string(s));
}

}  // namespace repmut
