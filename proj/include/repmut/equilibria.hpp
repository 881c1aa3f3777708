#pragma once

// Fixed points: closed forms for the TFT->ALLC and ALLD->ALLC systems, a
// multi-start damped Newton solver for any field, and eigenvalue-based
// classification.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "repmut/dynamics.hpp"

namespace repmut {

enum class Stability { saddle, stable_node, unstable_node, stable_spiral, unstable_spiral, nonhyperbolic };
enum class Provenance { closed_form_A, closed_form_B, numeric };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::saddle: return "saddle";
    case Stability::stable_node: return "stable_node";
    case Stability::unstable_node: return "unstable_node";
    case Stability::stable_spiral: return "stable_spiral";
    case Stability::unstable_spiral: return "unstable_spiral";
    case Stability::nonhyperbolic: return "nonhyperbolic";
  }
  return "nonhyperbolic";
}

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form_A: return "closed_form_A";
    case Provenance::closed_form_B: return "closed_form_B";
    case Provenance::numeric: return "numeric";
  }
  return "numeric";
}

inline constexpr double kNonhyperbolicTol = 1e-9;
// Imaginary parts below this (relative) are rounding from a repeated real eigenvalue.
inline constexpr double kSpiralTol = 1e-7;

/// Label from an eigenvalue pair of a real 2x2 matrix.
inline Stability classify(const std::array<std::complex<double>, 2>& ev) {
  const double re0 = ev[0].real(), re1 = ev[1].real();
  if (std::min(std::abs(re0), std::abs(re1)) < kNonhyperbolicTol) return Stability::nonhyperbolic;
  if (re0 * re1 < 0.0) return Stability::saddle;
  const bool complex_pair = std::abs(ev[0].imag()) > kSpiralTol * std::max(1.0, std::abs(ev[0]));
  const bool stable = std::max(re0, re1) < 0.0;
  if (complex_pair) return stable ? Stability::stable_spiral : Stability::unstable_spiral;
  return stable ? Stability::stable_node : Stability::unstable_node;
}

struct EquilibriumReport {
  SimplexState location;
  std::array<std::complex<double>, 2> eigenvalues{};
  Stability classification = Stability::nonhyperbolic;
  Provenance provenance = Provenance::numeric;
  int label = 0;  // closed-form index 1..5, 0 for numeric
  Jacobian jacobian;
  double residual = 0.0;

  bool is_stable() const {
    return classification == Stability::stable_node || classification == Stability::stable_spiral;
  }
  bool is_interior(double margin = 1e-9) const { return location.interior(margin); }
};

inline Stability classify(const EquilibriumReport& r) { return classify(r.eigenvalues); }

inline EquilibriumReport make_report(const VectorField& f, const SimplexState& s, Provenance prov, int label = 0) {
  EquilibriumReport r;
  r.location = s;
  r.jacobian = f.jacobian(s);
  r.eigenvalues = r.jacobian.eigenvalues();
  r.classification = classify(r.eigenvalues);
  r.provenance = prov;
  r.label = label;
  r.residual = f(s).norm();
  return r;
}

/// Intermediate radicals of the closed forms. A1, A8 depend on (mu, c);
/// the rest on mu only (they feed the Hopf curves).
template <class S>
struct ClosedFormScratch {
  using C = std::complex<S>;
  C A1, A2, A3, A4, A5, A6, A7, A8, A9, A10;

  static ClosedFormScratch compute(S mu, S c) {
    ClosedFormScratch s;
    const S m1 = mu - 1;
    const S one = 1, two = 2, three = 3;
    s.A1 = std::sqrt(C(c * c * (mu + 3) * (mu + 3) - 2 * c * ((mu - 11) * mu + 6) + (mu - 28) * mu + 4));

    const S k = 35 * mu * mu - 34 * mu - 8;
    const S b = 3 - 13 * mu;
    s.A2 = C(b * b / (4 * m1 * m1) + k / (3 * (mu * mu - 2 * mu + 1)) - k / (m1 * m1));
    const S a3sq = horner<S>(mu, {-5240604096.0L, -40578465024.0L, 200756188800.0L, -265354820640.0L, 60401533248.0L,
                                  110419920576.0L, -55059298560.0L, -12327872544.0L, 4987630080.0L, 1779338880.0L,
                                  218439936.0L, -110592.0L, -1880064.0L});
    s.A3 = std::sqrt(C(a3sq));
    const S a4in = horner<S>(mu, {204136.0L, -578832.0L, 416952.0L, 51238.0L, -79740.0L, -12984.0L, -1456.0L});
    s.A4 = std::pow(C(a4in) + s.A3, one / three);
    s.A5 = C(std::cbrt(two) * (2272 * mu * mu * mu * mu - 3160 * mu * mu * mu + 521 * mu * mu + 316 * mu + 100));
    s.A6 = C(-(b * b * b) / (m1 * m1 * m1) + 4 * k * b / (m1 * m1 * m1) - 8 * (49 * mu * mu - 4 * mu + 4) / (m1 * m1));
    s.A7 = C(k / (3 * (mu * mu - 2 * mu + 1)) - k / (m1 * m1));

    const S d = 4 * c * mu + c - 11 * mu + 2;
    s.A8 = std::sqrt(C(d * d + 8 * c * (4 * mu - 1) * (-c + mu + 2)));
    const S p = 48 * mu * mu * mu - 201 * mu * mu + 114 * mu - 33;
    const S q = -2592 * mu * mu * mu * mu + 5670 * mu * mu * mu - 5022 * mu * mu + 810 * mu + 162;
    s.A9 = std::sqrt(C(4 * p * p * p + q * q));
    s.A10 = std::pow(C(q) + s.A9, one / three);
    return s;
  }

 private:
  template <class T>
  static T horner(T x, std::initializer_list<long double> coeffs) {
    T acc = 0;
    for (long double co : coeffs) acc = acc * x + T(co);
    return acc;
  }
};

namespace detail {

inline constexpr double kImagTol = 1e-12;

inline std::optional<SimplexState> real_state(std::complex<long double> x, std::complex<long double> y) {
  if (!std::isfinite(static_cast<double>(std::abs(x))) || !std::isfinite(static_cast<double>(std::abs(y))))
    return std::nullopt;
  const long double scale = std::max<long double>(1.0L, std::abs(x) + std::abs(y));
  if (std::abs(x.imag()) > kImagTol * scale || std::abs(y.imag()) > kImagTol * scale) return std::nullopt;
  const double xr = static_cast<double>(x.real());
  const double yr = static_cast<double>(y.real());
  if (!std::isfinite(xr) || !std::isfinite(yr) || !SimplexState::admissible(xr, yr)) return std::nullopt;
  return SimplexState(xr, yr);
}

}  // namespace detail

/// Closed-form fixed points (4 for TFT->ALLC, 5 for ALLD->ALLC). Points with
/// complex coordinates or outside the simplex are dropped.
inline std::vector<EquilibriumReport> fixed_points_closed_form(SystemId id, double mu, double c) {
  using C = std::complex<long double>;
  if (id != SystemId::tft_to_allc && id != SystemId::alld_to_allc)
    throw InvalidArgument("closed forms exist only for tft_to_allc and alld_to_allc");
  if (!(mu >= 0.0) || !(c >= 0.0)) throw InvalidArgument("closed forms need mu, c >= 0");
  const VectorField f = named_field(id, mu, c);
  const long double m = mu, cc = c;
  const auto A = ClosedFormScratch<long double>::compute(m, cc);
  const Provenance prov = id == SystemId::tft_to_allc ? Provenance::closed_form_A : Provenance::closed_form_B;
  std::vector<EquilibriumReport> out;
  auto push = [&](std::optional<SimplexState> s, int label) {
    if (s) out.push_back(make_report(f, *s, prov, label));
  };

  if (id == SystemId::tft_to_allc) {
    push(SimplexState(0, 0), 1);
    push(SimplexState(1, 0), 2);
    const C a1 = A.A1;
    const C x3 = (a1 - 5.0L * cc * m + cc + 17.0L * m + 2.0L) / (12.0L * m + 4.0L);
    const C y3 = (-(m + 1.0L) * a1 - cc * m * m + 8.0L * cc * m + cc + m * m - m + 2.0L) / (24.0L * m + 8.0L);
    const C x4 = (-a1 - 5.0L * cc * m + cc + 17.0L * m + 2.0L) / (12.0L * m + 4.0L);
    const C y4 = ((m + 1.0L) * a1 - cc * m * m + 8.0L * cc * m + cc + m * m - m + 2.0L) / (24.0L * m + 8.0L);
    push(detail::real_state(x3, y3), 3);
    push(detail::real_state(x4, y4), 4);
    return out;
  }

  push(SimplexState(0, 0), 1);
  push(SimplexState(0, 1), 2);
  const long double x3 = (-4.0L * m - std::sqrt(4.0L * m * (4.0L * m - 1.0L) + 1.0L) + 3.0L) / 2.0L;
  push(detail::real_state(C(x3), C(0)), 3);

  const C a8 = A.A8;
  const long double lin = 4.0L * cc * m + cc - 11.0L * m + 2.0L;
  C x4, y4, x5, y5;
  if (std::abs(4.0L * m - 1.0L) > 1e-6L) {
    x4 = -(lin + a8) / (16.0L * m - 4.0L);
    y4 = (8.0L * cc * m * m - 10.0L * cc * m + (2.0L * m - 1.0L) * a8 + cc + 18.0L * m * m - 11.0L * m + 2.0L) /
         (8.0L * (m - 1.0L) * (4.0L * m - 1.0L));
    x5 = (-lin + a8) / (16.0L * m - 4.0L);
    y5 = (8.0L * cc * m * m - 10.0L * cc * m - (2.0L * m - 1.0L) * a8 + cc + 18.0L * m * m - 11.0L * m + 2.0L) /
         (8.0L * (m - 1.0L) * (4.0L * m - 1.0L));
  } else {
    // mu ~ 1/4: both denominators vanish; use the product form of the
    // quadratic roots and recover y from the TFT nullcline.
    const long double konst = -cc * (m + 2.0L - cc);
    auto y_of = [&](C x) { return (cc + x - x * x) / (cc + 3.0L * x); };
    x4 = 2.0L * konst / (-lin + a8);
    x5 = 2.0L * konst / (-lin - a8);
    y4 = y_of(x4);
    y5 = y_of(x5);
  }
  push(detail::real_state(x4, y4), 4);
  push(detail::real_state(x5, y5), 5);
  return out;
}

struct NumericSolveOptions {
  int grid_density = 20;
  int max_iterations = 100;
  int max_halvings = 40;
  double merge_distance = 1e-7;
  double residual_tol = 1e-12;
};

struct NumericSolveResult {
  std::vector<EquilibriumReport> points;
  int failed_seeds = 0;  // seeds whose Newton iteration did not converge
};

namespace detail {

/// Damped Newton from one seed; long double iterates, min-norm step when the
/// Jacobian is singular.
inline std::optional<Vec2<long double>> newton(const VectorField& f, Vec2<long double> p, const NumericSolveOptions& o) {
  using L = long double;
  auto resid = [&](Vec2<L> q) { return f.eval<L>(q.x, q.y).norm(); };
  L r = resid(p);
  for (int it = 0; it < o.max_iterations; ++it) {
    if (r < 1e-16L) break;
    const auto F = f.eval<L>(p.x, p.y);
    const auto J = f.jacobian<L>(p.x, p.y);
    Eigen::Matrix<L, 2, 2> m;
    m << J.xx, J.xy, J.yx, J.yy;
    const Eigen::Matrix<L, 2, 1> rhs(-F.x, -F.y);
    Eigen::Matrix<L, 2, 1> step;
    const L scale = m.cwiseAbs().maxCoeff();
    if (std::abs(J.det()) > 1e-14L * std::max<L>(scale * scale, 1e-30L)) step = m.partialPivLu().solve(rhs);
    else step = m.completeOrthogonalDecomposition().solve(rhs);
    if (!std::isfinite(static_cast<double>(step(0))) || !std::isfinite(static_cast<double>(step(1)))) return std::nullopt;
    L lambda = 1;
    bool improved = false;
    for (int h = 0; h <= o.max_halvings; ++h) {
      const Vec2<L> q{p.x + lambda * step(0), p.y + lambda * step(1)};
      const L rq = resid(q);
      if (rq < r) {
        p = q;
        r = rq;
        improved = true;
        break;
      }
      lambda /= 2;
    }
    if (!improved) break;
    if (std::abs(p.x) > 10 || std::abs(p.y) > 10) return std::nullopt;
  }
  if (!(f(static_cast<double>(p.x), static_cast<double>(p.y)).norm() < o.residual_tol)) return std::nullopt;
  return p;
}

}  // namespace detail

/// Multi-start damped Newton over a triangular lattice of seeds.
inline NumericSolveResult fixed_points_numeric_detailed(const VectorField& f, const NumericSolveOptions& o = {}) {
  if (o.grid_density < 1) throw InvalidArgument("grid_density must be >= 1");
  NumericSolveResult res;
  std::vector<Vec2<long double>> roots;
  const int n = o.grid_density;
  auto add_seed = [&](long double x, long double y) {
    const auto r = detail::newton(f, {x, y}, o);
    if (!r) {
      ++res.failed_seeds;
      return;
    }
    if (!SimplexState::admissible(static_cast<double>(r->x), static_cast<double>(r->y), 1e-9)) return;
    for (const auto& q : roots)
      if (std::hypot(static_cast<double>(q.x - r->x), static_cast<double>(q.y - r->y)) < o.merge_distance) return;
    roots.push_back(*r);
  };
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) add_seed(static_cast<long double>(i) / n, static_cast<long double>(j) / n);
  // shifted interior lattice catches roots between grid lines
  for (int i = 0; i < n; ++i)
    for (int j = 0; i + j < n - 1; ++j) add_seed((i + 1.0L / 3.0L) / n, (j + 1.0L / 3.0L) / n);

  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  for (const auto& r : roots) {
    double x = std::max(static_cast<double>(r.x), 0.0);
    double y = std::max(static_cast<double>(r.y), 0.0);
    if (x + y > 1.0) {
      const double e = (x + y - 1.0) / 2.0;
      x -= e;
      y -= e;
    }
    res.points.push_back(make_report(f, SimplexState(x, y), Provenance::numeric));
  }
  return res;
}

inline std::vector<EquilibriumReport> fixed_points_numeric(const VectorField& f, int grid_density = 20) {
  NumericSolveOptions o;
  o.grid_density = grid_density;
  return fixed_points_numeric_detailed(f, o).points;
}

/// Interior fixed points (all frequencies above `margin`).
inline std::vector<EquilibriumReport> interior_fixed_points(const VectorField& f, double margin = 1e-9,
                                                            int grid_density = 20) {
  std::vector<EquilibriumReport> out;
  for (auto& r : fixed_points_numeric(f, grid_density))
    if (r.is_interior(margin)) out.push_back(r);
  return out;
}

/// Fixed points of any system: closed forms where available, numeric otherwise.
inline std::vector<EquilibriumReport> fixed_points(const VectorField& f, int grid_density = 20) {
  if ((f.id() == SystemId::tft_to_allc || f.id() == SystemId::alld_to_allc) && f.params().payoffs.is_default()) {
    std::vector<EquilibriumReport> out;
    for (auto& r : fixed_points_closed_form(f.id(), f.mu(), f.cost())) {
      const bool dup = std::any_of(out.begin(), out.end(), [&](const EquilibriumReport& q) {
        return std::hypot(q.location.x() - r.location.x(), q.location.y() - r.location.y()) < 1e-9;
      });
      if (!dup) out.push_back(r);
    }
    return out;
  }
  return fixed_points_numeric(f, grid_density);
}

inline nlohmann::json to_json(const EquilibriumReport& r) {
  nlohmann::json j;
  j["location"] = {{"x", r.location.x()}, {"y", r.location.y()}, {"z", r.location.z()}};
  j["eigenvalues"] = nlohmann::json::array();
  for (const auto& e : r.eigenvalues) j["eigenvalues"].push_back({{"re", e.real()}, {"im", e.imag()}});
  j["classification"] = to_string(r.classification);
  j["provenance"] = to_string(r.provenance);
  if (r.label > 0) j["label"] = r.label;
  j["residual"] = r.residual;
  return j;
}

inline nlohmann::json to_json(const std::vector<EquilibriumReport>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : v) a.push_back(to_json(r));
  return a;
}

}  // namespace repmut
