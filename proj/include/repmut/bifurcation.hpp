#pragma once

// Bifurcation structure in the (mu, c) plane: closed-form saddle-node and
// Hopf curves of the two unidirectional examples, numeric Hopf detection,
// pseudo-arclength continuation of fold and Hopf loci, Bogdanov-Takens and
// cusp points, homoclinic tracing by cycle-existence bisection, region
// classification and full stability diagrams.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "repmut/cycles.hpp"
#include "repmut/equilibria.hpp"
#include "repmut/parallel.hpp"

namespace repmut {

enum class CurveKind { saddle_node, hopf, homoclinic };
enum class CurveMethod { closed_form, numeric_continuation, bisection };

inline const char* to_string(CurveKind k) {
  switch (k) {
    case CurveKind::saddle_node: return "saddle_node";
    case CurveKind::hopf: return "hopf";
    case CurveKind::homoclinic: return "homoclinic";
  }
  return "?";
}

inline const char* to_string(CurveMethod m) {
  switch (m) {
    case CurveMethod::closed_form: return "closed_form";
    case CurveMethod::numeric_continuation: return "numeric_continuation";
    case CurveMethod::bisection: return "bisection";
  }
  return "?";
}

struct ParamPoint {
  double mu = 0.0;
  double c = 0.0;
};

struct BifurcationCurve {
  CurveKind kind = CurveKind::saddle_node;
  SystemId system = SystemId::general;
  CurveMethod method = CurveMethod::closed_form;
  std::vector<ParamPoint> samples;
};

// ---------------------------------------------------------------------------
// Closed forms

/// Fold curve of the TFT -> ALLC system.
template <class S = double>
S sn_curve_tft_allc(S mu) {
  using std::sqrt;
  if (!(mu >= 0) || mu > 1) throw InvalidArgument("sn_curve_tft_allc: mu outside [0, 1]");
  return ((mu - 11) * mu - 4 * sqrt(S(6)) * sqrt(mu * (3 * mu + 1)) + 6) / ((mu + 3) * (mu + 3));
}

/// Fold curve of the ALLD -> ALLC system; defined for mu in [0, 1/4] and [2/3, 1].
template <class S = double>
S sn_curve_alld_allc(S mu) {
  using std::sqrt;
  if (!(mu >= 0) || mu > 1) throw InvalidArgument("sn_curve_alld_allc: mu outside [0, 1]");
  S rad = (1 - mu) * mu * (3 * mu - 2) * (4 * mu - 1);
  if (rad < 0) {
    if (rad > -S(1e-15)) rad = 0;
    else throw InvalidArgument("sn_curve_alld_allc: negative radicand at mu = " + std::to_string(double(mu)));
  }
  return (mu * (28 * mu - 25) + 6 - 4 * sqrt(S(6)) * sqrt(rad)) / ((3 - 4 * mu) * (3 - 4 * mu));
}

/// Polynomial whose roots in c are the trace-zero loci of the interior
/// point of the TFT -> ALLC system (neutral saddles included).
template <class S = double>
S hopf_condition_tft_allc(S mu, S c) {
  const S m1 = mu - 1;
  return (((m1 * m1 * c + (3 - 13 * mu) * m1) * c + (35 * mu * mu - 34 * mu - 8)) * c + (49 * mu * mu - 4 * mu + 4)) * c -
         72 * mu * mu;
}

/// Same for the ALLD -> ALLC system (cubic in c).
template <class S = double>
S hopf_condition_alld_allc(S mu, S c) {
  return ((c - (6 * mu + 3)) * c + (16 * mu * mu * mu - 55 * mu * mu + 50 * mu - 8)) * c + 64 * mu * mu * mu * mu -
         100 * mu * mu * mu + 165 * mu * mu - 52 * mu + 4;
}

namespace detail {

using CL = std::complex<long double>;

struct FerrariParts {
  long double shift = 0;  // -(3 - 13 mu) / (4 (mu - 1))
  CL a2, a6, a7, t;
};

inline FerrariParts ferrari_parts(long double mu) {
  const auto s = ClosedFormScratch<long double>::compute(mu, 0.0L);
  const long double m1 = mu - 1;
  FerrariParts p;
  p.shift = -(3 - 13 * mu) / (4 * m1);
  p.a2 = s.A2;
  p.a6 = s.A6;
  p.a7 = s.A7;
  p.t = s.A4 / (3 * std::cbrt(2.0L) * m1 * m1) + s.A5 / (3 * m1 * m1 * s.A4);
  return p;
}

inline bool nearly_real(CL z, long double tol = 1e-9L) {
  return std::abs(z.imag()) <= tol * std::max<long double>(1, std::abs(z.real()));
}

}  // namespace detail

/// All four roots of the TFT -> ALLC trace-zero quartic from the
/// Ferrari-form radicals, ordered (-,-), (-,+), (+,-), (+,+) in the sign pair.
inline std::array<std::complex<double>, 4> hopf_quartic_roots_tft_allc(double mu) {
  const auto p = detail::ferrari_parts(mu);
  const detail::CL s = std::sqrt(p.a2 + p.t);
  std::array<std::complex<double>, 4> out{};
  int k = 0;
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      const detail::CL inner = 2.0L * p.a2 - p.t + static_cast<long double>(s1) * p.a6 / (4.0L * s);
      const detail::CL r = p.shift + static_cast<long double>(s1) * 0.5L * s + static_cast<long double>(s2) * 0.5L * std::sqrt(inner);
      out[k++] = std::complex<double>(static_cast<double>(r.real()), static_cast<double>(r.imag()));
    }
  return out;
}

/// Literal nested-radical Hopf expression of the TFT -> ALLC example, including
/// A7 under the inner radical. Returned as a complex number for logging;
/// it does not satisfy the trace-zero condition.
inline std::complex<double> hopf_curve_tft_allc_literal(double mu) {
  const auto p = detail::ferrari_parts(mu);
  const detail::CL r =
      p.shift - 0.5L * std::sqrt(p.a2 + p.t) + 0.5L * std::sqrt(p.a2 - p.t + p.a6 / (4.0L * std::sqrt(p.a7 + p.t)));
  return {static_cast<double>(r.real()), static_cast<double>(r.imag())};
}

/// Hopf curve of the TFT -> ALLC example: the Ferrari root of the trace-zero
/// quartic that passes through the origin. Real for 0 <= mu < ~0.0719.
inline double hopf_curve_tft_allc(double mu) {
  if (!(mu >= 0) || mu > 1) throw InvalidArgument("hopf_curve_tft_allc: mu outside [0, 1]");
  if (mu == 0.0) return 0.0;
  const auto p = detail::ferrari_parts(mu);
  const detail::CL s = std::sqrt(p.a2 + p.t);
  const detail::CL r = p.shift - 0.5L * s + 0.5L * std::sqrt(2.0L * p.a2 - p.t - p.a6 / (4.0L * s));
  if (!detail::nearly_real(r))
    throw NumericalError("hopf_curve_tft_allc: complex value at mu = " + std::to_string(mu));
  const double c = static_cast<double>(r.real());
  const long double scale = 1.0L + 72.0L * mu * mu;
  if (std::abs(hopf_condition_tft_allc<long double>(mu, c)) > 1e-9L * scale)
    throw NumericalError("hopf_curve_tft_allc: value violates the trace-zero condition");
  return c;
}

/// Hopf curve of the ALLD -> ALLC example (Cardano form). The cube root
/// A10 is taken on the branch principal * exp(2 pi i / 3).
inline double hopf_curve_alld_allc(double mu) {
  if (!(mu >= 0) || mu > 1) throw InvalidArgument("hopf_curve_alld_allc: mu outside [0, 1]");
  using L = long double;
  const auto s = ClosedFormScratch<L>::compute(mu, 0.0L);
  const L pi = std::numbers::pi_v<L>;
  const detail::CL w = std::polar<L>(1.0L, 2.0L * pi / 3.0L);
  const detail::CL a10 = s.A10 * w;
  const L sq3 = std::sqrt(3.0L);
  const L p = 48 * (L)mu * mu * mu - 201 * (L)mu * mu + 114 * (L)mu - 33;
  const detail::CL r = -detail::CL(1, -sq3) * a10 / (6.0L * std::cbrt(2.0L)) +
                       detail::CL(1, sq3) * p / (3.0L * std::pow(2.0L, 2.0L / 3.0L) * a10) + detail::CL(2 * (L)mu + 1);
  if (!(std::abs(r.imag()) < 1e-9L))
    throw NumericalError("hopf_curve_alld_allc: imaginary residue " + std::to_string(double(r.imag())));
  return static_cast<double>(r.real());
}

// ---------------------------------------------------------------------------
// Numeric Hopf detection

struct HopfPoint {
  double mu = 0.0;
  double c = 0.0;
  SimplexState location;
  double trace = 0.0;
  double det = 0.0;
  double bracket = 0.0;  // final bisection width in c
};

struct HopfDetectOptions {
  int scan_points = 80;  // log-spaced when c_lo > 0
  double tol = 1e-12;    // bisection width
  double min_det = 0.0;  // strict det > min_det at the candidate point
};

namespace detail {

struct TrackedPoint {
  Vec2<long double> p;
  long double trace = 0, det = 0;
};

/// Interior fixed point with positive determinant closest to the TFT-ALLC
/// edge (smallest x); nullopt when there is none.
inline std::optional<TrackedPoint> hopf_candidate(const VectorField& f, double min_det) {
  std::optional<TrackedPoint> best;
  for (const auto& r : fixed_points(f)) {
    if (!r.is_interior(1e-9)) continue;
    const auto j = f.jacobian<long double>(r.location.raw_x(), r.location.raw_y());
    if (!(j.det() > min_det)) continue;
    if (!best || r.location.raw_x() < best->p.x) best = TrackedPoint{{r.location.raw_x(), r.location.raw_y()}, j.trace(), j.det()};
  }
  return best;
}

/// Newton continuation of a fixed point to a nearby parameter value.
inline std::optional<TrackedPoint> track(const VectorField& f, Vec2<long double> guess) {
  NumericSolveOptions o;
  o.residual_tol = 1e-13;
  const auto r = newton(f, guess, o);
  if (!r) return std::nullopt;
  const auto j = f.jacobian<long double>(r->x, r->y);
  return TrackedPoint{*r, j.trace(), j.det()};
}

inline std::vector<double> scan_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  const bool log_space = lo > 0.0 && hi / lo > 20.0;
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    g[i] = log_space ? lo * std::pow(hi / lo, s) : lo + s * (hi - lo);
  }
  return g;
}

}  // namespace detail

/// Hopf value of c at fixed mu: first sign change of trace(J) at the
/// interior det > 0 fixed point on a scan of [c_lo, c_hi], refined by
/// bisection along the Newton-continued branch. Where the branch vanishes
/// between scan points the interval is subdivided by continuation.
inline HopfPoint hopf_detect_numeric(const VectorField& f0, double mu, double c_lo, double c_hi,
                                     const HopfDetectOptions& opt = {}) {
  if (!(c_hi > c_lo)) throw InvalidArgument("hopf_detect_numeric: empty c range");
  using detail::TrackedPoint;
  auto tracked = [&](double c, const TrackedPoint& from) -> std::optional<TrackedPoint> {
    auto t = detail::track(f0.with(mu, c), from.p);
    if (!t || !(t->det > opt.min_det)) return std::nullopt;
    if (!(t->p.x > 0 && t->p.y > 0 && t->p.x + t->p.y < 1)) return std::nullopt;
    if (std::hypot(double(t->p.x - from.p.x), double(t->p.y - from.p.y)) > 0.05) return std::nullopt;
    return t;
  };
  auto bisect = [&](double lo, TrackedPoint at_lo, double hi) -> HopfPoint {
    while (hi - lo > opt.tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      auto m = detail::track(f0.with(mu, mid), at_lo.p);
      if (!m) throw NonConvergence("hopf_detect_numeric: lost the fixed point during bisection");
      if ((m->trace > 0) == (at_lo.trace > 0)) {
        lo = mid;
        at_lo = *m;
      } else {
        hi = mid;
      }
    }
    const double root = 0.5 * (lo + hi);
    auto m = detail::track(f0.with(mu, root), at_lo.p);
    if (!m) throw NonConvergence("hopf_detect_numeric: lost the fixed point at the root");
    if (!(m->det > 0)) throw NoSignChange("hopf_detect_numeric: trace zero with det <= 0 (neutral saddle)");
    HopfPoint h;
    h.mu = mu;
    h.c = root;
    h.location = SimplexState(double(m->p.x), double(m->p.y));
    h.trace = double(m->trace);
    h.det = double(m->det);
    h.bracket = hi - lo;
    return h;
  };
  // walks [a, b] by continuation from `from`, subdividing where the branch ends
  std::function<std::optional<HopfPoint>(double, TrackedPoint, double, int)> walk =
      [&](double a, TrackedPoint from, double b, int depth) -> std::optional<HopfPoint> {
    const int n = 32;
    for (int k = 1; k <= n; ++k) {
      const double cc = a + (b - a) * k / n;
      auto t = tracked(cc, from);
      if (!t) {
        if (depth > 0) return walk(a + (b - a) * (k - 1) / n, from, cc, depth - 1);
        return std::nullopt;
      }
      if ((t->trace > 0) != (from.trace > 0)) return bisect(a + (b - a) * (k - 1) / n, from, cc);
      from = *t;
    }
    return std::nullopt;
  };

  const auto grid = detail::scan_grid(c_lo, c_hi, std::max(opt.scan_points, 2));
  std::optional<TrackedPoint> prev;
  double c_prev = 0.0;
  for (double c : grid) {
    auto cur = detail::hopf_candidate(f0.with(mu, c), opt.min_det);
    if (prev) {
      auto linked = tracked(c, *prev);
      const bool same = linked && cur && std::hypot(double(linked->p.x - cur->p.x), double(linked->p.y - cur->p.y)) < 1e-6;
      if (same) {
        if ((prev->trace > 0) != (cur->trace > 0)) return bisect(c_prev, *prev, c);
      } else if (auto h = walk(c_prev, *prev, c, 2)) {
        return *h;
      }
    }
    if (cur) {
      prev = cur;
      c_prev = c;
    } else {
      prev.reset();
    }
  }
  throw NoSignChange("hopf_detect_numeric: no trace sign change with det > 0 in the c range");
}

// ---------------------------------------------------------------------------
// Extended systems in (x, y, mu, c)

/// Defining condition appended to the fixed-point equations.
enum class Condition { det, trace, cusp };

struct ExtendedPoint {
  long double x = 0, y = 0, mu = 0, c = 0;
};

namespace detail {

using V4 = Eigen::Matrix<long double, 4, 1>;
using M34 = Eigen::Matrix<long double, 3, 4>;
using M44 = Eigen::Matrix<long double, 4, 4>;

inline V4 to_v4(const ExtendedPoint& p) { return V4(p.x, p.y, p.mu, p.c); }
inline ExtendedPoint from_v4(const V4& v) { return {v(0), v(1), v(2), v(3)}; }

/// Quadratic coefficient of the fold normal form, w . D2F(v, v), with unit
/// right/left null vectors. Vanishes at a cusp.
inline long double cusp_coefficient(const VectorField& f, long double x, long double y, long double mu, long double c) {
  const auto j = f.jacobian_at<long double>(x, y, mu, c);
  Vec2<long double> v{j.xy, -j.xx}, v2{j.yy, -j.yx};
  if (v2.norm() > v.norm()) v = v2;
  Vec2<long double> w{j.yx, -j.xx}, w2{j.yy, -j.xy};
  if (w2.norm() > w.norm()) w = w2;
  const long double nv = v.norm(), nw = w.norm();
  if (!(nv > 0) || !(nw > 0)) return 0;
  v = {v.x / nv, v.y / nv};
  w = {w.x / nw, w.y / nw};
  if (w.x + 0.5L * w.y < 0) w = {-w.x, -w.y};
  // the field is cubic, so the central second difference is exact up to rounding
  const long double e = 1e-3L;
  const auto fp = f.eval_at<long double>(x + e * v.x, y + e * v.y, mu, c);
  const auto f0 = f.eval_at<long double>(x, y, mu, c);
  const auto fm = f.eval_at<long double>(x - e * v.x, y - e * v.y, mu, c);
  const long double bx = (fp.x - 2 * f0.x + fm.x) / (e * e);
  const long double by = (fp.y - 2 * f0.y + fm.y) / (e * e);
  return w.x * bx + w.y * by;
}

inline long double condition_value(const VectorField& f, Condition k, const V4& u) {
  switch (k) {
    case Condition::det: return f.jacobian_at<long double>(u(0), u(1), u(2), u(3)).det();
    case Condition::trace: return f.jacobian_at<long double>(u(0), u(1), u(2), u(3)).trace();
    case Condition::cusp: return cusp_coefficient(f, u(0), u(1), u(2), u(3));
  }
  return 0;
}

/// (F1, F2, condition) at u.
inline Eigen::Matrix<long double, 3, 1> extended_residual(const VectorField& f, Condition k, const V4& u) {
  const auto F = f.eval_at<long double>(u(0), u(1), u(2), u(3));
  return {F.x, F.y, condition_value(f, k, u)};
}

inline M34 extended_jacobian(const VectorField& f, Condition k, const V4& u) {
  M34 d;
  for (int i = 0; i < 4; ++i) {
    const long double h = 1e-7L * std::max<long double>(1, std::abs(u(i)));
    V4 a = u, b = u;
    a(i) += h;
    b(i) -= h;
    d.col(i) = (extended_residual(f, k, a) - extended_residual(f, k, b)) / (2 * h);
  }
  return d;
}

/// Null vector of a full-rank 3x4 matrix from signed 3x3 minors.
inline V4 null_vector(const M34& a) {
  V4 t;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix<long double, 3, 3> m;
    int col = 0;
    for (int j = 0; j < 4; ++j)
      if (j != i) m.col(col++) = a.col(j);
    t(i) = (i % 2 ? -1 : 1) * m.determinant();
  }
  const long double n = t.norm();
  if (!(n > 0)) throw NonConvergence("continuation: singular extended Jacobian");
  return t / n;
}

/// Newton on (F1, F2, cond_a, cond_b) over all four unknowns.
inline std::optional<V4> newton4(const VectorField& f, Condition a, Condition b, V4 u, int max_iter = 60) {
  auto residual = [&](const V4& v) {
    V4 r;
    const auto ra = extended_residual(f, a, v);
    r << ra(0), ra(1), ra(2), condition_value(f, b, v);
    return r;
  };
  V4 r = residual(u);
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() < 1e-17L) break;
    M44 j;
    j.topRows<3>() = extended_jacobian(f, a, u);
    for (int i = 0; i < 4; ++i) {
      const long double h = 1e-7L * std::max<long double>(1, std::abs(u(i)));
      V4 p = u, m = u;
      p(i) += h;
      m(i) -= h;
      j(3, i) = (condition_value(f, b, p) - condition_value(f, b, m)) / (2 * h);
    }
    const V4 step = j.fullPivLu().solve(-r);
    if (!step.allFinite()) return std::nullopt;
    long double lambda = 1;
    bool ok = false;
    for (int k = 0; k < 30; ++k) {
      const V4 q = u + lambda * step;
      const V4 rq = residual(q);
      if (rq.norm() < r.norm() || rq.norm() < 1e-17L) {
        u = q;
        r = rq;
        ok = true;
        break;
      }
      lambda /= 2;
    }
    if (!ok) break;
  }
  if (!(r.norm() < 1e-12L)) return std::nullopt;
  return u;
}

/// Newton on (F1, F2, cond) over (x, y, c) at fixed mu.
inline std::optional<V4> newton3_fixed_mu(const VectorField& f, Condition k, V4 u, int max_iter = 60) {
  auto r = extended_residual(f, k, u);
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() < 1e-17L) break;
    const M34 d = extended_jacobian(f, k, u);
    Eigen::Matrix<long double, 3, 3> j;
    j << d.col(0), d.col(1), d.col(3);
    const Eigen::Matrix<long double, 3, 1> s = j.fullPivLu().solve(-r);
    if (!s.allFinite()) return std::nullopt;
    long double lambda = 1;
    bool ok = false;
    for (int h = 0; h < 30; ++h) {
      V4 q = u;
      q(0) += lambda * s(0);
      q(1) += lambda * s(1);
      q(3) += lambda * s(2);
      const auto rq = extended_residual(f, k, q);
      if (rq.norm() < r.norm()) {
        u = q;
        r = rq;
        ok = true;
        break;
      }
      lambda /= 2;
    }
    if (!ok) break;
  }
  if (!(r.norm() < 1e-12L)) return std::nullopt;
  return u;
}

}  // namespace detail

struct ContinuationOptions {
  double h_initial = 1e-3;
  double h_min = 1e-9;
  double h_max = 4e-3;
  int max_steps = 20000;
  double mu_min = 1e-3, mu_max = 0.5;
  double c_min = 1e-4, c_max = 3.0;
  double margin = 1e-7;  // distance kept from the simplex boundary
};

struct ContinuationPoint {
  ExtendedPoint u;
  long double trace = 0, det = 0, cusp = 0;
  std::array<long double, 4> tangent{};
};

namespace detail {

inline ContinuationPoint make_cpoint(const VectorField& f, const V4& u, const V4& t) {
  ContinuationPoint p;
  p.u = from_v4(u);
  const auto j = f.jacobian_at<long double>(u(0), u(1), u(2), u(3));
  p.trace = j.trace();
  p.det = j.det();
  p.cusp = cusp_coefficient(f, u(0), u(1), u(2), u(3));
  for (int i = 0; i < 4; ++i) p.tangent[i] = t(i);
  return p;
}

inline bool inside(const V4& u, const ContinuationOptions& o) {
  const long double z = 1 - u(0) - u(1);
  return u(0) > o.margin && u(1) > o.margin && z > o.margin && u(2) >= o.mu_min && u(2) <= o.mu_max &&
         u(3) >= o.c_min && u(3) <= o.c_max;
}

}  // namespace detail

/// Pseudo-arclength continuation of {F = 0, cond = 0} from `start`,
/// leaving in the direction whose mu component has sign `direction`
/// (or +x when the tangent has no mu component). Stops at the window edge,
/// on `stop(point)` returning true, or after max_steps.
template <class Stop>
std::vector<ContinuationPoint> continue_curve(const VectorField& f, Condition cond, const ExtendedPoint& start,
                                              int direction, const ContinuationOptions& o, Stop&& stop) {
  using namespace detail;
  V4 u = to_v4(start);
  V4 t = null_vector(extended_jacobian(f, cond, u));
  if ((direction > 0) != (t(2) > 0)) t = -t;
  std::vector<ContinuationPoint> out{make_cpoint(f, u, t)};
  long double h = o.h_initial;
  for (int step = 0; step < o.max_steps; ++step) {
    bool accepted = false;
    V4 v;
    int iters = 0;
    while (h >= o.h_min) {
      const V4 pred = u + h * t;
      v = pred;
      bool conv = false;
      for (iters = 0; iters < 12; ++iters) {
        const auto g = extended_residual(f, cond, v);
        const long double arc = t.dot(v - pred);
        M44 j;
        j.topRows<3>() = extended_jacobian(f, cond, v);
        j.row(3) = t.transpose();
        V4 rhs;
        rhs << -g(0), -g(1), -g(2), -arc;
        const V4 dv = j.fullPivLu().solve(rhs);
        if (!dv.allFinite()) break;
        v += dv;
        if (dv.norm() < 1e-15L) {
          conv = extended_residual(f, cond, v).norm() < 1e-13L;
          break;
        }
      }
      if (conv && (v - u).norm() < 3 * h) {
        accepted = true;
        break;
      }
      h /= 2;
    }
    if (!accepted) break;
    V4 tn = null_vector(extended_jacobian(f, cond, v));
    if (tn.dot(t) < 0) tn = -tn;
    u = v;
    t = tn;
    if (!inside(u, o)) break;
    out.push_back(make_cpoint(f, u, t));
    if (stop(out.back())) break;
    if (iters <= 3) h = std::min<long double>(h * 1.5L, o.h_max);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fold curve, BT and cusp

struct CodimTwoPoint {
  std::string kind;  // "BT" or "CP"
  double mu = 0.0;
  double c = 0.0;
  SimplexState location;
  long double trace = 0, det = 0, cusp = 0;
  double residual = 0.0;  // max-norm of the defining system
  std::array<std::complex<double>, 2> eigenvalues{};
};

struct FoldAnalysis {
  std::vector<std::vector<ContinuationPoint>> branches;
  std::vector<CodimTwoPoint> bt;
  std::vector<CodimTwoPoint> cusp;
};

/// Fold points at fixed mu: count changes of the fixed-point set along a
/// scan of c, each refined by Newton on (F, det) over (x, y, c).
inline std::vector<ExtendedPoint> saddle_node_seeds(const VectorField& f0, double mu, double c_lo, double c_hi,
                                                   int n = 160) {
  std::vector<ExtendedPoint> out;
  const auto grid = detail::scan_grid(c_lo, c_hi, n);
  std::vector<std::vector<EquilibriumReport>> fps(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) fps[i] = fixed_points(f0.with(mu, grid[i]));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (fps[i].size() == fps[i + 1].size()) continue;
    const std::size_t k = fps[i].size() > fps[i + 1].size() ? i : i + 1;
    const auto& pts = fps[k];
    double best = 1e9;
    std::array<double, 2> mid{};
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double d = pts[a].location.distance(pts[b].location);
        if (d < best) {
          best = d;
          mid = {0.5 * (pts[a].location.raw_x() + pts[b].location.raw_x()),
                 0.5 * (pts[a].location.raw_y() + pts[b].location.raw_y())};
        }
      }
    if (best > 0.5) continue;
    detail::V4 u(mid[0], mid[1], mu, grid[k]);
    const auto r = detail::newton3_fixed_mu(f0, Condition::det, u);
    if (!r) continue;
    const double c = static_cast<double>((*r)(3));
    const double w = grid[i + 1] - grid[i];
    if (c < grid[i] - w || c > grid[i + 1] + w) continue;
    const double x = double((*r)(0)), y = double((*r)(1));
    if (!(x > 1e-9 && y > 1e-9 && x + y < 1 - 1e-9)) continue;
    bool dup = false;
    for (const auto& e : out)
      if (std::abs(double(e.c) - c) < 1e-8 && std::hypot(double(e.x) - x, double(e.y) - y) < 1e-6) dup = true;
    if (!dup) out.push_back(detail::from_v4(*r));
  }
  return out;
}

namespace detail {

inline CodimTwoPoint finish_codim2(const VectorField& f, const V4& u, const char* kind) {
  CodimTwoPoint p;
  p.kind = kind;
  p.mu = double(u(2));
  p.c = double(u(3));
  p.location = SimplexState(double(u(0)), double(u(1)));
  const auto j = f.jacobian_at<long double>(u(0), u(1), u(2), u(3));
  p.trace = j.trace();
  p.det = j.det();
  p.cusp = cusp_coefficient(f, u(0), u(1), u(2), u(3));
  const auto F = f.eval_at<long double>(u(0), u(1), u(2), u(3));
  const long double second = std::string(kind) == "BT" ? p.trace : p.cusp;
  p.residual = double(std::max({std::abs(F.x), std::abs(F.y), std::abs(p.det), std::abs(second)}));
  const auto ev = j.eigenvalues();
  for (int i = 0; i < 2; ++i) p.eigenvalues[i] = {double(ev[i].real()), double(ev[i].imag())};
  return p;
}

inline bool near_existing(const std::vector<CodimTwoPoint>& v, const V4& u) {
  for (const auto& p : v)
    if (std::abs(p.mu - double(u(2))) < 1e-7 && std::abs(p.c - double(u(3))) < 1e-7) return true;
  return false;
}

inline bool on_branches(const std::vector<std::vector<ContinuationPoint>>& bs, const ExtendedPoint& e) {
  for (const auto& b : bs)
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      const auto& p = b[i].u;
      const auto& q = b[i + 1].u;
      if ((p.mu - e.mu) * (q.mu - e.mu) > 0) continue;
      const long double s = q.mu == p.mu ? 0 : (e.mu - p.mu) / (q.mu - p.mu);
      const long double c = p.c + s * (q.c - p.c), x = p.x + s * (q.x - p.x), y = p.y + s * (q.y - p.y);
      if (std::abs(double(c - e.c)) < 1e-4 && std::hypot(double(x - e.x), double(y - e.y)) < 1e-3) return true;
    }
  return false;
}

}  // namespace detail

/// Continues every fold branch through the seeds found at mu0 and locates
/// BT points (trace = 0 on the fold) and cusps (quadratic coefficient = 0).
inline FoldAnalysis analyze_folds(const VectorField& f0, const ContinuationOptions& o,
                                  const std::vector<double>& seed_mus = {0.01, 0.005, 0.02, 0.04}) {
  if (f0.id() == SystemId::replicator) throw InvalidArgument("fold continuation needs a mutation parameter");
  FoldAnalysis fa;
  for (double mu0 : seed_mus) {
    if (mu0 < o.mu_min || mu0 > o.mu_max) continue;
    const auto seeds = saddle_node_seeds(f0, mu0, std::max(o.c_min, 1e-4), std::min(o.c_max, 3.0));
    for (const auto& s : seeds) {
      if (detail::on_branches(fa.branches, s)) continue;
      auto never = [](const ContinuationPoint&) { return false; };
      auto fwd = continue_curve(f0, Condition::det, s, +1, o, never);
      auto bwd = continue_curve(f0, Condition::det, s, -1, o, never);
      std::vector<ContinuationPoint> b(bwd.rbegin(), bwd.rend());
      b.insert(b.end(), fwd.begin() + 1, fwd.end());
      fa.branches.push_back(std::move(b));
    }
    if (!fa.branches.empty()) break;
  }
  for (const auto& b : fa.branches) {
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      const auto& p = b[i];
      const auto& q = b[i + 1];
      auto guess = [&](long double wp, long double wq) {
        const long double s = wp / (wp - wq);
        return detail::V4(p.u.x + s * (q.u.x - p.u.x), p.u.y + s * (q.u.y - p.u.y), p.u.mu + s * (q.u.mu - p.u.mu),
                          p.u.c + s * (q.u.c - p.u.c));
      };
      if ((p.trace > 0) != (q.trace > 0)) {
        if (auto u = detail::newton4(f0, Condition::det, Condition::trace, guess(p.trace, q.trace)))
          if (!detail::near_existing(fa.bt, *u)) fa.bt.push_back(detail::finish_codim2(f0, *u, "BT"));
      }
      // cusp: the (mu, c) projection of the tangent reverses
      if ((p.tangent[2] > 0) != (q.tangent[2] > 0) && (p.tangent[3] > 0) != (q.tangent[3] > 0) &&
          (p.cusp > 0) != (q.cusp > 0)) {
        if (auto u = detail::newton4(f0, Condition::det, Condition::cusp, guess(p.cusp, q.cusp)))
          if (!detail::near_existing(fa.cusp, *u)) fa.cusp.push_back(detail::finish_codim2(f0, *u, "CP"));
      }
    }
  }
  auto by_mu = [](const CodimTwoPoint& a, const CodimTwoPoint& b) { return a.mu < b.mu; };
  std::sort(fa.bt.begin(), fa.bt.end(), by_mu);
  std::sort(fa.cusp.begin(), fa.cusp.end(), by_mu);
  return fa;
}

/// Bogdanov-Takens point of a system with one mutation parameter.
inline CodimTwoPoint bt_point(const VectorField& f0, const ContinuationOptions& o = {}) {
  const auto fa = analyze_folds(f0, o);
  for (const auto& p : fa.bt)
    if (p.residual < 1e-10) return p;
  throw NonConvergence("bt_point: no Bogdanov-Takens point located");
}

inline CodimTwoPoint cusp_point(const VectorField& f0, const ContinuationOptions& o = {}) {
  const auto fa = analyze_folds(f0, o);
  for (const auto& p : fa.cusp)
    if (p.residual < 1e-10) return p;
  throw NonConvergence("cusp_point: no cusp located");
}

/// Hopf locus {F = 0, trace = 0, det > 0} continued in both directions from
/// a numerically detected Hopf point.
inline std::vector<ContinuationPoint> continue_hopf(const VectorField& f0, const HopfPoint& h,
                                                    const ContinuationOptions& o) {
  const ExtendedPoint s{h.location.raw_x(), h.location.raw_y(), h.mu, h.c};
  auto leave = [](const ContinuationPoint& p) { return !(p.det > 0); };
  auto fwd = continue_curve(f0, Condition::trace, s, +1, o, leave);
  auto bwd = continue_curve(f0, Condition::trace, s, -1, o, leave);
  if (!fwd.empty() && !(fwd.back().det > 0)) fwd.pop_back();
  if (!bwd.empty() && !(bwd.back().det > 0)) bwd.pop_back();
  std::vector<ContinuationPoint> b(bwd.rbegin(), bwd.rend());
  if (!fwd.empty()) b.insert(b.end(), fwd.begin() + 1, fwd.end());
  return b;
}

// ---------------------------------------------------------------------------
// Amplitude scaling past a Hopf point

struct AmplitudeScaling {
  double mu = 0.0;
  double c_hopf = 0.0;
  double dc = 0.0;
  int side = 0;  // sign of c - c_hopf on the cycle side
  double amplitude_far = 0.0;   // at offset dc
  double amplitude_near = 0.0;  // at offset dc / 4
  double ratio = 0.0;           // ~2 for a supercritical Hopf
};

/// Cycle amplitudes at offsets dc and dc/4 from c_hopf on the side where
/// the interior point is unstable.
inline AmplitudeScaling amplitude_scaling(const VectorField& f0, double mu, double c_hopf, double dc,
                                          double t_max = 200000.0) {
  AmplitudeScaling a{mu, c_hopf, dc};
  auto unstable_at = [&](double c) {
    const auto anchor = choose_anchor(f0.with(mu, c));
    return anchor.equilibrium && (anchor.equilibrium->classification == Stability::unstable_spiral ||
                                  anchor.equilibrium->classification == Stability::unstable_node);
  };
  const bool below = unstable_at(c_hopf - dc), above = unstable_at(c_hopf + dc);
  if (below == above) throw NoSignChange("amplitude_scaling: anchor stability does not change across c_hopf");
  a.side = below ? -1 : 1;
  CycleSearchOptions so;
  so.verify_stability = false;
  auto amp = [&](double off) {
    const auto r = detect_limit_cycle(f0.with(mu, c_hopf + a.side * off), std::nullopt, t_max, so);
    if (!r) throw NonConvergence("amplitude_scaling: no cycle on the unstable side");
    return r->amplitude;
  };
  a.amplitude_far = amp(dc);
  a.amplitude_near = amp(dc / 4);
  a.ratio = a.amplitude_far / a.amplitude_near;
  return a;
}

// ---------------------------------------------------------------------------
// Homoclinic curve

struct HomoclinicOptions {
  double tol = 1e-4;  // final bracket width in c
  double t_max = 5000.0;
  double t_max_limit = 80000.0;  // horizon is widened x4 up to this on Undetermined
  CycleSearchOptions search = [] {
    CycleSearchOptions o;
    o.verify_stability = false;
    return o;
  }();
};

struct HomoclinicResult {
  double mu = 0.0;
  double c = 0.0;         // bracket midpoint
  double c_cycle = 0.0;   // bracket end with a cycle
  double c_absent = 0.0;  // bracket end without
  double period_near = 0.0;       // period at c_cycle
  double period_reference = 0.0;  // period at the initial cycle-side end
  int probes = 0;
};

struct CycleProbe {
  std::optional<LimitCycleRecord> cycle;
  std::optional<Stability> anchor;  // classification of the section anchor
};

/// Cycle existence at (mu, c) from the default seed, widening the horizon
/// on Undetermined.
inline CycleProbe probe_cycle(const VectorField& f0, double mu, double c, const HomoclinicOptions& o = {}) {
  const VectorField f = f0.with(mu, c);
  const CycleAnchor anchor = choose_anchor(f);
  CycleProbe p;
  if (anchor.equilibrium) p.anchor = anchor.equilibrium->classification;
  CycleSearchOptions so = o.search;
  for (double t = o.t_max;; t *= 4) {
    so.t_max = t;
    const auto out = search_attractor(f, default_seed(anchor, so.seed_offset), anchor, so);
    if (out.result == SearchResult::fixed_point) return p;
    if (out.result == SearchResult::cycle) {
      p.cycle = record_cycle(f, out, anchor, so);
      return p;
    }
    if (t >= o.t_max_limit)
      throw Undetermined("probe_cycle: undetermined at mu = " + std::to_string(mu) + ", c = " + std::to_string(c));
  }
}

/// Homoclinic value of c at fixed mu by bisection on cycle existence.
/// `c_a`, `c_b` must straddle the existence boundary.
inline HomoclinicResult homoclinic_trace(const VectorField& f0, double mu, double c_a, double c_b,
                                         const HomoclinicOptions& o = {}) {
  HomoclinicResult r;
  r.mu = mu;
  const auto pa = probe_cycle(f0, mu, c_a, o);
  const auto pb = probe_cycle(f0, mu, c_b, o);
  r.probes = 2;
  if (pa.cycle.has_value() == pb.cycle.has_value())
    throw NoSignChange("homoclinic_trace: bracket does not straddle the cycle-existence boundary");
  double cc = pa.cycle ? c_a : c_b;
  double cn = pa.cycle ? c_b : c_a;
  double period = pa.cycle ? pa.cycle->period : pb.cycle->period;
  r.period_reference = period;
  while (std::abs(cc - cn) >= o.tol) {
    const double mid = 0.5 * (cc + cn);
    const auto pm = probe_cycle(f0, mu, mid, o);
    ++r.probes;
    if (pm.cycle) {
      cc = mid;
      period = pm.cycle->period;
    } else {
      cn = mid;
    }
  }
  r.c_cycle = cc;
  r.c_absent = cn;
  r.c = 0.5 * (cc + cn);
  r.period_near = period;
  return r;
}

/// Bracket around the homoclinic value of c at fixed mu: a change of cycle
/// existence along a scan of [c_lo, c_hi] across which the anchor keeps its
/// stability (a change of anchor stability marks the Hopf boundary instead).
inline std::optional<std::pair<double, double>> homoclinic_bracket(const VectorField& f0, double mu, double c_lo,
                                                                   double c_hi, int n = 24,
                                                                   const HomoclinicOptions& o = {}) {
  const auto grid = detail::scan_grid(c_lo, c_hi, n);
  std::vector<std::optional<CycleProbe>> probes(grid.size());
  HomoclinicOptions quick = o;
  quick.t_max_limit = o.t_max;  // scan points that stay undetermined are skipped
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      probes[i] = probe_cycle(f0, mu, grid[i], quick);
    } catch (const NumericalError&) {
    }
  }
  auto unstable = [](const std::optional<Stability>& s) {
    return s && (*s == Stability::unstable_spiral || *s == Stability::unstable_node);
  };
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const auto& a = probes[i];
    const auto& b = probes[i + 1];
    if (!a || !b || a->cycle.has_value() == b->cycle.has_value()) continue;
    const auto& with = a->cycle ? *a : *b;
    const auto& without = a->cycle ? *b : *a;
    // Hopf side: the anchor regains stability where the cycle disappears
    if (unstable(with.anchor) && without.anchor && !unstable(without.anchor) &&
        (*without.anchor == Stability::stable_spiral || *without.anchor == Stability::stable_node))
      continue;
    return std::make_pair(grid[i], grid[i + 1]);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Regions

struct RegionLabel {
  int id = 0;  // 0 = unclassified
  bool almost_alld = false;
  bool stable_spiral = false;
  bool stable_cycle = false;
  int fixed_points = 0;
  int interior_fixed_points = 0;
  int undetermined_starts = 0;
};

/// Region id as a pure function of the inventory. Unidirectional systems:
/// 1 = ALLD only without interior points, 2 = ALLD only with interior
/// points, 3 = ALLD + cycle, 4 = ALLD + spiral. Uniform mutation: 1 = one
/// fixed point attracting near ALLD, 2 = three fixed points with the
/// near-ALLD attractor only, 3 = near-ALLD + cycle, 4 = cycle only,
/// 5 = spiral only.
inline int region_id(SystemId id, const RegionLabel& l) {
  const bool a = l.almost_alld, s = l.stable_spiral, y = l.stable_cycle;
  if (id == SystemId::uniform) {
    if (a && !s && !y) return l.fixed_points <= 1 ? 1 : 2;
    if (a && y && !s) return 3;
    if (!a && y && !s) return 4;
    if (!a && s && !y) return 5;
    return 0;
  }
  if (a && !s && !y) return l.interior_fixed_points == 0 ? 1 : 2;
  if (a && y && !s) return 3;
  if (a && s && !y) return 4;
  return 0;
}

/// Near-ALLD attractor: a stable boundary point, or the stable interior
/// point of largest x when x > 1/2. Other stable points are the
/// cooperative attractor (reported as stable_spiral).
inline bool is_almost_alld(const EquilibriumReport& r, double x_max_stable) {
  if (!r.is_stable()) return false;
  if (!r.is_interior(1e-9)) return true;
  return r.location.x() >= x_max_stable && r.location.x() > 0.5;
}

struct ClassifyOptions {
  CycleSearchOptions search = [] {
    CycleSearchOptions o;
    o.verify_stability = false;
    return o;
  }();
  double t_max_limit = 20000.0;
};

/// Attractor inventory at (mu, c): stable fixed points come from the
/// equilibrium list; cycles from integrating a fan of starts.
inline RegionLabel classify_region(const VectorField& f0, double mu, double c, const ClassifyOptions& o = {}) {
  const VectorField f = f0.with(mu, c);
  const CycleAnchor anchor = choose_anchor(f);
  RegionLabel l;
  l.fixed_points = static_cast<int>(anchor.fixed_points.size());
  double x_max = -1.0;
  for (const auto& r : anchor.fixed_points) {
    if (r.is_interior(1e-9)) ++l.interior_fixed_points;
    if (r.is_stable()) x_max = std::max(x_max, r.location.x());
  }
  for (const auto& r : anchor.fixed_points) {
    if (!r.is_stable()) continue;
    if (is_almost_alld(r, x_max)) l.almost_alld = true;
    else l.stable_spiral = true;
  }
  std::vector<SimplexState> starts{default_seed(anchor, o.search.seed_offset)};
  for (auto [x, y] : std::initializer_list<std::pair<double, double>>{
           {1.0 / 3, 1.0 / 3}, {0.05, 0.05}, {0.05, 0.9}, {0.2, 0.6}, {0.45, 0.45}, {0.6, 0.2}, {0.2, 0.2}, {0.9, 0.05}})
    starts.emplace_back(x, y);
  for (const auto& s0 : starts) {
    CycleSearchOptions so = o.search;
    std::optional<SearchOutcome> out;
    for (double t = so.t_max; t <= o.t_max_limit; t *= 4) {
      so.t_max = t;
      out = search_attractor(f, s0, anchor, so);
      if (out->result != SearchResult::undetermined) break;
    }
    if (out->result == SearchResult::undetermined) {
      ++l.undetermined_starts;
      continue;
    }
    if (out->result == SearchResult::cycle) {
      l.stable_cycle = true;
      break;
    }
  }
  if (l.undetermined_starts > 0 && !l.stable_cycle)
    throw Undetermined("classify_region: undetermined attractor at mu = " + std::to_string(mu) +
                       ", c = " + std::to_string(c));
  l.id = region_id(f0.id(), l);
  return l;
}


// ---------------------------------------------------------------------------
// Stability diagram

struct DiagramOptions {
  double mu_min = 0.001;
  double mu_max = 0.4;
  double c_min = 0.001;
  double c_max = 1.0;
  int resolution = 200;  // samples per closed-form curve
  int grid = 40;         // classification grid points per axis; 0 skips the grid
  int homoclinic_samples = 24;
  int threads = 0;
  ContinuationOptions continuation;
  HomoclinicOptions homoclinic;
  ClassifyOptions classify;
};

struct StabilityDiagram {
  SystemId system = SystemId::general;
  DiagramOptions options;
  std::vector<BifurcationCurve> curves;
  std::vector<CodimTwoPoint> points;
  std::vector<HomoclinicResult> homoclinic;
  std::vector<double> mu_axis, c_axis;
  std::vector<RegionLabel> grid;  // row-major: grid[i_c * mu_axis.size() + i_mu]
  std::vector<std::string> warnings;

  const RegionLabel& at(std::size_t i_mu, std::size_t i_c) const { return grid[i_c * mu_axis.size() + i_mu]; }
  std::vector<int> region_ids() const {
    std::vector<int> ids;
    for (const auto& l : grid)
      if (l.id > 0 && std::find(ids.begin(), ids.end(), l.id) == ids.end()) ids.push_back(l.id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }
  const BifurcationCurve* find(CurveKind k, CurveMethod m) const {
    for (const auto& c : curves)
      if (c.kind == k && c.method == m) return &c;
    return nullptr;
  }
  bool has_point(const std::string& kind) const {
    return std::any_of(points.begin(), points.end(), [&](const CodimTwoPoint& p) { return p.kind == kind; });
  }
};

namespace detail {

/// Samples `fn` on the sub-intervals of [lo, hi] where it returns a value.
/// Validity is located on a scan and its ends refined by bisection.
inline std::vector<ParamPoint> sample_valid(const std::function<std::optional<double>(double)>& fn, double lo,
                                            double hi, int n) {
  constexpr int kScan = 400;
  std::vector<ParamPoint> out;
  auto ok = [&](double m) { return fn(m).has_value(); };
  auto edge = [&](double a, double b) {  // a valid, b not (either order)
    for (int k = 0; k < 60; ++k) {
      const double m = 0.5 * (a + b);
      (ok(m) ? a : b) = m;
    }
    return a;
  };
  std::vector<std::pair<double, double>> spans;
  double prev = lo;
  bool prev_ok = ok(lo);
  double start = lo;
  for (int i = 1; i <= kScan; ++i) {
    const double m = lo + (hi - lo) * i / kScan;
    const bool v = ok(m);
    if (v && !prev_ok) start = edge(m, prev);
    if (!v && prev_ok) spans.emplace_back(start, edge(prev, m));
    prev = m;
    prev_ok = v;
  }
  if (prev_ok) spans.emplace_back(start, hi);
  for (auto [a, b] : spans) {
    const int k = std::max(2, n);
    for (int i = 0; i < k; ++i) {
      const double m = a + (b - a) * i / (k - 1);
      if (auto c = fn(m)) out.push_back({m, *c});
    }
  }
  return out;
}

/// True when an interior fixed point at (mu, c) has trace ~ 0 and det > 0.
inline bool is_hopf(const VectorField& f0, double mu, double c) {
  for (const auto& r : fixed_points(f0.with(mu, c))) {
    if (!r.is_interior(1e-9)) continue;
    const auto& j = r.jacobian;
    if (std::abs(j.trace()) < 1e-6 && j.det() > 0) return true;
  }
  return false;
}

inline BifurcationCurve to_curve(SystemId id, CurveKind k, const std::vector<ContinuationPoint>& b) {
  BifurcationCurve c{k, id, CurveMethod::numeric_continuation, {}};
  for (const auto& p : b) c.samples.push_back({static_cast<double>(p.u.mu), static_cast<double>(p.u.c)});
  return c;
}

/// Largest c where the polyline crosses mu, if it does.
inline std::optional<double> curve_c_max_at(const std::vector<ParamPoint>& s, double mu) {
  std::optional<double> best;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const auto& a = s[i];
    const auto& b = s[i + 1];
    if ((a.mu - mu) * (b.mu - mu) > 0 || a.mu == b.mu) continue;
    const double c = a.c + (b.c - a.c) * (mu - a.mu) / (b.mu - a.mu);
    if (!best || c > *best) best = c;
  }
  return best;
}

}  // namespace detail

/// Curves, codimension-two points, homoclinic samples and a classified
/// grid over the (mu, c) window.
inline StabilityDiagram stability_diagram(const VectorField& f0, const DiagramOptions& o = {}) {
  if (!(o.mu_min > 0) || !(o.mu_max > o.mu_min) || !(o.c_min > 0) || !(o.c_max > o.c_min))
    throw InvalidArgument("stability_diagram: windows must be positive and non-empty");
  if (f0.id() == SystemId::replicator) throw InvalidArgument("stability_diagram: system has no mutation parameter");
  StabilityDiagram d;
  d.system = f0.id();
  d.options = o;
  const SystemId id = f0.id();

  ContinuationOptions co = o.continuation;
  co.mu_max = std::min(co.mu_max, o.mu_max);
  co.c_max = std::min(co.c_max, o.c_max);

  if (id == SystemId::tft_to_allc || id == SystemId::alld_to_allc) {
    auto sn = [&](double m) -> std::optional<double> {
      try {
        const double c = id == SystemId::tft_to_allc ? sn_curve_tft_allc(m) : sn_curve_alld_allc(m);
        if (c > 0) return c;
      } catch (const Error&) {
      }
      return std::nullopt;
    };
    auto hopf = [&](double m) -> std::optional<double> {
      try {
        const double c = id == SystemId::tft_to_allc ? hopf_curve_tft_allc(m) : hopf_curve_alld_allc(m);
        if (c > 0 && detail::is_hopf(f0, m, c)) return c;
      } catch (const Error&) {
      }
      return std::nullopt;
    };
    d.curves.push_back(
        {CurveKind::saddle_node, id, CurveMethod::closed_form, detail::sample_valid(sn, o.mu_min, o.mu_max, o.resolution)});
    d.curves.push_back(
        {CurveKind::hopf, id, CurveMethod::closed_form, detail::sample_valid(hopf, o.mu_min, o.mu_max, o.resolution)});
  }

  const FoldAnalysis fa = analyze_folds(f0, co);
  for (const auto& b : fa.branches) d.curves.push_back(detail::to_curve(id, CurveKind::saddle_node, b));
  for (const auto& p : fa.bt) d.points.push_back(p);
  for (const auto& p : fa.cusp) d.points.push_back(p);
  if (fa.bt.empty()) d.warnings.push_back("no Bogdanov-Takens point located");

  // Hopf locus: detect at the first seed mu that has one, then continue.
  std::optional<HopfPoint> h0;
  std::vector<double> seeds;
  if (!fa.bt.empty()) seeds.push_back(0.5 * fa.bt.front().mu);
  for (double m : {0.01, 0.005, 0.03, 0.09, 0.05}) seeds.push_back(m);
  if (!fa.bt.empty()) seeds.push_back(1.2 * fa.bt.front().mu);
  for (double m : seeds) {
    if (m < co.mu_min || m > co.mu_max) continue;
    try {
      h0 = hopf_detect_numeric(f0, m, std::max(1e-7, 0.1 * co.c_min), co.c_max);
      break;
    } catch (const NumericalError&) {
    }
  }
  if (h0) {
    d.curves.push_back(detail::to_curve(id, CurveKind::hopf, continue_hopf(f0, *h0, co)));
  } else {
    d.warnings.push_back("no Hopf point detected");
  }

  // Homoclinic samples below the BT point.
  if (o.homoclinic_samples > 0 && !fa.bt.empty()) {
    const double mu_bt = fa.bt.front().mu;
    const double hi = std::min(mu_bt * 0.95, o.mu_max);
    const double lo = std::max(o.mu_min, mu_bt / (o.homoclinic_samples + 1));
    std::vector<double> mus;
    for (int i = 0; i < o.homoclinic_samples; ++i)
      mus.push_back(o.homoclinic_samples == 1 ? lo : lo + (hi - lo) * i / (o.homoclinic_samples - 1));
    // the cycle region lies below the highest fold at each mu
    std::vector<std::vector<ParamPoint>> folds;
    for (const auto& b : fa.branches) folds.push_back(detail::to_curve(id, CurveKind::saddle_node, b).samples);
    std::vector<std::optional<HomoclinicResult>> res(mus.size());
    parallel_for(mus.size(), o.threads, [&](std::size_t i) {
      const double m = mus[i];
      std::optional<double> top;
      for (const auto& s : folds)
        if (auto c = detail::curve_c_max_at(s, m)) top = std::max(top.value_or(0.0), *c);
      const double c_hi = std::min(o.c_max, top.value_or(o.c_max));
      try {
        auto br = homoclinic_bracket(f0, m, o.c_min, c_hi * 0.999, 24, o.homoclinic);
        if (!br) br = homoclinic_bracket(f0, m, o.c_min, c_hi * 0.999, 96, o.homoclinic);
        if (br) res[i] = homoclinic_trace(f0, m, br->first, br->second, o.homoclinic);
      } catch (const NumericalError&) {
      }
    });
    BifurcationCurve hc{CurveKind::homoclinic, id, CurveMethod::bisection, {}};
    for (std::size_t i = 0; i < mus.size(); ++i) {
      if (!res[i]) {
        d.warnings.push_back("homoclinic not bracketed at mu = " + std::to_string(mus[i]));
        continue;
      }
      d.homoclinic.push_back(*res[i]);
      hc.samples.push_back({res[i]->mu, res[i]->c});
    }
    d.curves.push_back(std::move(hc));
  }

  if (o.grid > 0) {
    const int n = std::max(2, o.grid);
    for (int i = 0; i < n; ++i) {
      d.mu_axis.push_back(o.mu_min + (o.mu_max - o.mu_min) * i / (n - 1));
      d.c_axis.push_back(o.c_min + (o.c_max - o.c_min) * i / (n - 1));
    }
    d.grid.assign(d.mu_axis.size() * d.c_axis.size(), RegionLabel{});
    parallel_for(d.grid.size(), o.threads, [&](std::size_t k) {
      const double m = d.mu_axis[k % d.mu_axis.size()];
      const double c = d.c_axis[k / d.mu_axis.size()];
      try {
        d.grid[k] = classify_region(f0, m, c, o.classify);
      } catch (const NumericalError&) {
        d.grid[k] = RegionLabel{};
      }
    });
  }
  return d;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const BifurcationCurve& c) {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& p : c.samples) s.push_back({p.mu, p.c});
  return {{"kind", to_string(c.kind)},
          {"system", std::string(to_string(c.system))},
          {"method", to_string(c.method)},
          {"samples", s}};
}

inline nlohmann::json to_json(const CodimTwoPoint& p) {
  return {{"kind", p.kind},
          {"mu", p.mu},
          {"c", p.c},
          {"x", p.location.x()},
          {"y", p.location.y()},
          {"residual", p.residual},
          {"eigenvalues", {{p.eigenvalues[0].real(), p.eigenvalues[0].imag()},
                           {p.eigenvalues[1].real(), p.eigenvalues[1].imag()}}}};
}

inline nlohmann::json to_json(const RegionLabel& l) {
  nlohmann::json inv = nlohmann::json::array();
  if (l.almost_alld) inv.push_back("almost_ALLD_point");
  if (l.stable_spiral) inv.push_back("stable_spiral");
  if (l.stable_cycle) inv.push_back("stable_cycle");
  return {{"region", l.id},
          {"inventory", inv},
          {"fixed_points", l.fixed_points},
          {"interior_fixed_points", l.interior_fixed_points}};
}

inline nlohmann::json to_json(const HomoclinicResult& r) {
  return {{"mu", r.mu},
          {"c", r.c},
          {"c_cycle", r.c_cycle},
          {"c_absent", r.c_absent},
          {"period_near", r.period_near},
          {"period_reference", r.period_reference},
          {"probes", r.probes}};
}

inline nlohmann::json to_json(const StabilityDiagram& d) {
  nlohmann::json j;
  j["system"] = std::string(to_string(d.system));
  j["window"] = {{"mu", {d.options.mu_min, d.options.mu_max}}, {"c", {d.options.c_min, d.options.c_max}}};
  j["resolution"] = d.options.resolution;
  j["curves"] = nlohmann::json::array();
  for (const auto& c : d.curves) j["curves"].push_back(to_json(c));
  j["points"] = nlohmann::json::array();
  for (const auto& p : d.points) j["points"].push_back(to_json(p));
  j["homoclinic"] = nlohmann::json::array();
  for (const auto& h : d.homoclinic) j["homoclinic"].push_back(to_json(h));
  j["mu_axis"] = d.mu_axis;
  j["c_axis"] = d.c_axis;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t ic = 0; ic < d.c_axis.size(); ++ic) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t im = 0; im < d.mu_axis.size(); ++im) row.push_back(d.at(im, ic).id);
    rows.push_back(row);
  }
  j["regions"] = rows;
  j["region_ids"] = d.region_ids();
  j["warnings"] = d.warnings;
  return j;
}

}  // namespace repmut
