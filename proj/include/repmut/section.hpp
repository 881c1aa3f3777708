#pragma once

// Poincare half-line section and the return-map convergence test.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "repmut/dynamics.hpp"

namespace repmut {

/// Half-line {anchor + r * direction, r > 0}.
struct PoincareSection {
  Vec2<double> anchor;
  Vec2<double> direction{1.0, 0.0};  // unit length

  static PoincareSection make(Vec2<double> anchor, Vec2<double> dir) {
    const double n = dir.norm();
    if (!(n > 0.0)) dir = {1.0, 0.0};
    else dir = {dir.x / n, dir.y / n};
    return {anchor, dir};
  }

  /// Signed distance to the supporting line.
  double side(Vec2<double> p) const { return -direction.y * (p.x - anchor.x) + direction.x * (p.y - anchor.y); }
  /// Coordinate along the half-line.
  double along(Vec2<double> p) const { return direction.x * (p.x - anchor.x) + direction.y * (p.y - anchor.y); }
};

struct SectionCrossing {
  double t = 0.0;
  Vec2<double> point;
  double r = 0.0;  // distance from the anchor along the half-line
};

struct ReturnMapOptions {
  double tol = 1e-8;           // consecutive return points must agree to this
  int confirmations = 3;       // number of consecutive agreeing returns
  double min_amplitude = 1e-6; // returns closer to the anchor than this are a focus, not a cycle
  double period_rtol = 1e-4;   // confirming return times must agree to this relative tolerance
};

/// Accumulates same-orientation section crossings and decides when the
/// return map has settled on a fixed point away from the anchor.
class ReturnMapTracker {
 public:
  explicit ReturnMapTracker(ReturnMapOptions opt = {}) : opt_(opt) {}

  /// Orientation is fixed by the first crossing on the half-line.
  void feed(const SectionCrossing& c, int orientation) {
    if (orientation_ == 0) orientation_ = orientation;
    if (orientation != orientation_) return;
    crossings_.push_back(c);
    const std::size_t n = crossings_.size();
    bool agree = n >= 2 && std::abs(crossings_[n - 1].r - crossings_[n - 2].r) < opt_.tol;
    if (agree && n >= 3) {
      const double t1 = crossings_[n - 1].t - crossings_[n - 2].t;
      const double t0 = crossings_[n - 2].t - crossings_[n - 3].t;
      agree = std::abs(t1 - t0) <= opt_.period_rtol * t1;
    }
    if (agree) ++agreeing_;
    else agreeing_ = 0;
  }

  bool converged() const {
    if (agreeing_ < opt_.confirmations) return false;
    const std::size_t n = crossings_.size();
    const double r = crossings_.back().r;
    if (r < opt_.min_amplitude) return false;
    if (n >= 3) {
      // Aitken extrapolation: a spiral into the anchor extrapolates to ~0.
      const double d1 = crossings_[n - 1].r - crossings_[n - 2].r;
      const double d0 = crossings_[n - 2].r - crossings_[n - 3].r;
      if (d0 != 0.0) {
        const double m = d1 / d0;
        if (m > 0.0 && m < 1.0) {
          const double limit = r + d1 * m / (1.0 - m);
          if (limit < 0.5 * r) return false;
        }
      }
    }
    return true;
  }

  /// Returns shrink geometrically in the linear regime around the anchor,
  /// so the trajectory is spiralling into it.
  bool converging_to_anchor() const {
    const std::size_t n = crossings_.size();
    if (n < 5) return false;
    const double r = crossings_[n - 1].r;
    if (!(r < 1e-3)) return false;
    std::array<double, 3> q{};
    for (int k = 0; k < 3; ++k) {
      const double a = crossings_[n - 1 - k].r, b = crossings_[n - 2 - k].r;
      if (!(b > 0.0)) return false;
      q[k] = a / b;
      if (!(q[k] > 0.0 && q[k] < 0.999)) return false;
    }
    const double spread = std::max({q[0], q[1], q[2]}) - std::min({q[0], q[1], q[2]});
    if (spread > 1e-4 * q[0]) return false;
    const double r1 = crossings_[n - 2].r, r2 = crossings_[n - 3].r;
    const double den = r - 2.0 * r1 + r2;
    if (den == 0.0) return false;
    const double limit = r - (r - r1) * (r - r1) / den;
    return std::abs(limit) < 1e-2 * r;
  }

  const std::vector<SectionCrossing>& crossings() const { return crossings_; }
  int orientation() const { return orientation_; }

  std::optional<double> last_period() const {
    const std::size_t n = crossings_.size();
    if (n < 2) return std::nullopt;
    return crossings_[n - 1].t - crossings_[n - 2].t;
  }

 private:
  ReturnMapOptions opt_;
  std::vector<SectionCrossing> crossings_;
  int orientation_ = 0;
  int agreeing_ = 0;
};

}  // namespace repmut
