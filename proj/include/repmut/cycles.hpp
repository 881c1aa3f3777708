#pragma once

// Limit-cycle detection through a Poincare return map anchored at the
// interior fixed point, one-period orbit extraction, cycle statistics and
// attractor identification.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "repmut/equilibria.hpp"
#include "repmut/integrator.hpp"
#include "repmut/section.hpp"

namespace repmut {

enum class CycleStability { stable, unstable_or_unknown };

inline const char* to_string(CycleStability s) {
  return s == CycleStability::stable ? "stable" : "unstable_or_unknown";
}

struct LimitCycleRecord {
  std::vector<double> times;  // 0 .. period
  std::vector<SimplexState> orbit;
  double period = 0.0;
  std::array<double, 3> min{}, max{};
  double mean_cooperation = 0.0;  // time average of y + z
  double fraction_x_below_half = 0.0;
  double amplitude = 0.0;  // largest distance from the anchor
  CycleStability stability = CycleStability::unstable_or_unknown;
  Vec2<double> anchor;
  PoincareSection section;
  double return_radius = 0.0;

  /// Throws InvalidArgument when the closed-orbit invariants fail.
  void validate() const {
    if (orbit.size() < 3 || orbit.size() != times.size()) throw InvalidArgument("cycle orbit has too few samples");
    if (!(period > 0.0)) throw InvalidArgument("cycle period must be positive");
    if (orbit.front().distance(orbit.back()) > 1e-6) throw InvalidArgument("cycle orbit is not closed");
    double extent = 0.0;
    for (const auto& s : orbit) {
      if (!(s.x() > 0.0 && s.y() > 0.0 && s.z() > 0.0)) throw InvalidArgument("cycle orbit touches the boundary");
      extent = std::max(extent, s.distance(orbit.front()));
    }
    if (!(extent > 1e-9)) throw InvalidArgument("cycle orbit has zero amplitude");
  }
};

struct CycleMetrics {
  double period = 0.0;
  std::array<double, 3> min{}, max{};
  double mean_cooperation = 0.0;
  double fraction_x_below_half = 0.0;
  double amplitude = 0.0;
  bool rotation_alld_tft_allc = false;
};

/// Summary statistics of a validated cycle.
inline CycleMetrics cycle_metrics(const LimitCycleRecord& r);

struct CycleSearchOptions {
  double t_max = 5000.0;
  IntegratorOptions integrator = [] {
    IntegratorOptions o;
    o.record = false;
    return o;
  }();
  ReturnMapOptions returns;
  double seed_offset = 1e-3;
  double absorb_radius = 1e-6;  // stop once this close to a stable hyperbolic fixed point
  bool verify_stability = true;
  double reseed_offset = 1e-2;
  int orbit_samples = 2000;
};

/// Section geometry and the fixed points relevant to one field.
struct CycleAnchor {
  Vec2<double> point{1.0 / 3.0, 1.0 / 3.0};
  Vec2<double> direction{1.0, 0.0};
  Vec2<double> unstable_direction{1.0, 0.0};
  std::optional<EquilibriumReport> equilibrium;  // empty: centroid fallback
  std::vector<EquilibriumReport> fixed_points;

  PoincareSection section() const { return PoincareSection::make(point, direction); }
};

namespace detail {

/// Real part of an eigenvector of J for eigenvalue lambda.
inline Vec2<double> eigvec_real(const Jacobian& j, std::complex<double> lambda) {
  std::complex<double> vx, vy;
  if (std::abs(j.xy) >= std::abs(j.yx)) {
    vx = j.xy;
    vy = lambda - j.xx;
  } else {
    vx = lambda - j.yy;
    vy = j.yx;
  }
  Vec2<double> v{vx.real(), vy.real()};
  if (!(v.norm() > 0.0)) v = {1.0, 0.0};
  return v;
}

inline int anchor_rank(const EquilibriumReport& r) {
  switch (r.classification) {
    case Stability::unstable_spiral: return 0;
    case Stability::stable_spiral: return 1;
    case Stability::nonhyperbolic: return std::abs(r.eigenvalues[0].imag()) > 0.0 ? 2 : 5;
    case Stability::unstable_node: return 3;
    case Stability::stable_node: return 4;
    case Stability::saddle: return 9;
  }
  return 9;
}

}  // namespace detail

/// Anchor = interior non-saddle fixed point (spirals preferred); section
/// direction from the eigenvector of the eigenvalue with largest |imag|.
inline CycleAnchor choose_anchor(const VectorField& f) {
  CycleAnchor a;
  a.fixed_points = fixed_points(f);
  const EquilibriumReport* best = nullptr;
  for (const auto& r : a.fixed_points) {
    if (!r.is_interior(1e-9) || detail::anchor_rank(r) >= 9) continue;
    if (!best || detail::anchor_rank(r) < detail::anchor_rank(*best)) best = &r;
  }
  if (!best) return a;
  a.equilibrium = *best;
  a.point = {best->location.raw_x(), best->location.raw_y()};
  const auto& ev = best->eigenvalues;
  if (std::abs(ev[0].imag()) > 0.0) {
    const auto lam = std::abs(ev[0].imag()) >= std::abs(ev[1].imag()) ? ev[0] : ev[1];
    a.direction = detail::eigvec_real(best->jacobian, lam);
    a.unstable_direction = a.direction;
  } else {
    a.direction = {1.0, 0.0};
    const auto lam = ev[0].real() >= ev[1].real() ? ev[0] : ev[1];
    a.unstable_direction = detail::eigvec_real(best->jacobian, lam);
  }
  const double n = a.unstable_direction.norm();
  a.unstable_direction = {a.unstable_direction.x / n, a.unstable_direction.y / n};
  return a;
}

/// Default seed: anchor displaced along its unstable direction.
inline SimplexState default_seed(const CycleAnchor& a, double offset) {
  for (double sgn : {1.0, -1.0}) {
    const double x = a.point.x + sgn * offset * a.unstable_direction.x;
    const double y = a.point.y + sgn * offset * a.unstable_direction.y;
    if (x > 0.0 && y > 0.0 && x + y < 1.0) return SimplexState(x, y);
  }
  return SimplexState(a.point.x, a.point.y);
}

enum class SearchResult { cycle, fixed_point, undetermined };

struct SearchOutcome {
  SearchResult result = SearchResult::undetermined;
  SimplexState final_state;
  double final_time = 0.0;
  std::vector<SectionCrossing> crossings;
  int orientation = 0;
  std::optional<SimplexState> fixed_point;
};

/// Integrate from `seed` until the return map settles, the trajectory is
/// captured by a fixed point, or the horizon runs out.
inline SearchOutcome search_attractor(const VectorField& f, const SimplexState& seed, const CycleAnchor& anchor,
                                      const CycleSearchOptions& opt) {
  const PoincareSection sec = anchor.section();
  ReturnMapTracker tracker(opt.returns);
  std::vector<const EquilibriumReport*> sinks;
  for (const auto& r : anchor.fixed_points)
    if (r.is_stable() && std::max(r.eigenvalues[0].real(), r.eigenvalues[1].real()) < -1e-6) sinks.push_back(&r);

  std::optional<SimplexState> captured;
  IntegratorOptions io = opt.integrator;
  io.t_max = opt.t_max;
  io.record = false;
  const auto tr = integrate_observed(f, seed, io, [&](const Flow& flow) -> std::optional<TerminalEvent> {
    const auto p = flow.state();
    for (const auto* s : sinks) {
      if (std::hypot(p.x - s->location.raw_x(), p.y - s->location.raw_y()) < opt.absorb_radius) {
        captured = s->location;
        return TerminalEvent::converged_to_fixed_point;
      }
    }
    if (auto hit = detail::locate_crossing(flow, sec)) {
      tracker.feed(hit->first, hit->second);
      if (tracker.converged()) return TerminalEvent::cycle_detected;
      if (anchor.equilibrium && tracker.converging_to_anchor()) {
        captured = anchor.equilibrium->location;
        return TerminalEvent::converged_to_fixed_point;
      }
    }
    return std::nullopt;
  });

  SearchOutcome out;
  out.final_state = tr.final_state;
  out.final_time = tr.final_time;
  out.crossings = tracker.crossings();
  out.orientation = tracker.orientation();
  switch (tr.terminal_event) {
    case TerminalEvent::cycle_detected: out.result = SearchResult::cycle; break;
    case TerminalEvent::converged_to_fixed_point:
      out.result = SearchResult::fixed_point;
      out.fixed_point = captured ? *captured : tr.final_state;
      break;
    case TerminalEvent::max_time: out.result = SearchResult::undetermined; break;
  }
  return out;
}

namespace detail {

/// Follow the flow for one revolution from a point on the section and sample
/// the orbit on a uniform time grid.
inline LimitCycleRecord trace_one_period(const VectorField& f, const SectionCrossing& start, int orientation,
                                         double period_guess, const CycleAnchor& anchor,
                                         const CycleSearchOptions& opt) {
  const PoincareSection sec = anchor.section();
  IntegratorOptions io = opt.integrator;
  io.max_step = std::min(io.max_step, period_guess / 50.0);
  Flow flow(f, to_state(start.point), 0.0, io);
  const double dt = period_guess / opt.orbit_samples;
  LimitCycleRecord rec;
  rec.times.push_back(0.0);
  rec.orbit.push_back(to_state(start.point));
  std::size_t next = 1;
  const double t_limit = 3.0 * period_guess + 10.0;
  while (true) {
    flow.step();
    std::optional<std::pair<SectionCrossing, int>> hit;
    if (flow.t() > 0.5 * period_guess) hit = locate_crossing(flow, sec);
    const double t_end = hit && hit->second == orientation ? hit->first.t : flow.t();
    while (next * dt < t_end) {
      rec.times.push_back(next * dt);
      rec.orbit.push_back(to_state(flow.state_at(next * dt)));
      ++next;
    }
    if (hit && hit->second == orientation) {
      rec.times.push_back(hit->first.t);
      rec.orbit.push_back(to_state(hit->first.point));
      rec.period = hit->first.t;
      rec.return_radius = hit->first.r;
      break;
    }
    flow.project();
    if (flow.t() > t_limit) throw NonConvergence("orbit did not return to the section");
  }
  rec.anchor = anchor.point;
  rec.section = sec;
  return rec;
}

inline void fill_statistics(LimitCycleRecord& r) {
  r.min = {1.0, 1.0, 1.0};
  r.max = {0.0, 0.0, 0.0};
  double coop = 0.0, below = 0.0;
  for (std::size_t i = 0; i < r.orbit.size(); ++i) {
    const auto fr = r.orbit[i].frequencies();
    for (int k = 0; k < 3; ++k) {
      r.min[k] = std::min(r.min[k], fr[k]);
      r.max[k] = std::max(r.max[k], fr[k]);
    }
    r.amplitude = std::max(r.amplitude, std::hypot(fr[0] - r.anchor.x, fr[1] - r.anchor.y));
    if (i + 1 < r.orbit.size()) {
      const auto g = r.orbit[i + 1].frequencies();
      const double h = r.times[i + 1] - r.times[i];
      coop += 0.5 * h * ((fr[1] + fr[2]) + (g[1] + g[2]));
      // linear interpolation of the x < 1/2 indicator across the interval
      const double a = fr[0] - 0.5, b = g[0] - 0.5;
      if (a < 0 && b < 0) below += h;
      else if (a < 0 || b < 0) below += h * (a < 0 ? a / (a - b) : b / (b - a));
    }
  }
  r.mean_cooperation = coop / r.period;
  r.fraction_x_below_half = below / r.period;
}

}  // namespace detail

/// True when the per-strategy maxima occur in the cyclic order
/// ALLD -> TFT -> ALLC along the orbit.
inline bool rotates_alld_tft_allc(const LimitCycleRecord& r) {
  std::array<double, 3> tmax{};
  std::array<double, 3> vmax{-1.0, -1.0, -1.0};
  for (std::size_t i = 0; i + 1 < r.orbit.size(); ++i) {
    const auto fr = r.orbit[i].frequencies();
    for (int k = 0; k < 3; ++k) {
      if (fr[k] > vmax[k]) {
        vmax[k] = fr[k];
        tmax[k] = r.times[i];
      }
    }
  }
  auto phase = [&](double t) { return std::fmod(t - tmax[0] + r.period, r.period); };
  return phase(tmax[1]) < phase(tmax[2]);
}

inline CycleMetrics cycle_metrics(const LimitCycleRecord& r) {
  r.validate();
  CycleMetrics m;
  m.period = r.period;
  m.min = r.min;
  m.max = r.max;
  m.mean_cooperation = r.mean_cooperation;
  m.fraction_x_below_half = r.fraction_x_below_half;
  m.amplitude = r.amplitude;
  m.rotation_alld_tft_allc = rotates_alld_tft_allc(r);
  return m;
}

/// Build the cycle record from a converged search.
inline LimitCycleRecord record_cycle(const VectorField& f, const SearchOutcome& s, const CycleAnchor& anchor,
                                     const CycleSearchOptions& opt) {
  const auto& cr = s.crossings;
  const double period_guess = cr[cr.size() - 1].t - cr[cr.size() - 2].t;
  auto rec = detail::trace_one_period(f, cr.back(), s.orientation, period_guess, anchor, opt);
  detail::fill_statistics(rec);
  return rec;
}

/// Limit cycle reached from `seed` (default: anchor displaced along its
/// unstable direction), or nullopt when the trajectory settles on a fixed
/// point. Throws Undetermined when neither happens before t_max.
inline std::optional<LimitCycleRecord> detect_limit_cycle(const VectorField& f,
                                                          std::optional<SimplexState> seed = std::nullopt,
                                                          double t_max = 5000.0, CycleSearchOptions opt = {}) {
  opt.t_max = t_max;
  const CycleAnchor anchor = choose_anchor(f);
  const SimplexState s0 = seed ? *seed : default_seed(anchor, opt.seed_offset);
  const auto out = search_attractor(f, s0, anchor, opt);
  if (out.result == SearchResult::fixed_point) return std::nullopt;
  if (out.result == SearchResult::undetermined)
    throw Undetermined("no fixed point or cycle reached before t_max = " + std::to_string(t_max));

  auto rec = record_cycle(f, out, anchor, opt);
  if (opt.verify_stability) {
    const auto& last = out.crossings.back();
    const auto& d = anchor.direction;
    rec.stability = CycleStability::unstable_or_unknown;
    for (double sgn : {-1.0, 1.0}) {
      const double off = last.r > 2.0 * opt.reseed_offset ? sgn * opt.reseed_offset : -sgn * opt.reseed_offset;
      const double x = last.point.x + off * d.x, y = last.point.y + off * d.y;
      if (!(x > 0.0 && y > 0.0 && x + y < 1.0)) continue;
      try {
        const auto again = search_attractor(f, SimplexState(x, y), anchor, opt);
        if (again.result == SearchResult::cycle && std::abs(again.crossings.back().r - last.r) < 1e-6)
          rec.stability = CycleStability::stable;
      } catch (const NumericalError&) {
      }
      break;
    }
  } else {
    rec.stability = CycleStability::stable;
  }
  return rec;
}

enum class AttractorKind { fixed_point, cycle, undetermined };

inline const char* to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::fixed_point: return "fixed_point";
    case AttractorKind::cycle: return "cycle";
    case AttractorKind::undetermined: return "undetermined";
  }
  return "undetermined";
}

struct Attractor {
  AttractorKind kind = AttractorKind::undetermined;
  SimplexState location;  // fixed point, or final state
  std::optional<LimitCycleRecord> cycle;
};

/// Long-time behaviour from `start`. Cycles reached by forward integration
/// are attracting by construction and are marked stable.
inline Attractor find_attractor(const VectorField& f, const SimplexState& start, const CycleAnchor& anchor,
                                CycleSearchOptions opt = {}) {
  const auto out = search_attractor(f, start, anchor, opt);
  Attractor a;
  a.location = out.final_state;
  switch (out.result) {
    case SearchResult::fixed_point:
      a.kind = AttractorKind::fixed_point;
      a.location = *out.fixed_point;
      break;
    case SearchResult::cycle:
      a.kind = AttractorKind::cycle;
      a.cycle = record_cycle(f, out, anchor, opt);
      a.cycle->stability = CycleStability::stable;
      break;
    case SearchResult::undetermined: a.kind = AttractorKind::undetermined; break;
  }
  return a;
}

inline Attractor find_attractor(const VectorField& f, const SimplexState& start, double t_max = 5000.0) {
  CycleSearchOptions opt;
  opt.t_max = t_max;
  return find_attractor(f, start, choose_anchor(f), opt);
}

/// Orbit over one period as CSV `t,x,y,z`.
inline void write_cycle_csv(std::ostream& os, const LimitCycleRecord& r) {
  os << "t,x,y,z\n";
  char buf[128];
  for (std::size_t i = 0; i < r.orbit.size(); ++i) {
    const auto& s = r.orbit[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.times[i], s.x(), s.y(), s.z());
    os << buf;
  }
}

inline nlohmann::json to_json(const CycleMetrics& m) {
  nlohmann::json j;
  j["period"] = m.period;
  j["min"] = {{"x", m.min[0]}, {"y", m.min[1]}, {"z", m.min[2]}};
  j["max"] = {{"x", m.max[0]}, {"y", m.max[1]}, {"z", m.max[2]}};
  j["mean_cooperation"] = m.mean_cooperation;
  j["fraction_x_below_half"] = m.fraction_x_below_half;
  j["amplitude"] = m.amplitude;
  j["rotation_alld_tft_allc"] = m.rotation_alld_tft_allc;
  return j;
}

inline nlohmann::json to_json(const LimitCycleRecord& r) {
  nlohmann::json j = to_json(cycle_metrics(r));
  j["stability"] = to_string(r.stability);
  j["anchor"] = {{"x", r.anchor.x}, {"y", r.anchor.y}};
  j["section_direction"] = {{"x", r.section.direction.x}, {"y", r.section.direction.y}};
  j["return_radius"] = r.return_radius;
  j["samples"] = r.orbit.size();
  return j;
}

}  // namespace repmut
