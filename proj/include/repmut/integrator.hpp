#pragma once

// Adaptive Dormand-Prince 5(4) integration on the simplex with projection,
// fixed-point convergence detection and optional Poincare-section monitoring.

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "repmut/dynamics.hpp"
#include "repmut/section.hpp"

namespace repmut {

struct IntegratorOptions {
  double t_max = 5000.0;
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.5;
  double initial_step = 1e-3;
  double min_step = 1e-13;
  double escape_tol = 1e-6;  // larger excursions outside the triangle are errors
  bool record = true;
  bool stop_at_fixed_point = true;
  double fp_field_tol = 1e-10;
  double fp_motion_tol = 1e-10;
  int fp_window = 50;  // consecutive accepted steps
};

enum class TerminalEvent { max_time, converged_to_fixed_point, cycle_detected };

inline const char* to_string(TerminalEvent e) {
  switch (e) {
    case TerminalEvent::max_time: return "max_time";
    case TerminalEvent::converged_to_fixed_point: return "converged_to_fixed_point";
    case TerminalEvent::cycle_detected: return "cycle_detected";
  }
  return "max_time";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<SimplexState> states;
  TerminalEvent terminal_event = TerminalEvent::max_time;
  SimplexState final_state;
  double final_time = 0.0;
  std::size_t accepted_steps = 0;
  std::vector<SectionCrossing> crossings;
};

/// Thin wrapper over the odeint dense-output stepper. Keeps the state in the
/// triangle and exposes the last accepted step for event location.
class Flow {
 public:
  using State = std::array<double, 2>;

  Flow(const VectorField& field, const SimplexState& s0, double t0, const IntegratorOptions& opt)
      : field_(field),
        opt_(opt),
        stepper_(boost::numeric::odeint::make_dense_output(opt.abs_tol, opt.rel_tol, opt.max_step,
                                                           boost::numeric::odeint::runge_kutta_dopri5<State>())) {
    if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0)) throw InvalidArgument("tolerances must be positive");
    prev_ = cur_ = {s0.raw_x(), s0.raw_y()};
    t_prev_ = t0;
    stepper_.initialize(cur_, t0, std::min(opt.initial_step, opt.max_step));
  }

  /// Advance one accepted step.
  void step() {
    auto rhs = [this](const State& u, State& d, double) {
      const auto v = field_.eval<double>(u[0], u[1]);
      d[0] = v.x;
      d[1] = v.y;
    };
    try {
      const auto iv = stepper_.do_step(rhs);
      t_prev_ = iv.first;
    } catch (const boost::numeric::odeint::odeint_error& e) {
      throw StepUnderflow(std::string("step-size control failed: ") + e.what());
    }
    if (stepper_.current_time_step() < opt_.min_step)
      throw StepUnderflow("step size underflow at t = " + std::to_string(stepper_.current_time()));
    prev_ = cur_;
    cur_ = stepper_.current_state();
    ++steps_;
  }

  /// Clamp small excursions back onto the triangle; returns true when the
  /// state was modified (which restarts the stepper at the projected point).
  bool project() {
    const double x = cur_[0];
    const double y = cur_[1];
    const double z = 1.0 - x - y;
    const double worst = std::min({x, y, z});
    if (!(worst >= -opt_.escape_tol) || !std::isfinite(x) || !std::isfinite(y))
      throw SimplexEscape("trajectory left the simplex at t = " + std::to_string(t()));
    if (worst >= 0.0) return false;
    double px = std::max(x, 0.0);
    double py = std::max(y, 0.0);
    const double excess = px + py - 1.0;
    if (excess > 0.0) {
      // uniform excess removal on the free coordinates, then clamp
      px = std::max(px - excess / 2.0, 0.0);
      py = std::max(1.0 - px, 0.0) < py ? 1.0 - px : py;
    }
    cur_ = {px, py};
    stepper_.initialize(cur_, t(), stepper_.current_time_step());
    return true;
  }

  double t() const { return stepper_.current_time(); }
  double t_prev() const { return t_prev_; }
  double dt() const { return stepper_.current_time_step(); }
  Vec2<double> state() const { return {cur_[0], cur_[1]}; }
  Vec2<double> prev_state() const { return {prev_[0], prev_[1]}; }
  std::size_t steps() const { return steps_; }

  /// Dense-output state inside the last accepted step.
  Vec2<double> state_at(double t) const {
    State s;
    stepper_.calc_state(t, s);
    return {s[0], s[1]};
  }

  const VectorField& field() const { return field_; }

 private:
  using Dense = decltype(boost::numeric::odeint::make_dense_output(
      1.0, 1.0, 1.0, boost::numeric::odeint::runge_kutta_dopri5<State>()));

  const VectorField& field_;
  IntegratorOptions opt_;
  Dense stepper_;
  State prev_{}, cur_{};
  double t_prev_ = 0.0;
  std::size_t steps_ = 0;
};

inline SimplexState to_state(Vec2<double> p) {
  const double x = std::max(p.x, 0.0);
  const double y = std::max(p.y, 0.0);
  const double excess = x + y - 1.0;
  if (excess > 0.0) return SimplexState(x - excess / 2.0, y - excess / 2.0);
  return SimplexState(x, y);
}

namespace detail {

/// Locate a sign change of the section function inside the last step.
inline std::optional<std::pair<SectionCrossing, int>> locate_crossing(const Flow& flow, const PoincareSection& sec) {
  const double s0 = sec.side(flow.prev_state());
  const double s1 = sec.side(flow.state());
  int orientation = 0;
  if (s0 < 0.0 && s1 >= 0.0) orientation = 1;
  else if (s0 > 0.0 && s1 <= 0.0) orientation = -1;
  if (orientation == 0) return std::nullopt;
  double lo = flow.t_prev();
  double hi = flow.t();
  double slo = s0;
  for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sm = sec.side(flow.state_at(mid));
    if ((sm < 0.0) == (slo < 0.0) && sm != 0.0) {
      lo = mid;
      slo = sm;
    } else {
      hi = mid;
    }
  }
  const double tc = 0.5 * (lo + hi);
  const Vec2<double> p = flow.state_at(tc);
  const double r = sec.along(p);
  if (r <= 0.0) return std::nullopt;
  return std::make_pair(SectionCrossing{tc, p, r}, orientation);
}

}  // namespace detail

/// Shared driver. `on_step` is called after each accepted step (before any
/// projection); returning a terminal event stops the run with that event.
template <class OnStep>
Trajectory integrate_observed(const VectorField& field, const SimplexState& s0, const IntegratorOptions& opt,
                              OnStep&& on_step) {
  if (!(opt.t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  Flow flow(field, s0, 0.0, opt);
  Trajectory tr;
  if (opt.record) {
    tr.times.push_back(0.0);
    tr.states.push_back(s0);
  }
  int quiet = 0;
  while (true) {
    flow.step();
    const bool past_end = flow.t() >= opt.t_max;
    std::optional<TerminalEvent> verdict;
    if (!past_end) verdict = on_step(flow);
    Vec2<double> p = flow.state();
    double t = flow.t();
    if (past_end) {
      p = flow.state_at(opt.t_max);
      t = opt.t_max;
    }
    if (!past_end) flow.project();
    else if (!SimplexState::admissible(p.x, p.y, opt.escape_tol))
      throw SimplexEscape("trajectory left the simplex near t_max");
    if (!past_end) p = flow.state();
    const SimplexState s = to_state(p);
    if (opt.record) {
      tr.times.push_back(t);
      tr.states.push_back(s);
    }
    tr.final_state = s;
    tr.final_time = t;
    if (verdict) {
      tr.terminal_event = *verdict;
      break;
    }
    if (past_end) {
      tr.terminal_event = TerminalEvent::max_time;
      break;
    }
    if (opt.stop_at_fixed_point) {
      const double speed = field(p.x, p.y).norm();
      const Vec2<double> q = flow.prev_state();
      const double motion = std::hypot(p.x - q.x, p.y - q.y);
      quiet = (speed < opt.fp_field_tol && motion < opt.fp_motion_tol) ? quiet + 1 : 0;
      if (quiet >= opt.fp_window) {
        tr.terminal_event = TerminalEvent::converged_to_fixed_point;
        break;
      }
    }
  }
  tr.accepted_steps = flow.steps();
  return tr;
}

/// Integrate from `s0`, stopping at t_max or on fixed-point convergence.
inline Trajectory integrate(const VectorField& field, const SimplexState& s0, const IntegratorOptions& opt = {}) {
  return integrate_observed(field, s0, opt, [](const Flow&) { return std::optional<TerminalEvent>(); });
}

inline Trajectory integrate(const VectorField& field, const SimplexState& s0, double t_max, double rel_tol,
                            double abs_tol) {
  IntegratorOptions opt;
  opt.t_max = t_max;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  return integrate(field, s0, opt);
}

/// Integrate while watching a Poincare section; stops with `cycle_detected`
/// once the return map settles.
inline Trajectory integrate(const VectorField& field, const SimplexState& s0, const IntegratorOptions& opt,
                            const PoincareSection& section, ReturnMapTracker& tracker) {
  auto tr = integrate_observed(field, s0, opt, [&](const Flow& flow) -> std::optional<TerminalEvent> {
    if (auto hit = detail::locate_crossing(flow, section)) {
      tracker.feed(hit->first, hit->second);
      if (tracker.converged()) return TerminalEvent::cycle_detected;
    }
    return std::nullopt;
  });
  tr.crossings = tracker.crossings();
  return tr;
}

/// CSV with header `t,x_alld,y_tft,z_allc`, 17 significant digits.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x_alld,y_tft,z_allc\n";
  char buf[128];
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const auto& s = tr.states[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", tr.times[i], s.x(), s.y(), s.z());
    os << buf;
  }
}

}  // namespace repmut
