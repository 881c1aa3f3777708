#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "repmut/cycles.hpp"
#include "repmut/integrator.hpp"

using namespace repmut;

namespace {

SimplexState random_interior(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (;;) {
    const double a = u(rng), b = u(rng);
    if (a + b < 0.99) return SimplexState(a, b);
  }
}

VectorField random_field(std::mt19937_64& rng) {
  static constexpr SystemId ids[] = {SystemId::replicator, SystemId::tft_to_allc, SystemId::alld_to_allc,
                                     SystemId::uniform};
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> mu(0.0, 0.3), c(0.0, 1.5);
  return VectorField::named(ids[pick(rng)], mu(rng), c(rng));
}

}  // namespace

TEST(Integrate, ReplicatorCostDrivesToAlld) {
  const auto f = VectorField::named(SystemId::replicator, 0.0, 0.1);
  const auto tr = integrate(f, SimplexState(0.2, 0.4, 0.4), 5000.0, 1e-9, 1e-11);
  EXPECT_NEAR(tr.final_state.x(), 1.0, 1e-6);
  EXPECT_NEAR(tr.final_state.y(), 0.0, 1e-6);
  EXPECT_NEAR(tr.final_state.z(), 0.0, 1e-6);
}

TEST(Integrate, StatesStayOnSimplex) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 40; ++k) {
    const auto f = random_field(rng);
    IntegratorOptions o;
    o.t_max = 200.0;
    const auto tr = integrate(f, random_interior(rng), o);
    ASSERT_FALSE(tr.states.empty());
    for (const auto& s : tr.states) {
      EXPECT_GE(s.raw_x(), -1e-9);
      EXPECT_GE(s.raw_y(), -1e-9);
      EXPECT_GE(1.0 - s.raw_x() - s.raw_y(), -1e-9);
      EXPECT_NEAR(s.x() + s.y() + s.z(), 1.0, 1e-9);
    }
  }
}

TEST(Integrate, TimesStrictlyIncreasing) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto tr = integrate(random_field(rng), random_interior(rng), 100.0, 1e-9, 1e-11);
    ASSERT_EQ(tr.times.size(), tr.states.size());
    for (std::size_t i = 1; i < tr.times.size(); ++i) ASSERT_LT(tr.times[i - 1], tr.times[i]);
    EXPECT_LE(tr.final_time, 100.0 + 1e-12);
  }
}

TEST(Integrate, MaxStepBoundsOutputSpacing) {
  const auto f = VectorField::named(SystemId::tft_to_allc, 0.05, 0.1);
  IntegratorOptions o;
  o.t_max = 50.0;
  o.max_step = 0.1;
  const auto tr = integrate(f, SimplexState(0.3, 0.3), o);
  for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_LE(tr.times[i] - tr.times[i - 1], 0.1 + 1e-12);
}

TEST(Integrate, CycleDetectedAtKnownCyclePoint) {
  const auto f = VectorField::named(SystemId::alld_to_allc, 0.08, 0.04);
  const auto anchor = choose_anchor(f);
  ASSERT_TRUE(anchor.equilibrium.has_value());
  EXPECT_EQ(anchor.equilibrium->classification, Stability::unstable_spiral);
  ReturnMapTracker tracker;
  IntegratorOptions o;
  o.t_max = 5000.0;
  o.record = false;
  const auto tr = integrate(f, default_seed(anchor, 1e-3), o, anchor.section(), tracker);
  EXPECT_EQ(tr.terminal_event, TerminalEvent::cycle_detected);
  EXPECT_GE(tr.crossings.size(), 4u);
}

TEST(Integrate, FixedPointConvergenceStops) {
  const auto f = VectorField::named(SystemId::tft_to_allc, 0.1, 0.5);
  const auto tr = integrate(f, SimplexState(0.3, 0.3), 5000.0, 1e-9, 1e-11);
  EXPECT_EQ(tr.terminal_event, TerminalEvent::converged_to_fixed_point);
  EXPECT_LT(tr.final_time, 5000.0);
  EXPECT_LT(f(tr.final_state).norm(), 1e-9);
}

TEST(Integrate, HalvingToleranceMovesTerminalStateLittle) {
  struct Case {
    SystemId id;
    double mu, c, x0, y0;
  };
  for (const auto& k : {Case{SystemId::replicator, 0.0, 0.1, 0.2, 0.4}, Case{SystemId::tft_to_allc, 0.1, 0.5, 0.3, 0.3},
                        Case{SystemId::uniform, 0.005, 0.05, 0.3, 0.3}, Case{SystemId::alld_to_allc, 0.15, 0.3, 0.1, 0.8}}) {
    const auto f = VectorField::named(k.id, k.mu, k.c);
    const double rel = 1e-8;
    const auto a = integrate(f, SimplexState(k.x0, k.y0), 5000.0, rel, 1e-11);
    const auto b = integrate(f, SimplexState(k.x0, k.y0), 5000.0, rel / 2, 1e-11);
    ASSERT_EQ(a.terminal_event, TerminalEvent::converged_to_fixed_point);
    ASSERT_EQ(b.terminal_event, TerminalEvent::converged_to_fixed_point);
    EXPECT_LT(a.final_state.distance(b.final_state), 10 * rel) << to_string(k.id);
  }
}

TEST(Integrate, ForwardThenBackwardReturnsToStart) {
  std::mt19937_64 rng(3);
  const double rel = 1e-9;
  for (int k = 0; k < 20; ++k) {
    const auto f = random_field(rng);
    const auto s0 = random_interior(rng);
    IntegratorOptions o;
    o.t_max = 2.0;
    o.rel_tol = rel;
    o.abs_tol = 1e-13;
    o.record = false;
    o.stop_at_fixed_point = false;
    const auto fwd = integrate(f, s0, o);
    const auto bwd = integrate(f.reversed(), fwd.final_state, o);
    EXPECT_LT(bwd.final_state.distance(s0), 100 * rel);
  }
}

TEST(Integrate, BoundaryStartsStayInTriangle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const auto f = random_field(rng);
    const double a = u(rng);
    const SimplexState edges[] = {SimplexState(a, 0.0), SimplexState(0.0, a), SimplexState(a, 1.0 - a)};
    for (const auto& s0 : edges) {
      IntegratorOptions o;
      o.t_max = 50.0;
      o.abs_tol = 1e-11;
      const auto tr = integrate(f, s0, o);
      for (const auto& s : tr.states) {
        EXPECT_GE(s.raw_x(), -o.abs_tol);
        EXPECT_GE(s.raw_y(), -o.abs_tol);
        EXPECT_GE(1.0 - s.raw_x() - s.raw_y(), -o.abs_tol);
      }
    }
  }
}

TEST(Integrate, RejectsBadArguments) {
  const auto f = VectorField::named(SystemId::uniform, 0.01, 0.1);
  const SimplexState s(0.3, 0.3);
  EXPECT_THROW(integrate(f, s, 0.0, 1e-9, 1e-11), InvalidArgument);
  EXPECT_THROW(integrate(f, s, -1.0, 1e-9, 1e-11), InvalidArgument);
  EXPECT_THROW(integrate(f, s, 10.0, 0.0, 1e-11), InvalidArgument);
  EXPECT_THROW(integrate(f, s, 10.0, 1e-9, -1.0), InvalidArgument);
  EXPECT_THROW(SimplexState(0.8, 0.5), InvalidArgument);
}

TEST(Integrate, StepUnderflowIsReported) {
  const auto f = VectorField::named(SystemId::uniform, 0.01, 0.1);
  IntegratorOptions o;
  o.min_step = 1.0;
  o.max_step = 0.5;
  EXPECT_THROW(integrate(f, SimplexState(0.3, 0.3), o), StepUnderflow);
}

TEST(Integrate, EscapeIsReported) {
  const auto f = VectorField::named(SystemId::uniform, 0.01, 0.1);
  IntegratorOptions o;
  o.escape_tol = -1.0;
  EXPECT_THROW(integrate(f, SimplexState(0.3, 0.3), o), SimplexEscape);
}

TEST(Integrate, TrajectoryCsv) {
  const auto f = VectorField::named(SystemId::replicator, 0.0, 0.1);
  const auto tr = integrate(f, SimplexState(0.2, 0.4), 5.0, 1e-9, 1e-11);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,x_alld,y_tft,z_allc");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3);
  }
  EXPECT_EQ(rows, tr.times.size());
}

TEST(FindAttractor, AlldWinsWithoutInteriorPoints) {
  const auto f = VectorField::named(SystemId::tft_to_allc, 0.1, 0.5);
  std::mt19937_64 rng(19);
  for (int k = 0; k < 10; ++k) {
    const auto a = find_attractor(f, random_interior(rng));
    ASSERT_EQ(a.kind, AttractorKind::fixed_point);
    EXPECT_NEAR(a.location.x(), 1.0, 1e-6);
    EXPECT_NEAR(a.location.y(), 0.0, 1e-6);
  }
}

TEST(FindAttractor, AlmostAlldPointAttractsItself) {
  for (auto [mu, c] : {std::pair{0.08, 0.04}, {0.15, 0.3}, {0.01, 0.1}}) {
    const auto f = VectorField::named(SystemId::alld_to_allc, mu, c);
    const auto pts = fixed_points(f);
    const auto it = std::find_if(pts.begin(), pts.end(), [](const EquilibriumReport& r) {
      return r.is_stable() && r.location.y() == 0.0 && r.location.x() < 1.0;
    });
    ASSERT_NE(it, pts.end()) << mu << " " << c;
    const auto a = find_attractor(f, it->location);
    ASSERT_EQ(a.kind, AttractorKind::fixed_point);
    EXPECT_LT(a.location.distance(it->location), 1e-9);
  }
}

TEST(FindAttractor, PerturbedInteriorStartReachesCycle) {
  const auto f = VectorField::named(SystemId::alld_to_allc, 0.08, 0.04);
  const auto anchor = choose_anchor(f);
  const auto& p = anchor.equilibrium->location;
  const auto a = find_attractor(f, SimplexState(p.x() + 1e-3, p.y()));
  ASSERT_EQ(a.kind, AttractorKind::cycle);
  ASSERT_TRUE(a.cycle.has_value());
  EXPECT_EQ(a.cycle->stability, CycleStability::stable);
  EXPECT_GT(a.cycle->period, 0.0);
}

TEST(FindAttractor, ShortHorizonIsUndetermined) {
  const auto f = VectorField::named(SystemId::alld_to_allc, 0.08, 0.04);
  const auto anchor = choose_anchor(f);
  const auto a = find_attractor(f, default_seed(anchor, 1e-3), 1.0);
  EXPECT_EQ(a.kind, AttractorKind::undetermined);
}
