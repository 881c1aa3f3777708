#include <gtest/gtest.h>

#include <complex>
#include <random>

#include "repmut/bifurcation.hpp"
#include "repmut/equilibria.hpp"

using namespace repmut;

namespace {

using Ev = std::array<std::complex<double>, 2>;

double nearest(const std::vector<EquilibriumReport>& v, const SimplexState& s) {
  double d = 1e300;
  for (const auto& r : v) d = std::min(d, r.location.distance(s));
  return d;
}

const EquilibriumReport* by_label(const std::vector<EquilibriumReport>& v, int label) {
  for (const auto& r : v)
    if (r.label == label) return &r;
  return nullptr;
}

}  // namespace

TEST(Classify, EigenvalueTable) {
  EXPECT_EQ(classify(Ev{{{-1, 0}, {-2, 0}}}), Stability::stable_node);
  EXPECT_EQ(classify(Ev{{{1, 0}, {2, 0}}}), Stability::unstable_node);
  EXPECT_EQ(classify(Ev{{{1, 0}, {-2, 0}}}), Stability::saddle);
  EXPECT_EQ(classify(Ev{{{0.1, 2}, {0.1, -2}}}), Stability::unstable_spiral);
  EXPECT_EQ(classify(Ev{{{-0.1, 2}, {-0.1, -2}}}), Stability::stable_spiral);
  EXPECT_EQ(classify(Ev{{{0, 2}, {0, -2}}}), Stability::nonhyperbolic);
  EXPECT_EQ(classify(Ev{{{-1, 0}, {5e-10, 0}}}), Stability::nonhyperbolic);
}

TEST(Classify, RepeatedEigenvalueIsNode) {
  EXPECT_EQ(classify(Ev{{{-1, 1e-9}, {-1, -1e-9}}}), Stability::stable_node);
}

TEST(Classify, ConsistentWithJacobian) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> mu(0.0, 0.3), c(0.0, 0.8);
  for (int k = 0; k < 200; ++k) {
    const auto f = VectorField::named(k % 2 ? SystemId::tft_to_allc : SystemId::alld_to_allc, mu(rng), c(rng));
    for (const auto& r : fixed_points(f)) {
      const double det = r.jacobian.det(), tr = r.jacobian.trace();
      const double maxre = std::max(r.eigenvalues[0].real(), r.eigenvalues[1].real());
      if (r.classification == Stability::nonhyperbolic) continue;
      EXPECT_EQ(r.classification == Stability::saddle, det < 0);
      EXPECT_EQ(r.is_stable(), maxre < 0);
      const bool spiral = r.classification == Stability::stable_spiral || r.classification == Stability::unstable_spiral;
      EXPECT_EQ(spiral, tr * tr - 4 * det < 0 && std::abs(r.eigenvalues[0].imag()) > 1e-7);
    }
  }
}

TEST(ClosedForm, TftCornersAlwaysPresent) {
  for (double mu : {0.001, 0.05, 0.2, 0.3})
    for (double c : {0.01, 0.2, 0.8}) {
      const auto v = fixed_points_closed_form(SystemId::tft_to_allc, mu, c);
      const auto* o = by_label(v, 1);
      const auto* a = by_label(v, 2);
      ASSERT_TRUE(o && a);
      EXPECT_EQ(o->classification, Stability::saddle);
      EXPECT_EQ(a->classification, Stability::stable_node);
      EXPECT_EQ(a->location.x(), 1.0);
      EXPECT_EQ(o->provenance, Provenance::closed_form_A);
    }
}

TEST(ClosedForm, AlldBoundaryPointAtQuarter) {
  for (double c : {1e-3, 0.01, 0.05}) {
    const auto v = fixed_points_closed_form(SystemId::alld_to_allc, 0.25, c);
    const auto* p = by_label(v, 3);
    ASSERT_NE(p, nullptr);
    EXPECT_NEAR(p->location.x(), 0.5, 1e-12);
    EXPECT_EQ(p->location.y(), 0.0);
  }
}

TEST(ClosedForm, AlldBoundaryPointWithoutMutation) {
  const auto v = fixed_points_closed_form(SystemId::alld_to_allc, 0.0, 0.3);
  const auto* p = by_label(v, 3);
  ASSERT_NE(p, nullptr);
  EXPECT_EQ(p->location.x(), 1.0);
}

TEST(ClosedForm, AlldCornerLabelsHoldOnWindow) {
  for (int i = 1; i <= 30; ++i)
    for (int j = 1; j <= 30; ++j) {
      const double mu = 0.3 * i / 30, c = 0.8 * j / 30;
      const auto v = fixed_points_closed_form(SystemId::alld_to_allc, mu, c);
      const auto* o = by_label(v, 1);
      const auto* t = by_label(v, 2);
      ASSERT_TRUE(o && t);
      EXPECT_EQ(o->classification, Stability::saddle) << mu << " " << c;
      EXPECT_EQ(t->classification, Stability::saddle) << mu << " " << c;
    }
}

TEST(ClosedForm, ResidualsVanishOnDenseSweep) {
  for (auto id : {SystemId::tft_to_allc, SystemId::alld_to_allc})
    for (int i = 1; i <= 40; ++i)
      for (int j = 1; j <= 40; ++j) {
        const double mu = 0.3 * i / 40, c = 0.8 * j / 40;
        const auto f = VectorField::named(id, mu, c);
        for (const auto& r : fixed_points_closed_form(id, mu, c)) {
          EXPECT_LT(f(r.location).norm(), 1e-10) << to_string(id) << " " << mu << " " << c << " label " << r.label;
          EXPECT_LT(r.residual, 1e-10);
        }
      }
}

TEST(ClosedForm, InteriorPairCoalescesAtFold) {
  for (double mu : {0.005, 0.01, 0.03, 0.05, 0.1}) {
    const long double c_sn = sn_curve_tft_allc<long double>(mu);
    const auto v = fixed_points_closed_form(SystemId::tft_to_allc, mu, static_cast<double>(c_sn) - 1e-11);
    const auto* p3 = by_label(v, 3);
    const auto* p4 = by_label(v, 4);
    ASSERT_TRUE(p3 && p4) << mu;
    EXPECT_LT(p3->location.distance(p4->location), 1e-5);
    EXPECT_LT(std::abs(ClosedFormScratch<long double>::compute(mu, c_sn).A1), 1e-8);
  }
}

TEST(ClosedForm, PairDisappearsAboveFold) {
  const double c_sn = sn_curve_tft_allc(0.05);
  EXPECT_EQ(fixed_points_closed_form(SystemId::tft_to_allc, 0.05, c_sn + 1e-3).size(), 2u);
  EXPECT_EQ(fixed_points_closed_form(SystemId::tft_to_allc, 0.05, c_sn - 1e-3).size(), 4u);
}

TEST(ClosedForm, InteriorPointFlipsAcrossHopf) {
  for (double mu : {0.01, 0.03, 0.05}) {
    const double ch = hopf_curve_tft_allc(mu);
    const auto vb = fixed_points_closed_form(SystemId::tft_to_allc, mu, ch * 0.9);
    const auto va = fixed_points_closed_form(SystemId::tft_to_allc, mu, ch * 1.1);
    const auto* below = by_label(vb, 4);
    const auto* above = by_label(va, 4);
    ASSERT_TRUE(below && above);
    EXPECT_EQ(below->classification, Stability::stable_spiral) << mu;
    EXPECT_EQ(above->classification, Stability::unstable_spiral) << mu;
  }
}

TEST(ClosedForm, RejectsOtherSystems) {
  EXPECT_THROW(fixed_points_closed_form(SystemId::uniform, 0.1, 0.1), InvalidArgument);
  EXPECT_THROW(fixed_points_closed_form(SystemId::tft_to_allc, -0.1, 0.1), InvalidArgument);
}

TEST(Numeric, MatchesClosedForms) {
  for (auto id : {SystemId::tft_to_allc, SystemId::alld_to_allc})
    for (int i = 1; i <= 20; ++i)
      for (int j = 1; j <= 20; ++j) {
        const double mu = 0.3 * i / 20, c = 0.8 * j / 20;
        const auto num = fixed_points_numeric(VectorField::named(id, mu, c));
        for (const auto& r : fixed_points_closed_form(id, mu, c))
          EXPECT_LT(nearest(num, r.location), 1e-8) << to_string(id) << " " << mu << " " << c << " label " << r.label;
      }
}

TEST(Numeric, CountMatchesClosedForms) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mu(0.002, 0.3), c(0.002, 0.8);
  int checked = 0;
  for (int k = 0; k < 300; ++k) {
    const auto id = k % 2 ? SystemId::tft_to_allc : SystemId::alld_to_allc;
    const double m = mu(rng), cc = c(rng);
    const auto cf = fixed_points(VectorField::named(id, m, cc));
    bool degenerate = false;
    for (const auto& r : cf) degenerate |= r.classification == Stability::nonhyperbolic;
    if (degenerate) continue;
    const auto num = fixed_points_numeric(VectorField::named(id, m, cc));
    EXPECT_EQ(num.size(), cf.size()) << to_string(id) << " " << m << " " << cc;
    ++checked;
  }
  EXPECT_GT(checked, 250);
}

TEST(Numeric, ReplicatorInteriorPoint) {
  const auto v = interior_fixed_points(VectorField::named(SystemId::replicator, 0.0, 0.5));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0].location.x(), 0.5, 1e-10);
  EXPECT_NEAR(v[0].location.y(), 0.375, 1e-10);
  EXPECT_EQ(v[0].provenance, Provenance::numeric);
}

TEST(Numeric, ReplicatorInteriorPointThreshold) {
  EXPECT_EQ(interior_fixed_points(VectorField::named(SystemId::replicator, 0.0, 0.6)).size(), 1u);
  EXPECT_TRUE(interior_fixed_points(VectorField::named(SystemId::replicator, 0.0, 0.7)).empty());
}

TEST(Numeric, CostFreeEdgeIsNeutralContinuum) {
  const auto v = fixed_points_numeric(VectorField::named(SystemId::replicator, 0.0, 0.0));
  int on_edge = 0;
  for (const auto& r : v) {
    if (r.location.x() < 1e-9) {
      ++on_edge;
      EXPECT_EQ(r.classification, Stability::nonhyperbolic) << r.location.y();
    }
  }
  EXPECT_GE(on_edge, 10);
}

TEST(Numeric, ResidualBelowTolerance) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> mu(0.0, 0.3), c(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const auto f = VectorField::named(SystemId::uniform, mu(rng), c(rng));
    for (const auto& r : fixed_points_numeric(f)) EXPECT_LT(r.residual, 1e-12);
  }
}

TEST(Numeric, CustomMutationMatrix) {
  Eigen::Matrix3d m;
  m << 1, -0.5, -0.5, 0, 0.6, -0.6, -0.3, 0, 0.3;
  const auto f = VectorField::general(ModelParams(0.01, 0.02), MutationSpec::custom(m));
  const auto v = fixed_points(f);
  ASSERT_FALSE(v.empty());
  for (const auto& r : v) EXPECT_LT(f(r.location).norm(), 1e-10);
}

TEST(Equilibria, FixedPointsDeduplicates) {
  const auto v = fixed_points(VectorField::named(SystemId::alld_to_allc, 0.4, 0.001));
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_GT(v[i].location.distance(v[j].location), 1e-9);
}

TEST(Equilibria, JsonExport) {
  const auto v = fixed_points(VectorField::named(SystemId::tft_to_allc, 0.05, 0.1));
  const auto j = to_json(v);
  ASSERT_EQ(j.size(), v.size());
  for (const auto& e : j) {
    EXPECT_TRUE(e.contains("location"));
    EXPECT_EQ(e.at("eigenvalues").size(), 2u);
    EXPECT_TRUE(e.at("eigenvalues")[0].contains("re"));
    EXPECT_TRUE(e.at("eigenvalues")[0].contains("im"));
    EXPECT_TRUE(e.contains("classification"));
    EXPECT_EQ(e.at("provenance").get<std::string>(), "closed_form_A");
  }
}
