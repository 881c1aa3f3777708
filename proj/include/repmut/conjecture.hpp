#pragma once

// Random admissible mutation patterns and a search for stable cycles at
// small (mu, c). Reports outcomes; nothing here asserts the conjecture.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "repmut/cycles.hpp"
#include "repmut/parallel.hpp"

namespace repmut {

struct ConjectureOptions {
  int matrices = 5;
  std::uint64_t seed = 1;
  double mu_max = 0.05;  // exclusive
  double c_max = 0.05;   // exclusive
  int grid = 6;          // points per axis, log-spaced
  double sparsity = 0.3; // probability that an off-diagonal entry is zero
  double t_max = 20000.0;
  int threads = 0;
};

struct ConjectureTrial {
  Eigen::Matrix3d pattern = Eigen::Matrix3d::Zero();
  bool found = false;
  double mu = 0.0;
  double c = 0.0;
  double period = 0.0;
  double amplitude = 0.0;
  int points_tried = 0;
  int undetermined = 0;
};

struct ConjectureReport {
  ConjectureOptions options;
  std::vector<ConjectureTrial> trials;
  int found() const {
    int n = 0;
    for (const auto& t : trials) n += t.found;
    return n;
  }
};

/// Zero row sums, non-negative diagonal, non-positive off-diagonal, scaled
/// so the largest diagonal entry is 1 (every mu in [0, 1] admissible).
inline Eigen::Matrix3d random_mutation_pattern(std::mt19937_64& rng, double sparsity = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  while (m.diagonal().maxCoeff() <= 0.0) {
    m.setZero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j && u(rng) >= sparsity) m(i, j) = -u(rng);
    for (int i = 0; i < 3; ++i) m(i, i) = -m.row(i).sum();
  }
  return m / m.diagonal().maxCoeff();
}

inline ConjectureTrial conjecture_trial(const Eigen::Matrix3d& pattern, const ConjectureOptions& o) {
  ConjectureTrial t;
  t.pattern = pattern;
  const MutationSpec spec = MutationSpec::custom(pattern);
  const int n = std::max(2, o.grid);
  auto axis = [&](double hi) {
    std::vector<double> v;
    const double lo = hi / 50.0;
    for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(0.98 * hi / lo, double(i) / (n - 1)));
    return v;
  };
  CycleSearchOptions so;
  so.verify_stability = true;
  for (double mu : axis(o.mu_max)) {
    for (double c : axis(o.c_max)) {
      ++t.points_tried;
      const VectorField f = VectorField::general(ModelParams(mu, c), spec);
      const CycleAnchor anchor = choose_anchor(f);
      if (!anchor.equilibrium || anchor.equilibrium->is_stable()) continue;
      try {
        const auto r = detect_limit_cycle(f, std::nullopt, o.t_max, so);
        if (r && r->stability == CycleStability::stable) {
          t.found = true;
          t.mu = mu;
          t.c = c;
          t.period = r->period;
          t.amplitude = r->amplitude;
          return t;
        }
      } catch (const NumericalError&) {
        ++t.undetermined;
      }
    }
  }
  return t;
}

inline ConjectureReport conjecture_harness(const ConjectureOptions& o = {}) {
  ConjectureReport rep;
  rep.options = o;
  std::mt19937_64 rng(o.seed);
  std::vector<Eigen::Matrix3d> ms;
  for (int i = 0; i < o.matrices; ++i) ms.push_back(random_mutation_pattern(rng, o.sparsity));
  rep.trials.resize(ms.size());
  parallel_for(ms.size(), o.threads, [&](std::size_t i) { rep.trials[i] = conjecture_trial(ms[i], o); });
  return rep;
}

inline nlohmann::json to_json(const ConjectureReport& r) {
  nlohmann::json j;
  j["seed"] = r.options.seed;
  j["window"] = {{"mu_max", r.options.mu_max}, {"c_max", r.options.c_max}};
  j["found"] = r.found();
  j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials) {
    nlohmann::json m = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) m.push_back({t.pattern(i, 0), t.pattern(i, 1), t.pattern(i, 2)});
    nlohmann::json e = {{"pattern", m}, {"found", t.found}, {"points_tried", t.points_tried},
                        {"undetermined", t.undetermined}};
    if (t.found) {
      e["mu"] = t.mu;
      e["c"] = t.c;
      e["period"] = t.period;
      e["amplitude"] = t.amplitude;
    }
    j["trials"].push_back(e);
  }
  return j;
}

}  // namespace repmut
