#pragma once

// Game parameters, payoffs, fitness and mutation matrices for the
// ALLD / TFT / ALLC population. Index order everywhere is (ALLD, TFT, ALLC).

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "repmut/errors.hpp"

namespace repmut {

enum class Strategy : int { alld = 0, tft = 1, allc = 2 };

inline constexpr std::array<std::string_view, 3> kStrategyNames = {"ALLD", "TFT", "ALLC"};

struct Payoffs {
  double T = 5.0;
  double R = 3.0;
  double P = 1.0;
  double S = 0.0;

  bool is_default() const { return T == 5.0 && R == 3.0 && P == 1.0 && S == 0.0; }

  /// T > R > P > S and 2R > T + S.
  bool is_prisoners_dilemma() const { return T > R && R > P && P > S && R > (T + S) / 2.0; }
};

struct ModelParams {
  Payoffs payoffs;
  double cost = 0.0;  // complexity cost paid by TFT
  double mu = 0.0;    // mutation probability

  ModelParams() = default;
  ModelParams(double mu_, double cost_, Payoffs p = {}) : payoffs(p), cost(cost_), mu(mu_) {}

  void validate() const {
    if (!payoffs.is_prisoners_dilemma())
      throw InvalidArgument("payoffs violate T > R > P > S and R > (T+S)/2");
    if (!(cost >= 0.0) || !std::isfinite(cost)) throw InvalidArgument("cost must be finite and >= 0");
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("mu must lie in [0, 1]");
  }
};

inline constexpr double kSimplexTol = 1e-12;

/// Point on the 2-simplex stored as (x, y); z = 1 - x - y is derived.
class SimplexState {
 public:
  SimplexState() = default;

  SimplexState(double x, double y) : x_(x), y_(y) { check(); }

  SimplexState(double x, double y, double z) : x_(x), y_(y) {
    if (std::abs(x + y + z - 1.0) > kSimplexTol)
      throw InvalidArgument("simplex state does not sum to 1");
    check();
  }

  double x() const { return x_ < 0.0 ? 0.0 : x_; }
  double y() const { return y_ < 0.0 ? 0.0 : y_; }
  double z() const {
    const double z = 1.0 - x_ - y_;
    return z < 0.0 ? 0.0 : z;
  }

  double raw_x() const { return x_; }
  double raw_y() const { return y_; }

  std::array<double, 3> frequencies() const { return {x(), y(), z()}; }

  /// Distance in the (x, y) chart.
  double distance(const SimplexState& o) const { return std::hypot(x_ - o.x_, y_ - o.y_); }

  /// True when all three frequencies are at least `margin`.
  bool interior(double margin) const { return x_ >= margin && y_ >= margin && 1.0 - x_ - y_ >= margin; }

  static bool admissible(double x, double y, double tol = kSimplexTol) {
    return x >= -tol && y >= -tol && 1.0 - x - y >= -tol;
  }

 private:
  void check() const {
    if (!std::isfinite(x_) || !std::isfinite(y_)) throw InvalidArgument("non-finite simplex state");
    if (!admissible(x_, y_)) throw InvalidArgument("state lies outside the simplex");
  }

  double x_ = 0.0;
  double y_ = 0.0;
};

struct FitnessVector {
  double f_x = 0.0;
  double f_y = 0.0;
  double f_z = 0.0;
  double phi = 0.0;
};

/// Average payoff of row strategy against column strategy; TFT row pays `cost`.
inline Eigen::Matrix3d payoff_matrix(const ModelParams& p) {
  const auto& g = p.payoffs;
  Eigen::Matrix3d a;
  a << g.P, g.P, g.T,                            //
      g.P - p.cost, g.R - p.cost, g.R - p.cost,  //
      g.S, g.R, g.R;
  return a;
}

/// Expected payoffs against the population mix and their weighted mean.
inline FitnessVector fitness(const SimplexState& s, const ModelParams& p) {
  const Eigen::Vector3d freq(s.x(), s.y(), s.z());
  const Eigen::Vector3d f = payoff_matrix(p) * freq;
  return {f(0), f(1), f(2), freq.dot(f)};
}

/// Fitness with default payoffs in the reduced chart (z eliminated).
inline FitnessVector fitness(const SimplexState& s, double c) {
  const double x = s.x();
  const double y = s.y();
  return {5.0 - 4.0 * x - 4.0 * y, 3.0 - c - 2.0 * x, 3.0 - 3.0 * x, 3.0 - c * y - x * (1.0 + x + 3.0 * y)};
}

enum class MutationPattern {
  none,
  tft_to_allc,
  alld_to_allc,
  alld_to_tft,
  allc_to_tft,
  allc_to_alld,
  tft_to_alld,
  uniform,
  custom,
};

inline std::string_view to_string(MutationPattern p) {
  switch (p) {
    case MutationPattern::none: return "none";
    case MutationPattern::tft_to_allc: return "tft_to_allc";
    case MutationPattern::alld_to_allc: return "alld_to_allc";
    case MutationPattern::alld_to_tft: return "alld_to_tft";
    case MutationPattern::allc_to_tft: return "allc_to_tft";
    case MutationPattern::allc_to_alld: return "allc_to_alld";
    case MutationPattern::tft_to_alld: return "tft_to_alld";
    case MutationPattern::uniform: return "uniform";
    case MutationPattern::custom: return "custom";
  }
  return "custom";
}

inline MutationPattern parse_mutation_pattern(std::string_view s) {
  for (auto p : {MutationPattern::none, MutationPattern::tft_to_allc, MutationPattern::alld_to_allc,
                 MutationPattern::alld_to_tft, MutationPattern::allc_to_tft, MutationPattern::allc_to_alld,
                 MutationPattern::tft_to_alld, MutationPattern::uniform}) {
    if (to_string(p) == s) return p;
  }
  throw InvalidArgument("unknown mutation pattern: " + std::string(s));
}

/// Mutation structure Q = I - mu * M with M having zero row sums.
class MutationSpec {
 public:
  MutationSpec() : pattern_(MutationPattern::none), m_(Eigen::Matrix3d::Zero()) {}

  static MutationSpec from_pattern(MutationPattern p) {
    MutationSpec s;
    s.pattern_ = p;
    auto one_way = [&](Strategy from, Strategy to) {
      const int i = static_cast<int>(from);
      const int j = static_cast<int>(to);
      s.m_(i, i) = 1.0;
      s.m_(i, j) = -1.0;
    };
    switch (p) {
      case MutationPattern::none: break;
      case MutationPattern::tft_to_allc: one_way(Strategy::tft, Strategy::allc); break;
      case MutationPattern::alld_to_allc: one_way(Strategy::alld, Strategy::allc); break;
      case MutationPattern::alld_to_tft: one_way(Strategy::alld, Strategy::tft); break;
      case MutationPattern::allc_to_tft: one_way(Strategy::allc, Strategy::tft); break;
      case MutationPattern::allc_to_alld: one_way(Strategy::allc, Strategy::alld); break;
      case MutationPattern::tft_to_alld: one_way(Strategy::tft, Strategy::alld); break;
      case MutationPattern::uniform:
        s.m_ << 2, -1, -1,  //
            -1, 2, -1,      //
            -1, -1, 2;
        break;
      case MutationPattern::custom: throw InvalidArgument("custom pattern needs a matrix");
    }
    return s;
  }

  static MutationSpec custom(const Eigen::Matrix3d& m) {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(m.row(i).sum()) > 1e-12) throw InvalidArgument("mutation pattern rows must sum to zero");
      for (int j = 0; j < 3; ++j) {
        if (i != j && m(i, j) > 0.0) throw InvalidArgument("off-diagonal mutation pattern entries must be <= 0");
      }
    }
    MutationSpec s;
    s.pattern_ = MutationPattern::custom;
    s.m_ = m;
    return s;
  }

  MutationPattern pattern() const { return pattern_; }
  const Eigen::Matrix3d& matrix() const { return m_; }

  /// Largest mu keeping every entry of Q non-negative.
  double max_mu() const {
    const double d = m_.diagonal().maxCoeff();
    return d > 0.0 ? std::min(1.0, 1.0 / d) : 1.0;
  }

 private:
  MutationPattern pattern_;
  Eigen::Matrix3d m_;
};

/// Row-stochastic mutation matrix; throws InadmissibleMutation when mu is too
/// large for the pattern.
inline Eigen::Matrix3d mutation_q(const MutationSpec& spec, double mu) {
  if (!(mu >= 0.0)) throw InadmissibleMutation("mu must be >= 0");
  Eigen::Matrix3d q = Eigen::Matrix3d::Identity() - mu * spec.matrix();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (q(i, j) < -1e-14) throw InadmissibleMutation("mu too large for mutation pattern: negative Q entry");
      if (q(i, j) < 0.0) q(i, j) = 0.0;
    }
    if (std::abs(q.row(i).sum() - 1.0) > 1e-12) throw InadmissibleMutation("Q row does not sum to 1");
  }
  return q;
}

}  // namespace repmut
