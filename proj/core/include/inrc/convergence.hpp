#pragma once

#include "inrc/error.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace inrc::theory {

/// L(theta) = 1/2 sum_k c_k (theta_k - theta*_k)^2 + offset with c_k > 0.
/// beta = max c_k is the smoothness constant and mu = min c_k the PL
/// constant, both exact.
struct QuadraticLoss {
  Eigen::VectorXd curvature;
  Eigen::VectorXd minimizer;
  double offset = 0.0;

  double value(const Eigen::VectorXd& theta) const;
  /// L(theta) - L(theta*), evaluated without cancellation.
  double gap(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  double beta() const { return curvature.maxCoeff(); }
  double mu() const { return curvature.minCoeff(); }
  Eigen::Index dimension() const { return curvature.size(); }
};

/// Squared gradient-norm bounds G_1^2, G_2^2, G_3^2.
struct GradientBounds {
  double g1_sq = 0.0;
  double g2_sq = 0.0;
  double g3_sq = 0.0;
};

/// Gradient similarity constants: rho13, rho23 lower-bound the inner products
/// <grad L3(w3), grad L1(theta1)> and <grad L3(w3), grad L2(theta2)>; rho12
/// upper-bounds <grad L1(theta1), grad L2(theta2)>.
struct Similarities {
  double rho13 = 0.0;
  double rho23 = 0.0;
  double rho12 = 0.0;
};

/// Two trainable weight vectors, three images: w1 = theta1, w2 = theta2,
/// w3 = alpha31 theta1 + alpha32 theta2, total loss
/// gamma1 L1(theta1) + gamma2 L2(theta2) + gamma3 L3(w3).
struct TheoremConfig {
  std::array<QuadraticLoss, 3> losses;
  std::array<double, 3> gamma{};
  std::array<double, 2> alpha3{};
  int iterations = 0;
  Eigen::VectorXd theta1_init;
  Eigen::VectorXd theta2_init;
  /// When set, these G_i^2 replace the trajectory maxima in the bounds.
  std::optional<GradientBounds> a_priori_bounds;

  Eigen::Index dimension() const { return losses[0].dimension(); }
};

/// 1 / (alpha31^2 beta3/(beta1 gamma1) + alpha32^2 beta3/(beta2 gamma2)); +inf when alpha3 = 0.
double gamma3_limit(const TheoremConfig& config);

/// 1 - gamma3 (alpha31^2 beta3/(beta1 gamma1) + alpha32^2 beta3/(beta2 gamma2)).
double secondary_contraction(const TheoremConfig& config);

/// Shape checks (Errc::invalid_argument) and the gamma3 feasibility
/// inequality (Errc::infeasible_config).
void validate(const TheoremConfig& config);

/// eta_j = 1 / (gamma_j beta_j) for side j in {1, 2}.
double step_size(const TheoremConfig& config, int side);

/// theta^{(0..T)} and the derived w3 for every iteration.
struct Trajectory {
  std::vector<Eigen::VectorXd> theta1;
  std::vector<Eigen::VectorXd> theta2;
  std::vector<Eigen::VectorXd> w3;

  int iterations() const { return static_cast<int>(theta1.size()) - 1; }
};

/// grad_{theta_j} of the total loss, assembled as sum_i alpha_ij gamma_i grad L_i(w_i).
std::array<Eigen::VectorXd, 2> total_gradient(const TheoremConfig& config, const Eigen::VectorXd& theta1,
                                              const Eigen::VectorXd& theta2);

/// Plain gradient descent with eta_j = 1/(gamma_j beta_j). Throws
/// Errc::diverged on a non-finite iterate.
Trajectory run_gd(const TheoremConfig& config);

/// Trajectory maxima of ||grad L_i||^2 and the extremal inner products in the
/// directions the bounds need.
struct TrajectoryMeasurements {
  GradientBounds bounds;
  Similarities similarities;
};
TrajectoryMeasurements measure(const TheoremConfig& config, const Trajectory& trajectory);

struct DeltaTerms {
  double delta13 = 0.0;   // gamma3^2 alpha31^2 G3^2
  double delta23 = 0.0;   // gamma3^2 alpha32^2 G3^2
  double delta123 = 0.0;  // five-term secondary constant
};
DeltaTerms delta_terms(const TheoremConfig& config, const GradientBounds& bounds,
                       const Similarities& similarities);
double delta_primary(const TheoremConfig& config, const GradientBounds& bounds, int side);
double delta_secondary(const TheoremConfig& config, const GradientBounds& bounds,
                       const Similarities& similarities);

/// (1 - mu/beta)^t gap0 + delta/(2 beta gamma^2) sum_{k<t} (1 - mu/beta)^k
/// for side 1 or 2.
double primary_bound_rhs(const TheoremConfig& config, const GradientBounds& bounds, int t, int side);

/// (1 - mu3/beta3)^t gap0 + delta123/(2 beta3) sum_{k<t} (1 - mu3/beta3)^k
/// with eta3 = 1/beta3. Throws when the similarities are missing.
double secondary_bound_rhs(const TheoremConfig& config, const GradientBounds& bounds,
                           const std::optional<Similarities>& similarities, int t);

/// t -> infinity limits: delta13/(2 mu1 gamma1^2), delta23/(2 mu2 gamma2^2), delta123/(2 mu3).
std::array<double, 3> asymptotic_gaps(const TheoremConfig& config, const DeltaTerms& deltas);

struct Violation {
  int bound = 0;  // 1, 2, 3 for L1, L2, L3; 4..6 for the asymptotic tail checks
  int t = 0;
  double gap = 0.0;
  double rhs = 0.0;
};

struct BoundReport {
  std::vector<double> gap1, gap2, gap3;
  std::vector<double> rhs1, rhs2, rhs3;
  GradientBounds bounds;
  Similarities similarities;
  DeltaTerms deltas;
  std::array<double, 3> asymptotic{};
  std::array<double, 3> tail_mean_gap{};
  int tail_length = 0;
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
};

/// Runs gradient descent for config.iterations steps and checks, for every
/// t, gap_i(t) <= rhs_i(t) with no tolerance, then compares the tail-averaged
/// gaps (last max(1, T/5) iterations) against the asymptotic limits plus the
/// transient r^t0 gap0 still allowed at the first tail iteration t0.
BoundReport verify(const TheoremConfig& config);

/// d = 2 regression fixture: curvatures diag(0.5, 1) everywhere,
/// theta* = (1,0), (0,1), (1,1), gamma = (0.4, 0.4, 0.2), alpha3 = (0.5, 0.5),
/// zero initial weights, T = 500.
TheoremConfig reference_config();

TheoremConfig config_from_json(const std::string& text);
std::string to_json(const TheoremConfig& config);
std::string to_json(const BoundReport& report);

}  // namespace inrc::theory
