#pragma once

#include "mlsl/model.hpp"

#include <Eigen/Core>

#include <vector>

namespace mlsl {

struct PhaseGridDensity;

struct SinkhornOptions {
  double tol = 1e-9;               // final max row-marginal violation
  double eps_start = 1.0;          // initial epsilon, in units of the cost scale
  double eps_final_factor = 5e-4;  // final epsilon, in units of the cost scale
  double eps_scaling = 0.5;        // epsilon ratio between stages
  long max_iter = 100000;          // total Sinkhorn sweeps over all stages
  double truncation = 1e-12;       // grid cells below this fraction of the max are dropped
};

struct TransportPlan {
  std::vector<double> row;  // first marginal
  std::vector<double> col;  // second marginal
  Eigen::MatrixXd mass;

  /// Largest |row sum - row marginal| (resp. column).
  double row_residual() const;
  double col_residual() const;
};

struct ExactTransport {
  double distance = 0.0;  // sqrt of the optimal cost
  double cost = 0.0;
  TransportPlan plan;
  long pivots = 0;
};

/// Exact transportation simplex on an m x n cost matrix (m, n <= 4096).
/// Northwest-corner start, block pricing with lowest-index tie-breaks, and
/// Bland's rule after a run of degenerate pivots.
ExactTransport solve_transport(const std::vector<double>& a, const std::vector<double>& b, const Eigen::MatrixXd& cost);

/// Quadratic-cost distance between two atomic measures on phase space.
ExactTransport w2_exact(const AtomicMeasure& a, const AtomicMeasure& b);

struct SinkhornReport {
  double distance = 0.0;
  double eps_final = 0.0;
  long iterations = 0;
  double marginal_violation = 0.0;
};

/// Debiased entropic estimate between two atomic measures.
SinkhornReport w2_sinkhorn(const AtomicMeasure& a, const AtomicMeasure& b, const SinkhornOptions& opts = {});

/// Debiased entropic estimate between atoms and a phase-grid density.  The
/// grid self-term is not formed; the final epsilon is capped at
/// (smallest grid step)^2 / 40 where that term is negligible.
SinkhornReport w2_cloud_grid(const AtomicMeasure& a, const PhaseGridDensity& rho, const SinkhornOptions& opts = {});

/// The k heaviest cells of rho as a renormalized atomic measure.
AtomicMeasure heaviest_cells(const PhaseGridDensity& rho, std::size_t k);

/// Closed-form quadratic-cost distance between Gaussians N(m1, S1), N(m2, S2).
double w2_gaussian_oracle(const Eigen::VectorXd& m1, const Eigen::MatrixXd& S1, const Eigen::VectorXd& m2,
                          const Eigen::MatrixXd& S2);

}  // namespace mlsl
