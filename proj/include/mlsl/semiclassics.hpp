#pragma once

#include "mlsl/model.hpp"
#include "mlsl/quantum.hpp"
#include "mlsl/transport.hpp"

#include <optional>

namespace mlsl {

struct PhaseGridDensity;

/// Weights of the quantum cost  1/2 lambda^2 |x - y|^2 + 1/2 w |xi + i hbar grad_y|^2
/// with w = 1, or w = eps^2 when eps is set (lambda is then normally 1).
struct CostParams {
  double lambda = 1.0;
  double hbar = 0.1;
  std::optional<double> eps;

  void validate() const;
  double momentum_weight() const { return eps ? *eps * *eps : 1.0; }
};

struct TheoremConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double rate_C = 0.0;  // max(2, eps^2 (1 + L^2)); 2 when no eps is given
  double L = 0.0;
  double K = 0.0;
  double Kp = 0.0;
  double rho0 = 0.0;
  double lambda = 1.0;
  std::optional<double> eps;
};

/// alpha = 1 + max(1, (1+L^2)/lambda^2) + 4 rho0 max(2 Kp^2/lambda^2, 1)
/// beta  = max(2, (lambda^2 + 2K^2)/lambda^2)^2
/// Throws NonPositiveInput for lambda <= 0 or a negative constant.
TheoremConstants constants(double L, double K, double Kp, double rho0, double lambda);

/// max(2, eps^2 (1 + L^2))
double double_limit_rate(double eps, double L);

/// <z| c(x, xi) |z> for the coherent state z = (q, p):
/// 1/2 lambda^2 (|x-q|^2 + d hbar/2) + 1/2 w (|xi-p|^2 + d hbar/2).
double coherent_cost_expectation(const PhaseVec& xxi, const PhaseVec& z, const CostParams& params);

struct UpperBound {
  double value = 0.0;       // cost of the coherent coupling along the optimal plan
  double loose_bound = 0.0; // max(lambda^2, w) dist^2 + (lambda^2 + w) d hbar / 4
  double dist2 = 0.0;       // squared exact transport distance f -> mu
};

/// Coupling value sum_ij pi_ij [1/2 lambda^2 |x_i-q_j|^2 + 1/2 w |xi_i-p_j|^2]
/// + (lambda^2 + w) d hbar / 4 for R = toeplitz(mu).  Throws
/// InvariantViolation if it exceeds loose_bound.
UpperBound pseudo_distance_upper_detail(const AtomicMeasure& f, const AtomicMeasure& mu, const CostParams& params);
double pseudo_distance_upper(const AtomicMeasure& f, const AtomicMeasure& mu, const CostParams& params);

/// 1/2 min(lambda^2, w) dist(f, husimi)^2 - (lambda^2 + w) d hbar / 4.
double pseudo_distance_lower(const AtomicMeasure& f, const PhaseGridDensity& husimi, const CostParams& params,
                             const SinkhornOptions& opts = {});

/// Grid quadrature of <psi| 1/2 lambda^2 |x-y|^2 + 1/2 |xi + A(x) - A(y) + i hbar grad|^2 |psi>.
double magnetic_cost_expectation(const PhaseVec& xxi, const GridState& psi, const FieldSpec& field, double lambda);

/// Same quadrature for the cost without the field, with the eps weight of params.
double cost_expectation(const PhaseVec& xxi, const GridState& psi, const CostParams& params);

/// max(2, (lambda^2 + 2K^2) / lambda^2)
double lipschitz_sandwich_factor(double K, double lambda);

struct CstarResult {
  double lambda_star = 1.0;
  double cstar = 0.0;
  double coarse_min = 0.0;  // best value on the 64-point log grid
};

/// (1/lambda) sqrt(beta(K,lambda)) sqrt((lambda^2+1) d hbar) 2 (e^{alpha T/2} - 1) / alpha
double cstar_objective(double lambda, double T, double L, double K, double Kp, double rho0, int d, double hbar);

/// Minimizes cstar_objective over lambda in [1e-3, 1e3]: 64-point log scan,
/// then golden-section refinement in log(lambda) around the best node.
CstarResult optimize_cstar(double T, double L, double K, double Kp, double rho0, int d, double hbar);

}  // namespace mlsl
