#include "mlsl/semiclassics.hpp"

#include "mlsl/errors.hpp"
#include "mlsl/transforms.hpp"
#include "mlsl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlsl {

void CostParams::validate() const {
  if (!(lambda > 0.0)) fail(ErrorKind::NonPositiveInput, "lambda must be positive");
  if (!(hbar > 0.0)) fail(ErrorKind::NonPositiveInput, "hbar must be positive");
  if (eps && !(*eps > 0.0)) fail(ErrorKind::NonPositiveInput, "eps must be positive");
}

TheoremConstants constants(double L, double K, double Kp, double rho0, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorKind::NonPositiveInput, "lambda must be positive");
  if (!(L >= 0.0) || !(K >= 0.0) || !(Kp >= 0.0) || !(rho0 >= 0.0)) {
    fail(ErrorKind::NonPositiveInput, "L, K, K' and rho0 must be nonnegative");
  }
  const double l2 = lambda * lambda;
  TheoremConstants c;
  c.alpha = 1.0 + std::max(1.0, (1.0 + L * L) / l2) + 4.0 * rho0 * std::max(2.0 * Kp * Kp / l2, 1.0);
  const double b = std::max(2.0, (l2 + 2.0 * K * K) / l2);
  c.beta = b * b;
  c.rate_C = 2.0;
  c.L = L;
  c.K = K;
  c.Kp = Kp;
  c.rho0 = rho0;
  c.lambda = lambda;
  return c;
}

double double_limit_rate(double eps, double L) { return std::max(2.0, eps * eps * (1.0 + L * L)); }

double coherent_cost_expectation(const PhaseVec& xxi, const PhaseVec& z, const CostParams& params) {
  params.validate();
  if (xxi.dim() != z.dim()) fail(ErrorKind::DimensionMismatch, "phase points of different dimension");
  const double d = xxi.dim();
  const double half_var = 0.5 * d * params.hbar;
  const double l2 = params.lambda * params.lambda;
  return 0.5 * l2 * ((xxi.x - z.x).squaredNorm() + half_var) +
         0.5 * params.momentum_weight() * ((xxi.xi - z.xi).squaredNorm() + half_var);
}

UpperBound pseudo_distance_upper_detail(const AtomicMeasure& f, const AtomicMeasure& mu, const CostParams& params) {
  params.validate();
  const ExactTransport ot = w2_exact(f, mu);
  const double l2 = params.lambda * params.lambda;
  const double w = params.momentum_weight();
  const double d = f.dim();
  double transport = 0.0;
  for (Eigen::Index i = 0; i < ot.plan.mass.rows(); ++i) {
    for (Eigen::Index j = 0; j < ot.plan.mass.cols(); ++j) {
      const double m = ot.plan.mass(i, j);
      if (m == 0.0) continue;
      const PhaseVec& a = f.points[static_cast<std::size_t>(i)];
      const PhaseVec& b = mu.points[static_cast<std::size_t>(j)];
      transport += m * (0.5 * l2 * (a.x - b.x).squaredNorm() + 0.5 * w * (a.xi - b.xi).squaredNorm());
    }
  }
  UpperBound u;
  u.dist2 = ot.cost;
  u.value = transport + (l2 + w) * d * params.hbar / 4.0;
  u.loose_bound = std::max(l2, w) * ot.cost + (l2 + w) * d * params.hbar / 4.0;
  if (u.value > u.loose_bound) {
    fail(ErrorKind::InvariantViolation, "coherent coupling value exceeds max(1, lambda^2) dist^2 + (lambda^2+1) d hbar / 4");
  }
  return u;
}

double pseudo_distance_upper(const AtomicMeasure& f, const AtomicMeasure& mu, const CostParams& params) {
  return pseudo_distance_upper_detail(f, mu, params).value;
}

double pseudo_distance_lower(const AtomicMeasure& f, const PhaseGridDensity& husimi, const CostParams& params,
                             const SinkhornOptions& opts) {
  params.validate();
  const double dist = w2_cloud_grid(f, husimi, opts).distance;
  const double l2 = params.lambda * params.lambda;
  const double w = params.momentum_weight();
  return 0.5 * std::min(l2, w) * dist * dist - (l2 + w) * f.dim() * params.hbar / 4.0;
}

namespace {

double cost_quadrature(const PhaseVec& xxi, const GridState& psi, const FieldSpec* field, double lambda,
                       double weight) {
  const Grid& g = psi.grid;
  if (xxi.dim() != g.d) fail(ErrorKind::DimensionMismatch, "phase point and grid differ in dimension");
  const std::size_t N = g.size();
  const double cell = g.cell_volume();
  const Vec Ax = field ? field_eval(*field, xxi.x) : Vec::Zero(g.d);
  double position = 0.0;
  for (std::size_t i = 0; i < N; ++i) position += (xxi.x - g.point(i)).squaredNorm() * std::norm(psi.values[i]);
  position *= cell;
  double momentum = 0.0;
  for (int k = 0; k < g.d; ++k) {
    const std::vector<cplx> Pk = apply_momentum(psi, k);
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double shift = xxi.xi[k] + Ax[k] - (field ? field_eval(*field, g.point(i))[k] : 0.0);
      s += std::norm(shift * psi.values[i] - Pk[i]);
    }
    momentum += s * cell;
  }
  return 0.5 * lambda * lambda * position + 0.5 * weight * momentum;
}

}  // namespace

double magnetic_cost_expectation(const PhaseVec& xxi, const GridState& psi, const FieldSpec& field, double lambda) {
  if (!(lambda > 0.0)) fail(ErrorKind::NonPositiveInput, "lambda must be positive");
  return cost_quadrature(xxi, psi, &field, lambda, 1.0);
}

double cost_expectation(const PhaseVec& xxi, const GridState& psi, const CostParams& params) {
  params.validate();
  return cost_quadrature(xxi, psi, nullptr, params.lambda, params.momentum_weight());
}

double lipschitz_sandwich_factor(double K, double lambda) {
  const double l2 = lambda * lambda;
  return std::max(2.0, (l2 + 2.0 * K * K) / l2);
}

double cstar_objective(double lambda, double T, double L, double K, double Kp, double rho0, int d, double hbar) {
  const TheoremConstants c = constants(L, K, Kp, rho0, lambda);
  return std::sqrt(c.beta) * std::sqrt((lambda * lambda + 1.0) * d * hbar) * 2.0 * std::expm1(c.alpha * T / 2.0) /
         (c.alpha * lambda);
}

CstarResult optimize_cstar(double T, double L, double K, double Kp, double rho0, int d, double hbar) {
  if (!(T > 0.0) || !(hbar > 0.0) || d <= 0) fail(ErrorKind::NonPositiveInput, "T, hbar and d must be positive");
  constexpr int kNodes = 64;
  const double lo = std::log(1e-3), hi = std::log(1e3);
  auto value = [&](double s) { return cstar_objective(std::exp(s), T, L, K, Kp, rho0, d, hbar); };
  std::vector<double> s(kNodes), v(kNodes);
  int best = 0;
  for (int i = 0; i < kNodes; ++i) {
    s[i] = lo + (hi - lo) * i / (kNodes - 1);
    v[i] = value(s[i]);
    if (v[i] < v[best]) best = i;
  }
  CstarResult r;
  r.coarse_min = v[best];
  double a = s[std::max(0, best - 1)];
  double b = s[std::min(kNodes - 1, best + 1)];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), e = a + invphi * (b - a);
  double fc = value(c), fe = value(e);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - invphi * (b - a);
      fc = value(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + invphi * (b - a);
      fe = value(e);
    }
  }
  // Keep the coarse node if refinement did not improve on it (the minimum
  // may sit on the edge of the scanned interval).
  double s_best = s[best], v_best = v[best];
  for (double cand : {a, b, 0.5 * (a + b)}) {
    const double fv = value(cand);
    if (fv < v_best) {
      v_best = fv;
      s_best = cand;
    }
  }
  r.lambda_star = std::exp(s_best);
  r.cstar = v_best;
  return r;
}

}  // namespace mlsl
