#include "mlsl/transport.hpp"

#include "mlsl/errors.hpp"
#include "mlsl/transforms.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mlsl {

double TransportPlan::row_residual() const {
  double r = 0.0;
  for (Eigen::Index i = 0; i < mass.rows(); ++i) r = std::max(r, std::abs(mass.row(i).sum() - row[i]));
  return r;
}

double TransportPlan::col_residual() const {
  double r = 0.0;
  for (Eigen::Index j = 0; j < mass.cols(); ++j) r = std::max(r, std::abs(mass.col(j).sum() - col[j]));
  return r;
}

ExactTransport w2_exact(const AtomicMeasure& a, const AtomicMeasure& b) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "measures of different dimension");
  if (a.size() > 4096 || b.size() > 4096) fail(ErrorKind::SizeExceeded, "exact transport is limited to 4096 atoms per side");
  Eigen::MatrixXd C(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) C(i, j) = squared_distance(a.points[i], b.points[j]);
  }
  return solve_transport(a.weights, b.weights, C);
}

namespace {

// Weighted points with flat coordinates.
struct Cloud {
  int dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  const double* at(std::size_t i) const { return &coords[i * static_cast<std::size_t>(dim)]; }
};

Cloud cloud_of(const AtomicMeasure& m) {
  Cloud c;
  c.dim = 2 * m.dim();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.weights[i] <= 0.0) continue;
    const Eigen::VectorXd f = m.points[i].flat();
    c.coords.insert(c.coords.end(), f.data(), f.data() + f.size());
    c.weights.push_back(m.weights[i]);
  }
  return c;
}

double cost(const Cloud& X, std::size_t i, const Cloud& Y, std::size_t j) {
  const double* x = X.at(i);
  const double* y = Y.at(j);
  double s = 0.0;
  for (int k = 0; k < X.dim; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

double max_cost(const Cloud& X, const Cloud& Y) {
  double m = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t j = 0; j < Y.size(); ++j) m = std::max(m, cost(X, i, Y, j));
  }
  return m;
}

constexpr long kSweepsBeforeNewton = 200;
constexpr std::size_t kNewtonMaxAtoms = 512;

struct Entropic {
  double primal = 0.0;
  long iterations = 0;
  double violation = 0.0;
};

// Log-domain Sinkhorn with epsilon scaling; returns the transport cost of the
// final entropic plan.
Entropic sinkhorn(const Cloud& X, const Cloud& Y, double scale, double eps_final, const SinkhornOptions& opts,
                  long& budget) {
  const std::size_t M = X.size(), N = Y.size();
  std::vector<double> la(M), lb(N), f(M, 0.0), g(N, 0.0), fn(M), buf(std::max(M, N));
  for (std::size_t i = 0; i < M; ++i) la[i] = std::log(X.weights[i]);
  for (std::size_t j = 0; j < N; ++j) lb[j] = std::log(Y.weights[j]);
  Entropic out;
  if (scale <= 0.0) return out;  // every cost is zero

  auto update_f = [&](double eps, std::vector<double>& dst) {
    for (std::size_t i = 0; i < M; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < N; ++j) {
        buf[j] = lb[j] + (g[j] - cost(X, i, Y, j)) / eps;
        mx = std::max(mx, buf[j]);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < N; ++j) s += std::exp(buf[j] - mx);
      dst[i] = -eps * (mx + std::log(s));
    }
  };
  auto g_of = [&](double eps, const std::vector<double>& src, std::vector<double>& dst) {
    for (std::size_t j = 0; j < N; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < M; ++i) {
        buf[i] = la[i] + (src[i] - cost(X, i, Y, j)) / eps;
        mx = std::max(mx, buf[i]);
      }
      double s = 0.0;
      for (std::size_t i = 0; i < M; ++i) s += std::exp(buf[i] - mx);
      dst[j] = -eps * (mx + std::log(s));
    }
  };
  auto update_g = [&](double eps) { g_of(eps, f, g); };
  // Semi-dual value sum a f + sum b g(f); concave in f.
  auto semi_dual = [&](const std::vector<double>& fv, std::vector<double>& gv, double eps) {
    g_of(eps, fv, gv);
    double v = 0.0;
    for (std::size_t i = 0; i < M; ++i) v += X.weights[i] * fv[i];
    for (std::size_t j = 0; j < N; ++j) v += Y.weights[j] * gv[j];
    return v;
  };
  // One damped Newton ascent step on the semi-dual, from f with g = g(f).
  std::vector<double> ftry(M), gtry(N);
  auto newton_step = [&](double eps) {
    const double J0 = semi_dual(f, g, eps);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(M));
    Eigen::MatrixXd P(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        P(i, j) = std::exp(la[i] + lb[j] + (f[i] + g[j] - cost(X, i, Y, j)) / eps);
        r[i] += P(i, j);
      }
    }
    Eigen::VectorXd grad(static_cast<Eigen::Index>(M));
    for (std::size_t i = 0; i < M; ++i) grad[i] = X.weights[i] - r[i];
    Eigen::VectorXd inv_b(static_cast<Eigen::Index>(N));
    for (std::size_t j = 0; j < N; ++j) inv_b[j] = 1.0 / Y.weights[j];
    // Negative Hessian; its null direction (constant shift) is lifted by a
    // small ridge.
    Eigen::MatrixXd H = -(P * inv_b.asDiagonal() * P.transpose());
    H.diagonal() += r;
    H /= eps;
    H.diagonal().array() += 1e-12 * H.diagonal().maxCoeff() + 1e-300;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    const double slope = grad.dot(step);
    if (!(slope > 0.0) || !step.allFinite()) return;
    for (double t = 1.0; t > 1e-10; t *= 0.5) {
      for (std::size_t i = 0; i < M; ++i) ftry[i] = f[i] + t * step[static_cast<Eigen::Index>(i)];
      if (semi_dual(ftry, gtry, eps) >= J0 + 1e-4 * t * slope) {
        f.swap(ftry);
        g.swap(gtry);
        return;
      }
    }
  };

  double eps = opts.eps_start * scale;
  if (eps < eps_final) eps = eps_final;
  update_f(eps, f);
  for (;;) {
    const bool last = eps <= eps_final * (1.0 + 1e-12);
    const double stage_tol = last ? opts.tol : std::max(opts.tol, 1e-6);
    for (long sweep = 0;; ++sweep) {
      if (budget-- <= 0) fail(ErrorKind::NotConverged, "Sinkhorn iteration cap reached");
      ++out.iterations;
      // Plain sweeps contract slowly once eps is far below the cost gaps.
      if (sweep >= kSweepsBeforeNewton && M <= kNewtonMaxAtoms) newton_step(eps);
      update_g(eps);
      update_f(eps, fn);
      // After the g update the columns are exact; rows are off by exp((f - fn)/eps).
      double viol = 0.0;
      for (std::size_t i = 0; i < M; ++i) viol = std::max(viol, X.weights[i] * std::abs(std::expm1((f[i] - fn[i]) / eps)));
      out.violation = viol;
      if (viol <= stage_tol) break;
      f.swap(fn);
    }
    if (last) break;
    eps = std::max(eps * opts.eps_scaling, eps_final);
    f.swap(fn);
  }
  double primal = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      const double c = cost(X, i, Y, j);
      primal += std::exp(la[i] + lb[j] + (f[i] + g[j] - c) / eps) * c;
    }
  }
  out.primal = primal;
  return out;
}

void check_options(const SinkhornOptions& o) {
  if (!(o.tol > 0.0) || !(o.eps_start > 0.0) || !(o.eps_final_factor > 0.0) || !(o.eps_scaling > 0.0 && o.eps_scaling < 1.0) ||
      o.max_iter <= 0 || !(o.truncation >= 0.0 && o.truncation < 1.0)) {
    fail(ErrorKind::InvariantViolation, "invalid Sinkhorn options");
  }
}

}  // namespace

SinkhornReport w2_sinkhorn(const AtomicMeasure& a, const AtomicMeasure& b, const SinkhornOptions& opts) {
  check_options(opts);
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "measures of different dimension");
  const Cloud X = cloud_of(a), Y = cloud_of(b);
  const double scale = max_cost(X, Y);
  const double eps_final = opts.eps_final_factor * scale;
  long budget = opts.max_iter;
  const Entropic ab = sinkhorn(X, Y, scale, eps_final, opts, budget);
  const Entropic aa = sinkhorn(X, X, scale, eps_final, opts, budget);
  const Entropic bb = sinkhorn(Y, Y, scale, eps_final, opts, budget);
  SinkhornReport r;
  r.distance = std::sqrt(std::max(0.0, ab.primal - 0.5 * aa.primal - 0.5 * bb.primal));
  r.eps_final = eps_final;
  r.iterations = ab.iterations + aa.iterations + bb.iterations;
  r.marginal_violation = std::max({ab.violation, aa.violation, bb.violation});
  return r;
}

SinkhornReport w2_cloud_grid(const AtomicMeasure& a, const PhaseGridDensity& rho, const SinkhornOptions& opts) {
  check_options(opts);
  a.validate();
  rho.spec.validate();
  if (2 * a.dim() != static_cast<int>(rho.spec.axes.size())) fail(ErrorKind::DimensionMismatch, "cloud and grid dimensions differ");
  const double mass = rho.mass();
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    fail(ErrorKind::NotNormalized, "phase-grid density has mass " + std::to_string(mass));
  }
  double peak = 0.0;
  for (double v : rho.values) peak = std::max(peak, v);
  Cloud Y;
  Y.dim = static_cast<int>(rho.spec.axes.size());
  const double cell = rho.spec.cell_volume();
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (!(rho.values[i] > opts.truncation * peak)) continue;
    const Eigen::VectorXd z = rho.spec.point(i).flat();
    Y.coords.insert(Y.coords.end(), z.data(), z.data() + z.size());
    Y.weights.push_back(rho.values[i] * cell);
  }
  const double kept = std::accumulate(Y.weights.begin(), Y.weights.end(), 0.0);
  for (double& w : Y.weights) w /= kept;
  const Cloud X = cloud_of(a);
  const double scale = max_cost(X, Y);
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& ax : rho.spec.axes) dmin = std::min(dmin, ax.step);
  const double eps_final = std::min(opts.eps_final_factor * scale, dmin * dmin / 40.0);
  long budget = opts.max_iter;
  const Entropic ab = sinkhorn(X, Y, scale, eps_final, opts, budget);
  const Entropic aa = sinkhorn(X, X, scale, eps_final, opts, budget);
  SinkhornReport r;
  r.distance = std::sqrt(std::max(0.0, ab.primal - 0.5 * aa.primal));
  r.eps_final = eps_final;
  r.iterations = ab.iterations + aa.iterations;
  r.marginal_violation = std::max(ab.violation, aa.violation);
  return r;
}

AtomicMeasure heaviest_cells(const PhaseGridDensity& rho, std::size_t k) {
  rho.spec.validate();
  std::vector<std::size_t> idx(rho.values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](std::size_t x, std::size_t y) {
    return rho.values[x] > rho.values[y] || (rho.values[x] == rho.values[y] && x < y);
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  AtomicMeasure m;
  double total = 0.0;
  for (std::size_t i : idx) total += std::max(0.0, rho.values[i]);
  if (!(total > 0.0)) fail(ErrorKind::NotNormalized, "no positive mass among the heaviest cells");
  for (std::size_t i : idx) {
    m.points.push_back(rho.spec.point(i));
    m.weights.push_back(std::max(0.0, rho.values[i]) / total);
  }
  // Exact renormalization of the last weight absorbs rounding.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < m.weights.size(); ++i) s += m.weights[i];
  m.weights.back() = 1.0 - s;
  return m;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_psd(const Eigen::MatrixXd& S, const char* name) {
  if (S.rows() != S.cols()) fail(ErrorKind::DimensionMismatch, std::string(name) + " is not square");
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) fail(ErrorKind::NotPSD, std::string(name) + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale) fail(ErrorKind::NotPSD, std::string(name) + " has a negative eigenvalue");
}

}  // namespace

double w2_gaussian_oracle(const Eigen::VectorXd& m1, const Eigen::MatrixXd& S1, const Eigen::VectorXd& m2,
                          const Eigen::MatrixXd& S2) {
  if (m1.size() != m2.size() || S1.rows() != m1.size() || S2.rows() != m1.size()) {
    fail(ErrorKind::DimensionMismatch, "Gaussian parameters of inconsistent size");
  }
  check_psd(S1, "S1");
  check_psd(S2, "S2");
  const Eigen::MatrixXd r1 = psd_sqrt(S1);
  const Eigen::MatrixXd cross = psd_sqrt(r1 * S2 * r1);
  const double tr = (S1 + S2 - 2.0 * cross).trace();
  return std::sqrt(std::max(0.0, (m1 - m2).squaredNorm() + tr));
}

}  // namespace mlsl
