#include "mlsl/operator_algebra.hpp"

#include "mlsl/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mlsl {

void OperatorTuple::validate() const {
  if (dim != static_cast<int>(mats.size())) fail(ErrorKind::DimensionMismatch, "tuple size differs from dim");
  for (const auto& m : mats) {
    if (m.rows() != m.cols()) fail(ErrorKind::DimensionMismatch, "operator is not square");
    if (m.rows() != mats.front().rows()) fail(ErrorKind::DimensionMismatch, "operators of different sizes");
  }
}

OperatorTuple OperatorTuple::random(int d, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  OperatorTuple t;
  t.dim = d;
  for (int k = 0; k < d; ++k) {
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double re = u(rng);
        m(i, j) = cplx(re, u(rng));
      }
    }
    t.mats.push_back(std::move(m));
  }
  return t;
}

namespace {

Eigen::MatrixXcd anti(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return a * b + b * a; }

}  // namespace

double anticommutator_cancellation_residual(const OperatorTuple& D) {
  D.validate();
  if (D.mats.empty()) return 0.0;
  const Eigen::Index n = D.mats.front().rows();
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
  double scale = 0.0;
  for (const auto& m : D.mats) {
    scale = std::max(scale, Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0));
  }
  for (int k = 0; k < D.dim; ++k) {
    for (int l = 0; l < D.dim; ++l) {
      const Eigen::MatrixXcd comm = D.mats[k] * D.mats[l] - D.mats[l] * D.mats[k];
      sum += anti(D.mats[k], anti(D.mats[l], comm));
    }
  }
  if (scale == 0.0) return 0.0;
  return sum.norm() / (scale * scale * scale);
}

namespace {

std::vector<cplx> apply_pi(const GridState& psi, const FieldSpec& field, int k) {
  std::vector<cplx> out = apply_momentum(psi, k);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += field_eval(field, psi.grid.point(i))[k] * psi.values[i];
  return out;
}

GridState with_values(const Grid& g, std::vector<cplx> v) {
  GridState s;
  s.grid = g;
  s.values = std::move(v);
  return s;
}

// Superposition of three coherent states centred well inside the box.
GridState smooth_state(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double reach = std::max(0.0, 0.5 * g.halfwidth - 4.0 * std::sqrt(g.hbar));
  std::vector<cplx> v(g.size(), cplx(0.0, 0.0));
  for (int c = 0; c < 3; ++c) {
    Vec q(g.d), p(g.d);
    for (int a = 0; a < g.d; ++a) {
      q[a] = reach * u(rng);
      p[a] = u(rng);
    }
    const cplx amp(u(rng), u(rng));
    const GridState z = coherent_state(PhaseVec(q, p), g);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += amp * z.values[i];
  }
  GridState s = with_values(g, std::move(v));
  s.normalize();
  return s;
}

}  // namespace

double discrete_commutator_check(const FieldSpec& field, const Grid& grid, int k, int l, int samples,
                                 std::uint64_t seed) {
  grid.validate();
  field.check_dimension(grid.d);
  if (k < 0 || l < 0 || k >= grid.d || l >= grid.d) fail(ErrorKind::DimensionMismatch, "axis index out of range");
  std::mt19937_64 rng(seed);
  const cplx ih(0.0, grid.hbar);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const GridState psi = smooth_state(grid, rng);
    const std::vector<cplx> kl = apply_pi(with_values(grid, apply_pi(psi, field, l)), field, k);
    const std::vector<cplx> lk = apply_pi(with_values(grid, apply_pi(psi, field, k)), field, l);
    double err = 0.0;
    for (std::size_t i = 0; i < psi.values.size(); ++i) {
      const Mat J = field_jacobian(field, grid.point(i));
      const cplx expected = ih * (J(k, l) - J(l, k)) * psi.values[i];
      err += std::norm(kl[i] - lk[i] - expected);
    }
    worst = std::max(worst, std::sqrt(err * grid.cell_volume()));
  }
  return worst;
}

}  // namespace mlsl
