#include "mlsl/quantum.hpp"

#include "mlsl/errors.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

namespace mlsl {

namespace {

constexpr cplx I{0.0, 1.0};
std::atomic<bool> g_flip_field{false};

std::vector<int> dims_of(const Grid& g) { return std::vector<int>(static_cast<std::size_t>(g.d), g.n); }

// Multi-index of a flat row-major index.
void unflatten(std::size_t idx, const Grid& g, int* out) {
  for (int k = g.d - 1; k >= 0; --k) {
    out[k] = static_cast<int>(idx % static_cast<std::size_t>(g.n));
    idx /= static_cast<std::size_t>(g.n);
  }
}

double sq(double v) { return v * v; }

void check_same_grid(const DensityMixture& r) {
  if (r.states.empty()) fail(ErrorKind::InvariantViolation, "empty mixture");
  if (r.weights.size() != r.states.size()) fail(ErrorKind::InvariantViolation, "weights and states differ in count");
  for (const auto& s : r.states) {
    if (!(s.grid == r.states.front().grid)) fail(ErrorKind::DimensionMismatch, "mixture components on different grids");
  }
}

}  // namespace

void Grid::validate() const {
  if (d != 2 && d != 3) fail(ErrorKind::DimensionMismatch, "grid dimension must be 2 or 3");
  if (n < 16 || !std::has_single_bit(static_cast<unsigned>(n))) {
    fail(ErrorKind::InvariantViolation, "grid.n must be a power of two >= 16");
  }
  if (!(halfwidth > 0.0)) fail(ErrorKind::InvariantViolation, "grid.halfwidth must be positive");
  if (!(hbar > 0.0)) fail(ErrorKind::InvariantViolation, "hbar must be positive");
}

double Grid::wavenumber(int j) const {
  const double base = std::numbers::pi / halfwidth;
  return base * (j < n / 2 ? j : j - n);
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(n);
  return s;
}

double Grid::cell_volume() const { return std::pow(spacing(), d); }

Vec Grid::point(std::size_t idx) const {
  int mi[3];
  unflatten(idx, *this, mi);
  Vec y(d);
  for (int k = 0; k < d; ++k) y[k] = coord(mi[k]);
  return y;
}

double GridState::norm() const {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}

void GridState::normalize() {
  const double nrm = norm();
  if (!(nrm > 0.0) || !std::isfinite(nrm)) fail(ErrorKind::NonFiniteState, "cannot normalize a zero or non-finite state");
  for (auto& v : values) v /= nrm;
}

cplx inner_product(const GridState& a, const GridState& b) {
  if (!(a.grid == b.grid)) fail(ErrorKind::DimensionMismatch, "states on different grids");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s * a.grid.cell_volume();
}

GridState coherent_state(const PhaseVec& z, const Grid& grid) {
  grid.validate();
  z.validate();
  if (z.dim() != grid.d) fail(ErrorKind::DimensionMismatch, "phase point and grid dimensions differ");
  const double hbar = grid.hbar;
  if (!(z.x.norm() + 4.0 * std::sqrt(hbar) < grid.halfwidth)) {
    fail(ErrorKind::OutOfBox, "coherent state centre too close to the box edge");
  }
  GridState psi{grid, std::vector<cplx>(grid.size())};
  // Separable factors per axis.
  std::vector<std::vector<cplx>> axis(static_cast<std::size_t>(grid.d), std::vector<cplx>(grid.n));
  const double pref = std::pow(std::numbers::pi * hbar, -0.25);
  for (int k = 0; k < grid.d; ++k) {
    for (int j = 0; j < grid.n; ++j) {
      const double y = grid.coord(j);
      axis[k][j] = pref * std::exp(-sq(y - z.x[k]) / (2.0 * hbar)) * std::exp(I * (z.xi[k] * y / hbar));
    }
  }
  int mi[3];
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    unflatten(i, grid, mi);
    cplx v = 1.0;
    for (int k = 0; k < grid.d; ++k) v *= axis[k][mi[k]];
    psi.values[i] = v;
  }
  psi.normalize();
  return psi;
}

cplx coherent_overlap(const PhaseVec& z1, const PhaseVec& z2, double hbar) {
  if (z1.dim() != z2.dim()) fail(ErrorKind::DimensionMismatch, "phase points of different dimension");
  const Vec dq = z2.x - z1.x;
  const Vec dp = z2.xi - z1.xi;
  const Vec mid = 0.5 * (z1.x + z2.x);
  const double re = -(dq.squaredNorm() + dp.squaredNorm()) / (4.0 * hbar);
  const double im = dp.dot(mid) / hbar;
  return std::exp(cplx(re, im));
}

DensityMixture toeplitz_mixture(const AtomicMeasure& mu, const Grid& grid) {
  mu.validate();
  DensityMixture r;
  r.weights = mu.weights;
  r.states.reserve(mu.size());
  for (const auto& z : mu.points) r.states.push_back(coherent_state(z, grid));
  return r;
}

double purity(const DensityMixture& r) {
  check_same_grid(r);
  double p = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      p += r.weights[i] * r.weights[j] * std::norm(inner_product(r.states[i], r.states[j]));
    }
  }
  return p;
}

namespace {

// One Strang step of fixed length, with all multipliers precomputed.
class Stepper {
 public:
  Stepper(const Grid& grid, const FieldSpec& field, const PotentialSpec& potential, double dt)
      : grid_(grid), dims_(dims_of(grid)), dt_(dt) {
    field.check_dimension(grid.d);
    const double sign = testing_hooks::flip_field_sign() ? -1.0 : 1.0;
    const std::size_t N = grid.size();
    const double hbar = grid.hbar;
    rotation_ = field.kind == FieldSpec::Kind::EpsilonRotation;
    magnetic_ = field.kind == FieldSpec::Kind::Builtin;

    k_.resize(static_cast<std::size_t>(grid.d));
    for (int a = 0; a < grid.d; ++a) k_[a] = spectral::wavenumbers(grid.n, 2.0 * grid.halfwidth);

    half_mult_.resize(N);
    kinetic_.resize(N);
    if (magnetic_) {
      A_.assign(static_cast<std::size_t>(grid.d), std::vector<double>(N));
      kflat_.assign(static_cast<std::size_t>(grid.d), std::vector<double>(N));
    }
    int mi[3];
    const double omega2 = rotation_ ? 1.0 + 1.0 / sq(field.eps) : 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      unflatten(i, grid, mi);
      Vec y(grid.d);
      double k2 = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        y[a] = grid.coord(mi[a]);
        k2 += sq(k_[a][mi[a]]);
      }
      double m = 0.5 * omega2 * y.squaredNorm() + potential_eval(potential, y);
      if (magnetic_) {
        const Vec A = sign * field_eval(field, y);
        m += 0.5 * A.squaredNorm();
        for (int a = 0; a < grid.d; ++a) {
          A_[a][i] = A[a];
          kflat_[a][i] = k_[a][mi[a]];
        }
      }
      half_mult_[i] = std::exp(-I * (0.5 * dt * m / hbar));
      kinetic_[i] = std::exp(-I * (0.5 * dt * hbar * k2));
    }
    if (rotation_) {
      const double phi = -sign * dt / (2.0 * field.eps);
      shear_a_ = shear_table(0, -std::tan(0.5 * phi));
      shear_b_ = shear_table(1, std::sin(phi));
      shear_a2_ = shear_table(0, -std::tan(phi));
      shear_b2_ = shear_table(1, std::sin(2.0 * phi));
    }
    if (magnetic_) {
      double amax = 0.0;
      for (int a = 0; a < grid.d; ++a) {
        double m = 0.0;
        for (double v : A_[a]) m = std::max(m, std::abs(v));
        amax += m;
      }
      const double kmax = std::numbers::pi / grid.spacing();
      const double ratio = (dt / 4.0) * kmax * amax;
      substeps_ = static_cast<int>(std::floor(ratio / 0.5)) + 1;
    }
  }

  void step(std::vector<cplx>& psi) const {
    if (rotation_) rotate(psi, shear_a_, shear_b_);
    core(psi);
    if (rotation_) rotate(psi, shear_a_, shear_b_);
  }

  // `count` steps; the closing half-rotation of one step and the opening
  // half-rotation of the next are applied as one rotation.
  template <class Check>
  void run(std::vector<cplx>& psi, long count, Check&& check) const {
    if (!rotation_) {
      for (long s = 0; s < count; ++s) {
        core(psi);
        check(s);
      }
      return;
    }
    rotate(psi, shear_a_, shear_b_);
    for (long s = 0; s < count; ++s) {
      core(psi);
      if (s + 1 < count) {
        rotate(psi, shear_a2_, shear_b2_);
      } else {
        rotate(psi, shear_a_, shear_b_);
      }
      check(s);
    }
  }

 private:
  void core(std::vector<cplx>& psi) const {
    multiply(psi, half_mult_);
    if (magnetic_) cross_term(psi);
    kinetic(psi);
    if (magnetic_) cross_term(psi);
    multiply(psi, half_mult_);
  }

  static void multiply(std::vector<cplx>& psi, const std::vector<cplx>& m) {
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= m[i];
  }

  void kinetic(std::vector<cplx>& psi) const {
    spectral::fft(psi.data(), dims_, -1);
    const double inv = 1.0 / static_cast<double>(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= kinetic_[i] * inv;
    spectral::fft(psi.data(), dims_, +1);
  }

  // out = (C / hbar) in, C = 1/2 (A.P + P.A).
  void apply_cross(const std::vector<cplx>& in, std::vector<cplx>& out, std::vector<cplx>& work,
                   std::vector<cplx>& acc) const {
    const std::size_t N = in.size();
    const double inv = 1.0 / static_cast<double>(N);
    std::fill(out.begin(), out.end(), cplx{});
    std::fill(acc.begin(), acc.end(), cplx{});
    std::vector<cplx> hat(in);
    spectral::fft(hat.data(), dims_, -1);
    for (int a = 0; a < grid_.d; ++a) {
      for (std::size_t i = 0; i < N; ++i) work[i] = hat[i] * (kflat_[a][i] * inv);
      spectral::fft(work.data(), dims_, +1);
      for (std::size_t i = 0; i < N; ++i) out[i] += 0.5 * A_[a][i] * work[i];
      for (std::size_t i = 0; i < N; ++i) work[i] = A_[a][i] * in[i];
      spectral::fft(work.data(), dims_, -1);
      for (std::size_t i = 0; i < N; ++i) acc[i] += work[i] * (kflat_[a][i] * inv);
    }
    spectral::fft(acc.data(), dims_, +1);
    for (std::size_t i = 0; i < N; ++i) out[i] += 0.5 * acc[i];
  }

  // exp(-i (dt/2) C / hbar) by Cayley substeps solved with a fixed point.
  void cross_term(std::vector<cplx>& psi) const {
    const std::size_t N = psi.size();
    const double tau = 0.25 * dt_ / substeps_;
    std::vector<cplx> cpsi(N), rhs(N), phi(N), next(N), work(N), acc(N);
    for (int s = 0; s < substeps_; ++s) {
      apply_cross(psi, cpsi, work, acc);
      for (std::size_t i = 0; i < N; ++i) rhs[i] = psi[i] - I * tau * cpsi[i];
      phi = rhs;
      bool converged = false;
      for (int it = 0; it < 200; ++it) {
        apply_cross(phi, cpsi, work, acc);
        double diff = 0.0, size = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          next[i] = rhs[i] - I * tau * cpsi[i];
          diff += std::norm(next[i] - phi[i]);
          size += std::norm(next[i]);
        }
        phi.swap(next);
        if (diff <= 1e-28 * size) {
          converged = true;
          break;
        }
      }
      if (!converged) fail(ErrorKind::NotConverged, "Crank-Nicolson cross-term iteration did not converge");
      psi.swap(phi);
    }
  }

  // psi(r) <- psi(R_{-theta} r) by three Fourier shears.
  void rotate(std::vector<cplx>& psi, const std::vector<cplx>& a, const std::vector<cplx>& b) const {
    shear(psi, 0, a);
    shear(psi, 1, b);
    shear(psi, 0, a);
  }

  // axis 0: psi(x, y) <- psi(x + c y, y); axis 1: psi(x, y) <- psi(x, y + c x).
  // The table holds exp(i k c other) / n in mixed (k along axis, y across) order.
  std::vector<cplx> shear_table(int axis, double c) const {
    const int n = grid_.n;
    std::vector<cplx> t(static_cast<std::size_t>(n) * n);
    for (int i0 = 0; i0 < n; ++i0) {
      for (int i1 = 0; i1 < n; ++i1) {
        const double k = axis == 0 ? k_[0][i0] : k_[1][i1];
        const double other = axis == 0 ? grid_.coord(i1) : grid_.coord(i0);
        t[static_cast<std::size_t>(i0) * n + i1] = std::exp(I * (k * c * other)) / static_cast<double>(n);
      }
    }
    return t;
  }

  void shear(std::vector<cplx>& psi, int axis, const std::vector<cplx>& table) const {
    spectral::fft_axis(psi.data(), dims_, axis, -1);
    multiply(psi, table);
    spectral::fft_axis(psi.data(), dims_, axis, +1);
  }

  Grid grid_;
  std::vector<int> dims_;
  double dt_;
  bool rotation_ = false;
  bool magnetic_ = false;
  int substeps_ = 1;
  std::vector<std::vector<double>> k_;
  std::vector<std::vector<double>> A_;
  std::vector<std::vector<double>> kflat_;
  std::vector<cplx> half_mult_;
  std::vector<cplx> kinetic_;
  std::vector<cplx> shear_a_;
  std::vector<cplx> shear_b_;
  std::vector<cplx> shear_a2_;  // double angle, for fused steps
  std::vector<cplx> shear_b2_;
};

void check_state(const GridState& psi) {
  for (const auto& v : psi.values) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) fail(ErrorKind::NonFiniteState, "non-finite wavefunction");
  }
  const double leak = boundary_mass(psi);
  if (leak > 1e-6) fail(ErrorKind::MassLeak, "boundary mass " + std::to_string(leak) + " exceeds 1e-6");
}

}  // namespace

GridState propagate_state(const GridState& psi, double t, const FieldSpec& field, const PotentialSpec& potential,
                          double dt) {
  psi.grid.validate();
  if (psi.values.size() != psi.grid.size()) fail(ErrorKind::DimensionMismatch, "state size does not match grid");
  if (!(t >= 0.0) || !std::isfinite(t)) fail(ErrorKind::InvariantViolation, "propagation time must be >= 0");
  if (!(dt > 0.0)) fail(ErrorKind::InvariantViolation, "dt must be positive");
  GridState out = psi;
  if (t == 0.0) return out;
  const long full = static_cast<long>(std::floor(t / dt + 1e-9));
  const double rest = t - static_cast<double>(full) * dt;
  if (full > 0) {
    const Stepper stepper(psi.grid, field, potential, dt);
    stepper.run(out.values, full, [&](long s) {
      if ((s + 1) % 128 == 0) check_state(out);
    });
  }
  if (rest > 1e-12 * dt) {
    const Stepper last(psi.grid, field, potential, rest);
    last.step(out.values);
  }
  check_state(out);
  return out;
}

DensityMixture propagate_mixture(const DensityMixture& r, double t, const FieldSpec& field,
                                 const PotentialSpec& potential, double dt, int threads) {
  check_same_grid(r);
  DensityMixture out;
  out.weights = r.weights;
  out.states.resize(r.size());
  detail::parallel_for(r.size(), threads, [&](std::size_t j) {
    out.states[j] = propagate_state(r.states[j], t, field, potential, dt);
  });
  return out;
}

double expectation_multiplication(const DensityMixture& r, const std::function<double(const Vec&)>& g) {
  check_same_grid(r);
  const Grid& grid = r.grid();
  std::vector<double> gv(grid.size());
  for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = g(grid.point(i));
  double total = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    double s = 0.0;
    const auto& v = r.states[j].values;
    for (std::size_t i = 0; i < v.size(); ++i) s += gv[i] * std::norm(v[i]);
    total += r.weights[j] * s * grid.cell_volume();
  }
  return total;
}

namespace {

// <psi| -hbar^2 Laplacian |psi>
double kinetic_moment(const GridState& psi) {
  const Grid& g = psi.grid;
  std::vector<cplx> hat(psi.values);
  spectral::fft(hat.data(), dims_of(g), -1);
  int mi[3];
  double s = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i) {
    unflatten(i, g, mi);
    double k2 = 0.0;
    for (int a = 0; a < g.d; ++a) k2 += sq(g.wavenumber(mi[a]));
    s += k2 * std::norm(hat[i]);
  }
  return sq(g.hbar) * s * g.cell_volume() / static_cast<double>(hat.size());
}

double position_moment(const GridState& psi) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i) s += psi.grid.point(i).squaredNorm() * std::norm(psi.values[i]);
  return s * psi.grid.cell_volume();
}

}  // namespace

double quantum_second_moments(const DensityMixture& r) {
  check_same_grid(r);
  double total = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    total += r.weights[j] * (kinetic_moment(r.states[j]) + position_moment(r.states[j]));
  }
  return total;
}

std::vector<cplx> apply_momentum(const GridState& psi, int axis) {
  const Grid& g = psi.grid;
  if (axis < 0 || axis >= g.d) fail(ErrorKind::DimensionMismatch, "momentum axis out of range");
  const auto dims = dims_of(g);
  std::vector<cplx> out(psi.values);
  spectral::fft(out.data(), dims, -1);
  int mi[3];
  const double scale = g.hbar / static_cast<double>(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    unflatten(i, g, mi);
    out[i] *= g.wavenumber(mi[axis]) * scale;
  }
  spectral::fft(out.data(), dims, +1);
  return out;
}

double quantum_kinetic_magnetic(const DensityMixture& r, const FieldSpec& field) {
  check_same_grid(r);
  const Grid& g = r.grid();
  field.check_dimension(g.d);
  std::vector<Vec> A(g.size());
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = field_eval(field, g.point(i));
  double total = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const GridState& psi = r.states[j];
    double kin = 0.0;
    for (int a = 0; a < g.d; ++a) {
      const auto p = apply_momentum(psi, a);
      for (std::size_t i = 0; i < p.size(); ++i) kin += std::norm(p[i] + A[i][a] * psi.values[i]);
    }
    total += r.weights[j] * (0.5 * kin * g.cell_volume() + 0.5 * position_moment(psi));
  }
  return total;
}

double quantum_energy(const DensityMixture& r, const FieldSpec& field, const PotentialSpec& potential) {
  return quantum_kinetic_magnetic(r, field) +
         expectation_multiplication(r, [&](const Vec& y) { return potential_eval(potential, y); });
}

PhaseVec phase_mean(const GridState& psi) {
  const Grid& g = psi.grid;
  Vec q = Vec::Zero(g.d), p = Vec::Zero(g.d);
  for (std::size_t i = 0; i < psi.values.size(); ++i) q += std::norm(psi.values[i]) * g.point(i);
  q *= g.cell_volume();
  std::vector<cplx> hat(psi.values);
  spectral::fft(hat.data(), dims_of(g), -1);
  int mi[3];
  for (std::size_t i = 0; i < hat.size(); ++i) {
    unflatten(i, g, mi);
    const double w = std::norm(hat[i]);
    for (int a = 0; a < g.d; ++a) p[a] += w * g.wavenumber(mi[a]);
  }
  p *= g.hbar * g.cell_volume() / static_cast<double>(hat.size());
  return PhaseVec(q, p);
}

double boundary_mass(const GridState& psi) {
  const Grid& g = psi.grid;
  const double edge = 0.95 * g.halfwidth;
  int mi[3];
  double s = 0.0;
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    unflatten(i, g, mi);
    bool outer = false;
    for (int a = 0; a < g.d; ++a) outer = outer || std::abs(g.coord(mi[a])) > edge;
    if (outer) s += std::norm(psi.values[i]);
  }
  return s * g.cell_volume();
}

double spectral_bandwidth(const GridState& psi, double rel_threshold) {
  const Grid& g = psi.grid;
  std::vector<cplx> hat(psi.values);
  spectral::fft(hat.data(), dims_of(g), -1);
  double peak = 0.0;
  for (const auto& v : hat) peak = std::max(peak, std::abs(v));
  int mi[3];
  double kb = 0.0;
  for (std::size_t i = 0; i < hat.size(); ++i) {
    if (std::abs(hat[i]) <= rel_threshold * peak) continue;
    unflatten(i, g, mi);
    for (int a = 0; a < g.d; ++a) kb = std::max(kb, std::abs(g.wavenumber(mi[a])));
  }
  return kb;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) fail(ErrorKind::IoFailure, "truncated grid dump");
  return v;
}

}  // namespace

void write_grid_state(std::ostream& os, const GridState& psi) {
  os.write("MLQG", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(psi.grid.d));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(psi.grid.n));
  put<std::uint32_t>(os, 0u);
  put<double>(os, psi.grid.halfwidth);
  put<double>(os, psi.grid.hbar);
  for (const auto& v : psi.values) {
    put<double>(os, v.real());
    put<double>(os, v.imag());
  }
  if (!os) fail(ErrorKind::IoFailure, "failed writing grid dump");
}

GridState read_grid_state(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MLQG", 4) != 0) fail(ErrorKind::MalformedDocument, "not an MLQG dump");
  GridState psi;
  psi.grid.d = static_cast<int>(get<std::uint32_t>(is));
  psi.grid.n = static_cast<int>(get<std::uint32_t>(is));
  get<std::uint32_t>(is);
  psi.grid.halfwidth = get<double>(is);
  psi.grid.hbar = get<double>(is);
  psi.grid.validate();
  psi.values.resize(psi.grid.size());
  for (auto& v : psi.values) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    v = cplx(re, im);
  }
  return psi;
}

namespace testing_hooks {
void set_flip_field_sign(bool flip) { g_flip_field = flip; }
bool flip_field_sign() { return g_flip_field; }
}  // namespace testing_hooks

}  // namespace mlsl
