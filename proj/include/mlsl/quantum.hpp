#pragma once

#include "mlsl/model.hpp"

#include <complex>
#include <functional>
#include <iosfwd>
#include <vector>

namespace mlsl {

using cplx = std::complex<double>;

/// Uniform periodic box [-halfwidth, halfwidth)^d with n points per axis.
/// Storage is row-major with axis 0 slowest.
struct Grid {
  int d = 2;
  int n = 128;
  double halfwidth = 4.0;
  double hbar = 0.1;

  void validate() const;
  double spacing() const { return 2.0 * halfwidth / n; }
  double coord(int j) const { return -halfwidth + j * spacing(); }
  /// Angular wavenumber of FFT bin j (standard ordering, Nyquist negative).
  double wavenumber(int j) const;
  std::size_t size() const;
  double cell_volume() const;
  /// Position of flat index `idx`.
  Vec point(std::size_t idx) const;
  bool operator==(const Grid& o) const = default;
};

struct GridState {
  Grid grid;
  std::vector<cplx> values;

  double norm() const;
  void normalize();
};

/// R = sum_j w_j |psi_j><psi_j| with all psi_j on one grid.
struct DensityMixture {
  std::vector<double> weights;
  std::vector<GridState> states;

  const Grid& grid() const { return states.front().grid; }
  std::size_t size() const { return states.size(); }
};

cplx inner_product(const GridState& a, const GridState& b);

/// Samples (pi hbar)^{-d/4} exp(-|y-q|^2 / 2hbar) exp(i p.y / hbar), then
/// renormalizes on the grid.  Throws OutOfBox unless |q| + 4 sqrt(hbar) <
/// halfwidth.
GridState coherent_state(const PhaseVec& z, const Grid& grid);

/// Exact analytic overlap <z1|z2> of two coherent states at scale hbar.
cplx coherent_overlap(const PhaseVec& z1, const PhaseVec& z2, double hbar);

DensityMixture toeplitz_mixture(const AtomicMeasure& mu, const Grid& grid);

double purity(const DensityMixture& r);

/// e^{-itH/hbar} psi with H = 1/2|-i hbar grad + A|^2 + 1/2|y|^2 + V.
/// Second-order Strang splitting; the A.P cross term is a Crank-Nicolson
/// substep, except for the epsilon-rotation field whose rotation generator
/// is applied exactly by Fourier shears.  The last step may be partial.
GridState propagate_state(const GridState& psi, double t, const FieldSpec& field,
                          const PotentialSpec& potential, double dt);

DensityMixture propagate_mixture(const DensityMixture& r, double t, const FieldSpec& field,
                                 const PotentialSpec& potential, double dt, int threads = 1);

/// sum_j w_j h^d sum_y g(y) |psi_j(y)|^2
double expectation_multiplication(const DensityMixture& r, const std::function<double(const Vec&)>& g);

/// sum_j w_j <psi_j| -hbar^2 Laplacian + |y|^2 |psi_j>
double quantum_second_moments(const DensityMixture& r);

/// sum_j w_j <psi_j| 1/2|-i hbar grad + A|^2 + 1/2|y|^2 |psi_j>
double quantum_kinetic_magnetic(const DensityMixture& r, const FieldSpec& field);

/// sum_j w_j <psi_j| H |psi_j>
double quantum_energy(const DensityMixture& r, const FieldSpec& field, const PotentialSpec& potential);

/// Expected position and canonical momentum (-i hbar grad) of one state.
PhaseVec phase_mean(const GridState& psi);

/// |psi|^2 mass with some coordinate beyond 95% of the half-width.
double boundary_mass(const GridState& psi);

/// Largest |k| (per axis, over all axes) with |psi_hat(k)| above
/// rel_threshold times its maximum.
double spectral_bandwidth(const GridState& psi, double rel_threshold = 1e-14);

/// Applies (-i hbar d/dy_axis) spectrally.
std::vector<cplx> apply_momentum(const GridState& psi, int axis);

/// Binary dump: 32-byte header ("MLQG", u32 d, u32 n, u32 reserved,
/// f64 halfwidth, f64 hbar) then little-endian (re, im) f64 pairs.
void write_grid_state(std::ostream& os, const GridState& psi);
GridState read_grid_state(std::istream& is);

namespace testing_hooks {
/// Test-only fault injection: propagate with -A instead of A.
void set_flip_field_sign(bool flip);
bool flip_field_sign();
}  // namespace testing_hooks

}  // namespace mlsl
