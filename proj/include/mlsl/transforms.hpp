#pragma once

#include "mlsl/quantum.hpp"

#include <iosfwd>
#include <vector>

namespace mlsl {

struct PhaseAxis {
  double lo = 0.0;
  double step = 1.0;
  int n = 1;

  double coord(int i) const { return lo + i * step; }
  double hi() const { return coord(n - 1); }
};

/// Uniform grid on phase space, axes ordered x_1..x_d, xi_1..xi_d, row-major
/// with the first axis slowest.  Only d = 2 is supported.
struct PhaseGridSpec {
  std::vector<PhaseAxis> axes;

  int dim() const { return static_cast<int>(axes.size() / 2); }
  std::size_t size() const;
  double cell_volume() const;
  PhaseVec point(std::size_t idx) const;
  void validate() const;
};

struct PhaseGridOptions {
  double spacing = 0.0;       // <= 0: sqrt(hbar) / 1.5
  double pad_sigmas = 3.0;    // padding beyond the numerical support, in sqrt(hbar)
  bool odd_counts = false;    // odd node counts (used for spectral interpolation)
  std::vector<PhaseVec> include;  // extra points the grid must cover
};

/// Grid covering the phase-space support of R.  Position nodes lie on the
/// half-spacing lattice of R's position grid so the Wigner kernel needs no
/// interpolation; the position extent is clipped to the box.
PhaseGridSpec covering_phase_grid(const DensityMixture& r, const PhaseGridOptions& opts = {});

struct PhaseGridDensity {
  PhaseGridSpec spec;
  double hbar = 0.0;
  std::vector<double> values;
  double imag_residue = 0.0;  // largest discarded imaginary part (Wigner only)

  double mass() const;
  double min_value() const;
  /// Integral of |z - center|^2 against the density.
  double second_moment_about(const PhaseVec& center) const;
};

/// W(x, xi) = (pi hbar)^{-d} int psi(x+s) conj(psi(x-s)) exp(-2i xi.s / hbar) ds
/// summed over the mixture.  Throws ResolutionInsufficient when the position
/// grid cannot resolve the requested momenta.
PhaseGridDensity wigner(const DensityMixture& r, const PhaseGridSpec& spec);

/// (2 pi hbar)^{-d} <z|R|z> on every node.
PhaseGridDensity husimi_overlap(const DensityMixture& r, const PhaseGridSpec& spec);

/// Gaussian convolution with variance hbar/2 per phase coordinate, applied
/// as the Fourier multiplier exp(-hbar k^2 / 4) on the periodic grid.
PhaseGridDensity husimi_smooth(const PhaseGridDensity& w, double hbar);

/// Cell-weighted L1 distance of two densities on the same grid.
double l1_distance(const PhaseGridDensity& a, const PhaseGridDensity& b);

/// L1 distance between the Wigner transform of the coherent-state mixture of
/// mu and sum_j w_j (pi hbar)^{-d} exp(-|z - z_j|^2 / hbar).
double toeplitz_wigner_check(const AtomicMeasure& mu, const Grid& grid, const PhaseGridSpec& spec);

struct PairingResult {
  double lhs = 0.0;  // (2 pi hbar)^{-d} sum_a w_a <z_a|R|z_a> with grid coherent states
  double rhs = 0.0;  // sum_a w_a Husimi(z_a), Husimi interpolated from a phase grid
};

PairingResult trace_pairing(const AtomicMeasure& mu, const DensityMixture& r);

/// Trigonometric interpolation of the grid values at z (periodic extension).
double spectral_interpolate(const PhaseGridDensity& rho, const PhaseVec& z);

/// CSV with header x1,x2,xi1,xi2,value.
void write_phase_csv(std::ostream& os, const PhaseGridDensity& rho);

/// Binary dump: "MLPG", u32 d, two reserved u32, f64 hbar, f64 cell volume,
/// then (f64 lo, f64 step, u64 n) per axis and the f64 values.
void write_phase_grid(std::ostream& os, const PhaseGridDensity& rho);
PhaseGridDensity read_phase_grid(std::istream& is);

}  // namespace mlsl
