#include "mlsl/transforms.hpp"

#include "mlsl/errors.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

namespace mlsl {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

double sq(double v) { return v * v; }

void require_2d(int d, const char* what) {
  if (d != 2) fail(ErrorKind::DimensionMismatch, std::string(what) + " supports d = 2 only");
}

void require_mixture(const DensityMixture& r) {
  if (r.states.empty() || r.weights.size() != r.states.size()) {
    fail(ErrorKind::InvariantViolation, "mixture must have matching, non-empty weights and states");
  }
  r.grid().validate();
  require_2d(r.grid().d, "phase-space transforms");
}

// Per-axis description of a state's Fourier content.
struct SpectralInfo {
  double center[2] = {0.0, 0.0};     // mean wavenumber
  double halfwidth[2] = {0.0, 0.0};  // max |k - center| above threshold
  double plo[2] = {0.0, 0.0};        // momentum support (hbar k)
  double phi[2] = {0.0, 0.0};
};

SpectralInfo spectral_info(const GridState& psi, double amp_threshold) {
  const Grid& g = psi.grid;
  const int n = g.n;
  std::vector<cplx> hat(psi.values);
  spectral::fft(hat.data(), {n, n}, -1);
  double peak = 0.0, total = 0.0;
  double mean[2] = {0.0, 0.0};
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = 0; i1 < n; ++i1) {
      const double w = std::norm(hat[static_cast<std::size_t>(i0) * n + i1]);
      peak = std::max(peak, w);
      total += w;
      mean[0] += w * g.wavenumber(i0);
      mean[1] += w * g.wavenumber(i1);
    }
  }
  SpectralInfo info;
  info.center[0] = mean[0] / total;
  info.center[1] = mean[1] / total;
  const double thr = sq(amp_threshold) * peak;
  double klo[2] = {1e300, 1e300}, khi[2] = {-1e300, -1e300};
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = 0; i1 < n; ++i1) {
      if (std::norm(hat[static_cast<std::size_t>(i0) * n + i1]) <= thr) continue;
      const double k[2] = {g.wavenumber(i0), g.wavenumber(i1)};
      for (int a = 0; a < 2; ++a) {
        klo[a] = std::min(klo[a], k[a]);
        khi[a] = std::max(khi[a], k[a]);
        info.halfwidth[a] = std::max(info.halfwidth[a], std::abs(k[a] - info.center[a]));
      }
    }
  }
  for (int a = 0; a < 2; ++a) {
    info.plo[a] = g.hbar * klo[a];
    info.phi[a] = g.hbar * khi[a];
  }
  return info;
}

// Index box (inclusive) of samples with |v| > amp_threshold * max |v|.
struct IndexBox {
  int lo[2];
  int hi[2];
};

IndexBox support_box(const std::vector<cplx>& v, int n, double amp_threshold) {
  double peak = 0.0;
  for (const auto& x : v) peak = std::max(peak, std::norm(x));
  const double thr = sq(amp_threshold) * peak;
  IndexBox b{{n, n}, {-1, -1}};
  for (int i0 = 0; i0 < n; ++i0) {
    for (int i1 = 0; i1 < n; ++i1) {
      if (std::norm(v[static_cast<std::size_t>(i0) * n + i1]) <= thr) continue;
      b.lo[0] = std::min(b.lo[0], i0);
      b.hi[0] = std::max(b.hi[0], i0);
      b.lo[1] = std::min(b.lo[1], i1);
      b.hi[1] = std::max(b.hi[1], i1);
    }
  }
  return b;
}

// Spectral x2 upsampling of a 2-D periodic array.
std::vector<cplx> upsample2(const std::vector<cplx>& v, int n) {
  std::vector<cplx> hat(v);
  spectral::fft(hat.data(), {n, n}, -1);
  const int m = 2 * n;
  // Source index -> (target index, factor) pairs; the Nyquist bin is split.
  std::vector<std::vector<std::pair<int, double>>> map(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    if (j < n / 2) {
      map[j].push_back({j, 1.0});
    } else if (j == n / 2) {
      map[j].push_back({n / 2, 0.5});
      map[j].push_back({m - n / 2, 0.5});
    } else {
      map[j].push_back({j + n, 1.0});
    }
  }
  std::vector<cplx> out(static_cast<std::size_t>(m) * m);
  const double inv = 1.0 / (static_cast<double>(n) * n);
  for (int j0 = 0; j0 < n; ++j0) {
    for (int j1 = 0; j1 < n; ++j1) {
      const cplx c = hat[static_cast<std::size_t>(j0) * n + j1] * inv;
      for (auto [t0, f0] : map[j0]) {
        for (auto [t1, f1] : map[j1]) out[static_cast<std::size_t>(t0) * m + t1] += c * (f0 * f1);
      }
    }
  }
  spectral::fft(out.data(), {m, m}, +1);
  return out;
}

std::size_t flat4(const PhaseGridSpec& s, int i0, int i1, int i2, int i3) {
  return ((static_cast<std::size_t>(i0) * s.axes[1].n + i1) * s.axes[2].n + i2) * s.axes[3].n + i3;
}

// Trigonometric interpolant of a phase-grid density.
class Interpolator {
 public:
  explicit Interpolator(const PhaseGridDensity& rho) : spec_(rho.spec) {
    dims_.clear();
    for (const auto& a : spec_.axes) dims_.push_back(a.n);
    coeff_.assign(rho.values.begin(), rho.values.end());
    spectral::fft(coeff_.data(), dims_, -1);
    double inv = 1.0;
    for (int n : dims_) inv /= n;
    for (auto& c : coeff_) c *= inv;
  }

  double operator()(const PhaseVec& z) const {
    const Eigen::VectorXd f = z.flat();
    const int r = static_cast<int>(dims_.size());
    std::vector<std::vector<cplx>> e(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a) {
      const auto& ax = spec_.axes[a];
      const auto k = spectral::wavenumbers(ax.n, ax.n * ax.step);
      e[a].resize(static_cast<std::size_t>(ax.n));
      for (int j = 0; j < ax.n; ++j) e[a][j] = std::exp(I * (k[j] * (f[a] - ax.lo)));
    }
    // Contract the last axis first.
    std::vector<cplx> cur(coeff_);
    std::size_t len = cur.size();
    for (int a = r - 1; a >= 0; --a) {
      const std::size_t n = static_cast<std::size_t>(dims_[a]);
      len /= n;
      std::vector<cplx> next(len);
      for (std::size_t i = 0; i < len; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += cur[i * n + j] * e[a][j];
        next[i] = s;
      }
      cur.swap(next);
    }
    return cur[0].real();
  }

 private:
  PhaseGridSpec spec_;
  std::vector<int> dims_;
  std::vector<cplx> coeff_;
};

}  // namespace

std::size_t PhaseGridSpec::size() const {
  std::size_t s = 1;
  for (const auto& a : axes) s *= static_cast<std::size_t>(a.n);
  return s;
}

double PhaseGridSpec::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes) v *= a.step;
  return v;
}

PhaseVec PhaseGridSpec::point(std::size_t idx) const {
  const int r = static_cast<int>(axes.size());
  std::vector<double> flat(static_cast<std::size_t>(r));
  for (int a = r - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(axes[a].n);
    flat[a] = axes[a].coord(static_cast<int>(idx % n));
    idx /= n;
  }
  return PhaseVec::from_flat(flat);
}

void PhaseGridSpec::validate() const {
  if (axes.size() != 4) fail(ErrorKind::DimensionMismatch, "phase grids support d = 2 only");
  for (const auto& a : axes) {
    if (a.n < 1 || !(a.step > 0.0) || !std::isfinite(a.lo)) fail(ErrorKind::InvariantViolation, "bad phase axis");
  }
}

PhaseGridSpec covering_phase_grid(const DensityMixture& r, const PhaseGridOptions& opts) {
  require_mixture(r);
  const Grid& g = r.grid();
  const double sigma = std::sqrt(g.hbar);
  const double spacing = opts.spacing > 0.0 ? opts.spacing : sigma / 1.5;
  const double pad = opts.pad_sigmas * sigma;
  double xlo[2] = {1e300, 1e300}, xhi[2] = {-1e300, -1e300};
  double plo[2] = {1e300, 1e300}, phi[2] = {-1e300, -1e300};
  for (const auto& psi : r.states) {
    const IndexBox b = support_box(psi.values, g.n, 1e-6);
    const SpectralInfo info = spectral_info(psi, 1e-6);
    for (int a = 0; a < 2; ++a) {
      xlo[a] = std::min(xlo[a], g.coord(b.lo[a]));
      xhi[a] = std::max(xhi[a], g.coord(b.hi[a]));
      plo[a] = std::min(plo[a], info.plo[a]);
      phi[a] = std::max(phi[a], info.phi[a]);
    }
  }
  for (const auto& z : opts.include) {
    for (int a = 0; a < 2; ++a) {
      xlo[a] = std::min(xlo[a], z.x[a]);
      xhi[a] = std::max(xhi[a], z.x[a]);
      plo[a] = std::min(plo[a], z.xi[a]);
      phi[a] = std::max(phi[a], z.xi[a]);
    }
  }
  PhaseGridSpec spec;
  spec.axes.resize(4);
  const double half = 0.5 * g.spacing();
  const double xstep = std::max(1.0, std::round(spacing / half)) * half;
  for (int a = 0; a < 2; ++a) {
    const double lo = std::max(-g.halfwidth, xlo[a] - pad);
    const double hi = std::min(g.halfwidth - half, xhi[a] + pad);
    PhaseAxis ax;
    ax.lo = -g.halfwidth + std::floor((lo + g.halfwidth) / half + 1e-9) * half;
    ax.step = xstep;
    ax.n = static_cast<int>(std::ceil((hi - ax.lo) / xstep - 1e-9)) + 1;
    while (ax.n > 1 && ax.hi() > g.halfwidth - half + 1e-12) --ax.n;
    if (opts.odd_counts && ax.n % 2 == 0) {
      if (ax.lo - xstep >= -g.halfwidth - 1e-12) {
        ax.lo -= xstep;
        ++ax.n;
      } else {
        --ax.n;
      }
    }
    spec.axes[a] = ax;
  }
  for (int a = 0; a < 2; ++a) {
    PhaseAxis ax;
    ax.step = spacing;
    ax.lo = std::floor((plo[a] - pad) / spacing) * spacing;
    ax.n = static_cast<int>(std::ceil((phi[a] + pad - ax.lo) / spacing - 1e-9)) + 1;
    if (opts.odd_counts && ax.n % 2 == 0) ++ax.n;
    spec.axes[2 + a] = ax;
  }
  return spec;
}

double PhaseGridDensity::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * spec.cell_volume();
}

double PhaseGridDensity::min_value() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double PhaseGridDensity::second_moment_about(const PhaseVec& center) const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * squared_distance(spec.point(i), center);
  return s * spec.cell_volume();
}

PhaseGridDensity wigner(const DensityMixture& r, const PhaseGridSpec& spec) {
  require_mixture(r);
  spec.validate();
  const Grid& g = r.grid();
  const double hbar = g.hbar;
  const double half = 0.5 * g.spacing();
  const int m = 2 * g.n;
  const auto& X0 = spec.axes[0];
  const auto& X1 = spec.axes[1];
  const auto& P0 = spec.axes[2];
  const auto& P1 = spec.axes[3];
  // Position nodes as fine-lattice indices.
  std::vector<int> xi_idx[2];
  for (int a = 0; a < 2; ++a) {
    const auto& ax = spec.axes[a];
    for (int i = 0; i < ax.n; ++i) {
      const double u = (ax.coord(i) + g.halfwidth) / half;
      const double ru = std::round(u);
      if (std::abs(u - ru) > 1e-6 || ru < 0 || ru >= m) {
        fail(ErrorKind::ResolutionInsufficient, "Wigner position nodes must lie on the half-spacing lattice");
      }
      xi_idx[a].push_back(static_cast<int>(ru));
    }
  }
  std::vector<cplx> acc(spec.size());
  for (std::size_t j = 0; j < r.size(); ++j) {
    const auto fine = upsample2(r.states[j].values, g.n);
    const IndexBox box = support_box(fine, m, 1e-9);
    const SpectralInfo info = spectral_info(r.states[j], 1e-10);
    // Largest stride (in half-spacings) that keeps the s-sum alias free.
    int stride[2];
    for (int a = 0; a < 2; ++a) {
      const auto& P = spec.axes[2 + a];
      const double fmax = 2.0 * std::max(std::abs(info.center[a] - P.lo / hbar), std::abs(info.center[a] - P.hi() / hbar)) +
                          2.0 * info.halfwidth[a];
      stride[a] = static_cast<int>(std::floor(2.0 * kPi / (fmax * half) - 1e-9));
      if (stride[a] < 1) {
        fail(ErrorKind::ResolutionInsufficient, "position grid too coarse for the requested momentum range");
      }
    }
    const double ds[2] = {stride[0] * half, stride[1] * half};
    // Phase tables e^{-2i xi t ds / hbar}, t in [-tmax, tmax].
    const int tmax[2] = {m / stride[0] + 1, m / stride[1] + 1};
    std::vector<cplx> E[2];
    for (int a = 0; a < 2; ++a) {
      const auto& P = spec.axes[2 + a];
      E[a].resize(static_cast<std::size_t>(2 * tmax[a] + 1) * P.n);
      for (int t = -tmax[a]; t <= tmax[a]; ++t) {
        for (int k = 0; k < P.n; ++k) {
          E[a][static_cast<std::size_t>(t + tmax[a]) * P.n + k] = std::exp(-2.0 * I * (P.coord(k) * t * ds[a] / hbar));
        }
      }
    }
    const double pref = r.weights[j] * ds[0] * ds[1] / sq(kPi * hbar);
    std::vector<cplx> G;
    std::vector<cplx> K;
    for (int i0 = 0; i0 < X0.n; ++i0) {
      const int m0 = xi_idx[0][i0];
      const int r0lo = std::max(box.lo[0] - m0, m0 - box.hi[0]);
      const int r0hi = std::min(box.hi[0] - m0, m0 - box.lo[0]);
      if (r0lo > r0hi) continue;
      const int t0lo = -((-r0lo) / stride[0]);  // ceil(r0lo / stride)
      const int t0hi = r0hi / stride[0];
      for (int i1 = 0; i1 < X1.n; ++i1) {
        const int m1 = xi_idx[1][i1];
        const int r1lo = std::max(box.lo[1] - m1, m1 - box.hi[1]);
        const int r1hi = std::min(box.hi[1] - m1, m1 - box.lo[1]);
        if (r1lo > r1hi) continue;
        const int t1lo = -((-r1lo) / stride[1]);
        const int t1hi = r1hi / stride[1];
        const int n0 = t0hi - t0lo + 1, n1 = t1hi - t1lo + 1;
        if (n0 <= 0 || n1 <= 0) continue;
        K.assign(static_cast<std::size_t>(n0) * n1, 0.0);
        for (int a0 = 0; a0 < n0; ++a0) {
          const int s0 = (t0lo + a0) * stride[0];
          for (int a1 = 0; a1 < n1; ++a1) {
            const int s1 = (t1lo + a1) * stride[1];
            const cplx plus = fine[static_cast<std::size_t>(m0 + s0) * m + (m1 + s1)];
            const cplx minus = fine[static_cast<std::size_t>(m0 - s0) * m + (m1 - s1)];
            K[static_cast<std::size_t>(a0) * n1 + a1] = plus * std::conj(minus);
          }
        }
        // Stage 1: transform along s1.
        G.assign(static_cast<std::size_t>(n0) * P1.n, 0.0);
        for (int a0 = 0; a0 < n0; ++a0) {
          for (int a1 = 0; a1 < n1; ++a1) {
            const cplx kv = K[static_cast<std::size_t>(a0) * n1 + a1];
            const cplx* e = &E[1][static_cast<std::size_t>(t1lo + a1 + tmax[1]) * P1.n];
            cplx* out = &G[static_cast<std::size_t>(a0) * P1.n];
            for (int k1 = 0; k1 < P1.n; ++k1) out[k1] += kv * e[k1];
          }
        }
        // Stage 2: transform along s0.
        for (int k0 = 0; k0 < P0.n; ++k0) {
          cplx* out = &acc[flat4(spec, i0, i1, k0, 0)];
          for (int a0 = 0; a0 < n0; ++a0) {
            const cplx e = E[0][static_cast<std::size_t>(t0lo + a0 + tmax[0]) * P0.n + k0] * pref;
            const cplx* gv = &G[static_cast<std::size_t>(a0) * P1.n];
            for (int k1 = 0; k1 < P1.n; ++k1) out[k1] += e * gv[k1];
          }
        }
      }
    }
  }
  PhaseGridDensity w{spec, hbar, std::vector<double>(acc.size()), 0.0};
  for (std::size_t i = 0; i < acc.size(); ++i) {
    w.values[i] = acc[i].real();
    w.imag_residue = std::max(w.imag_residue, std::abs(acc[i].imag()));
  }
  return w;
}

PhaseGridDensity husimi_overlap(const DensityMixture& r, const PhaseGridSpec& spec) {
  require_mixture(r);
  spec.validate();
  const Grid& g = r.grid();
  const int n = g.n;
  const double hbar = g.hbar;
  const double sigma = std::sqrt(hbar);
  const double h = g.spacing();
  const double window = 8.5 * sigma;
  const auto& Q0 = spec.axes[0];
  const auto& Q1 = spec.axes[1];
  const auto& P0 = spec.axes[2];
  const auto& P1 = spec.axes[3];
  std::vector<double> out(spec.size(), 0.0);
  const double norm_pref = 1.0 / (kPi * hbar);  // |(pi hbar)^{-d/4}|^2 for d = 2
  const double husimi_pref = 1.0 / sq(2.0 * kPi * hbar);

  for (std::size_t j = 0; j < r.size(); ++j) {
    const auto& psi = r.states[j].values;
    const IndexBox box = support_box(psi, n, 1e-13);
    const SpectralInfo info = spectral_info(r.states[j], 1e-10);
    int stride[2];
    for (int a = 0; a < 2; ++a) {
      const auto& P = spec.axes[2 + a];
      const double fmax = std::max(std::abs(info.center[a] - P.lo / hbar), std::abs(info.center[a] - P.hi() / hbar)) +
                          info.halfwidth[a] + 8.0 / sigma;
      stride[a] = static_cast<int>(std::floor(2.0 * kPi / (fmax * h) - 1e-9));
      if (stride[a] < 1) fail(ErrorKind::ResolutionInsufficient, "position grid too coarse for the Husimi momenta");
    }
    // Sampled indices per axis: multiples of the stride inside the support.
    std::vector<int> ys[2];
    for (int a = 0; a < 2; ++a) {
      for (int i = ((box.lo[a] + stride[a] - 1) / stride[a]) * stride[a]; i <= box.hi[a]; i += stride[a]) {
        ys[a].push_back(i);
      }
    }
    const std::size_t R0 = ys[0].size(), R1 = ys[1].size();
    if (R0 == 0 || R1 == 0) continue;
    // Gaussian and phase tables.
    auto gauss = [&](const PhaseAxis& Q, const std::vector<int>& yv) {
      std::vector<double> t(static_cast<std::size_t>(Q.n) * yv.size());
      for (int q = 0; q < Q.n; ++q) {
        for (std::size_t k = 0; k < yv.size(); ++k) {
          const double dy = g.coord(yv[k]) - Q.coord(q);
          t[static_cast<std::size_t>(q) * yv.size() + k] = std::abs(dy) <= window ? std::exp(-dy * dy / (2.0 * hbar)) : 0.0;
        }
      }
      return t;
    };
    auto phase = [&](const PhaseAxis& P, const std::vector<int>& yv) {
      std::vector<cplx> t(static_cast<std::size_t>(P.n) * yv.size());
      for (int p = 0; p < P.n; ++p) {
        for (std::size_t k = 0; k < yv.size(); ++k) {
          t[static_cast<std::size_t>(p) * yv.size() + k] = std::exp(-I * (P.coord(p) * g.coord(yv[k]) / hbar));
        }
      }
      return t;
    };
    const auto G0 = gauss(Q0, ys[0]);
    const auto G1 = gauss(Q1, ys[1]);
    const auto E0 = phase(P0, ys[0]);
    const auto E1 = phase(P1, ys[1]);
    auto window_range = [&](const std::vector<double>& Gt, int q, std::size_t len) {
      std::size_t lo = len, hi = 0;
      for (std::size_t k = 0; k < len; ++k) {
        if (Gt[static_cast<std::size_t>(q) * len + k] != 0.0) {
          lo = std::min(lo, k);
          hi = k + 1;
        }
      }
      return std::pair<std::size_t, std::size_t>{lo, hi};
    };

    // Stage 1: F[r0][q1][p1] = sum_{y1} G1 E1 psi(y0_r0, y1).
    const std::size_t np1 = static_cast<std::size_t>(P1.n), nq1 = static_cast<std::size_t>(Q1.n);
    std::vector<cplx> F(R0 * nq1 * np1);
    std::vector<cplx> tmp(R1);
    for (std::size_t r0 = 0; r0 < R0; ++r0) {
      const cplx* row = &psi[static_cast<std::size_t>(ys[0][r0]) * n];
      for (std::size_t q1 = 0; q1 < nq1; ++q1) {
        const auto [lo, hi] = window_range(G1, static_cast<int>(q1), R1);
        if (lo >= hi) continue;
        for (std::size_t k = lo; k < hi; ++k) tmp[k] = G1[q1 * R1 + k] * row[ys[1][k]];
        cplx* f = &F[(r0 * nq1 + q1) * np1];
        for (std::size_t p1 = 0; p1 < np1; ++p1) {
          const cplx* e = &E1[p1 * R1];
          cplx s = 0.0;
          for (std::size_t k = lo; k < hi; ++k) s += tmp[k] * e[k];
          f[p1] = s;
        }
      }
    }
    // Stage 2: contract y0.
    const double quad = (stride[0] * h) * (stride[1] * h);
    const double scale = r.weights[j] * husimi_pref * norm_pref * quad * quad;
    std::vector<cplx> c(R0);
    std::vector<cplx> acc(nq1 * np1);
    for (int q0 = 0; q0 < Q0.n; ++q0) {
      const auto [lo, hi] = window_range(G0, q0, R0);
      if (lo >= hi) continue;
      for (int p0 = 0; p0 < P0.n; ++p0) {
        for (std::size_t k = lo; k < hi; ++k) c[k] = G0[static_cast<std::size_t>(q0) * R0 + k] * E0[static_cast<std::size_t>(p0) * R0 + k];
        std::fill(acc.begin(), acc.end(), cplx{});
        for (std::size_t k = lo; k < hi; ++k) {
          const cplx ck = c[k];
          const cplx* f = &F[k * nq1 * np1];
          for (std::size_t i = 0; i < nq1 * np1; ++i) acc[i] += ck * f[i];
        }
        for (std::size_t q1 = 0; q1 < nq1; ++q1) {
          double* o = &out[flat4(spec, q0, static_cast<int>(q1), p0, 0)];
          for (std::size_t p1 = 0; p1 < np1; ++p1) o[p1] += scale * std::norm(acc[q1 * np1 + p1]);
        }
      }
    }
  }
  return PhaseGridDensity{spec, hbar, std::move(out), 0.0};
}

PhaseGridDensity husimi_smooth(const PhaseGridDensity& w, double hbar) {
  w.spec.validate();
  if (!(hbar > 0.0)) fail(ErrorKind::NonPositiveInput, "hbar must be positive");
  std::vector<int> dims;
  for (const auto& a : w.spec.axes) dims.push_back(a.n);
  std::vector<cplx> data(w.values.begin(), w.values.end());
  const int r = static_cast<int>(dims.size());
  std::vector<std::size_t> stride(static_cast<std::size_t>(r), 1);
  for (int a = r - 2; a >= 0; --a) stride[a] = stride[a + 1] * static_cast<std::size_t>(dims[a + 1]);
  for (int a = 0; a < r; ++a) {
    const auto& ax = w.spec.axes[a];
    const auto k = spectral::wavenumbers(ax.n, ax.n * ax.step);
    std::vector<double> mult(static_cast<std::size_t>(ax.n));
    for (int j = 0; j < ax.n; ++j) mult[j] = std::exp(-hbar * k[j] * k[j] / 4.0) / ax.n;
    spectral::fft_axis(data.data(), dims, a, -1);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] *= mult[(i / stride[a]) % static_cast<std::size_t>(ax.n)];
    spectral::fft_axis(data.data(), dims, a, +1);
  }
  PhaseGridDensity out{w.spec, hbar, std::vector<double>(data.size()), 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) out.values[i] = data[i].real();
  return out;
}

double l1_distance(const PhaseGridDensity& a, const PhaseGridDensity& b) {
  if (a.values.size() != b.values.size() || a.spec.axes.size() != b.spec.axes.size()) {
    fail(ErrorKind::DimensionMismatch, "densities on different phase grids");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
  return s * a.spec.cell_volume();
}

double toeplitz_wigner_check(const AtomicMeasure& mu, const Grid& grid, const PhaseGridSpec& spec) {
  require_2d(grid.d, "toeplitz_wigner_check");
  const DensityMixture r = toeplitz_mixture(mu, grid);
  const PhaseGridDensity w = wigner(r, spec);
  const double hbar = grid.hbar;
  PhaseGridDensity comb{spec, hbar, std::vector<double>(spec.size(), 0.0), 0.0};
  const double pref = 1.0 / sq(kPi * hbar);
  for (std::size_t i = 0; i < comb.values.size(); ++i) {
    const PhaseVec z = spec.point(i);
    double v = 0.0;
    for (std::size_t a = 0; a < mu.size(); ++a) v += mu.weights[a] * pref * std::exp(-squared_distance(z, mu.points[a]) / hbar);
    comb.values[i] = v;
  }
  return l1_distance(w, comb);
}

double spectral_interpolate(const PhaseGridDensity& rho, const PhaseVec& z) {
  rho.spec.validate();
  return Interpolator(rho)(z);
}

PairingResult trace_pairing(const AtomicMeasure& mu, const DensityMixture& r) {
  mu.validate();
  require_mixture(r);
  const Grid& g = r.grid();
  if (mu.dim() != g.d) fail(ErrorKind::DimensionMismatch, "measure and mixture dimensions differ");
  const double pref = 1.0 / sq(2.0 * kPi * g.hbar);
  PairingResult out;
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const GridState za = coherent_state(mu.points[a], g);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r.weights[j] * std::norm(inner_product(za, r.states[j]));
    out.lhs += mu.weights[a] * pref * s;
  }
  PhaseGridOptions opts;
  opts.spacing = std::sqrt(g.hbar) / 2.5;
  opts.odd_counts = true;
  opts.include = mu.points;
  const PhaseGridDensity hus = husimi_overlap(r, covering_phase_grid(r, opts));
  const Interpolator interp(hus);
  for (std::size_t a = 0; a < mu.size(); ++a) out.rhs += mu.weights[a] * interp(mu.points[a]);
  return out;
}

void write_phase_csv(std::ostream& os, const PhaseGridDensity& rho) {
  os << "x1,x2,xi1,xi2,value\n";
  char buf[160];
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const Eigen::VectorXd z = rho.spec.point(i).flat();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", z[0], z[1], z[2], z[3], rho.values[i]);
    os << buf;
  }
  if (!os) fail(ErrorKind::IoFailure, "failed writing phase-grid CSV");
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
  if (!is) fail(ErrorKind::IoFailure, "truncated phase-grid dump");
  return v;
}

}  // namespace

void write_phase_grid(std::ostream& os, const PhaseGridDensity& rho) {
  os.write("MLPG", 4);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(rho.spec.dim()));
  put<std::uint32_t>(os, 0u);
  put<std::uint32_t>(os, 0u);
  put<double>(os, rho.hbar);
  put<double>(os, rho.spec.cell_volume());
  for (const auto& a : rho.spec.axes) {
    put<double>(os, a.lo);
    put<double>(os, a.step);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(a.n));
  }
  for (double v : rho.values) put<double>(os, v);
  if (!os) fail(ErrorKind::IoFailure, "failed writing phase-grid dump");
}

PhaseGridDensity read_phase_grid(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MLPG", 4) != 0) fail(ErrorKind::MalformedDocument, "not an MLPG dump");
  PhaseGridDensity rho;
  const auto d = get<std::uint32_t>(is);
  get<std::uint32_t>(is);
  get<std::uint32_t>(is);
  rho.hbar = get<double>(is);
  get<double>(is);
  if (d != 2) fail(ErrorKind::DimensionMismatch, "phase grids support d = 2 only");
  rho.spec.axes.resize(2 * d);
  for (auto& a : rho.spec.axes) {
    a.lo = get<double>(is);
    a.step = get<double>(is);
    a.n = static_cast<int>(get<std::uint64_t>(is));
  }
  rho.spec.validate();
  rho.values.resize(rho.spec.size());
  for (auto& v : rho.values) v = get<double>(is);
  return rho;
}

}  // namespace mlsl
