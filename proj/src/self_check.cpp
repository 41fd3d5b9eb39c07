#include "mlsl/classical_flow.hpp"
#include "mlsl/errors.hpp"
#include "mlsl/experiments.hpp"
#include "mlsl/operator_algebra.hpp"
#include "mlsl/quantum.hpp"
#include "mlsl/transforms.hpp"
#include "mlsl/transport.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

namespace mlsl {

namespace {

std::string sci(const char* name, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s=%.3e", name, v);
  return buf;
}

PhaseVec pv(double x1, double x2, double p1, double p2) { return PhaseVec::from_flat({x1, x2, p1, p2}); }

NamedCheck matrix_identity() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int d : {2, 3}) {
    for (int trial = 0; trial < 5; ++trial) {
      worst = std::max(worst, anticommutator_cancellation_residual(OperatorTuple::random(d, 8, rng)));
    }
  }
  return {"matrix_identity", worst <= 1e-12, sci("residual", worst)};
}

NamedCheck trace_pairing_check() {
  const Grid g{2, 128, 4.0, 0.2};
  const AtomicMeasure mu = AtomicMeasure::uniform({pv(0.3, -0.2, 0.1, 0.0), pv(-0.4, 0.1, 0.0, -0.3)});
  const AtomicMeasure src = AtomicMeasure::uniform({pv(0.2, 0.0, 0.0, 0.1), pv(-0.3, 0.2, -0.1, -0.2)});
  const PairingResult p = trace_pairing(mu, toeplitz_mixture(src, g));
  const double rel = std::abs(p.lhs - p.rhs) / std::abs(p.lhs);
  return {"trace_pairing", rel <= 1e-6, sci("relative_error", rel)};
}

NamedCheck route_consistency() {
  const double hbar = 0.2;
  const Grid g{2, 128, 4.0, hbar};
  const DensityMixture r =
      toeplitz_mixture(AtomicMeasure::uniform({pv(0.5, 0.0, 0.0, 0.4), pv(-0.5, 0.3, 0.2, 0.0)}), g);
  PhaseGridOptions po;
  po.spacing = 0.5 * std::sqrt(hbar / 2.0);
  const PhaseGridSpec spec = covering_phase_grid(r, po);
  const double gap = l1_distance(husimi_overlap(r, spec), husimi_smooth(wigner(r, spec), hbar));
  return {"route_consistency", gap <= 1e-3, sci("l1_gap", gap)};
}

NamedCheck ot_oracle() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto cloud = [&](int n) {
    std::vector<PhaseVec> pts;
    for (int i = 0; i < n; ++i) pts.push_back(pv(u(rng), u(rng), u(rng), u(rng)));
    return AtomicMeasure::uniform(pts);
  };
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const AtomicMeasure a = cloud(8), b = cloud(8);
    const double exact = w2_exact(a, b).cost;
    const double approx = std::pow(w2_sinkhorn(a, b).distance, 2);
    worst = std::max(worst, std::abs(approx - exact) / exact);
  }
  return {"ot_oracle", worst <= 0.01, sci("relative_gap", worst)};
}

NamedCheck energy_conservation() {
  FlowParams fp;
  fp.field = FieldSpec::builtin("sinswap");
  fp.potential = PotentialSpec::builtin("cosine", 2);
  fp.dt = 1e-3;
  const PhaseVec z0 = pv(0.7, -0.3, 0.2, 0.5);
  const double e0 = classical_energy(z0, fp.field, fp.potential);
  double worst = 0.0;
  for (const PhaseVec& z : sample_trajectory(z0, 5.0, fp).states) {
    worst = std::max(worst, std::abs(classical_energy(z, fp.field, fp.potential) - e0) / std::abs(e0));
  }
  return {"energy_conservation", worst <= 1e-8, sci("relative_drift", worst)};
}

NamedCheck unitarity() {
  const Grid g{2, 64, 4.0, 0.2};
  const GridState psi = coherent_state(pv(0.5, 0.0, 0.0, 0.3), g);
  const GridState out =
      propagate_state(psi, 0.5, FieldSpec::builtin("sinswap"), PotentialSpec::builtin("cosine", 2), 1e-3);
  const double drift = std::abs(out.norm() - psi.norm());
  return {"quantum_unitarity", drift <= 1e-10, sci("norm_drift", drift)};
}

// Quadratic Hamiltonian: the quantum phase-space mean follows the classical
// flow exactly, so any sign error in the field shows up here.
NamedCheck coherent_tracking() {
  const Grid g{2, 128, 4.0, 0.2};
  const FieldSpec field = FieldSpec::epsilon_rotation(0.5);
  const PotentialSpec pot = PotentialSpec::zero();
  const PhaseVec z0 = pv(1.0, 0.0, 0.0, 0.5);
  const PhaseVec q = phase_mean(propagate_state(coherent_state(z0, g), 0.5, field, pot, 1e-3));
  FlowParams fp;
  fp.field = field;
  fp.potential = pot;
  const double err = std::sqrt(squared_distance(q, integrate_flow(z0, 0.5, fp)));
  return {"coherent_tracking", err <= 1e-3, sci("mean_error", err)};
}

NamedCheck bound_margin() {
  SimConfig c;
  c.hbar = 0.2;
  c.grid_n = 128;
  c.t_final = 1.0;
  c.checkpoint = 0.5;
  c.atoms_f = AtomicMeasure::dirac(pv(1.0, 0.0, 0.0, 0.0));
  c.atoms_mu = c.atoms_f;
  c.observe.k_center = c.atoms_f.points.front();
  const BoundReport r = run_single_limit_sweep(c, {c.hbar}).front();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.times.size(); ++i) worst = std::min(worst, r.margin[i] / r.bound[i]);
  return {"bound_margin", worst >= 0.0, sci("min_relative_margin", worst)};
}

}  // namespace

std::vector<NamedCheck> self_check(int threads) {
  const std::vector<std::function<NamedCheck()>> checks = {
      matrix_identity, trace_pairing_check, route_consistency, ot_oracle,
      energy_conservation, unitarity, coherent_tracking, bound_margin};
  std::vector<NamedCheck> out(checks.size());
  detail::parallel_for(checks.size(), threads, [&](std::size_t i) {
    try {
      out[i] = checks[i]();
    } catch (const Error& e) {
      out[i] = {"", false, e.what()};
    }
  });
  static const char* names[] = {"matrix_identity", "trace_pairing", "route_consistency", "ot_oracle",
                                "energy_conservation", "quantum_unitarity", "coherent_tracking", "bound_margin"};
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].name.empty()) out[i].name = names[i];
  }
  return out;
}

}  // namespace mlsl
