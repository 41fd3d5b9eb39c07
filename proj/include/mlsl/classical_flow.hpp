#pragma once

#include "mlsl/model.hpp"

#include <optional>
#include <vector>

namespace mlsl {

enum class FlowMethod { RK4, SplitStiff };

struct FlowParams {
  FieldSpec field;
  PotentialSpec potential;
  double dt = 1e-3;
  FlowMethod method = FlowMethod::RK4;

  /// Internal step: dt, capped at eps/20 when the epsilon-rotation field is on.
  double effective_dt() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseVec> states;
};

/// Phi_t(z0) for the magnetic Newton system
///   X' = Xi + A(X),  Xi' = -(dA)^T (Xi + A(X)) - X - grad V(X).
/// Negative t runs the flow backwards.  SplitStiff needs a field that is
/// linear in x (Zero or EpsilonRotation).
PhaseVec integrate_flow(const PhaseVec& z0, double t, const FlowParams& params);

/// States at 0, dt, 2dt, ..., t (the last interval may be shorter).
Trajectory sample_trajectory(const PhaseVec& z0, double t, const FlowParams& params);

/// 1/2 |xi + A(x)|^2 + 1/2 |x|^2 + V(x)
double classical_energy(const PhaseVec& z, const FieldSpec& field, const PotentialSpec& potential);

AtomicMeasure pushforward(const AtomicMeasure& cloud, double t, const FlowParams& params, int threads = 1);

/// Smallest sampled time k*dt in (0, T) with X in omega, if any.
std::optional<double> hitting_time(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params);

/// Time spent in omega over [0, T], midpoint rule with step dt.
double occupation_integral(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params);

struct VisitSummary {
  std::optional<double> hit;
  double occupation = 0.0;
};

/// hitting_time and occupation_integral from a single trajectory.
VisitSummary visit(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params);

}  // namespace mlsl
