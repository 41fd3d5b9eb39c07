#include "mlsl/classical_flow.hpp"

#include "mlsl/errors.hpp"
#include "parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace mlsl {

namespace {

using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 6, 1>;
using Prop = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 6, 6>;

State pack(const PhaseVec& z) {
  State s(2 * z.dim());
  s << z.x, z.xi;
  return s;
}

PhaseVec unpack(const State& s) {
  const int d = static_cast<int>(s.size() / 2);
  Vec x = s.head(d), xi = s.tail(d);
  if (!x.allFinite() || !xi.allFinite() || s.cwiseAbs().maxCoeff() > 1e8) {
    fail(ErrorKind::NonFiniteState, "classical trajectory left the finite range");
  }
  PhaseVec z;
  z.x = std::move(x);
  z.xi = std::move(xi);
  return z;
}

State vector_field(const State& s, const FlowParams& p) {
  const int d = static_cast<int>(s.size() / 2);
  const Vec x = s.head(d);
  const Vec xi = s.tail(d);
  const Vec v = xi + field_eval(p.field, x);
  State out(2 * d);
  out.head(d) = v;
  out.tail(d) = -field_jacobian(p.field, x).transpose() * v - x - gradient_eval(p.potential, x);
  return out;
}

void rk4_step(State& s, double h, const FlowParams& p) {
  const State k1 = vector_field(s, p);
  const State k2 = vector_field(s + 0.5 * h * k1, p);
  const State k3 = vector_field(s + 0.5 * h * k2, p);
  const State k4 = vector_field(s + h * k3, p);
  s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Generator of the linear part z' = Lz for a field A(x) = Bx.
Prop linear_generator(const FieldSpec& field, int d) {
  Mat B = Mat::Zero(d, d);
  if (field.kind == FieldSpec::Kind::EpsilonRotation) B = field_jacobian(field, Vec::Zero(d));
  const Mat Id = Mat::Identity(d, d);
  Prop L(2 * d, 2 * d);
  L.topLeftCorner(d, d) = B;
  L.topRightCorner(d, d) = Id;
  L.bottomLeftCorner(d, d) = -B.transpose() * B - Id;
  L.bottomRightCorner(d, d) = -B.transpose();
  return L;
}

// Advances a state by a fixed duration with uniform internal steps.
class Integrator {
 public:
  Integrator(const FlowParams& p, int d, double duration) : p_(p), d_(d) {
    if (!(p.dt > 0.0)) fail(ErrorKind::InvariantViolation, "flow dt must be positive");
    const double h = p.effective_dt();
    steps_ = std::max<long>(1, static_cast<long>(std::ceil(std::abs(duration) / h - 1e-9)));
    h_ = duration / static_cast<double>(steps_);
    if (p.method == FlowMethod::SplitStiff) {
      if (p.field.kind == FieldSpec::Kind::Builtin) {
        fail(ErrorKind::InvariantViolation, "SplitStiff needs a field linear in x");
      }
      propagator_ = (h_ * linear_generator(p.field, d)).exp();
    }
  }

  void advance(State& s) const {
    if (h_ == 0.0) return;
    for (long k = 0; k < steps_; ++k) {
      if (p_.method == FlowMethod::RK4) {
        rk4_step(s, h_, p_);
      } else {
        kick(s, 0.5 * h_);
        s = propagator_ * s;
        kick(s, 0.5 * h_);
      }
    }
  }

 private:
  void kick(State& s, double h) const {
    if (p_.potential.kind == PotentialSpec::Kind::Zero) return;
    const Vec x = s.head(d_);
    s.tail(d_) -= h * gradient_eval(p_.potential, x);
  }

  FlowParams p_;
  int d_;
  long steps_ = 1;
  double h_ = 0.0;
  Prop propagator_;
};

}  // namespace

double FlowParams::effective_dt() const {
  if (field.kind == FieldSpec::Kind::EpsilonRotation) return std::min(dt, field.eps / 20.0);
  return dt;
}

PhaseVec integrate_flow(const PhaseVec& z0, double t, const FlowParams& params) {
  z0.validate();
  params.field.check_dimension(z0.dim());
  if (!std::isfinite(t)) fail(ErrorKind::InvariantViolation, "flow time must be finite");
  if (t == 0.0) return z0;
  State s = pack(z0);
  Integrator(params, z0.dim(), t).advance(s);
  return unpack(s);
}

Trajectory sample_trajectory(const PhaseVec& z0, double t, const FlowParams& params) {
  z0.validate();
  params.field.check_dimension(z0.dim());
  if (!(t >= 0.0)) fail(ErrorKind::InvariantViolation, "trajectory length must be >= 0");
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(z0);
  const long full = static_cast<long>(std::floor(t / params.dt + 1e-9));
  State s = pack(z0);
  const Integrator step(params, z0.dim(), params.dt);
  for (long k = 1; k <= full; ++k) {
    step.advance(s);
    tr.times.push_back(static_cast<double>(k) * params.dt);
    tr.states.push_back(unpack(s));
  }
  const double rest = t - static_cast<double>(full) * params.dt;
  if (rest > 1e-12 * params.dt) {
    Integrator(params, z0.dim(), rest).advance(s);
    tr.times.push_back(t);
    tr.states.push_back(unpack(s));
  }
  return tr;
}

double classical_energy(const PhaseVec& z, const FieldSpec& field, const PotentialSpec& potential) {
  return 0.5 * (z.xi + field_eval(field, z.x)).squaredNorm() + 0.5 * z.x.squaredNorm() + potential_eval(potential, z.x);
}

AtomicMeasure pushforward(const AtomicMeasure& cloud, double t, const FlowParams& params, int threads) {
  cloud.validate();
  AtomicMeasure out;
  out.weights = cloud.weights;
  out.points.resize(cloud.size());
  detail::parallel_for(cloud.size(), threads,
                       [&](std::size_t i) { out.points[i] = integrate_flow(cloud.points[i], t, params); });
  return out;
}

VisitSummary visit(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params) {
  z0.validate();
  params.field.check_dimension(z0.dim());
  if (!(T > 0.0)) fail(ErrorKind::InvariantViolation, "horizon must be positive");
  VisitSummary out;
  if (omega.kind == Region::Kind::Empty) return out;
  const double dt = params.dt;
  const int d = z0.dim();
  const Integrator half(params, d, 0.5 * dt);
  State s = pack(z0);
  for (long k = 0;; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    if (t0 >= T) break;
    const double len = std::min(dt, T - t0);
    if (len >= dt * (1.0 - 1e-12)) {
      half.advance(s);
      if (omega.contains(s.head(d))) out.occupation += dt;
      half.advance(s);
      const double t1 = static_cast<double>(k + 1) * dt;
      if (!out.hit && t1 < T && omega.contains(s.head(d))) out.hit = t1;
    } else {
      Integrator(params, d, 0.5 * len).advance(s);
      if (omega.contains(s.head(d))) out.occupation += len;
      break;
    }
    if (!s.allFinite()) fail(ErrorKind::NonFiniteState, "classical trajectory left the finite range");
  }
  return out;
}

std::optional<double> hitting_time(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params) {
  return visit(z0, omega, T, params).hit;
}

double occupation_integral(const PhaseVec& z0, const Region& omega, double T, const FlowParams& params) {
  return visit(z0, omega, T, params).occupation;
}

}  // namespace mlsl
