#include "mlsl/model.hpp"

#include "mlsl/errors.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace mlsl {

PhaseVec::PhaseVec(Vec position, Vec momentum) : x(std::move(position)), xi(std::move(momentum)) {
  validate();
}

PhaseVec PhaseVec::from_flat(const std::vector<double>& flat) {
  if (flat.size() != 4 && flat.size() != 6) {
    fail(ErrorKind::DimensionMismatch,
         "phase vector needs 4 or 6 components, got " + std::to_string(flat.size()));
  }
  const int d = static_cast<int>(flat.size() / 2);
  Vec x(d), xi(d);
  for (int k = 0; k < d; ++k) {
    x[k] = flat[k];
    xi[k] = flat[d + k];
  }
  return PhaseVec(x, xi);
}

void PhaseVec::validate() const {
  if (x.size() != xi.size()) fail(ErrorKind::DimensionMismatch, "x and xi lengths differ");
  if (x.size() != 2 && x.size() != 3) {
    fail(ErrorKind::DimensionMismatch, "phase dimension must be 2 or 3");
  }
  if (!x.allFinite() || !xi.allFinite()) fail(ErrorKind::NonFiniteState, "non-finite phase vector");
}

Eigen::VectorXd PhaseVec::flat() const {
  Eigen::VectorXd out(2 * dim());
  out << x, xi;
  return out;
}

double squared_distance(const PhaseVec& a, const PhaseVec& b) {
  return (a.x - b.x).squaredNorm() + (a.xi - b.xi).squaredNorm();
}

FieldSpec FieldSpec::zero() { return FieldSpec{}; }

FieldSpec FieldSpec::epsilon_rotation(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    fail(ErrorKind::InvariantViolation, "field.eps must be positive");
  }
  FieldSpec f;
  f.kind = Kind::EpsilonRotation;
  f.eps = eps;
  f.K = 1.0 / eps;
  f.Kp = 0.0;
  return f;
}

FieldSpec FieldSpec::builtin(const std::string& name) {
  if (name != "sinswap") fail(ErrorKind::InvariantViolation, "field.name: unknown builtin '" + name + "'");
  FieldSpec f;
  f.kind = Kind::Builtin;
  f.name = name;
  f.K = 1.0;
  f.Kp = 1.0;
  return f;
}

std::string FieldSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Zero: os << "zero"; break;
    case Kind::EpsilonRotation: os << "epsilon_rotation(eps=" << eps << ")"; break;
    case Kind::Builtin: os << "builtin(" << name << ")"; break;
  }
  return os.str();
}

void FieldSpec::check_dimension(int d) const {
  if (kind == Kind::EpsilonRotation && d != 2) {
    fail(ErrorKind::DimensionMismatch, "epsilon rotation field requires d = 2");
  }
}

PotentialSpec PotentialSpec::zero() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::builtin(const std::string& name, int d) {
  if (name != "cosine") fail(ErrorKind::InvariantViolation, "potential.name: unknown builtin '" + name + "'");
  PotentialSpec p;
  p.kind = Kind::BuiltinEven;
  p.name = name;
  p.L = 1.0;
  if (d < 1 || d > 3) fail(ErrorKind::DimensionMismatch, "potential dimension must be 1, 2 or 3");
  p.Vinf = static_cast<double>(d);
  p.dim = d;
  return p;
}

std::string PotentialSpec::describe() const {
  return kind == Kind::Zero ? std::string("zero") : "builtin(" + name + ")";
}

namespace {

void require_dim(const Vec& x, int lo, int hi) {
  if (x.size() < lo || x.size() > hi) fail(ErrorKind::DimensionMismatch, "position has wrong length");
}

}  // namespace

Vec field_eval(const FieldSpec& spec, const Vec& x) {
  require_dim(x, 2, 3);
  const int d = static_cast<int>(x.size());
  switch (spec.kind) {
    case FieldSpec::Kind::Zero:
      return Vec::Zero(d);
    case FieldSpec::Kind::EpsilonRotation: {
      spec.check_dimension(d);
      Vec a(2);
      a << -x[1] / spec.eps, x[0] / spec.eps;
      return a;
    }
    case FieldSpec::Kind::Builtin: {
      Vec a(d);
      for (int k = 0; k < d; ++k) a[k] = std::sin(x[(k + 1) % d]);
      return a;
    }
  }
  return Vec::Zero(d);
}

Mat field_jacobian(const FieldSpec& spec, const Vec& x) {
  require_dim(x, 2, 3);
  const int d = static_cast<int>(x.size());
  Mat jac = Mat::Zero(d, d);
  switch (spec.kind) {
    case FieldSpec::Kind::Zero:
      break;
    case FieldSpec::Kind::EpsilonRotation:
      spec.check_dimension(d);
      jac(0, 1) = -1.0 / spec.eps;
      jac(1, 0) = 1.0 / spec.eps;
      break;
    case FieldSpec::Kind::Builtin:
      for (int k = 0; k < d; ++k) jac(k, (k + 1) % d) = std::cos(x[(k + 1) % d]);
      break;
  }
  return jac;
}

double potential_eval(const PotentialSpec& spec, const Vec& x) {
  require_dim(x, 1, 3);
  if (spec.dim != 0 && x.size() != spec.dim) fail(ErrorKind::DimensionMismatch, "potential and position differ in dimension");
  if (spec.kind == PotentialSpec::Kind::Zero) return 0.0;
  double v = 0.0;
  for (int k = 0; k < x.size(); ++k) v += std::cos(x[k]);
  return v;
}

Vec gradient_eval(const PotentialSpec& spec, const Vec& x) {
  require_dim(x, 1, 3);
  if (spec.dim != 0 && x.size() != spec.dim) fail(ErrorKind::DimensionMismatch, "potential and position differ in dimension");
  Vec g = Vec::Zero(x.size());
  if (spec.kind == PotentialSpec::Kind::Zero) return g;
  for (int k = 0; k < x.size(); ++k) g[k] = -std::sin(x[k]);
  return g;
}

Region Region::empty() { return Region{}; }

Region Region::whole() {
  Region r;
  r.kind = Kind::Whole;
  return r;
}

Region Region::ball(Vec center, double radius) {
  if (!(radius > 0.0)) fail(ErrorKind::InvariantViolation, "ball radius must be positive");
  Region r;
  r.kind = Kind::Ball;
  r.center = std::move(center);
  r.r_outer = radius;
  return r;
}

Region Region::annulus(Vec center, double r_inner, double r_outer) {
  if (!(r_inner >= 0.0) || !(r_outer > r_inner)) {
    fail(ErrorKind::InvariantViolation, "annulus radii must satisfy 0 <= r_inner < r_outer");
  }
  Region r;
  r.kind = Kind::Annulus;
  r.center = std::move(center);
  r.r_inner = r_inner;
  r.r_outer = r_outer;
  return r;
}

bool Region::contains(const Vec& x) const {
  switch (kind) {
    case Kind::Empty: return false;
    case Kind::Whole: return true;
    case Kind::Ball: return (x - center).norm() < r_outer;
    case Kind::Annulus: {
      const double rho = (x - center).norm();
      return rho > r_inner && rho < r_outer;
    }
  }
  return false;
}

double Region::distance(const Vec& x) const {
  switch (kind) {
    case Kind::Empty: return std::numeric_limits<double>::infinity();
    case Kind::Whole: return 0.0;
    case Kind::Ball: return std::max(0.0, (x - center).norm() - r_outer);
    case Kind::Annulus: {
      const double rho = (x - center).norm();
      if (rho <= r_inner) return r_inner - rho;
      if (rho >= r_outer) return rho - r_outer;
      return 0.0;
    }
  }
  return 0.0;
}

std::string Region::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Empty: os << "empty"; break;
    case Kind::Whole: os << "whole"; break;
    case Kind::Ball: os << "ball"; break;
    case Kind::Annulus: os << "annulus"; break;
  }
  if (kind == Kind::Ball || kind == Kind::Annulus) {
    for (int k = 0; k < center.size(); ++k) os << ' ' << center[k];
    if (kind == Kind::Annulus) os << ' ' << r_inner;
    os << ' ' << r_outer;
  }
  return os.str();
}

AtomicMeasure AtomicMeasure::dirac(const PhaseVec& z) {
  return AtomicMeasure{{z}, {1.0}};
}

AtomicMeasure AtomicMeasure::uniform(std::vector<PhaseVec> points) {
  AtomicMeasure m;
  const double w = 1.0 / static_cast<double>(points.size());
  m.weights.assign(points.size(), w);
  m.points = std::move(points);
  return m;
}

void AtomicMeasure::validate() const {
  if (points.size() != weights.size()) {
    fail(ErrorKind::InvariantViolation, "atom and weight counts differ");
  }
  if (points.empty()) fail(ErrorKind::InvariantViolation, "measure has no atoms");
  const int d = points.front().dim();
  for (const auto& p : points) {
    p.validate();
    if (p.dim() != d) fail(ErrorKind::DimensionMismatch, "atoms of mixed dimension");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorKind::InvariantViolation, "negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    fail(ErrorKind::InvariantViolation, "weights sum to " + std::to_string(total) + ", not 1");
  }
}

Eigen::MatrixXd as_matrix(const AtomicMeasure& m) {
  const int d = m.dim();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), 2 * d);
  for (std::size_t i = 0; i < m.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.points[i].flat();
  return out;
}

}  // namespace mlsl
