#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace mlsl {

// Position/momentum vectors never exceed three components, so the storage
// stays on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

/// A point (x, xi) of phase space R^d x R^d, d in {2, 3}.
struct PhaseVec {
  Vec x;
  Vec xi;

  PhaseVec() = default;
  PhaseVec(Vec position, Vec momentum);

  /// Builds from the flat layout (x_1..x_d, xi_1..xi_d).
  static PhaseVec from_flat(const std::vector<double>& flat);

  int dim() const { return static_cast<int>(x.size()); }
  void validate() const;
  Eigen::VectorXd flat() const;
};

double squared_distance(const PhaseVec& a, const PhaseVec& b);

struct FieldSpec {
  enum class Kind { Zero, EpsilonRotation, Builtin };

  Kind kind = Kind::Zero;
  double eps = 1.0;  // EpsilonRotation only
  std::string name;  // Builtin only
  double K = 0.0;    // Lipschitz constant of A
  double Kp = 0.0;   // Lipschitz constant of the Jacobian of A

  static FieldSpec zero();
  static FieldSpec epsilon_rotation(double eps);
  /// Closed catalog: "sinswap" A(x) = (sin x2, sin x1) in 2-D, cyclic
  /// (sin x2, sin x3, sin x1) in 3-D.
  static FieldSpec builtin(const std::string& name);

  std::string describe() const;
  /// Throws DimensionMismatch if the field cannot live in dimension d.
  void check_dimension(int d) const;
};

struct PotentialSpec {
  enum class Kind { Zero, BuiltinEven };

  Kind kind = Kind::Zero;
  std::string name;
  double L = 0.0;     // Lipschitz constant of grad V
  double Vinf = 0.0;  // sup |V|
  int dim = 0;        // 0 for the zero potential, which accepts any d

  static PotentialSpec zero();
  /// Closed catalog: "cosine" V(x) = sum_k cos x_k.
  static PotentialSpec builtin(const std::string& name, int d);

  std::string describe() const;
};

Vec field_eval(const FieldSpec& spec, const Vec& x);
/// Entry (k, l) is dA_k/dx_l.
Mat field_jacobian(const FieldSpec& spec, const Vec& x);
double potential_eval(const PotentialSpec& spec, const Vec& x);
Vec gradient_eval(const PotentialSpec& spec, const Vec& x);

/// Open region of position space used for observation windows.
struct Region {
  enum class Kind { Empty, Whole, Ball, Annulus };

  Kind kind = Kind::Empty;
  Vec center;
  double r_inner = 0.0;  // annulus only
  double r_outer = 0.0;  // ball radius / annulus outer radius

  static Region empty();
  static Region whole();
  static Region ball(Vec center, double radius);
  static Region annulus(Vec center, double r_inner, double r_outer);

  bool contains(const Vec& x) const;
  /// Euclidean distance from x to the region (0 inside, +inf for Empty).
  double distance(const Vec& x) const;
  std::string describe() const;
};

/// Weighted atoms; a probability measure on phase space.
struct AtomicMeasure {
  std::vector<PhaseVec> points;
  std::vector<double> weights;

  static AtomicMeasure dirac(const PhaseVec& z);
  static AtomicMeasure uniform(std::vector<PhaseVec> points);

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : points.front().dim(); }
  void validate() const;
};

/// Row i is the flat phase vector of atom i.
Eigen::MatrixXd as_matrix(const AtomicMeasure& m);

}  // namespace mlsl
