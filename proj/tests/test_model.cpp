#include "mlsl/model.hpp"

#include "support.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace mlsl;
using mlsl::test::vec2;

namespace {

Mat fd_jacobian(const FieldSpec& f, const Vec& x, double h = 1e-5) {
  const int d = static_cast<int>(x.size());
  Mat J(d, d);
  for (int l = 0; l < d; ++l) {
    Vec xp = x, xm = x;
    xp[l] += h;
    xm[l] -= h;
    J.col(l) = (field_eval(f, xp) - field_eval(f, xm)) / (2 * h);
  }
  return J;
}

Vec fd_gradient(const PotentialSpec& p, const Vec& x, double h = 1e-5) {
  Vec g(x.size());
  for (int l = 0; l < x.size(); ++l) {
    Vec xp = x, xm = x;
    xp[l] += h;
    xm[l] -= h;
    g[l] = (potential_eval(p, xp) - potential_eval(p, xm)) / (2 * h);
  }
  return g;
}

double op_norm(const Mat& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(m)};
  return svd.singularValues()(0);
}

}  // namespace

TEST(FieldEval, RotationScalesPerpByInverseEps) {
  const Vec a = field_eval(FieldSpec::epsilon_rotation(0.5), vec2(1, 0));
  EXPECT_DOUBLE_EQ(a[0], 0.0);
  EXPECT_DOUBLE_EQ(a[1], 2.0);
}

TEST(FieldEval, ZeroFieldIsZero) {
  EXPECT_EQ(field_eval(FieldSpec::zero(), vec2(0.3, -2.0)).norm(), 0.0);
  Vec x3(3);
  x3 << 1, 2, 3;
  EXPECT_EQ(field_eval(FieldSpec::zero(), x3).size(), 3);
}

TEST(FieldEval, SinswapVanishesAtOrigin) {
  EXPECT_EQ(field_eval(FieldSpec::builtin("sinswap"), vec2(0, 0)).norm(), 0.0);
  const Vec a = field_eval(FieldSpec::builtin("sinswap"), vec2(0.2, 0.7));
  EXPECT_DOUBLE_EQ(a[0], std::sin(0.7));
  EXPECT_DOUBLE_EQ(a[1], std::sin(0.2));
}

TEST(FieldEval, SinswapThreeDimensionalIsCyclic) {
  Vec x(3);
  x << 0.1, 0.2, 0.3;
  const Vec a = field_eval(FieldSpec::builtin("sinswap"), x);
  EXPECT_DOUBLE_EQ(a[0], std::sin(0.2));
  EXPECT_DOUBLE_EQ(a[1], std::sin(0.3));
  EXPECT_DOUBLE_EQ(a[2], std::sin(0.1));
  EXPECT_LE((field_jacobian(FieldSpec::builtin("sinswap"), x) - fd_jacobian(FieldSpec::builtin("sinswap"), x)).norm(),
            1e-8);
}

TEST(FieldEval, DimensionErrors) {
  Vec x3(3);
  x3 << 1, 0, 0;
  EXPECT_MLSL_ERROR(field_eval(FieldSpec::epsilon_rotation(1.0), x3), DimensionMismatch);
  EXPECT_MLSL_ERROR(field_jacobian(FieldSpec::epsilon_rotation(1.0), x3), DimensionMismatch);
  Vec x1(1);
  x1 << 1;
  EXPECT_MLSL_ERROR(field_eval(FieldSpec::builtin("sinswap"), x1), DimensionMismatch);
  EXPECT_MLSL_ERROR(potential_eval(PotentialSpec::builtin("cosine", 2), x1), DimensionMismatch);
  EXPECT_MLSL_ERROR(FieldSpec::epsilon_rotation(1.0).check_dimension(3), DimensionMismatch);
}

TEST(FieldSpecCatalog, RejectsUnknownAndNonPositive) {
  EXPECT_MLSL_ERROR(FieldSpec::epsilon_rotation(0.0), InvariantViolation);
  EXPECT_MLSL_ERROR(FieldSpec::epsilon_rotation(-1.0), InvariantViolation);
  EXPECT_MLSL_ERROR(FieldSpec::builtin("swirl"), InvariantViolation);
  EXPECT_MLSL_ERROR(PotentialSpec::builtin("quartic", 2), InvariantViolation);
}

TEST(FieldJacobian, RotationMatchesHandDerivative) {
  const FieldSpec f = FieldSpec::epsilon_rotation(1.0);
  Mat expected(2, 2);
  expected << 0, -1, 1, 0;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 3; ++i) {
    const Vec x = test::random_vec(rng, 2, 3.0);
    EXPECT_EQ(field_jacobian(f, x), expected);
    EXPECT_LE((fd_jacobian(f, x) - expected).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(FieldJacobian, ZeroFieldGivesZeroMatrix) {
  EXPECT_EQ(field_jacobian(FieldSpec::zero(), vec2(1, 2)).norm(), 0.0);
}

TEST(FieldJacobian, SinswapAtOriginIsSwap) {
  const FieldSpec f = FieldSpec::builtin("sinswap");
  Mat expected(2, 2);
  expected << 0, 1, 1, 0;
  EXPECT_EQ(field_jacobian(f, vec2(0, 0)), expected);
  EXPECT_LE((fd_jacobian(f, vec2(0, 0)) - expected).cwiseAbs().maxCoeff(), 1e-8);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const Vec x = test::random_vec(rng, 2, 3.0);
    EXPECT_LE((fd_jacobian(f, x) - field_jacobian(f, x)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Potential, ZeroPotential) {
  EXPECT_EQ(potential_eval(PotentialSpec::zero(), vec2(1, 2)), 0.0);
  EXPECT_EQ(gradient_eval(PotentialSpec::zero(), vec2(1, 2)).norm(), 0.0);
}

TEST(Potential, CosineAtOrigin) {
  const PotentialSpec p = PotentialSpec::builtin("cosine", 2);
  EXPECT_DOUBLE_EQ(potential_eval(p, vec2(0, 0)), 2.0);
  EXPECT_EQ(gradient_eval(p, vec2(0, 0)).norm(), 0.0);
  EXPECT_LE(fd_gradient(p, vec2(0, 0)).norm(), 1e-10);
}

TEST(Potential, CosineIsEven) {
  const PotentialSpec p = PotentialSpec::builtin("cosine", 2);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Vec x = test::random_vec(rng, 2, 4.0);
    EXPECT_NEAR(potential_eval(p, x), potential_eval(p, -x), 1e-12);
  }
}

TEST(Potential, BoundedBySupNorm) {
  const PotentialSpec p = PotentialSpec::builtin("cosine", 2);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) EXPECT_LE(std::abs(potential_eval(p, test::random_vec(rng, 2, 4.0))), p.Vinf);
}

TEST(Potential, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (int d : {2, 3}) {
    const PotentialSpec p = PotentialSpec::builtin("cosine", d);
    for (int i = 0; i < 100; ++i) {
      const Vec x = test::random_vec(rng, d, 4.0);
      EXPECT_LE((gradient_eval(p, x) - fd_gradient(p, x)).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(Regularity, SinswapLipschitzConstants) {
  const FieldSpec f = FieldSpec::builtin("sinswap");
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = test::random_vec(rng, 2, 4.0), y = test::random_vec(rng, 2, 4.0);
    EXPECT_LE((field_eval(f, x) - field_eval(f, y)).norm(), f.K * (x - y).norm() + 1e-14);
    EXPECT_LE(op_norm(field_jacobian(f, x) - field_jacobian(f, y)), f.Kp * (x - y).norm() + 1e-14);
  }
}

TEST(Regularity, RotationLipschitzConstant) {
  const FieldSpec f = FieldSpec::epsilon_rotation(0.25);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = test::random_vec(rng, 2, 4.0), y = test::random_vec(rng, 2, 4.0);
    EXPECT_LE((field_eval(f, x) - field_eval(f, y)).norm(), f.K * (x - y).norm() * (1 + 1e-14));
  }
}

TEST(Regularity, CosineGradientLipschitz) {
  const PotentialSpec p = PotentialSpec::builtin("cosine", 2);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 1000; ++i) {
    const Vec x = test::random_vec(rng, 2, 4.0), y = test::random_vec(rng, 2, 4.0);
    EXPECT_LE((gradient_eval(p, x) - gradient_eval(p, y)).norm(), p.L * (x - y).norm() + 1e-14);
  }
}

TEST(PhaseVecType, FlatRoundTripAndValidation) {
  const PhaseVec z = test::pv(1, 2, 3, 4);
  EXPECT_EQ(z.dim(), 2);
  const Eigen::VectorXd f = z.flat();
  ASSERT_EQ(f.size(), 4);
  EXPECT_EQ(f[2], 3.0);
  EXPECT_MLSL_ERROR(PhaseVec::from_flat({1, 2, 3}), DimensionMismatch);
  EXPECT_MLSL_ERROR(PhaseVec::from_flat({1, 2}), DimensionMismatch);
  EXPECT_MLSL_ERROR(PhaseVec::from_flat({1, 2, std::nan(""), 4}), NonFiniteState);
  EXPECT_DOUBLE_EQ(squared_distance(z, test::pv(0, 0, 0, 0)), 30.0);
}

TEST(AtomicMeasureType, Validation) {
  AtomicMeasure m{{test::pv(0, 0, 0, 0), test::pv(1, 0, 0, 0)}, {0.5, 0.6}};
  EXPECT_MLSL_ERROR(m.validate(), InvariantViolation);
  m.weights = {1.5, -0.5};
  EXPECT_MLSL_ERROR(m.validate(), InvariantViolation);
  m.weights = {0.25, 0.75};
  EXPECT_NO_THROW(m.validate());
  m.weights = {1.0};
  EXPECT_MLSL_ERROR(m.validate(), InvariantViolation);
  EXPECT_MLSL_ERROR(AtomicMeasure{}.validate(), InvariantViolation);
  EXPECT_NO_THROW(AtomicMeasure::uniform({test::pv(0, 0, 0, 0), test::pv(1, 0, 0, 0), test::pv(2, 0, 0, 0)}).validate());
}

TEST(RegionType, DistancesAndMembership) {
  const Region ball = Region::ball(vec2(0, 0), 0.5);
  EXPECT_TRUE(ball.contains(vec2(0.3, 0)));
  EXPECT_FALSE(ball.contains(vec2(0.5, 0)));
  EXPECT_DOUBLE_EQ(ball.distance(vec2(2, 0)), 1.5);
  const Region ann = Region::annulus(vec2(0, 0), 0.4, 1.2);
  EXPECT_FALSE(ann.contains(vec2(0.1, 0)));
  EXPECT_TRUE(ann.contains(vec2(0, 1)));
  EXPECT_DOUBLE_EQ(ann.distance(vec2(0.1, 0)), 0.30000000000000004);
  EXPECT_DOUBLE_EQ(ann.distance(vec2(0, 2)), 0.8);
  EXPECT_TRUE(std::isinf(Region::empty().distance(vec2(0, 0))));
  EXPECT_EQ(Region::whole().distance(vec2(9, 9)), 0.0);
  EXPECT_MLSL_ERROR(Region::annulus(vec2(0, 0), 1.0, 1.0), InvariantViolation);
  EXPECT_MLSL_ERROR(Region::ball(vec2(0, 0), 0.0), InvariantViolation);
}
