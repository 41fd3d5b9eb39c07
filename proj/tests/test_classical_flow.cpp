#include "mlsl/classical_flow.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <cmath>

using namespace mlsl;
using mlsl::test::pv;
using mlsl::test::vec2;

namespace {

FlowParams params(FieldSpec f = FieldSpec::zero(), PotentialSpec p = PotentialSpec::zero(), double dt = 1e-3,
                  FlowMethod m = FlowMethod::RK4) {
  FlowParams fp;
  fp.field = std::move(f);
  fp.potential = std::move(p);
  fp.dt = dt;
  fp.method = m;
  return fp;
}

double max_gap(const PhaseVec& a, const PhaseVec& b) { return (a.flat() - b.flat()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(IntegrateFlow, HarmonicQuarterTurn) {
  const PhaseVec z = integrate_flow(pv(1, 0, 0, 0), M_PI / 2, params());
  EXPECT_LE(max_gap(z, pv(0, 0, -1, 0)), 1e-8);
}

TEST(IntegrateFlow, HarmonicClosedFormAtRandomTimes) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 5; ++i) {
    const PhaseVec z0 = test::random_phase(rng, 1.0, 1.0);
    const double t = u(rng);
    const PhaseVec expected(z0.x * std::cos(t) + z0.xi * std::sin(t), -z0.x * std::sin(t) + z0.xi * std::cos(t));
    EXPECT_LE(max_gap(integrate_flow(z0, t, params()), expected), 1e-8);
  }
}

TEST(IntegrateFlow, ZeroTimeIsIdentity) {
  const PhaseVec z0 = pv(0.3, -0.2, 0.7, 0.1);
  const PhaseVec z = integrate_flow(z0, 0.0, params(FieldSpec::builtin("sinswap"), PotentialSpec::builtin("cosine", 2)));
  EXPECT_EQ(z.flat(), z0.flat());
}

TEST(IntegrateFlow, MatrixExponentialOracleRk4) {
  const FlowParams fp = params(FieldSpec::epsilon_rotation(0.5));
  EXPECT_LE(oracle::linear_flow_error(pv(1, 0, 0, 0.5), 1.0, fp), 1e-6);
}

TEST(IntegrateFlow, MatrixExponentialOracleSplitStiff) {
  for (double eps : {1.0, 0.5, 0.2, 0.05}) {
    const FlowParams fp = params(FieldSpec::epsilon_rotation(eps), PotentialSpec::zero(), 1e-3, FlowMethod::SplitStiff);
    EXPECT_LE(oracle::linear_flow_error(pv(1, 0.2, -0.3, 0.5), 1.0, fp), 1e-6) << "eps " << eps;
  }
}

TEST(IntegrateFlow, MatrixExponentialOracleSelfCheck) {
  // exp of the harmonic generator is the rotation by t.
  const Eigen::MatrixXd E = oracle::expm(1.3 * oracle::linear_generator(FieldSpec::zero(), 2));
  EXPECT_NEAR(E(0, 0), std::cos(1.3), 1e-14);
  EXPECT_NEAR(E(0, 2), std::sin(1.3), 1e-14);
  EXPECT_NEAR(E(2, 0), -std::sin(1.3), 1e-14);
}

TEST(IntegrateFlow, SplitStiffNeedsLinearField) {
  EXPECT_MLSL_ERROR(integrate_flow(pv(1, 0, 0, 0), 1.0,
                                   params(FieldSpec::builtin("sinswap"), PotentialSpec::zero(), 1e-3, FlowMethod::SplitStiff)),
                    InvariantViolation);
}

TEST(IntegrateFlow, StepRuleCapsAtEpsOverTwenty) {
  EXPECT_DOUBLE_EQ(params(FieldSpec::epsilon_rotation(0.01), PotentialSpec::zero(), 1e-3).effective_dt(), 5e-4);
  EXPECT_DOUBLE_EQ(params(FieldSpec::epsilon_rotation(1.0), PotentialSpec::zero(), 1e-3).effective_dt(), 1e-3);
}

TEST(IntegrateFlow, GroupProperty) {
  const FlowParams fp = params(FieldSpec::builtin("sinswap"), PotentialSpec::builtin("cosine", 2));
  const PhaseVec z0 = pv(0.4, -0.6, 0.2, 0.3);
  for (double s : {0.3, 0.7}) {
    for (double t : {0.3, 0.7}) {
      EXPECT_LE(max_gap(integrate_flow(integrate_flow(z0, t, fp), s, fp), integrate_flow(z0, s + t, fp)), 1e-6);
    }
  }
}

TEST(IntegrateFlow, NegativeTimeInvertsFlow) {
  const FlowParams fp = params(FieldSpec::epsilon_rotation(0.5), PotentialSpec::builtin("cosine", 2));
  const PhaseVec z0 = pv(0.4, -0.6, 0.2, 0.3);
  EXPECT_LE(max_gap(integrate_flow(integrate_flow(z0, 1.1, fp), -1.1, fp), z0), 1e-6);
}

TEST(IntegrateFlow, BlowUpGuard) {
  FlowParams fp = params();
  fp.dt = 1e300;
  EXPECT_MLSL_ERROR(integrate_flow(pv(1e300, 1e300, 1e300, 1e300), 1e300, fp), NonFiniteState);
}

TEST(ClassicalEnergy, Examples) {
  EXPECT_DOUBLE_EQ(classical_energy(pv(1, 0, 0, 0), FieldSpec::zero(), PotentialSpec::zero()), 0.5);
  EXPECT_DOUBLE_EQ(classical_energy(pv(1, 0, 0, -1), FieldSpec::epsilon_rotation(1.0), PotentialSpec::zero()), 0.5);
  EXPECT_DOUBLE_EQ(classical_energy(pv(0, 0, 0, 0), FieldSpec::zero(), PotentialSpec::builtin("cosine", 2)),
                   potential_eval(PotentialSpec::builtin("cosine", 2), vec2(0, 0)));
}

TEST(ClassicalEnergy, ConservedForEveryBuiltinPair) {
  const std::vector<FieldSpec> fields = {FieldSpec::zero(), FieldSpec::epsilon_rotation(1.0),
                                         FieldSpec::epsilon_rotation(0.5), FieldSpec::builtin("sinswap")};
  const std::vector<PotentialSpec> pots = {PotentialSpec::zero(), PotentialSpec::builtin("cosine", 2)};
  const PhaseVec z0 = pv(0.7, -0.3, 0.2, 0.5);
  for (const auto& f : fields) {
    for (const auto& p : pots) {
      const double e0 = classical_energy(z0, f, p);
      double worst = 0.0;
      for (const PhaseVec& z : sample_trajectory(z0, 5.0, params(f, p)).states) {
        worst = std::max(worst, std::abs(classical_energy(z, f, p) - e0) / std::max(1.0, std::abs(e0)));
      }
      EXPECT_LE(worst, 1e-8) << f.describe() << " / " << p.describe();
    }
  }
}

TEST(SampleTrajectory, TimesAndStart) {
  const PhaseVec z0 = pv(1, 0, 0, 0);
  const Trajectory tr = sample_trajectory(z0, 0.0105, params(FieldSpec::zero(), PotentialSpec::zero(), 1e-3));
  ASSERT_EQ(tr.times.size(), tr.states.size());
  EXPECT_EQ(tr.times.front(), 0.0);
  EXPECT_NEAR(tr.times.back(), 0.0105, 1e-15);
  for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
  EXPECT_EQ(tr.states.front().flat(), z0.flat());
}

TEST(Pushforward, ZeroTimeAndInverse) {
  const FlowParams fp = params(FieldSpec::builtin("sinswap"), PotentialSpec::builtin("cosine", 2));
  const AtomicMeasure cloud{{pv(0.5, 0, 0, 0.3), pv(-0.2, 0.4, 0.1, 0), pv(0, 0, 0.6, -0.6)}, {0.2, 0.3, 0.5}};
  const AtomicMeasure same = pushforward(cloud, 0.0, fp);
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(same.points[i].flat(), cloud.points[i].flat());
  const AtomicMeasure fwd = pushforward(cloud, 1.5, fp, 2);
  EXPECT_EQ(fwd.weights, cloud.weights);
  const AtomicMeasure back = pushforward(fwd, -1.5, fp);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_LE(max_gap(back.points[i], cloud.points[i]), 1e-6);
    const double e0 = classical_energy(cloud.points[i], fp.field, fp.potential);
    EXPECT_LE(std::abs(classical_energy(fwd.points[i], fp.field, fp.potential) - e0), 1e-7 * std::abs(e0));
  }
}

TEST(HittingTime, HarmonicEntersCentralBall) {
  const FlowParams fp = params();
  const auto t = hitting_time(pv(1, 0, 0, 0), Region::ball(vec2(0, 0), 0.5), 2 * M_PI, fp);
  ASSERT_TRUE(t.has_value());
  EXPECT_NEAR(*t, M_PI / 3, fp.dt);
}

TEST(HittingTime, StartInsideHitsAtFirstStep) {
  const FlowParams fp = params();
  const auto t = hitting_time(pv(0.1, 0, 0, 0), Region::ball(vec2(0, 0), 0.5), 1.0, fp);
  ASSERT_TRUE(t.has_value());
  EXPECT_DOUBLE_EQ(*t, fp.dt);
}

TEST(HittingTime, UnreachableRegion) {
  // Energy 1/2 keeps |x| <= 1.
  EXPECT_FALSE(hitting_time(pv(1, 0, 0, 0), Region::ball(vec2(3, 0), 0.5), 10.0, params()).has_value());
  EXPECT_FALSE(hitting_time(pv(1, 0, 0, 0), Region::empty(), 10.0, params()).has_value());
}

TEST(OccupationIntegral, WholeAndEmpty) {
  EXPECT_NEAR(occupation_integral(pv(1, 0, 0, 0), Region::whole(), 2.5, params()), 2.5, 1e-12);
  EXPECT_EQ(occupation_integral(pv(1, 0, 0, 0), Region::empty(), 2.5, params()), 0.0);
}

TEST(OccupationIntegral, HarmonicArcLength) {
  const FlowParams fp = params();
  for (double r : {0.5, 0.3, 0.8}) {
    const double occ = occupation_integral(pv(1, 0, 0, 0), Region::ball(vec2(0, 0), r), 2 * M_PI, fp);
    EXPECT_NEAR(occ, oracle::harmonic_ball_occupation(r), 2 * fp.dt) << "radius " << r;
  }
  EXPECT_NEAR(oracle::harmonic_ball_occupation(0.5), 2 * M_PI / 3, 1e-14);
}

TEST(Visit, AgreesWithSeparateQueries) {
  const FlowParams fp = params(FieldSpec::builtin("sinswap"), PotentialSpec::builtin("cosine", 2));
  const Region omega = Region::annulus(vec2(0, 0), 0.2, 0.6);
  const PhaseVec z0 = pv(1, 0, 0, 0.2);
  const VisitSummary v = visit(z0, omega, 4.0, fp);
  EXPECT_EQ(v.hit, hitting_time(z0, omega, 4.0, fp));
  EXPECT_EQ(v.occupation, occupation_integral(z0, omega, 4.0, fp));
}
