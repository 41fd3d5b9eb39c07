#pragma once

#include "mlsl/errors.hpp"
#include "mlsl/model.hpp"

#include <gtest/gtest.h>

#include <random>

namespace mlsl::test {

inline PhaseVec pv(double x1, double x2, double p1, double p2) { return PhaseVec::from_flat({x1, x2, p1, p2}); }

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec random_vec(std::mt19937_64& rng, int d, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

inline PhaseVec random_phase(std::mt19937_64& rng, double rx, double rp) {
  return PhaseVec(random_vec(rng, 2, rx), random_vec(rng, 2, rp));
}

}  // namespace mlsl::test

// Expects `stmt` to throw mlsl::Error of the given kind.
#define EXPECT_MLSL_ERROR(stmt, expected_kind)                                        \
  do {                                                                                \
    try {                                                                             \
      stmt;                                                                           \
      ADD_FAILURE() << "no exception from " #stmt;                                    \
    } catch (const mlsl::Error& e_) {                                                 \
      EXPECT_EQ(e_.kind(), mlsl::ErrorKind::expected_kind) << e_.what();              \
    }                                                                                 \
  } while (0)
