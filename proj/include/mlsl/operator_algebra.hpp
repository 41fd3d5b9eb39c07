#pragma once

#include "mlsl/model.hpp"
#include "mlsl/quantum.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

namespace mlsl {

/// d square complex matrices of equal size n.
struct OperatorTuple {
  int dim = 0;
  std::vector<Eigen::MatrixXcd> mats;

  void validate() const;
  /// Entries with real and imaginary parts uniform in [-1, 1].
  static OperatorTuple random(int d, int n, std::mt19937_64& rng);
};

/// || sum_{k,l} D_k v (D_l v (D_k D_l - D_l D_k)) ||_F / (max_k ||D_k||_2)^3,
/// where a v b = ab + ba.
double anticommutator_cancellation_residual(const OperatorTuple& D);

/// max over random smooth test states psi of
///   || [Pi_k, Pi_l] psi - i hbar (d_l A_k - d_k A_l) psi || / ||psi||
/// with Pi_k = -i hbar d_k + A_k applied spectrally on the grid.
double discrete_commutator_check(const FieldSpec& field, const Grid& grid, int k, int l, int samples = 20,
                                 std::uint64_t seed = 7);

}  // namespace mlsl
