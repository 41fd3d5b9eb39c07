#include "spectral.hpp"

#include "mlsl/errors.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace mlsl::spectral {

namespace {

using Key = std::tuple<std::vector<int>, int, int>;  // dims, axis (-1 = all), sign

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::map<Key, fftw_plan>& plan_cache() {
  static std::map<Key, fftw_plan> cache;
  return cache;
}

fftw_plan make_plan(const std::vector<int>& dims, int axis, int sign) {
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::size_t total = 1;
  for (int n : dims) total *= static_cast<std::size_t>(n);
  std::vector<fftw_complex> scratch(total);
  const int fsign = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
  if (axis < 0) {
    return fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), scratch.data(), scratch.data(), fsign,
                         flags);
  }
  const int rank = static_cast<int>(dims.size());
  std::vector<int> stride(rank, 1);
  for (int k = rank - 2; k >= 0; --k) stride[k] = stride[k + 1] * dims[k + 1];
  fftw_iodim dim{dims[axis], stride[axis], stride[axis]};
  std::vector<fftw_iodim> batch;
  for (int k = 0; k < rank; ++k) {
    if (k != axis) batch.push_back(fftw_iodim{dims[k], stride[k], stride[k]});
  }
  return fftw_plan_guru_dft(1, &dim, static_cast<int>(batch.size()), batch.data(), scratch.data(),
                            scratch.data(), fsign, flags);
}

fftw_plan get_plan(const std::vector<int>& dims, int axis, int sign) {
  std::lock_guard<std::mutex> lock(planner_mutex());
  Key key{dims, axis, sign < 0 ? -1 : 1};
  auto& cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  fftw_plan p = make_plan(dims, axis, sign);
  if (p == nullptr) fail(ErrorKind::InvariantViolation, "FFTW could not build a plan");
  cache.emplace(key, p);
  return p;
}

}  // namespace

void fft(cplx* data, const std::vector<int>& dims, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(get_plan(dims, -1, sign), p, p);
}

void fft_axis(cplx* data, const std::vector<int>& dims, int axis, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(get_plan(dims, axis, sign), p, p);
}

std::vector<double> wavenumbers(int n, double length) {
  std::vector<double> k(static_cast<std::size_t>(n));
  const double base = 2.0 * std::numbers::pi / length;
  for (int j = 0; j < n; ++j) k[j] = base * (j < n / 2 ? j : j - n);
  return k;
}

}  // namespace mlsl::spectral
