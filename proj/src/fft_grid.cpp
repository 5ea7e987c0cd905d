#include "fft_grid.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace mlac::detail {

namespace {

enum class Kind { Forward, Backward, RealToComplex, ComplexToReal };

struct PlanCache {
  std::mutex mutex;
  std::map<std::tuple<int, int, Kind>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

std::size_t volume(int side, int dim) {
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(side);
  return total;
}

std::size_t half_volume(int side, int dim) {
  return volume(side, dim - 1) * static_cast<std::size_t>(side / 2 + 1);
}

fftw_plan plan_for(int side, int dim, Kind kind) {
  if (dim < 1 || dim > 3) throw InvalidArgument("FFT grid dimension must be 1, 2, or 3");
  auto& c = cache();
  std::lock_guard lock(c.mutex);
  const auto key = std::make_tuple(side, dim, kind);
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  int dims[3] = {side, side, side};
  // Planning overwrites its arrays, so plan on scratch memory.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  auto* cplx = fftw_alloc_complex(volume(side, dim));
  auto* real = fftw_alloc_real(volume(side, dim));
  fftw_plan plan = nullptr;
  switch (kind) {
    case Kind::Forward:
      plan = fftw_plan_dft(dim, dims, cplx, cplx, FFTW_FORWARD, flags);
      break;
    case Kind::Backward:
      plan = fftw_plan_dft(dim, dims, cplx, cplx, FFTW_BACKWARD, flags);
      break;
    case Kind::RealToComplex:
      plan = fftw_plan_dft_r2c(dim, dims, real, cplx, flags);
      break;
    case Kind::ComplexToReal:
      plan = fftw_plan_dft_c2r(dim, dims, cplx, real, flags);
      break;
  }
  fftw_free(cplx);
  fftw_free(real);
  if (plan == nullptr) throw NumericalError("FFT planning failed");
  c.plans.emplace(key, plan);
  return plan;
}

fftw_complex* as_fftw(std::vector<Complex>& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

}  // namespace

void fft_grid(std::vector<Complex>& grid, int side, int dim, FftDirection dir) {
  fftw_plan plan =
      plan_for(side, dim, dir == FftDirection::Forward ? Kind::Forward : Kind::Backward);
  if (grid.size() != volume(side, dim)) throw InvalidArgument("FFT grid size mismatch");
  fftw_execute_dft(plan, as_fftw(grid), as_fftw(grid));
}

void fft_r2c(const std::vector<double>& in, std::vector<Complex>& out, int side, int dim) {
  fftw_plan plan = plan_for(side, dim, Kind::RealToComplex);
  if (in.size() != volume(side, dim)) throw InvalidArgument("FFT grid size mismatch");
  out.resize(half_volume(side, dim));
  // r2c does not modify its input.
  fftw_execute_dft_r2c(plan, const_cast<double*>(in.data()), as_fftw(out));
}

void fft_c2r(std::vector<Complex>& in, std::vector<double>& out, int side, int dim) {
  fftw_plan plan = plan_for(side, dim, Kind::ComplexToReal);
  if (in.size() != half_volume(side, dim)) throw InvalidArgument("FFT half grid size mismatch");
  out.resize(volume(side, dim));
  fftw_execute_dft_c2r(plan, as_fftw(in), out.data());
}

}  // namespace mlac::detail
