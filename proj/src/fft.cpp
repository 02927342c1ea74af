#include "kplab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace kplab::fft {

namespace {

struct PlanKey {
  std::vector<int> dims;
  int sign;
  bool inplace;
  bool operator<(const PlanKey& o) const {
    return std::tie(dims, sign, inplace) < std::tie(o.dims, o.sign, o.inplace);
  }
};

std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan> g_plans;

fftw_plan get_plan(const std::vector<int>& dims, int sign, bool inplace) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  PlanKey key{dims, sign, inplace};
  auto it = g_plans.find(key);
  if (it != g_plans.end()) return it->second;
  size_t n = 1;
  for (int d : dims) n *= static_cast<size_t>(d);
  fftw_complex* a = fftw_alloc_complex(n);
  fftw_complex* b = inplace ? a : fftw_alloc_complex(n);
  fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), a, b,
                              sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!inplace) fftw_free(b);
  fftw_free(a);
  g_plans.emplace(key, p);
  return p;
}

}  // namespace

void transform(const std::vector<int>& dims, int sign, const cplx* in, cplx* out) {
  bool inplace = in == out;
  fftw_plan p = get_plan(dims, sign, inplace);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace kplab::fft
