#include "hommax/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace hommax {

void* fft_malloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fft_free(void* p) noexcept { fftw_free(p); }

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Planning is not thread-safe in FFTW; execution on fresh arrays is. Plans use
// FFTW_ESTIMATE so the chosen algorithm, and therefore every output bit, does
// not depend on timing measurements.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plans] : plans_) {
      fftw_destroy_plan(plans.forward);
      fftw_destroy_plan(plans.backward);
    }
  }

  PlanPair get(const std::array<int, 3>& n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    auto* a = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    auto* b = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    PlanPair p;
    p.forward = fftw_plan_dft_3d(n[0], n[1], n[2], a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_3d(n[0], n[1], n[2], a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_free(a);
    fftw_free(b);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::array<int, 3>, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

void execute(fftw_plan plan, const cplx* in, cplx* out) {
  // fftw_execute_dft does not modify the input of an out-of-place plan.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void fft_forward(const std::array<int, 3>& n, const cplx* in, cplx* out) {
  execute(cache().get(n).forward, in, out);
}

void fft_backward(const std::array<int, 3>& n, const cplx* in, cplx* out) {
  execute(cache().get(n).backward, in, out);
}

}  // namespace hommax
