#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <limits>
#include <new>
#include <vector>

namespace hommax {

using cplx = std::complex<double>;

void* fft_malloc(std::size_t bytes);
void fft_free(void* p) noexcept;

/// SIMD-aligned allocator so every field buffer matches the alignment the
/// cached FFT plans were created with.
template <class T>
struct FftAllocator {
  using value_type = T;
  FftAllocator() = default;
  template <class U>
  FftAllocator(const FftAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_alloc();
    void* p = fft_malloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fft_free(p); }

  template <class U>
  bool operator==(const FftAllocator<U>&) const noexcept {
    return true;
  }
};

using CVec = std::vector<cplx, FftAllocator<cplx>>;

/// Unnormalized 3D DFT (sign -1) of a row-major n0 x n1 x n2 array.
void fft_forward(const std::array<int, 3>& n, const cplx* in, cplx* out);
/// Unnormalized inverse 3D DFT (sign +1).
void fft_backward(const std::array<int, 3>& n, const cplx* in, cplx* out);

}  // namespace hommax
