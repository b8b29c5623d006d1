#pragma once

#include "hommax/errors.hpp"
#include "hommax/fields.hpp"

#include <cmath>
#include <functional>

namespace hommax {

struct SolveOptions {
  /// Relative residual in the preconditioner-induced dual norm.
  double tol = 1e-9;
  int max_iterations = 2000;
};

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;
};

template <int C>
using SpectralOperator = std::function<Spectrum<C>(const Spectrum<C>&)>;

namespace detail {

template <int C>
double dot_re(const Spectrum<C>& a, const Spectrum<C>& b) {
  double acc = 0.0;
  for (int c = 0; c < C; ++c) {
    const cplx* x = a.data(c);
    const cplx* y = b.data(c);
    for (std::size_t i = 0; i < a.size(); ++i) acc += x[i].real() * y[i].real() + x[i].imag() * y[i].imag();
  }
  return acc;
}

}  // namespace detail

/// Preconditioned conjugate gradients for a Hermitian positive definite
/// operator acting on Fourier coefficients. Stops when
/// sqrt(r^H P r / b^H P b) <= tol, where P is the preconditioner. The
/// recurrence residual is confirmed against the true residual b - A x before
/// returning; a mismatch restarts the iteration from the current iterate.
/// Throws NoConvergence when max_iterations is exhausted.
template <int C>
SolveStats pcg(const SpectralOperator<C>& apply_a, const SpectralOperator<C>& apply_p,
               const Spectrum<C>& b, Spectrum<C>& x, const SolveOptions& opt) {
  SolveStats stats;
  const Spectrum<C> pb = apply_p(b);
  const double bnorm2 = detail::dot_re(b, pb);
  if (!(bnorm2 > 0.0)) {
    x = Spectrum<C>(b.grid());
    return stats;
  }
  if (x.size() != b.size()) x = Spectrum<C>(b.grid());

  Spectrum<C> r = b - apply_a(x);
  int it = 0;
  double rel = 0.0;
  for (int restart = 0; restart < 4; ++restart) {
    Spectrum<C> z = apply_p(r);
    double rz = detail::dot_re(r, z);
    rel = std::sqrt(std::max(rz, 0.0) / bnorm2);
    if (rel <= opt.tol) break;
    Spectrum<C> d = z;
    while (it < opt.max_iterations) {
      ++it;
      const Spectrum<C> ad = apply_a(d);
      const double dad = detail::dot_re(d, ad);
      if (!(dad > 0.0)) break;
      const double alpha = rz / dad;
      x.axpy(alpha, d);
      r.axpy(-alpha, ad);
      z = apply_p(r);
      const double rz_new = detail::dot_re(r, z);
      rel = std::sqrt(std::max(rz_new, 0.0) / bnorm2);
      if (rel <= opt.tol) break;
      const double beta = rz_new / rz;
      rz = rz_new;
      for (int c = 0; c < C; ++c) {
        cplx* dp = d.data(c);
        const cplx* zp = z.data(c);
        for (std::size_t i = 0; i < d.size(); ++i) dp[i] = zp[i] + beta * dp[i];
      }
    }
    // confirm with the true residual
    r = b - apply_a(x);
    const Spectrum<C> pr = apply_p(r);
    rel = std::sqrt(std::max(detail::dot_re(r, pr), 0.0) / bnorm2);
    if (rel <= opt.tol || it >= opt.max_iterations) break;
  }
  stats.iterations = it;
  stats.residual = rel;
  if (rel > opt.tol) throw NoConvergence(it, rel);
  return stats;
}

}  // namespace hommax
