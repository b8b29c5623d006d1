#pragma once

#include "hommax/cg.hpp"
#include "hommax/fields.hpp"

#include <span>
#include <vector>

namespace hommax {

/// The symmetrized second-order operator
///
///   g -> p^{-1/2} curl E curl p^{-1/2} g - p^{1/2} grad div p^{1/2} g
///        + shift g + (mean_term ? mean(g) : 0)
///
/// on Fourier coefficients, for pointwise SPD p and E. With shift = 1 this is
/// the Maxwell resolvent operator; with the mean term it is the (uniquely
/// solvable) vector cell operator. Both variants are Hermitian positive
/// definite on the non-Nyquist modes.
class CurlDivOperator {
 public:
  /// p_sqrt, p_inv_sqrt and e must have grid length; they are copied.
  CurlDivOperator(const GridSpec& grid, std::span<const Mat3> p_sqrt, std::span<const Mat3> p_inv_sqrt,
                  std::span<const Mat3> e, double shift, bool mean_term);

  const GridSpec& grid() const { return grid_; }
  Spectrum<3> apply(const Spectrum<3>& g) const;
  /// Exact inverse of the constant-coefficient symbol built from mean(p^{1/2}),
  /// mean(p^{-1/2}) and mean(E); pseudo-inverse where the symbol is singular.
  Spectrum<3> precondition(const Spectrum<3>& r) const;
  /// Solves apply(x) = b by PCG, starting from x (zero if empty).
  SolveStats solve(const Spectrum<3>& b, Spectrum<3>& x, const SolveOptions& opt) const;

  /// The per-mode constant-coefficient symbol (before inversion).
  Mat3 symbol(const Vec3& k, bool nyquist, bool zero_mode) const;

  std::span<const Mat3> p_sqrt() const { return p_sqrt_; }
  std::span<const Mat3> p_inv_sqrt() const { return p_inv_sqrt_; }

 private:
  GridSpec grid_;
  std::vector<Mat3> p_sqrt_, p_inv_sqrt_, e_;
  double shift_;
  bool mean_term_;
  Mat3 m_, m_inv_, e_bar_;
  std::vector<Mat3> precond_;
};

/// 3x3 cross-product matrix: cross_matrix(k) v = k x v.
Mat3 cross_matrix(const Vec3& k);

}  // namespace hommax
