#pragma once

#include "hommax/errors.hpp"
#include "hommax/fft.hpp"
#include "hommax/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hommax {

using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

struct NodalTag {};
struct ModalTag {};

/// C complex components per grid node, stored as C separate aligned arrays.
/// With NodalTag the entries are samples, with ModalTag they are Fourier
/// coefficients in FFT order normalized so that entry 0 is the mean.
template <int C, class Tag>
class GridArray {
 public:
  static constexpr int components = C;

  GridArray() = default;
  explicit GridArray(const GridSpec& grid) : grid_(grid) {
    for (auto& v : data_) v.assign(grid.size(), cplx{});
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }

  cplx* data(int c) { return data_[c].data(); }
  const cplx* data(int c) const { return data_[c].data(); }
  cplx& operator()(int c, std::size_t i) { return data_[c][i]; }
  cplx operator()(int c, std::size_t i) const { return data_[c][i]; }

  /// Set when the represented function is known to be real valued.
  bool real_flag() const { return real_; }
  void set_real_flag(bool r) { real_ = r; }

  Vec3c vec(std::size_t i) const
    requires(C == 3)
  {
    return Vec3c(data_[0][i], data_[1][i], data_[2][i]);
  }
  void set_vec(std::size_t i, const Vec3c& v)
    requires(C == 3)
  {
    for (int c = 0; c < 3; ++c) data_[c][i] = v[c];
  }
  /// Component (r, s) is stored at index 3 r + s.
  Mat3c mat(std::size_t i) const
    requires(C == 9)
  {
    Mat3c m;
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) m(r, s) = data_[3 * r + s][i];
    return m;
  }
  void set_mat(std::size_t i, const Mat3c& m)
    requires(C == 9)
  {
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) data_[3 * r + s][i] = m(r, s);
  }

  GridArray& operator+=(const GridArray& o) {
    check(o);
    for (int c = 0; c < C; ++c)
      for (std::size_t i = 0; i < size(); ++i) data_[c][i] += o.data_[c][i];
    real_ = real_ && o.real_;
    return *this;
  }
  GridArray& operator-=(const GridArray& o) {
    check(o);
    for (int c = 0; c < C; ++c)
      for (std::size_t i = 0; i < size(); ++i) data_[c][i] -= o.data_[c][i];
    real_ = real_ && o.real_;
    return *this;
  }
  GridArray& operator*=(cplx s) {
    for (auto& v : data_)
      for (auto& x : v) x *= s;
    if (s.imag() != 0.0) real_ = false;
    return *this;
  }
  /// this += s * o
  GridArray& axpy(cplx s, const GridArray& o) {
    check(o);
    for (int c = 0; c < C; ++c)
      for (std::size_t i = 0; i < size(); ++i) data_[c][i] += s * o.data_[c][i];
    real_ = real_ && o.real_ && s.imag() == 0.0;
    return *this;
  }

  friend GridArray operator+(GridArray a, const GridArray& b) { return a += b; }
  friend GridArray operator-(GridArray a, const GridArray& b) { return a -= b; }
  friend GridArray operator*(cplx s, GridArray a) { return a *= s; }

 private:
  void check(const GridArray& o) const;

  GridSpec grid_{};
  std::array<CVec, C> data_{};
  bool real_ = false;
};

template <int C, class Tag>
void GridArray<C, Tag>::check(const GridArray& o) const {
  if (!grid_.same_shape(o.grid_)) throw GridMismatch("fields live on different grids");
}

template <int C>
using Field = GridArray<C, NodalTag>;
template <int C>
using Spectrum = GridArray<C, ModalTag>;

using ScalarField = Field<1>;
using VectorField = Field<3>;
using MatrixField = Field<9>;

// ---------------------------------------------------------------- transforms

template <int C>
Spectrum<C> to_spectrum(const Field<C>& f);
template <int C>
Field<C> to_field(const Spectrum<C>& s);

/// Wave vectors of every FFT index plus a Nyquist mask; cached per grid.
struct Frequencies {
  std::vector<Vec3> k;
  std::vector<std::uint8_t> nyquist;
};
const Frequencies& frequencies(const GridSpec& grid);

// ------------------------------------------------------------------ calculus
//
// All derivatives act on the trigonometric interpolant; the symbol of d/dx_l is
// i k_l with k = sum m_j b_j, and it is set to zero on Nyquist modes so that
// derivatives of real fields stay real.

Spectrum<3> gradient(const Spectrum<1>& f);
Spectrum<1> divergence(const Spectrum<3>& v);
Spectrum<3> curl(const Spectrum<3>& v);

VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
VectorField curl(const VectorField& v);
/// Cartesian partial derivative d/dx_l.
ScalarField partial(const ScalarField& f, int l);

// -------------------------------------------------------------- reductions

template <int C>
std::array<cplx, C> mean(const Field<C>& f);
cplx mean_scalar(const ScalarField& f);
Vec3c mean_vector(const VectorField& f);
Mat3c mean_matrix(const MatrixField& f);

/// L2 norm over the lattice cell of the grid (|Omega| times the grid average).
template <int C>
double l2_norm(const Field<C>& f);
/// <f, g> = integral of sum_c conj(f_c) g_c over the cell.
template <int C>
cplx inner(const Field<C>& f, const Field<C>& g);
template <int C>
double sup_norm(const Field<C>& f);

/// Largest imaginary part relative to the sup norm is below tol.
template <int C>
bool is_real(const Field<C>& f, double tol = 1e-10);
/// Drops imaginary parts and sets the real flag.
template <int C>
void make_real(Field<C>& f);

// ------------------------------------------------------- pointwise algebra

ScalarField component(const VectorField& v, int c);
VectorField column(const MatrixField& m, int j);
void set_column(MatrixField& m, int j, const VectorField& v);
MatrixField transpose(const MatrixField& m);

/// Pointwise a(x) v(x) for a real matrix array of grid length.
VectorField apply(std::span<const Mat3> a, const VectorField& v);
VectorField multiply(const MatrixField& m, const VectorField& v);
/// m(x)^T v(x) (no conjugation).
VectorField multiply_transpose(const MatrixField& m, const VectorField& v);
VectorField multiply(const ScalarField& s, const VectorField& v);
ScalarField multiply(const ScalarField& a, const ScalarField& b);
/// Constant matrix times field.
VectorField apply(const Mat3c& a, const VectorField& v);
MatrixField from_matrices(const GridSpec& grid, std::span<const Mat3> a);

// De-aliased products: both factors are zero-padded to a grid twice as fine,
// multiplied at the fine nodes and truncated back to the coarse spectrum.

ScalarField dealiased_multiply(const ScalarField& a, const ScalarField& b);
VectorField dealiased_multiply(const ScalarField& s, const VectorField& v);
VectorField dealiased_multiply(const MatrixField& m, const VectorField& v);
VectorField dealiased_multiply_transpose(const MatrixField& m, const VectorField& v);

/// Trigonometric interpolant of f on another (finer or coarser) grid with the
/// same lattice; Nyquist coefficients are split or folded symmetrically.
template <int C>
Spectrum<C> resize_spectrum(const Spectrum<C>& s, const GridSpec& target);

// ---------------------------------------------------------- rescaling

/// True when the cell grid can be sampled exactly at x / eps, eps = 1/n_periods,
/// on every torus node: both grids share the lattice and, per axis,
/// n_cell * n_periods is a multiple of the torus resolution.
bool commensurate(const GridSpec& cell, const GridSpec& torus, int n_periods);

/// f(x / eps) on the torus grid for a cell-periodic f given on the cell grid.
/// Pure index arithmetic, no interpolation; throws GridMismatch when the grids
/// are not commensurate.
template <int C>
Field<C> rescale_to_torus(const Field<C>& cell, const GridSpec& torus, int n_periods);
std::vector<Mat3> rescale_to_torus(std::span<const Mat3> cell, const GridSpec& cell_grid,
                                   const GridSpec& torus, int n_periods);

// ---------------------------------------------------------- coefficients

/// Real symmetric positive definite matrix coefficient sampled on a grid,
/// with pointwise inverse and square roots precomputed.
class CoefficientField {
 public:
  /// Throws DegenerateCoefficient on asymmetry above 1e-12 relative or an
  /// eigenvalue below 1e-8 at any node.
  CoefficientField(const GridSpec& grid, std::vector<Mat3> values);

  const GridSpec& grid() const { return grid_; }
  std::span<const Mat3> values() const { return values_; }
  std::span<const Mat3> inverse() const { return inv_; }
  std::span<const Mat3> sqrt() const { return sqrt_; }
  std::span<const Mat3> inv_sqrt() const { return inv_sqrt_; }
  const Mat3& at(std::size_t i) const { return values_[i]; }

  /// Smallest / largest pointwise eigenvalue; sup = ||a||_inf and
  /// 1 / lambda_min = ||a^{-1}||_inf.
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  bool symmetric() const { return true; }

  Mat3 mean() const;
  Mat3 harmonic_mean() const;
  MatrixField as_field() const { return from_matrices(grid_, values_); }
  /// True when all nodes carry the same matrix up to 1e-14 relative.
  bool is_constant() const;

 private:
  GridSpec grid_;
  std::vector<Mat3> values_, inv_, sqrt_, inv_sqrt_;
  double lambda_min_ = 0.0, lambda_max_ = 0.0;
};

/// (mean of a(x)^{-1})^{-1}; throws SingularPoint if some a(x) is not invertible.
Mat3 harmonic_mean_matrix(std::span<const Mat3> a);
Mat3 harmonic_mean_matrix(const CoefficientField& a);

/// Symmetric square root and inverse square root of an SPD matrix.
Mat3 spd_sqrt(const Mat3& a);
Mat3 spd_inv_sqrt(const Mat3& a);

}  // namespace hommax
