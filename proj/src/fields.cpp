#include "hommax/fields.hpp"

#include "hommax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

namespace hommax {

namespace {

constexpr cplx kI{0.0, 1.0};

GridSpec refined(const GridSpec& g, int factor) {
  return GridSpec{{g.n[0] * factor, g.n[1] * factor, g.n[2] * factor}, g.lattice};
}

// Per-axis redistribution of Fourier coefficients between grid sizes.
struct AxisMap {
  // For every source index: up to two (target index, weight) pairs.
  std::vector<std::array<std::pair<int, double>, 2>> entries;
  std::vector<int> counts;
};

AxisMap axis_map(int n_src, int n_dst) {
  AxisMap map;
  map.entries.resize(n_src);
  map.counts.assign(n_src, 0);
  auto wrap = [n_dst](int m) { return m < 0 ? m + n_dst : m; };
  for (int i = 0; i < n_src; ++i) {
    const int m = i < n_src / 2 ? i : i - n_src;
    auto& e = map.entries[i];
    int& c = map.counts[i];
    if (n_dst == n_src) {
      e[c++] = {i, 1.0};
    } else if (n_dst > n_src) {
      if (m == -n_src / 2) {
        e[c++] = {wrap(m), 0.5};
        e[c++] = {wrap(-m), 0.5};
      } else {
        e[c++] = {wrap(m), 1.0};
      }
    } else {
      if (std::abs(m) < n_dst / 2) {
        e[c++] = {wrap(m), 1.0};
      } else if (std::abs(m) == n_dst / 2) {
        e[c++] = {wrap(-n_dst / 2), 1.0};
      }
    }
  }
  return map;
}

template <int C, class Tag>
void require_same(const GridArray<C, Tag>& a, const GridSpec& g) {
  if (!a.grid().same_shape(g)) throw GridMismatch("fields live on different grids");
}

}  // namespace

// ---------------------------------------------------------------- transforms

template <int C>
Spectrum<C> to_spectrum(const Field<C>& f) {
  Spectrum<C> s(f.grid());
  const double scale = 1.0 / static_cast<double>(f.size());
  for (int c = 0; c < C; ++c) {
    fft_forward(f.grid().n, f.data(c), s.data(c));
    cplx* d = s.data(c);
    for (std::size_t i = 0; i < s.size(); ++i) d[i] *= scale;
  }
  s.set_real_flag(f.real_flag());
  return s;
}

template <int C>
Field<C> to_field(const Spectrum<C>& s) {
  Field<C> f(s.grid());
  for (int c = 0; c < C; ++c) fft_backward(s.grid().n, s.data(c), f.data(c));
  if (s.real_flag()) make_real(f);
  return f;
}

const Frequencies& frequencies(const GridSpec& grid) {
  using Key = std::tuple<std::array<int, 3>, std::array<double, 9>>;
  static std::mutex mutex;
  static std::map<Key, Frequencies> cache;
  std::array<double, 9> b{};
  for (int j = 0; j < 3; ++j)
    for (int c = 0; c < 3; ++c) b[3 * j + c] = grid.lattice.dual[j][c];
  const Key key{grid.n, b};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Frequencies fr;
  fr.k.resize(grid.size());
  fr.nyquist.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fr.k[i] = grid.wave_vector(i);
    fr.nyquist[i] = grid.is_nyquist(i) ? 1 : 0;
  }
  return cache.emplace(key, std::move(fr)).first->second;
}

// ------------------------------------------------------------------ calculus

Spectrum<3> gradient(const Spectrum<1>& f) {
  const auto& fr = frequencies(f.grid());
  Spectrum<3> out(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (fr.nyquist[i]) continue;
    const cplx v = kI * f(0, i);
    for (int l = 0; l < 3; ++l) out(l, i) = fr.k[i][l] * v;
  }
  out.set_real_flag(f.real_flag());
  return out;
}

Spectrum<1> divergence(const Spectrum<3>& v) {
  const auto& fr = frequencies(v.grid());
  Spectrum<1> out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (fr.nyquist[i]) continue;
    const Vec3& k = fr.k[i];
    out(0, i) = kI * (k[0] * v(0, i) + k[1] * v(1, i) + k[2] * v(2, i));
  }
  out.set_real_flag(v.real_flag());
  return out;
}

Spectrum<3> curl(const Spectrum<3>& v) {
  const auto& fr = frequencies(v.grid());
  Spectrum<3> out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (fr.nyquist[i]) continue;
    const Vec3& k = fr.k[i];
    out(0, i) = kI * (k[1] * v(2, i) - k[2] * v(1, i));
    out(1, i) = kI * (k[2] * v(0, i) - k[0] * v(2, i));
    out(2, i) = kI * (k[0] * v(1, i) - k[1] * v(0, i));
  }
  out.set_real_flag(v.real_flag());
  return out;
}

VectorField gradient(const ScalarField& f) { return to_field(gradient(to_spectrum(f))); }
ScalarField divergence(const VectorField& v) { return to_field(divergence(to_spectrum(v))); }
VectorField curl(const VectorField& v) { return to_field(curl(to_spectrum(v))); }

ScalarField partial(const ScalarField& f, int l) {
  auto s = to_spectrum(f);
  const auto& fr = frequencies(f.grid());
  for (std::size_t i = 0; i < s.size(); ++i)
    s(0, i) = fr.nyquist[i] ? cplx{} : kI * fr.k[i][l] * s(0, i);
  return to_field(s);
}

// -------------------------------------------------------------- reductions

template <int C>
std::array<cplx, C> mean(const Field<C>& f) {
  std::array<cplx, C> m{};
  const double scale = 1.0 / static_cast<double>(f.size());
  for (int c = 0; c < C; ++c) {
    cplx acc{};
    const cplx* d = f.data(c);
    for (std::size_t i = 0; i < f.size(); ++i) acc += d[i];
    m[c] = acc * scale;
  }
  return m;
}

cplx mean_scalar(const ScalarField& f) { return mean(f)[0]; }

Vec3c mean_vector(const VectorField& f) {
  const auto m = mean(f);
  return Vec3c(m[0], m[1], m[2]);
}

Mat3c mean_matrix(const MatrixField& f) {
  const auto m = mean(f);
  Mat3c out;
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) out(r, s) = m[3 * r + s];
  return out;
}

template <int C>
double l2_norm(const Field<C>& f) {
  double acc = 0.0;
  for (int c = 0; c < C; ++c) {
    const cplx* d = f.data(c);
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::norm(d[i]);
  }
  return std::sqrt(f.grid().lattice.cell_volume * acc / static_cast<double>(f.size()));
}

template <int C>
cplx inner(const Field<C>& f, const Field<C>& g) {
  require_same(f, g.grid());
  cplx acc{};
  for (int c = 0; c < C; ++c) {
    const cplx* a = f.data(c);
    const cplx* b = g.data(c);
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::conj(a[i]) * b[i];
  }
  return acc * (f.grid().lattice.cell_volume / static_cast<double>(f.size()));
}

template <int C>
double sup_norm(const Field<C>& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += std::norm(f(c, i));
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

template <int C>
bool is_real(const Field<C>& f, double tol) {
  double sup = 0.0, im = 0.0;
  for (int c = 0; c < C; ++c)
    for (std::size_t i = 0; i < f.size(); ++i) {
      sup = std::max(sup, std::abs(f(c, i)));
      im = std::max(im, std::abs(f(c, i).imag()));
    }
  return im <= tol * sup;
}

template <int C>
void make_real(Field<C>& f) {
  for (int c = 0; c < C; ++c) {
    cplx* d = f.data(c);
    for (std::size_t i = 0; i < f.size(); ++i) d[i] = cplx(d[i].real(), 0.0);
  }
  f.set_real_flag(true);
}

// ------------------------------------------------------- pointwise algebra

ScalarField component(const VectorField& v, int c) {
  ScalarField s(v.grid());
  std::copy(v.data(c), v.data(c) + v.size(), s.data(0));
  s.set_real_flag(v.real_flag());
  return s;
}

VectorField column(const MatrixField& m, int j) {
  VectorField v(m.grid());
  for (int r = 0; r < 3; ++r) std::copy(m.data(3 * r + j), m.data(3 * r + j) + m.size(), v.data(r));
  v.set_real_flag(m.real_flag());
  return v;
}

void set_column(MatrixField& m, int j, const VectorField& v) {
  require_same(v, m.grid());
  for (int r = 0; r < 3; ++r) std::copy(v.data(r), v.data(r) + v.size(), m.data(3 * r + j));
}

MatrixField transpose(const MatrixField& m) {
  MatrixField t(m.grid());
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) std::copy(m.data(3 * r + s), m.data(3 * r + s) + m.size(), t.data(3 * s + r));
  t.set_real_flag(m.real_flag());
  return t;
}

VectorField apply(std::span<const Mat3> a, const VectorField& v) {
  if (a.size() != v.size()) throw GridMismatch("coefficient and field sizes differ");
  VectorField out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Mat3& m = a[i];
    const cplx x = v(0, i), y = v(1, i), z = v(2, i);
    for (int r = 0; r < 3; ++r) out(r, i) = m(r, 0) * x + m(r, 1) * y + m(r, 2) * z;
  }
  out.set_real_flag(v.real_flag());
  return out;
}

VectorField apply(const Mat3c& a, const VectorField& v) {
  VectorField out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) out.set_vec(i, a * v.vec(i));
  out.set_real_flag(v.real_flag() && a.imag().isZero(0.0));
  return out;
}

VectorField multiply(const MatrixField& m, const VectorField& v) {
  require_same(m, v.grid());
  VectorField out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) out.set_vec(i, m.mat(i) * v.vec(i));
  out.set_real_flag(m.real_flag() && v.real_flag());
  return out;
}

VectorField multiply_transpose(const MatrixField& m, const VectorField& v) {
  require_same(m, v.grid());
  VectorField out(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) out.set_vec(i, m.mat(i).transpose() * v.vec(i));
  out.set_real_flag(m.real_flag() && v.real_flag());
  return out;
}

VectorField multiply(const ScalarField& s, const VectorField& v) {
  require_same(s, v.grid());
  VectorField out(v.grid());
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < v.size(); ++i) out(c, i) = s(0, i) * v(c, i);
  out.set_real_flag(s.real_flag() && v.real_flag());
  return out;
}

ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  require_same(a, b.grid());
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out(0, i) = a(0, i) * b(0, i);
  out.set_real_flag(a.real_flag() && b.real_flag());
  return out;
}

MatrixField from_matrices(const GridSpec& grid, std::span<const Mat3> a) {
  if (a.size() != grid.size()) throw GridMismatch("matrix array does not match grid size");
  MatrixField m(grid);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) m(3 * r + s, i) = a[i](r, s);
  m.set_real_flag(true);
  return m;
}

template <int C>
Spectrum<C> resize_spectrum(const Spectrum<C>& s, const GridSpec& target) {
  Spectrum<C> out(target);
  const auto& src = s.grid();
  const AxisMap m0 = axis_map(src.n[0], target.n[0]);
  const AxisMap m1 = axis_map(src.n[1], target.n[1]);
  const AxisMap m2 = axis_map(src.n[2], target.n[2]);
  for (int c = 0; c < C; ++c) {
    for (int i0 = 0; i0 < src.n[0]; ++i0)
      for (int a = 0; a < m0.counts[i0]; ++a)
        for (int i1 = 0; i1 < src.n[1]; ++i1)
          for (int b = 0; b < m1.counts[i1]; ++b)
            for (int i2 = 0; i2 < src.n[2]; ++i2)
              for (int d = 0; d < m2.counts[i2]; ++d) {
                const auto [t0, w0] = m0.entries[i0][a];
                const auto [t1, w1] = m1.entries[i1][b];
                const auto [t2, w2] = m2.entries[i2][d];
                out(c, target.index(t0, t1, t2)) += (w0 * w1 * w2) * s(c, src.index(i0, i1, i2));
              }
  }
  out.set_real_flag(s.real_flag());
  return out;
}

namespace {

template <int C>
Field<C> upsample(const Field<C>& f, const GridSpec& fine) {
  return to_field(resize_spectrum(to_spectrum(f), fine));
}

template <int C>
Field<C> downsample(const Field<C>& f, const GridSpec& coarse) {
  return to_field(resize_spectrum(to_spectrum(f), coarse));
}

// out_r = sum_s m_{rs} v_s (or m_{sr} when transposed), one padded matrix
// component at a time to bound memory.
VectorField dealiased_matvec(const MatrixField& m, const VectorField& v, bool transposed) {
  require_same(m, v.grid());
  // identically zero components contribute nothing and are skipped
  std::array<bool, 9> live{};
  for (int c = 0; c < 9; ++c) live[c] = std::any_of(m.data(c), m.data(c) + m.size(), [](cplx x) { return x != 0.0; });
  if (std::none_of(live.begin(), live.end(), [](bool b) { return b; })) {
    VectorField zero(v.grid());
    if (m.real_flag() && v.real_flag()) make_real(zero);
    return zero;
  }
  const GridSpec fine = refined(v.grid(), 2);
  const VectorField vf = upsample(v, fine);
  VectorField acc(fine);
  for (int r = 0; r < 3; ++r)
    for (int s = 0; s < 3; ++s) {
      const int comp = transposed ? 3 * s + r : 3 * r + s;
      if (!live[comp]) continue;
      ScalarField mc(m.grid());
      std::copy(m.data(comp), m.data(comp) + m.size(), mc.data(0));
      const ScalarField mf = upsample(mc, fine);
      for (std::size_t i = 0; i < fine.size(); ++i) acc(r, i) += mf(0, i) * vf(s, i);
    }
  VectorField out = downsample(acc, v.grid());
  if (m.real_flag() && v.real_flag()) make_real(out);
  return out;
}

}  // namespace

ScalarField dealiased_multiply(const ScalarField& a, const ScalarField& b) {
  require_same(a, b.grid());
  const GridSpec fine = refined(a.grid(), 2);
  ScalarField prod = multiply(upsample(a, fine), upsample(b, fine));
  ScalarField out = downsample(prod, a.grid());
  if (a.real_flag() && b.real_flag()) make_real(out);
  return out;
}

VectorField dealiased_multiply(const ScalarField& s, const VectorField& v) {
  require_same(s, v.grid());
  const GridSpec fine = refined(v.grid(), 2);
  VectorField prod = multiply(upsample(s, fine), upsample(v, fine));
  VectorField out = downsample(prod, v.grid());
  if (s.real_flag() && v.real_flag()) make_real(out);
  return out;
}

VectorField dealiased_multiply(const MatrixField& m, const VectorField& v) {
  return dealiased_matvec(m, v, false);
}

VectorField dealiased_multiply_transpose(const MatrixField& m, const VectorField& v) {
  return dealiased_matvec(m, v, true);
}

// ---------------------------------------------------------- rescaling

namespace {

// Cell index sampled by torus index I along one axis: the torus node
// t = -1/2 + I/N maps to the cell coordinate n t, i.e. cell index
// n_c (n t + 1/2) = n_c (2 n I - n N + N) / (2 N) modulo n_c.
bool axis_commensurate(int n_cell, int n_torus, int n) {
  for (int I = 0; I < 2; ++I) {
    const long long num = static_cast<long long>(n_cell) * (2LL * n * I - static_cast<long long>(n) * n_torus + n_torus);
    if (num % (2LL * n_torus) != 0) return false;
  }
  return true;
}

std::vector<int> axis_indices(int n_cell, int n_torus, int n) {
  std::vector<int> idx(n_torus);
  for (int I = 0; I < n_torus; ++I) {
    const long long num = static_cast<long long>(n_cell) * (2LL * n * I - static_cast<long long>(n) * n_torus + n_torus);
    long long c = (num / (2LL * n_torus)) % n_cell;
    if (c < 0) c += n_cell;
    idx[I] = static_cast<int>(c);
  }
  return idx;
}

std::vector<std::size_t> torus_to_cell(const GridSpec& cell, const GridSpec& torus, int n_periods) {
  if (!commensurate(cell, torus, n_periods))
    throw GridMismatch("cell grid " + std::to_string(cell.n[0]) + "x" + std::to_string(cell.n[1]) + "x" +
                       std::to_string(cell.n[2]) + " cannot be sampled exactly at eps = 1/" +
                       std::to_string(n_periods) + " on the torus grid");
  std::array<std::vector<int>, 3> ax;
  for (int j = 0; j < 3; ++j) ax[j] = axis_indices(cell.n[j], torus.n[j], n_periods);
  std::vector<std::size_t> map(torus.size());
  for (std::size_t t = 0; t < torus.size(); ++t) {
    const auto i = torus.unravel(t);
    map[t] = cell.index(ax[0][i[0]], ax[1][i[1]], ax[2][i[2]]);
  }
  return map;
}

}  // namespace

bool commensurate(const GridSpec& cell, const GridSpec& torus, int n_periods) {
  if (n_periods < 1) return false;
  for (int j = 0; j < 3; ++j)
    if ((cell.lattice.basis[j] - torus.lattice.basis[j]).norm() > 1e-14 * torus.lattice.basis[j].norm())
      return false;
  for (int j = 0; j < 3; ++j)
    if (!axis_commensurate(cell.n[j], torus.n[j], n_periods)) return false;
  return true;
}

template <int C>
Field<C> rescale_to_torus(const Field<C>& cell, const GridSpec& torus, int n_periods) {
  const auto map = torus_to_cell(cell.grid(), torus, n_periods);
  Field<C> out(torus);
  for (int c = 0; c < C; ++c)
    for (std::size_t t = 0; t < map.size(); ++t) out(c, t) = cell(c, map[t]);
  out.set_real_flag(cell.real_flag());
  return out;
}

std::vector<Mat3> rescale_to_torus(std::span<const Mat3> cell, const GridSpec& cell_grid,
                                   const GridSpec& torus, int n_periods) {
  if (cell.size() != cell_grid.size()) throw GridMismatch("matrix array does not match the cell grid");
  const auto map = torus_to_cell(cell_grid, torus, n_periods);
  std::vector<Mat3> out(map.size());
  for (std::size_t t = 0; t < map.size(); ++t) out[t] = cell[map[t]];
  return out;
}

// ---------------------------------------------------------- coefficients

Mat3 spd_sqrt(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  return es.operatorSqrt();
}

Mat3 spd_inv_sqrt(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(a);
  return es.operatorInverseSqrt();
}

CoefficientField::CoefficientField(const GridSpec& grid, std::vector<Mat3> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw GridMismatch("coefficient has " + std::to_string(values_.size()) + " samples, grid has " +
                       std::to_string(grid_.size()));
  const std::size_t n = values_.size();
  inv_.resize(n);
  sqrt_.resize(n);
  inv_sqrt_.resize(n);
  lambda_min_ = std::numeric_limits<double>::infinity();
  lambda_max_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Mat3& a = values_[i];
    if (!a.allFinite()) throw DegenerateCoefficient("non-finite coefficient at node " + std::to_string(i));
    const double scale = a.norm();
    if ((a - a.transpose()).norm() > 1e-12 * scale)
      throw DegenerateCoefficient("coefficient is not symmetric at node " + std::to_string(i));
    Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a + a.transpose()));
    const Vec3 lam = es.eigenvalues();
    if (lam[0] < 1e-8)
      throw DegenerateCoefficient("coefficient eigenvalue " + std::to_string(lam[0]) +
                                  " below 1e-8 at node " + std::to_string(i));
    const Mat3& q = es.eigenvectors();
    inv_[i] = q * lam.cwiseInverse().asDiagonal() * q.transpose();
    sqrt_[i] = q * lam.cwiseSqrt().asDiagonal() * q.transpose();
    inv_sqrt_[i] = q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
    lambda_min_ = std::min(lambda_min_, lam[0]);
    lambda_max_ = std::max(lambda_max_, lam[2]);
  }
}

Mat3 CoefficientField::mean() const {
  Mat3 acc = Mat3::Zero();
  for (const auto& a : values_) acc += a;
  return acc / static_cast<double>(values_.size());
}

Mat3 CoefficientField::harmonic_mean() const {
  Mat3 acc = Mat3::Zero();
  for (const auto& a : inv_) acc += a;
  acc /= static_cast<double>(inv_.size());
  return acc.inverse();
}

bool CoefficientField::is_constant() const {
  const Mat3& a0 = values_.front();
  const double tol = 1e-14 * a0.norm();
  return std::all_of(values_.begin(), values_.end(),
                     [&](const Mat3& a) { return (a - a0).norm() <= tol; });
}

Mat3 harmonic_mean_matrix(std::span<const Mat3> a) {
  Mat3 acc = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    Eigen::FullPivLU<Mat3> lu(a[i]);
    if (!lu.isInvertible() || !a[i].allFinite())
      throw SingularPoint("matrix is not invertible at node " + std::to_string(i));
    acc += lu.inverse();
  }
  acc /= static_cast<double>(a.size());
  Eigen::FullPivLU<Mat3> lu(acc);
  if (!lu.isInvertible()) throw SingularPoint("mean of inverses is singular");
  return lu.inverse();
}

Mat3 harmonic_mean_matrix(const CoefficientField& a) { return a.harmonic_mean(); }

// ------------------------------------------------------ instantiations

#define HOMMAX_INSTANTIATE(C)                                                      \
  template Spectrum<C> to_spectrum<C>(const Field<C>&);                            \
  template Field<C> to_field<C>(const Spectrum<C>&);                               \
  template std::array<cplx, C> mean<C>(const Field<C>&);                           \
  template double l2_norm<C>(const Field<C>&);                                     \
  template cplx inner<C>(const Field<C>&, const Field<C>&);                        \
  template double sup_norm<C>(const Field<C>&);                                    \
  template bool is_real<C>(const Field<C>&, double);                               \
  template void make_real<C>(Field<C>&);                                           \
  template Spectrum<C> resize_spectrum<C>(const Spectrum<C>&, const GridSpec&);   \
  template Field<C> rescale_to_torus<C>(const Field<C>&, const GridSpec&, int);

HOMMAX_INSTANTIATE(1)
HOMMAX_INSTANTIATE(3)
HOMMAX_INSTANTIATE(9)

#undef HOMMAX_INSTANTIATE

}  // namespace hommax
