#include "hommax/curl_div.hpp"

#include "hommax/errors.hpp"

namespace hommax {

Mat3 cross_matrix(const Vec3& k) {
  Mat3 m;
  m << 0, -k[2], k[1], k[2], 0, -k[0], -k[1], k[0], 0;
  return m;
}

namespace {

Mat3 mean_of(std::span<const Mat3> a) {
  Mat3 acc = Mat3::Zero();
  for (const auto& m : a) acc += m;
  return acc / static_cast<double>(a.size());
}

Mat3 pseudo_inverse_spd(const Mat3& s) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(s);
  const Vec3 lam = es.eigenvalues();
  const double cut = 1e-12 * std::max(std::abs(lam[2]), 1e-300);
  Vec3 inv;
  for (int i = 0; i < 3; ++i) inv[i] = lam[i] > cut ? 1.0 / lam[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

CurlDivOperator::CurlDivOperator(const GridSpec& grid, std::span<const Mat3> p_sqrt,
                                 std::span<const Mat3> p_inv_sqrt, std::span<const Mat3> e, double shift,
                                 bool mean_term)
    : grid_(grid),
      p_sqrt_(p_sqrt.begin(), p_sqrt.end()),
      p_inv_sqrt_(p_inv_sqrt.begin(), p_inv_sqrt.end()),
      e_(e.begin(), e.end()),
      shift_(shift),
      mean_term_(mean_term) {
  if (p_sqrt_.size() != grid.size() || p_inv_sqrt_.size() != grid.size() || e_.size() != grid.size())
    throw GridMismatch("operator coefficients do not match the grid");
  m_ = mean_of(p_sqrt_);
  m_inv_ = mean_of(p_inv_sqrt_);
  e_bar_ = mean_of(e_);
  const auto& fr = frequencies(grid);
  precond_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    precond_[i] = pseudo_inverse_spd(symbol(fr.k[i], fr.nyquist[i] != 0, i == 0));
}

Mat3 CurlDivOperator::symbol(const Vec3& k_in, bool nyquist, bool zero_mode) const {
  const Vec3 k = nyquist ? Vec3::Zero() : k_in;
  const Mat3 kx = cross_matrix(k);
  const Vec3 mk = m_ * k;
  Mat3 s = m_inv_ * kx.transpose() * e_bar_ * kx * m_inv_ + mk * mk.transpose();
  s += shift_ * Mat3::Identity();
  if (mean_term_ && zero_mode) s += Mat3::Identity();
  return 0.5 * (s + s.transpose());
}

Spectrum<3> CurlDivOperator::apply(const Spectrum<3>& g) const {
  const VectorField gn = to_field(g);
  // curl-curl part
  const VectorField n1 = to_field(curl(to_spectrum(hommax::apply(p_inv_sqrt_, gn))));
  const VectorField n2 = to_field(curl(to_spectrum(hommax::apply(e_, n1))));
  // grad-div part
  const VectorField n3 = to_field(gradient(divergence(to_spectrum(hommax::apply(p_sqrt_, gn)))));
  VectorField out = hommax::apply(p_inv_sqrt_, n2);
  out -= hommax::apply(p_sqrt_, n3);
  Spectrum<3> s = to_spectrum(out);
  if (shift_ != 0.0) s.axpy(shift_, g);
  if (mean_term_)
    for (int c = 0; c < 3; ++c) s(c, 0) += g(c, 0);
  return s;
}

Spectrum<3> CurlDivOperator::precondition(const Spectrum<3>& r) const {
  Spectrum<3> z(r.grid());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Mat3& p = precond_[i];
    const cplx a = r(0, i), b = r(1, i), c = r(2, i);
    for (int row = 0; row < 3; ++row) z(row, i) = p(row, 0) * a + p(row, 1) * b + p(row, 2) * c;
  }
  return z;
}

SolveStats CurlDivOperator::solve(const Spectrum<3>& b, Spectrum<3>& x, const SolveOptions& opt) const {
  return pcg<3>([this](const Spectrum<3>& v) { return apply(v); },
                [this](const Spectrum<3>& v) { return precondition(v); }, b, x, opt);
}

}  // namespace hommax
