#include "hommax/smoothing.hpp"

#include "hommax/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <complex>

namespace hommax {

namespace {

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace

SteklovMultiplier steklov_multiplier(const LatticeSpec& lattice, const GridSpec& grid, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidParams("smoothing parameter eps must be positive");
  SteklovMultiplier m{eps, lattice, grid, std::vector<double>(grid.size())};
  const auto& fr = frequencies(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = 1.0;
    for (int j = 0; j < 3; ++j) v *= sinc(0.5 * eps * lattice.basis[j].dot(fr.k[i]));
    m.values[i] = v;
  }
  m.values[0] = 1.0;
  return m;
}

double steklov_symbol_quadrature(const LatticeSpec& lattice, const Vec3& k, double eps) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  std::complex<double> total = 1.0;
  for (int j = 0; j < 3; ++j) {
    const double phase = eps * lattice.basis[j].dot(k);
    // enough panels that each spans well under one oscillation
    const int panels = 1 + static_cast<int>(std::ceil(std::abs(phase) / 4.0));
    std::complex<double> acc = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double lo = -0.5 + static_cast<double>(p) / panels;
      const double hi = lo + 1.0 / panels;
      const double re = Rule::integrate([&](double t) { return std::cos(phase * t); }, lo, hi);
      const double im = Rule::integrate([&](double t) { return -std::sin(phase * t); }, lo, hi);
      acc += std::complex<double>(re, im);
    }
    total *= acc;
  }
  return total.real();
}

template <int C>
Spectrum<C> steklov_apply(const Spectrum<C>& u, const SteklovMultiplier& mult) {
  if (!u.grid().same_shape(mult.grid)) throw GridMismatch("field and smoothing multiplier grids differ");
  Spectrum<C> out = u;
  for (int c = 0; c < C; ++c) {
    cplx* d = out.data(c);
    for (std::size_t i = 0; i < out.size(); ++i) d[i] *= mult.values[i];
  }
  return out;
}

template <int C>
Field<C> steklov_apply(const Field<C>& u, const SteklovMultiplier& mult) {
  return to_field(steklov_apply(to_spectrum(u), mult));
}

template Field<1> steklov_apply<1>(const Field<1>&, const SteklovMultiplier&);
template Field<3> steklov_apply<3>(const Field<3>&, const SteklovMultiplier&);
template Field<9> steklov_apply<9>(const Field<9>&, const SteklovMultiplier&);
template Spectrum<1> steklov_apply<1>(const Spectrum<1>&, const SteklovMultiplier&);
template Spectrum<3> steklov_apply<3>(const Spectrum<3>&, const SteklovMultiplier&);
template Spectrum<9> steklov_apply<9>(const Spectrum<9>&, const SteklovMultiplier&);

}  // namespace hommax
