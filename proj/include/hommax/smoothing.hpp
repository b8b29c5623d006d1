#pragma once

#include "hommax/fields.hpp"

#include <vector>

namespace hommax {

/// Fourier symbol of the Steklov average (S_eps u)(x) = |Omega|^{-1} int_Omega u(x - eps y) dy
/// on every frequency of a grid. The symbol is real and even in k.
struct SteklovMultiplier {
  double eps = 0.0;
  LatticeSpec lattice;
  GridSpec grid;
  std::vector<double> values;
};

/// Closed form prod_j sinc(eps <a_j, k> / 2), valid for every lattice since
/// the cell is a parallelepiped in the a_j coordinates. Throws InvalidParams
/// unless eps > 0.
SteklovMultiplier steklov_multiplier(const LatticeSpec& lattice, const GridSpec& grid, double eps);

/// Same symbol at one frequency by composite Gauss-Legendre quadrature of
/// int_{[-1/2,1/2]^3} exp(-i eps sum_j t_j <a_j, k>) dt, one axis at a time.
double steklov_symbol_quadrature(const LatticeSpec& lattice, const Vec3& k, double eps);

/// Multiplies the Fourier coefficients of u by the symbol. Throws GridMismatch.
template <int C>
Field<C> steklov_apply(const Field<C>& u, const SteklovMultiplier& mult);
template <int C>
Spectrum<C> steklov_apply(const Spectrum<C>& u, const SteklovMultiplier& mult);

}  // namespace hommax
