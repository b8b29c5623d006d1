#include "hommax/lattice.hpp"

#include "hommax/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hommax {

Mat3 LatticeSpec::basis_matrix() const {
  Mat3 a;
  for (int j = 0; j < 3; ++j) a.col(j) = basis[j];
  return a;
}

bool LatticeSpec::orthogonal(double tol) const {
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double scale = basis[i].norm() * basis[j].norm();
      if (std::abs(basis[i].dot(basis[j])) > tol * scale) return false;
    }
  }
  return true;
}

LatticeSpec make_lattice(const std::array<Vec3, 3>& basis) {
  LatticeSpec lat;
  lat.basis = basis;
  const Mat3 a = lat.basis_matrix();
  const double det = a.determinant();
  const double scale = basis[0].norm() * basis[1].norm() * basis[2].norm();
  if (!(std::abs(det) >= 1e-12 * scale) || scale == 0.0) {
    throw DegenerateBasis("lattice basis is degenerate (|det| = " + std::to_string(std::abs(det)) +
                          ")");
  }
  // Rows of 2 pi A^{-1} are the dual vectors.
  const Mat3 b = 2.0 * std::numbers::pi * a.inverse();
  for (int l = 0; l < 3; ++l) lat.dual[l] = b.row(l).transpose();
  lat.cell_volume = std::abs(det);
  lat.r0 = 0.5 * std::min({lat.dual[0].norm(), lat.dual[1].norm(), lat.dual[2].norm()});

  // Vertex differences are sum s_j a_j with s_j in {-1, 0, 1}.
  double diam = 0.0;
  for (int s0 = -1; s0 <= 1; ++s0)
    for (int s1 = -1; s1 <= 1; ++s1)
      for (int s2 = -1; s2 <= 1; ++s2)
        diam = std::max(diam, (s0 * basis[0] + s1 * basis[1] + s2 * basis[2]).norm());
  lat.r1 = 0.5 * diam;
  return lat;
}

LatticeSpec cubic_lattice(double side) {
  return make_lattice({Vec3(side, 0, 0), Vec3(0, side, 0), Vec3(0, 0, side)});
}

Vec3 GridSpec::fractional(std::size_t idx) const {
  const auto i = unravel(idx);
  return Vec3(-0.5 + static_cast<double>(i[0]) / n[0], -0.5 + static_cast<double>(i[1]) / n[1],
              -0.5 + static_cast<double>(i[2]) / n[2]);
}

std::array<int, 3> GridSpec::modes(std::size_t idx) const {
  const auto i = unravel(idx);
  return {mode(0, i[0]), mode(1, i[1]), mode(2, i[2])};
}

bool GridSpec::is_nyquist(std::size_t idx) const {
  const auto m = modes(idx);
  for (int j = 0; j < 3; ++j)
    if (m[j] == -n[j] / 2) return true;
  return false;
}

Vec3 GridSpec::wave_vector(std::size_t idx) const {
  const auto m = modes(idx);
  return lattice.wave_vector(Vec3(m[0], m[1], m[2]));
}

bool GridSpec::same_shape(const GridSpec& other) const {
  if (n != other.n) return false;
  for (int j = 0; j < 3; ++j)
    if ((lattice.basis[j] - other.lattice.basis[j]).norm() > 1e-14 * lattice.basis[j].norm())
      return false;
  return true;
}

GridSpec make_grid(const LatticeSpec& lattice, std::array<int, 3> n) {
  for (int j = 0; j < 3; ++j) {
    if (n[j] < 4 || n[j] % 2 != 0) {
      throw InvalidGrid("grid size along axis " + std::to_string(j + 1) +
                        " must be even and >= 4, got " + std::to_string(n[j]));
    }
  }
  return GridSpec{n, lattice};
}

std::vector<Vec3> frequency_set(const GridSpec& grid) {
  std::vector<Vec3> out(grid.size());
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = grid.wave_vector(idx);
  return out;
}

}  // namespace hommax
