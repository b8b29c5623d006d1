#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

namespace hommax {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Periodicity lattice generated by a_1, a_2, a_3 together with its dual basis
/// (<b_l, a_j> = 2 pi delta_lj) and the cell constants.
///
/// The elementary cell is { sum t_j a_j : -1/2 <= t_j < 1/2 }. r0 is half the
/// length of the shortest dual basis vector, r1 is half the cell diameter.
struct LatticeSpec {
  std::array<Vec3, 3> basis;
  std::array<Vec3, 3> dual;
  double cell_volume = 0.0;
  double r0 = 0.0;
  double r1 = 0.0;

  /// Point with fractional coordinates t.
  Vec3 point(const Vec3& t) const {
    return t[0] * basis[0] + t[1] * basis[1] + t[2] * basis[2];
  }
  /// Wave vector sum m_j b_j.
  Vec3 wave_vector(const Vec3& m) const {
    return m[0] * dual[0] + m[1] * dual[1] + m[2] * dual[2];
  }
  /// Matrix with columns a_j.
  Mat3 basis_matrix() const;
  bool orthogonal(double tol = 1e-12) const;
};

/// Throws DegenerateBasis when |det| < 1e-12 * |a1||a2||a3|.
LatticeSpec make_lattice(const std::array<Vec3, 3>& basis);

LatticeSpec cubic_lattice(double side = 1.0);

/// Uniform grid in fractional coordinates: node i_j sits at t_j = -1/2 + i_j / n_j.
/// Nodes are stored row-major with the last axis fastest.
struct GridSpec {
  std::array<int, 3> n{};
  LatticeSpec lattice;

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }
  std::size_t index(int i0, int i1, int i2) const {
    return (static_cast<std::size_t>(i0) * n[1] + static_cast<std::size_t>(i1)) * n[2] +
           static_cast<std::size_t>(i2);
  }
  std::array<int, 3> unravel(std::size_t idx) const {
    const int i2 = static_cast<int>(idx % n[2]);
    idx /= n[2];
    const int i1 = static_cast<int>(idx % n[1]);
    const int i0 = static_cast<int>(idx / n[1]);
    return {i0, i1, i2};
  }
  Vec3 fractional(std::size_t idx) const;
  Vec3 node(std::size_t idx) const { return lattice.point(fractional(idx)); }

  /// Signed mode number of FFT index i along axis: i for i < n/2, i - n otherwise.
  int mode(int axis, int i) const { return i < n[axis] / 2 ? i : i - n[axis]; }
  std::array<int, 3> modes(std::size_t idx) const;
  /// True when some mode number equals -n_j/2.
  bool is_nyquist(std::size_t idx) const;
  Vec3 wave_vector(std::size_t idx) const;

  bool same_shape(const GridSpec& other) const;
};

/// Throws InvalidGrid unless every n_j is even and >= 4.
GridSpec make_grid(const LatticeSpec& lattice, std::array<int, 3> n);

/// All dual-lattice frequencies resolved by the grid, one per node, in FFT order.
std::vector<Vec3> frequency_set(const GridSpec& grid);

}  // namespace hommax
