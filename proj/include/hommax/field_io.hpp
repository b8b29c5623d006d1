#pragma once

#include "hommax/fields.hpp"

#include <array>
#include <filesystem>

namespace hommax {

/// Binary dump: "MXHF", then little-endian uint32 rank, n1, n2, n3, flags
/// (bit 0 = real), then for each node (row-major) and each component a pair of
/// float64 (re, im).
template <int C>
void write_field(const std::filesystem::path& path, const Field<C>& f);

/// Reads a dump written by write_field. The lattice is not stored in the file
/// and must be supplied; throws Error on a malformed file or rank mismatch.
template <int C>
Field<C> read_field(const std::filesystem::path& path, const LatticeSpec& lattice);

/// CSV of the samples along one grid axis through the node `through`:
/// columns t, then re/im per component.
template <int C>
void write_csv_slice(const std::filesystem::path& path, const Field<C>& f, int axis,
                     std::array<int, 3> through);

}  // namespace hommax
