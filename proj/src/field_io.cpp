#include "hommax/field_io.hpp"

#include "hommax/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace hommax {

static_assert(std::endian::native == std::endian::little,
              "field dumps assume a little-endian host");

namespace {

constexpr char kMagic[4] = {'M', 'X', 'H', 'F'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("field dump truncated");
  return v;
}

}  // namespace

template <int C>
void write_field(const std::filesystem::path& path, const Field<C>& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, C);
  for (int j = 0; j < 3; ++j) put<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid().n[j]));
  put<std::uint32_t>(os, f.real_flag() ? 1u : 0u);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int c = 0; c < C; ++c) {
      put<double>(os, f(c, i).real());
      put<double>(os, f(c, i).imag());
    }
  if (!os) throw Error("write to " + path.string() + " failed");
}

template <int C>
Field<C> read_field(const std::filesystem::path& path, const LatticeSpec& lattice) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error(path.string() + " is not a field dump");
  const auto rank = get<std::uint32_t>(is);
  if (rank != static_cast<std::uint32_t>(C))
    throw Error("field dump has rank " + std::to_string(rank) + ", expected " + std::to_string(C));
  std::array<int, 3> n{};
  for (int j = 0; j < 3; ++j) n[j] = static_cast<int>(get<std::uint32_t>(is));
  const auto flags = get<std::uint32_t>(is);
  Field<C> f(make_grid(lattice, n));
  for (std::size_t i = 0; i < f.size(); ++i)
    for (int c = 0; c < C; ++c) {
      const double re = get<double>(is);
      const double im = get<double>(is);
      f(c, i) = cplx(re, im);
    }
  f.set_real_flag((flags & 1u) != 0);
  return f;
}

template <int C>
void write_csv_slice(const std::filesystem::path& path, const Field<C>& f, int axis,
                     std::array<int, 3> through) {
  if (axis < 0 || axis > 2) throw Error("slice axis must be 0, 1 or 2");
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "t";
  for (int c = 0; c < C; ++c) os << ",re" << c << ",im" << c;
  os << '\n' << std::setprecision(17);
  const auto& g = f.grid();
  for (int i = 0; i < g.n[axis]; ++i) {
    through[axis] = i;
    const std::size_t idx = g.index(through[0], through[1], through[2]);
    os << -0.5 + static_cast<double>(i) / g.n[axis];
    for (int c = 0; c < C; ++c) os << ',' << f(c, idx).real() << ',' << f(c, idx).imag();
    os << '\n';
  }
}

template void write_field<1>(const std::filesystem::path&, const Field<1>&);
template void write_field<3>(const std::filesystem::path&, const Field<3>&);
template void write_field<9>(const std::filesystem::path&, const Field<9>&);
template Field<1> read_field<1>(const std::filesystem::path&, const LatticeSpec&);
template Field<3> read_field<3>(const std::filesystem::path&, const LatticeSpec&);
template Field<9> read_field<9>(const std::filesystem::path&, const LatticeSpec&);
template void write_csv_slice<1>(const std::filesystem::path&, const Field<1>&, int, std::array<int, 3>);
template void write_csv_slice<3>(const std::filesystem::path&, const Field<3>&, int, std::array<int, 3>);
template void write_csv_slice<9>(const std::filesystem::path&, const Field<9>&, int, std::array<int, 3>);

}  // namespace hommax
