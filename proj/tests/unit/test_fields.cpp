#include "doctest.h"
#include "hommax/errors.hpp"
#include "hommax/field_io.hpp"
#include "hommax/fields.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace hommax;
using oracle::pi;

namespace {

GridSpec cube(int n) { return make_grid(cubic_lattice(), {n, n, n}); }

GridSpec skew_grid(int n) {
  return make_grid(make_lattice({Vec3(1.0, 0.0, 0.0), Vec3(0.3, 0.9, 0.0), Vec3(0.1, -0.2, 1.1)}),
                   {n, n, n});
}

}  // namespace

TEST_CASE("gradient of cos(2 pi x1)") {
  const auto g = cube(8);
  const auto f = oracle::sample_fn<1>(g, [](const Vec3& x) { return cplx(std::cos(2 * pi * x[0])); });
  const auto df = gradient(f);
  const auto ref = oracle::sample_fn<3>(
      g, [](const Vec3& x) { return Vec3c(-2 * pi * std::sin(2 * pi * x[0]), 0.0, 0.0); });
  CHECK(oracle::max_abs_diff(df, ref) < 1e-12);
  const auto m = mean_vector(df);
  CHECK(m.norm() < 1e-12);
}

TEST_CASE("derivatives match term-by-term differentiation on a skew lattice") {
  std::mt19937_64 rng(11);
  const auto g = skew_grid(12);
  const auto p = oracle::random_real_poly(rng, 3, 4, 6);
  const auto v = oracle::sample<3>(p, g);
  const auto& lat = g.lattice;

  const auto dv = divergence(v);
  const auto cv = curl(v);
  double err_div = 0.0, err_curl = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 x = g.node(i);
    cplx d{};
    for (int l = 0; l < 3; ++l) d += p.partial(lat, x, l, l);
    err_div = std::max(err_div, std::abs(d - dv(0, i)));
    const Vec3c c(p.partial(lat, x, 2, 1) - p.partial(lat, x, 1, 2),
                  p.partial(lat, x, 0, 2) - p.partial(lat, x, 2, 0),
                  p.partial(lat, x, 1, 0) - p.partial(lat, x, 0, 1));
    err_curl = std::max(err_curl, (c - cv.vec(i)).norm());
  }
  CHECK(err_div < 1e-10);
  CHECK(err_curl < 1e-10);
}

TEST_CASE("curl grad = 0, div curl = 0, mixed partials commute") {
  std::mt19937_64 rng(3);
  const auto g = skew_grid(16);
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = oracle::sample<1>(oracle::random_real_poly(rng, 1, 7, 10), g);
    const auto w = oracle::sample<3>(oracle::random_real_poly(rng, 3, 7, 10), g);
    CHECK(sup_norm(curl(gradient(f))) < 1e-10 * sup_norm(gradient(f)) * 100);
    CHECK(sup_norm(divergence(curl(w))) < 1e-10 * sup_norm(curl(w)) * 100);
    const auto d01 = partial(partial(f, 0), 1);
    const auto d10 = partial(partial(f, 1), 0);
    CHECK(oracle::max_abs_diff(d01, d10) < 1e-10 * sup_norm(d01));
  }
}

TEST_CASE("means") {
  const auto g = cube(8);
  const auto c = oracle::sample_fn<1>(g, [](const Vec3&) { return cplx(3.5); });
  CHECK(std::abs(mean_scalar(c) - 3.5) < 1e-15);
  const auto s = oracle::sample_fn<1>(g, [](const Vec3& x) { return cplx(std::sin(2 * pi * x[0])); });
  CHECK(std::abs(mean_scalar(s)) < 1e-14);
  const auto t =
      oracle::sample_fn<1>(g, [](const Vec3& x) { return cplx(2.0 + std::cos(2 * pi * x[0])); });
  CHECK(std::abs(mean_scalar(t) - 2.0) < 1e-14);
  // mean equals the zero Fourier coefficient
  CHECK(std::abs(to_spectrum(t)(0, 0) - 2.0) < 1e-14);
}

TEST_CASE("Parseval") {
  std::mt19937_64 rng(5);
  const auto g = skew_grid(10);
  const auto f = oracle::sample<3>(oracle::random_real_poly(rng, 3, 4, 8), g);
  const auto s = to_spectrum(f);
  double grid_sum = 0.0, coeff_sum = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < g.size(); ++i) {
      grid_sum += std::norm(f(c, i));
      coeff_sum += std::norm(s(c, i));
    }
  CHECK(grid_sum / g.size() == doctest::Approx(coeff_sum).epsilon(1e-12));
  CHECK(l2_norm(f) == doctest::Approx(std::sqrt(g.lattice.cell_volume * coeff_sum)).epsilon(1e-12));
}

TEST_CASE("round trip keeps real fields real") {
  std::mt19937_64 rng(9);
  const auto g = cube(12);
  auto f = oracle::sample<1>(oracle::random_real_poly(rng, 1, 5, 8), g);
  CHECK(is_real(f));
  const auto back = to_field(to_spectrum(f));
  CHECK(is_real(back));
  CHECK(oracle::max_abs_diff(f, back) < 1e-12 * sup_norm(f));
  CHECK(is_real(gradient(f)));
}

TEST_CASE("de-aliased product removes the aliased mode") {
  // cos^2(6 pi x) = 1/2 + cos(12 pi x)/2; mode 6 is not resolved on 8 points
  // and would alias onto mode 2. The de-aliased product keeps only 1/2.
  const auto g = cube(8);
  const auto a = oracle::sample_fn<1>(g, [](const Vec3& x) { return cplx(std::cos(6 * pi * x[0])); });
  const auto p = dealiased_multiply(a, a);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(p(0, i) - 0.5) < 1e-12);
  const auto naive = multiply(a, a);
  CHECK(oracle::max_abs_diff(naive, p) > 0.4);
}

TEST_CASE("de-aliased product is exact when the product is resolved") {
  std::mt19937_64 rng(21);
  const auto g = cube(16);
  const auto pm = oracle::random_real_poly(rng, 9, 3, 4);
  const auto pv = oracle::random_real_poly(rng, 3, 3, 4);
  const auto m = oracle::sample<9>(pm, g);
  const auto v = oracle::sample<3>(pv, g);
  const auto direct = multiply(m, v);
  CHECK(oracle::max_abs_diff(dealiased_multiply(m, v), direct) < 1e-11 * sup_norm(direct));
  CHECK(oracle::max_abs_diff(dealiased_multiply_transpose(m, v), multiply_transpose(m, v)) <
        1e-11 * sup_norm(direct));
}

TEST_CASE("spectral resize round trip") {
  std::mt19937_64 rng(4);
  const auto g = cube(8);
  const auto f = oracle::sample<1>(oracle::random_real_poly(rng, 1, 4, 8), g);
  const auto s = to_spectrum(f);
  const auto up = resize_spectrum(s, cube(16));
  const auto down = resize_spectrum(up, g);
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(down(0, i) - s(0, i)));
  CHECK(err < 1e-14);
  // the fine-grid samples of a band-limited function are its exact values
  const auto p = oracle::random_real_poly(rng, 1, 3, 5);
  const auto fine = to_field(resize_spectrum(to_spectrum(oracle::sample<1>(p, g)), cube(16)));
  CHECK(oracle::max_abs_diff(fine, oracle::sample<1>(p, cube(16))) < 1e-12);
}

TEST_CASE("harmonic mean") {
  const auto g = cube(8);
  std::vector<Mat3> two(g.size(), 2.0 * Mat3::Identity());
  CHECK((harmonic_mean_matrix(two) - 2.0 * Mat3::Identity()).norm() < 1e-14);

  // (2 + cos 2 pi x1) I: the trapezoidal rule is spectrally accurate for this
  // periodic analytic integrand, so the grid value is 1/sqrt(3)^{-1} = sqrt 3.
  const auto g32 = cube(32);
  std::vector<Mat3> trig(g32.size());
  for (std::size_t i = 0; i < g32.size(); ++i)
    trig[i] = (2.0 + std::cos(2 * pi * g32.node(i)[0])) * Mat3::Identity();
  const Mat3 h = harmonic_mean_matrix(trig);
  CHECK(h(0, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

  // smoothed two-phase medium 1 / 4 in halves: the grid value matches the
  // quadrature of the same profile, and tends to 2*1*4/(1+4) = 1.6 as the
  // transition width shrinks.
  const auto gl = make_grid(cubic_lattice(), {2048, 4, 4});
  double prev_gap = 1.0;
  for (double w : {0.008, 0.004, 0.002}) {
    std::vector<Mat3> layered(gl.size());
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const double s = oracle::smooth_layer(gl.fractional(i)[0], 0.25, w);
      layered[i] = (4.0 - 3.0 * s) * Mat3::Identity();
    }
    const double ref = 1.0 / oracle::integrate_cell([w](double t) {
                         return 1.0 / (4.0 - 3.0 * oracle::smooth_layer(t, 0.25, w));
                       });
    const double hm = harmonic_mean_matrix(layered)(0, 0);
    CHECK(hm == doctest::Approx(ref).epsilon(1e-9));
    const double gap = std::abs(hm - 1.6);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 6e-3);

  std::vector<Mat3> singular(g.size(), Mat3::Identity());
  singular[5] = Mat3::Zero();
  CHECK_THROWS_AS(harmonic_mean_matrix(singular), SingularPoint);
}

TEST_CASE("coefficient field validation") {
  const auto g = cube(4);
  std::vector<Mat3> a(g.size(), Mat3::Identity());
  CoefficientField ok(g, a);
  CHECK(ok.lambda_min() == doctest::Approx(1.0));
  CHECK(ok.is_constant());
  CHECK((ok.sqrt()[3] * ok.sqrt()[3] - Mat3::Identity()).norm() < 1e-14);

  auto bad = a;
  bad[2](0, 1) = 0.5;
  CHECK_THROWS_AS(CoefficientField(g, bad), DegenerateCoefficient);
  auto deg = a;
  deg[7](2, 2) = 1e-9;
  CHECK_THROWS_AS(CoefficientField(g, deg), DegenerateCoefficient);
  auto neg = a;
  neg[1] = -Mat3::Identity();
  CHECK_THROWS_AS(CoefficientField(g, neg), DegenerateCoefficient);

  // square roots of an anisotropic SPD matrix
  Mat3 m;
  m << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1.5;
  std::vector<Mat3> am(g.size(), m);
  CoefficientField cf(g, am);
  CHECK((cf.sqrt()[0] * cf.sqrt()[0] - m).norm() < 1e-13);
  CHECK((cf.inv_sqrt()[0] * m * cf.inv_sqrt()[0] - Mat3::Identity()).norm() < 1e-13);
  CHECK((cf.inverse()[0] * m - Mat3::Identity()).norm() < 1e-13);
}

TEST_CASE("grid mismatch is reported") {
  const auto a = ScalarField(cube(4));
  const auto b = ScalarField(cube(6));
  CHECK_THROWS_AS(multiply(a, b), GridMismatch);
}

TEST_CASE("binary dump round trip and header layout") {
  std::mt19937_64 rng(1);
  const auto g = make_grid(cubic_lattice(), {4, 6, 8});
  auto f = oracle::sample<3>(oracle::random_real_poly(rng, 3, 2, 3), g);
  f(1, 5) = cplx(1.25, -0.5);
  const auto dir = std::filesystem::temp_directory_path() / "hommax_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "v.mxhf";
  write_field(path, f);
  const auto back = read_field<3>(path, g.lattice);
  CHECK(back.grid().n == g.n);
  CHECK(oracle::max_abs_diff(back, f) == 0.0);

  std::ifstream is(path, std::ios::binary);
  char hdr[24];
  is.read(hdr, 24);
  CHECK(std::string(hdr, 4) == "MXHF");
  std::uint32_t words[5];
  std::memcpy(words, hdr + 4, 20);
  CHECK(words[0] == 3);
  CHECK(words[1] == 4);
  CHECK(words[2] == 6);
  CHECK(words[3] == 8);
  CHECK(std::filesystem::file_size(path) == 24 + g.size() * 3 * 16);
  CHECK_THROWS(read_field<1>(path, g.lattice));

  write_csv_slice(dir / "s.csv", f, 2, {0, 0, 0});
  std::ifstream csv(dir / "s.csv");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 9);
  std::filesystem::remove_all(dir);
}
