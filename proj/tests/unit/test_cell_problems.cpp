#include "doctest.h"
#include "hommax/cell_problems.hpp"
#include "hommax/errors.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace hommax;
using oracle::pi;

namespace {

GridSpec cube(int n) { return make_grid(cubic_lattice(), {n, n, n}); }

CoefficientField trig_iso(const GridSpec& g) {
  return oracle::coefficient(g, [](const Vec3& x) { return (2.0 + std::cos(2 * pi * x[0])) * Mat3::Identity(); });
}

const SolveOptions tight{1e-11, 2000};

}  // namespace

TEST_CASE("constant coefficient: trivial correctors") {
  const auto g = cube(8);
  const auto a = oracle::coefficient(g, [](const Vec3&) { return 3.0 * Mat3::Identity(); });
  const auto cs = solve_scalar_cell(a);
  for (int j = 0; j < 3; ++j) CHECK(sup_norm(cs.potentials[j]) < 1e-14);
  CHECK(sup_norm(cs.Y) < 1e-14);
  CHECK(sup_norm(cs.G) < 1e-14);
  CHECK((cs.effective - 3.0 * Mat3::Identity()).norm() < 1e-14);
  for (std::size_t i = 0; i < g.size(); i += 37) CHECK((cs.Wstar.mat(i) - Mat3c::Identity()).norm() < 1e-14);
}

TEST_CASE("trig coefficient: effective tensor from explicit 1D integrals") {
  const auto cs = solve_scalar_cell(trig_iso(cube(32)), tight);
  // 1 / mean(1/a) = sqrt(3) longitudinally, mean(a) = 2 transversely
  CHECK(std::abs(cs.effective(0, 0) - std::sqrt(3.0)) < 1e-6);
  CHECK(std::abs(cs.effective(1, 1) - 2.0) < 1e-10);
  CHECK(std::abs(cs.effective(2, 2) - 2.0) < 1e-10);
  CHECK(std::abs(cs.effective(0, 1)) < 1e-10);
}

TEST_CASE("smoothed layers: effective tensor and corrector gradient match the 1D oracle") {
  const auto g = make_grid(cubic_lattice(), {256, 4, 4});
  const double w = 0.01;
  auto profile = [w](double t) { return 4.0 - 3.0 * oracle::smooth_layer(t, 0.25, w); };
  const auto a = oracle::coefficient(g, [&](const Vec3& x) { return profile(x[0]) * Mat3::Identity(); });
  const auto cs = solve_scalar_cell(a, tight);
  const double harmonic = 1.0 / oracle::integrate_cell([&](double t) { return 1.0 / profile(t); });
  const double arithmetic = oracle::integrate_cell(profile);
  CHECK(cs.effective(0, 0) == doctest::Approx(harmonic).epsilon(1e-6));
  CHECK(cs.effective(1, 1) == doctest::Approx(arithmetic).epsilon(1e-6));
  // and the sharp-interface values as w -> 0
  CHECK(cs.effective(0, 0) == doctest::Approx(1.6).epsilon(0.02));
  CHECK(cs.effective(1, 1) == doctest::Approx(2.5).epsilon(1e-3));
  // constant flux: d_1 Phi_1 = harmonic / a - 1
  double err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = g.fractional(i)[0];
    err = std::max(err, std::abs(cs.Y(0, i).real() - (harmonic / profile(t) - 1.0)));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("cell solution invariants on an anisotropic coefficient") {
  const auto g = cube(16);
  const auto a = oracle::coefficient(g, [](const Vec3& x) { return oracle::smooth_matrix(x); });
  const auto cs = solve_scalar_cell(a, tight, 2);
  const auto c = check_cell(cs);
  CHECK(c.mean_potentials < 1e-10);
  CHECK(c.mean_Y < 1e-8);
  CHECK(c.mean_G < 1e-8);
  CHECK(c.div_tilde < 1e-8);
  CHECK(c.voigt_slack > -1e-8);
  CHECK(c.reuss_slack > -1e-8);
  CHECK(c.min_eig_effective > 0.0);
  CHECK(cs.effective_asymmetry < 1e-8);
  CHECK(c.Y_norm <= c.Y_bound);
  CHECK(c.Y_column_norm <= c.Y_bound);
  CHECK(c.Phi_norm <= c.Phi_bound);
  CHECK(cs.residual_norm <= tight.tol);
}

TEST_CASE("scaling covariance") {
  const auto g = cube(12);
  const auto a = oracle::coefficient(g, [](const Vec3& x) { return oracle::smooth_matrix(x); });
  const auto a5 = oracle::coefficient(g, [](const Vec3& x) { return Mat3(5.0 * oracle::smooth_matrix(x)); });
  const auto c1 = solve_scalar_cell(a, tight);
  const auto c5 = solve_scalar_cell(a5, tight);
  CHECK((c5.effective - 5.0 * c1.effective).norm() < 1e-9);
  CHECK(oracle::max_abs_diff(c1.Y, c5.Y) < 1e-8);
  CHECK(oracle::max_abs_diff(c1.G, c5.G) < 1e-8);
  CHECK(oracle::max_abs_diff(c1.potentials[1], c5.potentials[1]) < 1e-9);
}

TEST_CASE("coordinate permutation permutes the effective tensor") {
  const auto g = cube(12);
  // cyclic permutation x -> (x2, x3, x1)
  Mat3 P;
  P << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const auto a = oracle::coefficient(g, [](const Vec3& x) { return oracle::smooth_matrix(x); });
  const auto ap = oracle::coefficient(g, [&](const Vec3& x) {
    return Mat3(P * oracle::smooth_matrix(P.transpose() * x) * P.transpose());
  });
  const auto c = solve_scalar_cell(a, tight);
  const auto cp = solve_scalar_cell(ap, tight);
  CHECK((cp.effective - P * c.effective * P.transpose()).norm() < 1e-9);
}

TEST_CASE("scalar cell form is conjugate symmetric") {
  std::mt19937_64 rng(17);
  const auto g = cube(12);
  const auto a = oracle::coefficient(g, [](const Vec3& x) { return oracle::smooth_matrix(x); });
  const auto u = oracle::sample<1>(oracle::random_real_poly(rng, 1, 4, 6), g) +
                 cplx(0, 1) * oracle::sample<1>(oracle::random_real_poly(rng, 1, 4, 6), g);
  const auto v = oracle::sample<1>(oracle::random_real_poly(rng, 1, 4, 6), g) +
                 cplx(0, 1) * oracle::sample<1>(oracle::random_real_poly(rng, 1, 4, 6), g);
  const cplx buv = inner(gradient(u), hommax::apply(a.values(), gradient(v)));
  const cplx bvu = inner(gradient(v), hommax::apply(a.values(), gradient(u)));
  CHECK(std::abs(buv - std::conj(bvu)) < 1e-12 * std::abs(buv));
}

TEST_CASE("solver failure raises NoConvergence") {
  const auto a = trig_iso(cube(8));
  CHECK_THROWS_AS(solve_scalar_cell(a, SolveOptions{1e-14, 1}), NoConvergence);
  CHECK_THROWS_AS(solve_scalar_cell(a, SolveOptions{0.0, 10}), InvalidParams);
}

TEST_CASE("antisymmetric potentials") {
  SUBCASE("constant coefficient gives zero") {
    const auto g = cube(8);
    const auto a = oracle::coefficient(g, [](const Vec3&) { return 2.0 * Mat3::Identity(); });
    const auto pot = build_antisym_potentials(solve_scalar_cell(a));
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i) CHECK(sup_norm(pot.U[l][i]) < 1e-14);
  }
  SUBCASE("single-mode coefficient") {
    const auto g = cube(16);
    const auto cs = solve_scalar_cell(trig_iso(g), tight);
    const auto pot = build_antisym_potentials(cs);
    // tilde_11 is the constant flux, so U_11 = 0; tilde_22 - a0_22 = cos(2 pi x1)
    // and the Poisson inversion of a single mode divides by -(2 pi)^2.
    CHECK(sup_norm(pot.U[0][0]) < 1e-9);
    const auto ref = oracle::sample_fn<1>(
        g, [](const Vec3& x) { return cplx(-std::cos(2 * pi * x[0]) / (4 * pi * pi)); });
    CHECK(oracle::max_abs_diff(pot.U[1][1], ref) < 1e-12);
  }
}

TEST_CASE("vector cell problem") {
  const auto g = cube(16);
  SUBCASE("constant coefficients give f = 0") {
    const auto eta = solve_scalar_cell(oracle::coefficient(g, [](const Vec3&) { return 2.0 * Mat3::Identity(); }));
    const auto mu = solve_scalar_cell(oracle::coefficient(g, [](const Vec3&) { return 3.0 * Mat3::Identity(); }));
    const auto set = solve_vector_cell(eta, mu, Branch::r);
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 3; ++j) CHECK(sup_norm(set.f[l][j]) < 1e-13);
  }
  SUBCASE("identities and potentials for both branches") {
    // 24 points per period keep the Nyquist content of tilde below 1e-8
    const auto g = cube(24);
    const auto eta = solve_scalar_cell(
        oracle::coefficient(g, [](const Vec3& x) { return oracle::smooth_matrix(x); }), tight);
    const auto mu = solve_scalar_cell(oracle::coefficient(g, [](const Vec3& x) {
                                        return oracle::smooth_matrix(Vec3(x[1], x[2], x[0]), 0.6);
                                      }),
                                      tight);
    for (Branch b : {Branch::r, Branch::q}) {
      const auto set = solve_vector_cell(eta, mu, b, tight, 3);
      const auto c = check_correctors(eta, mu, set);
      CHECK(c.mean_f < 1e-10);
      CHECK(c.div_f < 1e-6);
      CHECK(c.rot_f < 1e-6);
      CHECK(c.antisymmetry < 1e-10);
      CHECK(c.potential_identity < 1e-8);
      CHECK(c.M_norm <= c.M_bound);
      CHECK(c.gradM_norm <= c.gradM_bound);
    }
  }
  SUBCASE("two solution paths agree for layered mu") {
    const auto gl = make_grid(cubic_lattice(), {64, 8, 8});
    const auto eta = solve_scalar_cell(oracle::coefficient(gl, [](const Vec3&) { return 1.5 * Mat3::Identity(); }));
    const auto mu = solve_scalar_cell(oracle::coefficient(gl,
                                                          [](const Vec3& x) {
                                                            return (4.0 - 3.0 * oracle::smooth_layer(x[0], 0.25, 0.05)) *
                                                                   Mat3::Identity();
                                                          }),
                                      tight);
    const auto set = solve_vector_cell(eta, mu, Branch::r, tight);
    double worst = 0.0, scale = 0.0;
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 3; ++j) {
        const auto div = predicted_div_f(mu, l, j);
        const auto curl_data = hommax::apply(eta.coefficient.values(), predicted_rot_f(eta, mu, l, j));
        const auto f2 = reconstruct_from_div_curl(mu, div, curl_data, tight);
        worst = std::max(worst, l2_norm(f2 - set.f[l][j]));
        scale = std::max(scale, l2_norm(set.f[l][j]));
      }
    CHECK(scale > 1e-3);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("multiplier inequality") {
  const auto g = cube(16);
  const auto cs = solve_scalar_cell(trig_iso(g), tight);
  const auto torus = cube(32);
  SUBCASE("zero corrector") {
    const MatrixField zero(g);
    const auto u = oracle::sample_fn<3>(torus, [](const Vec3&) { return Vec3c(1, 2, 3); });
    const auto r = multiplier_check(zero, u, 2, {1.0, 1.0});
    CHECK(r.lhs == 0.0);
    CHECK(r.holds);
  }
  SUBCASE("constant field") {
    const auto u = oracle::sample_fn<3>(torus, [](const Vec3&) { return Vec3c(1, 0, 2); });
    const auto r = multiplier_check(cs.Y, u, 2, {1.0, 1.0});
    double mean_y2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = std::abs(cs.Y(0, i));  // only Y_11 is nonzero here
      mean_y2 += s * s;
    }
    mean_y2 /= g.size();
    CHECK(r.lhs == doctest::Approx(mean_y2 * 5.0).epsilon(1e-9));
    CHECK(r.rhs == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("random band-limited fields") {
    std::mt19937_64 rng(99);
    std::vector<VectorField> calib, test;
    for (int k = 0; k < 4; ++k) calib.push_back(oracle::sample<3>(oracle::random_real_poly(rng, 3, 3, 5), torus));
    for (int k = 0; k < 6; ++k) test.push_back(oracle::sample<3>(oracle::random_real_poly(rng, 3, 3, 5), torus));
    const std::vector<int> periods{2, 4, 8};
    const auto betas = calibrate_multiplier(cs.Y, calib, periods, 0.5);
    CHECK(betas.beta1 > 0.0);
    for (const auto& u : test)
      for (int n : periods) CHECK(multiplier_check(cs.Y, u, n, betas).holds);
  }
}
