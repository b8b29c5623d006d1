#include "hommax/harness.hpp"

#include "hommax/errors.hpp"
#include "hommax/parallel.hpp"
#include "hommax/smoothing.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace hommax {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Uniform in [lo, hi) from the raw 64-bit stream, so values do not depend on
// the standard library's distribution implementations.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::array<int, 3> nonzero_mode(std::mt19937_64& rng, int band) {
  for (;;) {
    std::array<int, 3> m{uniform_int(rng, -band, band), uniform_int(rng, -band, band), uniform_int(rng, -band, band)};
    if (m != std::array<int, 3>{0, 0, 0}) return m;
  }
}

struct MatrixTerm {
  Mat3 b;
  std::array<int, 3> m;
  double phase;
};

std::vector<MatrixTerm> trig_matrix_terms(const CoefficientDescriptor& d) {
  std::mt19937_64 rng(d.seed);
  std::vector<MatrixTerm> terms(3);
  for (auto& t : terms) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = uniform(rng, -1.0, 1.0);
    const Mat3 s = 0.5 * (a + a.transpose());
    const double norm = Eigen::SelfAdjointEigenSolver<Mat3>(s).eigenvalues().cwiseAbs().maxCoeff();
    t.b = s * (d.amplitude / 3.0 / norm);
    t.m = nonzero_mode(rng, 1);
    t.phase = uniform(rng, 0.0, two_pi);
  }
  return terms;
}

double mode_phase(const std::array<int, 3>& m, const Vec3& t) {
  return two_pi * (m[0] * t[0] + m[1] * t[1] + m[2] * t[2]);
}

}  // namespace

std::string to_string(CoefficientKind kind) {
  switch (kind) {
    case CoefficientKind::constant: return "constant";
    case CoefficientKind::layered_smoothed: return "layered_smoothed";
    case CoefficientKind::trig_isotropic: return "trig_isotropic";
    case CoefficientKind::trig_matrix: return "trig_matrix";
    case CoefficientKind::checkerboard_smoothed: return "checkerboard_smoothed";
  }
  return "unknown";
}

CoefficientKind coefficient_kind_from_string(const std::string& name) {
  for (auto k : {CoefficientKind::constant, CoefficientKind::layered_smoothed, CoefficientKind::trig_isotropic,
                 CoefficientKind::trig_matrix, CoefficientKind::checkerboard_smoothed})
    if (to_string(k) == name) return k;
  throw InvalidParams("unknown coefficient kind '" + name + "'");
}

void validate(const CoefficientDescriptor& d) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidParams(std::string("coefficient parameter ") + what);
  };
  switch (d.kind) {
    case CoefficientKind::constant:
      require(d.value > 0.0 && std::isfinite(d.value), "value must be positive");
      break;
    case CoefficientKind::layered_smoothed:
    case CoefficientKind::checkerboard_smoothed:
      require(d.alpha > 0.0 && std::isfinite(d.alpha), "alpha (contrast) must be positive");
      require(d.beta > 0.0 && std::isfinite(d.beta), "beta (contrast) must be positive");
      require(d.fill > 0.0 && d.fill < 1.0, "fill must lie in (0, 1)");
      require(d.width > 0.0 && d.width <= 0.5, "width must lie in (0, 0.5]");
      require(d.axis >= 0 && d.axis < 3, "axis must be 0, 1 or 2");
      break;
    case CoefficientKind::trig_isotropic:
    case CoefficientKind::trig_matrix:
      require(std::isfinite(d.mean) && std::isfinite(d.amplitude), "mean and amplitude must be finite");
      require(d.mean > std::abs(d.amplitude), "mean must exceed |amplitude|");
      break;
  }
}

double smoothed_indicator(double t, double fill, double width) {
  double s = 0.0;
  for (int j = -3; j <= 3; ++j)
    s += 0.5 * (std::tanh((t + j + 0.5 * fill) / width) - std::tanh((t + j - 0.5 * fill) / width));
  return s;
}

Mat3 coefficient_value(const CoefficientDescriptor& d, const Vec3& t) {
  switch (d.kind) {
    case CoefficientKind::constant:
      return d.value * Mat3::Identity();
    case CoefficientKind::layered_smoothed: {
      const double c = smoothed_indicator(t[d.axis], d.fill, d.width);
      return (d.beta + (d.alpha - d.beta) * c) * Mat3::Identity();
    }
    case CoefficientKind::checkerboard_smoothed: {
      double s = 1.0;
      for (int j = 0; j < 3; ++j) s *= 2.0 * smoothed_indicator(t[j], d.fill, d.width) - 1.0;
      const double c = 0.5 * (1.0 + s);
      return (d.beta + (d.alpha - d.beta) * c) * Mat3::Identity();
    }
    case CoefficientKind::trig_isotropic:
      return (d.mean + d.amplitude * std::cos(mode_phase(d.mode, t))) * Mat3::Identity();
    case CoefficientKind::trig_matrix: {
      Mat3 a = d.mean * Mat3::Identity();
      for (const auto& term : trig_matrix_terms(d)) a += term.b * std::cos(mode_phase(term.m, t) + term.phase);
      return a;
    }
  }
  throw InvalidParams("unknown coefficient kind");
}

CoefficientField generate_coefficient(const CoefficientDescriptor& d, const GridSpec& grid) {
  validate(d);
  std::vector<Mat3> values(grid.size());
  if (d.kind == CoefficientKind::trig_matrix) {
    // terms drawn once rather than per node
    const auto terms = trig_matrix_terms(d);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec3 t = grid.fractional(i);
      Mat3 a = d.mean * Mat3::Identity();
      for (const auto& term : terms) a += term.b * std::cos(mode_phase(term.m, t) + term.phase);
      values[i] = a;
    }
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = coefficient_value(d, grid.fractional(i));
  }
  return CoefficientField(grid, std::move(values));
}

Mat3 layered_oracle(double alpha, double beta, double fill) {
  const double harmonic = 1.0 / (fill / alpha + (1.0 - fill) / beta);
  const double arithmetic = fill * alpha + (1.0 - fill) * beta;
  return Vec3(harmonic, arithmetic, arithmetic).asDiagonal();
}

Mat3 layered_smoothed_oracle(const CoefficientDescriptor& d) {
  if (d.kind != CoefficientKind::layered_smoothed)
    throw InvalidParams("layered oracle needs a layered_smoothed descriptor");
  validate(d);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto a = [&](double t) { return d.beta + (d.alpha - d.beta) * smoothed_indicator(t, d.fill, d.width); };
  // split at the ramp centres where the integrand varies fastest
  const double pts[] = {-0.5, -0.5 * d.fill, 0.5 * d.fill, 0.5};
  double mean_a = 0.0, mean_inv = 0.0;
  for (int s = 0; s < 3; ++s) {
    mean_a += Rule::integrate(a, pts[s], pts[s + 1], 15, 1e-14);
    mean_inv += Rule::integrate([&](double t) { return 1.0 / a(t); }, pts[s], pts[s + 1], 15, 1e-14);
  }
  Mat3 out = mean_a * Mat3::Identity();
  out(d.axis, d.axis) = 1.0 / mean_inv;
  return out;
}

CoefficientDescriptor random_descriptor(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CoefficientDescriptor d;
  const CoefficientKind kinds[] = {CoefficientKind::layered_smoothed, CoefficientKind::checkerboard_smoothed,
                                   CoefficientKind::trig_isotropic, CoefficientKind::trig_matrix};
  d.kind = kinds[uniform_int(rng, 0, 3)];
  d.alpha = std::exp(uniform(rng, std::log(0.5), std::log(10.0)));
  d.beta = std::exp(uniform(rng, std::log(0.5), std::log(10.0)));
  d.fill = uniform(rng, 0.2, 0.8);
  d.width = uniform(rng, 0.04, 0.1);
  d.axis = uniform_int(rng, 0, 2);
  d.mean = uniform(rng, 1.5, 4.0);
  d.amplitude = uniform(rng, 0.1, 0.9) * d.mean;
  d.mode = nonzero_mode(rng, 2);
  d.seed = rng();
  return d;
}

VectorField random_source(const GridSpec& grid, std::uint64_t seed, int band, int terms) {
  for (int j = 0; j < 3; ++j)
    if (band < 0 || 2 * band >= grid.n[j]) throw InvalidParams("source band must be below the grid Nyquist index");
  if (terms < 1) throw InvalidParams("source needs at least one term");
  std::mt19937_64 rng(seed);
  VectorField a(grid);
  for (int t = 0; t < terms; ++t) {
    const std::array<int, 3> m{uniform_int(rng, -band, band), uniform_int(rng, -band, band),
                               uniform_int(rng, -band, band)};
    Vec3c amp;
    for (int c = 0; c < 3; ++c) amp[c] = cplx(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double ph = mode_phase(m, grid.fractional(i));
      const cplx e(std::cos(ph), std::sin(ph));
      for (int c = 0; c < 3; ++c) a(c, i) += 2.0 * (amp[c] * e).real();
    }
  }
  make_real(a);
  VectorField q = curl(a);
  make_real(q);
  return q;
}

LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParams("log-log fit needs at least two paired points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidParams("log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidParams("log-log fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

void fit_report(ConvergenceReport& rep, double exact_threshold) {
  rep.fitted_rate.clear();
  rep.r2.clear();
  rep.status.clear();
  for (const auto& [name, errs] : rep.errors) {
    bool exact = !errs.empty();
    for (double e : errs) exact = exact && e <= exact_threshold;
    if (exact) {
      rep.status[name] = "exact";
      rep.fitted_rate[name] = std::nullopt;
      rep.r2[name] = std::nullopt;
      continue;
    }
    bool positive = true;
    for (double e : errs) positive = positive && e > 0.0;
    if (errs.size() < 3 || !positive) {
      rep.status[name] = "inconclusive";
      rep.fitted_rate[name] = std::nullopt;
      rep.r2[name] = std::nullopt;
      continue;
    }
    const LinearFit fit = loglog_fit(rep.eps_list, errs);
    rep.r2[name] = fit.r2;
    if (fit.r2 >= 0.98) {
      rep.status[name] = "fitted";
      rep.fitted_rate[name] = fit.slope;
    } else {
      rep.status[name] = "inconclusive";
      rep.fitted_rate[name] = std::nullopt;
    }
  }
}

ConvergenceReport convergence_study(const ConvergenceConfig& cfg) {
  using clock = std::chrono::steady_clock;
  if (cfg.periods.size() < 3) throw InvalidParams("a convergence study needs at least three eps values");
  for (std::size_t i = 0; i < cfg.periods.size(); ++i) {
    if (cfg.periods[i] < 2) throw InvalidParams("eps must be 1/n with n >= 2");
    if (i > 0 && cfg.periods[i] <= cfg.periods[i - 1]) throw InvalidParams("eps values must be strictly decreasing");
  }
  const CoefficientField eta = generate_coefficient(cfg.eta, cfg.cell);
  const CoefficientField mu = generate_coefficient(cfg.mu, cfg.cell);
  const VectorField q = random_source(cfg.torus, cfg.source_seed, cfg.source_band, cfg.source_terms);
  const VectorField r = random_source(cfg.torus, cfg.source_seed + 1, cfg.source_band, cfg.source_terms);

  // every precondition is checked before any expensive work
  std::vector<MaxwellProblem> problems;
  for (int n : cfg.periods) {
    problems.push_back(MaxwellProblem{eta, mu, n, cfg.torus, q, r});
    validate(problems.back());
  }

  ConvergenceReport rep;
  rep.tol = cfg.solve.tol;
  rep.source_norm = l2_norm(q) + l2_norm(r);

  const auto t0 = clock::now();
  std::optional<HomogenizedData> cells;
  try {
    cells = homogenize(eta, mu, cfg.solve, true, cfg.workers);
  } catch (const NoConvergence& e) {
    rep.partial = true;
    rep.failure = std::string("cell stage: ") + e.what();
    return rep;
  }
  rep.cell_runtime = std::chrono::duration<double>(clock::now() - t0).count();
  rep.eta0 = cells->eta.effective;
  rep.mu0 = cells->mu.effective;

  MaxwellOptions opt;
  opt.solve = cfg.solve;
  opt.r_branch = cfg.r_branch;
  opt.q_branch = cfg.q_branch;
  opt.dealias = cfg.dealias;
  opt.workers = 1;

  const std::size_t count = problems.size();
  std::vector<std::optional<MaxwellSolution>> sols(count);
  std::vector<std::string> failures(count);
  std::vector<double> seconds(count, 0.0);
  parallel_for(count, cfg.workers, [&](std::size_t i) {
    const auto start = clock::now();
    try {
      MaxwellSolution s = run_maxwell(problems[i], *cells, opt);
      // fields are not needed in the report; keep only the numbers
      s.branches.clear();
      s.exact = s.effective = s.correction = s.approximants = FieldSet{};
      sols[i] = std::move(s);
    } catch (const NoConvergence& e) {
      failures[i] = "eps = 1/" + std::to_string(cfg.periods[i]) + ": " + e.what();
    }
    seconds[i] = std::chrono::duration<double>(clock::now() - start).count();
  });

  for (std::size_t i = 0; i < count; ++i) {
    if (!sols[i]) {
      rep.partial = true;
      if (rep.failure.empty()) rep.failure = failures[i];
      continue;
    }
    const MaxwellSolution& s = *sols[i];
    rep.periods.push_back(cfg.periods[i]);
    rep.eps_list.push_back(1.0 / cfg.periods[i]);
    rep.runtime.push_back(seconds[i]);
    for (const auto& [name, e] : s.errors) rep.errors[name].push_back(e);
    for (const auto& [name, v] : s.diagnostics) {
      if (name.rfind("iterations_", 0) == 0)
        rep.iterations[name.substr(11)].push_back(static_cast<int>(v));
      else
        rep.diagnostics[name].push_back(v);
    }
  }
  fit_report(rep, 10.0 * cfg.solve.tol * rep.source_norm);
  return rep;
}

ConvergenceReport steklov_study(const GridSpec& grid, const std::vector<int>& periods, std::uint64_t seed) {
  if (periods.size() < 3) throw InvalidParams("a convergence study needs at least three eps values");
  std::mt19937_64 rng(seed);
  ScalarField u(grid);
  for (int t = 0; t < 4; ++t) {
    const std::array<int, 3> m = nonzero_mode(rng, 2);
    const cplx amp(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double ph = mode_phase(m, grid.fractional(i));
      u(0, i) += 2.0 * (amp * cplx(std::cos(ph), std::sin(ph))).real();
    }
  }
  make_real(u);
  ConvergenceReport rep;
  rep.source_norm = l2_norm(u);
  for (int n : periods) {
    if (n < 1) throw InvalidParams("eps must be 1/n with n >= 1");
    const auto start = std::chrono::steady_clock::now();
    ScalarField d = steklov_apply(u, steklov_multiplier(grid.lattice, grid, 1.0 / n));
    d -= u;
    rep.periods.push_back(n);
    rep.eps_list.push_back(1.0 / n);
    rep.errors["steklov"].push_back(l2_norm(d));
    rep.runtime.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  fit_report(rep, 0.0);
  return rep;
}

nlohmann::ordered_json matrix_json(const Mat3& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

nlohmann::ordered_json to_json(const CoefficientDescriptor& d) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(d.kind);
  switch (d.kind) {
    case CoefficientKind::constant:
      j["value"] = d.value;
      break;
    case CoefficientKind::layered_smoothed:
    case CoefficientKind::checkerboard_smoothed:
      j["alpha"] = d.alpha;
      j["beta"] = d.beta;
      j["fill"] = d.fill;
      j["width"] = d.width;
      if (d.kind == CoefficientKind::layered_smoothed) j["axis"] = d.axis;
      break;
    case CoefficientKind::trig_isotropic:
      j["mean"] = d.mean;
      j["amplitude"] = d.amplitude;
      j["mode"] = d.mode;
      break;
    case CoefficientKind::trig_matrix:
      j["mean"] = d.mean;
      j["amplitude"] = d.amplitude;
      j["seed"] = d.seed;
      break;
  }
  return j;
}

nlohmann::ordered_json to_json(const ConvergenceReport& rep) {
  using json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["regime"] = "periodic torus (full-space O(eps) regime)";
  j["eps"] = rep.eps_list;
  j["periods"] = rep.periods;
  j["tol"] = rep.tol;
  j["source_norm"] = rep.source_norm;
  j["eta0"] = matrix_json(rep.eta0);
  j["mu0"] = matrix_json(rep.mu0);
  j["errors"] = json::object();
  for (const auto& [k, v] : rep.errors) j["errors"][k] = v;
  j["fitted_rate"] = json::object();
  for (const auto& [k, v] : rep.fitted_rate) j["fitted_rate"][k] = opt(v);
  j["r2"] = json::object();
  for (const auto& [k, v] : rep.r2) j["r2"][k] = opt(v);
  j["status"] = json::object();
  for (const auto& [k, v] : rep.status) j["status"][k] = v;
  j["inconclusive"] = std::any_of(rep.status.begin(), rep.status.end(),
                                  [](const auto& kv) { return kv.second == "inconclusive"; });
  j["iterations"] = json::object();
  for (const auto& [k, v] : rep.iterations) j["iterations"][k] = v;
  j["diagnostics"] = json::object();
  for (const auto& [k, v] : rep.diagnostics) j["diagnostics"][k] = v;
  j["partial"] = rep.partial;
  j["failure"] = rep.failure;
  j["runtime"] = {{"cell_s", rep.cell_runtime}, {"per_eps_s", rep.runtime}};
  return j;
}

void write_csv(const ConvergenceReport& rep, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "eps,n,field,error,runtime_s\n";
  char buf[256];
  for (std::size_t i = 0; i < rep.eps_list.size(); ++i)
    for (const auto& [name, errs] : rep.errors) {
      std::snprintf(buf, sizeof buf, "%.17g,%d,%s,%.17g,%.6f\n", rep.eps_list[i], rep.periods[i], name.c_str(),
                    errs[i], i < rep.runtime.size() ? rep.runtime[i] : 0.0);
      out << buf;
    }
}

}  // namespace hommax
