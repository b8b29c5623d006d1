#pragma once

#include "hommax/fields.hpp"
#include "hommax/maxwell.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hommax {

enum class CoefficientKind { constant, layered_smoothed, trig_isotropic, trig_matrix, checkerboard_smoothed };

std::string to_string(CoefficientKind kind);
/// Throws InvalidParams on an unknown name.
CoefficientKind coefficient_kind_from_string(const std::string& name);

/// Catalogue entry. Only the parameters of the selected kind are read.
///
/// - constant: value * I.
/// - layered_smoothed: alpha inside a slab of relative thickness `fill`
///   centred at t_axis = 0, beta outside, joined by tanh ramps of width `width`.
/// - checkerboard_smoothed: alpha on the cells of a 2x2x2 checkerboard where
///   the smoothed signs along the three axes multiply to +1, beta elsewhere.
/// - trig_isotropic: (mean + amplitude cos 2 pi <mode, t>) I.
/// - trig_matrix: mean * I plus three seeded symmetric matrices times cosines
///   of seeded low modes, scaled so their spectral norms sum to `amplitude`.
struct CoefficientDescriptor {
  CoefficientKind kind = CoefficientKind::constant;
  double value = 1.0;
  double alpha = 1.0;
  double beta = 4.0;
  double fill = 0.5;
  double width = 0.05;
  int axis = 0;
  double mean = 2.0;
  double amplitude = 1.0;
  std::array<int, 3> mode{1, 0, 0};
  std::uint64_t seed = 0;

  bool operator==(const CoefficientDescriptor&) const = default;
};

/// Throws InvalidParams naming the offending parameter.
void validate(const CoefficientDescriptor& desc);

/// Samples the descriptor at the grid nodes (fractional coordinates).
CoefficientField generate_coefficient(const CoefficientDescriptor& desc, const GridSpec& grid);

/// Matrix value of the descriptor at fractional coordinates t.
Mat3 coefficient_value(const CoefficientDescriptor& desc, const Vec3& t);

/// Smoothed slab indicator used by the layered and checkerboard kinds,
/// periodic with period 1 in t.
double smoothed_indicator(double t, double fill, double width);

/// Sharp laminate: diag(harmonic, arithmetic, arithmetic) for a slab stack
/// normal to e_1 with phase values alpha (fraction fill) and beta.
Mat3 layered_oracle(double alpha, double beta, double fill);

/// Same for the smoothed profile of a layered_smoothed descriptor, evaluated by
/// adaptive 1D quadrature and placed on the layering axis. Requires a cubic
/// lattice so that the layering axis is a Cartesian direction.
Mat3 layered_smoothed_oracle(const CoefficientDescriptor& desc);

/// Seeded random catalogue entry (layered, checkerboard, trig kinds) with
/// random contrast and geometry.
CoefficientDescriptor random_descriptor(std::uint64_t seed);

/// Real divergence-free source: the curl of a seeded real trigonometric
/// polynomial with `terms` conjugate pairs of modes in [-band, band]^3.
VectorField random_source(const GridSpec& grid, std::uint64_t seed, int band = 1, int terms = 3);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares fit of log(y) against log(x). Needs at least two points with
/// positive values; throws InvalidParams otherwise.
LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceConfig {
  GridSpec torus;
  GridSpec cell;
  CoefficientDescriptor eta;
  CoefficientDescriptor mu;
  /// eps = 1 / n for each entry; strictly increasing n.
  std::vector<int> periods{2, 4, 8};
  SolveOptions solve{1e-9, 2000};
  bool r_branch = true;
  bool q_branch = true;
  bool dealias = true;
  int workers = 1;
  std::uint64_t source_seed = 1;
  int source_band = 1;
  int source_terms = 3;
};

struct ConvergenceReport {
  std::vector<double> eps_list;
  std::vector<int> periods;
  /// Field name -> one L2 error per eps.
  std::map<std::string, std::vector<double>> errors;
  /// Slope of the log-log fit, only when r2 >= 0.98 and the field is not exact.
  std::map<std::string, std::optional<double>> fitted_rate;
  std::map<std::string, std::optional<double>> r2;
  /// "fitted", "inconclusive" or "exact".
  std::map<std::string, std::string> status;
  /// Named diagnostics, one value per eps.
  std::map<std::string, std::vector<double>> diagnostics;
  std::map<std::string, std::vector<int>> iterations;
  Mat3 eta0 = Mat3::Identity();
  Mat3 mu0 = Mat3::Identity();
  double source_norm = 0.0;
  double tol = 0.0;
  bool partial = false;
  std::string failure;
  /// Wall-clock seconds: cell stage, then one entry per eps. Excluded from
  /// determinism comparisons.
  double cell_runtime = 0.0;
  std::vector<double> runtime;
};

/// Classifies each field: "exact" when every error is at most exact_threshold,
/// otherwise a log-log fit that counts only when r2 >= 0.98.
void fit_report(ConvergenceReport& report, double exact_threshold);

/// Cell solve once, then one full Maxwell pipeline per eps (concurrently up to
/// cfg.workers), then fits. A solver failure stops the study: completed eps
/// values are kept and the report is flagged partial.
ConvergenceReport convergence_study(const ConvergenceConfig& cfg);

/// ||S_eps u - u|| for a fixed band-limited u (seeded), fitted in eps.
ConvergenceReport steklov_study(const GridSpec& grid, const std::vector<int>& periods, std::uint64_t seed);

/// Deterministic JSON; runtime values sit under the "runtime" key only.
nlohmann::ordered_json to_json(const ConvergenceReport& report);
/// Columns eps,n,field,error,runtime_s, one row per (eps, field).
void write_csv(const ConvergenceReport& report, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const CoefficientDescriptor& desc);
nlohmann::ordered_json matrix_json(const Mat3& m);

}  // namespace hommax
