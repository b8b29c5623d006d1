#pragma once

#include "hommax/cell_problems.hpp"
#include "hommax/cg.hpp"
#include "hommax/curl_div.hpp"
#include "hommax/fields.hpp"
#include "hommax/smoothing.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hommax {

/// Stationary Maxwell system on the periodic torus at the resolvent point i:
///
///   i curl mu_eps^{-1} z - i w = q,   -i curl eta_eps^{-1} w - i z = r,
///   div w = div z = 0,
///
/// with eta_eps(x) = eta(x / eps), mu_eps(x) = mu(x / eps) and eps = 1 / n_periods.
/// The coefficients are given on a cell grid sharing the torus lattice.
struct MaxwellProblem {
  CoefficientField eta;
  CoefficientField mu;
  int n_periods = 1;
  GridSpec torus;
  VectorField q;
  VectorField r;

  double eps() const { return 1.0 / n_periods; }
};

/// Throws InvalidParams when eps cannot be sampled exactly on the torus grid
/// or when q, r are not divergence free (relative 1e-10); GridMismatch when
/// q, r do not live on the torus grid.
void validate(const MaxwellProblem& problem);

/// eta_eps and mu_eps sampled on the torus.
struct TorusCoefficients {
  CoefficientField eta;
  CoefficientField mu;
};

TorusCoefficients torus_coefficients(const MaxwellProblem& problem);

/// The four physical fields of one solution.
struct FieldSet {
  VectorField u, v, w, z;
};

FieldSet operator+(const FieldSet& a, const FieldSet& b);

/// f - s0 grad p with div s0 grad p = div f: the projection onto divergence
/// free fields, orthogonal in the s0^{-1}-weighted inner product. Nyquist
/// modes are left unchanged.
VectorField leray_project_weighted(const VectorField& f, const Mat3& s0);

struct CorrectionRhs {
  VectorField q_eps;
  VectorField r_eps;
};

/// q_eps = P_{eta0} S_eps (Y_eta^eps)^T q and r_eps = P_{mu0} S_eps (Y_mu^eps)^T r.
/// Y fields are given on the cell grid.
CorrectionRhs correction_rhs(const MaxwellProblem& problem, const MatrixField& Y_eta, const MatrixField& Y_mu,
                             const SteklovMultiplier& mult, const Mat3& eta0, const Mat3& mu0,
                             bool dealias = true);

/// The branch operator p^{-1/2} curl s^{-1} curl p^{-1/2} - p^{1/2} grad div p^{1/2} + 1
/// with p = mu, s = eta for the r-branch and the roles swapped for the q-branch.
CurlDivOperator resolvent_operator(const TorusCoefficients& coef, Branch branch);

/// i mu^{-1/2} r (r-branch) or i eta^{-1/2} q (q-branch).
VectorField branch_rhs(const MaxwellProblem& problem, const TorusCoefficients& coef, Branch branch);

struct SymmetrizedSolve {
  VectorField phi;
  SolveStats stats;
  /// ||A phi - b|| / ||b|| in L2.
  double operator_residual = 0.0;
  /// ||div p^{1/2} phi|| / ||b||; zero for the exact solution.
  double constraint_leakage = 0.0;
};

/// PCG solve of the branch equation. Throws NoConvergence.
SymmetrizedSolve solve_symmetrized(const MaxwellProblem& problem, const TorusCoefficients& coef, Branch branch,
                                   const SolveOptions& opt = {});
SymmetrizedSolve solve_symmetrized(const MaxwellProblem& problem, Branch branch, const SolveOptions& opt = {});

/// Exact per-mode inversion of the constant-coefficient branch symbol
/// p0^{-1/2} K^T s0^{-1} K p0^{-1/2} + (p0^{1/2} k)(p0^{1/2} k)^T + 1, K = k x.
VectorField solve_effective(const Mat3& eta0, const Mat3& mu0, Branch branch, const VectorField& rhs);

/// Physical fields from a branch unknown. r-branch: v = mu^{-1/2} phi,
/// z = mu^{1/2} phi, w = curl mu^{-1/2} phi, u = eta^{-1} w. q-branch:
/// u = eta^{-1/2} phi, w = eta^{1/2} phi, z = -curl eta^{-1/2} phi, v = mu^{-1} z.
FieldSet reconstruct_fields(const VectorField& phi, const TorusCoefficients& coef, Branch branch);
/// Same with constant coefficients.
FieldSet reconstruct_fields(const VectorField& phi, const Mat3& eta0, const Mat3& mu0, Branch branch);

/// W*^eps S_eps (phi0 + corr) + eps sum_l Lambda_l^eps S_eps D_l (phi0 + corr), D_l = -i d_l.
/// cell is the branch coefficient's cell solution (mu for r, eta for q).
VectorField first_order_approx(const VectorField& phi0, const VectorField& correction, const CellSolution& cell,
                               const CorrectorSet& correctors, const SteklovMultiplier& mult, int n_periods,
                               bool dealias = true);

/// (1 + Y_eta^eps)(u0 + u^), (1 + G_eta^eps)(w0 + w^), (1 + Y_mu^eps)(v0 + v^),
/// (1 + G_mu^eps)(z0 + z^).
FieldSet approximant_fields(const FieldSet& effective, const FieldSet& correction, const CellSolution& eta,
                            const CellSolution& mu, int n_periods, bool dealias = true);

/// Average of each component over the nodes with fractional coordinates in
/// [lo, hi)^3, returned as the Euclidean norm of the complex mean vector.
double box_mean(const VectorField& f, double lo, double hi);

/// Largest box_mean over the parts^3 boxes of a uniform partition of the
/// fractional cube: a discrete stand-in for the weak norm sup_g |<f, g>| over
/// normalized box indicators.
double partition_mean(const VectorField& f, int parts);

struct MaxwellOptions {
  SolveOptions solve;
  bool r_branch = true;
  bool q_branch = true;
  bool dealias = true;
  int workers = 1;
};

/// Cell data shared by every eps: scalar cell solutions and, when requested,
/// the vector correctors of both branches.
struct HomogenizedData {
  CellSolution eta;
  CellSolution mu;
  std::optional<CorrectorSet> correctors_r;
  std::optional<CorrectorSet> correctors_q;
};

HomogenizedData homogenize(const CoefficientField& eta, const CoefficientField& mu, const SolveOptions& opt,
                           bool with_correctors, int workers = 1);

struct BranchResult {
  Branch branch = Branch::r;
  VectorField phi, phi0, correction;
  /// First order approximation of phi; empty when correctors are missing.
  std::optional<VectorField> psi;
  FieldSet exact, effective, corrections;
  SolveStats stats;
  double operator_residual = 0.0;
  double constraint_leakage = 0.0;
};

struct MaxwellSolution {
  Mat3 eta0 = Mat3::Identity();
  Mat3 mu0 = Mat3::Identity();
  std::vector<BranchResult> branches;
  /// Sums over the solved branches.
  FieldSet exact, effective, correction, approximants;
  /// L2 errors: u, w, v, z against their approximants, and phi_r / phi_q
  /// against psi when available.
  std::map<std::string, double> errors;
  /// Consistency and constraint measurements (all should be small) plus
  /// correction-field means.
  std::map<std::string, double> diagnostics;
};

MaxwellSolution run_maxwell(const MaxwellProblem& problem, const HomogenizedData& cells,
                            const MaxwellOptions& opt = {});

}  // namespace hommax
