#pragma once

#include "hommax/cg.hpp"
#include "hommax/fields.hpp"

#include <array>
#include <span>
#include <string>

namespace hommax {

/// Which side of the Maxwell pipeline an object belongs to. The r-branch is
/// built on the permeability mu (f_lj, Lambda_l, W_mu*), the q-branch on the
/// permittivity eta (hatted objects, W_eta*).
enum class Branch { r, q };

std::string to_string(Branch b);

/// Solution of the three scalar cell problems div a (grad Phi_j + e_j) = 0
/// with zero-mean Phi_j, and everything derived from them.
struct CellSolution {
  CoefficientField coefficient;
  std::array<ScalarField, 3> potentials;
  /// Columns grad Phi_j.
  MatrixField Y;
  /// a (1 + Y).
  MatrixField tilde;
  /// mean(tilde), symmetrized; the asymmetry before symmetrizing is kept.
  Mat3 effective;
  double effective_asymmetry = 0.0;
  /// tilde a0^{-1} - 1.
  MatrixField G;
  /// a^{-1/2} tilde a0^{-1/2}.
  MatrixField Wstar;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Conjugate gradients on -div a grad + mean, preconditioned with the exact
/// inverse of -div mean(a) grad. Throws NoConvergence.
CellSolution solve_scalar_cell(const CoefficientField& a, const SolveOptions& opt = {}, int workers = 1);

/// Solutions of Delta U_li = tilde_li - a0_li (zero mean) and
/// M^(i)_lj = d_j U_li - d_l U_ji.
struct AntisymPotentials {
  /// U[l][i]
  std::array<std::array<ScalarField, 3>, 3> U;
  /// M[i][l][j]
  std::array<std::array<std::array<ScalarField, 3>, 3>, 3> M;
};

AntisymPotentials build_antisym_potentials(const CellSolution& cell);

/// Vector cell solutions f_lj for one branch, Lambda_l with columns f_lj, and
/// the antisymmetric potentials of that branch's coefficient.
struct CorrectorSet {
  Branch branch = Branch::r;
  /// f[l][j]
  std::array<std::array<VectorField, 3>, 3> f;
  std::array<MatrixField, 3> Lambda;
  AntisymPotentials potentials;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// Solves, for the r-branch (p = mu, s = eta; swapped for the q-branch),
///
///   p^{-1/2} curl s^{-1} (curl p^{-1/2} f + i e_l x Q_j)
///     - p^{1/2} grad (div p^{1/2} f + i e_l . p Q_j) = 0,   mean f = 0,
///
/// with Q_j = (1 + Y_p) p0^{-1/2} e_j, the corrected field of the auxiliary
/// cell problem (assembled from the Y_p columns by linearity).
CorrectorSet solve_vector_cell(const CellSolution& eta, const CellSolution& mu, Branch branch,
                               const SolveOptions& opt = {}, int workers = 1);

/// Closed-form value of div p^{1/2} f_lj:
/// i e_l . (p0^{1/2} e_j) - i e_l . (tilde_p p0^{-1/2} e_j).
ScalarField predicted_div_f(const CellSolution& p, int l, int j);
/// Closed-form value of s^{-1} curl p^{-1/2} f_lj:
/// i (1 + Y_s) s0^{-1} (e_l x c_j) + i s^{-1} (((1 + Y_p) c_j) x e_l), c_j = p0^{-1/2} e_j.
VectorField predicted_rot_f(const CellSolution& s, const CellSolution& p, int l, int j);

/// Recovers f (zero mean) from prescribed D = div p^{1/2} f and
/// R = curl p^{-1/2} f by solving the curl-div system with unit inner
/// coefficient. An independent path to f_lj.
VectorField reconstruct_from_div_curl(const CellSolution& p, const ScalarField& div_data,
                                      const VectorField& curl_data, const SolveOptions& opt = {});

struct CellChecks {
  double mean_potentials = 0.0;  ///< max |mean Phi_j|
  double mean_Y = 0.0;           ///< max |mean Y_rs|
  double mean_G = 0.0;
  double div_tilde = 0.0;        ///< max_j ||div tilde e_j||_L2
  double voigt_slack = 0.0;      ///< min eig(mean a - a0)
  double reuss_slack = 0.0;      ///< min eig(a0 - harmonic mean a)
  double min_eig_effective = 0.0;
  double Y_norm = 0.0;           ///< L2 norm of the pointwise operator norm of Y
  double Y_column_norm = 0.0;    ///< max_j ||grad Phi_j||_L2
  double Y_bound = 0.0;          ///< (||a|| ||a^{-1}|| |Omega|)^{1/2}
  double Phi_norm = 0.0;         ///< max_j ||Phi_j||_L2
  double Phi_bound = 0.0;        ///< (2 r0)^{-1} Y_bound
  double sup_Y = 0.0;
  double sup_G = 0.0;
};

CellChecks check_cell(const CellSolution& cell);

struct CorrectorChecks {
  double mean_f = 0.0;        ///< max |mean f_lj|
  double div_f = 0.0;         ///< max ||div p^{1/2} f - predicted||_L2
  double rot_f = 0.0;         ///< max ||s^{-1} curl p^{-1/2} f - predicted||_L2
  double antisymmetry = 0.0;  ///< max |M_lj + M_jl|
  double potential_identity = 0.0;  ///< max ||sum_j d_j M_lj^(i) - (tilde_li - p0_li)||_L2
  double M_norm = 0.0, M_bound = 0.0;
  double gradM_norm = 0.0, gradM_bound = 0.0;
  std::array<double, 3> Lambda_norm{};
};

CorrectorChecks check_correctors(const CellSolution& eta, const CellSolution& mu, const CorrectorSet& set);

/// Inequality int |Y^eps|^2 |u|^2 <= beta1 int |u|^2 + beta2 eps^2 int |grad u|^2
/// on the torus of u, with |.| the pointwise operator norm and eps = 1/n_periods.
struct MultiplierResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct MultiplierBetas {
  double beta1 = 0.0;
  double beta2 = 0.0;
};

MultiplierResult multiplier_check(const MatrixField& Y_cell, const VectorField& u, int n_periods,
                                  const MultiplierBetas& betas);

/// beta1 = 2 mean(|Y|^2)(1 + margin); beta2 is the smallest value making the
/// inequality hold on every calibration field (times 1 + margin).
MultiplierBetas calibrate_multiplier(const MatrixField& Y_cell, std::span<const VectorField> fields,
                                     std::span<const int> n_periods, double margin = 0.1);

}  // namespace hommax
