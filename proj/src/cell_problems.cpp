#include "hommax/cell_problems.hpp"

#include "hommax/curl_div.hpp"
#include "hommax/errors.hpp"
#include "hommax/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace hommax {

namespace {

constexpr cplx kI{0.0, 1.0};

Mat3 real_part(const Mat3c& m) { return m.real(); }

double min_eig(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()));
  return es.eigenvalues()[0];
}

// -div a grad + mean on Fourier coefficients.
class ScalarCellOperator {
 public:
  explicit ScalarCellOperator(const CoefficientField& a) : a_(a) {
    const Mat3 abar = a.mean();
    const auto& fr = frequencies(a.grid());
    precond_.resize(a.grid().size());
    for (std::size_t i = 0; i < precond_.size(); ++i) {
      if (i == 0) {
        precond_[i] = 1.0;
      } else if (fr.nyquist[i]) {
        precond_[i] = 0.0;
      } else {
        precond_[i] = 1.0 / fr.k[i].dot(abar * fr.k[i]);
      }
    }
  }

  Spectrum<1> apply(const Spectrum<1>& phi) const {
    const VectorField flux = hommax::apply(a_.values(), to_field(gradient(phi)));
    Spectrum<1> out = divergence(to_spectrum(flux));
    out *= -1.0;
    out(0, 0) += phi(0, 0);
    return out;
  }

  Spectrum<1> precondition(const Spectrum<1>& r) const {
    Spectrum<1> z(r.grid());
    for (std::size_t i = 0; i < r.size(); ++i) z(0, i) = precond_[i] * r(0, i);
    return z;
  }

 private:
  const CoefficientField& a_;
  std::vector<double> precond_;
};

// (1 + Y) c at every node.
VectorField corrected(const MatrixField& Y, const Vec3& c) {
  VectorField out(Y.grid());
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const Vec3 y = Y.mat(i).real() * c;
    out.set_vec(i, (c + y).cast<cplx>());
  }
  out.set_real_flag(true);
  return out;
}

void require_same_grid(const CellSolution& a, const CellSolution& b) {
  if (!a.coefficient.grid().same_shape(b.coefficient.grid()))
    throw GridMismatch("eta and mu cell solutions live on different grids");
}

}  // namespace

std::string to_string(Branch b) { return b == Branch::r ? "r" : "q"; }

// ------------------------------------------------------------- scalar cell

CellSolution solve_scalar_cell(const CoefficientField& a, const SolveOptions& opt, int workers) {
  if (!(opt.tol > 0.0)) throw InvalidParams("solver tolerance must be positive");
  const GridSpec& g = a.grid();
  const ScalarCellOperator op(a);
  std::array<Spectrum<1>, 3> sol;
  std::array<SolveStats, 3> stats;
  parallel_for(3, workers, [&](std::size_t j) {
    VectorField col(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      for (int r = 0; r < 3; ++r) col(r, i) = a.at(i)(r, static_cast<int>(j));
    col.set_real_flag(true);
    const Spectrum<1> b = divergence(to_spectrum(col));
    Spectrum<1> x(g);
    stats[j] = pcg<1>([&](const Spectrum<1>& v) { return op.apply(v); },
                      [&](const Spectrum<1>& v) { return op.precondition(v); }, b, x, opt);
    x.set_real_flag(true);
    sol[j] = std::move(x);
  });

  CellSolution cs{a, {}, MatrixField(g), MatrixField(g), Mat3::Zero(), 0.0, MatrixField(g), MatrixField(g),
                  0.0, 0};
  for (int j = 0; j < 3; ++j) {
    cs.potentials[j] = to_field(sol[j]);
    set_column(cs.Y, j, to_field(gradient(sol[j])));
    cs.residual_norm = std::max(cs.residual_norm, stats[j].residual);
    cs.iterations = std::max(cs.iterations, stats[j].iterations);
  }
  cs.Y.set_real_flag(true);
  make_real(cs.Y);

  for (std::size_t i = 0; i < g.size(); ++i) {
    const Mat3 t = a.at(i) * (Mat3::Identity() + cs.Y.mat(i).real());
    cs.tilde.set_mat(i, t.cast<cplx>());
  }
  cs.tilde.set_real_flag(true);
  const Mat3 eff = real_part(mean_matrix(cs.tilde));
  cs.effective_asymmetry = (eff - eff.transpose()).norm() / eff.norm();
  cs.effective = 0.5 * (eff + eff.transpose());

  const Mat3 eff_inv = cs.effective.inverse();
  const Mat3 eff_inv_sqrt = spd_inv_sqrt(cs.effective);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Mat3 t = cs.tilde.mat(i).real();
    cs.G.set_mat(i, (t * eff_inv - Mat3::Identity()).cast<cplx>());
    cs.Wstar.set_mat(i, (a.inv_sqrt()[i] * t * eff_inv_sqrt).cast<cplx>());
  }
  cs.G.set_real_flag(true);
  cs.Wstar.set_real_flag(true);
  return cs;
}

// -------------------------------------------------------- antisym potentials

AntisymPotentials build_antisym_potentials(const CellSolution& cell) {
  const GridSpec& g = cell.coefficient.grid();
  const auto& fr = frequencies(g);
  AntisymPotentials out;
  // U[l][i]: Delta U_li = tilde_li - a0_li, solved mode by mode.
  std::array<std::array<Spectrum<1>, 3>, 3> Uhat;
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i) {
      ScalarField t(g);
      for (std::size_t n = 0; n < g.size(); ++n) t(0, n) = cell.tilde(3 * l + i, n) - cell.effective(l, i);
      t.set_real_flag(true);
      Spectrum<1> s = to_spectrum(t);
      for (std::size_t n = 0; n < g.size(); ++n) {
        const double k2 = fr.k[n].squaredNorm();
        s(0, n) = (n == 0 || fr.nyquist[n]) ? cplx{} : -s(0, n) / k2;
      }
      out.U[l][i] = to_field(s);
      Uhat[l][i] = std::move(s);
    }
  auto d = [&](const Spectrum<1>& s, int axis) {
    Spectrum<1> r(g);
    for (std::size_t n = 0; n < g.size(); ++n)
      r(0, n) = fr.nyquist[n] ? cplx{} : kI * fr.k[n][axis] * s(0, n);
    r.set_real_flag(s.real_flag());
    return r;
  };
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 3; ++j) {
        Spectrum<1> m = d(Uhat[l][i], j) - d(Uhat[j][i], l);
        out.M[i][l][j] = to_field(m);
      }
  return out;
}

// --------------------------------------------------------------- vector cell

CorrectorSet solve_vector_cell(const CellSolution& eta, const CellSolution& mu, Branch branch,
                               const SolveOptions& opt, int workers) {
  if (!(opt.tol > 0.0)) throw InvalidParams("solver tolerance must be positive");
  require_same_grid(eta, mu);
  const CellSolution& p = branch == Branch::r ? mu : eta;
  const CellSolution& s = branch == Branch::r ? eta : mu;
  const GridSpec& g = p.coefficient.grid();
  const CurlDivOperator op(g, p.coefficient.sqrt(), p.coefficient.inv_sqrt(), s.coefficient.inverse(), 0.0,
                           true);
  const Mat3 p0_inv_sqrt = spd_inv_sqrt(p.effective);

  CorrectorSet set;
  set.branch = branch;
  std::array<SolveStats, 9> stats;
  parallel_for(9, workers, [&](std::size_t task) {
    const int l = static_cast<int>(task / 3);
    const int j = static_cast<int>(task % 3);
    const Vec3 c = p0_inv_sqrt.col(j);
    const VectorField q = corrected(p.Y, c);
    VectorField a_src(g);
    ScalarField b_src(g);
    const Vec3 el = Vec3::Unit(l);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 qi = q.vec(i).real();
      a_src.set_vec(i, kI * el.cross(qi).cast<cplx>());
      b_src(0, i) = kI * (p.coefficient.at(i) * qi)[l];
    }
    const VectorField t1 = to_field(curl(to_spectrum(hommax::apply(s.coefficient.inverse(), a_src))));
    const VectorField t2 = to_field(gradient(to_spectrum(b_src)));
    VectorField rhs = hommax::apply(p.coefficient.sqrt(), t2);
    rhs -= hommax::apply(p.coefficient.inv_sqrt(), t1);
    Spectrum<3> x(g);
    stats[task] = op.solve(to_spectrum(rhs), x, opt);
    set.f[l][j] = to_field(x);
  });
  for (int l = 0; l < 3; ++l) {
    set.Lambda[l] = MatrixField(g);
    for (int j = 0; j < 3; ++j) set_column(set.Lambda[l], j, set.f[l][j]);
  }
  for (const auto& st : stats) {
    set.residual_norm = std::max(set.residual_norm, st.residual);
    set.iterations = std::max(set.iterations, st.iterations);
  }
  set.potentials = build_antisym_potentials(p);
  return set;
}

ScalarField predicted_div_f(const CellSolution& p, int l, int j) {
  const GridSpec& g = p.coefficient.grid();
  const Mat3 p0_sqrt = spd_sqrt(p.effective);
  const Vec3 c = spd_inv_sqrt(p.effective).col(j);
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double t = (p.tilde.mat(i).real() * c)[l];
    out(0, i) = kI * (p0_sqrt(l, j) - t);
  }
  return out;
}

VectorField predicted_rot_f(const CellSolution& s, const CellSolution& p, int l, int j) {
  require_same_grid(s, p);
  const GridSpec& g = p.coefficient.grid();
  const Vec3 c = spd_inv_sqrt(p.effective).col(j);
  const Vec3 el = Vec3::Unit(l);
  const Vec3 w = s.effective.inverse() * el.cross(c);
  VectorField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 first = (Mat3::Identity() + s.Y.mat(i).real()) * w;
    const Vec3 q = (Mat3::Identity() + p.Y.mat(i).real()) * c;
    const Vec3 second = s.coefficient.inverse()[i] * q.cross(el);
    out.set_vec(i, kI * (first + second).cast<cplx>());
  }
  return out;
}

VectorField reconstruct_from_div_curl(const CellSolution& p, const ScalarField& div_data,
                                      const VectorField& curl_data, const SolveOptions& opt) {
  const GridSpec& g = p.coefficient.grid();
  const std::vector<Mat3> unit(g.size(), Mat3::Identity());
  const CurlDivOperator op(g, p.coefficient.sqrt(), p.coefficient.inv_sqrt(), unit, 0.0, true);
  const VectorField t1 = to_field(curl(to_spectrum(curl_data)));
  const VectorField t2 = to_field(gradient(to_spectrum(div_data)));
  VectorField rhs = hommax::apply(p.coefficient.inv_sqrt(), t1);
  rhs -= hommax::apply(p.coefficient.sqrt(), t2);
  Spectrum<3> x(g);
  op.solve(to_spectrum(rhs), x, opt);
  return to_field(x);
}

// ------------------------------------------------------------------ checks

CellChecks check_cell(const CellSolution& cell) {
  const auto& a = cell.coefficient;
  const GridSpec& g = a.grid();
  CellChecks c;
  for (int j = 0; j < 3; ++j) {
    c.mean_potentials = std::max(c.mean_potentials, std::abs(mean_scalar(cell.potentials[j])));
    c.div_tilde = std::max(c.div_tilde, l2_norm(divergence(column(cell.tilde, j))));
    c.Y_column_norm = std::max(c.Y_column_norm, l2_norm(column(cell.Y, j)));
    c.Phi_norm = std::max(c.Phi_norm, l2_norm(cell.potentials[j]));
  }
  c.mean_Y = mean_matrix(cell.Y).cwiseAbs().maxCoeff();
  c.mean_G = mean_matrix(cell.G).cwiseAbs().maxCoeff();
  c.voigt_slack = min_eig(a.mean() - cell.effective);
  c.reuss_slack = min_eig(cell.effective - a.harmonic_mean());
  c.min_eig_effective = min_eig(cell.effective);

  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Eigen::JacobiSVD<Mat3> svd(cell.Y.mat(i).real());
    const double s = svd.singularValues()[0];
    acc += s * s;
    c.sup_Y = std::max(c.sup_Y, s);
    Eigen::JacobiSVD<Mat3> svg(cell.G.mat(i).real());
    c.sup_G = std::max(c.sup_G, svg.singularValues()[0]);
  }
  const double vol = g.lattice.cell_volume;
  c.Y_norm = std::sqrt(vol * acc / static_cast<double>(g.size()));
  c.Y_bound = std::sqrt(a.lambda_max() / a.lambda_min() * vol);
  c.Phi_bound = c.Y_bound / (2.0 * g.lattice.r0);
  return c;
}

CorrectorChecks check_correctors(const CellSolution& eta, const CellSolution& mu, const CorrectorSet& set) {
  const CellSolution& p = set.branch == Branch::r ? mu : eta;
  const CellSolution& s = set.branch == Branch::r ? eta : mu;
  const GridSpec& g = p.coefficient.grid();
  CorrectorChecks c;
  for (int l = 0; l < 3; ++l) {
    for (int j = 0; j < 3; ++j) {
      const VectorField& f = set.f[l][j];
      c.mean_f = std::max(c.mean_f, mean_vector(f).norm());
      const ScalarField div = divergence(hommax::apply(p.coefficient.sqrt(), f));
      c.div_f = std::max(c.div_f, l2_norm(div - predicted_div_f(p, l, j)));
      const VectorField rot = hommax::apply(s.coefficient.inverse(), curl(hommax::apply(p.coefficient.inv_sqrt(), f)));
      c.rot_f = std::max(c.rot_f, l2_norm(rot - predicted_rot_f(s, p, l, j)));
    }
    c.Lambda_norm[l] = l2_norm(set.Lambda[l]);
  }
  const auto& pot = set.potentials;
  const double vol_sqrt = std::sqrt(g.lattice.cell_volume);
  c.M_bound = p.coefficient.lambda_max() / g.lattice.r0 * vol_sqrt;
  c.gradM_bound = 2.0 * p.coefficient.lambda_max() * vol_sqrt;
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) {
      ScalarField sum(g);
      for (int j = 0; j < 3; ++j) {
        const ScalarField& m = pot.M[i][l][j];
        c.antisymmetry = std::max(c.antisymmetry, sup_norm(m + pot.M[i][j][l]));
        c.M_norm = std::max(c.M_norm, l2_norm(m));
        c.gradM_norm = std::max(c.gradM_norm, l2_norm(gradient(m)));
        sum += partial(m, j);
      }
      ScalarField target(g);
      for (std::size_t n = 0; n < g.size(); ++n) target(0, n) = p.tilde(3 * l + i, n) - p.effective(l, i);
      c.potential_identity = std::max(c.potential_identity, l2_norm(sum - target));
    }
  return c;
}

// -------------------------------------------------------------- multipliers

namespace {

struct MultiplierTerms {
  double weighted = 0.0;  // int |Y^eps|^2 |u|^2
  double mass = 0.0;      // int |u|^2
  double grad = 0.0;      // int |grad u|^2
};

MultiplierTerms multiplier_terms(const MatrixField& Y_cell, const VectorField& u, int n_periods) {
  const GridSpec& t = u.grid();
  const GridSpec& cg = Y_cell.grid();
  // pointwise squared operator norm on the cell, then rescaled
  ScalarField ynorm(cg);
  for (std::size_t i = 0; i < cg.size(); ++i) {
    Eigen::JacobiSVD<Mat3c> svd(Y_cell.mat(i));
    const double s = svd.singularValues()[0];
    ynorm(0, i) = s * s;
  }
  const ScalarField yt = rescale_to_torus(ynorm, t, n_periods);
  MultiplierTerms m;
  const double w = t.lattice.cell_volume / static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u2 = u.vec(i).squaredNorm();
    m.weighted += yt(0, i).real() * u2 * w;
    m.mass += u2 * w;
  }
  for (int c = 0; c < 3; ++c) {
    const double gn = l2_norm(gradient(component(u, c)));
    m.grad += gn * gn;
  }
  return m;
}

}  // namespace

MultiplierResult multiplier_check(const MatrixField& Y_cell, const VectorField& u, int n_periods,
                                  const MultiplierBetas& betas) {
  const double eps = 1.0 / n_periods;
  const auto m = multiplier_terms(Y_cell, u, n_periods);
  MultiplierResult r;
  r.lhs = m.weighted;
  r.rhs = betas.beta1 * m.mass + betas.beta2 * eps * eps * m.grad;
  r.holds = r.lhs <= r.rhs;
  return r;
}

MultiplierBetas calibrate_multiplier(const MatrixField& Y_cell, std::span<const VectorField> fields,
                                     std::span<const int> n_periods, double margin) {
  const GridSpec& cg = Y_cell.grid();
  double mean_y2 = 0.0;
  for (std::size_t i = 0; i < cg.size(); ++i) {
    Eigen::JacobiSVD<Mat3c> svd(Y_cell.mat(i));
    mean_y2 += svd.singularValues()[0] * svd.singularValues()[0];
  }
  mean_y2 /= static_cast<double>(cg.size());
  MultiplierBetas b;
  b.beta1 = 2.0 * mean_y2 * (1.0 + margin);
  double beta2 = 0.0;
  for (const auto& u : fields)
    for (int n : n_periods) {
      const auto m = multiplier_terms(Y_cell, u, n);
      const double eps = 1.0 / n;
      if (m.grad > 0.0) beta2 = std::max(beta2, (m.weighted - b.beta1 * m.mass) / (eps * eps * m.grad));
    }
  b.beta2 = beta2 * (1.0 + margin);
  return b;
}

}  // namespace hommax
