#include "hommax/maxwell.hpp"

#include "hommax/errors.hpp"
#include "hommax/parallel.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace hommax {

namespace {

constexpr cplx kI{0.0, 1.0};

VectorField times(const MatrixField& m, const VectorField& v, bool dealias) {
  return dealias ? dealiased_multiply(m, v) : multiply(m, v);
}

VectorField scaled(cplx s, const VectorField& v) {
  VectorField out = v;
  out *= s;
  out.set_real_flag(false);
  return out;
}

// Inner and outer coefficients of a branch: p (the symmetrizing coefficient)
// and s (the one inside the curl-curl term).
struct BranchPair {
  const CoefficientField& p;
  const CoefficientField& s;
};

BranchPair pick(const TorusCoefficients& c, Branch b) {
  return b == Branch::r ? BranchPair{c.mu, c.eta} : BranchPair{c.eta, c.mu};
}

double l2(const VectorField& f) { return l2_norm(f); }

}  // namespace

FieldSet operator+(const FieldSet& a, const FieldSet& b) {
  return {a.u + b.u, a.v + b.v, a.w + b.w, a.z + b.z};
}

void validate(const MaxwellProblem& pb) {
  if (pb.n_periods < 1) throw InvalidParams("eps must be 1/n with a positive integer n");
  if (!commensurate(pb.eta.grid(), pb.torus, pb.n_periods) || !commensurate(pb.mu.grid(), pb.torus, pb.n_periods))
    throw InvalidParams("eps = 1/" + std::to_string(pb.n_periods) +
                        " is not representable: cell and torus grids are not commensurate");
  if (!pb.q.grid().same_shape(pb.torus) || !pb.r.grid().same_shape(pb.torus))
    throw GridMismatch("q and r must be given on the torus grid");
  for (const VectorField* f : {&pb.q, &pb.r}) {
    const double d = l2_norm(divergence(*f));
    if (d > 1e-10 * std::max(1.0, l2(*f))) throw InvalidParams("right-hand sides q and r must be divergence free");
  }
}

TorusCoefficients torus_coefficients(const MaxwellProblem& pb) {
  auto eta = rescale_to_torus(pb.eta.values(), pb.eta.grid(), pb.torus, pb.n_periods);
  auto mu = rescale_to_torus(pb.mu.values(), pb.mu.grid(), pb.torus, pb.n_periods);
  return {CoefficientField(pb.torus, std::move(eta)), CoefficientField(pb.torus, std::move(mu))};
}

VectorField leray_project_weighted(const VectorField& f, const Mat3& s0) {
  Spectrum<3> s = to_spectrum(f);
  const auto& fr = frequencies(f.grid());
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (fr.nyquist[i]) continue;
    const Vec3& k = fr.k[i];
    const Vec3 sk = s0 * k;
    const double den = k.dot(sk);
    const Vec3c fh = s.vec(i);
    const cplx kf = k.cast<cplx>().dot(fh);  // Eigen dot conjugates the first factor; k is real
    s.set_vec(i, fh - sk.cast<cplx>() * (kf / den));
  }
  return to_field(s);
}

CorrectionRhs correction_rhs(const MaxwellProblem& pb, const MatrixField& Y_eta, const MatrixField& Y_mu,
                             const SteklovMultiplier& mult, const Mat3& eta0, const Mat3& mu0, bool dealias) {
  auto one = [&](const MatrixField& Y, const VectorField& src, const Mat3& s0) {
    const MatrixField Yt = rescale_to_torus(Y, pb.torus, pb.n_periods);
    const VectorField prod = dealias ? dealiased_multiply_transpose(Yt, src) : multiply_transpose(Yt, src);
    return leray_project_weighted(steklov_apply(prod, mult), s0);
  };
  return {one(Y_eta, pb.q, eta0), one(Y_mu, pb.r, mu0)};
}

CurlDivOperator resolvent_operator(const TorusCoefficients& coef, Branch branch) {
  const auto [p, s] = pick(coef, branch);
  return CurlDivOperator(p.grid(), p.sqrt(), p.inv_sqrt(), s.inverse(), 1.0, false);
}

VectorField branch_rhs(const MaxwellProblem& pb, const TorusCoefficients& coef, Branch branch) {
  const auto [p, s] = pick(coef, branch);
  (void)s;
  return scaled(kI, hommax::apply(p.inv_sqrt(), branch == Branch::r ? pb.r : pb.q));
}

namespace {

// x -> curl E curl x + p x on Fourier coefficients, with E = s^{-1}. For
// x = p^{-1/2} phi this is p^{1/2} (L + 1) phi plus a pure gradient term that
// vanishes on the solution, and unlike the symmetrized form it is spectrally
// equivalent to its constant-coefficient symbol independently of the period.
class MassCurlOperator {
 public:
  MassCurlOperator(const GridSpec& grid, std::span<const Mat3> p, std::span<const Mat3> e) : p_(p), e_(e) {
    Mat3 pbar = Mat3::Zero(), ebar = Mat3::Zero();
    for (std::size_t i = 0; i < p.size(); ++i) {
      pbar += p[i];
      ebar += e[i];
    }
    pbar /= static_cast<double>(p.size());
    ebar /= static_cast<double>(p.size());
    const auto& fr = frequencies(grid);
    precond_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Mat3 kx = cross_matrix(fr.nyquist[i] ? Vec3::Zero() : fr.k[i]);
      const Mat3 sym = kx.transpose() * ebar * kx + pbar;
      precond_[i] = (0.5 * (sym + sym.transpose())).inverse();
    }
  }

  Spectrum<3> apply(const Spectrum<3>& x) const {
    Spectrum<3> out = curl(to_spectrum(hommax::apply(e_, to_field(curl(x)))));
    out += to_spectrum(hommax::apply(p_, to_field(x)));
    return out;
  }

  Spectrum<3> precondition(const Spectrum<3>& r) const {
    Spectrum<3> z(r.grid());
    for (std::size_t i = 0; i < r.size(); ++i) z.set_vec(i, precond_[i].cast<cplx>() * r.vec(i));
    return z;
  }

 private:
  std::span<const Mat3> p_, e_;
  std::vector<Mat3> precond_;
};

}  // namespace

SymmetrizedSolve solve_symmetrized(const MaxwellProblem& pb, const TorusCoefficients& coef, Branch branch,
                                   const SolveOptions& opt) {
  if (!(opt.tol > 0.0)) throw InvalidParams("solver tolerance must be positive");
  const auto [p, s] = pick(coef, branch);
  const MassCurlOperator mc(pb.torus, p.values(), s.inverse());
  const Spectrum<3> src = to_spectrum(scaled(kI, branch == Branch::r ? pb.r : pb.q));
  const CurlDivOperator op = resolvent_operator(coef, branch);
  const Spectrum<3> b = to_spectrum(branch_rhs(pb, coef, branch));
  const double bn = l2_norm(to_field(b));

  SymmetrizedSolve out;
  Spectrum<3> x(pb.torus);
  SolveOptions inner = opt;
  // tighten until the symmetrized equation itself meets the tolerance
  for (int round = 0; round < 4; ++round) {
    const SolveStats st = pcg<3>([&](const Spectrum<3>& v) { return mc.apply(v); },
                                 [&](const Spectrum<3>& v) { return mc.precondition(v); }, src, x, inner);
    out.stats.iterations += st.iterations;
    out.stats.residual = st.residual;
    out.phi = hommax::apply(p.sqrt(), to_field(x));
    const double res = l2_norm(to_field(op.apply(to_spectrum(out.phi)) - b));
    out.operator_residual = bn > 0.0 ? res / bn : res;
    if (out.operator_residual <= opt.tol) break;
    inner.tol *= 0.1;
  }
  const double leak = l2_norm(divergence(hommax::apply(p.sqrt(), out.phi)));
  out.constraint_leakage = bn > 0.0 ? leak / bn : leak;
  return out;
}

SymmetrizedSolve solve_symmetrized(const MaxwellProblem& pb, Branch branch, const SolveOptions& opt) {
  validate(pb);
  return solve_symmetrized(pb, torus_coefficients(pb), branch, opt);
}

VectorField solve_effective(const Mat3& eta0, const Mat3& mu0, Branch branch, const VectorField& rhs) {
  const Mat3& p0 = branch == Branch::r ? mu0 : eta0;
  const Mat3 s0_inv = (branch == Branch::r ? eta0 : mu0).inverse();
  const Mat3 m = spd_sqrt(p0);
  const Mat3 mi = spd_inv_sqrt(p0);
  Spectrum<3> s = to_spectrum(rhs);
  const auto& fr = frequencies(rhs.grid());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 k = fr.nyquist[i] ? Vec3::Zero() : fr.k[i];
    const Mat3 kx = cross_matrix(k);
    const Vec3 mk = m * k;
    Mat3 sym = mi * kx.transpose() * s0_inv * kx * mi + mk * mk.transpose() + Mat3::Identity();
    sym = 0.5 * (sym + sym.transpose());
    const Eigen::LDLT<Mat3> ldlt(sym);
    const Vec3c bh = s.vec(i);
    const Vec3 re = ldlt.solve(bh.real());
    const Vec3 im = ldlt.solve(bh.imag());
    s.set_vec(i, re.cast<cplx>() + kI * im.cast<cplx>());
  }
  return to_field(s);
}

FieldSet reconstruct_fields(const VectorField& phi, const TorusCoefficients& coef, Branch branch) {
  FieldSet f;
  if (branch == Branch::r) {
    f.v = hommax::apply(coef.mu.inv_sqrt(), phi);
    f.z = hommax::apply(coef.mu.sqrt(), phi);
    f.w = curl(f.v);
    f.u = hommax::apply(coef.eta.inverse(), f.w);
  } else {
    f.u = hommax::apply(coef.eta.inv_sqrt(), phi);
    f.w = hommax::apply(coef.eta.sqrt(), phi);
    f.z = curl(f.u);
    f.z *= -1.0;
    f.v = hommax::apply(coef.mu.inverse(), f.z);
  }
  return f;
}

FieldSet reconstruct_fields(const VectorField& phi, const Mat3& eta0, const Mat3& mu0, Branch branch) {
  FieldSet f;
  if (branch == Branch::r) {
    f.v = hommax::apply(Mat3c(spd_inv_sqrt(mu0).cast<cplx>()), phi);
    f.z = hommax::apply(Mat3c(spd_sqrt(mu0).cast<cplx>()), phi);
    f.w = curl(f.v);
    f.u = hommax::apply(Mat3c(eta0.inverse().cast<cplx>()), f.w);
  } else {
    f.u = hommax::apply(Mat3c(spd_inv_sqrt(eta0).cast<cplx>()), phi);
    f.w = hommax::apply(Mat3c(spd_sqrt(eta0).cast<cplx>()), phi);
    f.z = curl(f.u);
    f.z *= -1.0;
    f.v = hommax::apply(Mat3c(mu0.inverse().cast<cplx>()), f.z);
  }
  return f;
}

VectorField first_order_approx(const VectorField& phi0, const VectorField& correction, const CellSolution& cell,
                               const CorrectorSet& correctors, const SteklovMultiplier& mult, int n_periods,
                               bool dealias) {
  const GridSpec& t = phi0.grid();
  if (!correction.grid().same_shape(t) || !mult.grid.same_shape(t))
    throw GridMismatch("first order approximation inputs live on different grids");
  const double eps = 1.0 / n_periods;
  const Spectrum<3> x = to_spectrum(phi0 + correction);
  VectorField out = times(rescale_to_torus(cell.Wstar, t, n_periods), to_field(steklov_apply(x, mult)), dealias);
  const auto& fr = frequencies(t);
  for (int l = 0; l < 3; ++l) {
    // D_l = -i d_l has symbol k_l
    Spectrum<3> d = x;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < d.size(); ++i) d(c, i) *= fr.nyquist[i] ? 0.0 : fr.k[i][l];
    const VectorField sd = to_field(steklov_apply(d, mult));
    out.axpy(eps, times(rescale_to_torus(correctors.Lambda[l], t, n_periods), sd, dealias));
  }
  return out;
}

FieldSet approximant_fields(const FieldSet& eff, const FieldSet& corr, const CellSolution& eta,
                            const CellSolution& mu, int n_periods, bool dealias) {
  auto one = [&](const MatrixField& cellY, const VectorField& a, const VectorField& b) {
    const VectorField s = a + b;
    return s + times(rescale_to_torus(cellY, s.grid(), n_periods), s, dealias);
  };
  FieldSet f;
  f.u = one(eta.Y, eff.u, corr.u);
  f.w = one(eta.G, eff.w, corr.w);
  f.v = one(mu.Y, eff.v, corr.v);
  f.z = one(mu.G, eff.z, corr.z);
  return f;
}

double box_mean(const VectorField& f, double lo, double hi) {
  const GridSpec& g = f.grid();
  Vec3c acc = Vec3c::Zero();
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 t = g.fractional(i);
    if ((t.array() >= lo).all() && (t.array() < hi).all()) {
      acc += f.vec(i);
      ++count;
    }
  }
  return count ? acc.norm() / static_cast<double>(count) : 0.0;
}

double partition_mean(const VectorField& f, int parts) {
  const GridSpec& g = f.grid();
  const std::size_t nb = static_cast<std::size_t>(parts) * parts * parts;
  std::vector<Vec3c> acc(nb, Vec3c::Zero());
  std::vector<std::size_t> count(nb, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 t = g.fractional(i);
    std::size_t b = 0;
    for (int j = 0; j < 3; ++j) {
      const int c = std::min(parts - 1, static_cast<int>(std::floor((t[j] + 0.5) * parts)));
      b = b * parts + static_cast<std::size_t>(c);
    }
    acc[b] += f.vec(i);
    ++count[b];
  }
  double m = 0.0;
  for (std::size_t b = 0; b < nb; ++b)
    if (count[b]) m = std::max(m, acc[b].norm() / static_cast<double>(count[b]));
  return m;
}

HomogenizedData homogenize(const CoefficientField& eta, const CoefficientField& mu, const SolveOptions& opt,
                           bool with_correctors, int workers) {
  HomogenizedData h{solve_scalar_cell(eta, opt, workers), solve_scalar_cell(mu, opt, workers), {}, {}};
  if (with_correctors) {
    h.correctors_r = solve_vector_cell(h.eta, h.mu, Branch::r, opt, workers);
    h.correctors_q = solve_vector_cell(h.eta, h.mu, Branch::q, opt, workers);
  }
  return h;
}

MaxwellSolution run_maxwell(const MaxwellProblem& pb, const HomogenizedData& cells, const MaxwellOptions& opt) {
  validate(pb);
  if (!opt.r_branch && !opt.q_branch) throw InvalidParams("at least one branch must be selected");
  const TorusCoefficients coef = torus_coefficients(pb);
  MaxwellSolution sol;
  sol.eta0 = cells.eta.effective;
  sol.mu0 = cells.mu.effective;
  const SteklovMultiplier mult = steklov_multiplier(pb.torus.lattice, pb.torus, pb.eps());
  const CorrectionRhs crhs = correction_rhs(pb, cells.eta.Y, cells.mu.Y, mult, sol.eta0, sol.mu0, opt.dealias);

  std::vector<Branch> todo;
  if (opt.r_branch) todo.push_back(Branch::r);
  if (opt.q_branch) todo.push_back(Branch::q);
  sol.branches.resize(todo.size());
  parallel_for(todo.size(), opt.workers, [&](std::size_t bi) {
    const Branch b = todo[bi];
    BranchResult& br = sol.branches[bi];
    br.branch = b;
    SymmetrizedSolve ss = solve_symmetrized(pb, coef, b, opt.solve);
    br.phi = std::move(ss.phi);
    br.stats = ss.stats;
    br.operator_residual = ss.operator_residual;
    br.constraint_leakage = ss.constraint_leakage;
    const Mat3 p0_inv_sqrt = spd_inv_sqrt(b == Branch::r ? sol.mu0 : sol.eta0);
    const Mat3c scale = kI * p0_inv_sqrt.cast<cplx>();
    br.phi0 = solve_effective(sol.eta0, sol.mu0, b, hommax::apply(scale, b == Branch::r ? pb.r : pb.q));
    br.correction =
        solve_effective(sol.eta0, sol.mu0, b, hommax::apply(scale, b == Branch::r ? crhs.r_eps : crhs.q_eps));
    br.exact = reconstruct_fields(br.phi, coef, b);
    br.effective = reconstruct_fields(br.phi0, sol.eta0, sol.mu0, b);
    br.corrections = reconstruct_fields(br.correction, sol.eta0, sol.mu0, b);
    const auto& corr = b == Branch::r ? cells.correctors_r : cells.correctors_q;
    if (corr)
      br.psi = first_order_approx(br.phi0, br.correction, b == Branch::r ? cells.mu : cells.eta, *corr, mult,
                                  pb.n_periods, opt.dealias);
  });

  sol.exact = sol.branches[0].exact;
  sol.effective = sol.branches[0].effective;
  sol.correction = sol.branches[0].corrections;
  for (std::size_t bi = 1; bi < sol.branches.size(); ++bi) {
    sol.exact = sol.exact + sol.branches[bi].exact;
    sol.effective = sol.effective + sol.branches[bi].effective;
    sol.correction = sol.correction + sol.branches[bi].corrections;
  }
  sol.approximants = approximant_fields(sol.effective, sol.correction, cells.eta, cells.mu, pb.n_periods, opt.dealias);

  auto diff = [](const VectorField& a, const VectorField& b) { return l2_norm(a - b); };
  sol.errors["u"] = diff(sol.exact.u, sol.approximants.u);
  sol.errors["w"] = diff(sol.exact.w, sol.approximants.w);
  sol.errors["v"] = diff(sol.exact.v, sol.approximants.v);
  sol.errors["z"] = diff(sol.exact.z, sol.approximants.z);
  for (const auto& br : sol.branches)
    if (br.psi) sol.errors["phi_" + to_string(br.branch)] = diff(br.phi, *br.psi);

  auto& d = sol.diagnostics;
  const double src = l2(pb.q) + l2(pb.r);
  const double scale = src > 0.0 ? src : 1.0;
  d["source_norm"] = src;
  d["reconstruction_w"] = diff(sol.exact.w, hommax::apply(coef.eta.values(), sol.exact.u)) / scale;
  d["reconstruction_z"] = diff(sol.exact.z, hommax::apply(coef.mu.values(), sol.exact.v)) / scale;
  d["div_w"] = l2_norm(divergence(sol.exact.w)) / scale;
  d["div_z"] = l2_norm(divergence(sol.exact.z)) / scale;
  {
    // i curl v - i w = q and -i curl u - i z = r
    VectorField e1 = scaled(kI, curl(sol.exact.v) - sol.exact.w);
    e1 -= pb.q;
    VectorField e2 = scaled(-kI, curl(sol.exact.u) + sol.exact.z);
    e2 -= pb.r;
    d["maxwell_residual_q"] = l2(e1) / scale;
    d["maxwell_residual_r"] = l2(e2) / scale;
  }
  for (const auto& br : sol.branches) {
    const std::string tag = to_string(br.branch);
    d["operator_residual_" + tag] = br.operator_residual;
    d["constraint_leakage_" + tag] = br.constraint_leakage;
    d["iterations_" + tag] = br.stats.iterations;
  }
  d["q_eps_norm"] = l2(crhs.q_eps);
  d["r_eps_norm"] = l2(crhs.r_eps);
  d["q_eps_bound"] = pb.eta.lambda_max() / pb.eta.lambda_min() * l2(pb.q);
  d["r_eps_bound"] = pb.mu.lambda_max() / pb.mu.lambda_min() * l2(pb.r);
  const std::pair<const char*, const VectorField*> corr_fields[] = {
      {"u", &sol.correction.u}, {"w", &sol.correction.w}, {"v", &sol.correction.v}, {"z", &sol.correction.z}};
  for (const auto& [name, f] : corr_fields) {
    d[std::string("correction_mean_") + name] = mean_vector(*f).norm();
    d[std::string("correction_box_mean_") + name] = box_mean(*f, 0.0, 0.3);
    d[std::string("correction_partition_mean_") + name] = partition_mean(*f, 3);
    d[std::string("correction_norm_") + name] = l2(*f);
  }
  return sol;
}

}  // namespace hommax
