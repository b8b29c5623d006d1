#include "commands.hpp"

#include "hommax/errors.hpp"
#include "hommax/field_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <ostream>

namespace hommax::cli {

using json = nlohmann::ordered_json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json cell_json(const CellSolution& s) {
  const CellChecks c = check_cell(s);
  json j;
  j["effective"] = matrix_json(s.effective);
  j["arithmetic_mean"] = matrix_json(s.coefficient.mean());
  j["harmonic_mean"] = matrix_json(s.coefficient.harmonic_mean());
  j["effective_asymmetry"] = s.effective_asymmetry;
  j["iterations"] = s.iterations;
  j["residual"] = s.residual_norm;
  j["checks"] = {{"mean_potentials", c.mean_potentials},
                 {"mean_Y", c.mean_Y},
                 {"mean_G", c.mean_G},
                 {"div_tilde", c.div_tilde},
                 {"voigt_slack", c.voigt_slack},
                 {"reuss_slack", c.reuss_slack},
                 {"min_eig_effective", c.min_eig_effective},
                 {"Y_norm", c.Y_norm},
                 {"Y_column_norm", c.Y_column_norm},
                 {"Y_bound", c.Y_bound},
                 {"Phi_norm", c.Phi_norm},
                 {"Phi_bound", c.Phi_bound},
                 {"sup_Y", c.sup_Y},
                 {"sup_G", c.sup_G}};
  return j;
}

json corrector_json(const CellSolution& eta, const CellSolution& mu, const CorrectorSet& set) {
  const CorrectorChecks c = check_correctors(eta, mu, set);
  json j;
  j["iterations"] = set.iterations;
  j["residual"] = set.residual_norm;
  j["checks"] = {{"mean_f", c.mean_f},
                 {"div_f", c.div_f},
                 {"rot_f", c.rot_f},
                 {"antisymmetry", c.antisymmetry},
                 {"potential_identity", c.potential_identity},
                 {"M_norm", c.M_norm},
                 {"M_bound", c.M_bound},
                 {"gradM_norm", c.gradM_norm},
                 {"gradM_bound", c.gradM_bound},
                 {"Lambda_norm", c.Lambda_norm}};
  return j;
}

bool cubic(const RunConfig& cfg) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j && cfg.lattice[i].dot(cfg.lattice[j]) != 0.0) return false;
  return true;
}

// Oracle comparison for layered media on orthogonal lattices with unit
// period along the layering axis.
std::optional<json> layered_comparison(const RunConfig& cfg, const CoefficientDescriptor& d, const Mat3& eff) {
  if (d.kind != CoefficientKind::layered_smoothed || !cubic(cfg)) return std::nullopt;
  const Mat3 ref = layered_smoothed_oracle(d);
  json j;
  j["reference"] = matrix_json(ref);
  j["relative_error"] = (eff - ref).norm() / ref.norm();
  j["sharp_laminate"] = matrix_json(layered_oracle(d.alpha, d.beta, d.fill));
  return j;
}

}  // namespace

json config_json(const RunConfig& c) {
  json j;
  json lat = json::array();
  for (const auto& a : c.lattice) lat.push_back({a[0], a[1], a[2]});
  j["lattice"] = lat;
  j["torus_n"] = c.torus_n;
  j["cell_n"] = c.cell_n;
  j["eta"] = to_json(c.eta);
  j["mu"] = to_json(c.mu);
  j["tol"] = c.tol;
  j["max_iterations"] = c.max_iterations;
  j["dealias"] = c.dealias;
  j["eps_inverse"] = c.eps_inverse;
  j["branches"] = to_string(c.branches);
  j["source"] = {{"seed", c.source_seed}, {"band", c.source_band}, {"terms", c.source_terms}};
  j["workers"] = c.workers;
  return j;
}

json cmd_cell(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path out = cfg.out_dir;
  std::filesystem::create_directories(out);
  const SolveOptions opt{cfg.tol, cfg.max_iterations};
  const GridSpec cell = cfg.cell();
  const HomogenizedData h =
      homogenize(generate_coefficient(cfg.eta, cell), generate_coefficient(cfg.mu, cell), opt, true, cfg.workers);

  json j;
  j["command"] = "cell";
  j["config"] = config_json(cfg);
  j["eta"] = cell_json(h.eta);
  j["mu"] = cell_json(h.mu);
  j["correctors"] = {{"r", corrector_json(h.eta, h.mu, *h.correctors_r)},
                     {"q", corrector_json(h.eta, h.mu, *h.correctors_q)}};
  json oracle = json::object();
  if (auto c = layered_comparison(cfg, cfg.eta, h.eta.effective)) oracle["eta"] = *c;
  if (auto c = layered_comparison(cfg, cfg.mu, h.mu.effective)) oracle["mu"] = *c;
  j["oracle"] = oracle;

  json files = json::array();
  if (cfg.dump_fields) {
    std::filesystem::create_directories(out / "fields");
    const std::pair<const char*, const MatrixField*> dumps[] = {
        {"Y_eta", &h.eta.Y}, {"G_eta", &h.eta.G}, {"Y_mu", &h.mu.Y}, {"G_mu", &h.mu.G}};
    for (const auto& [name, f] : dumps) {
      const std::string file = std::string("fields/") + name + ".mxh";
      write_field(out / file, *f);
      files.push_back(file);
    }
  }
  j["fields"] = files;
  j["runtime"] = {{"total_s", seconds_since(t0)}};
  write_json(out / "effective.json", j);
  return j;
}

json cmd_maxwell(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::filesystem::path out = cfg.out_dir;
  const ConvergenceConfig cc = cfg.convergence();
  const int n = cfg.eps_inverse.front();
  const CoefficientField eta = generate_coefficient(cfg.eta, cc.cell);
  const CoefficientField mu = generate_coefficient(cfg.mu, cc.cell);
  const MaxwellProblem pb{eta, mu, n, cc.torus, random_source(cc.torus, cc.source_seed, cc.source_band, cc.source_terms),
                          random_source(cc.torus, cc.source_seed + 1, cc.source_band, cc.source_terms)};
  validate(pb);
  std::filesystem::create_directories(out);

  const HomogenizedData h = homogenize(eta, mu, cc.solve, true, cfg.workers);
  const double cell_s = seconds_since(t0);
  MaxwellOptions opt;
  opt.solve = cc.solve;
  opt.r_branch = cc.r_branch;
  opt.q_branch = cc.q_branch;
  opt.dealias = cc.dealias;
  opt.workers = cfg.workers;
  const MaxwellSolution sol = run_maxwell(pb, h, opt);

  json j;
  j["command"] = "maxwell";
  j["config"] = config_json(cfg);
  j["eps"] = pb.eps();
  j["n_periods"] = n;
  j["regime"] = "periodic torus (full-space O(eps) regime)";
  j["projection_note"] =
      "on the torus the two divergence-free classes coincide, so both correction right-hand sides use the "
      "same weighted projection";
  j["tol"] = cfg.tol;
  j["eta0"] = matrix_json(sol.eta0);
  j["mu0"] = matrix_json(sol.mu0);
  json branches = json::object();
  for (const auto& br : sol.branches)
    branches[to_string(br.branch)] = {{"iterations", br.stats.iterations},
                                      {"solver_residual", br.stats.residual},
                                      {"operator_residual", br.operator_residual},
                                      {"constraint_leakage", br.constraint_leakage}};
  j["branches"] = branches;
  j["errors"] = sol.errors;
  j["diagnostics"] = sol.diagnostics;

  json files = json::array();
  if (cfg.dump_fields) {
    std::filesystem::create_directories(out / "fields");
    auto dump = [&](const std::string& name, const VectorField& f) {
      const std::string file = "fields/" + name + ".mxh";
      write_field(out / file, f);
      files.push_back(file);
    };
    dump("u", sol.exact.u);
    dump("v", sol.exact.v);
    dump("w", sol.exact.w);
    dump("z", sol.exact.z);
    for (const auto& br : sol.branches) dump("phi_" + to_string(br.branch), br.phi);
    dump("u_approx", sol.approximants.u);
    dump("v_approx", sol.approximants.v);
    dump("w_approx", sol.approximants.w);
    dump("z_approx", sol.approximants.z);
  }
  j["fields"] = files;
  j["runtime"] = {{"cell_s", cell_s}, {"total_s", seconds_since(t0)}};
  write_json(out / "maxwell_run.json", j);
  return j;
}

json cmd_converge(const RunConfig& cfg) {
  const std::filesystem::path out = cfg.out_dir;
  const ConvergenceReport rep = convergence_study(cfg.convergence());
  std::filesystem::create_directories(out);
  json j;
  j["command"] = "converge";
  j["config"] = config_json(cfg);
  const json body = to_json(rep);
  for (const auto& [k, v] : body.items()) j[k] = v;
  write_csv(rep, out / "converge.csv");
  write_json(out / "converge.json", j);
  return j;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic homogenization and Maxwell approximants on the torus"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int workers = 0;
  double tol = 0.0;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--workers", workers, "worker threads (overrides run.workers)");
    sub->add_option("--tol", tol, "solver tolerance (overrides solver.tol)");
  };
  CLI::App* cell = app.add_subcommand("cell", "cell problems, effective tensors and correctors");
  CLI::App* maxwell = app.add_subcommand("maxwell", "one Maxwell pipeline run at the first eps");
  CLI::App* converge = app.add_subcommand("converge", "convergence study over all eps");
  for (auto* s : {cell, maxwell, converge}) add_flags(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (workers != 0) {
      if (workers < 1) throw ConfigKeyError("--workers", "must be positive");
      cfg.workers = workers;
    }
    if (tol != 0.0) {
      if (!(tol > 0.0 && tol < 1.0)) throw ConfigKeyError("--tol", "must lie in (0, 1)");
      cfg.tol = tol;
    }
    if (cell->parsed()) {
      cmd_cell(cfg);
      out << "wrote " << (std::filesystem::path(cfg.out_dir) / "effective.json").string() << "\n";
    } else if (maxwell->parsed()) {
      const json j = cmd_maxwell(cfg);
      for (const auto& [k, v] : j["errors"].items()) out << "error " << k << " = " << v.dump() << "\n";
      out << "wrote " << (std::filesystem::path(cfg.out_dir) / "maxwell_run.json").string() << "\n";
    } else {
      const json j = cmd_converge(cfg);
      for (const auto& [k, v] : j["fitted_rate"].items())
        out << "rate " << k << " = " << v.dump() << " (" << j["status"][k].get<std::string>() << ")\n";
      out << "wrote " << (std::filesystem::path(cfg.out_dir) / "converge.json").string() << "\n";
      if (j["partial"].get<bool>()) {
        err << "error: study incomplete: " << j["failure"].get<std::string>() << "\n";
        return kSolverFailure;
      }
    }
    return kSuccess;
  } catch (const ConfigKeyError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NoConvergence& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const InvalidParams& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidGrid& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfigError;
  } catch (const GridMismatch& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfigError;
  } catch (const DegenerateCoefficient& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfigError;
  } catch (const DegenerateBasis& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace hommax::cli
