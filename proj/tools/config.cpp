#include "config.hpp"

#include "hommax/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace hommax::cli {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigKeyError(key, "expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigKeyError(key, "expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigKeyError(key, "expected a non-negative integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  const long long v = to_integer(key, s);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigKeyError(key, "integer out of range");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigKeyError(key, "expected true or false, got '" + s + "'");
}

template <class T, class F>
std::array<T, 3> triple(const std::string& key, const std::string& s, F conv) {
  const auto toks = split_ws(s);
  if (toks.size() != 3) throw ConfigKeyError(key, "expected three values");
  return {conv(key, toks[0]), conv(key, toks[1]), conv(key, toks[2])};
}

// "1/8" or a decimal that is the reciprocal of an integer.
int eps_to_inverse(const std::string& key, const std::string& tok) {
  if (const auto slash = tok.find('/'); slash != std::string::npos) {
    if (tok.substr(0, slash) != "1") throw ConfigKeyError(key, "eps must have the form 1/n, got '" + tok + "'");
    const int n = to_int(key, tok.substr(slash + 1));
    if (n < 1) throw ConfigKeyError(key, "eps must have the form 1/n with n >= 1");
    return n;
  }
  const double e = to_double(key, tok);
  if (!(e > 0.0)) throw ConfigKeyError(key, "eps must be positive");
  const double inv = 1.0 / e;
  const long long n = std::llround(inv);
  if (n < 1 || std::abs(inv - static_cast<double>(n)) > 1e-9 * inv)
    throw ConfigKeyError(key, "eps = " + tok + " is not of the form 1/n");
  return static_cast<int>(n);
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string ints(const std::array<int, 3>& a) {
  return std::to_string(a[0]) + " " + std::to_string(a[1]) + " " + std::to_string(a[2]);
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  // Returns the raw value when present and marks it as consumed.
  std::optional<std::string> get(const std::string& section, const std::string& key) {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    used_.insert(section + "." + key);
    return *v;
  }

  // Anything not consumed is unknown.
  void reject_unknown() const {
    for (const auto& [sec, child] : tree_) {
      if (child.empty() && !child.data().empty()) throw ConfigKeyError(sec, "key outside of any section");
      for (const auto& [key, _] : child) {
        const std::string full = sec + "." + key;
        if (!used_.count(full)) throw ConfigKeyError(full, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> used_;
};

void read_descriptor(Reader& rd, const std::string& sec, CoefficientDescriptor& d) {
  auto key = [&](const char* k) { return sec + "." + k; };
  if (auto v = rd.get(sec, "kind")) {
    try {
      d.kind = coefficient_kind_from_string(*v);
    } catch (const InvalidParams& e) {
      throw ConfigKeyError(key("kind"), e.what());
    }
  }
  if (auto v = rd.get(sec, "value")) d.value = to_double(key("value"), *v);
  if (auto v = rd.get(sec, "alpha")) d.alpha = to_double(key("alpha"), *v);
  if (auto v = rd.get(sec, "beta")) d.beta = to_double(key("beta"), *v);
  if (auto v = rd.get(sec, "fill_frac")) d.fill = to_double(key("fill_frac"), *v);
  if (auto v = rd.get(sec, "width_frac")) d.width = to_double(key("width_frac"), *v);
  if (auto v = rd.get(sec, "axis")) d.axis = to_int(key("axis"), *v);
  if (auto v = rd.get(sec, "mean")) d.mean = to_double(key("mean"), *v);
  if (auto v = rd.get(sec, "amplitude")) d.amplitude = to_double(key("amplitude"), *v);
  if (auto v = rd.get(sec, "mode")) d.mode = triple<int>(key("mode"), *v, to_int);
  if (auto v = rd.get(sec, "seed")) d.seed = to_seed(key("seed"), *v);
  // parameter ranges are checked here so the diagnostic can name the key
  try {
    validate(d);
  } catch (const InvalidParams& e) {
    const std::string msg = e.what();
    std::string k = sec;
    for (const char* name : {"value", "alpha", "beta", "fill", "width", "axis", "mean", "amplitude"})
      if (msg.find(std::string("parameter ") + name) != std::string::npos) {
        const std::string n = name;
        k = sec + "." + (n == "fill" || n == "width" ? n + "_frac" : n);
        break;
      }
    throw ConfigKeyError(k, msg);
  }
}

void write_descriptor(std::ostream& out, const std::string& sec, const CoefficientDescriptor& d) {
  out << "[" << sec << "]\n";
  out << "kind = " << to_string(d.kind) << "\n";
  out << "value = " << num(d.value) << "\n";
  out << "alpha = " << num(d.alpha) << "\n";
  out << "beta = " << num(d.beta) << "\n";
  out << "fill_frac = " << num(d.fill) << "\n";
  out << "width_frac = " << num(d.width) << "\n";
  out << "axis = " << d.axis << "\n";
  out << "mean = " << num(d.mean) << "\n";
  out << "amplitude = " << num(d.amplitude) << "\n";
  out << "mode = " << ints(d.mode) << "\n";
  out << "seed = " << d.seed << "\n\n";
}

}  // namespace

std::string to_string(BranchSelection b) {
  switch (b) {
    case BranchSelection::both: return "both";
    case BranchSelection::r: return "r";
    case BranchSelection::q: return "q";
  }
  return "both";
}

GridSpec RunConfig::torus() const { return make_grid(make_lattice(lattice), torus_n); }
GridSpec RunConfig::cell() const { return make_grid(make_lattice(lattice), cell_n); }

ConvergenceConfig RunConfig::convergence() const {
  ConvergenceConfig c;
  c.torus = torus();
  c.cell = cell();
  c.eta = eta;
  c.mu = mu;
  c.periods = eps_inverse;
  c.solve = {tol, max_iterations};
  c.r_branch = branches != BranchSelection::q;
  c.q_branch = branches != BranchSelection::r;
  c.dealias = dealias;
  c.workers = workers;
  c.source_seed = source_seed;
  c.source_band = source_band;
  c.source_terms = source_terms;
  return c;
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigKeyError("line " + std::to_string(e.line()), e.message());
  }
  Reader rd(tree);
  RunConfig c;

  for (int j = 0; j < 3; ++j) {
    const std::string k = "a" + std::to_string(j + 1);
    if (auto v = rd.get("lattice", k)) {
      const auto t = triple<double>("lattice." + k, *v, to_double);
      c.lattice[j] = Vec3(t[0], t[1], t[2]);
    }
  }
  if (auto v = rd.get("grid", "torus_n")) c.torus_n = triple<int>("grid.torus_n", *v, to_int);
  if (auto v = rd.get("grid", "cell_n")) c.cell_n = triple<int>("grid.cell_n", *v, to_int);
  read_descriptor(rd, "eta", c.eta);
  read_descriptor(rd, "mu", c.mu);

  if (auto v = rd.get("solver", "tol")) c.tol = to_double("solver.tol", *v);
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigKeyError("solver.tol", "must lie in (0, 1)");
  if (auto v = rd.get("solver", "max_iterations")) c.max_iterations = to_int("solver.max_iterations", *v);
  if (c.max_iterations < 1) throw ConfigKeyError("solver.max_iterations", "must be positive");
  if (auto v = rd.get("solver", "dealias")) c.dealias = to_bool("solver.dealias", *v);

  if (auto v = rd.get("run", "eps")) {
    c.eps_inverse.clear();
    for (const auto& tok : split_ws(*v)) c.eps_inverse.push_back(eps_to_inverse("run.eps", tok));
    if (c.eps_inverse.empty()) throw ConfigKeyError("run.eps", "needs at least one value");
  }
  if (auto v = rd.get("run", "branches")) {
    if (*v == "both") c.branches = BranchSelection::both;
    else if (*v == "r") c.branches = BranchSelection::r;
    else if (*v == "q") c.branches = BranchSelection::q;
    else throw ConfigKeyError("run.branches", "expected both, r or q, got '" + *v + "'");
  }
  if (auto v = rd.get("run", "source_seed")) c.source_seed = to_seed("run.source_seed", *v);
  if (auto v = rd.get("run", "source_band")) c.source_band = to_int("run.source_band", *v);
  if (c.source_band < 0) throw ConfigKeyError("run.source_band", "must be non-negative");
  if (auto v = rd.get("run", "source_terms")) c.source_terms = to_int("run.source_terms", *v);
  if (c.source_terms < 1) throw ConfigKeyError("run.source_terms", "must be positive");
  if (auto v = rd.get("run", "workers")) c.workers = to_int("run.workers", *v);
  if (c.workers < 1) throw ConfigKeyError("run.workers", "must be positive");

  if (auto v = rd.get("output", "dir")) c.out_dir = *v;
  if (auto v = rd.get("output", "dump_fields")) c.dump_fields = to_bool("output.dump_fields", *v);

  rd.reject_unknown();

  try {
    (void)c.torus();
  } catch (const Error& e) {
    throw ConfigKeyError("grid.torus_n", e.what());
  }
  try {
    (void)c.cell();
  } catch (const Error& e) {
    throw ConfigKeyError("grid.cell_n", e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigKeyError("--config", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[lattice]\n";
  for (int j = 0; j < 3; ++j)
    out << "a" << j + 1 << " = " << num(c.lattice[j][0]) << " " << num(c.lattice[j][1]) << " "
        << num(c.lattice[j][2]) << "\n";
  out << "\n[grid]\ntorus_n = " << ints(c.torus_n) << "\ncell_n = " << ints(c.cell_n) << "\n\n";
  write_descriptor(out, "eta", c.eta);
  write_descriptor(out, "mu", c.mu);
  out << "[solver]\ntol = " << num(c.tol) << "\nmax_iterations = " << c.max_iterations
      << "\ndealias = " << (c.dealias ? "true" : "false") << "\n\n";
  out << "[run]\neps =";
  for (int n : c.eps_inverse) out << " 1/" << n;
  out << "\nbranches = " << to_string(c.branches) << "\nsource_seed = " << c.source_seed
      << "\nsource_band = " << c.source_band << "\nsource_terms = " << c.source_terms << "\nworkers = " << c.workers
      << "\n\n";
  out << "[output]\ndir = " << c.out_dir << "\ndump_fields = " << (c.dump_fields ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace hommax::cli
