#pragma once

#include "hommax/errors.hpp"
#include "hommax/harness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hommax::cli {

/// Malformed configuration; `key` is the offending "section.key".
class ConfigKeyError : public ConfigError {
 public:
  ConfigKeyError(std::string key, const std::string& msg) : ConfigError(key + ": " + msg), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class BranchSelection { both, r, q };

/// Everything a run needs. All quantities are dimensionless; lengths are in
/// units of the lattice vectors and fractions in units of one cell period.
struct RunConfig {
  std::array<Vec3, 3> lattice{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  std::array<int, 3> torus_n{32, 32, 32};
  std::array<int, 3> cell_n{16, 16, 16};
  CoefficientDescriptor eta;
  CoefficientDescriptor mu;
  double tol = 1e-9;
  int max_iterations = 2000;
  bool dealias = true;
  /// eps = 1 / n for each entry.
  std::vector<int> eps_inverse{2, 4, 8};
  BranchSelection branches = BranchSelection::both;
  std::uint64_t source_seed = 1;
  int source_band = 1;
  int source_terms = 3;
  int workers = 1;
  std::string out_dir = "out";
  bool dump_fields = true;

  bool operator==(const RunConfig&) const = default;

  GridSpec torus() const;
  GridSpec cell() const;
  ConvergenceConfig convergence() const;
};

/// Parses INI text. Unknown sections or keys and unparsable values raise
/// ConfigKeyError naming the key. Cross-field preconditions (eps dividing the
/// grid) are left to the commands.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// INI text that parse_config maps back to the same RunConfig.
std::string serialize_config(const RunConfig& cfg);

std::string to_string(BranchSelection b);

}  // namespace hommax::cli
