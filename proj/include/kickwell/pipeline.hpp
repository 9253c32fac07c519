#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kickwell/basis.hpp"
#include "kickwell/localization.hpp"
#include "kickwell/model.hpp"

namespace kickwell {

inline constexpr const char* kCodeVersion = "kickwell 0.1.0";

// Flat key = value configuration. '#' starts a comment.
struct RunConfig {
  RawParams raw;
  int l_max = 500;
  std::uint64_t seed = 1;
  double mu_hi = kDefaultMuHigh;
  int pr_window = kDefaultPrWindow;
  std::vector<double> k_grid;
  std::vector<double> v0_grid;
  int classical_trajectories = 20;
  int classical_steps = 5000;
  double classical_p_window = 150.0;
  int coverage_cells = 32;
  std::string text;  // canonical key=value rendering, hashed into manifests
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::string subcommand;
  std::filesystem::path out_dir = "out";
  std::filesystem::path cache_dir = ".kickwell-cache";
  int workers = 1;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::optional<double> mu_min;
  std::optional<double> mu_max;
  std::optional<Parity> parity;
  std::optional<FitWindow> window;
  ProfileSide side = ProfileSide::symmetrized;
  ProfileWeight weight = ProfileWeight::amplitude;
  bool dump_matrix = false;
};

struct OutputRecord {
  std::string file;
  std::string sha256;
};

struct RunManifest {
  ModelParams params;
  BasisTruncation truncation;
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string code_version = kCodeVersion;
  std::string config_sha256;
  std::vector<OutputRecord> outputs;
  // Run-log fields; written to execution.json, not to manifest.json.
  std::string started;
  std::string finished;
  bool cache_hit = false;
  int spectrum_solves = 0;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand and writes its outputs, manifest.json and
// execution.json under opt.out_dir.
RunManifest run_pipeline(const RunConfig& cfg, const RunOptions& opt);

enum class PhaseClass { powerlaw, exponential, mixed, undetermined, failed };
const char* to_string(PhaseClass c);

struct PhaseCell {
  double k = 0.0;
  double v0 = 0.0;
  PhaseClass classification = PhaseClass::undetermined;
  double exp_quality = 0.0;
  double pow_quality = 0.0;
  double length = 0.0;     // fitted l
  double exponent = 0.0;   // fitted gamma
  int states = 0;          // converged states in the profile
  double below_fraction = 0.0;  // share of mu <= 1 among them
  std::optional<int> crossover;
  std::string error;
};

// Margin in R^2 that decides between the two laws.
inline constexpr double kClassMargin = 0.02;

PhaseCell classify_cell(double k, double v0, const UnperturbedSpectrum& spec,
                        const RunConfig& cfg);

}  // namespace kickwell
