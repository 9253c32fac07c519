#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "kickwell/errors.hpp"
#include "kickwell/pipeline.hpp"

namespace {

// One exit code per error family so scripts can tell them apart.
int exit_code_for(const std::exception& e) {
  using namespace kickwell;
  if (dynamic_cast<const ParameterError*>(&e)) return 2;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 3;
  if (dynamic_cast<const UnitarityError*>(&e)) return 4;
  if (dynamic_cast<const DomainError*>(&e)) return 5;
  if (dynamic_cast<const InsufficientDataError*>(&e)) return 6;
  if (dynamic_cast<const CacheError*>(&e)) return 7;
  if (dynamic_cast<const IoError*>(&e)) return 8;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kickwell;
  CLI::App app{"Floquet localization of a kicked particle in a finite square well"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions opt;
  if (const char* env = std::getenv("KICKWELL_CACHE_DIR"); env && *env) opt.cache_dir = env;
  std::string cache_flag, parity, side = "symmetrized", weight = "amplitude";
  std::uint64_t seed = 0;
  double mu_min = 0.0, mu_max = 0.0;
  std::vector<int> window;

  for (const std::string& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value parameter file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--cache", cache_flag, "spectrum cache directory (else $KICKWELL_CACHE_DIR)");
    sub->add_option("--seed", seed, "override the config seed");
    if (name == "sweep") {
      sub->add_option("--workers", opt.workers, "parallel cells")->check(CLI::PositiveNumber);
    }
    if (name == "profiles" || name == "spacing") {
      sub->add_option("--mu-min", mu_min, "keep states with mu > value");
      sub->add_option("--mu-max", mu_max, "keep states with mu <= value");
      sub->add_option("--parity", parity, "even or odd")->check(CLI::IsMember({"even", "odd"}));
    }
    if (name == "profiles") {
      sub->add_option("--window", window, "fit offsets lo hi")->expected(2);
      sub->add_option("--side", side)->check(CLI::IsMember({"positive", "negative", "symmetrized"}));
      sub->add_option("--weight", weight)->check(CLI::IsMember({"amplitude", "probability"}));
    }
    if (name == "floquet") sub->add_flag("--dump-matrix", opt.dump_matrix, "write |c_rn|^2 as a binary matrix");
  }
  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  opt.subcommand = sub->get_name();
  if (!cache_flag.empty()) opt.cache_dir = cache_flag;
  auto given = [sub](const char* flag) {
    const CLI::Option* o = sub->get_option_no_throw(flag);
    return o && o->count() > 0;
  };
  if (given("--seed")) opt.seed = seed;
  if (given("--mu-min")) opt.mu_min = mu_min;
  if (given("--mu-max")) opt.mu_max = mu_max;
  if (!parity.empty()) opt.parity = parity == "even" ? Parity::even : Parity::odd;
  if (!window.empty()) opt.window = FitWindow{window[0], window[1]};
  opt.side = side == "positive"   ? ProfileSide::positive
             : side == "negative" ? ProfileSide::negative
                                  : ProfileSide::symmetrized;
  opt.weight = weight == "probability" ? ProfileWeight::probability : ProfileWeight::amplitude;

  try {
    const RunConfig cfg = load_config(config_path);
    const RunManifest m = run_pipeline(cfg, opt);
    for (const OutputRecord& o : m.outputs) std::cout << (opt.out_dir / o.file).string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "kickwell: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
