#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sys/wait.h>

#include "kickwell/errors.hpp"
#include "kickwell/io.hpp"
#include "kickwell/pipeline.hpp"

using namespace kickwell;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kickwell-pipeline-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kSmall =
    "# small but production-shaped\n"
    "k = 1.0\n"
    "V0 = 50\n"
    "b_over_pi = 1.4\n"
    "hbar_s = 1\n"
    "basis_l_max = 160\n"
    "k_grid = 0.5, 1.0, 1.5\n"
    "V0_grid = 0, 50\n"
    "classical_trajectories = 4\n"
    "classical_steps = 200\n";

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).string();
    if (rel == "execution.json") continue;
    files[rel] = read_file(e.path());
  }
  return files;
}

int cli(const std::string& args) {
  const char* exe = std::getenv("KW_CLI");
  REQUIRE(exe != nullptr);
  const int status = std::system((std::string(exe) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(kSmall);
  CHECK(c.raw.kick == 1.0);
  CHECK(c.raw.depth == 50.0);
  CHECK(c.l_max == 160);
  CHECK(c.k_grid == std::vector<double>{0.5, 1.0, 1.5});
  CHECK(c.v0_grid == std::vector<double>{0.0, 50.0});
  CHECK(c.classical_steps == 200);

  // Layout and comments do not change the canonical text.
  const RunConfig shuffled = parse_config(
      "V0=50.0\n   k=1   # trailing\nhbar_s=1.0\nb_over_pi=1.4\nbasis_l_max=160\n"
      "V0_grid=0,50\nk_grid = 0.5,1,1.5\nclassical_steps=200\nclassical_trajectories=4\n");
  CHECK(shuffled.text == c.text);

  CHECK_THROWS_AS(parse_config("k = 1\nV0 = 1\nbogus = 3\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\nk = 2\nV0 = 1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = one\nV0 = 1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\nV0 = -1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\nV0 = 1\nb_over_pi = 2.5\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\nV0 = 1\nbasis_l_max = 2.5\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k 1\nV0 = 1\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("k = 1\nV0 = 1\ncoverage_cells = 8\n"), ParameterError);
  CHECK_THROWS_AS(load_config("/nonexistent/config"), ParameterError);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const RunConfig cfg = parse_config(kSmall);
  const fs::path root = scratch_dir("determinism");
  for (const std::string& sub : {std::string("spectrum"), std::string("floquet"),
                                 std::string("profiles"), std::string("melements"),
                                 std::string("pr"), std::string("tightbinding"),
                                 std::string("classical")}) {
    RunOptions a;
    a.subcommand = sub;
    a.dump_matrix = true;
    a.cache_dir = root / "cache";
    a.out_dir = root / (sub + "-a");
    RunOptions b = a;
    b.out_dir = root / (sub + "-b");
    b.cache_dir = root / ("cache-" + sub);  // cold cache on the second run
    const RunManifest ma = run_pipeline(cfg, a);
    const RunManifest mb = run_pipeline(cfg, b);
    CHECK(!ma.outputs.empty());
    CHECK(snapshot(a.out_dir) == snapshot(b.out_dir));
    CHECK(fs::exists(a.out_dir / "execution.json"));
    const auto manifest = nlohmann::json::parse(read_file(a.out_dir / "manifest.json"));
    CHECK(manifest.at("subcommand") == sub);
    CHECK(manifest.at("outputs").size() == ma.outputs.size());
    CHECK_FALSE(manifest.contains("started"));
  }
  // A different seed changes the classical section.
  RunOptions s;
  s.subcommand = "classical";
  s.out_dir = root / "classical-seed";
  s.seed = 99;
  run_pipeline(cfg, s);
  CHECK(read_file(s.out_dir / "section.csv") != read_file(root / "classical-a" / "section.csv"));
}

TEST_CASE("sweep solves one spectrum per depth and restarts from cells") {
  const RunConfig cfg = parse_config(kSmall);
  const fs::path root = scratch_dir("sweep");
  RunOptions o;
  o.subcommand = "sweep";
  o.out_dir = root / "out";
  o.cache_dir = root / "cache";
  o.workers = 3;
  const RunManifest first = run_pipeline(cfg, o);
  CHECK(first.spectrum_solves == 2);
  CHECK_FALSE(first.cache_hit);
  const std::string table = read_file(o.out_dir / "phase_diagram.csv");
  int cells = 0;
  for (const auto& e : fs::directory_iterator(o.out_dir / "cells")) cells += e.is_regular_file();
  CHECK(cells == 6);
  CHECK(table.find("failed") == std::string::npos);

  fs::remove(o.out_dir / "cells" / "k=1_V0=50.json");
  const RunManifest second = run_pipeline(cfg, o);
  CHECK(second.spectrum_solves == 0);
  CHECK(second.cache_hit);
  CHECK(read_file(o.out_dir / "phase_diagram.csv") == table);

  RunOptions serial = o;
  serial.out_dir = root / "serial";
  serial.workers = 1;
  run_pipeline(cfg, serial);
  CHECK(read_file(serial.out_dir / "phase_diagram.csv") == table);
}

TEST_CASE("command-line exit codes") {
  const fs::path root = scratch_dir("cli");
  auto config = [&](const std::string& name, const std::string& text) {
    write_atomic(root / name, text);
    return (root / name).string();
  };
  const std::string out = " --out " + (root / "o").string() + " --cache " + (root / "c").string();
  CHECK(cli("spectrum --config " + config("ok.cfg", kSmall) + out) == 0);
  CHECK(cli("spectrum --config " + config("bad.cfg", "k = 1\nV0 = 1\nnope = 2\n") + out) == 2);
  CHECK(cli("floquet --config " +
            config("coarse.cfg", "k = 4.25\nV0 = 5000\nbasis_l_max = 64\n") + out) == 4);
  CHECK(cli("tightbinding --config " +
            config("pole.cfg", "k = 4.25\nV0 = 50\nbasis_l_max = 200\n") + out) == 5);
  CHECK(cli("spacing --config " + config("few.cfg", "k = 0.5\nV0 = 50\nbasis_l_max = 32\n") +
            out) == 6);
  std::string garbage = "KWSPECTR";
  garbage.resize(200, 'x');
  const RunConfig ok = parse_config(kSmall);
  write_atomic((root / "c" / spectrum_hash(validate_params(ok.raw), make_truncation(ok.l_max)))
                   .string() + ".kwspec",
               garbage);
  CHECK(cli("spectrum --config " + (root / "ok.cfg").string() + out) == 7);
  CHECK(cli("profiles --config " + (root / "ok.cfg").string() + " --mu-min 1" + " --out " +
            (root / "o").string() + " --cache " + (root / "c2").string()) == 0);
  CHECK(cli("profiles --config " + config("free.cfg", "k = 1\nV0 = 0\nbasis_l_max = 160\n") +
            " --mu-max 1" + out) == 2);
}
