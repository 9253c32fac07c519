#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <thread>

#include "kickwell/digest.hpp"
#include "kickwell/errors.hpp"
#include "kickwell/io.hpp"

using namespace kickwell;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kickwell-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("shortest round-trip decimal text") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(5000.0) == "5000");
  CHECK(format_double(-2.5e-12) == "-2.5e-12");
}

TEST_CASE("CSV layout") {
  CsvWriter w;
  w.meta("k", "4.25");
  w.header({"a", "b", "c"});
  w.cell(1).cell(0.5).cell("x");
  w.end_row();
  CHECK(w.str() == "# k: 4.25\na,b,c\n1,0.5,x\n");
}

TEST_CASE("SHA-256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("matrix container round trip and validation") {
  Eigen::MatrixXd real = Eigen::MatrixXd::Random(7, 5);
  Eigen::MatrixXcd cplx = Eigen::MatrixXcd::Random(4, 6);
  const std::string rb = encode_matrix(real), cb = encode_matrix(cplx);
  CHECK(rb.size() == 32 + 8 * 35);
  CHECK(cb.size() == 32 + 16 * 24);
  CHECK(rb.substr(0, 8) == "KWMATRIX");
  CHECK(decode_matrix(rb).real() == real);
  CHECK(decode_matrix(rb).imag().isZero(0.0));
  CHECK(decode_matrix(cb) == cplx);

  std::string bad = rb;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_matrix(bad), IoError);
  CHECK_THROWS_AS(decode_matrix(rb.substr(0, rb.size() - 8)), IoError);
  CHECK_THROWS_AS(decode_matrix(rb.substr(0, 10)), IoError);
  std::string kind = rb;
  kind[12] = 7;
  CHECK_THROWS_AS(decode_matrix(kind), IoError);
}

TEST_CASE("atomic writes replace whole files") {
  const fs::path dir = scratch_dir("atomic");
  write_atomic(dir / "f.txt", "first");
  write_atomic(dir / "f.txt", "second");
  CHECK(read_file(dir / "f.txt") == "second");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);  // no temporary left behind
  CHECK_THROWS_AS(read_file(dir / "missing"), IoError);
  write_atomic(dir / "nested" / "deeper" / "g.txt", "made");
  CHECK(read_file(dir / "nested" / "deeper" / "g.txt") == "made");
  CHECK_THROWS_AS(write_atomic(dir / "f.txt" / "under-a-file", "x"), IoError);
}

TEST_CASE("spectrum cache round trip") {
  const ModelParams p = validate_params({1.0, 500.0, 1.4, 1.0});
  const BasisTruncation t = make_truncation(40);
  const UnperturbedSpectrum s = solve_unperturbed(p, t);
  const UnperturbedSpectrum back = decode_spectrum(encode_spectrum(s), p, t);
  CHECK(back.energies == s.energies);
  CHECK(back.coefficients == s.coefficients);
  CHECK(back.parities == s.parities);
  CHECK(back.params_hash == s.params_hash);
  CHECK(encode_spectrum(back) == encode_spectrum(s));

  // The kick does not enter the spectrum, so another k may reuse it.
  CHECK_NOTHROW(decode_spectrum(encode_spectrum(s), validate_params({3.0, 500.0, 1.4, 1.0}), t));
  CHECK_THROWS_AS(decode_spectrum(encode_spectrum(s), validate_params({1.0, 501.0, 1.4, 1.0}), t),
                  CacheError);
  CHECK_THROWS_AS(decode_spectrum(encode_spectrum(s), p, make_truncation(41)), CacheError);
}

TEST_CASE("cache corruption is detected") {
  const ModelParams p = validate_params({1.0, 500.0, 1.4, 1.0});
  const BasisTruncation t = make_truncation(40);
  const std::string bytes = encode_spectrum(solve_unperturbed(p, t));
  for (std::size_t at : {std::size_t{3}, std::size_t{200}, bytes.size() / 2, bytes.size() - 3}) {
    std::string flipped = bytes;
    flipped[at] = static_cast<char>(flipped[at] ^ 0x10);
    CHECK_THROWS_AS(decode_spectrum(flipped, p, t), CacheError);
  }
  CHECK_THROWS_AS(decode_spectrum(bytes.substr(0, bytes.size() - 1), p, t), CacheError);
  CHECK_THROWS_AS(decode_spectrum("", p, t), CacheError);

  const fs::path dir = scratch_dir("corrupt");
  SpectrumCache cache(dir);
  cache.store(solve_unperturbed(p, t));
  std::string on_disk = read_file(cache.path_for(spectrum_hash(p, t)));
  on_disk[100] = static_cast<char>(on_disk[100] ^ 1);
  write_atomic(cache.path_for(spectrum_hash(p, t)), on_disk);
  CHECK_THROWS_AS(cache.load(p, t), CacheError);
}

TEST_CASE("cache solves once across threads and reloads from disk") {
  const ModelParams p = validate_params({1.0, 500.0, 1.4, 1.0});
  const BasisTruncation t = make_truncation(40);
  const fs::path dir = scratch_dir("threads");
  SpectrumCache cache(dir);
  CHECK_FALSE(cache.load(p, t).has_value());
  std::vector<std::thread> pool;
  std::vector<int> hits(6, -1);
  for (int i = 0; i < 6; ++i) pool.emplace_back([&, i] { hits[i] = cache.get_or_solve(p, t).hit; });
  for (auto& th : pool) th.join();
  CHECK(cache.solves() == 1);
  CHECK(std::count(hits.begin(), hits.end(), 0) == 1);

  SpectrumCache fresh(dir);
  const SpectrumCache::Lookup again = fresh.get_or_solve(p, t);
  CHECK(again.hit);
  CHECK(fresh.solves() == 0);
  CHECK(again.spectrum.energies == solve_unperturbed(p, t).energies);
  CHECK(cache.path_for(spectrum_hash(p, t)).filename() == spectrum_hash(p, t) + ".kwspec");
}
