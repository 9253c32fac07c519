#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kickwell/basis.hpp"

namespace kickwell {

// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// CSV text with '#'-prefixed metadata lines above the header row.
class CsvWriter {
 public:
  void meta(const std::string& key, const std::string& value);
  void header(const std::vector<std::string>& columns);
  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(double v);
  CsvWriter& cell(long v);
  CsvWriter& cell(int v) { return cell(static_cast<long>(v)); }
  void end_row();
  const std::string& str() const { return text_; }

 private:
  std::string text_;
  bool row_open_ = false;
};

// Binary matrix container: 8 magic bytes "KWMATRIX", u32 version, u32 kind
// (0 real, 1 complex), u64 rows, u64 cols, then row-major little-endian
// doubles (complex entries as re, im pairs).
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

std::string encode_matrix(const Eigen::MatrixXd& m);
std::string encode_matrix(const Eigen::MatrixXcd& m);
// Complex containers decode with their imaginary parts; real ones with zero.
Eigen::MatrixXcd decode_matrix(const std::string& bytes);

// Persistent store of unperturbed spectra keyed by params_hash. Files carry
// a SHA-256 trailer; any mismatch raises CacheError.
class SpectrumCache {
 public:
  explicit SpectrumCache(std::filesystem::path dir);

  std::filesystem::path path_for(const std::string& params_hash) const;
  std::optional<UnperturbedSpectrum> load(const ModelParams& p, const BasisTruncation& t) const;
  void store(const UnperturbedSpectrum& spec) const;

  struct Lookup {
    UnperturbedSpectrum spectrum;
    bool hit = false;
  };
  // Thread-safe; concurrent requests for the same parameters solve once.
  Lookup get_or_solve(const ModelParams& p, const BasisTruncation& t);

  int solves() const { return solves_.load(); }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::atomic<int> solves_{0};
};

std::string encode_spectrum(const UnperturbedSpectrum& spec);
UnperturbedSpectrum decode_spectrum(const std::string& bytes, const ModelParams& p,
                                    const BasisTruncation& t);

}  // namespace kickwell
