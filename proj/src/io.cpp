#include "kickwell/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "kickwell/digest.hpp"
#include "kickwell/errors.hpp"

namespace kickwell {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void CsvWriter::meta(const std::string& key, const std::string& value) {
  text_ += "# " + key + ": " + value + "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) text_ += ',';
    text_ += columns[i];
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (row_open_) text_ += ',';
  text_ += v;
  row_open_ = true;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }
CsvWriter& CsvWriter::cell(long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  text_ += '\n';
  row_open_ = false;
}

namespace {

constexpr char kMatrixMagic[8] = {'K', 'W', 'M', 'A', 'T', 'R', 'I', 'X'};
constexpr char kSpectrumMagic[8] = {'K', 'W', 'S', 'P', 'E', 'C', 'T', 'R'};
constexpr std::uint32_t kSpectrumFormatVersion = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > s_.size()) throw CacheError("truncated binary container");
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > s_.size()) throw CacheError("truncated binary container");
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_matrix(const Eigen::MatrixXd& m) {
  std::string out(kMatrixMagic, sizeof kMatrixMagic);
  put<std::uint32_t>(out, kMatrixFormatVersion);
  put<std::uint32_t>(out, 0);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
  return out;
}

std::string encode_matrix(const Eigen::MatrixXcd& m) {
  std::string out(kMatrixMagic, sizeof kMatrixMagic);
  put<std::uint32_t>(out, kMatrixFormatVersion);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put<double>(out, m(i, j).real());
      put<double>(out, m(i, j).imag());
    }
  return out;
}

Eigen::MatrixXcd decode_matrix(const std::string& bytes) {
  if (bytes.size() < 32) throw IoError("matrix container shorter than its header");
  Reader r(bytes);
  if (r.bytes(8) != std::string(kMatrixMagic, 8)) throw IoError("not a matrix container");
  if (r.get<std::uint32_t>() != kMatrixFormatVersion) throw IoError("unsupported matrix version");
  const std::uint32_t kind = r.get<std::uint32_t>();
  if (kind > 1) throw IoError("unknown matrix kind " + std::to_string(kind));
  const auto rows = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto cols = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const std::size_t per = kind == 1 ? 16 : 8;
  if (bytes.size() != r.pos() + per * static_cast<std::size_t>(rows * cols)) {
    throw IoError("matrix container size does not match its header");
  }
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double re = r.get<double>();
      const double im = kind == 1 ? r.get<double>() : 0.0;
      m(i, j) = Complex(re, im);
    }
  return m;
}

std::string encode_spectrum(const UnperturbedSpectrum& spec) {
  std::string out(kSpectrumMagic, sizeof kSpectrumMagic);
  put<std::uint32_t>(out, kSpectrumFormatVersion);
  out += spec.params_hash;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.truncation.l_max));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.dim()));
  put<double>(out, spec.depth);
  put<double>(out, spec.barrier_over_pi);
  put<double>(out, spec.hbar);
  for (const ParitySector& sec : spec.sectors) {
    for (Eigen::Index i = 0; i < sec.energies.size(); ++i) put<double>(out, sec.energies[i]);
    for (Eigen::Index i = 0; i < sec.vectors.size(); ++i) put<double>(out, sec.vectors.data()[i]);
  }
  const std::string digest = sha256_hex(out);
  out += digest;
  return out;
}

UnperturbedSpectrum decode_spectrum(const std::string& bytes, const ModelParams& p,
                                    const BasisTruncation& t) {
  if (bytes.size() < 64) throw CacheError("cache file too short");
  const std::string body = bytes.substr(0, bytes.size() - 64);
  if (sha256_hex(body) != bytes.substr(bytes.size() - 64)) {
    throw CacheError("cache checksum mismatch");
  }
  Reader r(body);
  if (r.bytes(8) != std::string(kSpectrumMagic, 8)) throw CacheError("not a spectrum cache file");
  if (r.get<std::uint32_t>() != kSpectrumFormatVersion) throw CacheError("unsupported cache version");
  const std::string hash = r.bytes(64);
  if (hash != spectrum_hash(p, t)) throw CacheError("cache entry belongs to other parameters");
  const int l_max = static_cast<int>(r.get<std::uint32_t>());
  const int dim = static_cast<int>(r.get<std::uint32_t>());
  const double depth = r.get<double>(), bop = r.get<double>(), hbar = r.get<double>();
  if (l_max != t.l_max || dim != t.dim() || depth != p.depth() || bop != p.barrier_over_pi() ||
      hbar != p.hbar()) {
    throw CacheError("cache header disagrees with the requested parameters");
  }
  std::array<ParitySector, 2> sectors;
  for (int s = 0; s < 2; ++s) {
    ParitySector& sec = sectors[s];
    sec.parity = s == 0 ? Parity::even : Parity::odd;
    const int n = s == 0 ? l_max + 1 : l_max;
    sec.momenta.resize(n);
    for (int j = 0; j < n; ++j) sec.momenta[j] = s == 0 ? j : j + 1;
    sec.energies.resize(n);
    for (int i = 0; i < n; ++i) sec.energies[i] = r.get<double>();
    sec.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < sec.vectors.size(); ++i) sec.vectors.data()[i] = r.get<double>();
  }
  if (r.pos() != body.size()) throw CacheError("trailing bytes in cache file");
  return assemble_spectrum(p, t, std::move(sectors));
}

SpectrumCache::SpectrumCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw CacheError("cache directory " + dir_.string() + " is not usable");
  }
}

std::filesystem::path SpectrumCache::path_for(const std::string& params_hash) const {
  return dir_ / (params_hash + ".kwspec");
}

std::optional<UnperturbedSpectrum> SpectrumCache::load(const ModelParams& p,
                                                       const BasisTruncation& t) const {
  const std::filesystem::path path = path_for(spectrum_hash(p, t));
  if (!std::filesystem::exists(path)) return std::nullopt;
  return decode_spectrum(read_file(path), p, t);
}

void SpectrumCache::store(const UnperturbedSpectrum& spec) const {
  write_atomic(path_for(spec.params_hash), encode_spectrum(spec));
}

SpectrumCache::Lookup SpectrumCache::get_or_solve(const ModelParams& p, const BasisTruncation& t) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (auto cached = load(p, t)) return {std::move(*cached), true};
  UnperturbedSpectrum spec = solve_unperturbed(p, t);
  ++solves_;
  store(spec);
  return {std::move(spec), false};
}

}  // namespace kickwell
