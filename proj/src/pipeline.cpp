#include "kickwell/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "kickwell/classical.hpp"
#include "kickwell/digest.hpp"
#include "kickwell/errors.hpp"
#include "kickwell/floquet.hpp"
#include "kickwell/io.hpp"
#include "kickwell/spectral.hpp"
#include "kickwell/tightbinding.hpp"

namespace kickwell {

using Json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ParameterError("config key '" + key + "': '" + v + "' is not a finite number");
  }
  return x;
}

long parse_integer(const std::string& key, const std::string& v) {
  long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ParameterError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return x;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  if (out.empty()) throw ParameterError("config key '" + key + "' is an empty list");
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json params_json(const ModelParams& p) {
  Json j;
  j["k"] = p.kick();
  j["V0"] = p.depth();
  j["b_over_pi"] = p.barrier_over_pi();
  j["b"] = p.barrier_width();
  j["w"] = p.well_width();
  j["R"] = p.well_width() / (2.0 * std::numbers::pi);
  j["hbar_s"] = p.hbar();
  return j;
}

Json fit_json(const FitResult& f) {
  Json j;
  j["kind"] = to_string(f.kind);
  j["parameter"] = f.decays ? Json(f.parameter) : Json(nullptr);
  j["decays"] = f.decays;
  j["window"] = {f.window.lo, f.window.hi};
  j["quality"] = f.quality;
  j["points"] = f.points;
  return j;
}

template <class F>
Json try_fit(F&& fit) {
  try {
    return fit_json(fit());
  } catch (const Error& e) {
    return Json{{"error", e.what()}};
  }
}

Json crossover_json(const std::optional<Crossover>& c) {
  if (!c) return Json{{"detected", false}};
  Json j;
  j["detected"] = true;
  j["n_c"] = c->breakpoint;
  j["n_c_range"] = {c->breakpoint_lo, c->breakpoint_hi};
  j["head_quality"] = c->head_quality;
  j["tail_quality"] = c->tail_quality;
  j["head_length"] = c->head_length;
  j["tail_exponent"] = c->tail_exponent;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

class Outputs {
 public:
  Outputs(std::filesystem::path dir, RunManifest& m) : dir_(std::move(dir)), m_(m) {}

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    m_.outputs.push_back({name, sha256_hex(content)});
  }

  CsvWriter csv(const ModelParams& p, const BasisTruncation* t) const {
    CsvWriter w;
    w.meta("manifest", "manifest.json");
    w.meta("code_version", kCodeVersion);
    w.meta("k", format_double(p.kick()));
    w.meta("V0", format_double(p.depth()));
    w.meta("b_over_pi", format_double(p.barrier_over_pi()));
    w.meta("hbar_s", format_double(p.hbar()));
    if (t) w.meta("basis_l_max", std::to_string(t->l_max));
    return w;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunManifest& m_;
};

// Converged states, optionally restricted by parity and a mu window.
std::vector<bool> select_states(const FloquetDecomposition& d, const std::vector<MuRecord>& mu,
                                const RunOptions& opt, const ModelParams& p, std::string& label) {
  if ((opt.mu_min || opt.mu_max) && p.depth() == 0.0) {
    throw ParameterError("mu selectors need V0 > 0");
  }
  std::ostringstream os;
  os << "converged";
  if (opt.mu_min) os << " && mu > " << format_double(*opt.mu_min);
  if (opt.mu_max) os << " && mu <= " << format_double(*opt.mu_max);
  if (opt.parity) os << " && parity == " << to_string(*opt.parity);
  label = os.str();
  std::vector<bool> sel(d.dim());
  for (int r = 0; r < d.dim(); ++r) {
    bool ok = d.converged[r];
    if (opt.mu_min) ok = ok && mu[r].mu > *opt.mu_min;
    if (opt.mu_max) ok = ok && mu[r].mu <= *opt.mu_max;
    if (opt.parity) ok = ok && d.parities[r] == *opt.parity;
    sel[r] = ok;
  }
  return sel;
}

struct Quantum {
  FloquetMatrix u;
  FloquetDecomposition d;
};

Quantum floquet_of(const UnperturbedSpectrum& spec, const ModelParams& p) {
  FloquetMatrix u = build_floquet(spec, p);
  FloquetDecomposition d = diagonalize_floquet(u);
  return {std::move(u), std::move(d)};
}

void run_spectrum(const UnperturbedSpectrum& spec, const ModelParams& p, Outputs& out) {
  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("params_hash", spec.params_hash);
  w.header({"n", "energy", "parity"});
  for (int n = 0; n < spec.dim(); ++n) {
    w.cell(n).cell(spec.energies[n]).cell(to_string(spec.parities[n]));
    w.end_row();
  }
  out.write("spectrum.csv", w.str());
}

void run_floquet(const UnperturbedSpectrum& spec, const ModelParams& p, const RunOptions& opt,
                 Outputs& out) {
  const Quantum q = floquet_of(spec, p);
  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("eigenvalue", "exp(i omega)");
  w.header({"r", "omega", "modulus", "parity", "peak_index", "converged", "tail_weight"});
  for (int r = 0; r < q.d.dim(); ++r) {
    w.cell(r).cell(q.d.quasi_energies[r]).cell(q.d.eigen_moduli[r]);
    w.cell(to_string(q.d.parities[r])).cell(q.d.peak_index[r]);
    w.cell(q.d.converged[r] ? 1 : 0).cell(q.d.tail_weight[r]);
    w.end_row();
  }
  out.write("quasienergies.csv", w.str());

  Json j;
  j["params"] = params_json(p);
  j["dim"] = q.u.dim();
  j["retained"] = q.u.retained;
  j["unitarity_defect"] = q.u.unitarity_defect;
  j["full_defect"] = q.u.full_defect;
  j["converged_states"] = q.d.converged_count();
  j["code_version"] = kCodeVersion;
  out.write("floquet.json", dump(j));

  if (opt.dump_matrix) {
    out.write("probabilities.kwmat", encode_matrix(Eigen::MatrixXd(q.d.states.cwiseAbs2())));
    Json s = j;
    s["content"] = "|c_rn|^2, row r = Floquet state, column n = unperturbed state";
    s["rows"] = q.d.dim();
    s["cols"] = q.d.dim();
    out.write("probabilities.json", dump(s));
  }
}

void run_profiles(const UnperturbedSpectrum& spec, const ModelParams& p, const RunConfig& cfg,
                  const RunOptions& opt, Outputs& out) {
  const Quantum q = floquet_of(spec, p);
  const std::vector<MuRecord> mu = classify_mu(q.d, spec, p, cfg.mu_hi);
  std::string label;
  const std::vector<bool> sel = select_states(q.d, mu, opt, p, label);
  ProfileOptions po;
  po.side = opt.side;
  po.weight = opt.weight;
  const DecayProfile prof = shift_and_average(q.d, [&](int r) { return bool(sel[r]); }, po);

  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("selection", label);
  w.meta("side", to_string(prof.side));
  w.meta("weight", to_string(prof.weight));
  w.meta("states", std::to_string(prof.count));
  w.header({"offset", "density", "contributors"});
  for (std::size_t i = 0; i < prof.offsets.size(); ++i) {
    w.cell(prof.offsets[i]).cell(prof.density[i]).cell(prof.contributors[i]);
    w.end_row();
  }
  out.write("profile.csv", w.str());

  Json j;
  j["params"] = params_json(p);
  j["selection"] = label;
  j["side"] = to_string(prof.side);
  j["weight"] = to_string(prof.weight);
  j["states"] = prof.count;
  if (opt.window) {
    j["exponential"] = try_fit([&] { return fit_exponential(prof, *opt.window); });
    j["powerlaw"] = try_fit([&] { return fit_powerlaw(prof, *opt.window); });
  } else {
    j["exponential"] = try_fit([&] { return fit_exponential_auto(prof); });
    j["powerlaw"] = try_fit([&] { return fit_powerlaw_auto(prof); });
  }
  out.write("fits.json", dump(j));
}

void run_melements(const UnperturbedSpectrum& spec, const ModelParams& p, Outputs& out) {
  const FloquetMatrix u = build_floquet(spec, p);
  if (u.flagged) throw UnitarityError("Floquet build flagged: defect " + format_double(u.unitarity_defect));
  const MatrixDecayCurve c = matrix_element_decay(u);
  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("definition", "M_m = mean |U_{n,n+m}| over same-parity n in the retained block");
  w.header({"m", "M_m", "pairs"});
  for (std::size_t i = 0; i < c.offsets.size(); ++i) {
    w.cell(c.offsets[i]).cell(c.values[i]).cell(c.pairs[i]);
    w.end_row();
  }
  out.write("melements.csv", w.str());
  Json j;
  j["params"] = params_json(p);
  j["retained"] = u.retained;
  j["crossover"] = crossover_json(c.crossover);
  out.write("crossover.json", dump(j));
}

void run_pr(const UnperturbedSpectrum& spec, const ModelParams& p, const RunConfig& cfg,
            Outputs& out) {
  const Quantum q = floquet_of(spec, p);
  const std::vector<MuRecord> mu = classify_mu(q.d, spec, p, cfg.mu_hi);
  const std::vector<double> pr = participation_ratio(q.d);
  CsvWriter w = out.csv(p, &spec.truncation);
  w.header({"state", "peak_index", "e_max", "mu", "regime", "P", "converged"});
  double sum = 0.0;
  int cnt = 0;
  for (int r = 0; r < q.d.dim(); ++r) {
    w.cell(r).cell(mu[r].peak_index).cell(mu[r].e_max).cell(mu[r].mu);
    w.cell(to_string(mu[r].regime)).cell(pr[r]).cell(q.d.converged[r] ? 1 : 0);
    w.end_row();
    if (q.d.converged[r]) {
      sum += pr[r];
      ++cnt;
    }
  }
  out.write("pr.csv", w.str());
  Json j;
  j["params"] = params_json(p);
  j["converged_states"] = cnt;
  j["mean_P_converged"] = cnt ? Json(sum / cnt) : Json(nullptr);
  if (p.depth() > 0.0) {
    try {
      const PrStep s = locate_pr_step(mu, pr, q.d.converged, cfg.pr_window);
      j["step"] = {{"transition_energy", s.transition_energy},
                   {"transition_over_V0", s.transition_energy / p.depth()},
                   {"mean_P_mu_le_1", s.mean_below},
                   {"mean_P_mu_gt_1", s.mean_above},
                   {"level", s.level},
                   {"window", s.window},
                   {"states", s.states}};
    } catch (const Error& e) {
      j["step"] = {{"error", e.what()}};
    }
  }
  out.write("pr_step.json", dump(j));
}

void run_spacing(const UnperturbedSpectrum& spec, const ModelParams& p, const RunConfig& cfg,
                 const RunOptions& opt, Outputs& out) {
  const Quantum q = floquet_of(spec, p);
  const std::vector<MuRecord> mu = classify_mu(q.d, spec, p, cfg.mu_hi);
  RunOptions o = opt;
  o.parity = opt.parity.value_or(Parity::even);
  std::string label;
  const std::vector<bool> sel = select_states(q.d, mu, o, p, label);
  const SpacingStats st = extract_spacings(q.d, *o.parity, [&](int r) { return bool(sel[r]); }, label);
  const BrodyFit bf = brody_fit(st);
  const KsResult ks = ks_poisson(st);

  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("selection", label);
  w.meta("normalisation", "unit mean, circular gaps");
  w.header({"i", "S"});
  for (std::size_t i = 0; i < st.spacings.size(); ++i) {
    w.cell(static_cast<long>(i)).cell(st.spacings[i]);
    w.end_row();
  }
  out.write("spacings.csv", w.str());
  Json j;
  j["params"] = params_json(p);
  j["parity"] = to_string(st.parity_class);
  j["selection"] = label;
  j["mu_window"] = {opt.mu_min ? Json(*opt.mu_min) : Json(nullptr),
                    opt.mu_max ? Json(*opt.mu_max) : Json(nullptr)};
  j["levels"] = st.source_count;
  j["brody"] = {{"density", "unit-mean (1+a) b s^a exp(-b s^(1+a)), b = Gamma((2+a)/(1+a))^(1+a)"},
                {"alpha", bf.alpha},
                {"ci95", {bf.ci_low, bf.ci_high}},
                {"std_error", bf.std_error},
                {"ks_statistic", bf.ks.statistic},
                {"ks_p_value", bf.ks.p_value}};
  j["poisson_ks"] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
  out.write("spacing.json", dump(j));
}

void run_tightbinding(const UnperturbedSpectrum& spec, const ModelParams& p, Outputs& out) {
  const Quantum q = floquet_of(spec, p);
  const TightBindingModel tb(spec, p);
  CsvWriter w = out.csv(p, &spec.truncation);
  w.meta("quasi_energy_convention", "tight-binding omega = -omega_r (eigenvalue exp(-i omega))");
  w.meta("states", "converged with peak index below dim/2");
  w.header({"r", "omega", "residual", "excluded_sites", "reliable"});
  double worst = 0.0;
  int n = 0;
  for (int r = 0; r < q.d.dim(); ++r) {
    if (!q.d.converged[r] || q.d.peak_index[r] >= q.d.dim() / 2) continue;
    const ResidualReport rep = residual(tb, q.d, r);
    w.cell(r).cell(q.d.quasi_energies[r]).cell(rep.relative).cell(rep.excluded_sites);
    w.cell(rep.reliable ? 1 : 0);
    w.end_row();
    worst = std::max(worst, rep.relative);
    ++n;
  }
  out.write("residuals.csv", w.str());
  CsvWriter c = out.csv(p, &spec.truncation);
  c.meta("grid_points", std::to_string(tb.w_coeffs().grid_points));
  c.header({"n", "W_n"});
  for (std::size_t i = 0; i < tb.w_coeffs().values.size(); ++i) {
    c.cell(static_cast<long>(i)).cell(tb.w_coeffs().values[i]);
    c.end_row();
  }
  out.write("w_coeffs.csv", c.str());
  Json j;
  j["params"] = params_json(p);
  j["states"] = n;
  j["max_residual"] = worst;
  j["phase_convention"] = "kick phase k cos(theta)/hbar_s; W = -tan(phase/2)";
  out.write("tightbinding.json", dump(j));
}

void run_classical(const ModelParams& p, const RunConfig& cfg, std::uint64_t seed, Outputs& out) {
  const double pw = cfg.classical_p_window;
  const auto ens = random_ensemble(cfg.classical_trajectories, seed, -pw, pw);
  const SectionCloud cloud = stroboscopic_section(ens, p, cfg.classical_steps);
  const double cov = coverage_fraction(cloud, cfg.coverage_cells, cfg.coverage_cells, -pw, pw);
  CsvWriter w = out.csv(p, nullptr);
  w.meta("seed", std::to_string(seed));
  w.header({"theta", "p", "trajectory", "step"});
  for (const SectionPoint& pt : cloud.points) {
    w.cell(pt.theta).cell(pt.p).cell(pt.trajectory).cell(pt.step);
    w.end_row();
  }
  out.write("section.csv", w.str());
  Json j;
  j["params"] = params_json(p);
  j["seed"] = seed;
  j["trajectories"] = cloud.ensemble_size;
  j["steps"] = cloud.steps;
  j["p_window"] = pw;
  j["grid"] = {cfg.coverage_cells, cfg.coverage_cells};
  j["coverage_fraction"] = cov;
  out.write("classical.json", dump(j));
}

Json cell_json(const PhaseCell& c) {
  Json j;
  j["k"] = c.k;
  j["V0"] = c.v0;
  j["classification"] = to_string(c.classification);
  j["exp_quality"] = c.exp_quality;
  j["pow_quality"] = c.pow_quality;
  j["length"] = c.length;
  j["exponent"] = c.exponent;
  j["states"] = c.states;
  j["below_fraction"] = c.below_fraction;
  j["crossover"] = c.crossover ? Json(*c.crossover) : Json(nullptr);
  j["error"] = c.error;
  return j;
}

PhaseClass class_from(const std::string& s) {
  for (PhaseClass c : {PhaseClass::powerlaw, PhaseClass::exponential, PhaseClass::mixed,
                       PhaseClass::undetermined, PhaseClass::failed}) {
    if (s == to_string(c)) return c;
  }
  throw CacheError("unknown classification '" + s + "' in stored cell");
}

PhaseCell cell_from(const Json& j) {
  PhaseCell c;
  c.k = j.at("k").get<double>();
  c.v0 = j.at("V0").get<double>();
  c.classification = class_from(j.at("classification").get<std::string>());
  c.exp_quality = j.at("exp_quality").get<double>();
  c.pow_quality = j.at("pow_quality").get<double>();
  c.length = j.at("length").get<double>();
  c.exponent = j.at("exponent").get<double>();
  c.states = j.at("states").get<int>();
  c.below_fraction = j.at("below_fraction").get<double>();
  if (!j.at("crossover").is_null()) c.crossover = j.at("crossover").get<int>();
  c.error = j.at("error").get<std::string>();
  return c;
}

void run_sweep(const RunConfig& cfg, const RunOptions& opt, const BasisTruncation& t,
               SpectrumCache& cache, RunManifest& m, Outputs& out) {
  if (cfg.k_grid.empty() || cfg.v0_grid.empty()) {
    throw ParameterError("sweep needs nonempty k_grid and V0_grid");
  }
  struct Job {
    double k, v0;
    std::string file;
  };
  std::vector<Job> jobs;
  for (double v0 : cfg.v0_grid)
    for (double k : cfg.k_grid)
      jobs.push_back({k, v0, "cells/k=" + format_double(k) + "_V0=" + format_double(v0) + ".json"});

  std::vector<std::optional<PhaseCell>> done(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto path = out.dir() / jobs[i].file;
    if (!std::filesystem::exists(path)) continue;
    try {
      done[i] = cell_from(Json::parse(read_file(path)));
    } catch (const std::exception&) {
      done[i].reset();  // unreadable partial result: recompute
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> all_hits{true};
  std::mutex write_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= jobs.size()) return;
      if (done[i]) continue;
      PhaseCell cell;
      cell.k = jobs[i].k;
      cell.v0 = jobs[i].v0;
      try {
        RawParams raw = cfg.raw;
        raw.kick = jobs[i].k;
        raw.depth = jobs[i].v0;
        const ModelParams p = validate_params(raw);
        const SpectrumCache::Lookup look = cache.get_or_solve(p, t);
        if (!look.hit) all_hits = false;
        cell = classify_cell(jobs[i].k, jobs[i].v0, look.spectrum, cfg);
      } catch (const Error& e) {
        cell.classification = PhaseClass::failed;
        cell.error = e.what();
      }
      write_atomic(out.dir() / jobs[i].file, dump(cell_json(cell)));
      std::lock_guard<std::mutex> lock(write_mutex);
      done[i] = cell;
    }
  };
  const int nw = std::max(1, std::min<int>(opt.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  RawParams base = cfg.raw;
  const ModelParams p0 = validate_params(base);
  CsvWriter w = out.csv(p0, &t);
  w.meta("classification_margin", format_double(kClassMargin));
  w.header({"k", "V0", "classification", "exp_quality", "pow_quality", "length", "exponent",
            "states", "below_fraction", "crossover", "error"});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const PhaseCell& c = *done[i];
    w.cell(c.k).cell(c.v0).cell(to_string(c.classification)).cell(c.exp_quality);
    w.cell(c.pow_quality).cell(c.length).cell(c.exponent).cell(c.states).cell(c.below_fraction);
    w.cell(c.crossover ? std::to_string(*c.crossover) : std::string());
    std::string err = c.error;
    std::replace(err.begin(), err.end(), ',', ';');
    w.cell(err);
    w.end_row();
  }
  out.write("phase_diagram.csv", w.str());
  m.cache_hit = all_hits;
}

}  // namespace

const char* to_string(PhaseClass c) {
  switch (c) {
    case PhaseClass::powerlaw: return "powerlaw";
    case PhaseClass::exponential: return "exponential";
    case PhaseClass::mixed: return "mixed";
    case PhaseClass::undetermined: return "undetermined";
    default: return "failed";
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ParameterError("config key '" + key + "' repeated");
    if (key == "k") cfg.raw.kick = parse_number(key, val);
    else if (key == "V0") cfg.raw.depth = parse_number(key, val);
    else if (key == "b_over_pi") cfg.raw.barrier_over_pi = parse_number(key, val);
    else if (key == "hbar_s") cfg.raw.hbar = parse_number(key, val);
    else if (key == "basis_l_max") cfg.l_max = static_cast<int>(parse_integer(key, val));
    else if (key == "seed") {
      const long s = parse_integer(key, val);
      if (s < 0) throw ParameterError("seed must be >= 0");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "mu_hi") cfg.mu_hi = parse_number(key, val);
    else if (key == "pr_window") cfg.pr_window = static_cast<int>(parse_integer(key, val));
    else if (key == "k_grid") cfg.k_grid = parse_list(key, val);
    else if (key == "V0_grid") cfg.v0_grid = parse_list(key, val);
    else if (key == "classical_trajectories") cfg.classical_trajectories = static_cast<int>(parse_integer(key, val));
    else if (key == "classical_steps") cfg.classical_steps = static_cast<int>(parse_integer(key, val));
    else if (key == "classical_p_window") cfg.classical_p_window = parse_number(key, val);
    else if (key == "coverage_cells") cfg.coverage_cells = static_cast<int>(parse_integer(key, val));
    else throw ParameterError("unknown config key '" + key + "'");
  }
  for (const char* req : {"k", "V0"}) {
    if (!seen.count(req)) throw ParameterError(std::string("config is missing required key '") + req + "'");
  }
  validate_params(cfg.raw);
  make_truncation(cfg.l_max);
  if (!(cfg.mu_hi > 1.0)) throw ParameterError("mu_hi must exceed 1");
  if (cfg.pr_window < 1) throw ParameterError("pr_window must be >= 1");
  if (cfg.classical_trajectories < 1 || cfg.classical_steps < 1) {
    throw ParameterError("classical ensemble and step counts must be >= 1");
  }
  if (!(cfg.classical_p_window > 0.0)) throw ParameterError("classical_p_window must be > 0");
  if (cfg.coverage_cells < 32) throw ParameterError("coverage_cells must be >= 32");
  for (double v : cfg.v0_grid)
    if (v < 0.0) throw ParameterError("V0_grid entries must be >= 0");
  for (double v : cfg.k_grid)
    if (v < 0.0) throw ParameterError("k_grid entries must be >= 0");

  std::ostringstream canon;
  canon << "V0=" << format_double(cfg.raw.depth) << "\n"
        << "b_over_pi=" << format_double(cfg.raw.barrier_over_pi) << "\n"
        << "basis_l_max=" << cfg.l_max << "\n"
        << "classical_p_window=" << format_double(cfg.classical_p_window) << "\n"
        << "classical_steps=" << cfg.classical_steps << "\n"
        << "classical_trajectories=" << cfg.classical_trajectories << "\n"
        << "coverage_cells=" << cfg.coverage_cells << "\n"
        << "hbar_s=" << format_double(cfg.raw.hbar) << "\n"
        << "k=" << format_double(cfg.raw.kick) << "\n"
        << "k_grid=" << join(cfg.k_grid) << "\n"
        << "V0_grid=" << join(cfg.v0_grid) << "\n"
        << "mu_hi=" << format_double(cfg.mu_hi) << "\n"
        << "pr_window=" << cfg.pr_window << "\n"
        << "seed=" << cfg.seed << "\n";
  cfg.text = canon.str();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ParameterError("cannot read config file " + path.string());
  }
  return parse_config(text);
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"spectrum", "floquet", "profiles",
                                                 "melements", "pr", "spacing",
                                                 "tightbinding", "classical", "sweep"};
  return names;
}

PhaseCell classify_cell(double k, double v0, const UnperturbedSpectrum& spec,
                        const RunConfig& cfg) {
  RawParams raw = cfg.raw;
  raw.kick = k;
  raw.depth = v0;
  const ModelParams p = validate_params(raw);
  PhaseCell cell;
  cell.k = k;
  cell.v0 = v0;
  const Quantum q = floquet_of(spec, p);
  ProfileOptions po;
  po.side = ProfileSide::positive;
  const DecayProfile prof =
      shift_and_average(q.d, [&](int r) { return bool(q.d.converged[r]); }, po);
  cell.states = prof.count;
  if (v0 > 0.0) {
    const auto mu = classify_mu(q.d, spec, p, cfg.mu_hi);
    int below = 0;
    for (int r = 0; r < q.d.dim(); ++r)
      if (q.d.converged[r] && mu[r].mu <= 1.0) ++below;
    cell.below_fraction = static_cast<double>(below) / prof.count;
  }
  const FitResult fe = fit_exponential_auto(prof);
  const FitResult fp = fit_powerlaw_auto(prof);
  cell.exp_quality = fe.quality;
  cell.pow_quality = fp.quality;
  cell.length = fe.decays ? fe.parameter : 0.0;
  cell.exponent = fp.decays ? fp.parameter : 0.0;
  const MatrixDecayCurve curve = matrix_element_decay(q.u);
  if (curve.crossover) cell.crossover = curve.crossover->breakpoint;

  if (fp.quality > fe.quality + kClassMargin) cell.classification = PhaseClass::powerlaw;
  else if (fe.quality > fp.quality + kClassMargin) cell.classification = PhaseClass::exponential;
  else if (cell.crossover) cell.classification = PhaseClass::mixed;
  else cell.classification = PhaseClass::undetermined;
  return cell;
}

RunManifest run_pipeline(const RunConfig& cfg, const RunOptions& opt) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), opt.subcommand) == names.end()) {
    throw ParameterError("unknown subcommand '" + opt.subcommand + "'");
  }
  const ModelParams p = validate_params(cfg.raw);
  const BasisTruncation t = make_truncation(cfg.l_max);
  if (opt.subcommand != "classical") require_production_size(t);

  RunManifest m{p, t, opt.subcommand, 0, kCodeVersion, "", {}, "", "", false, 0};
  m.seed = opt.seed.value_or(cfg.seed);
  m.config_sha256 = sha256_hex(cfg.text);
  m.started = utc_now();
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + opt.out_dir.string());
  Outputs out(opt.out_dir, m);

  if (opt.subcommand == "classical") {
    run_classical(p, cfg, m.seed, out);
  } else {
    SpectrumCache cache(opt.cache_dir);
    if (opt.subcommand == "sweep") {
      run_sweep(cfg, opt, t, cache, m, out);
    } else {
      SpectrumCache::Lookup look = cache.get_or_solve(p, t);
      m.cache_hit = look.hit;
      const UnperturbedSpectrum& spec = look.spectrum;
      if (opt.subcommand == "spectrum") run_spectrum(spec, p, out);
      else if (opt.subcommand == "floquet") run_floquet(spec, p, opt, out);
      else if (opt.subcommand == "profiles") run_profiles(spec, p, cfg, opt, out);
      else if (opt.subcommand == "melements") run_melements(spec, p, out);
      else if (opt.subcommand == "pr") run_pr(spec, p, cfg, out);
      else if (opt.subcommand == "spacing") run_spacing(spec, p, cfg, opt, out);
      else if (opt.subcommand == "tightbinding") run_tightbinding(spec, p, out);
    }
    m.spectrum_solves = cache.solves();
  }

  Json j;
  j["subcommand"] = m.subcommand;
  j["code_version"] = m.code_version;
  j["seed"] = m.seed;
  j["config_sha256"] = m.config_sha256;
  j["params"] = params_json(p);
  j["truncation"] = {{"basis_l_max", t.l_max}, {"dim", t.dim()}};
  j["outputs"] = Json::array();
  for (const OutputRecord& o : m.outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}});
  write_atomic(opt.out_dir / "manifest.json", dump(j));

  m.finished = utc_now();
  Json e;
  e["started"] = m.started;
  e["finished"] = m.finished;
  e["cache_hit"] = m.cache_hit;
  e["spectrum_solves"] = m.spectrum_solves;
  write_atomic(opt.out_dir / "execution.json", dump(e));
  return m;
}

}  // namespace kickwell
