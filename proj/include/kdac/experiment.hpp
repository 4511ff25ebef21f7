#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kdac/dac.hpp"
#include "kdac/filterbank.hpp"
#include "kdac/gridfile.hpp"
#include "kdac/metrics.hpp"
#include "kdac/phantom.hpp"
#include "kdac/png.hpp"
#include "kdac/sampling.hpp"
#include "kdac/solvers.hpp"

namespace kdac {

enum class BankKind { none, horivert, gaussian };

inline std::string_view to_string(BankKind b) {
  switch (b) {
    case BankKind::none: return "none";
    case BankKind::horivert: return "horivert";
    case BankKind::gaussian: return "gaussian";
  }
  return "?";
}

inline std::optional<BankKind> parse_bank_kind(std::string_view s) {
  if (s == "none") return BankKind::none;
  if (s == "horivert") return BankKind::horivert;
  if (s == "gaussian") return BankKind::gaussian;
  return std::nullopt;
}

inline FilterBank build_bank(BankKind kind, std::size_t n) {
  switch (kind) {
    case BankKind::none: return build_identity(n);
    case BankKind::horivert: return build_horivert(n);
    case BankKind::gaussian: return build_gaussian(n);
  }
  throw ConfigError("unknown bank");
}

/// Partial SolverConfig: only the fields that are set replace the defaults.
struct SolverOverrides {
  std::optional<double> mu, alpha, beta, step, tol, tv_share;
  std::optional<int> outer_iters, tv_inner_iters, wavelet_levels;

  void apply(SolverConfig& c) const {
    if (mu) c.mu = *mu;
    if (alpha) c.alpha = *alpha;
    if (beta) c.beta = *beta;
    if (step) c.step = *step;
    if (tol) c.tol = *tol;
    if (tv_share) c.tv_share = *tv_share;
    if (outer_iters) c.outer_iters = *outer_iters;
    if (tv_inner_iters) c.tv_inner_iters = *tv_inner_iters;
    if (wavelet_levels) c.wavelet_levels = *wavelet_levels;
  }
};

struct MaskSpec {
  MaskKind kind = MaskKind::radial;
  double ratio = 0.30;
  std::uint64_t seed = 7;
};

struct SweepSpec {
  std::vector<MaskKind> masks;
  std::vector<double> ratios;
  std::vector<BankKind> banks;
  std::vector<double> sigmas;
  bool continue_on_error = false;
  bool write_images = false;
};

struct ExperimentConfig {
  int version = 1;
  std::string input = "phantom";  ///< "phantom" or a GridFile image path
  std::size_t n = 256;            ///< phantom side length
  MaskSpec mask;
  BankKind bank = BankKind::horivert;
  SolverKind solver = SolverKind::fcsa;
  SolverOverrides solver_config;                          ///< applied to every solve
  std::map<std::string, SolverOverrides> subspace_configs;  ///< keyed by response label
  LoopParams loop;
  double sigma = 0.0;
  std::uint64_t noise_seed = 1234;
  std::string output_dir = "kdac_out";
  std::optional<unsigned> threads;
  double error_window = 0.08;  ///< upper end of the residual-map PNG window
  SweepSpec sweep;  ///< bench only; empty lists are filled from the single values

  void validate() const {
    if (version != 1) throw ConfigError("version: unsupported config version " + std::to_string(version));
    if (input.empty()) throw ConfigError("input: must be 'phantom' or a file path");
    if (input == "phantom" && (n < 64 || n % 2 != 0)) throw ConfigError("n: phantom side must be even and >= 64");
    if (!(mask.ratio > 0.0 && mask.ratio <= 1.0)) throw ConfigError("mask.ratio: must lie in (0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma: must be finite and >= 0");
    if (loop.max_outer < 1) throw ConfigError("loop.max_outer: must be >= 1");
    if (!(loop.tol >= 0.0)) throw ConfigError("loop.tol: must be >= 0");
    if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    if (threads && *threads == 0) throw ConfigError("threads: must be >= 1");
    if (!(error_window > 0.0) || !std::isfinite(error_window)) throw ConfigError("error_window: must be > 0");
    SolverConfig probe;
    solver_config.apply(probe);
    try {
      probe.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("solver_config: ") + e.what());
    }
    for (const auto& [label, ov] : subspace_configs) {
      SolverConfig c;
      ov.apply(c);
      try {
        c.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("subspace_configs." + label + ": " + e.what());
      }
    }
    for (double r : sweep.ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("sweep.ratios: every ratio must lie in (0, 1]");
    }
    for (double s : sweep.sigmas) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("sweep.sigmas: every sigma must be finite and >= 0");
    }
  }

  /// KDAC_THREADS caps the requested count.
  unsigned thread_count() const {
    const unsigned cap = default_thread_count();
    return threads ? std::min(*threads, cap) : cap;
  }
};

/// One point of the experiment grid.
struct Cell {
  MaskKind mask_kind = MaskKind::radial;
  double ratio = 0.3;
  BankKind bank = BankKind::horivert;
  double sigma = 0.0;
};

inline Cell base_cell(const ExperimentConfig& cfg) { return {cfg.mask.kind, cfg.mask.ratio, cfg.bank, cfg.sigma}; }

/// Cartesian product masks x ratios x banks x sigmas, in that nesting order.
inline std::vector<Cell> expand_sweep(const SweepSpec& s) {
  if (s.masks.empty() || s.ratios.empty() || s.banks.empty() || s.sigmas.empty()) {
    throw ConfigError("sweep: masks, ratios, banks and sigmas must all be non-empty");
  }
  std::vector<Cell> cells;
  for (auto m : s.masks)
    for (double r : s.ratios)
      for (auto b : s.banks)
        for (double sg : s.sigmas) cells.push_back({m, r, b, sg});
  return cells;
}

/// One metrics.csv row.
struct MetricsRow {
  std::string input;
  std::string mask_kind;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  std::string bank;
  std::string solver;
  double sigma = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double hfen = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kCsvHeader = "input,mask_kind,ratio,seed,bank,solver,sigma,psnr_db,ssim,hfen,wall_ms";

// Round-trip text for doubles; infinities are written as inf / -inf.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw FormatError("bad number in CSV: " + s);
  return v;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_row(const MetricsRow& r) {
  std::ostringstream os;
  os << csv_field(r.input) << ',' << r.mask_kind << ',' << format_double(r.ratio) << ',' << r.seed << ',' << r.bank << ','
     << r.solver << ',' << format_double(r.sigma) << ',' << format_double(r.psnr_db) << ',' << format_double(r.ssim) << ','
     << format_double(r.hfen) << ',' << format_double(r.wall_ms);
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

inline MetricsRow parse_row(const std::string& line) {
  const auto f = split_csv_line(line);
  if (f.size() != 11) throw FormatError("metrics row must have 11 fields: " + line);
  MetricsRow r;
  r.input = f[0];
  r.mask_kind = f[1];
  r.ratio = parse_double(f[2]);
  r.seed = std::stoull(f[3]);
  r.bank = f[4];
  r.solver = f[5];
  r.sigma = parse_double(f[6]);
  r.psnr_db = parse_double(f[7]);
  r.ssim = parse_double(f[8]);
  r.hfen = parse_double(f[9]);
  r.wall_ms = parse_double(f[10]);
  return r;
}

inline std::vector<MetricsRow> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw FormatError(path.string() + ": unexpected CSV header");
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty()) rows.push_back(parse_row(line));
  }
  return rows;
}

/// Appends rows, writing the header first when the file is new. Appends from
/// concurrent callers in one process are serialized.
inline void append_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw IoError("cannot open " + path.string() + " for appending");
  if (fresh) os << kCsvHeader << '\n';
  for (const auto& r : rows) os << format_row(r) << '\n';
  os.flush();
  if (!os) throw IoError("append failed for " + path.string());
}

/// Writes a whole CSV atomically.
inline void write_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::string text = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) text += format_row(r) + "\n";
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

inline ComplexImage load_input(const ExperimentConfig& cfg) {
  if (cfg.input == "phantom") return make_phantom(cfg.n);
  return read_image(cfg.input);
}

/// Solver configs per subspace: band defaults, then solver_config, then the
/// label-specific overrides.
inline std::vector<SolverConfig> subspace_configs(const ExperimentConfig& cfg, const FilterBank& bank) {
  for (const auto& [label, ov] : cfg.subspace_configs) {
    (void)ov;
    if (cfg.bank != BankKind::none &&
        std::find(bank.labels.begin(), bank.labels.end(), label) == bank.labels.end()) {
      throw ConfigError("subspace_configs." + label + ": no such subspace in bank " + std::string(to_string(cfg.bank)));
    }
  }
  auto cfgs = default_configs(bank);
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    cfg.solver_config.apply(cfgs[i]);
    if (auto it = cfg.subspace_configs.find(bank.labels[i]); it != cfg.subspace_configs.end()) it->second.apply(cfgs[i]);
  }
  return cfgs;
}

struct CellOutcome {
  MetricsRow row;
  ComplexImage image;
  Spectrum full_spectrum;
  std::optional<ReconReport> report;  ///< DAC runs only
};

/// Runs one cell: mask, optional noise, then the direct solver (bank none) or DAC.
inline CellOutcome run_cell(const ExperimentConfig& cfg, const ComplexImage& reference, const Cell& cell) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto mask = generate_mask(cell.mask_kind, cell.ratio, reference.n(), cfg.mask.seed);
  auto meas = add_noise(undersample(reference, mask), cell.sigma, cfg.noise_seed);
  const auto solver = make_solver(cfg.solver);

  CellOutcome out;
  if (cell.bank == BankKind::none) {
    ExperimentConfig c = cfg;
    c.bank = BankKind::none;
    const auto bank = build_identity(reference.n());
    out.image = solver(meas, subspace_configs(c, bank).front()).image;
  } else {
    ExperimentConfig c = cfg;
    c.bank = cell.bank;
    const auto bank = build_bank(cell.bank, reference.n());
    auto rep = dac_reconstruct(meas, bank, solver, subspace_configs(c, bank), cfg.loop, cfg.thread_count());
    out.image = rep.image;
    out.report = std::move(rep);
  }
  const double wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& v : out.image) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericError("reconstruction is not finite");
  }
  const auto m = evaluate(reference, out.image);
  out.full_spectrum = fft2(reference);
  out.row = {cfg.input, std::string(to_string(cell.mask_kind)), cell.ratio, cfg.mask.seed, std::string(to_string(cell.bank)),
             std::string(to_string(cfg.solver)), cell.sigma, m.psnr, m.ssim, m.hfen, wall};
  return out;
}

/// Tracks files written for one run so they can be removed if the run fails.
class ArtifactSet {
 public:
  explicit ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {}
  ArtifactSet(const ArtifactSet&) = delete;
  ArtifactSet& operator=(const ArtifactSet&) = delete;
  ~ArtifactSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) std::filesystem::remove(p, ec);
  }

  std::filesystem::path add(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void commit() { committed_ = true; }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool committed_ = false;
};

inline std::string cell_stem(const Cell& c) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_r%03d_%s_s%03d", std::string(to_string(c.mask_kind)).c_str(),
                static_cast<int>(std::lround(c.ratio * 100)), std::string(to_string(c.bank)).c_str(),
                static_cast<int>(std::lround(c.sigma * 1000)));
  return buf;
}

/// Reconstruction (GridFile + PNG), |recon - reference| and KRRE maps for one cell.
inline void write_cell_images(ArtifactSet& arts, const std::string& stem, const ComplexImage& reference,
                              const CellOutcome& out, double error_window) {
  write_grid(arts.add(stem + "_recon.kdc"), out.image);
  export_png(arts.add(stem + "_recon.png"), out.image);
  RealGrid residual(reference.n());
  for (std::size_t k = 0; k < residual.size(); ++k) residual[k] = std::abs(std::abs(out.image[k]) - std::abs(reference[k]));
  export_png(arts.add(stem + "_residual.png"), residual, PngMode::window(0.0, error_window));
  const auto krre = krre_map(out.full_spectrum, fft2(out.image));
  export_kspace_png(arts.add(stem + "_krre.png"), krre, PngMode::window(0.0, 1.0));
}

}  // namespace kdac
