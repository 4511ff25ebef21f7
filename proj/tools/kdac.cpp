// kdac: masks, phantoms, reconstructions and benchmark sweeps from the command line.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "kdac/experiment.hpp"

namespace fs = std::filesystem;
using namespace kdac;
using kdac::cli::json;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError&) {
    return kConfig;
  } catch (const DimensionError&) {
    return kConfig;
  } catch (const NumericError&) {
    return kNumeric;
  } catch (const FormatError&) {
    return kIo;
  } catch (const IoError&) {
    return kIo;
  } catch (const fs::filesystem_error&) {
    return kIo;
  } catch (...) {
    return kNumeric;
  }
}

std::uint64_t fnv1a64(const std::vector<char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  const auto text = j.dump(2) + "\n";
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

// Flags shared by recon and bench. Values set on the command line override the file.
struct Overrides {
  std::string config;
  std::string input, out, mask, bank, solver;
  std::size_t n = 0;
  double ratio = -1, sigma = -1, window = -1;
  std::int64_t seed = -1, noise_seed = -1, threads = -1, iters = -1, max_outer = -1;
  std::vector<std::string> masks, banks;
  std::vector<double> ratios, sigmas;
  bool continue_on_error = false, images = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON experiment config");
  cmd->add_option("--input", o.input, "'phantom' or a GridFile image");
  cmd->add_option("--n", o.n, "phantom side length");
  cmd->add_option("--mask", o.mask, "cartesian | random2d | radial");
  cmd->add_option("--ratio", o.ratio, "sampling ratio in (0, 1]");
  cmd->add_option("--seed", o.seed, "mask seed");
  cmd->add_option("--bank", o.bank, "none | horivert | gaussian");
  cmd->add_option("--solver", o.solver, "zero_fill | fista_l1 | fcsa");
  cmd->add_option("--sigma", o.sigma, "complex noise standard deviation");
  cmd->add_option("--noise-seed", o.noise_seed, "noise seed");
  cmd->add_option("--iters", o.iters, "solver outer iterations");
  cmd->add_option("--max-outer", o.max_outer, "fusion loop iterations");
  cmd->add_option("--threads", o.threads, "worker threads (capped by KDAC_THREADS)");
  cmd->add_option("--window", o.window, "upper end of the residual map window");
  cmd->add_option("-o,--out", o.out, "output directory");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : cli::load_config(o.config);
  auto mask_kind = [](const std::string& s) {
    auto k = parse_mask_kind(s);
    if (!k) throw ConfigError("mask: unknown mask kind '" + s + "'");
    return *k;
  };
  auto bank_kind = [](const std::string& s) {
    auto k = parse_bank_kind(s);
    if (!k) throw ConfigError("bank: unknown bank '" + s + "'");
    return *k;
  };
  if (!o.input.empty()) c.input = o.input;
  if (o.n != 0) c.n = o.n;
  if (!o.mask.empty()) c.mask.kind = mask_kind(o.mask);
  if (o.ratio >= 0) c.mask.ratio = o.ratio;
  if (o.seed >= 0) c.mask.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.bank.empty()) c.bank = bank_kind(o.bank);
  if (!o.solver.empty()) {
    auto k = parse_solver_kind(o.solver);
    if (!k) throw ConfigError("solver: unknown solver '" + o.solver + "'");
    c.solver = *k;
  }
  if (o.sigma >= 0) c.sigma = o.sigma;
  if (o.noise_seed >= 0) c.noise_seed = static_cast<std::uint64_t>(o.noise_seed);
  if (o.iters >= 0) c.solver_config.outer_iters = static_cast<int>(o.iters);
  if (o.max_outer >= 0) c.loop.max_outer = static_cast<int>(o.max_outer);
  if (o.threads >= 0) c.threads = static_cast<unsigned>(o.threads);
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.window >= 0) c.error_window = o.window;
  if (!o.masks.empty()) {
    c.sweep.masks.clear();
    for (const auto& s : o.masks) c.sweep.masks.push_back(mask_kind(s));
  }
  if (!o.ratios.empty()) c.sweep.ratios = o.ratios;
  if (!o.banks.empty()) {
    c.sweep.banks.clear();
    for (const auto& s : o.banks) c.sweep.banks.push_back(bank_kind(s));
  }
  if (!o.sigmas.empty()) c.sweep.sigmas = o.sigmas;
  if (o.continue_on_error) c.sweep.continue_on_error = true;
  if (o.images) c.sweep.write_images = true;
  return c;
}

int cmd_mask(const std::string& kind_s, double ratio, std::size_t n, std::uint64_t seed, const std::string& out) {
  auto kind = parse_mask_kind(kind_s);
  if (!kind) throw ConfigError("kind: unknown mask kind '" + kind_s + "'");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("ratio: must lie in (0, 1], got " + std::to_string(ratio));
  const auto mask = generate_mask(*kind, ratio, n, seed);
  const auto dir = ensure_dir(out);
  char stem[96];
  std::snprintf(stem, sizeof stem, "mask_%s_r%03d_n%zu_s%llu", std::string(to_string(*kind)).c_str(),
                static_cast<int>(std::lround(ratio * 100)), n, static_cast<unsigned long long>(seed));
  ArtifactSet arts(dir);
  write_grid(arts.add(std::string(stem) + ".kdc"), mask);
  export_png(arts.add(std::string(stem) + ".png"), mask);
  json meta = {{"kind", to_string(*kind)}, {"n", n},          {"seed", seed},
               {"target_ratio", ratio},    {"achieved_ratio", mask.achieved_ratio}, {"count", mask.count()}};
  write_json(arts.add(std::string(stem) + ".json"), meta);
  arts.commit();
  std::cout << "mask kind=" << to_string(*kind) << " n=" << n << " seed=" << seed << " target_ratio=" << ratio
            << " achieved_ratio=" << format_double(mask.achieved_ratio) << " count=" << mask.count() << " file="
            << (dir / (std::string(stem) + ".kdc")).string() << "\n";
  return kOk;
}

int cmd_phantom(std::size_t n, const std::string& out) {
  const auto img = make_phantom(n);
  const auto dir = ensure_dir(out);
  const std::string stem = "phantom_n" + std::to_string(n);
  const auto bytes = encode_grid(GridKind::image, img);
  ArtifactSet arts(dir);
  write_file_atomic(arts.add(stem + ".kdc"), bytes);
  export_png(arts.add(stem + ".png"), img);
  arts.commit();
  std::cout << "phantom n=" << n << " fnv1a64=" << hex64(fnv1a64(bytes)) << " file=" << (dir / (stem + ".kdc")).string()
            << "\n";
  return kOk;
}

int cmd_recon(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto reference = load_input(cfg);
  const auto dir = ensure_dir(cfg.output_dir);
  const Cell cell = base_cell(cfg);
  const auto out = run_cell(cfg, reference, cell);
  const std::string stem = cell_stem(cell);

  ArtifactSet arts(dir);
  write_cell_images(arts, stem, reference, out, cfg.error_window);
  if (out.report) {
    for (std::size_t i = 0; i < out.report->labels.size(); ++i) {
      write_grid(arts.add(stem + "_sub_" + out.report->labels[i] + ".kdc"), out.report->subspace_images[i]);
    }
    write_json(arts.add(stem + "_report.json"), cli::report_to_json(*out.report));
  }
  write_json(arts.add(stem + "_config.json"), cli::config_to_json(cfg));
  append_csv(dir / "metrics.csv", {out.row});
  arts.commit();
  std::cout << format_row(out.row) << "\n";
  return kOk;
}

int cmd_bench(ExperimentConfig cfg, const std::string& csv_name) {
  cfg.validate();
  auto& s = cfg.sweep;
  if (s.masks.empty()) s.masks = {cfg.mask.kind};
  if (s.ratios.empty()) s.ratios = {cfg.mask.ratio};
  if (s.banks.empty()) s.banks = {cfg.bank};
  if (s.sigmas.empty()) s.sigmas = {cfg.sigma};
  const auto cells = expand_sweep(s);
  const auto reference = load_input(cfg);
  const auto dir = ensure_dir(cfg.output_dir);

  std::vector<MetricsRow> rows;
  int status = kOk;
  for (const auto& cell : cells) {
    try {
      const auto out = run_cell(cfg, reference, cell);
      if (s.write_images) {
        ArtifactSet arts(dir);
        write_cell_images(arts, cell_stem(cell), reference, out, cfg.error_window);
        arts.commit();
      }
      rows.push_back(out.row);
      std::cerr << "cell " << cell_stem(cell) << " ssim=" << format_double(out.row.ssim) << "\n";
    } catch (const std::exception& e) {
      if (!s.continue_on_error) throw;
      std::cerr << "cell " << cell_stem(cell) << " failed: " << e.what() << "\n";
      if (status == kOk) status = exit_code_for(std::current_exception());
    }
  }
  write_csv(dir / csv_name, rows);
  std::cout << "bench cells=" << cells.size() << " rows=" << rows.size() << " csv=" << (dir / csv_name).string() << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdac: divide-and-conquer k-space reconstruction experiments"};
  app.require_subcommand(1);

  std::string mask_kind = "radial", mask_out = ".";
  double mask_ratio = 0.30;
  std::size_t mask_n = 256;
  std::uint64_t mask_seed = 7;
  auto* mask = app.add_subcommand("mask", "generate a sampling mask (GridFile + PNG + JSON metadata)");
  mask->add_option("--kind", mask_kind, "cartesian | random2d | radial");
  mask->add_option("--ratio", mask_ratio, "target sampling ratio in (0, 1]");
  mask->add_option("--n", mask_n, "side length");
  mask->add_option("--seed", mask_seed, "mask seed");
  mask->add_option("-o,--out", mask_out, "output directory");

  std::size_t phantom_n = 256;
  std::string phantom_out = ".";
  auto* phantom = app.add_subcommand("phantom", "write the built-in phantom (GridFile + PNG)");
  phantom->add_option("--n", phantom_n, "side length");
  phantom->add_option("-o,--out", phantom_out, "output directory");

  Overrides recon_o;
  auto* recon = app.add_subcommand("recon", "reconstruct one configuration and append to metrics.csv");
  add_common(recon, recon_o);

  Overrides bench_o;
  std::string csv_name = "bench.csv";
  auto* bench = app.add_subcommand("bench", "sweep masks x ratios x banks x sigmas into a CSV");
  add_common(bench, bench_o);
  bench->add_option("--masks", bench_o.masks, "mask kinds")->delimiter(',');
  bench->add_option("--ratios", bench_o.ratios, "sampling ratios")->delimiter(',');
  bench->add_option("--banks", bench_o.banks, "filter banks")->delimiter(',');
  bench->add_option("--sigmas", bench_o.sigmas, "noise levels")->delimiter(',');
  bench->add_flag("--continue-on-error", bench_o.continue_on_error, "keep going when a cell fails");
  bench->add_flag("--images", bench_o.images, "write per-cell images");
  bench->add_option("--csv", csv_name, "CSV file name inside the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (mask->parsed()) return cmd_mask(mask_kind, mask_ratio, mask_n, mask_seed, mask_out);
    if (phantom->parsed()) return cmd_phantom(phantom_n, phantom_out);
    if (recon->parsed()) return cmd_recon(resolve(recon_o));
    if (bench->parsed()) return cmd_bench(resolve(bench_o), csv_name);
  } catch (const std::exception& e) {
    std::cerr << "kdac: error: " << e.what() << "\n";
    return exit_code_for(std::current_exception());
  }
  return kOk;
}
