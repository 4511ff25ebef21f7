#pragma once

#include <fstream>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "kdac/experiment.hpp"

namespace kdac::cli {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown key");
  }
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + ": wrong type");
  }
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

inline std::uint64_t get_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError(path + ": expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline MaskKind get_mask_kind(const json& j, const std::string& path) {
  const auto s = get_string(j, path);
  auto k = parse_mask_kind(s);
  if (!k) throw ConfigError(path + ": unknown mask kind '" + s + "'");
  return *k;
}

inline BankKind get_bank(const json& j, const std::string& path) {
  const auto s = get_string(j, path);
  auto k = parse_bank_kind(s);
  if (!k) throw ConfigError(path + ": unknown bank '" + s + "'");
  return *k;
}

inline SolverOverrides parse_overrides(const json& j, const std::string& where) {
  reject_unknown(j, where, {"mu", "alpha", "beta", "step", "tol", "tv_share", "outer_iters", "tv_inner_iters",
                            "wavelet_levels"});
  SolverOverrides o;
  auto num = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = get_number(j[key], where + "." + key);
  };
  auto integer = [&](const char* key, std::optional<int>& dst) {
    if (j.contains(key)) dst = get_int(j[key], where + "." + key);
  };
  num("mu", o.mu);
  num("alpha", o.alpha);
  num("beta", o.beta);
  num("step", o.step);
  num("tol", o.tol);
  num("tv_share", o.tv_share);
  integer("outer_iters", o.outer_iters);
  integer("tv_inner_iters", o.tv_inner_iters);
  integer("wavelet_levels", o.wavelet_levels);
  return o;
}

template <typename T, typename F>
std::vector<T> get_list(const json& j, const std::string& path, F item) {
  if (!j.is_array()) throw ConfigError(path + ": expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace detail

/// Builds a config from a parsed JSON document. Missing keys keep their defaults.
inline ExperimentConfig parse_config(const json& j) {
  using namespace detail;
  reject_unknown(j, "", {"version", "input", "n", "mask", "bank", "solver", "solver_config", "subspace_configs", "loop",
                         "sigma", "noise_seed", "output_dir", "threads", "error_window", "sweep"});
  if (!j.contains("version")) throw ConfigError("version: required");
  ExperimentConfig c;
  c.version = get_int(j["version"], "version");
  if (j.contains("input")) c.input = get_string(j["input"], "input");
  if (j.contains("n")) c.n = get_u64(j["n"], "n");
  if (j.contains("mask")) {
    const auto& m = j["mask"];
    reject_unknown(m, "mask", {"kind", "ratio", "seed"});
    if (m.contains("kind")) c.mask.kind = get_mask_kind(m["kind"], "mask.kind");
    if (m.contains("ratio")) c.mask.ratio = get_number(m["ratio"], "mask.ratio");
    if (m.contains("seed")) c.mask.seed = get_u64(m["seed"], "mask.seed");
  }
  if (j.contains("bank")) c.bank = get_bank(j["bank"], "bank");
  if (j.contains("solver")) {
    const auto s = get_string(j["solver"], "solver");
    auto k = parse_solver_kind(s);
    if (!k) throw ConfigError("solver: unknown solver '" + s + "'");
    c.solver = *k;
  }
  if (j.contains("solver_config")) c.solver_config = parse_overrides(j["solver_config"], "solver_config");
  if (j.contains("subspace_configs")) {
    const auto& s = j["subspace_configs"];
    if (!s.is_object()) throw ConfigError("subspace_configs: expected an object");
    for (const auto& [label, v] : s.items()) c.subspace_configs[label] = parse_overrides(v, "subspace_configs." + label);
  }
  if (j.contains("loop")) {
    const auto& l = j["loop"];
    reject_unknown(l, "loop", {"max_outer", "tol"});
    if (l.contains("max_outer")) c.loop.max_outer = get_int(l["max_outer"], "loop.max_outer");
    if (l.contains("tol")) c.loop.tol = get_number(l["tol"], "loop.tol");
  }
  if (j.contains("sigma")) c.sigma = get_number(j["sigma"], "sigma");
  if (j.contains("noise_seed")) c.noise_seed = get_u64(j["noise_seed"], "noise_seed");
  if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");
  if (j.contains("threads")) c.threads = static_cast<unsigned>(get_u64(j["threads"], "threads"));
  if (j.contains("error_window")) c.error_window = get_number(j["error_window"], "error_window");
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    reject_unknown(s, "sweep", {"masks", "ratios", "banks", "sigmas", "continue_on_error", "write_images"});
    // Lists that are present must be non-empty; absent lists fall back to the single values.
    auto nonempty = [](auto v, const std::string& path) {
      if (v.empty()) throw ConfigError(path + ": must not be empty");
      return v;
    };
    if (s.contains("masks")) c.sweep.masks = nonempty(get_list<MaskKind>(s["masks"], "sweep.masks", get_mask_kind), "sweep.masks");
    if (s.contains("ratios")) c.sweep.ratios = nonempty(get_list<double>(s["ratios"], "sweep.ratios", get_number), "sweep.ratios");
    if (s.contains("banks")) c.sweep.banks = nonempty(get_list<BankKind>(s["banks"], "sweep.banks", get_bank), "sweep.banks");
    if (s.contains("sigmas")) c.sweep.sigmas = nonempty(get_list<double>(s["sigmas"], "sweep.sigmas", get_number), "sweep.sigmas");
    if (s.contains("continue_on_error")) {
      if (!s["continue_on_error"].is_boolean()) throw ConfigError("sweep.continue_on_error: expected a boolean");
      c.sweep.continue_on_error = s["continue_on_error"].get<bool>();
    }
    if (s.contains("write_images")) {
      if (!s["write_images"].is_boolean()) throw ConfigError("sweep.write_images: expected a boolean");
      c.sweep.write_images = s["write_images"].get<bool>();
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline json overrides_to_json(const SolverOverrides& o) {
  json j = json::object();
  if (o.mu) j["mu"] = *o.mu;
  if (o.alpha) j["alpha"] = *o.alpha;
  if (o.beta) j["beta"] = *o.beta;
  if (o.step) j["step"] = *o.step;
  if (o.tol) j["tol"] = *o.tol;
  if (o.tv_share) j["tv_share"] = *o.tv_share;
  if (o.outer_iters) j["outer_iters"] = *o.outer_iters;
  if (o.tv_inner_iters) j["tv_inner_iters"] = *o.tv_inner_iters;
  if (o.wavelet_levels) j["wavelet_levels"] = *o.wavelet_levels;
  return j;
}

/// Effective config as JSON, written next to results. parse_config reads it back.
inline json config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = c.version;
  j["input"] = c.input;
  j["n"] = c.n;
  j["mask"] = {{"kind", to_string(c.mask.kind)}, {"ratio", c.mask.ratio}, {"seed", c.mask.seed}};
  j["bank"] = to_string(c.bank);
  j["solver"] = to_string(c.solver);
  j["solver_config"] = overrides_to_json(c.solver_config);
  j["subspace_configs"] = json::object();
  for (const auto& [label, o] : c.subspace_configs) j["subspace_configs"][label] = overrides_to_json(o);
  j["loop"] = {{"max_outer", c.loop.max_outer}, {"tol", c.loop.tol}};
  j["sigma"] = c.sigma;
  j["noise_seed"] = c.noise_seed;
  j["output_dir"] = c.output_dir;
  if (c.threads) j["threads"] = *c.threads;
  j["error_window"] = c.error_window;
  return j;
}

/// Report of one DAC run: labels, lambda history and solver traces.
inline json report_to_json(const ReconReport& r) {
  json j;
  j["labels"] = r.labels;
  j["lambda_history"] = r.lambda_history;
  json rel = json::array();
  for (double v : r.rel_change_history) rel.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["rel_change_history"] = rel;
  j["minimax_history"] = r.minimax_history;
  j["outer_iterations"] = r.outer_iterations;
  j["selected_iteration"] = r.selected_iteration;
  j["converged"] = r.converged;
  j["stage_ms"] = {{"decompose", r.decompose_ms}, {"solve", r.solve_ms}, {"fuse", r.fuse_ms}};
  json traces = json::array();
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    const auto& t = r.traces[i];
    traces.push_back({{"label", r.labels[i]},
                      {"iterations", t.iterations},
                      {"best_iteration", t.best_iteration},
                      {"final_rel_change", t.final_rel_change},
                      {"objective", t.objective}});
  }
  j["traces"] = traces;
  return j;
}

}  // namespace kdac::cli
