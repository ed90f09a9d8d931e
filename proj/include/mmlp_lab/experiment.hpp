#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmlp_lab/config.hpp"
#include "mmlp_lab/metrics.hpp"
#include "mmlp_lab/training.hpp"

namespace mmlp_lab {

inline constexpr const char* kCheckpointFormat = "mmlp-lab-checkpoint/1";
inline constexpr const char* kOutputRootEnv = "MMLP_LAB_OUTPUT_ROOT";

/// Trained parameters plus the configuration that produced them.
struct Checkpoint {
  ExperimentConfig config;
  Architecture arch;
  Network net;
  std::uint64_t seed = 0;
  int iteration = 0;
  std::string digest;
};

inline json checkpoint_to_json(const Checkpoint& c) {
  return json{{"format", kCheckpointFormat},
              {"config", config_to_json(c.config)},
              {"config_digest", c.digest},
              {"arch", {{"kind", to_string(c.arch.kind)}, {"m", c.arch.m}, {"units", c.arch.units}}},
              {"activation", to_string(c.config.activation.kind)},
              {"seed", c.seed},
              {"iteration", c.iteration},
              {"param_layout",
               c.arch.kind == ArchKind::Mlp
                   ? "per neuron j: w_j[0..m-1], b_j, alpha_j; then c"
                   : "per block j: (w_j0, b_j0), ..., (w_j(m-1), b_j(m-1)), alpha_j; then c"},
              {"params", c.net.params}};
}

inline Checkpoint checkpoint_from_json(const json& j) {
  const auto fail = [](const std::string& msg) { throw LabError("checkpoint", msg); };
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    fail("unrecognized checkpoint format");
  for (const char* key : {"config", "config_digest", "arch", "seed", "iteration", "params"})
    if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
  Checkpoint c;
  try {
    c.config = config_from_json(j.at("config"));
  } catch (const LabError& e) {
    fail(std::string("embedded config: ") + e.what());
  }
  c.digest = j.at("config_digest").get<std::string>();
  if (c.digest != config_digest(c.config))
    throw LabError("stale_config",
                   "config digest mismatch: checkpoint was written for a different config");
  try {
    const auto& a = j.at("arch");
    const auto kind = a.at("kind").get<std::string>();
    if (kind != "mlp" && kind != "mmlp") fail("arch.kind must be mlp|mmlp");
    c.arch = {kind == "mlp" ? ArchKind::Mlp : ArchKind::Mmlp, a.at("m").get<int>(),
              a.at("units").get<int>()};
    c.arch.validate();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.iteration = j.at("iteration").get<int>();
    auto params = j.at("params").get<std::vector<double>>();
    c.net = Network(c.arch, std::move(params));
  } catch (const LabError&) {
    throw;
  } catch (const std::exception& e) {
    fail(e.what());
  }
  const auto archs = c.config.architectures();
  if (std::find(archs.begin(), archs.end(), c.arch) == archs.end())
    throw LabError("stale_config", "checkpoint architecture is not produced by its config");
  if (std::find(c.config.seeds.begin(), c.config.seeds.end(), c.seed) == c.config.seeds.end())
    throw LabError("stale_config", "checkpoint seed is not listed in its config");
  return c;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json_file(path, "checkpoint"));
}

/// Region where the target's difficulty sits: the annulus |r - r0| < 3 eps for
/// the circle, the disk r < 0.25 around the cone apex.
inline Region singular_region(const TargetFunction& t) {
  return t.kind == TargetKind::MollifiedCircle ? annulus_region(t.r0, 3.0 * t.eps)
                                               : disk_region(0.25);
}

inline std::string singular_region_label(const TargetFunction& t) {
  std::ostringstream os;
  if (t.kind == TargetKind::MollifiedCircle)
    os << "annulus |r-" << detail::format_double(t.r0)
       << "|<" << detail::format_double(3.0 * t.eps);
  else
    os << "disk r<0.25";
  return os.str();
}

/// Final-state metrics of one network; the same function serves train-time
/// summaries and eval_checkpoint.
inline json network_metrics(const Network& net, const Activation& act,
                            const TargetFunction& target, const EvalSpec& eval) {
  const auto m = evaluate_network(net, act, target, eval);
  const auto field = error_field([&](const Point2& x) { return forward(net, act, x); },
                                 target, eval.grid);
  const auto ratio = localization_ratio(field, singular_region(target));
  return json{{"grid_h", eval.grid.h()},
              {"l2_error", m.l2},
              {"h2_error", m.h2},
              {"zygmund_error", m.zygmund},
              {"localization_ratio", ratio ? json(*ratio) : json(nullptr)},
              {"localization_region", singular_region_label(target)},
              {"error_squared_mass", field.squared_mass()}};
}

inline std::string run_name(const Architecture& a, std::uint64_t seed) {
  return to_string(a.kind) + "_n" + std::to_string(a.units) + "_seed" + std::to_string(seed);
}

/// Output directory after applying the MMLP_LAB_OUTPUT_ROOT override.
inline std::filesystem::path output_dir(const ExperimentConfig& cfg) {
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return std::filesystem::path(root) / cfg.name;
  return cfg.output_dir;
}

struct RunArtifacts {
  std::string name;
  Architecture arch;
  std::uint64_t seed = 0;
  bool diverged = false;
  TrainResult result;
  json summary;
  std::filesystem::path trace_csv, checkpoint_json, error_field_csv, summary_json;
};

struct ExperimentResult {
  std::filesystem::path dir;
  std::vector<RunArtifacts> runs;
  json summary;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw LabError("io", "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw LabError("io", "write failed: " + path.string());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Trains every (architecture, seed) pair and writes, per run, a trace CSV, a
/// checkpoint JSON, an error-field CSV and a summary JSON, then an aggregate
/// summary.json with per-seed values and medians. On divergence the partial
/// artifacts are written, flagged, and LabError("diverged") is thrown.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult out;
  out.dir = output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out.dir, ec);
  if (ec) throw LabError("io", "cannot create " + out.dir.string() + ": " + ec.message());
  const std::string digest = config_digest(cfg);

  std::optional<std::string> divergence;
  for (const auto& arch : cfg.architectures()) {
    for (const auto seed : cfg.seeds) {
      if (divergence) break;
      RunArtifacts run;
      run.name = run_name(arch, seed);
      run.arch = arch;
      run.seed = seed;
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      int diverged_at = -1;
      try {
        run.result = train(arch, cfg.activation, cfg.target, cfg.loss, tc, cfg.eval);
      } catch (const TrainingDiverged& e) {
        run.result = e.partial();
        run.diverged = true;
        diverged_at = e.iteration();
        divergence = run.name + ": " + e.what();
      }
      const int last_iter = run.result.trace.records.empty()
                                ? 0
                                : run.result.trace.records.back().iteration;

      run.trace_csv = out.dir / (run.name + ".trace.csv");
      std::ostringstream trace;
      run.result.trace.write_csv(trace, cfg.record_wall_clock);
      detail::write_text(run.trace_csv, trace.str());

      run.checkpoint_json = out.dir / (run.name + ".checkpoint.json");
      const Checkpoint ck{cfg, arch, run.result.net, seed, last_iter, digest};
      detail::write_text(run.checkpoint_json, checkpoint_to_json(ck).dump(1) + "\n");

      run.error_field_csv = out.dir / (run.name + ".error_field.csv");
      const auto& net = run.result.net;
      const auto field = error_field(
          [&](const Point2& x) { return forward(net, cfg.activation, x); }, cfg.target,
          cfg.eval.grid);
      write_field_csv(field.field, run.error_field_csv);

      run.summary = json{{"run", run.name},
                         {"arch", to_string(arch.kind)},
                         {"units", arch.units},
                         {"param_count", param_count(arch)},
                         {"activation", to_string(cfg.activation.kind)},
                         {"target", to_string(cfg.target.kind)},
                         {"loss", to_string(cfg.loss.kind)},
                         {"seed", seed},
                         {"iteration", last_iter},
                         {"config_digest", digest},
                         {"diverged", run.diverged},
                         {"diverged_at", diverged_at >= 0 ? json(diverged_at) : json(nullptr)},
                         {"near_zero_factor_weights", count_near_zero_factor_weights(net)},
                         {"metrics", network_metrics(net, cfg.activation, cfg.target, cfg.eval)}};
      if (!run.result.trace.records.empty()) {
        const auto& r0 = run.result.trace.records.front();
        run.summary["initial"] = {{"l2_error", r0.l2_error},
                                  {"h2_error", r0.h2_error},
                                  {"zygmund_error", r0.zygmund_error}};
      }
      run.summary_json = out.dir / (run.name + ".summary.json");
      detail::write_text(run.summary_json, run.summary.dump(1) + "\n");
      out.runs.push_back(std::move(run));
    }
  }

  json runs = json::array();
  json medians = json::object();
  for (const auto& arch : cfg.architectures()) {
    std::vector<double> l2, h2, zy, loc;
    for (const auto& r : out.runs) {
      if (!(r.arch == arch)) continue;
      const auto& m = r.summary.at("metrics");
      l2.push_back(m.at("l2_error").get<double>());
      h2.push_back(m.at("h2_error").get<double>());
      zy.push_back(m.at("zygmund_error").get<double>());
      if (!m.at("localization_ratio").is_null())
        loc.push_back(m.at("localization_ratio").get<double>());
    }
    if (l2.empty()) continue;
    medians[to_string(arch.kind)] = {
        {"units", arch.units},
        {"l2_error", detail::median(l2)},
        {"h2_error", detail::median(h2)},
        {"zygmund_error", detail::median(zy)},
        {"localization_ratio", loc.empty() ? json(nullptr) : json(detail::median(loc))}};
  }
  for (const auto& r : out.runs) runs.push_back(r.summary);
  out.summary = json{{"name", cfg.name},
                     {"config_digest", digest},
                     {"config", config_to_json(cfg)},
                     {"diverged", divergence.has_value()},
                     {"runs", runs},
                     {"medians", medians}};
  detail::write_text(out.dir / "summary.json", out.summary.dump(1) + "\n");
  if (divergence) throw LabError("diverged", *divergence);
  return out;
}

/// Recomputes the summary metrics of a stored checkpoint, optionally on a
/// different evaluation grid.
inline json eval_checkpoint(const std::filesystem::path& path,
                            std::optional<double> grid_h = std::nullopt) {
  const auto ck = load_checkpoint(path);
  EvalSpec eval = ck.config.eval;
  if (grid_h) {
    if (!Grid2D::is_valid_spacing(*grid_h))
      throw LabError("config", "--grid: spacing must be 2^-k with k >= 0");
    eval.grid = Grid2D(*grid_h);
  }
  return json{{"run", run_name(ck.arch, ck.seed)},
              {"iteration", ck.iteration},
              {"config_digest", ck.digest},
              {"metrics", network_metrics(ck.net, ck.config.activation, ck.config.target, eval)}};
}

/// Writes |F - f| of a checkpoint as an `x,y,value` CSV; returns the field.
inline ErrorField export_field(const std::filesystem::path& checkpoint_path,
                               std::optional<double> grid_h,
                               const std::filesystem::path& out_path) {
  const auto ck = load_checkpoint(checkpoint_path);
  double h = ck.config.eval.grid.h();
  if (grid_h) {
    if (!Grid2D::is_valid_spacing(*grid_h))
      throw LabError("config", "--grid: spacing must be 2^-k with k >= 0");
    h = *grid_h;
  }
  const Grid2D grid(h);
  auto field = error_field(
      [&](const Point2& x) { return forward(ck.net, ck.config.activation, x); },
      ck.config.target, grid);
  try {
    write_field_csv(field.field, out_path);
  } catch (const std::runtime_error& e) {
    throw LabError("io", e.what());
  }
  return field;
}

}  // namespace mmlp_lab
