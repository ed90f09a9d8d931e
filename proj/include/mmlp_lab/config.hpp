#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmlp_lab/errors.hpp"
#include "mmlp_lab/training.hpp"

namespace mmlp_lab {

using json = nlohmann::json;

/// Everything that determines an experiment. Missing fields take the defaults
/// of the reference setup: 10000 iterations, batch 2048, 50000 samples,
/// learning rate 1e-3, h = 1/128, lambda = 1e-2.
struct ExperimentConfig {
  std::string name = "experiment";
  TargetFunction target = TargetFunction::cone();
  Architecture arch = Architecture::mmlp(256);
  bool matched_pair = false;
  Activation activation{ActivationKind::GaussianBump};
  LossSpec loss{};
  TrainConfig train{};
  EvalSpec eval{};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string output_dir = "runs";
  bool record_wall_clock = false;

  /// The architectures to train: the configured one, or the parameter-matched
  /// MLP/MMLP pair (MLP first).
  std::vector<Architecture> architectures() const;
  void validate() const;
};

/// MLP width with the same parameter count as an MMLP with n_b blocks, or the
/// reverse; throws when (m+2)n+1 = (2m+1)n_b+1 has no integer solution.
inline Architecture matched_partner(const Architecture& a) {
  a.validate();
  const long long m = a.m;
  const long long count = static_cast<long long>(param_count(a)) - 1;
  const long long stride = a.kind == ArchKind::Mlp ? 2 * m + 1 : m + 2;
  if (count % stride != 0)
    throw LabError("config", "arch: no parameter-matched partner for " + to_string(a.kind) +
                                 " with " + std::to_string(a.units) + " units");
  const int units = static_cast<int>(count / stride);
  return a.kind == ArchKind::Mlp ? Architecture::mmlp(units, a.m)
                                 : Architecture::mlp(units, a.m);
}

inline std::vector<Architecture> ExperimentConfig::architectures() const {
  if (!matched_pair) return {arch};
  const auto other = matched_partner(arch);
  return arch.kind == ArchKind::Mlp ? std::vector{arch, other} : std::vector{other, arch};
}

inline void ExperimentConfig::validate() const {
  const auto wrap = [](auto&& fn) {
    try {
      fn();
    } catch (const LabError&) {
      throw;
    } catch (const std::exception& e) {
      throw LabError("config", e.what());
    }
  };
  wrap([&] { target.validate(); });
  wrap([&] { arch.validate(); });
  wrap([&] { loss.validate(); });
  wrap([&] { train.validate(); });
  wrap([&] { eval.zygmund.validate(); });
  if (seeds.empty()) throw LabError("config", "seeds must be nonempty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw LabError("config", "seeds must be distinct");
  if (output_dir.empty()) throw LabError("config", "output_dir must be nonempty");
  (void)architectures();
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw LabError("config", where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok)
      throw LabError("config", "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  const std::string full = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw std::invalid_argument("expected a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    return v.get<T>();
  } catch (const std::exception& e) {
    throw LabError("config", full + ": " + e.what());
  }
}

inline void expect(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw LabError("config", field + ": " + what);
}

inline double checked_spacing(const json& obj, const char* key, const std::string& path,
                              double fallback) {
  const double h = get_field<double>(obj, key, path, fallback);
  expect(Grid2D::is_valid_spacing(h), path + "." + key,
         "grid spacing must be 2^-k with k >= 0 (2/h integral, nodes exact), got " +
             format_double(h));
  return h;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  reject_unknown_keys(j, "", {"name", "target", "arch", "matched_pair", "activation", "loss",
                              "train", "metrics", "seeds", "output_dir",
                              "record_wall_clock"});
  ExperimentConfig c;
  c.name = get_field<std::string>(j, "name", "", c.name);

  // target
  expect(j.contains("target"), "target", "required");
  {
    const auto& t = j.at("target");
    std::string kind;
    if (t.is_string()) {
      kind = t.get<std::string>();
    } else {
      reject_unknown_keys(t, "target", {"kind", "r0", "eps", "beta"});
      expect(t.contains("kind"), "target.kind", "required");
      kind = get_field<std::string>(t, "kind", "target", "");
    }
    if (kind == "circle") {
      c.target = TargetFunction::circle();
      if (t.is_object()) {
        expect(!t.contains("beta"), "target.beta", "only valid for the cone target");
        c.target.r0 = get_field<double>(t, "r0", "target", c.target.r0);
        c.target.eps = get_field<double>(t, "eps", "target", c.target.eps);
        expect(c.target.eps > 0.0, "target.eps", "must be > 0");
      }
    } else if (kind == "cone") {
      c.target = TargetFunction::cone();
      if (t.is_object()) {
        expect(!t.contains("r0") && !t.contains("eps"), "target",
               "r0/eps only valid for the circle target");
        c.target.beta = get_field<double>(t, "beta", "target", c.target.beta);
        expect(c.target.beta > 1.0, "target.beta", "must be > 1");
      }
    } else {
      throw LabError("config", "target: unknown target '" + kind + "' (circle|cone)");
    }
  }

  // arch
  expect(j.contains("arch"), "arch", "required");
  {
    const auto& a = j.at("arch");
    reject_unknown_keys(a, "arch", {"mlp", "mmlp", "m"});
    const int m = get_field<int>(a, "m", "arch", 2);
    expect(m >= 1 && m <= kMaxInputDim, "arch.m", "must be in [1, 16]");
    expect(a.contains("mlp") != a.contains("mmlp"), "arch", "exactly one of mlp|mmlp required");
    if (a.contains("mlp")) {
      c.arch = Architecture::mlp(get_field<int>(a, "mlp", "arch", 0), m);
      expect(c.arch.units >= 1, "arch.mlp", "must be >= 1");
    } else {
      c.arch = Architecture::mmlp(get_field<int>(a, "mmlp", "arch", 0), m);
      expect(c.arch.units >= 1, "arch.mmlp", "must be >= 1");
    }
    expect(m == 2, "arch.m", "targets are two-dimensional; m must be 2");
  }
  c.matched_pair = get_field<bool>(j, "matched_pair", "", false);

  expect(j.contains("activation"), "activation", "required");
  try {
    c.activation.kind = parse_activation(get_field<std::string>(j, "activation", "", ""));
  } catch (const std::invalid_argument& e) {
    throw LabError("config", std::string("activation: ") + e.what());
  }

  // loss
  expect(j.contains("loss"), "loss", "required");
  {
    const auto& l = j.at("loss");
    std::string kind;
    if (l.is_string()) {
      kind = l.get<std::string>();
    } else {
      reject_unknown_keys(l, "loss", {"kind", "lambda", "h", "center_h"});
      expect(l.contains("kind"), "loss.kind", "required");
      kind = get_field<std::string>(l, "kind", "loss", "");
    }
    if (kind == "l2") c.loss.kind = LossKind::L2;
    else if (kind == "h2") c.loss.kind = LossKind::H2Type;
    else throw LabError("config", "loss: unknown loss '" + kind + "' (l2|h2)");
    if (l.is_object()) {
      c.loss.lambda = get_field<double>(l, "lambda", "loss", c.loss.lambda);
      expect(c.loss.lambda > 0.0, "loss.lambda", "must be > 0");
      c.loss.h = checked_spacing(l, "h", "loss", c.loss.h);
      if (l.contains("center_h")) c.loss.center_h = checked_spacing(l, "center_h", "loss", 0.5);
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown_keys(t, "train", {"iterations", "batch_size", "samples", "learning_rate",
                                     "checkpoint_interval", "beta1", "beta2", "epsilon"});
    auto& tc = c.train;
    tc.iterations = get_field<int>(t, "iterations", "train", tc.iterations);
    tc.batch_size = get_field<int>(t, "batch_size", "train", tc.batch_size);
    tc.samples = get_field<int>(t, "samples", "train", tc.samples);
    tc.learning_rate = get_field<double>(t, "learning_rate", "train", tc.learning_rate);
    tc.checkpoint_interval =
        get_field<int>(t, "checkpoint_interval", "train", tc.checkpoint_interval);
    tc.beta1 = get_field<double>(t, "beta1", "train", tc.beta1);
    tc.beta2 = get_field<double>(t, "beta2", "train", tc.beta2);
    tc.epsilon = get_field<double>(t, "epsilon", "train", tc.epsilon);
  }

  double grid_h = c.loss.h;
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    reject_unknown_keys(m, "metrics", {"grid_h", "zygmund"});
    grid_h = checked_spacing(m, "grid_h", "metrics", grid_h);
    if (m.contains("zygmund")) {
      const auto& z = m.at("zygmund");
      reject_unknown_keys(z, "metrics.zygmund",
                          {"alpha", "increments", "diagonals", "exponent", "boundary"});
      auto& zs = c.eval.zygmund;
      zs.alpha = get_field<double>(z, "alpha", "metrics.zygmund", zs.alpha);
      zs.increments = get_field<int>(z, "increments", "metrics.zygmund", zs.increments);
      zs.diagonals = get_field<bool>(z, "diagonals", "metrics.zygmund", zs.diagonals);
      const auto ex = get_field<std::string>(z, "exponent", "metrics.zygmund", "alpha");
      expect(ex == "alpha" || ex == "one_plus_alpha", "metrics.zygmund.exponent",
             "must be alpha|one_plus_alpha");
      zs.exponent = ex == "alpha" ? ZygmundExponent::Alpha : ZygmundExponent::OnePlusAlpha;
      const auto bd = get_field<std::string>(z, "boundary", "metrics.zygmund", "restrict");
      expect(bd == "restrict" || bd == "extend", "metrics.zygmund.boundary",
             "must be restrict|extend");
      zs.boundary = bd == "restrict" ? ZygmundBoundary::Restrict : ZygmundBoundary::Extend;
    }
  }
  c.eval.grid = Grid2D(grid_h);

  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    expect(s.is_array(), "seeds", "expected an array of nonnegative integers");
    c.seeds.clear();
    for (const auto& v : s) {
      expect(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0),
             "seeds", "expected an array of nonnegative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  c.output_dir = get_field<std::string>(j, "output_dir", "", c.output_dir);
  c.record_wall_clock = get_field<bool>(j, "record_wall_clock", "", c.record_wall_clock);
  c.validate();
  return c;
}

/// Fully explicit form; config_from_json(config_to_json(c)) reproduces c.
inline json config_to_json(const ExperimentConfig& c) {
  json target = {{"kind", to_string(c.target.kind)}};
  if (c.target.kind == TargetKind::MollifiedCircle) {
    target["r0"] = c.target.r0;
    target["eps"] = c.target.eps;
  } else {
    target["beta"] = c.target.beta;
  }
  json loss = {{"kind", to_string(c.loss.kind)}, {"lambda", c.loss.lambda}, {"h", c.loss.h}};
  if (c.loss.center_h > 0.0) loss["center_h"] = c.loss.center_h;
  const auto& z = c.eval.zygmund;
  return json{
      {"name", c.name},
      {"target", target},
      {"arch", {{to_string(c.arch.kind), c.arch.units}, {"m", c.arch.m}}},
      {"matched_pair", c.matched_pair},
      {"activation", to_string(c.activation.kind)},
      {"loss", loss},
      {"train",
       {{"iterations", c.train.iterations},
        {"batch_size", c.train.batch_size},
        {"samples", c.train.samples},
        {"learning_rate", c.train.learning_rate},
        {"checkpoint_interval", c.train.checkpoint_interval},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon}}},
      {"metrics",
       {{"grid_h", c.eval.grid.h()},
        {"zygmund",
         {{"alpha", z.alpha},
          {"increments", z.increments},
          {"diagonals", z.diagonals},
          {"exponent", z.exponent == ZygmundExponent::Alpha ? "alpha" : "one_plus_alpha"},
          {"boundary", z.boundary == ZygmundBoundary::Restrict ? "restrict" : "extend"}}}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"record_wall_clock", c.record_wall_clock}};
}

/// FNV-1a 64 of the canonical (sorted-key) JSON, as 16 hex digits.
inline std::string config_digest(const ExperimentConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json read_json_file(const std::filesystem::path& path, const std::string& code) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LabError("io", "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw LabError(code, path.string() + ": parse error: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path, "config"));
}

}  // namespace mmlp_lab
