#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmlp_lab/detail/format.hpp"
#include "mmlp_lab/detail/random.hpp"
#include "mmlp_lab/fdgrid.hpp"
#include "mmlp_lab/metrics.hpp"
#include "mmlp_lab/network.hpp"
#include "mmlp_lab/targets.hpp"

namespace mmlp_lab {

enum class LossKind { L2, H2Type };

/// L2: mean squared residual. H2Type: L2 + lambda * mean |Lap_h F - Lap_h f|^2,
/// Lap_h the 5-point stencil with spacing h.
struct LossSpec {
  LossKind kind = LossKind::L2;
  double lambda = 1e-2;
  double h = 1.0 / 128.0;
  /// Spacing of the grid whose nodes serve as Laplacian-term centers during
  /// training; 0 means the stencil spacing h.
  double center_h = 0.0;

  static LossSpec l2() { return {}; }
  static LossSpec h2(double lambda = 1e-2, double h = 1.0 / 128.0) {
    return {LossKind::H2Type, lambda, h, 0.0};
  }

  Grid2D center_grid() const { return Grid2D(center_h > 0.0 ? center_h : h); }

  void validate() const {
    if (kind == LossKind::H2Type && !(lambda > 0.0))
      throw std::invalid_argument("loss.lambda must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("loss.lambda must be >= 0");
    if (!Grid2D::is_valid_spacing(h))
      throw std::invalid_argument("loss.h must be 2^-k with k >= 0");
    if (center_h != 0.0 && !Grid2D::is_valid_spacing(center_h))
      throw std::invalid_argument("loss.center_h must be 2^-k with k >= 0");
  }
};

inline std::string to_string(LossKind k) { return k == LossKind::L2 ? "l2" : "h2"; }

namespace detail {

inline void require_nonempty(std::size_t n) {
  if (n == 0) throw std::invalid_argument("loss batch must be nonempty");
}

/// Loss of an arbitrary model callable. `accumulate(p, scale)` is called with
/// d(loss)/d(model(p)) for every evaluation point that influences the loss, so
/// a network passes its parameter-gradient accumulator and value-only callers
/// pass a no-op. Laplacian-term centers are ignored unless spec.kind is H2Type.
template <typename Model, typename Target, typename Accumulate>
double loss_terms(const Model& model, std::span<const Sample> samples,
                  std::span<const Point2> centers, const Target& target,
                  const LossSpec& spec, const Accumulate& accumulate) {
  require_nonempty(samples.size());
  const double inv_m = 1.0 / static_cast<double>(samples.size());
  double sq = 0.0;
  for (const auto& s : samples) {
    const double r = model(s.x) - s.value;
    sq += r * r;
    accumulate(s.x, 2.0 * r * inv_m);
  }
  const double loss = sq * inv_m;
  if (spec.kind != LossKind::H2Type) return loss;

  require_nonempty(centers.size());
  const double h = spec.h;
  const double inv_h2 = 1.0 / (h * h);
  const double inv_c = 1.0 / static_cast<double>(centers.size());
  double lap_sq = 0.0;
  for (const auto& c : centers) {
    const double r = discrete_laplacian_at(model, c, h) - discrete_laplacian_at(target, c, h);
    lap_sq += r * r;
    const double scale = spec.lambda * 2.0 * r * inv_c * inv_h2;
    for (const auto& tap : kFivePoint)
      accumulate(Point2{c[0] + tap.dx * h, c[1] + tap.dy * h}, scale * tap.weight);
  }
  return loss + spec.lambda * (lap_sq * inv_c);
}

inline constexpr auto kNoGradient = [](const Point2&, double) {};

template <typename Target>
double loss_and_grad_impl(const Network& net, const Activation& act,
                          std::span<const Sample> samples, std::span<const Point2> centers,
                          const Target& target, const LossSpec& spec,
                          std::span<double> grad) {
  const auto model = [&](const Point2& p) { return forward(net, act, p); };
  if (grad.empty()) return loss_terms(model, samples, centers, target, spec, kNoGradient);
  return loss_terms(model, samples, centers, target, spec,
                    [&](const Point2& p, double scale) {
                      accumulate_grad(net, act, p, scale, grad);
                    });
}

inline std::vector<Point2> points_of(std::span<const Sample> samples) {
  std::vector<Point2> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back(s.x);
  return pts;
}

}  // namespace detail

/// (1/M) sum |F(x_i) - f(x_i)|^2.
inline double loss_l2(const Network& net, const Activation& act,
                      std::span<const Sample> batch) {
  return detail::loss_and_grad_impl(net, act, batch, {}, TargetFunction{}, LossSpec::l2(),
                                    {});
}

/// L2 term on `samples` plus lambda times the mean squared Laplacian mismatch
/// at `centers`.
template <typename Target = TargetFunction>
double loss_h2(const Network& net, const Activation& act, std::span<const Sample> samples,
               std::span<const Point2> centers, const Target& target, const LossSpec& spec) {
  if (spec.kind != LossKind::H2Type)
    throw std::invalid_argument("loss_h2 requires an H2Type loss spec");
  return detail::loss_and_grad_impl(net, act, samples, centers, target, spec, {});
}

/// Both terms at the same batch points.
template <typename Target = TargetFunction>
double loss_h2(const Network& net, const Activation& act, std::span<const Sample> batch,
               const Target& target, const LossSpec& spec) {
  const auto pts = detail::points_of(batch);
  return loss_h2(net, act, batch, std::span<const Point2>(pts), target, spec);
}

template <typename Target = TargetFunction>
double loss_value(const Network& net, const Activation& act, std::span<const Sample> samples,
                  std::span<const Point2> centers, const Target& target,
                  const LossSpec& spec) {
  return detail::loss_and_grad_impl(net, act, samples, centers, target, spec, {});
}

/// Analytic gradient of the selected loss.
template <typename Target = TargetFunction>
ParamVector loss_grad(const Network& net, const Activation& act,
                      std::span<const Sample> samples, std::span<const Point2> centers,
                      const Target& target, const LossSpec& spec) {
  ParamVector g(net.params.size(), 0.0);
  detail::loss_and_grad_impl(net, act, samples, centers, target, spec, g);
  return g;
}

template <typename Target = TargetFunction>
ParamVector loss_grad(const Network& net, const Activation& act, std::span<const Sample> batch,
                      const Target& target, const LossSpec& spec) {
  const auto pts = detail::points_of(batch);
  return loss_grad(net, act, batch, std::span<const Point2>(pts), target, spec);
}

/// Bias-corrected Adam.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr, double b1 = 0.9, double b2 = 0.999,
            double eps = 1e-8)
      : m(n, 0.0), v(n, 0.0), learning_rate(lr), beta1(b1), beta2(b2), epsilon(eps) {}
};

/// Advances state and updates params in place.
inline void adam_update(AdamState& state, std::span<double> params,
                        std::span<const double> grad) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam: parameter, gradient and moment lengths differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grad[k];
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    params[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

inline std::pair<AdamState, ParamVector> adam_step(AdamState state, ParamVector params,
                                                   std::span<const double> grad) {
  adam_update(state, params, grad);
  return {std::move(state), std::move(params)};
}

struct TrainConfig {
  int iterations = 10000;
  int batch_size = 2048;
  int samples = 50000;
  int checkpoint_interval = 100;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("train.iterations must be >= 1");
    if (samples < 1) throw std::invalid_argument("train.samples must be >= 1");
    if (batch_size < 1 || batch_size > samples)
      throw std::invalid_argument("train.batch_size must be in [1, samples]");
    if (checkpoint_interval < 1)
      throw std::invalid_argument("train.checkpoint_interval must be >= 1");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("train.learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw std::invalid_argument("train.beta1/beta2 must be in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("train.epsilon must be > 0");
  }
};

/// Where and how checkpoint metrics are measured.
struct EvalSpec {
  Grid2D grid{1.0 / 128.0};
  ZygmundSpec zygmund{};
};

struct TraceRecord {
  int iteration = 0;
  double l2_error = 0.0;
  double h2_error = 0.0;
  double zygmund_error = 0.0;
  double seconds = 0.0;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  /// `iter,l2_error,h2_error,zygmund_error,seconds`. With include_seconds false
  /// the seconds column is written as 0 so replays are byte-identical.
  void write_csv(std::ostream& os, bool include_seconds) const {
    os << "iter,l2_error,h2_error,zygmund_error,seconds\n";
    for (const auto& r : records)
      os << r.iteration << ',' << detail::format_double(r.l2_error) << ','
         << detail::format_double(r.h2_error) << ','
         << detail::format_double(r.zygmund_error) << ','
         << detail::format_double(include_seconds ? r.seconds : 0.0) << '\n';
  }

  static TrainingTrace read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "iter,l2_error,h2_error,zygmund_error,seconds")
      throw std::runtime_error("trace CSV: missing header");
    TrainingTrace t;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::vector<std::string_view> cols;
      std::size_t start = 0;
      for (;;) {
        const auto c = line.find(',', start);
        cols.push_back(std::string_view(line).substr(start, c - start));
        if (c == std::string::npos) break;
        start = c + 1;
      }
      if (cols.size() != 5) throw std::runtime_error("trace CSV: malformed row");
      t.records.push_back({static_cast<int>(detail::parse_double(cols[0])),
                           detail::parse_double(cols[1]), detail::parse_double(cols[2]),
                           detail::parse_double(cols[3]), detail::parse_double(cols[4])});
    }
    return t;
  }
};

struct TrainResult {
  Network net;
  TrainingTrace trace;
  /// Minibatch loss before each update.
  std::vector<double> loss_history;
};

/// Thrown when a minibatch loss is not finite. Carries everything up to the
/// failing iteration.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int iteration, TrainResult partial)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(iteration)),
        iteration_(iteration), partial_(std::move(partial)) {}
  int iteration() const noexcept { return iteration_; }
  const TrainResult& partial() const noexcept { return partial_; }

 private:
  int iteration_;
  TrainResult partial_;
};

/// Minibatch stream shared by every architecture trained with the same seed:
/// the sample pool, the epoch permutations and the Laplacian centers depend
/// only on (seed, TrainConfig, center grid).
class BatchStream {
 public:
  BatchStream(const TargetFunction& target, const TrainConfig& cfg, Grid2D center_grid)
      : cfg_(cfg), pool_(sample_uniform(target, static_cast<std::size_t>(cfg.samples), cfg.seed)),
        center_grid_(center_grid), order_(pool_.size()) {
    reshuffle();
  }

  /// Fills the next minibatch. An epoch ends when fewer than batch_size unseen
  /// samples remain; the remainder is dropped.
  void next(std::vector<Sample>& samples) {
    const auto b = static_cast<std::size_t>(cfg_.batch_size);
    if (cursor_ + b > order_.size()) {
      ++epoch_;
      reshuffle();
    }
    samples.clear();
    for (std::size_t k = 0; k < b; ++k) samples.push_back(pool_[order_[cursor_ + k]]);
    cursor_ += b;
  }

  /// Uniform grid nodes (with replacement) for the Laplacian term of a step.
  void centers(std::uint64_t iteration, std::vector<Point2>& out) const {
    const auto b = static_cast<std::uint64_t>(cfg_.batch_size);
    out.clear();
    for (std::uint64_t k = 0; k < b; ++k)
      out.push_back(center_grid_.node(static_cast<std::size_t>(detail::below(
          center_grid_.size(), cfg_.seed, detail::kStencilCenters, iteration * b + k))));
  }

  const std::vector<Sample>& pool() const noexcept { return pool_; }
  std::uint64_t epoch() const noexcept { return epoch_; }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    const std::uint64_t n = order_.size();
    for (std::uint64_t i = n - 1; i > 0; --i) {
      const auto j = detail::below(i + 1, cfg_.seed, detail::kEpochShuffle, epoch_ * n + i);
      std::swap(order_[i], order_[j]);
    }
    cursor_ = 0;
  }

  TrainConfig cfg_;
  std::vector<Sample> pool_;
  Grid2D center_grid_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
};

/// Metrics of net against target on the evaluation grid.
inline ErrorMetrics evaluate_network(const Network& net, const Activation& act,
                                     const TargetFunction& target, const EvalSpec& eval) {
  return residual_metrics(
      [&](const Point2& x) { return forward(net, act, x) - target(x); }, eval.zygmund,
      eval.grid);
}

/// Runs cfg.iterations Adam steps from init_params(arch, cfg.seed). Checkpoints
/// are recorded before the first step, every checkpoint_interval steps, and
/// after the last step.
inline TrainResult train(const Architecture& arch, const Activation& act,
                         const TargetFunction& target, const LossSpec& spec,
                         const TrainConfig& cfg, const EvalSpec& eval) {
  arch.validate();
  target.validate();
  spec.validate();
  cfg.validate();
  eval.zygmund.validate();

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();

  TrainResult res{init_params(arch, cfg.seed), {}, {}};
  res.loss_history.reserve(static_cast<std::size_t>(cfg.iterations));
  AdamState adam(res.net.params.size(), cfg.learning_rate, cfg.beta1, cfg.beta2,
                 cfg.epsilon);
  BatchStream stream(target, cfg, spec.center_grid());

  const auto checkpoint = [&](int iteration) {
    const auto m = evaluate_network(res.net, act, target, eval);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    res.trace.records.push_back({iteration, m.l2, m.h2, m.zygmund, secs});
    if (!std::isfinite(m.l2) || !std::isfinite(m.h2) || !std::isfinite(m.zygmund))
      throw TrainingDiverged(iteration, res);
  };

  checkpoint(0);
  std::vector<Sample> samples;
  std::vector<Point2> centers;
  ParamVector grad(res.net.params.size());
  for (int it = 1; it <= cfg.iterations; ++it) {
    stream.next(samples);
    if (spec.kind == LossKind::H2Type)
      stream.centers(static_cast<std::uint64_t>(it - 1), centers);
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss =
        detail::loss_and_grad_impl(res.net, act, samples, centers, target, spec, grad);
    if (!std::isfinite(loss)) throw TrainingDiverged(it, res);
    res.loss_history.push_back(loss);
    adam_update(adam, res.net.params, grad);
    if (it % cfg.checkpoint_interval == 0 || it == cfg.iterations) checkpoint(it);
  }
  return res;
}

}  // namespace mmlp_lab
