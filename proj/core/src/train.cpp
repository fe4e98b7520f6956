#include "metaradar/train.hpp"

#include "metaradar/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

namespace metaradar {

namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kSplitStream = 2;

class Stopwatch {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int common_chips(std::span<const Dataset> datasets) {
  if (datasets.empty()) throw std::invalid_argument("training: at least one dataset is required");
  const int k = datasets.front().chips();
  for (const auto& d : datasets) {
    if (d.chips() != k) throw std::invalid_argument("training: datasets have different dimensions");
    if (d.empty()) throw std::invalid_argument("training: dataset '" + d.env_label() + "' is empty");
  }
  return k;
}

std::vector<std::size_t> draw_indices(std::span<const std::size_t> pool, int count, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::size_t> out(static_cast<std::size_t>(count));
  for (auto& i : out) i = pool[pick(rng)];
  return out;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(inner_lr > 0.0)) throw std::invalid_argument("TrainConfig: inner_lr must be positive");
  if (!(outer_lr > 0.0)) throw std::invalid_argument("TrainConfig: outer_lr must be positive");
  if (!(adapt_lr > 0.0)) throw std::invalid_argument("TrainConfig: adapt_lr must be positive");
  if (minibatch < 1) throw std::invalid_argument("TrainConfig: minibatch must be >= 1");
  if (meta_batch < 1) throw std::invalid_argument("TrainConfig: meta_batch must be >= 1");
  if (offline_iters < 0) throw std::invalid_argument("TrainConfig: offline_iters must be >= 0");
  if (adapt_steps < 0) throw std::invalid_argument("TrainConfig: adapt_steps must be >= 0");
  if (!(support_fraction > 0.0 && support_fraction < 1.0)) {
    throw std::invalid_argument("TrainConfig: support_fraction must lie in (0, 1)");
  }
  if (!(input_scale > 0.0)) throw std::invalid_argument("TrainConfig: input_scale must be positive");
  if (std::any_of(hidden_layers.begin(), hidden_layers.end(), [](int m) { return m < 1; })) {
    throw std::invalid_argument("TrainConfig: hidden layer sizes must be positive");
  }
}

std::vector<int> TrainConfig::layer_sizes(int chips) const {
  std::vector<int> sizes{2 * chips};
  sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
  sizes.push_back(1);
  return sizes;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"inner_lr", c.inner_lr},       {"outer_lr", c.outer_lr},
                     {"adapt_lr", c.adapt_lr},       {"minibatch", c.minibatch},
                     {"meta_batch", c.meta_batch},   {"offline_iters", c.offline_iters},
                     {"adapt_steps", c.adapt_steps}, {"first_order", c.first_order},
                     {"support_fraction", c.support_fraction}, {"seed", c.seed},
                     {"hidden_layers", c.hidden_layers}, {"input_scale", c.input_scale}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig out;
  out.inner_lr = j.value("inner_lr", out.inner_lr);
  out.outer_lr = j.value("outer_lr", out.outer_lr);
  out.adapt_lr = j.value("adapt_lr", out.adapt_lr);
  out.minibatch = j.value("minibatch", out.minibatch);
  out.meta_batch = j.value("meta_batch", out.meta_batch);
  out.offline_iters = j.value("offline_iters", out.offline_iters);
  out.adapt_steps = j.value("adapt_steps", out.adapt_steps);
  out.first_order = j.value("first_order", out.first_order);
  out.support_fraction = j.value("support_fraction", out.support_fraction);
  out.seed = j.value("seed", out.seed);
  out.hidden_layers = j.value("hidden_layers", out.hidden_layers);
  out.input_scale = j.value("input_scale", out.input_scale);
  c = std::move(out);
}

void TrainTrace::add(int iteration, double loss, std::string_view stage) {
  if (!records.empty() && iteration <= records.back().iteration) {
    throw std::logic_error("TrainTrace: iteration index must increase");
  }
  records.push_back({iteration, loss, std::string(stage)});
}

void to_json(nlohmann::json& j, const TrainTrace& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.records) rows.push_back({r.iteration, r.loss, r.stage});
  j = nlohmann::json{{"columns", {"iteration", "loss", "stage"}}, {"records", rows}, {"wall_seconds", t.wall_seconds}};
}

TrainResult pretrain_transfer(std::span<const Dataset> datasets, const TrainConfig& cfg) {
  cfg.validate();
  const int chips = common_chips(datasets);
  const Stopwatch clock;

  Rng init_rng = make_rng(cfg.seed, kInitStream);
  TrainResult result{init_params(cfg.layer_sizes(chips), init_rng, cfg.input_scale), {}};
  Rng sample_rng = make_rng(cfg.seed, kSampleStream);

  std::vector<std::vector<std::size_t>> pools;
  for (const auto& d : datasets) pools.push_back(iota_indices(d.size()));

  const std::size_t n_env = datasets.size();
  std::vector<std::vector<std::size_t>> picks(n_env);
  std::vector<LossGradient> parts(n_env);
  for (int it = 1; it <= cfg.offline_iters; ++it) {
    for (std::size_t n = 0; n < n_env; ++n) picks[n] = draw_indices(pools[n], cfg.minibatch, sample_rng);
    const MLPParams& psi = result.params;
    parallel_for(n_env, [&](std::size_t n) { parts[n] = loss_grad(psi, make_batch(datasets[n], picks[n])); });

    FlatGradient sum = FlatGradient::Zero(psi.size());
    double loss_sum = 0.0;
    for (const auto& p : parts) {
      sum += p.gradient;
      loss_sum += p.loss;
    }
    result.params = axpy_params(psi, sum, -cfg.outer_lr);
    result.trace.add(it, loss_sum / static_cast<double>(n_env), "transfer");
  }
  result.trace.wall_seconds = clock.seconds();
  return result;
}

MLPParams maml_inner_update(const MLPParams& psi, const Batch& support, double lr) {
  return axpy_params(psi, loss_grad(psi, support).gradient, -lr);
}

MetaGradient maml_meta_gradient(const MLPParams& psi, const MetaTask& task, double inner_lr, bool first_order) {
  if (task.support.size() == 0 || task.query.size() == 0) {
    throw std::invalid_argument("maml: support and query batches must be non-empty");
  }
  const MLPParams theta = maml_inner_update(psi, task.support, inner_lr);
  LossGradient q = loss_grad(theta, task.query);
  MetaGradient out{q.loss, std::move(q.gradient)};
  if (!first_order) {
    out.gradient -= inner_lr * hessian_vector_product(psi, task.support, out.gradient);
  }
  return out;
}

MetaStepResult maml_meta_step(const MLPParams& psi, std::span<const MetaTask> tasks, const TrainConfig& cfg) {
  if (tasks.empty()) throw std::invalid_argument("maml_meta_step: need at least one task");
  std::vector<MetaGradient> parts(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t n) {
    parts[n] = maml_meta_gradient(psi, tasks[n], cfg.inner_lr, cfg.first_order);
  });
  FlatGradient sum = FlatGradient::Zero(psi.size());
  double meta_loss = 0.0;
  for (const auto& p : parts) {
    sum += p.gradient;
    meta_loss += p.query_loss;
  }
  return {axpy_params(psi, sum, -cfg.outer_lr), meta_loss};
}

TrainResult pretrain_maml(std::span<const Dataset> datasets, const TrainConfig& cfg) {
  cfg.validate();
  const int chips = common_chips(datasets);
  if (static_cast<std::size_t>(cfg.meta_batch) > datasets.size()) {
    throw std::invalid_argument("pretrain_maml: meta_batch exceeds the number of environments");
  }
  const Stopwatch clock;

  Rng init_rng = make_rng(cfg.seed, kInitStream);
  TrainResult result{init_params(cfg.layer_sizes(chips), init_rng, cfg.input_scale), {}};

  // One fixed random support/query partition per environment.
  Rng split_rng = make_rng(cfg.seed, kSplitStream);
  std::vector<std::vector<std::size_t>> support(datasets.size()), query(datasets.size());
  for (std::size_t n = 0; n < datasets.size(); ++n) {
    auto perm = iota_indices(datasets[n].size());
    std::shuffle(perm.begin(), perm.end(), split_rng);
    auto cut = static_cast<std::size_t>(cfg.support_fraction * static_cast<double>(perm.size()));
    cut = std::clamp<std::size_t>(cut, 1, perm.size() - 1);
    if (perm.size() < 2) throw std::invalid_argument("pretrain_maml: each dataset needs at least two samples");
    support[n].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
    query[n].assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  }

  Rng sample_rng = make_rng(cfg.seed, kSampleStream);
  auto envs = iota_indices(datasets.size());
  const auto nb = static_cast<std::size_t>(cfg.meta_batch);
  std::vector<MetaTask> tasks(nb);
  for (int it = 1; it <= cfg.offline_iters; ++it) {
    // Partial Fisher-Yates: the first nb entries are a uniform sample without replacement.
    for (std::size_t i = 0; i < nb; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, envs.size() - 1);
      std::swap(envs[i], envs[pick(sample_rng)]);
    }
    for (std::size_t i = 0; i < nb; ++i) {
      const std::size_t n = envs[i];
      const auto s_idx = draw_indices(support[n], cfg.minibatch, sample_rng);
      const auto q_idx = draw_indices(query[n], cfg.minibatch, sample_rng);
      tasks[i] = {make_batch(datasets[n], s_idx), make_batch(datasets[n], q_idx)};
    }
    MetaStepResult step = maml_meta_step(result.params, tasks, cfg);
    result.params = std::move(step.params);
    result.trace.add(it, step.meta_loss, cfg.first_order ? "maml_fo" : "maml_so");
  }
  result.trace.wall_seconds = clock.seconds();
  return result;
}

TrainResult adapt(const MLPParams& init, const Dataset& adaptation_set, double lr, int steps,
                  const AdaptObserver& observer) {
  if (adaptation_set.empty()) throw std::invalid_argument("adapt: adaptation set is empty");
  if (steps < 0) throw std::invalid_argument("adapt: step count must be >= 0");
  const Stopwatch clock;
  const Batch batch = full_batch(adaptation_set);
  TrainResult result{init, {}};
  if (observer) observer(0, result.params);
  for (int m = 1; m <= steps; ++m) {
    const LossGradient g = loss_grad(result.params, batch);
    result.params = axpy_params(result.params, g.gradient, -lr);
    result.trace.add(m, g.loss, "adapt");
    if (observer) observer(m, result.params);
  }
  result.trace.wall_seconds = clock.seconds();
  return result;
}

TrainResult train_scratch(const Dataset& adaptation_set, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (adaptation_set.empty()) throw std::invalid_argument("train_scratch: adaptation set is empty");
  const MLPParams init = init_params(cfg.layer_sizes(adaptation_set.chips()), rng, cfg.input_scale);
  return adapt(init, adaptation_set, cfg.adapt_lr, cfg.adapt_steps);
}

}  // namespace metaradar
