#pragma once

#include "metaradar/dataset.hpp"
#include "metaradar/mlp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace metaradar {

struct TrainConfig {
  double inner_lr = 0.2;      // MAML local step
  double outer_lr = 0.002;    // offline SGD / meta step
  double adapt_lr = 0.002;    // adaptation-stage step
  int minibatch = 128;
  int meta_batch = 10;
  int offline_iters = 20000;
  int adapt_steps = 40;
  bool first_order = true;
  double support_fraction = 0.5;
  std::uint64_t seed = 1;
  std::vector<int> hidden_layers{48, 48};
  double input_scale = 1.0;  // fixed network front-end gain

  /// Throws std::invalid_argument on violated invariants. N_b <= N is checked
  /// where the environment count is known.
  void validate() const;
  [[nodiscard]] std::vector<int> layer_sizes(int chips) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TraceRecord {
  int iteration = 0;
  double loss = 0.0;
  std::string stage;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  double wall_seconds = 0.0;

  void add(int iteration, double loss, std::string_view stage);
};

void to_json(nlohmann::json& j, const TrainTrace& t);

struct TrainResult {
  MLPParams params;
  TrainTrace trace;
};

/// Offline transfer-learning stage: each iteration draws one minibatch per
/// environment and steps along the summed gradient with rate outer_lr.
TrainResult pretrain_transfer(std::span<const Dataset> datasets, const TrainConfig& cfg);

/// theta = psi - lr * grad L_support(psi).
MLPParams maml_inner_update(const MLPParams& psi, const Batch& support, double lr);

struct MetaTask {
  Batch support;
  Batch query;
};

struct MetaGradient {
  double query_loss = 0.0;  // L_query(theta)
  FlatGradient gradient;
};

/// (I - lr * H_support(psi)) grad L_query(theta); the Hessian term is dropped
/// when `first_order` is set.
MetaGradient maml_meta_gradient(const MLPParams& psi, const MetaTask& task, double inner_lr, bool first_order);

struct MetaStepResult {
  MLPParams params;
  double meta_loss = 0.0;  // sum of query losses
};

/// psi <- psi - outer_lr * sum over tasks of the meta-gradient.
MetaStepResult maml_meta_step(const MLPParams& psi, std::span<const MetaTask> tasks, const TrainConfig& cfg);

/// Offline MAML stage: per iteration, meta_batch environments without
/// replacement, with minibatches from a fixed random support/query split.
TrainResult pretrain_maml(std::span<const Dataset> datasets, const TrainConfig& cfg);

/// Called with (updates so far, current parameters), starting at 0.
using AdaptObserver = std::function<void(int, const MLPParams&)>;

/// `steps` full-batch gradient steps on the whole adaptation set.
TrainResult adapt(const MLPParams& init, const Dataset& adaptation_set, double lr, int steps,
                  const AdaptObserver& observer = {});

/// Random initialization followed by adapt() with cfg.adapt_lr / cfg.adapt_steps.
TrainResult train_scratch(const Dataset& adaptation_set, const TrainConfig& cfg, Rng& rng);

}  // namespace metaradar
