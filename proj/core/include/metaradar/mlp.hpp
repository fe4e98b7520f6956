#pragma once

#include "metaradar/dataset.hpp"
#include "metaradar/hermitian.hpp"
#include "metaradar/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace metaradar {

/// Flat parameter-space vector in canonical order: layer by layer, weights
/// (row-major) before biases.
using FlatGradient = Eigen::VectorXd;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Weights and biases of a fully connected sigmoid network with one output.
///
/// `input_scale` is a fixed front-end gain applied to u_0 before the first
/// layer; it is not trainable and not part of the flat vector. Values are
/// immutable; every update returns a new MLPParams.
class MLPParams {
 public:
  MLPParams() = default;
  /// `layer_sizes` = [M_0, ..., M_L] with L >= 1 and M_L == 1. `flat` must
  /// have parameter_count(layer_sizes) entries.
  MLPParams(std::vector<int> layer_sizes, Eigen::VectorXd flat, double input_scale = 1.0);

  static MLPParams zeros(std::vector<int> layer_sizes, double input_scale = 1.0);
  static std::size_t parameter_count(std::span<const int> layer_sizes);

  [[nodiscard]] const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  [[nodiscard]] int layer_count() const noexcept { return static_cast<int>(sizes_.size()) - 1; }
  [[nodiscard]] int input_size() const noexcept { return sizes_.front(); }
  [[nodiscard]] Eigen::Index size() const noexcept { return flat_.size(); }
  [[nodiscard]] const Eigen::VectorXd& flat() const noexcept { return flat_; }
  [[nodiscard]] double input_scale() const noexcept { return input_scale_; }

  /// Layer l in 1..L.
  [[nodiscard]] Eigen::Map<const RowMatrix> weight(int l) const;
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> bias(int l) const;

  /// Offsets of W_l and b_l inside the flat vector.
  [[nodiscard]] Eigen::Index weight_offset(int l) const { return offsets_[static_cast<std::size_t>(l - 1)]; }
  [[nodiscard]] Eigen::Index bias_offset(int l) const;

  friend bool operator==(const MLPParams& a, const MLPParams& b) {
    return a.sizes_ == b.sizes_ && a.input_scale_ == b.input_scale_ && a.flat_ == b.flat_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd flat_;
  double input_scale_ = 1.0;
};

/// Glorot-uniform weights, zero biases.
MLPParams init_params(std::vector<int> layer_sizes, Rng& rng, double input_scale = 1.0);

/// Network inputs for a batch: one column per sample, plus 0/1 labels.
struct Batch {
  Eigen::MatrixXd inputs;  // M_0 x B
  Eigen::VectorXd labels;  // B

  [[nodiscard]] Eigen::Index size() const noexcept { return inputs.cols(); }
};

/// [Re z_1..Re z_K, Im z_1..Im z_K].
Eigen::VectorXd embed_input(const CVector& z);

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);
Batch full_batch(const Dataset& data);
/// Embedded inputs for every sample of `data` (labels ignored).
Eigen::MatrixXd embed_all(const Dataset& data);

/// Network output p in (0,1) for a single input.
double forward(const MLPParams& params, const Eigen::VectorXd& input);
/// Output-layer pre-activations (logits) for every column of `inputs`.
Eigen::VectorXd logits(const MLPParams& params, const Eigen::MatrixXd& inputs);

/// Outputs below this distance from 0 or 1 are clamped inside the loss.
inline constexpr double kProbClamp = 1e-12;

/// Mean cross-entropy over the batch.
double loss(const MLPParams& params, const Batch& batch);

struct LossGradient {
  double loss = 0.0;
  FlatGradient gradient;
};

/// Loss and its gradient by reverse-mode accumulation.
LossGradient loss_grad(const MLPParams& params, const Batch& batch);

/// Exact Hessian-vector product of the batch loss at `params` along `direction`
/// (Pearlmutter's R-operator applied to the backward pass).
FlatGradient hessian_vector_product(const MLPParams& params, const Batch& batch, const FlatGradient& direction);

/// params + step * direction.
MLPParams axpy_params(const MLPParams& params, const FlatGradient& direction, double step);

}  // namespace metaradar
