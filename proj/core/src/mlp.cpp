#include "metaradar/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metaradar {

namespace {

using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return a.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

// Pre-activations and activations of every layer; u[0] is the input.
struct Tape {
  std::vector<Eigen::MatrixXd> a;  // a[l], l = 1..L (a[0] unused)
  std::vector<Eigen::MatrixXd> u;
};

Tape run_forward(const MLPParams& p, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != p.input_size()) {
    throw std::invalid_argument("forward: input length does not match the first layer");
  }
  const int layers = p.layer_count();
  Tape t;
  t.a.resize(static_cast<std::size_t>(layers) + 1);
  t.u.resize(static_cast<std::size_t>(layers) + 1);
  t.u[0] = p.input_scale() * inputs;
  for (int l = 1; l <= layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    t.a[li].noalias() = p.weight(l) * t.u[li - 1];
    t.a[li].colwise() += p.bias(l);
    t.u[li] = sigmoid(t.a[li]);
  }
  return t;
}

double cross_entropy(const Eigen::RowVectorXd& prob, const Eigen::VectorXd& labels) {
  double sum = 0.0;
  for (Eigen::Index q = 0; q < prob.size(); ++q) {
    const double p = std::clamp(prob(q), kProbClamp, 1.0 - kProbClamp);
    const double i = labels(q);
    sum += -i * std::log(p) - (1.0 - i) * std::log1p(-p);
  }
  return sum / static_cast<double>(prob.size());
}

void check_batch(const MLPParams& p, const Batch& b) {
  if (b.size() == 0) throw std::invalid_argument("loss: batch is empty");
  if (b.labels.size() != b.size()) throw std::invalid_argument("loss: label count does not match batch");
  if (b.inputs.rows() != p.input_size()) throw std::invalid_argument("loss: input length does not match network");
}

ConstRowMap weight_view(const MLPParams& p, const FlatGradient& v, int l) {
  const auto& s = p.layer_sizes();
  return {v.data() + p.weight_offset(l), s[static_cast<std::size_t>(l)], s[static_cast<std::size_t>(l - 1)]};
}

Eigen::Map<const Eigen::VectorXd> bias_view(const MLPParams& p, const FlatGradient& v, int l) {
  return {v.data() + p.bias_offset(l), p.layer_sizes()[static_cast<std::size_t>(l)]};
}

RowMap weight_slot(const MLPParams& p, FlatGradient& g, int l) {
  const auto& s = p.layer_sizes();
  return {g.data() + p.weight_offset(l), s[static_cast<std::size_t>(l)], s[static_cast<std::size_t>(l - 1)]};
}

Eigen::Map<Eigen::VectorXd> bias_slot(const MLPParams& p, FlatGradient& g, int l) {
  return {g.data() + p.bias_offset(l), p.layer_sizes()[static_cast<std::size_t>(l)]};
}

}  // namespace

MLPParams::MLPParams(std::vector<int> layer_sizes, Eigen::VectorXd flat, double input_scale)
    : sizes_(std::move(layer_sizes)), flat_(std::move(flat)), input_scale_(input_scale) {
  if (!(input_scale_ > 0.0) || !std::isfinite(input_scale_)) {
    throw std::invalid_argument("MLPParams: input scale must be positive and finite");
  }
  if (sizes_.size() < 2) throw std::invalid_argument("MLPParams: need at least an input and an output layer");
  if (std::any_of(sizes_.begin(), sizes_.end(), [](int m) { return m < 1; })) {
    throw std::invalid_argument("MLPParams: layer sizes must be positive");
  }
  if (sizes_.back() != 1) throw std::invalid_argument("MLPParams: output layer must have exactly one neuron");
  if (static_cast<std::size_t>(flat_.size()) != parameter_count(sizes_)) {
    throw std::invalid_argument("MLPParams: flat vector length does not match layer sizes");
  }
  Eigen::Index off = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(sizes_[l]) * (sizes_[l - 1] + 1);
  }
}

MLPParams MLPParams::zeros(std::vector<int> layer_sizes, double input_scale) {
  const auto n = static_cast<Eigen::Index>(parameter_count(layer_sizes));
  return {std::move(layer_sizes), Eigen::VectorXd::Zero(n), input_scale};
}

std::size_t MLPParams::parameter_count(std::span<const int> layer_sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * static_cast<std::size_t>(layer_sizes[l - 1] + 1);
  }
  return n;
}

Eigen::Map<const RowMatrix> MLPParams::weight(int l) const {
  return {flat_.data() + weight_offset(l), sizes_[static_cast<std::size_t>(l)],
          sizes_[static_cast<std::size_t>(l - 1)]};
}

Eigen::Map<const Eigen::VectorXd> MLPParams::bias(int l) const {
  return {flat_.data() + bias_offset(l), sizes_[static_cast<std::size_t>(l)]};
}

Eigen::Index MLPParams::bias_offset(int l) const {
  const auto li = static_cast<std::size_t>(l);
  return weight_offset(l) + static_cast<Eigen::Index>(sizes_[li]) * sizes_[li - 1];
}

MLPParams init_params(std::vector<int> layer_sizes, Rng& rng, double input_scale) {
  MLPParams zero = MLPParams::zeros(std::move(layer_sizes), input_scale);
  Eigen::VectorXd flat = zero.flat();
  const auto& s = zero.layer_sizes();
  for (int l = 1; l <= zero.layer_count(); ++l) {
    const double fan = s[static_cast<std::size_t>(l - 1)] + s[static_cast<std::size_t>(l)];
    const double limit = std::sqrt(6.0 / fan);
    std::uniform_real_distribution<double> dist(-limit, limit);
    const Eigen::Index begin = zero.weight_offset(l);
    const Eigen::Index end = zero.bias_offset(l);
    for (Eigen::Index i = begin; i < end; ++i) flat(i) = dist(rng);
  }
  return {zero.layer_sizes(), std::move(flat), input_scale};
}

Eigen::VectorXd embed_input(const CVector& z) {
  const Eigen::Index k = z.size();
  Eigen::VectorXd u(2 * k);
  u.head(k) = z.real();
  u.tail(k) = z.imag();
  return u;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  const int k = data.chips();
  Batch b;
  b.inputs.resize(2 * k, static_cast<Eigen::Index>(indices.size()));
  b.labels.resize(static_cast<Eigen::Index>(indices.size()));
  std::vector<double> buf(2 * static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    data.load_interleaved(indices[c], buf);
    const auto col = static_cast<Eigen::Index>(c);
    for (int i = 0; i < k; ++i) {
      b.inputs(i, col) = buf[2 * static_cast<std::size_t>(i)];
      b.inputs(k + i, col) = buf[2 * static_cast<std::size_t>(i) + 1];
    }
    b.labels(col) = data.label(indices[c]);
  }
  return b;
}

Batch full_batch(const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(data, all);
}

Eigen::MatrixXd embed_all(const Dataset& data) { return full_batch(data).inputs; }

double forward(const MLPParams& params, const Eigen::VectorXd& input) {
  const Tape t = run_forward(params, input);
  return t.u.back()(0, 0);
}

Eigen::VectorXd logits(const MLPParams& params, const Eigen::MatrixXd& inputs) {
  const Tape t = run_forward(params, inputs);
  return t.a.back().row(0).transpose();
}

double loss(const MLPParams& params, const Batch& batch) {
  check_batch(params, batch);
  const Tape t = run_forward(params, batch.inputs);
  return cross_entropy(t.u.back().row(0), batch.labels);
}

// The output-layer error uses (p - i), the gradient of the unclamped
// cross-entropy; it coincides with the clamped loss wherever the clamp is idle.
LossGradient loss_grad(const MLPParams& params, const Batch& batch) {
  check_batch(params, batch);
  const Tape t = run_forward(params, batch.inputs);
  const int layers = params.layer_count();
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  LossGradient out;
  out.loss = cross_entropy(t.u.back().row(0), batch.labels);
  out.gradient = FlatGradient::Zero(params.size());

  Eigen::MatrixXd delta = (t.u.back().row(0) - batch.labels.transpose()) * inv_b;
  for (int l = layers; l >= 1; --l) {
    const auto li = static_cast<std::size_t>(l);
    weight_slot(params, out.gradient, l).noalias() = delta * t.u[li - 1].transpose();
    bias_slot(params, out.gradient, l) = delta.rowwise().sum();
    if (l > 1) {
      const Eigen::MatrixXd& u = t.u[li - 1];
      Eigen::MatrixXd back = params.weight(l).transpose() * delta;
      delta = back.array() * u.array() * (1.0 - u.array());
    }
  }
  return out;
}

FlatGradient hessian_vector_product(const MLPParams& params, const Batch& batch, const FlatGradient& direction) {
  check_batch(params, batch);
  if (direction.size() != params.size()) {
    throw std::invalid_argument("hessian_vector_product: direction length does not match parameter count");
  }
  const int layers = params.layer_count();
  const auto nl = static_cast<std::size_t>(layers);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const Tape t = run_forward(params, batch.inputs);

  // Forward R-pass: directional derivatives of pre-activations and activations.
  std::vector<Eigen::MatrixXd> r_a(nl + 1), r_u(nl + 1);
  r_u[0] = Eigen::MatrixXd::Zero(batch.inputs.rows(), batch.size());
  for (int l = 1; l <= layers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    r_a[li].noalias() = weight_view(params, direction, l) * t.u[li - 1];
    if (l > 1) r_a[li].noalias() += params.weight(l) * r_u[li - 1];
    r_a[li].colwise() += bias_view(params, direction, l);
    const auto& u = t.u[li].array();
    r_u[li] = (u * (1.0 - u) * r_a[li].array()).matrix();
  }

  FlatGradient hv = FlatGradient::Zero(params.size());
  Eigen::MatrixXd delta = (t.u.back().row(0) - batch.labels.transpose()) * inv_b;
  Eigen::MatrixXd r_delta = r_u.back() * inv_b;
  for (int l = layers; l >= 1; --l) {
    const auto li = static_cast<std::size_t>(l);
    auto hw = weight_slot(params, hv, l);
    hw.noalias() = r_delta * t.u[li - 1].transpose();
    if (l > 1) hw.noalias() += delta * r_u[li - 1].transpose();
    bias_slot(params, hv, l) = r_delta.rowwise().sum();
    if (l > 1) {
      const auto& u = t.u[li - 1].array();
      const Eigen::ArrayXXd s1 = u * (1.0 - u);
      const Eigen::ArrayXXd s2 = s1 * (1.0 - 2.0 * u);
      const Eigen::MatrixXd back = params.weight(l).transpose() * delta;
      Eigen::MatrixXd r_back = weight_view(params, direction, l).transpose() * delta;
      r_back.noalias() += params.weight(l).transpose() * r_delta;
      r_delta = (r_back.array() * s1 + back.array() * s2 * r_a[li - 1].array()).matrix();
      delta = (back.array() * s1).matrix();
    }
  }
  return hv;
}

MLPParams axpy_params(const MLPParams& params, const FlatGradient& direction, double step) {
  if (direction.size() != params.size()) {
    throw std::invalid_argument("axpy_params: direction length does not match parameter count");
  }
  return {params.layer_sizes(), params.flat() + step * direction, params.input_scale()};
}

}  // namespace metaradar
