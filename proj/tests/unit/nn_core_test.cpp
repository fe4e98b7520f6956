#include "metaradar/checkpoint.hpp"
#include "metaradar/dataset.hpp"
#include "metaradar/error.hpp"
#include "metaradar/mlp.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace metaradar;

namespace {

// Reference network written with plain loops over the canonical layout.
double naive_output(const std::vector<int>& sizes, const Eigen::VectorXd& flat, const Eigen::VectorXd& x,
                    double gain = 1.0) {
  std::vector<double> u(x.data(), x.data() + x.size());
  for (double& v : u) v *= gain;
  Eigen::Index off = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    const int rows = sizes[l], cols = sizes[l - 1];
    std::vector<double> next(rows);
    for (int r = 0; r < rows; ++r) {
      double a = flat(off + rows * cols + r);
      for (int c = 0; c < cols; ++c) a += flat(off + r * cols + c) * u[c];
      next[r] = 1.0 / (1.0 + std::exp(-a));
    }
    off += rows * cols + rows;
    u = std::move(next);
  }
  return u[0];
}

double naive_loss(const std::vector<int>& sizes, const Eigen::VectorXd& flat, const Batch& b, double gain = 1.0) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double p = std::clamp(naive_output(sizes, flat, b.inputs.col(i), gain), kProbClamp, 1.0 - kProbClamp);
    s += b.labels(i) > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  return s / static_cast<double>(b.size());
}

Batch random_batch(int inputs, int n, Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  Batch b{Eigen::MatrixXd(inputs, n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < inputs; ++r) b.inputs(r, i) = g(rng);
    b.labels(i) = i % 2;
  }
  return b;
}

MLPParams random_params(const std::vector<int>& sizes, Rng& rng, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  Eigen::VectorXd flat(static_cast<Eigen::Index>(MLPParams::parameter_count(sizes)));
  for (auto& v : flat) v = g(rng);
  return {sizes, flat};
}

std::vector<int> random_sizes(Rng& rng) {
  std::uniform_int_distribution<int> in(1, 8), hid(1, 6), depth(0, 2);
  std::vector<int> s{in(rng)};
  const int d = depth(rng);
  for (int i = 0; i < d; ++i) s.push_back(hid(rng));
  s.push_back(1);
  return s;
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) {
  return (a - ref).lpNorm<Eigen::Infinity>() / std::max(ref.lpNorm<Eigen::Infinity>(), 1e-8);
}

}  // namespace

TEST(Mlp, ParameterCount) {
  const std::vector<int> s{32, 48, 48, 1};
  // 32*48+48 + 48*48+48 + 48+1
  EXPECT_EQ(MLPParams::parameter_count(s), 3985u);
  Rng rng(1);
  EXPECT_EQ(init_params(s, rng).size(), 3985);
}

TEST(Mlp, InitIsGlorotWithZeroBias) {
  Rng a(5), b(5);
  const std::vector<int> s{32, 48, 48, 1};
  const MLPParams p = init_params(s, a);
  EXPECT_EQ(p, init_params(s, b));
  for (int l = 1; l <= p.layer_count(); ++l) {
    EXPECT_EQ(p.bias(l).norm(), 0.0);
    const double lim = std::sqrt(6.0 / (s[l - 1] + s[l]));
    EXPECT_LE(p.weight(l).cwiseAbs().maxCoeff(), lim);
    EXPECT_GT(p.weight(l).cwiseAbs().maxCoeff(), 0.8 * lim);
    EXPECT_EQ(p.weight(l).rows(), s[l]);
    EXPECT_EQ(p.weight(l).cols(), s[l - 1]);
  }
}

TEST(Mlp, ConstructorChecks) {
  EXPECT_THROW(MLPParams({4}, Eigen::VectorXd(0)), std::invalid_argument);
  EXPECT_THROW(MLPParams({4, 2}, Eigen::VectorXd(10)), std::invalid_argument);
  EXPECT_THROW(MLPParams({4, 1}, Eigen::VectorXd(4)), std::invalid_argument);
  EXPECT_THROW(MLPParams({0, 1}, Eigen::VectorXd(1)), std::invalid_argument);
  EXPECT_THROW(MLPParams::zeros({2, 1}, 0.0), std::invalid_argument);
}

TEST(Mlp, CanonicalLayout) {
  Eigen::VectorXd flat = Eigen::VectorXd::LinSpaced(9, 0, 8);
  const MLPParams p({2, 2, 1}, flat);
  // W1 row-major, b1, W2, b2.
  EXPECT_EQ(p.weight(1)(0, 1), 1.0);
  EXPECT_EQ(p.weight(1)(1, 0), 2.0);
  EXPECT_EQ(p.bias(1)(1), 5.0);
  EXPECT_EQ(p.weight(2)(0, 1), 7.0);
  EXPECT_EQ(p.bias(2)(0), 8.0);
  EXPECT_EQ(p.bias_offset(2), 8);
}

TEST(Mlp, EmbedInput) {
  CVector z(1);
  z << cdouble(1, 2);
  EXPECT_EQ(embed_input(z), Eigen::Vector2d(1, 2));
  CVector z3(3);
  z3 << cdouble(1, 4), cdouble(2, 5), cdouble(3, 6);
  Eigen::VectorXd want(6);
  want << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(embed_input(z3), want);
  EXPECT_EQ(embed_input(CVector::Zero(16)), Eigen::VectorXd::Zero(32));
}

TEST(Mlp, ForwardExamples) {
  EXPECT_EQ(forward(MLPParams::zeros({32, 48, 48, 1}), Eigen::VectorXd::Ones(32)), 0.5);
  Eigen::VectorXd flat(2);
  flat << 0.0, std::log(3.0);
  EXPECT_NEAR(forward(MLPParams({1, 1}, flat), Eigen::VectorXd::Ones(1)), 0.75, 1e-15);
  EXPECT_THROW(forward(MLPParams::zeros({3, 1}), Eigen::VectorXd::Ones(2)), std::invalid_argument);
}

TEST(Mlp, ForwardMatchesReferenceAndStaysInRange) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const auto sizes = random_sizes(rng);
    const double gain = t % 2 ? 1.0 : 3.5;
    const MLPParams p0 = random_params(sizes, rng, 3.0);
    const MLPParams p(sizes, p0.flat(), gain);
    const Batch b = random_batch(sizes[0], 5, rng, 4.0);
    const Eigen::VectorXd lg = logits(p, b.inputs);
    for (int i = 0; i < 5; ++i) {
      const double out = forward(p, b.inputs.col(i));
      EXPECT_GE(out, 0.0);
      EXPECT_LE(out, 1.0);
      EXPECT_NEAR(out, naive_output(sizes, p.flat(), b.inputs.col(i), gain), 1e-14);
      EXPECT_NEAR(1.0 / (1.0 + std::exp(-lg(i))), out, 1e-14);
    }
  }
}

TEST(Mlp, LossExamples) {
  const MLPParams zero = MLPParams::zeros({2, 1});
  Batch one{Eigen::MatrixXd::Ones(2, 1), Eigen::VectorXd::Ones(1)};
  EXPECT_NEAR(loss(zero, one), std::log(2.0), 1e-15);
  one.labels(0) = 0;
  EXPECT_NEAR(loss(zero, one), std::log(2.0), 1e-15);

  Rng rng(4);
  const MLPParams p = random_params({2, 3, 1}, rng);
  const Batch b = random_batch(2, 2, rng);
  Batch a0{b.inputs.col(0), b.labels.segment(0, 1)};
  Batch a1{b.inputs.col(1), b.labels.segment(1, 1)};
  EXPECT_NEAR(loss(p, b), 0.5 * (loss(p, a0) + loss(p, a1)), 1e-15);
  EXPECT_THROW(loss(p, Batch{Eigen::MatrixXd(2, 0), Eigen::VectorXd(0)}), std::invalid_argument);
}

TEST(Mlp, LossIsOrderInvariantAndFiniteWhenSaturated) {
  Rng rng(6);
  const MLPParams p = random_params({3, 4, 1}, rng, 50.0);
  Batch b = random_batch(3, 16, rng, 50.0);
  const double l = loss(p, b);
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_LE(l, -std::log(kProbClamp) + 1e-9);
  // Reversing each row of the input matrix reverses the sample order.
  const Batch r{b.inputs.rowwise().reverse(), b.labels.reverse()};
  EXPECT_NEAR(loss(p, r), l, 1e-12);
  EXPECT_TRUE(loss_grad(p, b).gradient.allFinite());
}

TEST(Mlp, LossGradMatchesLoss) {
  Rng rng(7);
  const MLPParams p = random_params({4, 3, 1}, rng);
  const Batch b = random_batch(4, 8, rng);
  EXPECT_EQ(loss_grad(p, b).loss, loss(p, b));
}

TEST(Mlp, OutputBiasGradientCancelsOnSymmetricBalancedBatch) {
  const MLPParams zero = MLPParams::zeros({3, 2, 1});
  Batch b{Eigen::MatrixXd(3, 2), Eigen::VectorXd(2)};
  b.inputs.col(0) << 0.3, -1.2, 2.0;
  b.inputs.col(1) = -b.inputs.col(0);
  b.labels << 1, 0;
  const FlatGradient g = loss_grad(zero, b).gradient;
  EXPECT_NEAR(g(zero.bias_offset(2)), 0.0, 1e-15);
}

TEST(Mlp, GradientMatchesFiniteDifferencesOfReference) {
  Rng rng(100);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto sizes = random_sizes(rng);
    const double gain = t % 3 == 0 ? 2.0 : 1.0;
    const MLPParams p(sizes, random_params(sizes, rng).flat(), gain);
    const Batch b = random_batch(sizes[0], 8, rng);
    const FlatGradient g = loss_grad(p, b).gradient;
    Eigen::VectorXd fd(p.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Eigen::VectorXd plus = p.flat(), minus = p.flat();
      plus(i) += h;
      minus(i) -= h;
      fd(i) = (naive_loss(sizes, plus, b, gain) - naive_loss(sizes, minus, b, gain)) / (2 * h);
    }
    worst = std::max(worst, rel_err(g, fd));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Mlp, HvpMatchesGradientDifferences) {
  Rng rng(200);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto sizes = random_sizes(rng);
    const MLPParams p = random_params(sizes, rng);
    const Batch b = random_batch(sizes[0], 8, rng);
    Eigen::VectorXd v(p.size());
    for (auto& x : v) x = n01(rng);
    const FlatGradient hv = hessian_vector_product(p, b, v);
    const double eps = 1e-5;
    const FlatGradient fd = (loss_grad(axpy_params(p, v, eps), b).gradient -
                             loss_grad(axpy_params(p, v, -eps), b).gradient) /
                            (2 * eps);
    worst = std::max(worst, rel_err(hv, fd));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Mlp, HvpLinearAndSymmetric) {
  Rng rng(300);
  std::normal_distribution<double> n01;
  const MLPParams p = random_params({5, 4, 3, 1}, rng);
  const Batch b = random_batch(5, 12, rng);
  EXPECT_EQ(hessian_vector_product(p, b, Eigen::VectorXd::Zero(p.size())).norm(), 0.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd u(p.size()), v(p.size());
    for (auto& x : u) x = n01(rng);
    for (auto& x : v) x = n01(rng);
    EXPECT_NEAR(u.dot(hessian_vector_product(p, b, v)), v.dot(hessian_vector_product(p, b, u)), 1e-10);
  }
  EXPECT_THROW(hessian_vector_product(p, b, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Mlp, Axpy) {
  Rng rng(9);
  const MLPParams p(std::vector<int>{3, 2, 1}, random_params({3, 2, 1}, rng).flat(), 4.0);
  Eigen::VectorXd g = Eigen::VectorXd::Random(p.size());
  EXPECT_EQ(axpy_params(p, g, 0.0), p);
  const MLPParams q = axpy_params(p, g, 0.37);
  EXPECT_EQ(q.flat(), p.flat() + 0.37 * g);
  EXPECT_EQ(q.input_scale(), 4.0);
  EXPECT_LT((axpy_params(q, g, -0.37).flat() - p.flat()).lpNorm<Eigen::Infinity>(), 1e-15);
  EXPECT_THROW(axpy_params(p, Eigen::VectorXd::Zero(2), 1.0), std::invalid_argument);
}

TEST(Mlp, BatchesFromDataset) {
  std::vector<LabeledSample> s(3);
  for (int i = 0; i < 3; ++i) {
    s[i].z = CVector::Constant(2, cdouble(i, -i));
    s[i].label = i % 2;
  }
  const Dataset d = Dataset::from_samples(2, "t", 0, s);
  const std::vector<std::size_t> idx{2, 0};
  const Batch b = make_batch(d, idx);
  EXPECT_EQ(b.size(), 2);
  EXPECT_EQ(b.inputs.col(0), embed_input(s[2].z));
  EXPECT_EQ(b.labels(0), 0.0);
  const Batch all = full_batch(d);
  EXPECT_EQ(all.size(), 3);
  EXPECT_EQ(all.labels(1), 1.0);
  EXPECT_EQ(embed_all(d).col(1), embed_input(s[1].z));
}

TEST(Checkpoint, RoundTripIsExact) {
  Rng rng(10);
  const MLPParams p(std::vector<int>{32, 48, 48, 1}, random_params({32, 48, 48, 1}, rng).flat(), 15.85);
  CheckpointMeta meta{42, "psi_tl", "abcdef0123456789", {{"first_order", true}}};
  const auto path = std::filesystem::temp_directory_path() / "metaradar_ckpt_test.json";
  write_checkpoint(path, p, meta);
  const Checkpoint c = read_checkpoint(path);
  EXPECT_EQ(c.params, p);
  EXPECT_EQ(c.meta.seed, 42u);
  EXPECT_EQ(c.meta.stage, "psi_tl");
  EXPECT_EQ(c.meta.config_hash, meta.config_hash);
  EXPECT_EQ(c.meta.extra, meta.extra);
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint(path), MissingPrerequisite);
  std::ofstream(path) << "{\"layer_sizes\": [2, 1]}";
  EXPECT_THROW(read_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}
