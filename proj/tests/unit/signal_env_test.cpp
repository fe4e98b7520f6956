#include "metaradar/clutter.hpp"
#include "metaradar/dataset.hpp"
#include "metaradar/environment.hpp"
#include "metaradar/error.hpp"
#include "metaradar/waveform.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>

using namespace metaradar;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel_frobenius(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

// Independent evaluation of the interference correlation entry.
cdouble omega_entry(double fl, double fu, int d) {
  if (d == 0) return {fu - fl, 0.0};
  const double two_pi_d = 2.0 * std::numbers::pi * d;
  const cdouble num = std::polar(1.0, two_pi_d * fu) - std::polar(1.0, two_pi_d * fl);
  return num / cdouble(0.0, two_pi_d);
}

EnvironmentSpec quiet_env() {
  EnvironmentSpec e;
  e.median = 0.0;
  e.snr_db = kInf;
  e.sir_db = kInf;
  return e;
}

}  // namespace

TEST(Waveform, LfmFirstChipAndNorm) {
  const Waveform y = lfm_waveform(16, 2.5e9, 2e5);
  EXPECT_NEAR(y[0].real(), 0.25, 1e-15);
  EXPECT_NEAR(y[0].imag(), 0.0, 1e-15);
  EXPECT_NEAR(y.chips().norm(), 1.0, 1e-14);
  const cdouble c1 = std::polar(0.25, 0.0625 * std::numbers::pi);
  EXPECT_NEAR(std::abs(y[1] - c1), 0.0, 1e-14);
}

TEST(Waveform, MatchesClosedFormEverywhere) {
  const WaveformParams p;
  const Waveform y = lfm_waveform(p);
  for (int k = 0; k < p.chips; ++k) {
    const double t = k / p.sample_rate;
    const cdouble want = std::polar(1.0 / 4.0, std::numbers::pi * p.chirp_rate * t * t);
    EXPECT_LT(std::abs(y[k] - want), 1e-13) << k;
  }
}

TEST(Waveform, RejectsBadArguments) {
  EXPECT_THROW(lfm_waveform(0, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(lfm_waveform(4, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(Waveform(CVector::Zero(3)), std::invalid_argument);
}

TEST(Waveform, ShiftMovesChipsDown) {
  CVector c(2);
  c << 1.0, 0.0;
  const Waveform y(c);
  const CVector s = shifted(y, 1);
  EXPECT_EQ(s(0), cdouble(0.0));
  EXPECT_EQ(s(1), cdouble(1.0));
  EXPECT_EQ(shifted(y, 2).norm(), 0.0);
  EXPECT_EQ(shifted(y, -1)(0), cdouble(0.0));
}

TEST(InterferenceCov, SpecExamples) {
  const HermitianMatrix adapt = interference_cov(0.4, 0.6, 16);
  EXPECT_NEAR(adapt(3, 3).real(), 0.2, 1e-15);
  EXPECT_NEAR(adapt(1, 0).real(), -std::sin(0.2 * std::numbers::pi) / std::numbers::pi, 1e-15);
  EXPECT_NEAR(adapt(1, 0).real(), -0.1871, 1e-4);
  EXPECT_NEAR(adapt(1, 0).imag(), 0.0, 1e-15);
  EXPECT_NEAR(interference_cov(0.05, 0.15, 16)(0, 0).real(), 0.1, 1e-15);
  EXPECT_THROW(interference_cov(0.5, 0.5, 4), std::invalid_argument);
  EXPECT_THROW(interference_cov(0.6, 0.4, 4), std::invalid_argument);
}

TEST(InterferenceCov, HermitianPsdOverRandomBands) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    double a = u(rng), b = u(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const HermitianMatrix m = interference_cov(a, b, 16);
    EXPECT_LT((m.matrix() - m.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(m.is_psd()) << a << " " << b;
    for (int v = 0; v < 16; ++v) {
      for (int h = 0; h < 16; ++h) EXPECT_LT(std::abs(m(v, h) - omega_entry(a, b, v - h)), 1e-13);
    }
  }
}

TEST(Clutter, WeibullScale) {
  EXPECT_NEAR(weibull_scale_from_median(2.0, 4e-4), 4e-4 / std::sqrt(std::log(2.0)), 1e-18);
  EXPECT_NEAR(weibull_scale_from_median(2.0, 4e-4), 4.8045e-4, 1e-8);
  EXPECT_DOUBLE_EQ(weibull_scale_from_median(1.0, std::log(2.0)), 1.0);
  EXPECT_NEAR(weibull_scale_from_median(0.25, 4e-4), 4e-4 / std::pow(std::log(2.0), 4.0), 1e-18);
  EXPECT_NEAR(weibull_scale_from_median(0.25, 4e-4), 1.7328e-3, 1e-7);
  EXPECT_THROW(weibull_scale_from_median(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(weibull_scale_from_median(-1.0, 1.0), std::invalid_argument);
}

TEST(Clutter, ZeroMedianIsDegenerate) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_clutter_coeff(2.0, 0.0, rng), cdouble(0.0));
  const Waveform y = lfm_waveform(WaveformParams{});
  EXPECT_EQ(generate_clutter(y, 0.5, 0.0, rng).norm(), 0.0);
  EXPECT_EQ(clutter_cov(y, 0.5, 0.0).matrix().norm(), 0.0);
}

TEST(Clutter, CoefficientMedianAndPower) {
  Rng rng(2024);
  const int n = 1'000'000;
  std::vector<double> amp(n);
  double power = 0.0;
  cdouble mean = 0.0;
  for (auto& a : amp) {
    const cdouble g = sample_clutter_coeff(2.0, 4e-4, rng);
    a = std::abs(g);
    power += std::norm(g);
    mean += g;
  }
  std::nth_element(amp.begin(), amp.begin() + n / 2, amp.end());
  EXPECT_NEAR(amp[n / 2] / 4e-4, 1.0, 0.01);
  EXPECT_NEAR(power / n / 2.308e-7, 1.0, 0.02);
  EXPECT_NEAR(clutter_coeff_power(2.0, 4e-4), 16e-8 / std::log(2.0), 1e-20);
  // Uniform phase makes the coefficient zero-mean.
  EXPECT_LT(std::abs(mean / double(n)), 3.0 * std::sqrt(power / n / n) * 2.0);
}

TEST(Clutter, MedianHoldsForHeavyTails) {
  // The sample median is noisier at small shape: relative sd ~ 1/(shape ln2 sqrt(n)).
  Rng rng(5);
  const int n = 4'000'000;
  std::vector<double> amp(n);
  for (auto& a : amp) a = std::abs(sample_clutter_coeff(0.25, 4e-4, rng));
  std::nth_element(amp.begin(), amp.begin() + n / 2, amp.end());
  EXPECT_NEAR(amp[n / 2] / 4e-4, 1.0, 0.01);
}

TEST(Clutter, SingleChipCovariance) {
  CVector one(1);
  one << 1.0;
  const Waveform y(one);
  const HermitianMatrix c = clutter_cov(y, 2.0, 4e-4);
  ASSERT_EQ(c.dim(), 1);
  EXPECT_NEAR(c(0, 0).real(), 16e-8 / std::log(2.0), 1e-20);
}

TEST(Clutter, CovarianceTrace) {
  const Waveform y = lfm_waveform(WaveformParams{});
  const double pw = clutter_coeff_power(0.25, 4e-4);
  double norms = 0.0;
  for (int g = -15; g <= 15; ++g) norms += shifted(y, g).squaredNorm();
  EXPECT_NEAR(clutter_cov(y, 0.25, 4e-4).trace() / (pw * norms), 1.0, 1e-12);
}

TEST(Clutter, HeavyTailLowOrderMoment) {
  // E|gamma|^{1/2} = b^{1/2} Gamma(1 + 1/(2 shape)); at shape 0.25 this is
  // 2 sqrt(b) and, unlike the second moment, has a light-tailed estimator.
  Rng rng(6);
  const int n = 1'000'000;
  double m = 0.0;
  for (int i = 0; i < n; ++i) m += std::sqrt(std::abs(sample_clutter_coeff(0.25, 4e-4, rng)));
  EXPECT_NEAR(m / n / (2.0 * std::sqrt(weibull_scale_from_median(0.25, 4e-4))), 1.0, 0.01);
}

TEST(Clutter, HeavyTailPhaseIsCircular) {
  // At shape 0.25 the second-moment estimator has kurtosis ~1.3e4, so the
  // analytic covariance is checked at milder shapes below. Its structure only
  // needs zero-mean circular coefficients, which holds for any shape.
  Rng rng(78);
  const int n = 1'000'000;
  cdouble m1{}, m2{};
  for (int i = 0; i < n; ++i) {
    const cdouble u = sample_clutter_coeff(0.25, 4e-4, rng);
    const cdouble p = u / std::abs(u);
    m1 += p;
    m2 += p * p;
  }
  EXPECT_LT(std::abs(m1) / n, 5.0 / std::sqrt(n));
  EXPECT_LT(std::abs(m2) / n, 5.0 / std::sqrt(n));
}

class ClutterMonteCarlo : public ::testing::TestWithParam<double> {};

TEST_P(ClutterMonteCarlo, EmpiricalCovarianceMatchesAnalytic) {
  const double shape = GetParam();
  const Waveform y = lfm_waveform(WaveformParams{});
  const int n = 100'000;
  Rng rng(77);
  CMatrix acc = CMatrix::Zero(16, 16);
  for (int i = 0; i < n; ++i) {
    const CVector c = generate_clutter(y, shape, 4e-4, rng);
    acc.noalias() += c * c.adjoint();
  }
  acc /= double(n);
  EXPECT_LT(rel_frobenius(acc, clutter_cov(y, shape, 4e-4).matrix()), 0.05);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ClutterMonteCarlo, ::testing::Values(0.5, 1.0, 2.0));

TEST(Environment, NoiseCovExamples) {
  EXPECT_EQ(noise_cov(quiet_env(), 4).matrix().norm(), 0.0);
  EnvironmentSpec unit = quiet_env();
  unit.snr_db = 0.0;
  EXPECT_LT((noise_cov(unit, 4).matrix() - CMatrix::Identity(4, 4)).norm(), 1e-15);
  EnvironmentSpec a;
  a.snr_db = 20;
  a.sir_db = 16;
  a.f_lower = 0.4;
  a.f_upper = 0.6;
  EXPECT_NEAR(noise_cov(a, 16)(5, 5).real(), 0.01 + std::pow(10.0, -1.6) * 0.2, 1e-15);
  EXPECT_NEAR(noise_cov(a, 16)(5, 5).real(), 0.015024, 1e-6);
}

TEST(Environment, ValidationAndJson) {
  EnvironmentSpec bad;
  bad.shape = 3.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.f_lower = 0.7;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EnvironmentSpec e = quiet_env();
  e.label = "x";
  const nlohmann::json j = e;
  EXPECT_TRUE(j.at("snr_db").is_null());
  EXPECT_EQ(j.get<EnvironmentSpec>(), e);
}

TEST(Environment, TrainingGrid) {
  const auto grid = training_environment_grid();
  ASSERT_EQ(grid.size(), 40u);
  std::set<double> lowers, shapes, sirs;
  std::set<std::string> labels;
  for (const auto& e : grid) {
    EXPECT_EQ(e.snr_db, 24.0);
    EXPECT_EQ(e.median, 4e-4);
    EXPECT_NEAR(e.f_upper - e.f_lower, 0.1, 1e-12);
    lowers.insert(std::round(e.f_lower * 100) / 100);
    shapes.insert(e.shape);
    sirs.insert(e.sir_db);
    labels.insert(e.label);
    e.validate();
  }
  EXPECT_EQ(lowers.size(), 10u);
  EXPECT_DOUBLE_EQ(*lowers.begin(), 0.05);
  EXPECT_DOUBLE_EQ(*lowers.rbegin(), 0.77);
  EXPECT_EQ(shapes, (std::set<double>{0.25, 2.0}));
  EXPECT_EQ(sirs, (std::set<double>{10.0, 17.0}));
  EXPECT_EQ(labels.size(), 40u);
}

TEST(Samples, WhiteNoiseVariance) {
  EnvironmentSpec e = quiet_env();
  e.snr_db = 10.0;
  const Waveform y = lfm_waveform(WaveformParams{});
  const SampleGenerator gen(e, y);
  Rng rng(9);
  const int n = 100'000;
  double re = 0.0, im = 0.0;
  CMatrix cov = CMatrix::Zero(16, 16);
  for (int i = 0; i < n; ++i) {
    const LabeledSample s = gen.draw(0, rng);
    EXPECT_EQ(s.label, 0);
    re += s.z.real().squaredNorm();
    im += s.z.imag().squaredNorm();
    cov.noalias() += s.z * s.z.adjoint();
  }
  // Circular noise: each real component carries half of sigma_w^2.
  EXPECT_NEAR(re / (16.0 * n) / 0.05, 1.0, 0.02);
  EXPECT_NEAR(im / (16.0 * n) / 0.05, 1.0, 0.02);
  EXPECT_LT(rel_frobenius(cov / double(n), noise_cov(e, 16).matrix()), 0.05);
}

TEST(Samples, ColouredNoiseCovariance) {
  EnvironmentSpec e;
  e.median = 0.0;
  e.snr_db = 20;
  e.sir_db = 10;
  const Waveform y = lfm_waveform(WaveformParams{});
  const SampleGenerator gen(e, y);
  Rng rng(10);
  const int n = 100'000;
  CMatrix cov = CMatrix::Zero(16, 16);
  for (int i = 0; i < n; ++i) {
    const CVector z = gen.draw(0, rng).z;
    cov.noalias() += z * z.adjoint();
  }
  EXPECT_LT(rel_frobenius(cov / double(n), noise_cov(e, 16).matrix()), 0.05);
}

TEST(Samples, TargetAddsUnitEnergy) {
  EnvironmentSpec e;
  e.snr_db = 10;
  const Waveform y = lfm_waveform(WaveformParams{});
  const SampleGenerator gen(e, y);
  Rng rng(12);
  const int n = 100'000;
  double e0 = 0.0, e1 = 0.0;
  for (int i = 0; i < n; ++i) {
    e0 += gen.draw(0, rng).z.squaredNorm();
    const LabeledSample s = gen.draw(1, rng);
    EXPECT_EQ(s.label, 1);
    e1 += s.z.squaredNorm();
  }
  EXPECT_NEAR((e1 - e0) / n, 1.0, 0.05);
}

TEST(Samples, InvalidHypothesis) {
  Rng rng(1);
  EXPECT_THROW(generate_sample(EnvironmentSpec{}, lfm_waveform(WaveformParams{}), 2, rng), std::invalid_argument);
}

TEST(Datasets, BalancedShuffledDeterministic) {
  const Waveform y = lfm_waveform(WaveformParams{});
  const EnvironmentSpec e;
  const Dataset d4 = generate_dataset(e, y, 4, 1);
  EXPECT_EQ(d4.size(), 4u);
  EXPECT_EQ(d4.count_label(0), 2u);
  EXPECT_EQ(d4.count_label(1), 2u);
  EXPECT_THROW(generate_dataset(e, y, 5, 1), std::invalid_argument);
  EXPECT_THROW(generate_dataset(e, y, 0, 1), std::invalid_argument);

  const Dataset a = generate_dataset(e, y, 10'000, 42);
  const Dataset b = generate_dataset(e, y, 10'000, 42);
  ASSERT_EQ(a.records().size(), b.records().size());
  EXPECT_TRUE(std::equal(a.records().begin(), a.records().end(), b.records().begin()));
  EXPECT_EQ(a.count_label(1), 5000u);
  // Shuffled: the first half is not a single class.
  std::size_t ones = 0;
  for (std::size_t i = 0; i < 5000; ++i) ones += a.label(i);
  EXPECT_GT(ones, 2300u);
  EXPECT_LT(ones, 2700u);

  const Dataset c = generate_dataset(e, y, 10'000, 43);
  EXPECT_FALSE(std::equal(a.records().begin(), a.records().end(), c.records().begin()));
}

TEST(Datasets, PoolIsSingleClass) {
  const Dataset p = generate_pool(EnvironmentSpec{}, lfm_waveform(WaveformParams{}), 1, 100, 3);
  EXPECT_EQ(p.count_label(1), 100u);
}

TEST(Datasets, FileRoundTripBothModes) {
  const auto dir = std::filesystem::temp_directory_path() / "metaradar_ds_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "d.rmds";
  const EnvironmentSpec e;
  const Dataset d = generate_dataset(e, lfm_waveform(WaveformParams{}), 1000, 8);
  write_dataset_with_manifest(path, d, e, {{"k", 1}});
  EXPECT_TRUE(std::filesystem::exists(manifest_path(path)));
  // header + records
  EXPECT_EQ(std::filesystem::file_size(path), 5 + 4 + 8 + 4 + d.env_label().size() + 8 + 1000 * (32 * 8 + 1));
  for (LoadMode mode : {LoadMode::kInMemory, LoadMode::kMapped}) {
    const Dataset r = read_dataset(path, mode);
    EXPECT_EQ(r.size(), d.size());
    EXPECT_EQ(r.chips(), 16);
    EXPECT_EQ(r.seed(), d.seed());
    EXPECT_EQ(r.env_label(), d.env_label());
    EXPECT_TRUE(std::equal(r.records().begin(), r.records().end(), d.records().begin()));
    EXPECT_EQ(r.sample(17).z, d.sample(17).z);
  }
  EXPECT_THROW(read_dataset(dir / "missing.rmds"), MissingPrerequisite);
  {
    std::ofstream(dir / "bad.rmds") << "NOPE!garbage";
  }
  EXPECT_THROW(read_dataset(dir / "bad.rmds"), FormatError);
  std::filesystem::remove_all(dir);
}
