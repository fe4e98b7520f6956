#pragma once

#include "metaradar/mlp.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace metaradar {

/// Proportion with a normal-approximation binomial confidence interval,
/// clipped to [0, 1].
struct Proportion {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Two-sided standard normal quantile for `confidence` (0.99 -> 2.5758...).
double normal_quantile_two_sided(double confidence);
Proportion binomial_ci(std::size_t successes, std::size_t trials, double confidence = 0.95);
Proportion binomial_ci(double p, std::size_t trials, double confidence = 0.95);

struct RocPoint {
  double threshold = 0.0;
  double pfa = 0.0;
  double pd = 0.0;
};

struct ROCCurve {
  std::vector<RocPoint> points;  // ascending threshold
  std::size_t n_h0 = 0;
  std::size_t n_h1 = 0;
};

/// pfa(t) = fraction of H0 scores > t, pd(t) = fraction of H1 scores > t.
ROCCurve estimate_roc(std::span<const double> h0_scores, std::span<const double> h1_scores,
                      std::span<const double> thresholds);

/// Smallest H0 exceedance count we accept when reading out a Pfa.
inline constexpr double kMinExceedances = 10.0;

/// H0 order statistic that leaves at most floor(target * n) exceedances, so the
/// in-sample false-alarm rate never exceeds the target. Requires
/// target * n >= min_exceedances.
double threshold_for_pfa(std::span<const double> h0_scores, double target_pfa,
                         double min_exceedances = kMinExceedances);

/// Thresholds at H0 order statistics for log-spaced false-alarm rates between
/// 10/n and 1, ascending and de-duplicated.
std::vector<double> roc_thresholds(std::span<const double> h0_scores, int points = 60);

struct PdReadout {
  double threshold = 0.0;
  double target_pfa = 0.0;
  Proportion pfa;  // in-sample false-alarm rate at the threshold
  Proportion pd;
  std::size_t n_h0 = 0;
  std::size_t n_h1 = 0;
};

PdReadout pd_at_pfa(std::span<const double> h0_scores, std::span<const double> h1_scores, double target_pfa,
                    double confidence = 0.95);

/// Network decision statistic: output-layer logit, a strictly increasing
/// function of the network output, so ROC readouts are unchanged but scores
/// near p = 1 stay distinct.
std::vector<double> network_scores(const MLPParams& params, const Eigen::MatrixXd& inputs);

struct AdaptationPoint {
  int updates = 0;
  Proportion pd;
};

struct AdaptationCurve {
  std::string method;
  double pfa = 0.0;
  std::vector<AdaptationPoint> points;  // updates 0..m_max
};

/// Pd at `pfa` on the test pools after each of 0..m_max full-batch adaptation
/// updates starting from `init`.
AdaptationCurve adaptation_curve(const MLPParams& init, const Dataset& adaptation_set,
                                 const Eigen::MatrixXd& test_h0, const Eigen::MatrixXd& test_h1, double lr,
                                 int m_max, double pfa, std::string method);

}  // namespace metaradar
