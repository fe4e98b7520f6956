#include "metaradar/evaluation.hpp"

#include "metaradar/train.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metaradar {

namespace {

std::size_t count_above(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  return s;
}

std::size_t allowed_exceedances(std::size_t n, double target_pfa, double min_exceedances) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) {
    throw std::invalid_argument("threshold_for_pfa: target pfa must lie in (0, 1)");
  }
  const double expected = target_pfa * static_cast<double>(n);
  if (expected + 1e-9 < min_exceedances) {
    const auto need = static_cast<std::size_t>(std::ceil(min_exceedances / target_pfa - 1e-9));
    throw std::invalid_argument("threshold_for_pfa: need at least " + std::to_string(need) +
                                " H0 scores for pfa " + std::to_string(target_pfa) + ", got " + std::to_string(n));
  }
  return static_cast<std::size_t>(std::floor(expected + 1e-9));
}

}  // namespace

double normal_quantile_two_sided(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + confidence / 2.0);
}

Proportion binomial_ci(double p, std::size_t trials, double confidence) {
  if (trials == 0) throw std::invalid_argument("binomial_ci: need at least one trial");
  const double half = normal_quantile_two_sided(confidence) * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return {p, std::max(0.0, p - half), std::min(1.0, p + half)};
}

Proportion binomial_ci(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0) throw std::invalid_argument("binomial_ci: need at least one trial");
  return binomial_ci(static_cast<double>(successes) / static_cast<double>(trials), trials, confidence);
}

ROCCurve estimate_roc(std::span<const double> h0_scores, std::span<const double> h1_scores,
                      std::span<const double> thresholds) {
  if (h0_scores.empty() || h1_scores.empty()) throw std::invalid_argument("estimate_roc: empty score set");
  if (thresholds.empty()) throw std::invalid_argument("estimate_roc: no thresholds");
  const auto h0 = sorted_copy(h0_scores);
  const auto h1 = sorted_copy(h1_scores);
  const auto ts = sorted_copy(thresholds);

  ROCCurve roc;
  roc.n_h0 = h0.size();
  roc.n_h1 = h1.size();
  roc.points.reserve(ts.size());
  for (double t : ts) {
    roc.points.push_back({t, static_cast<double>(count_above(h0, t)) / static_cast<double>(h0.size()),
                          static_cast<double>(count_above(h1, t)) / static_cast<double>(h1.size())});
  }
  return roc;
}

double threshold_for_pfa(std::span<const double> h0_scores, double target_pfa, double min_exceedances) {
  const std::size_t n = h0_scores.size();
  if (n == 0) throw std::invalid_argument("threshold_for_pfa: empty H0 scores");
  const std::size_t k = allowed_exceedances(n, target_pfa, min_exceedances);
  std::vector<double> s(h0_scores.begin(), h0_scores.end());
  const auto pos = static_cast<std::ptrdiff_t>(n - k - 1);
  std::nth_element(s.begin(), s.begin() + pos, s.end());
  return s[static_cast<std::size_t>(pos)];
}

std::vector<double> roc_thresholds(std::span<const double> h0_scores, int points) {
  if (h0_scores.empty()) throw std::invalid_argument("roc_thresholds: empty H0 scores");
  if (points < 2) throw std::invalid_argument("roc_thresholds: need at least two points");
  const auto s = sorted_copy(h0_scores);
  const double n = static_cast<double>(s.size());
  const double lo = std::log10(std::min(1.0, kMinExceedances / n));
  std::vector<double> out;
  for (int i = 0; i < points; ++i) {
    const double pfa = std::pow(10.0, lo + (0.0 - lo) * i / (points - 1));
    const auto k = static_cast<std::size_t>(std::floor(pfa * n + 1e-9));
    const std::size_t idx = k >= s.size() ? 0 : s.size() - k - 1;
    out.push_back(k >= s.size() ? std::nextafter(s.front(), -INFINITY) : s[idx]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PdReadout pd_at_pfa(std::span<const double> h0_scores, std::span<const double> h1_scores, double target_pfa,
                    double confidence) {
  if (h1_scores.empty()) throw std::invalid_argument("pd_at_pfa: empty H1 scores");
  PdReadout r;
  r.target_pfa = target_pfa;
  r.threshold = threshold_for_pfa(h0_scores, target_pfa);
  r.n_h0 = h0_scores.size();
  r.n_h1 = h1_scores.size();
  const auto above = [&](std::span<const double> v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double s) { return s > r.threshold; }));
  };
  r.pfa = binomial_ci(above(h0_scores), r.n_h0, confidence);
  r.pd = binomial_ci(above(h1_scores), r.n_h1, confidence);
  return r;
}

std::vector<double> network_scores(const MLPParams& params, const Eigen::MatrixXd& inputs) {
  const Eigen::VectorXd s = logits(params, inputs);
  return {s.data(), s.data() + s.size()};
}

AdaptationCurve adaptation_curve(const MLPParams& init, const Dataset& adaptation_set,
                                 const Eigen::MatrixXd& test_h0, const Eigen::MatrixXd& test_h1, double lr,
                                 int m_max, double pfa, std::string method) {
  AdaptationCurve curve;
  curve.method = std::move(method);
  curve.pfa = pfa;
  adapt(init, adaptation_set, lr, m_max, [&](int m, const MLPParams& p) {
    const auto h0 = network_scores(p, test_h0);
    const auto h1 = network_scores(p, test_h1);
    curve.points.push_back({m, pd_at_pfa(h0, h1, pfa).pd});
  });
  return curve;
}

}  // namespace metaradar
