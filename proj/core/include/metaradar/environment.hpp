#pragma once

#include "metaradar/hermitian.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace metaradar {

/// One radar operating environment: coherent Weibull clutter, thermal noise and
/// band-limited interference. Target power is fixed at 1, so `snr_db` and
/// `sir_db` set the absolute noise and interference powers. An infinite ratio
/// disables the corresponding term.
struct EnvironmentSpec {
  double shape = 2.0;       // Weibull shape, 0.25 <= shape <= 2
  double median = 4e-4;     // clutter amplitude median
  double snr_db = 24.0;
  double sir_db = 17.0;
  double f_lower = 0.4;     // normalized interference band
  double f_upper = 0.5;
  std::string label;

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;

  [[nodiscard]] double noise_power() const;         // sigma_w^2
  [[nodiscard]] double interference_power() const;  // sigma_I^2

  friend bool operator==(const EnvironmentSpec&, const EnvironmentSpec&) = default;
};

inline constexpr double kTargetPower = 1.0;
inline constexpr double kMinShape = 0.25;
inline constexpr double kMaxShape = 2.0;

void to_json(nlohmann::json& j, const EnvironmentSpec& e);
void from_json(const nlohmann::json& j, EnvironmentSpec& e);

/// Interference correlation for the band [f_l, f_u]:
/// f_u - f_l on the diagonal, (e^{j2pi f_u d} - e^{j2pi f_l d}) / (j2pi d) off it,
/// with d = v - h.
HermitianMatrix interference_cov(double f_lower, double f_upper, int chips);

/// sigma_w^2 I + sigma_I^2 Omega_I.
HermitianMatrix noise_cov(const EnvironmentSpec& env, int chips);

/// Layout of the offline environment grid.
struct TrainingGridParams {
  std::vector<double> shapes{0.25, 2.0};
  std::vector<double> sirs_db{10.0, 17.0};
  double snr_db = 24.0;
  double median = 4e-4;
  double band_width = 0.1;
  double first_band_lower = 0.05;
  double band_step = 0.08;
  int band_count = 10;
};

void to_json(nlohmann::json& j, const TrainingGridParams& p);
void from_json(const nlohmann::json& j, TrainingGridParams& p);

/// Cartesian product shapes x SIRs x bands; 40 environments by default.
std::vector<EnvironmentSpec> training_environment_grid(const TrainingGridParams& params = {});

}  // namespace metaradar
