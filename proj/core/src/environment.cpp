#include "metaradar/environment.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace metaradar {

namespace {

double db_to_power_ratio(double db) {
  // +inf dB means the term is switched off.
  if (std::isinf(db) && db > 0) return 0.0;
  return kTargetPower * std::pow(10.0, -db / 10.0);
}

// JSON has no infinity; a null ratio encodes a disabled term.
nlohmann::json ratio_to_json(double db) {
  if (std::isinf(db)) return nullptr;
  return db;
}

double ratio_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace

void EnvironmentSpec::validate() const {
  if (!(shape >= kMinShape && shape <= kMaxShape)) {
    throw std::invalid_argument("EnvironmentSpec: shape must lie in [0.25, 2]");
  }
  if (!(median >= 0.0) || !std::isfinite(median)) {
    throw std::invalid_argument("EnvironmentSpec: clutter median must be finite and >= 0");
  }
  if (!(f_lower >= 0.0 && f_lower < f_upper && f_upper <= 1.0)) {
    throw std::invalid_argument("EnvironmentSpec: need 0 <= f_lower < f_upper <= 1");
  }
  if (std::isnan(snr_db) || std::isnan(sir_db) || snr_db == -std::numeric_limits<double>::infinity() ||
      sir_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("EnvironmentSpec: SNR/SIR must be numbers or +inf");
  }
}

double EnvironmentSpec::noise_power() const { return db_to_power_ratio(snr_db); }
double EnvironmentSpec::interference_power() const { return db_to_power_ratio(sir_db); }

void to_json(nlohmann::json& j, const EnvironmentSpec& e) {
  j = nlohmann::json{{"label", e.label},
                     {"shape", e.shape},
                     {"median", e.median},
                     {"snr_db", ratio_to_json(e.snr_db)},
                     {"sir_db", ratio_to_json(e.sir_db)},
                     {"f_lower", e.f_lower},
                     {"f_upper", e.f_upper}};
}

void from_json(const nlohmann::json& j, EnvironmentSpec& e) {
  EnvironmentSpec out;
  out.label = j.value("label", std::string{});
  out.shape = j.value("shape", out.shape);
  out.median = j.value("median", out.median);
  if (j.contains("snr_db")) out.snr_db = ratio_from_json(j.at("snr_db"));
  if (j.contains("sir_db")) out.sir_db = ratio_from_json(j.at("sir_db"));
  out.f_lower = j.value("f_lower", out.f_lower);
  out.f_upper = j.value("f_upper", out.f_upper);
  e = std::move(out);
}

HermitianMatrix interference_cov(double f_lower, double f_upper, int chips) {
  if (!(f_lower >= 0.0 && f_lower < f_upper && f_upper <= 1.0)) {
    throw std::invalid_argument("interference_cov: need 0 <= f_lower < f_upper <= 1");
  }
  if (chips < 1) throw std::invalid_argument("interference_cov: chip count must be positive");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  CMatrix m(chips, chips);
  for (int v = 0; v < chips; ++v) {
    for (int h = 0; h < chips; ++h) {
      if (v == h) {
        m(v, h) = f_upper - f_lower;
        continue;
      }
      const double d = v - h;
      const cdouble num = std::polar(1.0, two_pi * f_upper * d) - std::polar(1.0, two_pi * f_lower * d);
      m(v, h) = num / cdouble(0.0, two_pi * d);
    }
  }
  return HermitianMatrix(m);
}

HermitianMatrix noise_cov(const EnvironmentSpec& env, int chips) {
  env.validate();
  const double thermal = env.noise_power();
  const double interference = env.interference_power();
  HermitianMatrix out = thermal * HermitianMatrix::identity(chips);
  if (interference > 0.0) {
    out = out + interference * interference_cov(env.f_lower, env.f_upper, chips);
  }
  return out;
}

void to_json(nlohmann::json& j, const TrainingGridParams& p) {
  j = nlohmann::json{{"shapes", p.shapes},
                     {"sirs_db", p.sirs_db},
                     {"snr_db", p.snr_db},
                     {"median", p.median},
                     {"band_width", p.band_width},
                     {"first_band_lower", p.first_band_lower},
                     {"band_step", p.band_step},
                     {"band_count", p.band_count}};
}

void from_json(const nlohmann::json& j, TrainingGridParams& p) {
  TrainingGridParams out;
  out.shapes = j.value("shapes", out.shapes);
  out.sirs_db = j.value("sirs_db", out.sirs_db);
  out.snr_db = j.value("snr_db", out.snr_db);
  out.median = j.value("median", out.median);
  out.band_width = j.value("band_width", out.band_width);
  out.first_band_lower = j.value("first_band_lower", out.first_band_lower);
  out.band_step = j.value("band_step", out.band_step);
  out.band_count = j.value("band_count", out.band_count);
  p = std::move(out);
}

std::vector<EnvironmentSpec> training_environment_grid(const TrainingGridParams& params) {
  std::vector<EnvironmentSpec> grid;
  grid.reserve(params.shapes.size() * params.sirs_db.size() * static_cast<std::size_t>(params.band_count));
  for (double shape : params.shapes) {
    for (double sir : params.sirs_db) {
      for (int b = 0; b < params.band_count; ++b) {
        EnvironmentSpec e;
        e.shape = shape;
        e.median = params.median;
        e.snr_db = params.snr_db;
        e.sir_db = sir;
        e.f_lower = params.first_band_lower + b * params.band_step;
        e.f_upper = e.f_lower + params.band_width;
        char name[64];
        std::snprintf(name, sizeof name, "train_l%.2f_sir%.0f_b%02d", shape, sir, b);
        e.label = name;
        e.validate();
        grid.push_back(std::move(e));
      }
    }
  }
  return grid;
}

}  // namespace metaradar
