#pragma once

#include "metaradar/hermitian.hpp"

namespace metaradar {

/// Pulse waveform parameters. Defaults are a 16-chip LFM pulse sweeping
/// 100 kHz in 40 us, sampled at 200 kHz.
struct WaveformParams {
  int chips = 16;
  double chirp_rate = 100e3 / 40e-6;  // Hz/s
  double sample_rate = 200e3;         // Hz
};

/// Unit-norm coded pulse of K complex chips.
class Waveform {
 public:
  /// Normalizes `chips` to unit Euclidean norm. Throws std::invalid_argument on
  /// an empty or all-zero sequence.
  explicit Waveform(CVector chips);

  [[nodiscard]] const CVector& chips() const noexcept { return chips_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(chips_.size()); }
  [[nodiscard]] cdouble operator[](int k) const { return chips_(k); }

 private:
  CVector chips_;
};

/// y(k) = exp(j*pi*R*(k/fs)^2) / sqrt(K), k = 0..K-1.
Waveform lfm_waveform(int chips, double chirp_rate, double sample_rate);
inline Waveform lfm_waveform(const WaveformParams& p) {
  return lfm_waveform(p.chips, p.chirp_rate, p.sample_rate);
}

/// Delays the waveform by `shift` range cells: out[v] = y[v - shift], zero
/// where v - shift falls outside [0, K).
CVector shifted(const Waveform& y, int shift);

}  // namespace metaradar
