#pragma once

#include "metaradar/environment.hpp"
#include "metaradar/hermitian.hpp"
#include "metaradar/random.hpp"
#include "metaradar/waveform.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace metaradar {

struct LabeledSample {
  CVector z;
  int label = 0;  // 0: target absent, 1: target present
};

/// Immutable collection of labeled received vectors of one dimension K.
///
/// Samples are kept in the on-disk record layout (2K little-endian doubles,
/// re/im interleaved, then one label byte) either in memory or in a read-only
/// memory mapping of a dataset file. Copies share the underlying storage.
class Dataset {
 public:
  class Storage;

  Dataset() = default;
  Dataset(int chips, std::string env_label, std::uint64_t seed, std::shared_ptr<const Storage> storage);

  /// Builds an in-memory dataset. All samples must have dimension `chips`.
  static Dataset from_samples(int chips, std::string env_label, std::uint64_t seed,
                              std::span<const LabeledSample> samples);

  [[nodiscard]] int chips() const noexcept { return chips_; }
  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] bool empty() const noexcept { return size() == 0; }
  [[nodiscard]] const std::string& env_label() const noexcept { return env_label_; }
  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  [[nodiscard]] int label(std::size_t i) const;
  [[nodiscard]] LabeledSample sample(std::size_t i) const;
  /// Copies sample i as 2K doubles, re/im interleaved.
  void load_interleaved(std::size_t i, std::span<double> out) const;

  [[nodiscard]] std::size_t count_label(int label) const;
  /// Raw record bytes, in file layout.
  [[nodiscard]] std::span<const std::byte> records() const noexcept;

 private:
  int chips_ = 0;
  std::string env_label_;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const Storage> storage_;
};

/// Draws samples for one environment. Precomputes the noise colouring factor.
class SampleGenerator {
 public:
  SampleGenerator(EnvironmentSpec env, Waveform y);

  /// H0: z = c + n.  H1: z = alpha y + c + n, alpha ~ CN(0, 1).
  [[nodiscard]] LabeledSample draw(int hypothesis, Rng& rng) const;

  [[nodiscard]] const EnvironmentSpec& env() const noexcept { return env_; }
  [[nodiscard]] const Waveform& waveform() const noexcept { return y_; }

 private:
  EnvironmentSpec env_;
  Waveform y_;
  CMatrix noise_factor_;  // F with F F^H = noise covariance
};

LabeledSample generate_sample(const EnvironmentSpec& env, const Waveform& y, int hypothesis, Rng& rng);

/// Exactly count/2 samples per hypothesis in shuffled order. `count` must be
/// even and >= 2. A pure function of (env, y, count, seed).
Dataset generate_dataset(const EnvironmentSpec& env, const Waveform& y, std::size_t count, std::uint64_t seed);

/// `count` samples all drawn under `hypothesis` (test pools).
Dataset generate_pool(const EnvironmentSpec& env, const Waveform& y, int hypothesis, std::size_t count,
                      std::uint64_t seed);

enum class LoadMode { kInMemory, kMapped };

/// Binary dataset file: magic "RMDS1", u32 K, u64 Q, u32 label length,
/// label bytes, u64 seed, then Q records. All integers little-endian.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path, LoadMode mode = LoadMode::kInMemory);

/// Path of the JSON manifest that accompanies a dataset file.
std::filesystem::path manifest_path(const std::filesystem::path& dataset_path);

/// Writes the dataset and a manifest holding the environment plus `extra`.
void write_dataset_with_manifest(const std::filesystem::path& path, const Dataset& data,
                                 const EnvironmentSpec& env, const nlohmann::json& extra = {});

}  // namespace metaradar
