#pragma once

#include "metaradar/environment.hpp"
#include "metaradar/evaluation.hpp"
#include "metaradar/train.hpp"
#include "metaradar/waveform.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace metaradar {

/// Environment in which the detector is adapted; also the base of the test
/// environments (which differ only in SNR and clutter shape).
struct AdaptationEnvParams {
  double snr_db = 20.0;
  double sir_db = 16.0;
  double f_lower = 0.4;
  double f_upper = 0.6;
  double median = 4e-4;
  std::size_t samples = 8000;
};

struct TestScenario {
  double shape = 2.0;
  double snr_db = 13.0;
};

struct TestParams {
  TestScenario gaussian{2.0, 13.0};
  TestScenario non_gaussian{0.25, 25.0};
  std::size_t h0_samples = 200000;
  std::size_t h1_samples = 50000;
};

/// Reference network for the non-Gaussian figure: trained from scratch on
/// test-environment data with the offline iteration budget.
struct BenchmarkParams {
  std::size_t samples = 400000;
  double lr = 0.08;
};

struct FigureParams {
  double fig2_pfa = 1e-3;
  double fig3_pfa = 5e-3;
  double fig4_pfa = 1e-2;
  int roc_points = 60;
};

/// Network front-end gain 10^(24/20): scales inputs so that thermal noise at
/// the offline SNR has unit power.
inline constexpr double kDefaultInputScale = 15.848931924611133;

inline TrainConfig default_train() {
  TrainConfig t;
  t.input_scale = kDefaultInputScale;
  return t;
}

struct ExperimentConfig {
  WaveformParams waveform;
  TrainingGridParams grid;
  std::size_t offline_samples = 400000;
  AdaptationEnvParams adaptation;
  TestParams test;
  TrainConfig train = default_train();
  BenchmarkParams benchmark;
  FigureParams figures;
  double scale = 0.1;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "runs/default";

  /// Throws ConfigError.
  void validate() const;

  /// Sample counts and iteration budgets after applying `scale`, floored at
  /// the smallest values the readouts can use.
  struct Effective {
    std::size_t offline_samples;
    std::size_t adaptation_samples;
    std::size_t test_h0;
    std::size_t test_h1;
    std::size_t benchmark_samples;
    int offline_iters;
  };
  [[nodiscard]] Effective effective() const;

  [[nodiscard]] std::vector<EnvironmentSpec> offline_environments() const;
  [[nodiscard]] EnvironmentSpec adaptation_environment(double shape) const;
  [[nodiscard]] EnvironmentSpec test_environment(const TestScenario& s) const;

  /// TrainConfig with the scaled iteration budget and the master seed applied.
  [[nodiscard]] TrainConfig effective_train() const;

  [[nodiscard]] std::string data_hash() const;
  [[nodiscard]] std::string train_hash(const std::string& method) const;
  [[nodiscard]] std::string full_hash() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Reads a JSON config; keys that are absent keep their defaults.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

enum class PretrainMethod { kTransfer, kMaml, kBenchmark };
enum class InitMethod { kTransfer, kMaml, kScratch };
enum class Figure { kFig2, kFig3, kFig4 };

PretrainMethod parse_pretrain_method(std::string_view s);
InitMethod parse_init_method(std::string_view s);
Figure parse_figure(std::string_view s);
std::string to_string(PretrainMethod m);
std::string to_string(InitMethod m);
std::string to_string(Figure f);

using ProgressLog = std::function<void(const std::string&)>;

/// Paths inside the output directory.
struct RunLayout {
  std::filesystem::path root;

  [[nodiscard]] std::filesystem::path data_dir() const { return root / "data"; }
  [[nodiscard]] std::filesystem::path offline(std::size_t n) const;
  [[nodiscard]] std::filesystem::path adaptation(bool gaussian) const;
  [[nodiscard]] std::filesystem::path test_pool(bool gaussian, int hypothesis) const;
  [[nodiscard]] std::filesystem::path benchmark_data() const;
  [[nodiscard]] std::filesystem::path checkpoint(PretrainMethod m) const;
  [[nodiscard]] std::filesystem::path trace(const std::string& name) const;
  [[nodiscard]] std::filesystem::path results_dir() const { return root / "results"; }
};

struct GenDataReport {
  std::size_t written = 0;
  std::size_t skipped = 0;
};

/// Writes offline, adaptation, test and benchmark datasets with manifests.
/// Files whose manifest carries the same config hash are kept; a different
/// hash raises ConfigError.
GenDataReport cmd_gen_data(const ExperimentConfig& cfg, const ProgressLog& log = {});

/// Writes the psi_tl / psi_maml / benchmark checkpoint and its trace.
std::filesystem::path cmd_pretrain(const ExperimentConfig& cfg, PretrainMethod method, const ProgressLog& log = {});

/// Writes <figure>.csv, <figure>.svg and updates results/summary.json. `inits`
/// restricts the neural detectors evaluated (empty = all the figure uses).
std::vector<std::filesystem::path> cmd_adapt_eval(const ExperimentConfig& cfg, Figure figure,
                                                  std::vector<InitMethod> inits = {},
                                                  const ProgressLog& log = {});

/// gen-data, all pretraining stages, then every figure.
void cmd_reproduce_all(const ExperimentConfig& cfg, const ProgressLog& log = {});

/// Prepends "# config_hash=<h> fingerprint=<git blob id of body>" and writes.
void write_fingerprinted(const std::filesystem::path& path, const std::string& body, const std::string& config_hash,
                         const std::string& comment_prefix = "# ");

}  // namespace metaradar
