#include "metaradar/experiment.hpp"

#include "metaradar/checkpoint.hpp"
#include "metaradar/dataset.hpp"
#include "metaradar/error.hpp"
#include "metaradar/fingerprint.hpp"
#include "metaradar/ideal_detector.hpp"
#include "metaradar/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace metaradar {

namespace {

// Substream ids for the datasets derived from the master seed.
constexpr std::uint64_t kOfflineStream = 1000;
constexpr std::uint64_t kAdaptStream = 2000;
constexpr std::uint64_t kTestStream = 3000;
constexpr std::uint64_t kBenchmarkStream = 4000;
constexpr std::uint64_t kScratchStream = 5000;

void log_to(const ProgressLog& log, const std::string& msg) {
  if (log) log(msg);
}

std::size_t scaled_even(std::size_t n, double scale, std::size_t floor_value) {
  auto v = static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
  v = std::max(v, floor_value);
  return v + (v % 2);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

// --- config ----------------------------------------------------------------

void to_json(nlohmann::json& j, const AdaptationEnvParams& p) {
  j = {{"snr_db", p.snr_db}, {"sir_db", p.sir_db}, {"f_lower", p.f_lower},
       {"f_upper", p.f_upper}, {"median", p.median}, {"samples", p.samples}};
}

void from_json(const nlohmann::json& j, AdaptationEnvParams& p) {
  AdaptationEnvParams d;
  p.snr_db = get_or(j, "snr_db", d.snr_db);
  p.sir_db = get_or(j, "sir_db", d.sir_db);
  p.f_lower = get_or(j, "f_lower", d.f_lower);
  p.f_upper = get_or(j, "f_upper", d.f_upper);
  p.median = get_or(j, "median", d.median);
  p.samples = get_or(j, "samples", d.samples);
}

void to_json(nlohmann::json& j, const TestScenario& s) { j = {{"shape", s.shape}, {"snr_db", s.snr_db}}; }

void from_json(const nlohmann::json& j, TestScenario& s) {
  s.shape = get_or(j, "shape", s.shape);
  s.snr_db = get_or(j, "snr_db", s.snr_db);
}

void to_json(nlohmann::json& j, const TestParams& p) {
  j = {{"gaussian", p.gaussian}, {"non_gaussian", p.non_gaussian}, {"h0_samples", p.h0_samples},
       {"h1_samples", p.h1_samples}};
}

void from_json(const nlohmann::json& j, TestParams& p) {
  TestParams d;
  if (j.contains("gaussian")) j.at("gaussian").get_to(d.gaussian);
  if (j.contains("non_gaussian")) j.at("non_gaussian").get_to(d.non_gaussian);
  d.h0_samples = get_or(j, "h0_samples", d.h0_samples);
  d.h1_samples = get_or(j, "h1_samples", d.h1_samples);
  p = d;
}

void to_json(nlohmann::json& j, const BenchmarkParams& p) { j = {{"samples", p.samples}, {"lr", p.lr}}; }

void from_json(const nlohmann::json& j, BenchmarkParams& p) {
  BenchmarkParams d;
  p.samples = get_or(j, "samples", d.samples);
  p.lr = get_or(j, "lr", d.lr);
}

void to_json(nlohmann::json& j, const FigureParams& p) {
  j = {{"fig2_pfa", p.fig2_pfa}, {"fig3_pfa", p.fig3_pfa}, {"fig4_pfa", p.fig4_pfa}, {"roc_points", p.roc_points}};
}

void from_json(const nlohmann::json& j, FigureParams& p) {
  FigureParams d;
  p.fig2_pfa = get_or(j, "fig2_pfa", d.fig2_pfa);
  p.fig3_pfa = get_or(j, "fig3_pfa", d.fig3_pfa);
  p.fig4_pfa = get_or(j, "fig4_pfa", d.fig4_pfa);
  p.roc_points = get_or(j, "roc_points", d.roc_points);
}

void to_json(nlohmann::json& j, const WaveformParams& w) {
  j = {{"chips", w.chips}, {"chirp_rate", w.chirp_rate}, {"sample_rate", w.sample_rate}};
}

void from_json(const nlohmann::json& j, WaveformParams& w) {
  WaveformParams d;
  w.chips = get_or(j, "chips", d.chips);
  w.chirp_rate = get_or(j, "chirp_rate", d.chirp_rate);
  w.sample_rate = get_or(j, "sample_rate", d.sample_rate);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"waveform", c.waveform},
       {"grid", c.grid},
       {"offline_samples", c.offline_samples},
       {"adaptation", c.adaptation},
       {"test", c.test},
       {"train", c.train},
       {"benchmark", c.benchmark},
       {"figures", c.figures},
       {"scale", c.scale},
       {"seed", c.seed},
       {"out_dir", c.out_dir.string()}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  try {
    ExperimentConfig d;
    if (j.contains("waveform")) j.at("waveform").get_to(d.waveform);
    if (j.contains("grid")) j.at("grid").get_to(d.grid);
    d.offline_samples = get_or(j, "offline_samples", d.offline_samples);
    if (j.contains("adaptation")) j.at("adaptation").get_to(d.adaptation);
    if (j.contains("test")) j.at("test").get_to(d.test);
    if (j.contains("train")) {
      // Missing keys keep ExperimentConfig's defaults, not TrainConfig's.
      nlohmann::json merged = d.train;
      merged.update(j.at("train"));
      merged.get_to(d.train);
    }
    if (j.contains("benchmark")) j.at("benchmark").get_to(d.benchmark);
    if (j.contains("figures")) j.at("figures").get_to(d.figures);
    d.scale = get_or(j, "scale", d.scale);
    d.seed = get_or(j, "seed", d.seed);
    d.out_dir = get_or<std::string>(j, "out_dir", d.out_dir.string());
    c = std::move(d);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + path.string() + ": " + e.what());
  }
  return j.get<ExperimentConfig>();
}

void ExperimentConfig::validate() const {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid experiment config: " + what);
  };
  require(scale > 0.0 && scale <= 1.0, "scale must lie in (0, 1]");
  require(waveform.chips >= 1 && waveform.sample_rate > 0.0, "waveform needs chips >= 1 and sample_rate > 0");
  require(offline_samples >= 2, "offline_samples must be >= 2");
  require(adaptation.samples >= 2, "adaptation.samples must be >= 2");
  require(test.h0_samples >= 1 && test.h1_samples >= 1, "test sample counts must be positive");
  require(figures.roc_points >= 2, "figures.roc_points must be >= 2");
  for (double p : {figures.fig2_pfa, figures.fig3_pfa, figures.fig4_pfa}) {
    require(p > 0.0 && p < 1.0, "figure pfa values must lie in (0, 1)");
  }
  require(benchmark.lr > 0.0, "benchmark.lr must be positive");
  try {
    train.validate();
    for (const auto& e : offline_environments()) e.validate();
    adaptation_environment(test.gaussian.shape).validate();
    test_environment(test.gaussian).validate();
    test_environment(test.non_gaussian).validate();
    (void)lfm_waveform(waveform);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  require(static_cast<std::size_t>(train.meta_batch) <= offline_environments().size(),
          "train.meta_batch exceeds the number of offline environments");
}

ExperimentConfig::Effective ExperimentConfig::effective() const {
  const double min_pfa = std::min({figures.fig2_pfa, figures.fig3_pfa, figures.fig4_pfa});
  const auto min_h0 = static_cast<std::size_t>(std::ceil(kMinExceedances / min_pfa - 1e-9));
  const auto min_offline = static_cast<std::size_t>(2 * train.minibatch);
  Effective e{};
  e.offline_samples = scaled_even(offline_samples, scale, min_offline);
  e.adaptation_samples = scaled_even(adaptation.samples, scale, 2);
  e.test_h0 = std::max<std::size_t>(static_cast<std::size_t>(std::llround(static_cast<double>(test.h0_samples) * scale)), min_h0);
  e.test_h1 = std::max<std::size_t>(static_cast<std::size_t>(std::llround(static_cast<double>(test.h1_samples) * scale)), 100);
  e.benchmark_samples = scaled_even(benchmark.samples, scale, min_offline);
  e.offline_iters = train.offline_iters == 0
                        ? 0
                        : std::max(1, static_cast<int>(std::lround(static_cast<double>(train.offline_iters) * scale)));
  return e;
}

std::vector<EnvironmentSpec> ExperimentConfig::offline_environments() const { return training_environment_grid(grid); }

EnvironmentSpec ExperimentConfig::adaptation_environment(double shape) const {
  EnvironmentSpec e;
  e.shape = shape;
  e.median = adaptation.median;
  e.snr_db = adaptation.snr_db;
  e.sir_db = adaptation.sir_db;
  e.f_lower = adaptation.f_lower;
  e.f_upper = adaptation.f_upper;
  e.label = "adapt_l" + fmt(shape);
  return e;
}

EnvironmentSpec ExperimentConfig::test_environment(const TestScenario& s) const {
  EnvironmentSpec e = adaptation_environment(s.shape);
  e.snr_db = s.snr_db;
  e.label = "test_l" + fmt(s.shape) + "_snr" + fmt(s.snr_db);
  return e;
}

TrainConfig ExperimentConfig::effective_train() const {
  TrainConfig t = train;
  t.offline_iters = effective().offline_iters;
  t.seed = seed;
  return t;
}

std::string ExperimentConfig::data_hash() const {
  const Effective e = effective();
  nlohmann::json j = {{"waveform", waveform},
                      {"grid", grid},
                      {"adaptation", adaptation},
                      {"test", test},
                      {"seed", seed},
                      {"counts",
                       {e.offline_samples, e.adaptation_samples, e.test_h0, e.test_h1, e.benchmark_samples}}};
  return config_hash(j);
}

std::string ExperimentConfig::train_hash(const std::string& method) const {
  nlohmann::json j = {{"data", data_hash()}, {"train", effective_train()}, {"method", method}};
  if (method == "benchmark") j["benchmark_lr"] = benchmark.lr;
  return config_hash(j);
}

std::string ExperimentConfig::full_hash() const {
  nlohmann::json j = *this;
  j.erase("out_dir");
  return config_hash(j);
}

// --- enums -----------------------------------------------------------------

PretrainMethod parse_pretrain_method(std::string_view s) {
  if (s == "transfer") return PretrainMethod::kTransfer;
  if (s == "maml") return PretrainMethod::kMaml;
  if (s == "benchmark") return PretrainMethod::kBenchmark;
  throw ConfigError("unknown pretrain method '" + std::string(s) + "' (transfer|maml|benchmark)");
}

InitMethod parse_init_method(std::string_view s) {
  if (s == "transfer") return InitMethod::kTransfer;
  if (s == "maml") return InitMethod::kMaml;
  if (s == "scratch") return InitMethod::kScratch;
  throw ConfigError("unknown init '" + std::string(s) + "' (transfer|maml|scratch)");
}

Figure parse_figure(std::string_view s) {
  if (s == "fig2") return Figure::kFig2;
  if (s == "fig3") return Figure::kFig3;
  if (s == "fig4") return Figure::kFig4;
  throw ConfigError("unknown figure '" + std::string(s) + "' (fig2|fig3|fig4)");
}

std::string to_string(PretrainMethod m) {
  switch (m) {
    case PretrainMethod::kTransfer: return "transfer";
    case PretrainMethod::kMaml: return "maml";
    case PretrainMethod::kBenchmark: return "benchmark";
  }
  return "?";
}

std::string to_string(InitMethod m) {
  switch (m) {
    case InitMethod::kTransfer: return "transfer";
    case InitMethod::kMaml: return "maml";
    case InitMethod::kScratch: return "scratch";
  }
  return "?";
}

std::string to_string(Figure f) {
  switch (f) {
    case Figure::kFig2: return "fig2";
    case Figure::kFig3: return "fig3";
    case Figure::kFig4: return "fig4";
  }
  return "?";
}

// --- layout ----------------------------------------------------------------

std::filesystem::path RunLayout::offline(std::size_t n) const {
  char name[32];
  std::snprintf(name, sizeof name, "offline_%02zu.rmds", n);
  return data_dir() / name;
}

std::filesystem::path RunLayout::adaptation(bool gaussian) const {
  return data_dir() / (gaussian ? "adapt_gaussian.rmds" : "adapt_non_gaussian.rmds");
}

std::filesystem::path RunLayout::test_pool(bool gaussian, int hypothesis) const {
  return data_dir() / (std::string(gaussian ? "test_gaussian" : "test_non_gaussian") + "_h" +
                       std::to_string(hypothesis) + ".rmds");
}

std::filesystem::path RunLayout::benchmark_data() const { return data_dir() / "benchmark_non_gaussian.rmds"; }

std::filesystem::path RunLayout::checkpoint(PretrainMethod m) const {
  switch (m) {
    case PretrainMethod::kTransfer: return root / "checkpoints" / "psi_tl.json";
    case PretrainMethod::kMaml: return root / "checkpoints" / "psi_maml.json";
    case PretrainMethod::kBenchmark: return root / "checkpoints" / "benchmark.json";
  }
  return {};
}

std::filesystem::path RunLayout::trace(const std::string& name) const {
  return root / "traces" / (name + ".json");
}

void write_fingerprinted(const std::filesystem::path& path, const std::string& body, const std::string& hash,
                         const std::string& comment_prefix) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool xml = comment_prefix.starts_with("<!--");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << comment_prefix << "config_hash=" << hash << " fingerprint=" << git_blob_id(body) << (xml ? " -->" : "")
     << '\n'
     << body;
  if (!os) throw std::runtime_error("short write on " + path.string());
}

// --- gen-data --------------------------------------------------------------

namespace {

struct DataJob {
  std::filesystem::path path;
  EnvironmentSpec env;
  std::string role;
  std::function<Dataset()> make;
};

// True if the file exists and was produced by this config; throws on a mismatch.
bool existing_matches(const std::filesystem::path& path, const std::string& hash) {
  if (!std::filesystem::exists(path)) return false;
  const auto mpath = manifest_path(path);
  std::ifstream is(mpath);
  nlohmann::json m;
  if (is) {
    try {
      is >> m;
    } catch (const nlohmann::json::exception&) {
      m = nullptr;
    }
  }
  const std::string found = m.is_object() ? m.value("config_hash", std::string{}) : std::string{};
  if (found == hash) return true;
  throw ConfigError("existing dataset " + path.string() + " was generated with config hash '" + found +
                    "', current config hash is '" + hash + "'; use a different --out directory or remove it");
}

std::vector<Dataset> load_offline(const ExperimentConfig& cfg, const RunLayout& layout) {
  std::vector<Dataset> out;
  const auto envs = cfg.offline_environments();
  for (std::size_t n = 0; n < envs.size(); ++n) {
    const auto p = layout.offline(n);
    if (!std::filesystem::exists(p)) {
      throw MissingPrerequisite("offline dataset missing: " + p.string() + " (run `gen-data` first)");
    }
    out.push_back(read_dataset(p, LoadMode::kMapped));
  }
  return out;
}

Dataset load_required(const std::filesystem::path& p, LoadMode mode = LoadMode::kInMemory) {
  if (!std::filesystem::exists(p)) {
    throw MissingPrerequisite("dataset missing: " + p.string() + " (run `gen-data` first)");
  }
  return read_dataset(p, mode);
}

}  // namespace

GenDataReport cmd_gen_data(const ExperimentConfig& cfg, const ProgressLog& log) {
  cfg.validate();
  const RunLayout layout{cfg.out_dir};
  const auto eff = cfg.effective();
  const std::string hash = cfg.data_hash();
  const Waveform y = lfm_waveform(cfg.waveform);

  std::vector<DataJob> jobs;
  const auto envs = cfg.offline_environments();
  for (std::size_t n = 0; n < envs.size(); ++n) {
    const auto seed = derive_seed(cfg.seed, kOfflineStream + n);
    jobs.push_back({layout.offline(n), envs[n], "offline",
                    [&, n, seed] { return generate_dataset(envs[n], y, eff.offline_samples, seed); }});
  }
  for (int g = 0; g < 2; ++g) {
    const bool gaussian = g == 0;
    const TestScenario& sc = gaussian ? cfg.test.gaussian : cfg.test.non_gaussian;
    const EnvironmentSpec a = cfg.adaptation_environment(sc.shape);
    const auto a_seed = derive_seed(cfg.seed, kAdaptStream + static_cast<std::uint64_t>(g));
    jobs.push_back({layout.adaptation(gaussian), a, "adaptation",
                    [&, a, a_seed] { return generate_dataset(a, y, eff.adaptation_samples, a_seed); }});
    const EnvironmentSpec t = cfg.test_environment(sc);
    for (int h = 0; h < 2; ++h) {
      const auto seed = derive_seed(cfg.seed, kTestStream + 2 * static_cast<std::uint64_t>(g) + static_cast<std::uint64_t>(h));
      const std::size_t count = h == 0 ? eff.test_h0 : eff.test_h1;
      jobs.push_back({layout.test_pool(gaussian, h), t, "test_h" + std::to_string(h),
                      [&, t, h, count, seed] { return generate_pool(t, y, h, count, seed); }});
    }
  }
  {
    const EnvironmentSpec t = cfg.test_environment(cfg.test.non_gaussian);
    const auto seed = derive_seed(cfg.seed, kBenchmarkStream);
    jobs.push_back({layout.benchmark_data(), t, "benchmark",
                    [&, t, seed] { return generate_dataset(t, y, eff.benchmark_samples, seed); }});
  }

  GenDataReport report;
  for (const auto& job : jobs) {
    if (existing_matches(job.path, hash)) {
      ++report.skipped;
      continue;
    }
    const Dataset d = job.make();
    write_dataset_with_manifest(job.path, d, job.env,
                                {{"config_hash", hash}, {"role", job.role}, {"waveform", cfg.waveform}});
    ++report.written;
    log_to(log, "wrote " + job.path.string() + " (" + std::to_string(d.size()) + " samples)");
  }
  log_to(log, "gen-data: " + std::to_string(report.written) + " written, " + std::to_string(report.skipped) +
                  " up to date");
  return report;
}

// --- pretrain --------------------------------------------------------------

std::filesystem::path cmd_pretrain(const ExperimentConfig& cfg, PretrainMethod method, const ProgressLog& log) {
  cfg.validate();
  const RunLayout layout{cfg.out_dir};
  const std::string name = to_string(method);
  const std::string hash = cfg.train_hash(name);
  const auto ckpt_path = layout.checkpoint(method);

  if (std::filesystem::exists(ckpt_path)) {
    const Checkpoint existing = read_checkpoint(ckpt_path);
    if (existing.meta.config_hash == hash) {
      log_to(log, "pretrain " + name + ": checkpoint up to date, " + ckpt_path.string());
      return ckpt_path;
    }
  }

  TrainConfig tc = cfg.effective_train();
  TrainResult result;
  std::string stage;
  log_to(log, "pretrain " + name + ": " + std::to_string(tc.offline_iters) + " iterations");
  switch (method) {
    case PretrainMethod::kTransfer: {
      const auto data = load_offline(cfg, layout);
      result = pretrain_transfer(data, tc);
      stage = "psi_tl";
      break;
    }
    case PretrainMethod::kMaml: {
      const auto data = load_offline(cfg, layout);
      result = pretrain_maml(data, tc);
      stage = "psi_maml";
      break;
    }
    case PretrainMethod::kBenchmark: {
      const std::vector<Dataset> data{load_required(layout.benchmark_data(), LoadMode::kMapped)};
      tc.outer_lr = cfg.benchmark.lr;
      result = pretrain_transfer(data, tc);
      stage = "benchmark";
      break;
    }
  }

  CheckpointMeta meta;
  meta.seed = cfg.seed;
  meta.stage = stage;
  meta.config_hash = hash;
  meta.extra = {{"method", name},
                {"first_order", tc.first_order},
                {"offline_iters", tc.offline_iters},
                {"data_hash", cfg.data_hash()}};
  write_checkpoint(ckpt_path, result.params, meta);

  nlohmann::json trace = result.trace;
  trace["stage"] = stage;
  trace["first_order"] = tc.first_order;
  trace["config_hash"] = hash;
  const auto trace_path = layout.trace(stage);
  std::filesystem::create_directories(trace_path.parent_path());
  std::ofstream(trace_path) << trace.dump() << '\n';

  const auto& recs = result.trace.records;
  if (!recs.empty()) {
    log_to(log, "pretrain " + name + ": loss " + fmt(recs.front().loss) + " -> " + fmt(recs.back().loss) + " in " +
                    fmt(result.trace.wall_seconds) + " s");
  }
  return ckpt_path;
}

// --- adapt-eval ------------------------------------------------------------

namespace {

struct TestPools {
  Eigen::MatrixXd h0;
  Eigen::MatrixXd h1;
  std::vector<double> ideal_h0;
  std::vector<double> ideal_h1;
};

TestPools load_pools(const RunLayout& layout, bool gaussian, const GaussianDetector& ideal) {
  const Dataset h0 = load_required(layout.test_pool(gaussian, 0));
  const Dataset h1 = load_required(layout.test_pool(gaussian, 1));
  TestPools p{embed_all(h0), embed_all(h1), {}, {}};
  p.ideal_h0.reserve(h0.size());
  for (std::size_t i = 0; i < h0.size(); ++i) p.ideal_h0.push_back(ideal.score(h0.sample(i).z));
  p.ideal_h1.reserve(h1.size());
  for (std::size_t i = 0; i < h1.size(); ++i) p.ideal_h1.push_back(ideal.score(h1.sample(i).z));
  return p;
}

MLPParams initial_params(const ExperimentConfig& cfg, const RunLayout& layout, InitMethod init) {
  if (init == InitMethod::kScratch) {
    Rng rng = make_rng(cfg.seed, kScratchStream);
    return init_params(cfg.train.layer_sizes(cfg.waveform.chips), rng, cfg.train.input_scale);
  }
  const auto method = init == InitMethod::kTransfer ? PretrainMethod::kTransfer : PretrainMethod::kMaml;
  const auto path = layout.checkpoint(method);
  if (!std::filesystem::exists(path)) {
    throw MissingPrerequisite("checkpoint missing: " + path.string() + " (run `pretrain --method " +
                              to_string(method) + "` first)");
  }
  return read_checkpoint(path).params;
}

std::string roc_rows(const std::string& series, const ROCCurve& roc) {
  std::string out;
  for (const auto& pt : roc.points) {
    const Proportion pd = binomial_ci(pt.pd, roc.n_h1);
    out += series + ',' + fmt(pt.threshold) + ',' + fmt(pt.pfa) + ',' + fmt(pt.pd) + ',' + fmt(pd.ci_low) + ',' +
           fmt(pd.ci_high) + '\n';
  }
  return out;
}

nlohmann::json readout_json(const PdReadout& r) {
  return {{"pd", r.pd.value},       {"pd_ci_low", r.pd.ci_low}, {"pd_ci_high", r.pd.ci_high},
          {"pfa", r.pfa.value},     {"threshold", r.threshold}, {"n_h0", r.n_h0},
          {"n_h1", r.n_h1}};
}

void merge_summary(const RunLayout& layout, const std::string& key, const nlohmann::json& value,
                   const std::string& hash) {
  const auto path = layout.results_dir() / "summary.json";
  nlohmann::json summary = nlohmann::json::object();
  if (std::ifstream is(path); is) {
    try {
      is >> summary;
    } catch (const nlohmann::json::exception&) {
      summary = nlohmann::json::object();
    }
  }
  summary.erase("fingerprint");
  summary["config_hash"] = hash;
  summary[key] = value;
  summary["fingerprint"] = git_blob_id(summary.dump());
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << summary.dump(2) << '\n';
}

PlotSeries roc_series(const std::string& name, const ROCCurve& roc, bool dashed = false) {
  PlotSeries s{name, {}, {}, dashed};
  for (auto it = roc.points.rbegin(); it != roc.points.rend(); ++it) {
    s.x.push_back(it->pfa);
    s.y.push_back(it->pd);
  }
  return s;
}

}  // namespace

std::vector<std::filesystem::path> cmd_adapt_eval(const ExperimentConfig& cfg, Figure figure,
                                                  std::vector<InitMethod> inits, const ProgressLog& log) {
  cfg.validate();
  const RunLayout layout{cfg.out_dir};
  const std::string hash = cfg.full_hash();
  const std::string fig = to_string(figure);
  const bool gaussian = figure != Figure::kFig4;
  const TestScenario& scenario = gaussian ? cfg.test.gaussian : cfg.test.non_gaussian;
  const Waveform y = lfm_waveform(cfg.waveform);
  const TrainConfig& tc = cfg.train;

  if (inits.empty()) {
    inits = figure == Figure::kFig2 ? std::vector{InitMethod::kMaml, InitMethod::kTransfer, InitMethod::kScratch}
                                    : std::vector{InitMethod::kMaml, InitMethod::kTransfer};
  }
  // Check every prerequisite before doing any work.
  for (InitMethod m : inits) (void)initial_params(cfg, layout, m);
  if (figure == Figure::kFig4 && !std::filesystem::exists(layout.checkpoint(PretrainMethod::kBenchmark))) {
    throw MissingPrerequisite("checkpoint missing: " + layout.checkpoint(PretrainMethod::kBenchmark).string() +
                              " (run `pretrain --method benchmark` first)");
  }
  const Dataset adaptation_set = load_required(layout.adaptation(gaussian));

  const GaussianDetector ideal = build_ideal_detector(y, cfg.test_environment(scenario));
  const TestPools pools = load_pools(layout, gaussian, ideal);
  const auto out_dir = layout.results_dir();
  std::vector<std::filesystem::path> written;

  if (figure == Figure::kFig2) {
    const double pfa = cfg.figures.fig2_pfa;
    const PdReadout ideal_pd = pd_at_pfa(pools.ideal_h0, pools.ideal_h1, pfa);
    std::string body = "series,updates,pfa,pd,ci_low,ci_high\n";
    std::vector<PlotSeries> plot;
    nlohmann::json summary = {{"pfa", pfa}, {"updates", tc.adapt_steps}, {"ideal", readout_json(ideal_pd)}};
    for (InitMethod m : inits) {
      const std::string name = to_string(m);
      log_to(log, fig + ": adapting " + name);
      const AdaptationCurve curve = adaptation_curve(initial_params(cfg, layout, m), adaptation_set, pools.h0,
                                                     pools.h1, tc.adapt_lr, tc.adapt_steps, pfa, name);
      PlotSeries s{name, {}, {}, false};
      for (const auto& pt : curve.points) {
        body += name + ',' + std::to_string(pt.updates) + ',' + fmt(pfa) + ',' + fmt(pt.pd.value) + ',' +
                fmt(pt.pd.ci_low) + ',' + fmt(pt.pd.ci_high) + '\n';
        s.x.push_back(pt.updates);
        s.y.push_back(pt.pd.value);
      }
      summary[name] = {{"pd_initial", curve.points.front().pd.value}, {"pd", curve.points.back().pd.value},
                       {"pd_ci_low", curve.points.back().pd.ci_low}, {"pd_ci_high", curve.points.back().pd.ci_high}};
      plot.push_back(std::move(s));
    }
    PlotSeries ref{"ideal Gaussian", {}, {}, true};
    for (int m = 0; m <= tc.adapt_steps; ++m) {
      body += "ideal," + std::to_string(m) + ',' + fmt(pfa) + ',' + fmt(ideal_pd.pd.value) + ',' +
              fmt(ideal_pd.pd.ci_low) + ',' + fmt(ideal_pd.pd.ci_high) + '\n';
      ref.x.push_back(m);
      ref.y.push_back(ideal_pd.pd.value);
    }
    plot.push_back(std::move(ref));
    write_fingerprinted(out_dir / "fig2.csv", body, hash);
    write_fingerprinted(out_dir / "fig2.svg",
                        render_svg({"Adaptation, Gaussian clutter, Pfa=" + fmt(pfa), "gradient updates", "Pd", false},
                                   plot),
                        hash, "<!-- ");
    written = {out_dir / "fig2.csv", out_dir / "fig2.svg"};
    merge_summary(layout, fig, summary, hash);
  } else {
    const double pfa = figure == Figure::kFig3 ? cfg.figures.fig3_pfa : cfg.figures.fig4_pfa;
    const auto thresholds_for = [&](const std::vector<double>& h0) { return roc_thresholds(h0, cfg.figures.roc_points); };
    std::string body = "series,threshold,pfa,pd,ci_low,ci_high\n";
    std::vector<PlotSeries> plot;
    nlohmann::json summary = {{"pfa", pfa}, {"updates", tc.adapt_steps}};

    const auto add = [&](const std::string& name, const std::vector<double>& h0, const std::vector<double>& h1,
                         bool dashed) {
      const ROCCurve roc = estimate_roc(h0, h1, thresholds_for(h0));
      body += roc_rows(name, roc);
      plot.push_back(roc_series(name, roc, dashed));
      summary[name] = readout_json(pd_at_pfa(h0, h1, pfa));
    };

    for (InitMethod m : inits) {
      const std::string name = to_string(m);
      log_to(log, fig + ": adapting " + name);
      const TrainResult adapted = adapt(initial_params(cfg, layout, m), adaptation_set, tc.adapt_lr, tc.adapt_steps);
      add(name, network_scores(adapted.params, pools.h0), network_scores(adapted.params, pools.h1), false);
    }
    if (figure == Figure::kFig4) {
      const MLPParams bench = read_checkpoint(layout.checkpoint(PretrainMethod::kBenchmark)).params;
      add("benchmark", network_scores(bench, pools.h0), network_scores(bench, pools.h1), true);
      add("ideal_gaussian", pools.ideal_h0, pools.ideal_h1, true);
    }
    const std::string title = figure == Figure::kFig3 ? "ROC, Gaussian clutter" : "ROC, non-Gaussian clutter";
    write_fingerprinted(out_dir / (fig + ".csv"), body, hash);
    write_fingerprinted(out_dir / (fig + ".svg"), render_svg({title, "Pfa", "Pd", true}, plot), hash, "<!-- ");
    written = {out_dir / (fig + ".csv"), out_dir / (fig + ".svg")};
    merge_summary(layout, fig, summary, hash);
  }
  for (const auto& p : written) log_to(log, "wrote " + p.string());
  return written;
}

void cmd_reproduce_all(const ExperimentConfig& cfg, const ProgressLog& log) {
  cmd_gen_data(cfg, log);
  for (PretrainMethod m : {PretrainMethod::kTransfer, PretrainMethod::kMaml, PretrainMethod::kBenchmark}) {
    cmd_pretrain(cfg, m, log);
  }
  for (Figure f : {Figure::kFig2, Figure::kFig3, Figure::kFig4}) cmd_adapt_eval(cfg, f, {}, log);
}

}  // namespace metaradar
