// metaradar: generate data, pretrain, adapt and evaluate, or run everything.
#include "metaradar/error.hpp"
#include "metaradar/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::optional<std::string> out;
  bool first_order = false;
  bool second_order = false;
  bool quiet = false;
  std::string method = "all";
  std::vector<std::string> figures;
  std::vector<std::string> inits;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--scale", o.scale, "fraction of full-size sample counts and iteration budgets, in (0, 1]");
  cmd->add_option("--out", o.out, "output directory");
  auto* fo = cmd->add_flag("--first-order", o.first_order, "first-order MAML meta-gradient");
  auto* so = cmd->add_flag("--second-order", o.second_order, "exact second-order MAML meta-gradient");
  fo->excludes(so);
  cmd->add_flag("-q,--quiet", o.quiet, "suppress progress output");
}

metaradar::ExperimentConfig resolve(const Options& o) {
  metaradar::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = metaradar::load_experiment_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.scale) cfg.scale = *o.scale;
  if (o.out) cfg.out_dir = *o.out;
  if (o.first_order) cfg.train.first_order = true;
  if (o.second_order) cfg.train.first_order = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast adaptive radar target detection: data generation, pretraining and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "generate offline, adaptation, test and benchmark datasets");
  add_common(gen, o);

  auto* pre = app.add_subcommand("pretrain", "offline training of the shared initialisation");
  add_common(pre, o);
  pre->add_option("--method", o.method, "transfer, maml, benchmark or all")
      ->check(CLI::IsMember({"transfer", "maml", "benchmark", "all"}));

  auto* ev = app.add_subcommand("adapt-eval", "adapt on the adaptation set and write figure data");
  add_common(ev, o);
  ev->add_option("--figure", o.figures, "fig2, fig3 and/or fig4 (default: all)")
      ->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
  ev->add_option("--init", o.inits, "restrict to transfer, maml and/or scratch")
      ->check(CLI::IsMember({"transfer", "maml", "scratch"}));

  auto* all = app.add_subcommand("reproduce-all", "gen-data, pretrain and adapt-eval in one run");
  add_common(all, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();
  metaradar::ProgressLog log;
  if (!o.quiet) {
    log = [t0](const std::string& msg) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "[%8.1fs] %s\n", s, msg.c_str());
    };
  }

  try {
    const metaradar::ExperimentConfig cfg = resolve(o);
    if (gen->parsed()) {
      metaradar::cmd_gen_data(cfg, log);
    } else if (pre->parsed()) {
      using metaradar::PretrainMethod;
      if (o.method == "all") {
        for (auto m : {PretrainMethod::kTransfer, PretrainMethod::kMaml, PretrainMethod::kBenchmark}) {
          metaradar::cmd_pretrain(cfg, m, log);
        }
      } else {
        metaradar::cmd_pretrain(cfg, metaradar::parse_pretrain_method(o.method), log);
      }
    } else if (ev->parsed()) {
      std::vector<metaradar::InitMethod> inits;
      for (const auto& s : o.inits) inits.push_back(metaradar::parse_init_method(s));
      std::vector<std::string> figures = o.figures;
      if (figures.empty()) figures = {"fig2", "fig3", "fig4"};
      for (const auto& f : figures) metaradar::cmd_adapt_eval(cfg, metaradar::parse_figure(f), inits, log);
    } else if (all->parsed()) {
      metaradar::cmd_reproduce_all(cfg, log);
    }
  } catch (const metaradar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const metaradar::MissingPrerequisite& e) {
    std::cerr << "missing prerequisite: " << e.what() << '\n';
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
