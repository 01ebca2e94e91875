// Command-line driver for the SDP experiment suite.

#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include "CLI11.hpp"
#include "sdp/experiments.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool smoke = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config, "JSON config file")->required();
  sub->add_option("--out", opts.out, "output directory (overrides config)");
  sub->add_option("--seed", opts.seed, "seed (overrides config)")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  sub->add_flag("--smoke", opts.smoke, "shrink the run to smoke-test scale");
}

sdp::ExperimentConfig load(const CommonOpts& opts) {
  sdp::ExperimentConfig cfg = sdp::ExperimentConfig::load(opts.config);
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.smoke) cfg.smoke = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable distribution propagation through feedforward networks"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    nlohmann::json (*run)(const sdp::ExperimentConfig&);
    CommonOpts opts;
  };
  Sub subs[] = {
      {"propagate", "push one input distribution through a network", sdp::run_propagate,
       {}},
      {"train", "train a network from a dataset config", sdp::run_train, {}},
      {"eval-tv", "probability-mass overlap vs an MC oracle", sdp::run_tv_experiment,
       {}},
      {"eval-w1", "Wasserstein-1 comparison vs an MC oracle", sdp::run_w1_experiment,
       {}},
      {"eval-interval", "regression interval calibration grid",
       sdp::run_interval_experiment, {}},
      {"eval-selective", "selective prediction with OOD mix",
       sdp::run_selective_prediction, {}},
      {"two-moons", "uncertainty map on the two-moons toy task",
       sdp::run_twomoons_map, {}},
  };
  for (auto& sub : subs) add_common(app.add_subcommand(sub.name, sub.help), sub.opts);

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& sub : subs)
      if (app.get_subcommand(sub.name)->parsed()) {
        const sdp::ExperimentConfig cfg = load(sub.opts);
        sub.run(cfg);
        std::printf("wrote %s/report.json\n", cfg.out_dir.c_str());
        return 0;
      }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
