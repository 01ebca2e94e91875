#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "sdp/data.hpp"
#include "sdp/distprop.hpp"
#include "sdp/metrics.hpp"
#include "sdp/network.hpp"
#include "sdp/train.hpp"

namespace sdp {

// Experiment driver configuration.  `raw` carries the full parsed JSON so
// each runner can read its own knobs; seed / out_dir / smoke may be
// overridden from the command line.
struct ExperimentConfig {
  nlohmann::json raw;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool smoke = false;

  static ExperimentConfig load(const std::string& path);

  // raw.value(key, fallback), with --smoke shrinking to smoke_key if present.
  template <typename T>
  T knob(const std::string& key, T fallback) const {
    T v = raw.value(key, fallback);
    if (smoke) v = raw.value("smoke_" + key, v);
    return v;
  }
};

// Independent stream id for one experiment cell.
std::uint64_t cell_seed(std::uint64_t base, std::uint64_t cell_id);

std::string version_string();

// Each runner writes its CSV artifacts under cfg.out_dir, writes
// report.json (config echo + version + results), and returns the report.
nlohmann::json run_tv_experiment(const ExperimentConfig& cfg);
nlohmann::json run_w1_experiment(const ExperimentConfig& cfg);
nlohmann::json run_interval_experiment(const ExperimentConfig& cfg);
nlohmann::json run_selective_prediction(const ExperimentConfig& cfg);
nlohmann::json run_twomoons_map(const ExperimentConfig& cfg);

// One-shot utilities behind the `propagate` and `train` subcommands.
nlohmann::json run_propagate(const ExperimentConfig& cfg);
nlohmann::json run_train(const ExperimentConfig& cfg);

// Shared plumbing (also used by tests and the benchmark tool).
std::vector<Vector> oracle_output_samples(const Network& net, const Distribution& input,
                                          std::size_t n, std::uint64_t seed);
Dataset dataset_from_config(const nlohmann::json& spec, std::uint64_t seed);
Network network_from_config(const nlohmann::json& spec, std::uint64_t seed);
LossSpec loss_from_config(const nlohmann::json& spec);
void write_text_file(const std::string& path, const std::string& content);
std::string format_double(double v);

}  // namespace sdp
