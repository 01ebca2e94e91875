#include "sdp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sdp {

using nlohmann::json;

std::string version_string() { return "sdp 1.0.0"; }

std::uint64_t cell_seed(std::uint64_t base, std::uint64_t cell_id) {
  return SeededRng::derived(base, cell_id).next_u64();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  ExperimentConfig cfg;
  in >> cfg.raw;
  cfg.seed = cfg.raw.value("seed", std::uint64_t{1});
  cfg.out_dir = cfg.raw.value("out_dir", std::string("out"));
  cfg.smoke = cfg.raw.value("smoke", false);
  return cfg;
}

std::vector<Vector> oracle_output_samples(const Network& net, const Distribution& input,
                                          std::size_t n, std::uint64_t seed) {
  std::vector<Vector> xs = sample_chunked(input, n, seed);
  std::vector<Vector> ys(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    ys[static_cast<std::size_t>(i)] = forward(net, xs[static_cast<std::size_t>(i)]);
  return ys;
}

namespace {

ActKind act_from_name(const std::string& name) {
  if (name == "relu") return ActKind::ReLU;
  if (name == "leaky_relu") return ActKind::LeakyReLU;
  if (name == "sigmoid") return ActKind::Sigmoid;
  if (name == "silu") return ActKind::SiLU;
  if (name == "gelu") return ActKind::GELU;
  throw std::runtime_error("unknown activation: " + name);
}

PropagationMethod method_from_name(const std::string& name, std::size_t mc_k) {
  PropagationMethod m;
  if (name == "sdp_full") m.kind = PropagationMethod::Kind::SdpFull;
  else if (name == "sdp_marginal") m.kind = PropagationMethod::Kind::SdpMarginalGaussian;
  else if (name == "sdp_marginal_cauchy")
    m.kind = PropagationMethod::Kind::SdpMarginalCauchy;
  else if (name == "moment_match") m.kind = PropagationMethod::Kind::MarginalMomentMatch;
  else if (name == "mc") m.kind = PropagationMethod::Kind::McEstimate;
  else throw std::runtime_error("unknown method: " + name);
  m.mc_samples = mc_k;
  return m;
}

// Full-covariance methods see the isotropic joint; marginal methods see
// the per-dimension marginals of the same input.
Distribution input_for_method(const PropagationMethod& m, const Vector& x, double sigma) {
  using K = PropagationMethod::Kind;
  if (m.kind == K::SdpFull || m.kind == K::McEstimate) {
    Matrix cov(x.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cov(i, i) = sigma * sigma;
    return FullGaussian(x, PsdMatrix(std::move(cov)));
  }
  if (m.kind == K::SdpMarginalCauchy)
    return MarginalCauchy(x, Vector(x.size(), sigma));
  return MarginalGaussian(x, Vector(x.size(), sigma));
}

struct Moments {
  double mean = 0.0, sd = 0.0;
};

Moments mean_std(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - m.mean) * (x - m.mean);
  m.sd = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
  return m;
}

void write_report(const ExperimentConfig& cfg, json results) {
  json report;
  report["version"] = version_string();
  report["config"] = cfg.raw;
  report["seed"] = cfg.seed;
  report["smoke"] = cfg.smoke;
  report["results"] = std::move(results);
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
}

std::vector<std::size_t> as_sizes(const json& arr) {
  std::vector<std::size_t> out;
  for (const auto& v : arr) out.push_back(v.get<std::size_t>());
  return out;
}

}  // namespace

Network network_from_config(const json& spec, std::uint64_t seed) {
  if (spec.contains("path")) return load_network(spec["path"].get<std::string>());
  ShapeSpec shape;
  shape.input_dim = spec.at("input_dim").get<std::size_t>();
  shape.output_dim = spec.at("output_dim").get<std::size_t>();
  shape.hidden = as_sizes(spec.value("hidden", json::array()));
  shape.activation = act_from_name(spec.value("activation", std::string("relu")));
  shape.leaky_slope = spec.value("leaky_slope", 0.01);
  SeededRng rng = SeededRng::derived(seed, 0xA11CE);
  return init_params(shape, rng);
}

LossSpec loss_from_config(const json& spec) {
  LossSpec loss;
  const std::string kind = spec.value("kind", std::string("softmax_ce"));
  using K = LossSpec::Kind;
  if (kind == "softmax_ce") loss.kind = K::SoftmaxCE;
  else if (kind == "pairwise_gauss") loss.kind = K::PairwiseGauss;
  else if (kind == "pairwise_cauchy") loss.kind = K::PairwiseCauchy;
  else if (kind == "gauss_nll_sdp") loss.kind = K::GaussNllSdp;
  else if (kind == "gauss_nll_pnn") loss.kind = K::GaussNllPnn;
  else if (kind == "gauss_nll_sdp_pnn") loss.kind = K::GaussNllSdpPnn;
  else if (kind == "cauchy_nll_sdp") loss.kind = K::CauchyNllSdp;
  else throw std::runtime_error("unknown loss kind: " + kind);
  loss.input_scale = spec.value("input_scale", 0.0);
  return loss;
}

Dataset dataset_from_config(const json& spec, std::uint64_t seed) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "blobs")
    return make_blobs(spec.value("n_per_class", std::size_t{50}), seed,
                      spec.value("spread", 0.6));
  if (name == "two_moons")
    return make_two_moons(spec.value("n", std::size_t{240}), spec.value("noise", 0.1),
                          seed);
  if (name == "glyphs")
    return glyph_dataset(spec.value("letters", false), spec.value("n", std::size_t{500}),
                         seed);
  if (name == "heteroscedastic") {
    std::vector<Vector> x;
    Vector y;
    make_heteroscedastic(spec.value("n", std::size_t{1000}), seed, x, y);
    Dataset d;
    d.features = std::move(x);
    d.y_min = *std::min_element(y.begin(), y.end());
    d.y_max = *std::max_element(y.begin(), y.end());
    const double range = std::max(d.y_max - d.y_min, 1e-12);
    d.targets.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) d.targets[i] = (y[i] - d.y_min) / range;
    d.y_range = 1.0;
    return d;
  }
  if (name == "csv")
    return load_csv(spec.at("path").get<std::string>(),
                    spec.at("target").get<std::string>(), seed)
        .train;
  if (name == "idx")
    return load_idx(spec.at("images").get<std::string>(),
                    spec.at("labels").get<std::string>(),
                    spec.value("limit", std::size_t{0}));
  throw std::runtime_error("unknown dataset: " + name);
}

// ---------------------------------------------------------------------------
// eval-tv: trained classifiers, Gaussian input noise, binned 1-TV overlap
// between each method's output distribution and an MC oracle.
// ---------------------------------------------------------------------------

json run_tv_experiment(const ExperimentConfig& cfg) {
  const std::size_t n_nets = cfg.knob<std::size_t>("n_nets", 10);
  const std::size_t epochs = cfg.knob<std::size_t>("epochs", 300);
  const std::size_t n_inputs = cfg.knob<std::size_t>("n_inputs", 10);
  const std::size_t oracle_n = cfg.knob<std::size_t>("oracle_samples", 100000);
  const std::size_t bins = cfg.knob<std::size_t>("bins", 10);
  const std::size_t mc_k = cfg.knob<std::size_t>("mc_samples", 100);
  const std::size_t n_per_class = cfg.knob<std::size_t>("n_per_class", 50);
  const std::vector<double> sigma_grid =
      cfg.raw.value("sigma_grid", std::vector<double>{1.0, 10.0, 100.0});
  const std::vector<std::string> method_names = cfg.raw.value(
      "methods",
      std::vector<std::string>{"sdp_full", "sdp_marginal", "moment_match", "mc"});
  json net_spec = cfg.raw.value("network", json::object());
  if (!net_spec.contains("input_dim")) {
    net_spec["input_dim"] = 4;
    net_spec["hidden"] = {16, 16, 16, 16};
    net_spec["output_dim"] = 3;
  }

  const Dataset train_set = make_blobs(n_per_class, cell_seed(cfg.seed, 1));
  const Dataset held = make_blobs((n_inputs + 2) / 3 + 1, cell_seed(cfg.seed, 2));

  TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 16);
  tcfg.adam.lr = cfg.raw.value("lr", 1e-2);
  tcfg.adam.weight_decay = cfg.raw.value("weight_decay", 0.0);
  LossSpec ce;  // SoftmaxCE

  std::map<std::pair<double, std::string>, std::vector<double>> cells;
  std::ostringstream cells_csv;
  cells_csv << "net,input,sigma,method,one_minus_tv\n";

  for (std::size_t ni = 0; ni < n_nets; ++ni) {
    Network net = network_from_config(net_spec, cell_seed(cfg.seed, 100 + ni));
    tcfg.seed = cell_seed(cfg.seed, 200 + ni);
    train(net, train_set, ce, tcfg);

    for (std::size_t ii = 0; ii < n_inputs; ++ii) {
      const Vector& x = held.features[ii % held.size()];
      for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
        const double sigma = sigma_grid[si];
        const std::uint64_t base_id = ((ni * 64 + ii) * 16 + si) * 8;
        Matrix cov(x.size(), x.size());
        for (std::size_t d = 0; d < x.size(); ++d) cov(d, d) = sigma * sigma;
        const FullGaussian joint_in(x, PsdMatrix(std::move(cov)));
        const auto oracle = oracle_output_samples(
            net, joint_in, oracle_n, cell_seed(cfg.seed, 1000000 + base_id));

        for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
          const PropagationMethod method = method_from_name(method_names[mi], mc_k);
          SeededRng mrng = SeededRng::derived(cfg.seed, 2000000 + base_id + mi);
          const Distribution out =
              propagate(net, input_for_method(method, x, sigma), method, mrng);
          const auto ours =
              sample_chunked(out, oracle_n, cell_seed(cfg.seed, 3000000 + base_id + mi));
          const double score = 1.0 - tv_binned(oracle, ours, bins);
          cells[{sigma, method_names[mi]}].push_back(score);
          cells_csv << ni << ',' << ii << ',' << format_double(sigma) << ','
                    << method_names[mi] << ',' << format_double(score) << '\n';
        }
      }
    }
  }

  std::ostringstream summary_csv;
  summary_csv << "sigma,method,mean_one_minus_tv,std_one_minus_tv,n\n";
  json summary = json::array();
  for (double sigma : sigma_grid)
    for (const auto& name : method_names) {
      const auto& v = cells[{sigma, name}];
      const Moments m = mean_std(v);
      summary_csv << format_double(sigma) << ',' << name << ',' << format_double(m.mean)
                  << ',' << format_double(m.sd) << ',' << v.size() << '\n';
      summary.push_back({{"sigma", sigma},
                         {"method", name},
                         {"mean_one_minus_tv", m.mean},
                         {"std_one_minus_tv", m.sd},
                         {"n", v.size()}});
    }

  write_text_file(cfg.out_dir + "/tv_cells.csv", cells_csv.str());
  write_text_file(cfg.out_dir + "/tv_summary.csv", summary_csv.str());
  json results;
  results["summary"] = summary;
  write_report(cfg, results);
  return results;
}

// ---------------------------------------------------------------------------
// eval-w1: sliced-W1 table on trained nets plus the exact 1-D ReLU grid.
// ---------------------------------------------------------------------------

json run_w1_experiment(const ExperimentConfig& cfg) {
  const std::size_t n_nets = cfg.knob<std::size_t>("n_nets", 3);
  const std::size_t epochs = cfg.knob<std::size_t>("epochs", 300);
  const std::size_t n_inputs = cfg.knob<std::size_t>("n_inputs", 5);
  const std::size_t n_samples = cfg.knob<std::size_t>("n_samples", 30000);
  const std::size_t n_proj = cfg.knob<std::size_t>("n_projections", 64);
  const std::size_t mc_k = cfg.knob<std::size_t>("mc_samples", 100);
  const std::vector<double> sigma_grid =
      cfg.raw.value("sigma_grid", std::vector<double>{1.0, 10.0, 100.0});
  const std::vector<std::string> method_names = cfg.raw.value(
      "methods",
      std::vector<std::string>{"sdp_full", "sdp_marginal", "moment_match", "mc"});
  json net_spec = cfg.raw.value("network", json::object());
  if (!net_spec.contains("input_dim")) {
    net_spec["input_dim"] = 4;
    net_spec["hidden"] = {16, 16, 16, 16};
    net_spec["output_dim"] = 3;
  }

  const Dataset train_set = make_blobs(cfg.knob<std::size_t>("n_per_class", 50),
                                       cell_seed(cfg.seed, 1));
  const Dataset held = make_blobs((n_inputs + 2) / 3 + 1, cell_seed(cfg.seed, 2));
  TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 16);
  tcfg.adam.lr = cfg.raw.value("lr", 1e-2);
  LossSpec ce;

  std::map<std::pair<double, std::string>, std::vector<double>> cells;
  for (std::size_t ni = 0; ni < n_nets; ++ni) {
    Network net = network_from_config(net_spec, cell_seed(cfg.seed, 100 + ni));
    tcfg.seed = cell_seed(cfg.seed, 200 + ni);
    train(net, train_set, ce, tcfg);
    for (std::size_t ii = 0; ii < n_inputs; ++ii) {
      const Vector& x = held.features[ii % held.size()];
      for (std::size_t si = 0; si < sigma_grid.size(); ++si) {
        const double sigma = sigma_grid[si];
        const std::uint64_t base_id = ((ni * 64 + ii) * 16 + si) * 8;
        Matrix cov(x.size(), x.size());
        for (std::size_t d = 0; d < x.size(); ++d) cov(d, d) = sigma * sigma;
        const auto oracle =
            oracle_output_samples(net, FullGaussian(x, PsdMatrix(std::move(cov))),
                                  n_samples, cell_seed(cfg.seed, 1000000 + base_id));
        for (std::size_t mi = 0; mi < method_names.size(); ++mi) {
          const PropagationMethod method = method_from_name(method_names[mi], mc_k);
          SeededRng mrng = SeededRng::derived(cfg.seed, 2000000 + base_id + mi);
          const Distribution out =
              propagate(net, input_for_method(method, x, sigma), method, mrng);
          const auto ours =
              sample_chunked(out, n_samples, cell_seed(cfg.seed, 3000000 + base_id + mi));
          cells[{sigma, method_names[mi]}].push_back(
              sliced_w1(oracle, ours, n_proj, cell_seed(cfg.seed, 4000000 + base_id)));
        }
      }
    }
  }

  std::ostringstream table_csv;
  table_csv << "sigma,method,mean_sliced_w1,std_sliced_w1,n\n";
  json table = json::array();
  for (double sigma : sigma_grid)
    for (const auto& name : method_names) {
      const Moments m = mean_std(cells[{sigma, name}]);
      table_csv << format_double(sigma) << ',' << name << ',' << format_double(m.mean)
                << ',' << format_double(m.sd) << ',' << cells[{sigma, name}].size()
                << '\n';
      table.push_back({{"sigma", sigma},
                       {"method", name},
                       {"mean_sliced_w1", m.mean},
                       {"std_sliced_w1", m.sd}});
    }
  write_text_file(cfg.out_dir + "/w1_table.csv", table_csv.str());

  // 1-D ReLU grid: exact W1 of the linearized rule and of moment matching
  // against samples of ReLU(N(mu, sigma^2)).
  const double grid_sigma = cfg.raw.value("grid_sigma", 0.1);
  const double grid_step = cfg.knob<double>("grid_step", 0.01);
  const double grid_lo = cfg.raw.value("grid_lo", -0.5);
  const double grid_hi = cfg.raw.value("grid_hi", 0.5);
  const std::size_t grid_n_samples = cfg.knob<std::size_t>("grid_samples", 20000);

  std::ostringstream grid_csv;
  grid_csv << "mu,w1_sdp,w1_moment_match\n";
  json grid = json::array();
  std::size_t gi = 0;
  for (double mu = grid_lo; mu <= grid_hi + 1e-12; mu += grid_step, ++gi) {
    SeededRng grng = SeededRng::derived(cfg.seed, 5000000 + gi);
    std::vector<double> oracle(grid_n_samples);
    for (auto& v : oracle) v = std::max(0.0, mu + grid_sigma * grng.normal());

    const MarginalGaussian relu_in({mu}, {grid_sigma});
    const MarginalGaussian sdp_out = push_activation(relu_in, ActKind::ReLU);
    const MarginalGaussian mm_out = moment_match_relu(relu_in);
    SeededRng srng = SeededRng::derived(cfg.seed, 6000000 + gi);
    SeededRng m2rng = SeededRng::derived(cfg.seed, 7000000 + gi);
    std::vector<double> sdp_s(grid_n_samples), mm_s(grid_n_samples);
    for (auto& v : sdp_s) v = sdp_out.loc[0] + sdp_out.scale[0] * srng.normal();
    for (auto& v : mm_s) v = mm_out.loc[0] + mm_out.scale[0] * m2rng.normal();

    const double w_sdp = wasserstein1_1d(oracle, sdp_s);
    const double w_mm = wasserstein1_1d(oracle, mm_s);
    grid_csv << format_double(mu) << ',' << format_double(w_sdp) << ','
             << format_double(w_mm) << '\n';
    grid.push_back({{"mu", mu}, {"w1_sdp", w_sdp}, {"w1_moment_match", w_mm}});
  }
  write_text_file(cfg.out_dir + "/w1_relu_grid.csv", grid_csv.str());

  json results;
  results["table"] = table;
  results["relu_grid"] = grid;
  write_report(cfg, results);
  return results;
}

// ---------------------------------------------------------------------------
// eval-interval: heteroscedastic regression, grid search over lr and input
// sigma, model selection by the validation-PICP window.
// ---------------------------------------------------------------------------

namespace {

struct IntervalPrediction {
  std::vector<double> mu, sigma;
};

IntervalPrediction predict_intervals(const Network& net, const Dataset& data,
                                     const std::string& method, double sigma_in) {
  IntervalPrediction p;
  SeededRng dummy(0);
  const PropagationMethod marg{PropagationMethod::Kind::SdpMarginalGaussian};
  for (const Vector& x : data.features) {
    if (method == "pnn") {
      const Vector out = forward(net, x);
      p.mu.push_back(out[0]);
      p.sigma.push_back(std::sqrt(std::exp(out[1])));
    } else {
      const Distribution out = propagate(
          net, MarginalGaussian(x, Vector(x.size(), sigma_in)), marg, dummy);
      const auto& g = std::get<MarginalGaussian>(out);
      if (method == "sdp") {
        p.mu.push_back(g.loc[0]);
        p.sigma.push_back(g.scale[0]);
      } else {  // sdp_pnn: var = exp(logvar head) + propagated variance
        p.mu.push_back(g.loc[0]);
        p.sigma.push_back(std::sqrt(std::exp(g.loc[1]) + g.scale[0] * g.scale[0]));
      }
    }
  }
  return p;
}

// Narrowest constant-width intervals around the same means that reach at
// least the target coverage on this data.
double fixed_width_mpiw(const std::vector<double>& mu, const std::vector<double>& y,
                        double target_picp, double y_range) {
  std::vector<double> err(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) err[i] = std::abs(mu[i] - y[i]);
  std::sort(err.begin(), err.end());
  const std::size_t need = static_cast<std::size_t>(
      std::ceil(target_picp * static_cast<double>(err.size())));
  const double half = err[std::min(need == 0 ? 0 : need - 1, err.size() - 1)];
  return 2.0 * half / y_range;
}

}  // namespace

json run_interval_experiment(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.knob<std::size_t>("n", 1000);
  const std::size_t epochs = cfg.knob<std::size_t>("epochs", 200);
  const std::vector<double> lr_grid =
      cfg.raw.value("lr_grid", std::vector<double>{1e-2, 1e-3});
  const std::vector<double> sigma_grid =
      cfg.raw.value("sigma_grid", std::vector<double>{0.03, 0.1, 0.3, 1.0});
  const std::vector<std::string> methods =
      cfg.raw.value("methods", std::vector<std::string>{"sdp", "pnn", "sdp_pnn"});
  const std::vector<std::size_t> hidden =
      as_sizes(cfg.raw.value("hidden", json({32, 32})));
  const double picp_lo = cfg.raw.value("picp_window_lo", 0.925);
  const double picp_hi = cfg.raw.value("picp_window_hi", 0.975);
  const double level = cfg.raw.value("level", 0.95);

  std::vector<Vector> xs;
  Vector ys;
  make_heteroscedastic(n, cell_seed(cfg.seed, 1), xs, ys);
  const DataSplit split =
      split_regression(std::move(xs), std::move(ys), cell_seed(cfg.seed, 2),
                       {0.6, 0.2, 0.2});

  std::ostringstream grid_csv;
  grid_csv << "method,lr,sigma_in,val_picp,val_mpiw,test_picp,test_mpiw,selected\n";
  json selected_rows = json::array();
  std::uint64_t cell = 0;

  for (const std::string& method : methods) {
    struct Candidate {
      double lr, sigma_in, val_picp, val_mpiw, test_picp, test_mpiw;
      std::vector<double> test_mu;
    };
    std::vector<Candidate> candidates;
    const std::vector<double> sigmas =
        method == "pnn" ? std::vector<double>{0.0} : sigma_grid;
    for (double lr : lr_grid)
      for (double sigma_in : sigmas) {
        ++cell;
        json net_spec;
        net_spec["input_dim"] = split.train.feature_dim();
        net_spec["hidden"] = hidden;
        net_spec["output_dim"] = method == "sdp" ? 1 : 2;
        Network net = network_from_config(net_spec, cell_seed(cfg.seed, 100 + cell));

        LossSpec loss;
        loss.input_scale = sigma_in;
        if (method == "sdp") loss.kind = LossSpec::Kind::GaussNllSdp;
        else if (method == "pnn") loss.kind = LossSpec::Kind::GaussNllPnn;
        else loss.kind = LossSpec::Kind::GaussNllSdpPnn;

        TrainConfig tcfg;
        tcfg.epochs = epochs;
        tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 32);
        tcfg.seed = cell_seed(cfg.seed, 200 + cell);
        tcfg.adam.lr = lr;
        tcfg.adam.weight_decay = cfg.raw.value("weight_decay", 0.0);
        bool diverged = false;
        try {
          train(net, split.train, loss, tcfg);
        } catch (const NonFiniteLoss&) {
          diverged = true;
        }
        if (diverged) {
          grid_csv << method << ',' << format_double(lr) << ','
                   << format_double(sigma_in) << ",nan,nan,nan,nan,0\n";
          continue;
        }

        const auto vp = predict_intervals(net, split.val, method, sigma_in);
        const auto vm = picp_mpiw(vp.mu, vp.sigma, split.val.targets, level,
                                  split.val.y_range);
        const auto tp = predict_intervals(net, split.test, method, sigma_in);
        const auto tm = picp_mpiw(tp.mu, tp.sigma, split.test.targets, level,
                                  split.test.y_range);
        candidates.push_back({lr, sigma_in, vm.picp, vm.mpiw, tm.picp, tm.mpiw, tp.mu});
        grid_csv << method << ',' << format_double(lr) << ',' << format_double(sigma_in)
                 << ',' << format_double(vm.picp) << ',' << format_double(vm.mpiw) << ','
                 << format_double(tm.picp) << ',' << format_double(tm.mpiw) << ",0\n";
      }

    // Selection: inside the validation-PICP window, narrowest interval wins.
    const Candidate* best = nullptr;
    for (const auto& c : candidates)
      if (c.val_picp >= picp_lo && c.val_picp <= picp_hi &&
          (!best || c.val_mpiw < best->val_mpiw))
        best = &c;
    json row;
    row["method"] = method;
    if (best) {
      row["selected"] = true;
      row["lr"] = best->lr;
      row["sigma_in"] = best->sigma_in;
      row["val_picp"] = best->val_picp;
      row["val_mpiw"] = best->val_mpiw;
      row["test_picp"] = best->test_picp;
      row["test_mpiw"] = best->test_mpiw;
      // Narrowest constant-width intervals around the same means that reach
      // the winner's test coverage: the adaptivity baseline.
      row["baseline_mpiw"] = fixed_width_mpiw(best->test_mu, split.test.targets,
                                              best->test_picp, split.test.y_range);
    } else {
      row["selected"] = false;
    }
    selected_rows.push_back(row);
  }

  write_text_file(cfg.out_dir + "/interval_grid.csv", grid_csv.str());
  std::ostringstream sel_csv;
  sel_csv << "method,selected,lr,sigma_in,val_picp,val_mpiw,test_picp,test_mpiw\n";
  for (const auto& row : selected_rows) {
    sel_csv << row["method"].get<std::string>() << ','
            << (row["selected"].get<bool>() ? 1 : 0);
    if (row["selected"].get<bool>())
      sel_csv << ',' << format_double(row["lr"].get<double>()) << ','
              << format_double(row["sigma_in"].get<double>()) << ','
              << format_double(row["val_picp"].get<double>()) << ','
              << format_double(row["val_mpiw"].get<double>()) << ','
              << format_double(row["test_picp"].get<double>()) << ','
              << format_double(row["test_mpiw"].get<double>());
    else
      sel_csv << ",,,,,,";
    sel_csv << '\n';
  }
  write_text_file(cfg.out_dir + "/interval_selected.csv", sel_csv.str());

  json results;
  results["selected"] = selected_rows;
  write_report(cfg, results);
  return results;
}

// ---------------------------------------------------------------------------
// eval-selective: digit classifier, half-OOD test mix, risk-coverage per
// uncertainty score.
// ---------------------------------------------------------------------------

json run_selective_prediction(const ExperimentConfig& cfg) {
  const std::size_t n_train = cfg.knob<std::size_t>("n_train", 1000);
  const std::size_t n_test_in = cfg.knob<std::size_t>("n_test_in", 1000);
  const std::size_t n_test_ood = cfg.knob<std::size_t>("n_test_ood", n_test_in);
  const std::size_t epochs = cfg.knob<std::size_t>("epochs", 15);
  const double sigma = cfg.raw.value("sigma", 0.1);
  const double gamma = cfg.raw.value("gamma", 0.1);
  const std::vector<std::string> loss_names =
      cfg.raw.value("losses", std::vector<std::string>{"softmax_ce", "pairwise_gauss"});
  const std::vector<std::size_t> hidden = as_sizes(cfg.raw.value("hidden", json({32})));

  const Dataset train_set = glyph_dataset(false, n_train, cell_seed(cfg.seed, 1));
  const Dataset test_in = glyph_dataset(false, n_test_in, cell_seed(cfg.seed, 2));
  const Dataset test_ood = glyph_dataset(true, n_test_ood, cell_seed(cfg.seed, 3));

  std::vector<Vector> mixed;
  std::vector<std::size_t> mixed_labels;
  std::vector<bool> in_dist;
  for (std::size_t i = 0; i < test_in.size(); ++i) {
    mixed.push_back(test_in.features[i]);
    mixed_labels.push_back(test_in.labels[i]);
    in_dist.push_back(true);
  }
  for (std::size_t i = 0; i < test_ood.size(); ++i) {
    mixed.push_back(test_ood.features[i]);
    mixed_labels.push_back(0);
    in_dist.push_back(false);
  }

  const std::vector<std::pair<std::string, ScoreKind>> scores = {
      {"softmax_entropy", ScoreKind::SoftmaxEntropy},
      {"pairwise_gauss", ScoreKind::PairwiseGaussEntropy},
      {"pairwise_cauchy", ScoreKind::PairwiseCauchyEntropy}};

  std::ostringstream summary_csv;
  summary_csv << "loss,score,rcauc,error_rate\n";
  json summary = json::array();

  for (std::size_t li = 0; li < loss_names.size(); ++li) {
    json net_spec;
    net_spec["input_dim"] = train_set.feature_dim();
    net_spec["hidden"] = hidden;
    net_spec["output_dim"] = 10;
    Network net = network_from_config(net_spec, cell_seed(cfg.seed, 100 + li));

    json loss_spec;
    loss_spec["kind"] = loss_names[li];
    loss_spec["input_scale"] = loss_names[li] == "pairwise_cauchy" ? gamma : sigma;
    const LossSpec loss = loss_from_config(loss_spec);

    TrainConfig tcfg;
    tcfg.epochs = epochs;
    tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 32);
    tcfg.seed = cell_seed(cfg.seed, 200 + li);
    tcfg.adam.lr = cfg.raw.value("lr", 1e-3);
    train(net, train_set, loss, tcfg);

    // Correctness and per-score certainties over the mixed set.
    std::vector<bool> correct(mixed.size());
    std::vector<std::vector<double>> certainty(scores.size(),
                                               std::vector<double>(mixed.size()));
    SeededRng dummy(0);
    const PropagationMethod marg_g{PropagationMethod::Kind::SdpMarginalGaussian};
    const PropagationMethod marg_c{PropagationMethod::Kind::SdpMarginalCauchy};
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      const Vector& x = mixed[i];
      const Vector logits = forward(net, x);
      std::size_t arg = 0;
      for (std::size_t j = 1; j < logits.size(); ++j)
        if (logits[j] > logits[arg]) arg = j;
      correct[i] = in_dist[i] && arg == mixed_labels[i];

      const Distribution point = MarginalGaussian(logits, Vector(logits.size(), 0.0));
      const Distribution gauss = propagate(
          net, MarginalGaussian(x, Vector(x.size(), sigma)), marg_g, dummy);
      const Distribution cauchy = propagate(
          net, MarginalCauchy(x, Vector(x.size(), gamma)), marg_c, dummy);
      certainty[0][i] = uncertainty_score(point, ScoreKind::SoftmaxEntropy);
      certainty[1][i] = uncertainty_score(gauss, ScoreKind::PairwiseGaussEntropy);
      certainty[2][i] = uncertainty_score(cauchy, ScoreKind::PairwiseCauchyEntropy);
    }

    std::size_t n_err = 0;
    for (bool c : correct)
      if (!c) ++n_err;
    const double error_rate = static_cast<double>(n_err) / static_cast<double>(correct.size());

    for (std::size_t si = 0; si < scores.size(); ++si) {
      const RiskCoverageCurve rc = risk_coverage(certainty[si], correct);
      std::ostringstream curve_csv;
      curve_csv << "coverage,risk\n";
      for (std::size_t k = 0; k < rc.coverage.size(); ++k)
        curve_csv << format_double(rc.coverage[k]) << ',' << format_double(rc.risk[k])
                  << '\n';
      write_text_file(cfg.out_dir + "/rc_" + loss_names[li] + "_" + scores[si].first +
                          ".csv",
                      curve_csv.str());
      summary_csv << loss_names[li] << ',' << scores[si].first << ','
                  << format_double(rc.rcauc) << ',' << format_double(error_rate) << '\n';
      summary.push_back({{"loss", loss_names[li]},
                         {"score", scores[si].first},
                         {"rcauc", rc.rcauc},
                         {"error_rate", error_rate}});
    }

    // Oracle certainty baseline: rank every correct prediction first.
    std::vector<double> oracle(correct.size());
    for (std::size_t i = 0; i < correct.size(); ++i) oracle[i] = correct[i] ? 1.0 : 0.0;
    const RiskCoverageCurve rc = risk_coverage(oracle, correct);
    summary_csv << loss_names[li] << ",oracle," << format_double(rc.rcauc) << ','
                << format_double(error_rate) << '\n';
    summary.push_back({{"loss", loss_names[li]},
                       {"score", "oracle"},
                       {"rcauc", rc.rcauc},
                       {"error_rate", error_rate}});
  }

  write_text_file(cfg.out_dir + "/selective_summary.csv", summary_csv.str());
  json results;
  results["summary"] = summary;
  write_report(cfg, results);
  return results;
}

// ---------------------------------------------------------------------------
// two-moons: pairwise-Gaussian training, predictive-scale map over a grid.
// ---------------------------------------------------------------------------

json run_twomoons_map(const ExperimentConfig& cfg) {
  const std::size_t n = cfg.knob<std::size_t>("n", 240);
  const double noise = cfg.raw.value("noise", 0.1);
  const std::size_t epochs = cfg.knob<std::size_t>("epochs", 300);
  const double sigma = cfg.raw.value("sigma", 0.2);
  const std::size_t grid_n = cfg.knob<std::size_t>("grid_n", 50);
  const double x_lo = cfg.raw.value("x_lo", -1.5), x_hi = cfg.raw.value("x_hi", 2.5);
  const double y_lo = cfg.raw.value("y_lo", -1.25), y_hi = cfg.raw.value("y_hi", 1.75);

  const Dataset data = make_two_moons(n, noise, cell_seed(cfg.seed, 1));
  json net_spec;
  net_spec["input_dim"] = 2;
  net_spec["hidden"] = as_sizes(cfg.raw.value("hidden", json({16, 16})));
  net_spec["output_dim"] = 2;
  Network net = network_from_config(net_spec, cell_seed(cfg.seed, 2));

  LossSpec loss;
  loss.kind = LossSpec::Kind::PairwiseGauss;
  loss.input_scale = sigma;
  TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 32);
  tcfg.seed = cell_seed(cfg.seed, 3);
  tcfg.adam.lr = cfg.raw.value("lr", 1e-2);
  train(net, data, loss, tcfg);

  SeededRng dummy(0);
  const PropagationMethod marg{PropagationMethod::Kind::SdpMarginalGaussian};
  std::ostringstream map_csv;
  map_csv << "x,y,uncertainty\n";
  for (std::size_t iy = 0; iy < grid_n; ++iy)
    for (std::size_t ix = 0; ix < grid_n; ++ix) {
      const double gx = x_lo + (x_hi - x_lo) * static_cast<double>(ix) /
                                   static_cast<double>(grid_n - 1);
      const double gy = y_lo + (y_hi - y_lo) * static_cast<double>(iy) /
                                   static_cast<double>(grid_n - 1);
      const Distribution out =
          propagate(net, MarginalGaussian({gx, gy}, {sigma, sigma}), marg, dummy);
      // Entropy of the pairwise class probabilities: high where the model
      // is unsure, both between the moons and far from the data.
      const double unc = -uncertainty_score(out, ScoreKind::PairwiseGaussEntropy);
      map_csv << format_double(gx) << ',' << format_double(gy) << ','
              << format_double(unc) << '\n';
    }
  write_text_file(cfg.out_dir + "/two_moons_map.csv", map_csv.str());
  save_network(net, cfg.out_dir + "/two_moons_net.json");

  json results;
  results["train_accuracy"] = classification_accuracy(net, data);
  results["grid_n"] = grid_n;
  write_report(cfg, results);
  return results;
}

// ---------------------------------------------------------------------------
// propagate / train subcommands
// ---------------------------------------------------------------------------

namespace {

Distribution distribution_from_config(const json& spec) {
  const std::string type = spec.at("type").get<std::string>();
  const Vector loc = spec.at("loc").get<Vector>();
  if (type == "marginal_gauss")
    return MarginalGaussian(loc, spec.at("scale").get<Vector>());
  if (type == "marginal_cauchy")
    return MarginalCauchy(loc, spec.at("scale").get<Vector>());
  if (type == "full_gauss") {
    const auto rows = spec.at("cov").get<std::vector<Vector>>();
    Matrix cov(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j) cov(i, j) = rows[i][j];
    return FullGaussian(loc, PsdMatrix(std::move(cov)));
  }
  throw std::runtime_error("unknown distribution type: " + type);
}

json distribution_to_json(const Distribution& d) {
  json out;
  if (const auto* g = std::get_if<MarginalGaussian>(&d)) {
    out["type"] = "marginal_gauss";
    out["loc"] = g->loc;
    out["scale"] = g->scale;
  } else if (const auto* c = std::get_if<MarginalCauchy>(&d)) {
    out["type"] = "marginal_cauchy";
    out["loc"] = c->loc;
    out["scale"] = c->scale;
  } else {
    const auto& f = std::get<FullGaussian>(d);
    out["type"] = "full_gauss";
    out["loc"] = f.mean;
    std::vector<Vector> cov(f.dim(), Vector(f.dim()));
    for (std::size_t i = 0; i < f.dim(); ++i)
      for (std::size_t j = 0; j < f.dim(); ++j) cov[i][j] = f.cov(i, j);
    out["cov"] = cov;
  }
  return out;
}

}  // namespace

json run_propagate(const ExperimentConfig& cfg) {
  const Network net = network_from_config(cfg.raw.at("network"), cfg.seed);
  const Distribution input = distribution_from_config(cfg.raw.at("input"));
  const json mspec = cfg.raw.value("method", json::object());
  const PropagationMethod method =
      method_from_name(mspec.value("kind", std::string("sdp_full")),
                       mspec.value("mc_samples", std::size_t{100}));
  SeededRng rng = SeededRng::derived(cfg.seed, 0);
  const Distribution output = propagate(net, input, method, rng);

  json results;
  results["output"] = distribution_to_json(output);
  write_text_file(cfg.out_dir + "/output.json", results["output"].dump(2) + "\n");
  write_report(cfg, results);
  return results;
}

json run_train(const ExperimentConfig& cfg) {
  const Dataset data = dataset_from_config(cfg.raw.at("dataset"), cell_seed(cfg.seed, 1));
  Network net = network_from_config(cfg.raw.at("network"), cell_seed(cfg.seed, 2));
  const LossSpec loss = loss_from_config(cfg.raw.value("loss", json::object()));

  TrainConfig tcfg;
  tcfg.epochs = cfg.knob<std::size_t>("epochs", 100);
  tcfg.batch_size = cfg.knob<std::size_t>("batch_size", 32);
  tcfg.seed = cell_seed(cfg.seed, 3);
  tcfg.adam.lr = cfg.raw.value("lr", 1e-3);
  tcfg.adam.weight_decay = cfg.raw.value("weight_decay", 0.0);
  const TrainHistory hist = train(net, data, loss, tcfg);

  save_network(net, cfg.out_dir + "/network.json");
  std::ostringstream hist_csv;
  hist_csv << "epoch,train_loss\n";
  for (std::size_t e = 0; e < hist.train_loss.size(); ++e)
    hist_csv << e << ',' << format_double(hist.train_loss[e]) << '\n';
  write_text_file(cfg.out_dir + "/history.csv", hist_csv.str());

  json results;
  results["final_train_loss"] =
      hist.train_loss.empty() ? 0.0 : hist.train_loss.back();
  if (data.classification)
    results["train_accuracy"] = classification_accuracy(net, data);
  write_report(cfg, results);
  return results;
}

}  // namespace sdp
