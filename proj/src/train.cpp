#include "sdp/train.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace sdp {

TapeParams TapeParams::record(GradTape& tape, const Network& net) {
  TapeParams tp;
  tp.flat.reserve(param_count(net));
  for (const auto& layer : net.layers) {
    const auto* d = std::get_if<DenseLayer>(&layer);
    if (!d) continue;
    TapeParams::DenseRef ref;
    ref.w_off = tp.flat.size();
    ref.rows = d->weights.rows;
    ref.cols = d->weights.cols;
    for (double w : d->weights.data) tp.flat.push_back(tape.leaf(w));
    ref.b_off = tp.flat.size();
    for (double b : d->bias) tp.flat.push_back(tape.leaf(b));
    tp.dense.push_back(ref);
  }
  return tp;
}

namespace {

// (value, |f'|) recorded from primitives, so gradients also flow through
// the derivative factor on the scale path.
std::pair<Var, Var> tape_activation(GradTape& tape, ActKind kind, double slope, Var x) {
  switch (kind) {
    case ActKind::ReLU:
      return {tape.relu(x), tape.step(x)};
    case ActKind::LeakyReLU:
      return {tape.max(x, x * slope), tape.step(x) * (1.0 - slope) + slope};
    case ActKind::Sigmoid: {
      Var s = tape.sigmoid(x);
      return {s, s * (1.0 - s)};
    }
    case ActKind::SiLU: {
      Var s = tape.sigmoid(x);
      return {x * s, tape.abs(s * (1.0 + x * (1.0 - s)))};
    }
    case ActKind::GELU: {
      Var cdf = 0.5 * (1.0 + tape.erf(x / std::numbers::sqrt2));
      Var pdf =
          tape.exp(tape.neg(x * x * 0.5)) * (1.0 / std::sqrt(2.0 * std::numbers::pi));
      return {x * cdf, tape.abs(cdf + x * pdf)};
    }
  }
  throw std::logic_error("tape_activation: unknown kind");
}

std::size_t pick_argmax(const GradTape& tape, const std::vector<Var>& locs,
                        std::size_t base, std::size_t g) {
  std::size_t arg = base;
  for (std::size_t j = 1; j < g; ++j)
    if (tape.value(locs[base + j]) > tape.value(locs[arg])) arg = base + j;
  return arg;
}

enum class ScalePath { None, Gaussian, Cauchy };

// Shared walker for point / marginal-Gaussian / marginal-Cauchy forward.
void tape_forward_impl(GradTape& tape, const Network& net, const TapeParams& params,
                       const Vector& x, double input_scale, ScalePath path,
                       std::vector<Var>& locs, std::vector<Var>& scales) {
  locs.clear();
  scales.clear();
  for (double xi : x) locs.push_back(tape.constant(xi));
  if (path != ScalePath::None) {
    Var s0 = tape.constant(input_scale);
    scales.assign(x.size(), s0);
  }
  std::size_t dense_idx = 0;
  for (const auto& layer : net.layers) {
    if (std::holds_alternative<DenseLayer>(layer)) {
      const auto& ref = params.dense[dense_idx++];
      std::vector<Var> out_loc(ref.rows), out_scale;
      const std::span<const Var> in(locs.data(), ref.cols);
      for (std::size_t i = 0; i < ref.rows; ++i) {
        const std::span<const Var> w_row(&params.flat[ref.w_off + i * ref.cols],
                                         ref.cols);
        out_loc[i] = tape.dot(in, w_row) + params.flat[ref.b_off + i];
      }
      if (path == ScalePath::Gaussian) {
        std::vector<Var> var_in(ref.cols), w_sq(ref.cols);
        for (std::size_t j = 0; j < ref.cols; ++j) var_in[j] = scales[j] * scales[j];
        out_scale.resize(ref.rows);
        for (std::size_t i = 0; i < ref.rows; ++i) {
          for (std::size_t j = 0; j < ref.cols; ++j) {
            const Var w = params.flat[ref.w_off + i * ref.cols + j];
            w_sq[j] = w * w;
          }
          Var var = tape.dot(var_in, w_sq);
          out_scale[i] = tape.sqrt(tape.max(var, tape.constant(1e-28)));
        }
      } else if (path == ScalePath::Cauchy) {
        std::vector<Var> w_abs(ref.cols);
        out_scale.resize(ref.rows);
        for (std::size_t i = 0; i < ref.rows; ++i) {
          for (std::size_t j = 0; j < ref.cols; ++j)
            w_abs[j] = tape.abs(params.flat[ref.w_off + i * ref.cols + j]);
          out_scale[i] = tape.dot(scales, w_abs);
        }
      }
      locs = std::move(out_loc);
      if (path != ScalePath::None) scales = std::move(out_scale);
    } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
      for (std::size_t i = 0; i < locs.size(); ++i) {
        auto [val, factor] = tape_activation(tape, act->kind, act->slope, locs[i]);
        locs[i] = val;
        if (path != ScalePath::None) scales[i] = factor * scales[i];
      }
    } else {
      const std::size_t g = std::get<MaxPoolLayer>(layer).group_size;
      std::vector<Var> out_loc(locs.size() / g), out_scale;
      if (path != ScalePath::None) out_scale.resize(out_loc.size());
      for (std::size_t i = 0; i < out_loc.size(); ++i) {
        const std::size_t arg = pick_argmax(tape, locs, i * g, g);
        out_loc[i] = locs[arg];
        if (path != ScalePath::None) out_scale[i] = scales[arg];
      }
      locs = std::move(out_loc);
      if (path != ScalePath::None) scales = std::move(out_scale);
    }
  }
}

}  // namespace

std::vector<Var> tape_forward_point(GradTape& tape, const Network& net,
                                    const TapeParams& params, const Vector& x) {
  std::vector<Var> locs, scales;
  tape_forward_impl(tape, net, params, x, 0.0, ScalePath::None, locs, scales);
  return locs;
}

void tape_forward_marginal_gauss(GradTape& tape, const Network& net,
                                 const TapeParams& params, const Vector& x,
                                 double sigma_in, std::vector<Var>& locs,
                                 std::vector<Var>& scales) {
  tape_forward_impl(tape, net, params, x, sigma_in, ScalePath::Gaussian, locs, scales);
}

void tape_forward_marginal_cauchy(GradTape& tape, const Network& net,
                                  const TapeParams& params, const Vector& x,
                                  double gamma_in, std::vector<Var>& locs,
                                  std::vector<Var>& scales) {
  tape_forward_impl(tape, net, params, x, gamma_in, ScalePath::Cauchy, locs, scales);
}

Var tape_sample_loss(GradTape& tape, const Network& net, const TapeParams& params,
                     const Vector& x, double target, std::size_t label,
                     const LossSpec& spec) {
  using Kind = LossSpec::Kind;
  std::vector<Var> locs, scales;
  switch (spec.kind) {
    case Kind::SoftmaxCE: {
      auto logits = tape_forward_point(tape, net, params, x);
      return tape_softmax_ce(tape, logits, label);
    }
    case Kind::PairwiseGauss:
      tape_forward_marginal_gauss(tape, net, params, x, spec.input_scale, locs, scales);
      return tape_pairwise_gaussian_loss(tape, locs, scales, label);
    case Kind::PairwiseCauchy:
      tape_forward_marginal_cauchy(tape, net, params, x, spec.input_scale, locs, scales);
      return tape_pairwise_cauchy_loss(tape, locs, scales, label);
    case Kind::GaussNllSdp:
      tape_forward_marginal_gauss(tape, net, params, x, spec.input_scale, locs, scales);
      return tape_gaussian_nll_1d(tape, locs[0], scales[0] * scales[0], target);
    case Kind::GaussNllPnn: {
      auto out = tape_forward_point(tape, net, params, x);
      return tape_gaussian_nll_1d(tape, out[0], tape.exp(out[1]), target);
    }
    case Kind::GaussNllSdpPnn: {
      tape_forward_marginal_gauss(tape, net, params, x, spec.input_scale, locs, scales);
      Var var = tape.exp(locs[1]) + scales[0] * scales[0];
      return tape_gaussian_nll_1d(tape, locs[0], var, target);
    }
    case Kind::CauchyNllSdp:
      tape_forward_marginal_cauchy(tape, net, params, x, spec.input_scale, locs, scales);
      return tape_cauchy_nll_1d(tape, locs[0], scales[0], target);
  }
  throw std::logic_error("tape_sample_loss: unknown kind");
}

double sample_loss_value(const Network& net, const Vector& x, double target,
                         std::size_t label, const LossSpec& spec) {
  GradTape tape;
  const TapeParams params = TapeParams::record(tape, net);
  return tape_sample_loss(tape, net, params, x, target, label, spec).val();
}

double softmax_ce_grad(const Network& net, const Vector& x, std::size_t label,
                       double scale, Vector& grad) {
  const std::vector<Vector> trace = forward_trace(net, x);
  const Vector& out = trace.back();
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double o : out) sum += std::exp(o - mx);
  const double loss = std::log(sum) - (out[label] - mx);

  Vector g(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    g[i] = std::exp(out[i] - mx) / sum - (i == label ? 1.0 : 0.0);

  // Flat offset of each dense layer's block, matching get_params order.
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& layer : net.layers)
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      offsets.push_back(off);
      off += d->weights.data.size() + d->bias.size();
    }

  std::size_t di = offsets.size();
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const Vector& in = trace[li];
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      const std::size_t base = offsets[--di];
      const std::size_t rows = d->weights.rows, cols = d->weights.cols;
      for (std::size_t i = 0; i < rows; ++i) {
        const double gi = g[i] * scale;
        double* gw = &grad[base + i * cols];
        for (std::size_t j = 0; j < cols; ++j) gw[j] += gi * in[j];
        grad[base + rows * cols + i] += gi;
      }
      g = matvec_t(d->weights, g);
    } else if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] *= activation_deriv(a->kind, a->slope, in[i]);
    } else {
      const auto& mp = std::get<MaxPoolLayer>(layer);
      Vector expanded(in.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::size_t arg = i * mp.group_size;
        for (std::size_t j = 1; j < mp.group_size; ++j)
          if (in[i * mp.group_size + j] > in[arg]) arg = i * mp.group_size + j;
        expanded[arg] = g[i];
      }
      g = std::move(expanded);
    }
  }
  return loss;
}

TrainHistory train(Network& net, const Dataset& data, const LossSpec& spec,
                   const TrainConfig& cfg, const Dataset* val) {
  const std::size_t n = data.size();
  const std::size_t n_params = param_count(net);
  Vector params_vec;
  get_params(net, params_vec);
  Vector m(n_params, 0.0), v(n_params, 0.0), grad(n_params, 0.0);

  TrainHistory hist;
  GradTape tape;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SeededRng shuffle_rng = SeededRng::derived(cfg.seed, epoch);
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        const double target = data.classification ? 0.0 : data.targets[idx];
        const std::size_t label = data.classification ? data.labels[idx] : 0;
        if (spec.kind == LossSpec::Kind::SoftmaxCE) {
          batch_loss += softmax_ce_grad(net, data.features[idx], label, inv_b, grad);
          continue;
        }
        tape.clear();
        const TapeParams tp = TapeParams::record(tape, net);
        const Var loss =
            tape_sample_loss(tape, net, tp, data.features[idx], target, label, spec);
        batch_loss += loss.val();
        tape.backward(loss);
        for (std::size_t p = 0; p < n_params; ++p)
          grad[p] += tape.gradient(tp.flat[p]) * inv_b;
      }
      batch_loss *= inv_b;
      if (!std::isfinite(batch_loss))
        throw NonFiniteLoss("train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += batch_loss * static_cast<double>(end - start);

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < n_params; ++p) {
        const double g = grad[p] + cfg.adam.weight_decay * params_vec[p];
        m[p] = cfg.adam.beta1 * m[p] + (1.0 - cfg.adam.beta1) * g;
        v[p] = cfg.adam.beta2 * v[p] + (1.0 - cfg.adam.beta2) * g * g;
        params_vec[p] -=
            cfg.adam.lr * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + cfg.adam.eps);
      }
      set_params(net, params_vec);
    }
    hist.train_loss.push_back(epoch_loss / static_cast<double>(n));

    if (val) {
      double vl = 0.0;
      for (std::size_t i = 0; i < val->size(); ++i) {
        const double target = val->classification ? 0.0 : val->targets[i];
        const std::size_t label = val->classification ? val->labels[i] : 0;
        vl += sample_loss_value(net, val->features[i], target, label, spec);
      }
      hist.val_loss.push_back(vl / static_cast<double>(val->size()));
    }
  }
  return hist;
}

double classification_accuracy(const Network& net, const Dataset& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector out = forward(net, data.features[i]);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (out[j] > out[arg]) arg = j;
    if (arg == data.labels[i]) ++hits;
  }
  return data.size() ? static_cast<double>(hits) / static_cast<double>(data.size()) : 0.0;
}

}  // namespace sdp
