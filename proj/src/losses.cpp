#include "sdp/losses.hpp"

#include <cmath>
#include <numbers>

#include "sdp/special.hpp"

namespace sdp {

namespace {
constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}
}  // namespace

double pairwise_gaussian_prob(double mu_x, double mu_y, double var_x, double var_y,
                              double cov_xy) {
  const double denom_sq = var_x + var_y - 2.0 * cov_xy;
  if (denom_sq < -1e-12)
    throw InvalidCovariance("pairwise_gaussian_prob: negative difference variance");
  if (denom_sq <= 0.0) {
    if (mu_x > mu_y) return 1.0;
    if (mu_x < mu_y) return 0.0;
    return 0.5;
  }
  return 0.5 * (1.0 + erf((mu_x - mu_y) / std::sqrt(2.0 * denom_sq)));
}

double pairwise_cauchy_prob(double x_x, double gamma_x, double x_y, double gamma_y) {
  const double denom = gamma_x + gamma_y;
  if (denom <= 0.0) {
    if (x_x > x_y) return 1.0;
    if (x_x < x_y) return 0.0;
    return 0.5;
  }
  return std::atan((x_x - x_y) / denom) / std::numbers::pi + 0.5;
}

double pairwise_distribution_loss(const Distribution& output, std::size_t label) {
  const std::size_t n = dist_dim(output);
  if (n < 2 || label >= n)
    throw DimMismatch("pairwise_distribution_loss: need >= 2 classes, valid label");
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == label) continue;
    double p;
    if (const auto* f = std::get_if<FullGaussian>(&output)) {
      p = pairwise_gaussian_prob(f->mean[label], f->mean[j], f->cov(label, label),
                                 f->cov(j, j), f->cov(label, j));
    } else if (const auto* m = std::get_if<MarginalGaussian>(&output)) {
      p = pairwise_gaussian_prob(m->loc[label], m->loc[j],
                                 m->scale[label] * m->scale[label],
                                 m->scale[j] * m->scale[j], 0.0);
    } else {
      const auto& c = std::get<MarginalCauchy>(output);
      p = pairwise_cauchy_prob(c.loc[label], c.scale[label], c.loc[j], c.scale[j]);
    }
    total += -std::log(clamp_prob(p));
  }
  return total / static_cast<double>(n - 1);
}

double gaussian_nll(const FullGaussian& pred, const Vector& y) {
  if (y.size() != pred.dim()) throw DimMismatch("gaussian_nll");
  const std::size_t n = pred.dim();
  const Matrix l = psd_factor(pred.cov);  // may throw NotPsd
  // Solve L z = (y - mean); NLL = n/2 log(2pi) + sum log L_ii + 1/2 |z|^2.
  Vector z(n);
  double logdet_half = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = y[i] - pred.mean[i];
    for (std::size_t j = 0; j < i; ++j) s -= l(i, j) * z[j];
    if (l(i, i) <= 0.0) throw NotPsd("gaussian_nll: singular covariance");
    z[i] = s / l(i, i);
    logdet_half += std::log(l(i, i));
  }
  double quad = 0.0;
  for (double v : z) quad += v * v;
  return 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) +
         logdet_half + 0.5 * quad;
}

double gaussian_nll(const MarginalGaussian& pred, const Vector& y) {
  if (y.size() != pred.dim()) throw DimMismatch("gaussian_nll");
  double nll = 0.0;
  for (std::size_t i = 0; i < pred.dim(); ++i) {
    const double sig = pred.scale[i];
    if (sig <= 0.0) throw NonpositiveScale("gaussian_nll: scale must be positive");
    const double z = (y[i] - pred.loc[i]) / sig;
    nll += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sig) + 0.5 * z * z;
  }
  return nll;
}

double cauchy_nll(const MarginalCauchy& pred, const Vector& y) {
  if (y.size() != pred.dim()) throw DimMismatch("cauchy_nll");
  double nll = 0.0;
  for (std::size_t i = 0; i < pred.dim(); ++i) {
    const double g = pred.scale[i];
    if (g <= 0.0) throw NonpositiveScale("cauchy_nll: scale must be positive");
    const double r = (y[i] - pred.loc[i]) / g;
    nll += std::log(std::numbers::pi * g) + std::log1p(r * r);
  }
  return nll;
}

double softmax_ce(const Vector& logits, std::size_t label) {
  if (label >= logits.size()) throw DimMismatch("softmax_ce: label");
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  return std::log(sum) - (logits[label] - m);
}

namespace {

Var tape_clamp_prob(GradTape& tape, Var p) {
  Var lo = tape.max(p, tape.constant(kProbClamp));
  // min(a, c) = -max(-a, -c)
  return tape.neg(tape.max(tape.neg(lo), tape.constant(-(1.0 - kProbClamp))));
}

}  // namespace

Var tape_pairwise_gaussian_loss(GradTape& tape, std::span<const Var> locs,
                                std::span<const Var> scales, std::size_t label) {
  const std::size_t n = locs.size();
  Var total = tape.constant(0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == label) continue;
    Var denom_sq = scales[label] * scales[label] + scales[j] * scales[j];
    // Tiny floor keeps the sqrt differentiable when both scales collapse.
    denom_sq = tape.max(denom_sq, tape.constant(1e-24));
    Var arg = (locs[label] - locs[j]) / tape.sqrt(2.0 * denom_sq);
    Var p = 0.5 * (1.0 + tape.erf(arg));
    total = total + tape.neg(tape.log(tape_clamp_prob(tape, p)));
  }
  return total / static_cast<double>(n - 1);
}

Var tape_pairwise_cauchy_loss(GradTape& tape, std::span<const Var> locs,
                              std::span<const Var> scales, std::size_t label) {
  const std::size_t n = locs.size();
  Var total = tape.constant(0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == label) continue;
    Var denom = tape.max(scales[label] + scales[j], tape.constant(1e-24));
    Var p = tape.atan((locs[label] - locs[j]) / denom) / std::numbers::pi + 0.5;
    total = total + tape.neg(tape.log(tape_clamp_prob(tape, p)));
  }
  return total / static_cast<double>(n - 1);
}

Var tape_softmax_ce(GradTape& tape, std::span<const Var> logits, std::size_t label) {
  Var m = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) m = tape.max(m, logits[i]);
  Var sum = tape.constant(0.0);
  for (const Var& v : logits) sum = sum + tape.exp(v - m);
  return tape.log(sum) - (logits[label] - m);
}

Var tape_gaussian_nll_1d(GradTape& tape, Var mu, Var var, double y) {
  Var v = tape.max(var, tape.constant(1e-24));
  Var d = tape.constant(y) - mu;
  return 0.5 * (tape.log(2.0 * std::numbers::pi * v) + d * d / v);
}

Var tape_cauchy_nll_1d(GradTape& tape, Var x0, Var gamma, double y) {
  Var g = tape.max(gamma, tape.constant(1e-24));
  Var r = (tape.constant(y) - x0) / g;
  return tape.log(std::numbers::pi * g) + tape.log(1.0 + r * r);
}

}  // namespace sdp
