#include "sdp/distprop.hpp"

#include <algorithm>
#include <cmath>

#include "sdp/special.hpp"

namespace sdp {

FullGaussian push_affine(const FullGaussian& d, const Matrix& w, const Vector& b) {
  Vector mean = add(matvec(w, d.mean), b);
  Matrix cov = matmul(matmul(w, d.cov.m), transpose(w));
  // Symmetrize drift from the two matmuls before the PSD check.
  for (std::size_t i = 0; i < cov.rows; ++i)
    for (std::size_t j = i + 1; j < cov.cols; ++j) {
      const double s = 0.5 * (cov(i, j) + cov(j, i));
      cov(i, j) = s;
      cov(j, i) = s;
    }
  return FullGaussian(std::move(mean), PsdMatrix(std::move(cov)));
}

MarginalGaussian push_affine(const MarginalGaussian& d, const Matrix& w, const Vector& b) {
  if (w.cols != d.dim()) throw DimMismatch("push_affine: marginal Gaussian");
  Vector loc = add(matvec(w, d.loc), b);
  Vector scale(w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double var = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j)
      var += w(i, j) * w(i, j) * d.scale[j] * d.scale[j];
    scale[i] = std::sqrt(var);
  }
  return MarginalGaussian(std::move(loc), std::move(scale));
}

MarginalCauchy push_affine(const MarginalCauchy& d, const Matrix& w, const Vector& b) {
  if (w.cols != d.dim()) throw DimMismatch("push_affine: marginal Cauchy");
  Vector loc = add(matvec(w, d.loc), b);
  Vector scale(w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j) g += std::fabs(w(i, j)) * d.scale[j];
    scale[i] = g;
  }
  return MarginalCauchy(std::move(loc), std::move(scale));
}

MarginalStable push_affine_stable(const MarginalStable& d, const Matrix& w,
                                  const Vector& b, StableMode mode) {
  if (w.cols != d.dim()) throw DimMismatch("push_affine_stable");
  if (mode == StableMode::Exact && d.beta != 0.0) {
    for (double x : w.data)
      if (x < 0.0)
        throw NegativeWeight("push_affine_stable: exact mode needs w >= 0 or beta = 0");
  }
  Vector loc = add(matvec(w, d.loc), b);
  Vector scale(w.rows);
  const double a = d.alpha;
  for (std::size_t i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < w.cols; ++j)
      acc += std::pow(d.scale[j], a) * std::pow(std::fabs(w(i, j)), a);
    scale[i] = std::pow(acc, 1.0 / a);
  }
  return MarginalStable(std::move(loc), std::move(scale), d.alpha, d.beta);
}

namespace {

template <typename Marginal>
Marginal push_activation_marginal(const Marginal& d, ActKind kind, double slope) {
  Vector loc(d.dim()), scale(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) {
    loc[i] = activation_value(kind, slope, d.loc[i]);
    scale[i] = std::fabs(activation_deriv(kind, slope, d.loc[i])) * d.scale[i];
  }
  return Marginal(std::move(loc), std::move(scale));
}

template <typename Marginal>
Marginal push_maxpool_marginal(const Marginal& d, std::size_t g) {
  if (g == 0 || d.dim() % g != 0) throw DimMismatch("push_maxpool: group size");
  const std::size_t out = d.dim() / g;
  Vector loc(out), scale(out);
  for (std::size_t i = 0; i < out; ++i) {
    std::size_t arg = i * g;
    for (std::size_t j = 1; j < g; ++j)
      if (d.loc[i * g + j] > d.loc[arg]) arg = i * g + j;
    loc[i] = d.loc[arg];
    scale[i] = d.scale[arg];
  }
  return Marginal(std::move(loc), std::move(scale));
}

}  // namespace

MarginalGaussian push_activation(const MarginalGaussian& d, ActKind kind, double slope) {
  return push_activation_marginal(d, kind, slope);
}
MarginalCauchy push_activation(const MarginalCauchy& d, ActKind kind, double slope) {
  return push_activation_marginal(d, kind, slope);
}

FullGaussian push_activation(const FullGaussian& d, ActKind kind, double slope) {
  const std::size_t n = d.dim();
  Vector mean(n), deriv(n);
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] = activation_value(kind, slope, d.mean[i]);
    deriv[i] = activation_deriv(kind, slope, d.mean[i]);
  }
  Matrix cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cov(i, j) = deriv[i] * d.cov(i, j) * deriv[j];
  return FullGaussian(std::move(mean), PsdMatrix(std::move(cov)));
}

MarginalGaussian push_maxpool(const MarginalGaussian& d, std::size_t group_size) {
  return push_maxpool_marginal(d, group_size);
}
MarginalCauchy push_maxpool(const MarginalCauchy& d, std::size_t group_size) {
  return push_maxpool_marginal(d, group_size);
}

MarginalGaussian moment_match_relu(const MarginalGaussian& d) {
  const std::size_t n = d.dim();
  Vector loc(n), scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = d.loc[i];
    const double sig = d.scale[i];
    if (sig == 0.0) {
      loc[i] = std::max(mu, 0.0);
      scale[i] = 0.0;
      continue;
    }
    const double z = mu / sig;
    const double phi = std_normal_pdf(z);
    const double cdf = std_normal_cdf(z);
    const double mean = mu * cdf + sig * phi;
    const double second = (mu * mu + sig * sig) * cdf + mu * sig * phi;
    loc[i] = mean;
    scale[i] = std::sqrt(std::max(second - mean * mean, 0.0));
  }
  return MarginalGaussian(std::move(loc), std::move(scale));
}

MarginalGaussian moment_match_sigmoid_numeric(const MarginalGaussian& d) {
  const std::size_t n = d.dim();
  Vector loc(n), scale(n);
  // Simpson quadrature over mu +- 10 sigma; the integrand decays like the
  // normal density so 400 panels are far below 1e-10 error.
  constexpr int kPanels = 400;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = d.loc[i];
    const double sig = d.scale[i];
    if (sig == 0.0) {
      loc[i] = sigmoid(mu);
      scale[i] = 0.0;
      continue;
    }
    const double lo = mu - 10.0 * sig;
    const double h = 20.0 * sig / (2 * kPanels);
    double m1 = 0.0, m2 = 0.0;
    for (int k = 0; k <= 2 * kPanels; ++k) {
      const double x = lo + h * k;
      const double wgt = (k == 0 || k == 2 * kPanels) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      const double p = std_normal_pdf((x - mu) / sig) / sig;
      const double s = sigmoid(x);
      m1 += wgt * s * p;
      m2 += wgt * s * s * p;
    }
    m1 *= h / 3.0;
    m2 *= h / 3.0;
    loc[i] = m1;
    scale[i] = std::sqrt(std::max(m2 - m1 * m1, 0.0));
  }
  return MarginalGaussian(std::move(loc), std::move(scale));
}

namespace {

Vector percentile_fit(std::vector<double>& col, double q) {
  std::sort(col.begin(), col.end());
  const double pos = q * (static_cast<double>(col.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, col.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return {col[lo] * (1.0 - frac) + col[hi] * frac};
}

Distribution mc_estimate(const Network& net, const Distribution& input,
                         std::size_t k, SeededRng& rng) {
  if (k < 2) throw IncompatibleMethod("McEstimate needs k >= 2");
  const auto inputs = sample(input, k, rng);
  std::vector<Vector> outputs(k);
  for (std::size_t i = 0; i < k; ++i) outputs[i] = forward(net, inputs[i]);
  const std::size_t n = net.output_dim;

  if (std::holds_alternative<MarginalCauchy>(input)) {
    // Componentwise median and half-IQR (Cauchy quartiles sit at x0 +- gamma).
    Vector loc(n), scale(n);
    std::vector<double> col(k);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < k; ++i) col[i] = outputs[i][j];
      std::vector<double> tmp = col;
      loc[j] = percentile_fit(tmp, 0.5)[0];
      tmp = col;
      const double q3 = percentile_fit(tmp, 0.75)[0];
      tmp = col;
      const double q1 = percentile_fit(tmp, 0.25)[0];
      scale[j] = 0.5 * (q3 - q1);
    }
    return MarginalCauchy(std::move(loc), std::move(scale));
  }

  Vector mean(n, 0.0);
  for (const auto& y : outputs)
    for (std::size_t j = 0; j < n; ++j) mean[j] += y[j];
  for (double& m : mean) m /= static_cast<double>(k);
  Matrix cov(n, n);
  for (const auto& y : outputs)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b2 = 0; b2 <= a; ++b2)
        cov(a, b2) += (y[a] - mean[a]) * (y[b2] - mean[b2]);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b2 = 0; b2 <= a; ++b2) {
      cov(a, b2) /= static_cast<double>(k - 1);
      cov(b2, a) = cov(a, b2);
    }
  return FullGaussian(std::move(mean), PsdMatrix(std::move(cov)));
}

template <typename Marginal>
Marginal propagate_marginal_sdp(const Network& net, Marginal d) {
  for (const auto& layer : net.layers) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer))
      d = push_affine(d, dense->weights, dense->bias);
    else if (const auto* act = std::get_if<ActivationLayer>(&layer))
      d = push_activation(d, act->kind, act->slope);
    else
      d = push_maxpool(d, std::get<MaxPoolLayer>(layer).group_size);
  }
  return d;
}

MarginalGaussian propagate_moment_match(const Network& net, MarginalGaussian d,
                                        bool sigmoid_numeric) {
  for (const auto& layer : net.layers) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
      d = push_affine(d, dense->weights, dense->bias);
    } else if (const auto* act = std::get_if<ActivationLayer>(&layer)) {
      if (act->kind == ActKind::ReLU)
        d = moment_match_relu(d);
      else if (act->kind == ActKind::Sigmoid && sigmoid_numeric)
        d = moment_match_sigmoid_numeric(d);
      else
        d = push_activation(d, act->kind, act->slope);  // no closed form; Eq.-1 rule
    } else {
      d = push_maxpool(d, std::get<MaxPoolLayer>(layer).group_size);
    }
  }
  return d;
}

}  // namespace

Distribution propagate(const Network& net, const Distribution& input,
                       const PropagationMethod& method, SeededRng& rng) {
  if (dist_dim(input) != net.input_dim) throw DimMismatch("propagate: input dim");
  using Kind = PropagationMethod::Kind;
  switch (method.kind) {
    case Kind::SdpFull: {
      PsdMatrix cov;
      Vector mu;
      if (const auto* f = std::get_if<FullGaussian>(&input)) {
        mu = f->mean;
        cov = f->cov;
      } else if (const auto* m = std::get_if<MarginalGaussian>(&input)) {
        mu = m->loc;
        Vector var(m->scale.size());
        for (std::size_t i = 0; i < var.size(); ++i) var[i] = m->scale[i] * m->scale[i];
        cov = PsdMatrix::diagonal(var);
      } else {
        throw IncompatibleMethod("SdpFull requires a Gaussian input");
      }
      // Single whole-network Jacobian; no per-layer covariances.
      const Matrix jac = jacobian(net, mu);
      Matrix out_cov = matmul(matmul(jac, cov.m), transpose(jac));
      for (std::size_t i = 0; i < out_cov.rows; ++i)
        for (std::size_t j = i + 1; j < out_cov.cols; ++j) {
          const double s = 0.5 * (out_cov(i, j) + out_cov(j, i));
          out_cov(i, j) = s;
          out_cov(j, i) = s;
        }
      return FullGaussian(forward(net, mu), PsdMatrix(std::move(out_cov)));
    }
    case Kind::SdpMarginalGaussian: {
      const auto* m = std::get_if<MarginalGaussian>(&input);
      if (!m) throw IncompatibleMethod("SdpMarginalGaussian requires marginal Gaussian");
      return propagate_marginal_sdp(net, *m);
    }
    case Kind::SdpMarginalCauchy: {
      const auto* c = std::get_if<MarginalCauchy>(&input);
      if (!c) throw IncompatibleMethod("SdpMarginalCauchy requires marginal Cauchy");
      if (!method.cauchy_via_jacobian) return propagate_marginal_sdp(net, *c);
      const Matrix jac = jacobian(net, c->loc);
      Vector scale(net.output_dim, 0.0);
      for (std::size_t i = 0; i < jac.rows; ++i)
        for (std::size_t j = 0; j < jac.cols; ++j)
          scale[i] += std::fabs(jac(i, j)) * c->scale[j];
      return MarginalCauchy(forward(net, c->loc), std::move(scale));
    }
    case Kind::MarginalMomentMatch: {
      const auto* m = std::get_if<MarginalGaussian>(&input);
      if (!m) throw IncompatibleMethod("MarginalMomentMatch requires marginal Gaussian");
      return propagate_moment_match(net, *m, method.sigmoid_numeric_mm);
    }
    case Kind::McEstimate:
      return mc_estimate(net, input, method.mc_samples, rng);
  }
  throw IncompatibleMethod("unknown propagation method");
}

std::size_t PnnNetwork::input_dim() const {
  return trunk.layers.empty() ? mean_head.input_dim : trunk.input_dim;
}
std::size_t PnnNetwork::output_dim() const { return mean_head.output_dim; }

Network PnnNetwork::mean_path() const {
  Network net;
  net.input_dim = input_dim();
  net.output_dim = mean_head.output_dim;
  net.layers = trunk.layers;
  net.layers.insert(net.layers.end(), mean_head.layers.begin(), mean_head.layers.end());
  net.validate();
  return net;
}

Vector PnnNetwork::predict_mean(const Vector& x) const {
  return trunk.layers.empty() ? forward(mean_head, x)
                              : forward(mean_head, forward(trunk, x));
}

Vector PnnNetwork::predict_var(const Vector& x) const {
  Vector lv = trunk.layers.empty() ? forward(logvar_head, x)
                                   : forward(logvar_head, forward(trunk, x));
  for (double& v : lv) v = std::exp(v);
  return lv;
}

FullGaussian pnn_sdp_combine(const PnnNetwork& pnn, const Vector& x,
                             const PsdMatrix& input_cov) {
  if (input_cov.dim() != pnn.input_dim()) throw DimMismatch("pnn_sdp_combine");
  const Network mean_net = pnn.mean_path();
  const Matrix jac = jacobian(mean_net, x);
  Matrix cov = matmul(matmul(jac, input_cov.m), transpose(jac));
  const Vector var = pnn.predict_var(x);
  for (std::size_t i = 0; i < cov.rows; ++i) {
    cov(i, i) += var[i];
    for (std::size_t j = i + 1; j < cov.cols; ++j) {
      const double s = 0.5 * (cov(i, j) + cov(j, i));
      cov(i, j) = s;
      cov(j, i) = s;
    }
  }
  return FullGaussian(pnn.predict_mean(x), PsdMatrix(std::move(cov)));
}

}  // namespace sdp
