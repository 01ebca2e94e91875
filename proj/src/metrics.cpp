#include "sdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdp/losses.hpp"
#include "sdp/special.hpp"

namespace sdp {

namespace {

void pooled_range(const std::vector<Vector>& a, const std::vector<Vector>& b,
                  Vector& lo, Vector& hi) {
  const std::size_t d = a[0].size();
  lo.assign(d, std::numeric_limits<double>::infinity());
  hi.assign(d, -std::numeric_limits<double>::infinity());
  for (const auto* set : {&a, &b})
    for (const auto& x : *set)
      for (std::size_t i = 0; i < d; ++i) {
        lo[i] = std::min(lo[i], x[i]);
        hi[i] = std::max(hi[i], x[i]);
      }
  for (std::size_t i = 0; i < d; ++i)
    if (hi[i] <= lo[i]) hi[i] = lo[i] + 1.0;  // degenerate dimension
}

std::size_t cell_index(const Vector& x, const Vector& lo, const Vector& hi,
                       std::size_t bins) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - lo[i]) / (hi[i] - lo[i]);
    std::size_t b = static_cast<std::size_t>(t * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;  // max edge inclusive
    idx = idx * bins + b;
  }
  return idx;
}

std::size_t grid_cells(std::size_t dims, std::size_t bins) {
  std::size_t cells = 1;
  for (std::size_t i = 0; i < dims; ++i) {
    if (cells > (std::size_t{1} << 27) / bins)
      throw std::invalid_argument("tv_binned: grid too large");
    cells *= bins;
  }
  return cells;
}

}  // namespace

BinnedHistogram bin_samples(const std::vector<Vector>& samples, const Vector& lo,
                            const Vector& hi, std::size_t bins_per_dim) {
  BinnedHistogram h;
  h.dims = lo.size();
  h.bins_per_dim = bins_per_dim;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(grid_cells(h.dims, bins_per_dim), 0);
  for (const auto& x : samples) {
    if (x.size() != h.dims) throw DimMismatch("bin_samples");
    ++h.counts[cell_index(x, lo, hi, bins_per_dim)];
  }
  h.total = samples.size();
  return h;
}

namespace {

double tv_from_counts(const std::vector<std::uint64_t>& ca,
                      const std::vector<std::uint64_t>& cb, double na, double nb) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ca.size(); ++i)
    acc += std::fabs(static_cast<double>(ca[i]) / na - static_cast<double>(cb[i]) / nb);
  return 0.5 * acc;
}

template <bool Parallel>
double tv_binned_impl(const std::vector<Vector>& a, const std::vector<Vector>& b,
                      std::size_t bins) {
  if (a.size() < 1000 || b.size() < 1000)
    throw TooFewSamples("tv_binned: need >= 1000 samples per set");
  if (a[0].size() != b[0].size()) throw DimMismatch("tv_binned");
  Vector lo, hi;
  pooled_range(a, b, lo, hi);
  const std::size_t d = a[0].size();
  const std::size_t cells = grid_cells(d, bins);
  std::vector<std::uint64_t> ca(cells, 0), cb(cells, 0);
  // Integer counts commute, so the parallel reduction is exact.
  if constexpr (Parallel) {
#pragma omp parallel
    {
      std::vector<std::uint64_t> la(cells, 0), lb(cells, 0);
#pragma omp for nowait
      for (long long i = 0; i < static_cast<long long>(a.size()); ++i)
        ++la[cell_index(a[i], lo, hi, bins)];
#pragma omp for nowait
      for (long long i = 0; i < static_cast<long long>(b.size()); ++i)
        ++lb[cell_index(b[i], lo, hi, bins)];
#pragma omp critical
      for (std::size_t c = 0; c < cells; ++c) {
        ca[c] += la[c];
        cb[c] += lb[c];
      }
    }
  } else {
    for (const auto& x : a) ++ca[cell_index(x, lo, hi, bins)];
    for (const auto& x : b) ++cb[cell_index(x, lo, hi, bins)];
  }
  return tv_from_counts(ca, cb, static_cast<double>(a.size()),
                        static_cast<double>(b.size()));
}

}  // namespace

double tv_binned(const std::vector<Vector>& a, const std::vector<Vector>& b,
                 std::size_t bins_per_dim) {
  return tv_binned_impl<true>(a, b, bins_per_dim);
}

double tv_binned_serial(const std::vector<Vector>& a, const std::vector<Vector>& b,
                        std::size_t bins_per_dim) {
  return tv_binned_impl<false>(a, b, bins_per_dim);
}

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Empty("wasserstein1_1d: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a.size() > b.size()) a.swap(b);
  const std::size_t m = a.size();
  double acc = 0.0;
  if (b.size() == m) {
    for (std::size_t i = 0; i < m; ++i) acc += std::fabs(a[i] - b[i]);
  } else {
    // Quantile-matched subsample of the larger sorted set.
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j =
          (2 * i + 1) * b.size() / (2 * m);  // midpoint quantile index
      acc += std::fabs(a[i] - b[j]);
    }
  }
  return acc / static_cast<double>(m);
}

namespace {

template <bool Parallel>
double sliced_w1_impl(const std::vector<Vector>& a, const std::vector<Vector>& b,
                      std::size_t n_projections, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw Empty("sliced_w1: empty sample set");
  const std::size_t d = a[0].size();
  if (d < 2) throw DimMismatch("sliced_w1: need dim >= 2");
  if (b[0].size() != d) throw DimMismatch("sliced_w1");
  std::vector<double> per_proj(n_projections, 0.0);
#pragma omp parallel for schedule(dynamic) if (Parallel)
  for (long long p = 0; p < static_cast<long long>(n_projections); ++p) {
    SeededRng rng = SeededRng::derived(seed, static_cast<std::uint64_t>(p));
    Vector dir(d);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& u : dir) {
        u = rng.normal();
        norm += u * u;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& u : dir) u /= norm;
    std::vector<double> pa(a.size()), pb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      pa[i] = std::inner_product(dir.begin(), dir.end(), a[i].begin(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
      pb[i] = std::inner_product(dir.begin(), dir.end(), b[i].begin(), 0.0);
    per_proj[p] = wasserstein1_1d(std::move(pa), std::move(pb));
  }
  // Fixed summation order keeps the result thread-count independent.
  double acc = 0.0;
  for (double v : per_proj) acc += v;
  return acc / static_cast<double>(n_projections);
}

}  // namespace

double sliced_w1(const std::vector<Vector>& a, const std::vector<Vector>& b,
                 std::size_t n_projections, std::uint64_t seed) {
  return sliced_w1_impl<true>(a, b, n_projections, seed);
}

double sliced_w1_serial(const std::vector<Vector>& a, const std::vector<Vector>& b,
                        std::size_t n_projections, std::uint64_t seed) {
  return sliced_w1_impl<false>(a, b, n_projections, seed);
}

double inverse_std_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_std_normal_cdf");
  double lo = -12.0, hi = 12.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std_normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

IntervalMetrics picp_mpiw(const std::vector<double>& mu, const std::vector<double>& sigma,
                          const std::vector<double>& targets, double level,
                          double y_range) {
  if (mu.size() != sigma.size() || mu.size() != targets.size())
    throw DimMismatch("picp_mpiw");
  if (mu.empty()) throw Empty("picp_mpiw");
  if (!(y_range > 0.0)) throw std::invalid_argument("picp_mpiw: y_range must be > 0");
  const double z =
      level == 0.95 ? 1.96 : inverse_std_normal_cdf(0.5 + 0.5 * level);
  std::size_t inside = 0;
  double width_sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double half = z * sigma[i];
    if (targets[i] >= mu[i] - half && targets[i] <= mu[i] + half) ++inside;
    width_sum += 2.0 * half;
  }
  IntervalMetrics out;
  out.picp = static_cast<double>(inside) / static_cast<double>(mu.size());
  out.mpiw = width_sum / static_cast<double>(mu.size()) / y_range;
  return out;
}

RiskCoverageCurve risk_coverage(const std::vector<double>& certainty,
                                const std::vector<bool>& correct) {
  if (certainty.size() != correct.size()) throw DimMismatch("risk_coverage");
  if (certainty.empty()) throw Empty("risk_coverage");
  const std::size_t n = certainty.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return certainty[i] > certainty[j];
  });
  RiskCoverageCurve curve;
  curve.coverage.resize(n);
  curve.risk.resize(n);
  std::size_t errors = 0;
  double prev_weighted = 0.0;
  double auc = 0.0;
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!correct[order[k]]) ++errors;
    curve.coverage[k] = static_cast<double>(k + 1) * h;
    curve.risk[k] = static_cast<double>(errors) / static_cast<double>(k + 1);
    // Trapezoid over the coverage-weighted risk errors/N, from alpha = 1/N.
    const double weighted = static_cast<double>(errors) * h;
    auc += 0.5 * (prev_weighted + weighted) * h;
    prev_weighted = weighted;
  }
  curve.rcauc = auc;
  return curve;
}

double uncertainty_score(const Distribution& output, ScoreKind kind) {
  const std::size_t n = dist_dim(output);
  if (n < 2) throw DimMismatch("uncertainty_score: need >= 2 classes");
  std::vector<double> p(n);
  if (kind == ScoreKind::SoftmaxEntropy) {
    const Vector loc = dist_location(output);
    double m = loc[0];
    for (double v : loc) m = std::max(m, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::exp(loc[i] - m);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
  } else {
    // p_i = mean over j != i of P(X_i > X_j), renormalized to sum 1.
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (kind == ScoreKind::PairwiseGaussEntropy) {
          if (const auto* f = std::get_if<FullGaussian>(&output))
            acc += pairwise_gaussian_prob(f->mean[i], f->mean[j], f->cov(i, i),
                                          f->cov(j, j), f->cov(i, j));
          else if (const auto* m = std::get_if<MarginalGaussian>(&output))
            acc += pairwise_gaussian_prob(m->loc[i], m->loc[j],
                                          m->scale[i] * m->scale[i],
                                          m->scale[j] * m->scale[j], 0.0);
          else
            throw std::invalid_argument("PairwiseGaussEntropy needs a Gaussian output");
        } else {
          if (const auto* c = std::get_if<MarginalCauchy>(&output))
            acc += pairwise_cauchy_prob(c->loc[i], c->scale[i], c->loc[j], c->scale[j]);
          else if (const auto* f = std::get_if<FullGaussian>(&output))
            // Cauchy scoring of a Gaussian output: locations with marginal
            // scales reinterpreted as Cauchy scales.
            acc += pairwise_cauchy_prob(f->mean[i], std::sqrt(std::max(f->cov(i, i), 0.0)),
                                        f->mean[j], std::sqrt(std::max(f->cov(j, j), 0.0)));
          else if (const auto* m = std::get_if<MarginalGaussian>(&output))
            acc += pairwise_cauchy_prob(m->loc[i], m->scale[i], m->loc[j], m->scale[j]);
        }
      }
      p[i] = acc / static_cast<double>(n - 1);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
  }
  double entropy = 0.0;
  for (double v : p)
    if (v > 0.0) entropy -= v * std::log(v);
  return -entropy;
}

}  // namespace sdp
