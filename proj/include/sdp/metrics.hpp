#pragma once

#include <cstdint>

#include "sdp/dist.hpp"

namespace sdp {

struct TooFewSamples : std::runtime_error {
  explicit TooFewSamples(const std::string& what) : std::runtime_error(what) {}
};

struct Empty : std::runtime_error {
  explicit Empty(const std::string& what) : std::runtime_error(what) {}
};

/// Joint histogram over a regular grid spanning the pooled per-dimension
/// min/max of two sample sets.
struct BinnedHistogram {
  std::size_t dims = 0;
  std::size_t bins_per_dim = 10;
  std::vector<double> lo, hi;        // per-dimension edges
  std::vector<std::uint64_t> counts; // bins_per_dim^dims cells, row-major
  std::uint64_t total = 0;
};

BinnedHistogram bin_samples(const std::vector<Vector>& samples, const Vector& lo,
                            const Vector& hi, std::size_t bins_per_dim);

// Binned total-variation estimate in [0, 1]; experiment tables report 1-TV.
double tv_binned(const std::vector<Vector>& samples_a,
                 const std::vector<Vector>& samples_b, std::size_t bins_per_dim = 10);
double tv_binned_serial(const std::vector<Vector>& samples_a,
                        const std::vector<Vector>& samples_b,
                        std::size_t bins_per_dim = 10);

// Exact 1-D W1 between equal-size empirical measures (sorted order
// statistics); the larger set is quantile-subsampled if counts differ.
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

// Sliced W1: mean of 1-D W1 over seeded uniform unit projections.
double sliced_w1(const std::vector<Vector>& a, const std::vector<Vector>& b,
                 std::size_t n_projections, std::uint64_t seed);
double sliced_w1_serial(const std::vector<Vector>& a, const std::vector<Vector>& b,
                        std::size_t n_projections, std::uint64_t seed);

struct IntervalMetrics {
  double picp = 0.0;
  double mpiw = 0.0;
};

// Intervals mu +- z(level) sigma; MPIW normalized by the training target
// range (3.92 sigma at the default 95% level).
IntervalMetrics picp_mpiw(const std::vector<double>& mu, const std::vector<double>& sigma,
                          const std::vector<double>& targets, double level,
                          double y_range);

struct RiskCoverageCurve {
  std::vector<double> coverage;       // k/N, strictly increasing
  std::vector<double> risk;           // errors among accepted / accepted
  double rcauc = 0.0;
};

// Sort descending by certainty (stable: ties keep input order).  The curve
// reports the error rate among the top-k; the AUC integrates the
// coverage-weighted risk (errors among accepted / N) by trapezoid, which
// makes a perfect predictor on a 50%-error mix score exactly 12.5%.
RiskCoverageCurve risk_coverage(const std::vector<double>& certainty,
                                const std::vector<bool>& correct);

enum class ScoreKind { SoftmaxEntropy, PairwiseGaussEntropy, PairwiseCauchyEntropy };

// Certainty scalar: negative entropy of the class-probability proxy.
double uncertainty_score(const Distribution& output, ScoreKind kind);

double inverse_std_normal_cdf(double p);

}  // namespace sdp
