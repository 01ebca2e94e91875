#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sdp/metrics.hpp"
#include "sdp/special.hpp"

using namespace sdp;

namespace {

std::vector<Vector> gaussian_cloud(double mu, double sigma, std::size_t n,
                                   std::uint64_t seed) {
  return sample_chunked(MarginalGaussian({mu}, {sigma}), n, seed);
}

}  // namespace

TEST_CASE("tv of identical sample sets is zero, disjoint sets one") {
  const auto a = gaussian_cloud(0.0, 1.0, 20000, 1);
  CHECK(tv_binned(a, a) == 0.0);
  const auto b = gaussian_cloud(100.0, 0.5, 20000, 2);
  CHECK(tv_binned(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tv against a quadrature oracle for shifted gaussians") {
  // Oracle: the binned TV of N(0,1) vs N(1,1) over the pooled sample range,
  // computed by integrating the densities over the same 10 bins.
  const std::size_t n = 400000;
  const auto a = gaussian_cloud(0.0, 1.0, n, 3);
  const auto b = gaussian_cloud(1.0, 1.0, n, 4);
  double lo = 1e300, hi = -1e300;
  for (const auto& v : a) {
    lo = std::min(lo, v[0]);
    hi = std::max(hi, v[0]);
  }
  for (const auto& v : b) {
    lo = std::min(lo, v[0]);
    hi = std::max(hi, v[0]);
  }
  const std::size_t bins = 10;
  double oracle = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double x0 = lo + (hi - lo) * static_cast<double>(k) / bins;
    const double x1 = lo + (hi - lo) * static_cast<double>(k + 1) / bins;
    const double pa = std_normal_cdf(x1) - std_normal_cdf(x0);
    const double pb = std_normal_cdf(x1 - 1.0) - std_normal_cdf(x0 - 1.0);
    oracle += std::abs(pa - pb);
  }
  oracle *= 0.5;
  CHECK(tv_binned(a, b, bins) == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("tv is symmetric and needs enough samples") {
  const auto a = gaussian_cloud(0.0, 1.0, 5000, 5);
  const auto b = gaussian_cloud(0.5, 1.0, 5000, 6);
  CHECK(tv_binned(a, b) == tv_binned(b, a));
  std::vector<Vector> tiny(a.begin(), a.begin() + 10);
  CHECK_THROWS_AS(tv_binned(tiny, tiny), TooFewSamples);
}

TEST_CASE("tv bin-count stability on smooth densities") {
  const std::size_t n = 200000;
  const auto a = gaussian_cloud(0.0, 1.0, n, 7);
  const auto b = gaussian_cloud(0.8, 1.2, n, 8);
  const double t10 = tv_binned(a, b, 10);
  const double t20 = tv_binned(a, b, 20);
  CHECK(std::abs(t10 - t20) < 0.05);
}

TEST_CASE("exact 1-d w1: translation identity and triangle inequality") {
  SeededRng rng(11);
  std::vector<double> a(2000), b(2000), c(2000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = 0.5 + 1.3 * rng.normal();
  for (auto& v : c) v = rng.cauchy();

  std::vector<double> shifted = a;
  for (auto& v : shifted) v += 2.5;
  CHECK(wasserstein1_1d(a, shifted) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(wasserstein1_1d(a, a) == 0.0);

  const double ab = wasserstein1_1d(a, b);
  const double bc = wasserstein1_1d(b, c);
  const double ac = wasserstein1_1d(a, c);
  CHECK(ac <= ab + bc + 1e-9);
}

TEST_CASE("w1 with unequal sample counts via quantile subsampling") {
  SeededRng rng(12);
  std::vector<double> a(10000), b(2000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  CHECK(wasserstein1_1d(a, b) < 0.1);
}

TEST_CASE("sliced w1 recovers translations in expectation") {
  // For a pure shift t in d dimensions, each projected W1 is |<u, t>|; with
  // uniform unit projections in 2-D the mean is 2|t|/pi.
  const std::size_t n = 4000;
  auto a = sample_chunked(MarginalGaussian({0.0, 0.0}, {1.0, 1.0}), n, 13);
  auto b = a;
  for (auto& v : b) v[0] += 3.0;
  const double est = sliced_w1(a, b, 256, 14);
  CHECK(est == doctest::Approx(2.0 * 3.0 / std::numbers::pi).epsilon(0.1));
}

TEST_CASE("picp and mpiw reference cases") {
  const std::vector<double> mu = {1.0, 2.0, 3.0};
  const std::vector<double> zero(3, 0.0);
  const auto exact = picp_mpiw(mu, zero, mu, 0.95, 1.0);
  CHECK(exact.picp == 1.0);
  CHECK(exact.mpiw == 0.0);

  const std::vector<double> sig(3, 0.5);
  const auto m = picp_mpiw(mu, sig, {1.0, 2.0, 10.0}, 0.95, 2.0);
  CHECK(m.picp == doctest::Approx(2.0 / 3.0));
  CHECK(m.mpiw == doctest::Approx(3.92 * 0.5 / 2.0).epsilon(1e-9));
}

TEST_CASE("picp converges at the binomial rate on calibrated predictions") {
  const std::size_t n = 100000;
  SeededRng rng(15);
  std::vector<double> mu(n), sigma(n, 1.0), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu[i] = rng.normal();
    y[i] = mu[i] + rng.normal();
  }
  const auto m = picp_mpiw(mu, sigma, y, 0.95, 1.0);
  CHECK(m.picp == doctest::Approx(0.95).epsilon(0.011));
}

TEST_CASE("risk coverage hand case") {
  // Four samples ranked correct, correct, wrong, wrong; top-k error rates
  // are 0, 0, 1/3, 1/2.
  const std::vector<double> certainty = {4.0, 3.0, 2.0, 1.0};
  const std::vector<bool> correct = {true, true, false, false};
  const auto rc = risk_coverage(certainty, correct);
  REQUIRE(rc.risk.size() == 4);
  CHECK(rc.risk[0] == 0.0);
  CHECK(rc.risk[1] == 0.0);
  CHECK(rc.risk[2] == doctest::Approx(1.0 / 3.0));
  CHECK(rc.risk[3] == doctest::Approx(0.5));
  CHECK(rc.coverage[0] == doctest::Approx(0.25));
  CHECK(rc.coverage[3] == doctest::Approx(1.0));
  // AUC of the coverage-weighted risk (errors among accepted / N) by
  // trapezoid: weighted values 0, 0, 1/4, 1/2 over coverage steps of 1/4
  // give an area of 1/8.
  CHECK(rc.rcauc == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("perfect predictor on a half-error mix scores exactly 12.5 percent") {
  for (std::size_t n : {4u, 10u, 1000u}) {
    std::vector<double> certainty(n);
    std::vector<bool> correct(n);
    for (std::size_t i = 0; i < n; ++i) {
      correct[i] = i < n / 2;
      certainty[i] = correct[i] ? 1.0 : 0.0;
    }
    const auto rc = risk_coverage(certainty, correct);
    CHECK(rc.rcauc == doctest::Approx(0.125).epsilon(1e-12));
  }
}

TEST_CASE("all-correct predictions give zero rcauc") {
  const auto rc = risk_coverage({3.0, 2.0, 1.0}, {true, true, true});
  CHECK(rc.rcauc == 0.0);
  CHECK_THROWS_AS(risk_coverage({}, {}), Empty);
}

TEST_CASE("rcauc is invariant under monotone score transforms") {
  SeededRng rng(16);
  std::vector<double> scores(200);
  std::vector<bool> correct(200);
  for (std::size_t i = 0; i < 200; ++i) {
    scores[i] = rng.normal();
    correct[i] = rng.uniform() < 0.7;
  }
  std::vector<double> warped = scores;
  for (auto& s : warped) s = std::exp(2.0 * s) + 1.0;
  const auto a = risk_coverage(scores, correct);
  const auto b = risk_coverage(warped, correct);
  CHECK(a.rcauc == doctest::Approx(b.rcauc).epsilon(1e-12));
}

TEST_CASE("uncertainty scores order confident and uniform outputs") {
  const Distribution uniform = MarginalGaussian({1.0, 1.0, 1.0}, {0.5, 0.5, 0.5});
  const Distribution confident = MarginalGaussian({10.0, 0.0, 0.0}, {0.01, 0.01, 0.01});
  for (auto kind : {ScoreKind::SoftmaxEntropy, ScoreKind::PairwiseGaussEntropy}) {
    CHECK(uncertainty_score(confident, kind) > uncertainty_score(uniform, kind));
  }
  // Uniform case: certainty = -log n.
  CHECK(uncertainty_score(uniform, ScoreKind::SoftmaxEntropy) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  CHECK(uncertainty_score(uniform, ScoreKind::PairwiseGaussEntropy) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-12));

  const Distribution cauchy = MarginalCauchy({1.0, 1.0, 1.0}, {0.5, 0.5, 0.5});
  CHECK(uncertainty_score(cauchy, ScoreKind::PairwiseCauchyEntropy) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("3-class pairwise gaussian entropy hand case") {
  // locs (1, 0, 0), scales (1, 1, 1), independent: P(X0 > Xj) = Phi(1/sqrt 2),
  // P(X1 > X0) = Phi(-1/sqrt 2), P(X1 > X2) = 1/2; entropy recomputed here.
  const double p01 = std_normal_cdf(1.0 / std::sqrt(2.0));
  const double p10 = std_normal_cdf(-1.0 / std::sqrt(2.0));
  double tilde[3] = {p01, 0.5 * (p10 + 0.5), 0.5 * (p10 + 0.5)};
  const double sum = tilde[0] + tilde[1] + tilde[2];
  double entropy = 0.0;
  for (double t : tilde) entropy -= (t / sum) * std::log(t / sum);
  const Distribution d = MarginalGaussian({1.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  CHECK(uncertainty_score(d, ScoreKind::PairwiseGaussEntropy) ==
        doctest::Approx(-entropy).epsilon(1e-10));
}
