#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sdp/distprop.hpp"

using namespace sdp;

namespace {

Matrix row(std::initializer_list<double> vals) {
  Matrix w(1, vals.size());
  std::size_t i = 0;
  for (double v : vals) w.data[i++] = v;
  return w;
}

Network single_dense(Matrix w, Vector b) {
  Network net;
  net.input_dim = w.cols;
  net.output_dim = w.rows;
  net.layers.push_back(DenseLayer{std::move(w), std::move(b)});
  return net;
}

}  // namespace

TEST_CASE("gaussian affine rule: variances add in quadrature") {
  const MarginalGaussian in({0.0, 0.0}, {1.0, 1.0});
  const auto out = push_affine(in, row({1.0, 1.0}), {0.0});
  CHECK(out.scale[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  const auto out2 = push_affine(in, row({3.0, -4.0}), {2.0});
  CHECK(out2.loc[0] == doctest::Approx(2.0));
  CHECK(out2.scale[0] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("cauchy affine rule: scales add with absolute weights") {
  const MarginalCauchy in({0.0, 0.0}, {1.0, 1.0});
  const auto out = push_affine(in, row({1.0, 1.0}), {0.0});
  CHECK(out.scale[0] == doctest::Approx(2.0).epsilon(1e-12));
  const auto outn = push_affine(in, row({1.0, -1.0}), {0.0});
  CHECK(outn.scale[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("full gaussian affine rule transforms the covariance congruently") {
  Matrix cov(2, 2);
  cov(0, 0) = 1.0;
  cov(0, 1) = cov(1, 0) = 0.5;
  cov(1, 1) = 2.0;
  const FullGaussian in({1.0, -1.0}, PsdMatrix(cov));
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 1.0;
  w(1, 0) = 0.0;
  w(1, 1) = 2.0;
  const auto out = push_affine(in, w, {0.0, 1.0});
  CHECK(out.mean[0] == doctest::Approx(0.0));
  CHECK(out.mean[1] == doctest::Approx(-1.0));
  // W S W^T computed by hand.
  CHECK(out.cov(0, 0) == doctest::Approx(4.0));
  CHECK(out.cov(0, 1) == doctest::Approx(5.0));
  CHECK(out.cov(1, 1) == doctest::Approx(8.0));
}

TEST_CASE("stable rule reduces to gaussian at alpha 2 and cauchy at alpha 1") {
  SeededRng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w(3, 4);
    for (auto& v : w.data) v = rng.normal();
    Vector b = {0.1, -0.2, 0.3};
    Vector loc(4), scale(4);
    for (auto& v : loc) v = rng.normal();
    for (auto& v : scale) v = std::abs(rng.normal()) + 0.1;

    const auto g = push_affine(MarginalGaussian(loc, scale), w, b);
    const auto s2 = push_affine_stable(MarginalStable(loc, scale, 2.0, 0.0), w, b,
                                       StableMode::Exact);
    const auto c = push_affine(MarginalCauchy(loc, scale), w, b);
    const auto s1 = push_affine_stable(MarginalStable(loc, scale, 1.0, 0.0), w, b,
                                       StableMode::Exact);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(g.scale[i] - s2.scale[i]) < 1e-12 * (1.0 + g.scale[i]));
      CHECK(std::abs(c.scale[i] - s1.scale[i]) < 1e-12 * (1.0 + c.scale[i]));
      CHECK(std::abs(g.loc[i] - s2.loc[i]) < 1e-12);
    }
  }
}

TEST_CASE("stable rule at alpha 1.5") {
  const auto out = push_affine_stable(MarginalStable({0.0, 0.0}, {1.0, 1.0}, 1.5, 0.0),
                                      row({1.0, 1.0}), {0.0}, StableMode::Exact);
  CHECK(out.scale[0] == doctest::Approx(std::pow(2.0, 2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("skewed stable with negative weights needs the upper bound mode") {
  const MarginalStable skew({0.0}, {1.0}, 1.5, 0.5);
  CHECK_THROWS_AS(
      push_affine_stable(skew, row({-1.0}), {0.0}, StableMode::Exact), NegativeWeight);
  const auto ub = push_affine_stable(skew, row({-1.0}), {0.0}, StableMode::UpperBound);
  CHECK(ub.scale[0] == doctest::Approx(1.0));
}

TEST_CASE("relu propagation branches") {
  const auto pos = push_activation(MarginalGaussian({2.0}, {0.5}), ActKind::ReLU);
  CHECK(pos.loc[0] == 2.0);
  CHECK(pos.scale[0] == 0.5);
  const auto neg = push_activation(MarginalGaussian({-2.0}, {0.5}), ActKind::ReLU);
  CHECK(neg.loc[0] == 0.0);
  CHECK(neg.scale[0] == 0.0);
  const auto zero = push_activation(MarginalGaussian({0.0}, {0.5}), ActKind::ReLU);
  CHECK(zero.loc[0] == 0.0);
  CHECK(zero.scale[0] == 0.5);  // pass-through at the kink
}

TEST_CASE("sigmoid linearization at zero") {
  const auto out = push_activation(MarginalGaussian({0.0}, {1.0}), ActKind::Sigmoid);
  CHECK(out.loc[0] == doctest::Approx(0.5));
  CHECK(out.scale[0] == doctest::Approx(0.25));
}

TEST_CASE("maxpool propagation tracks the argmax slot") {
  const auto out = push_maxpool(MarginalGaussian({3.0, 1.0, 2.0, 2.0}, {0.5, 9.0, 1.0, 7.0}), 2);
  CHECK(out.loc[0] == 3.0);
  CHECK(out.scale[0] == 0.5);
  CHECK(out.loc[1] == 2.0);
  CHECK(out.scale[1] == 1.0);  // tie: lowest index wins

  const auto one = push_maxpool(MarginalCauchy({5.0}, {0.3}), 1);
  CHECK(one.loc[0] == 5.0);
  CHECK(one.scale[0] == 0.3);
}

TEST_CASE("relu moment matching at the standard normal") {
  // Frozen closed-form moments of ReLU(N(0,1)): mean 1/sqrt(2 pi),
  // std sqrt(1/2 - 1/(2 pi)).
  const auto out = moment_match_relu(MarginalGaussian({0.0}, {1.0}));
  CHECK(out.loc[0] == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(out.scale[0] == doctest::Approx(std::sqrt(0.5 - 1.0 / (2.0 * std::numbers::pi)))
                            .epsilon(1e-12));
  CHECK(out.scale[0] == doctest::Approx(0.5838194).epsilon(1e-6));
}

TEST_CASE("relu moment matching against an mc oracle") {
  SeededRng rng(8);
  for (double mu : {-1.0, -0.2, 0.4, 1.5}) {
    const double sigma = 0.8;
    const std::size_t n = 2000000;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::max(0.0, mu + sigma * rng.normal());
      m1 += v;
      m2 += v * v;
    }
    m1 /= n;
    m2 /= n;
    const auto out = moment_match_relu(MarginalGaussian({mu}, {sigma}));
    CHECK(out.loc[0] == doctest::Approx(m1).epsilon(3e-3));
    CHECK(out.scale[0] == doctest::Approx(std::sqrt(m2 - m1 * m1)).epsilon(3e-3));
  }
}

TEST_CASE("sigmoid moment matching against an mc oracle") {
  SeededRng rng(18);
  const double mu = 0.5, sigma = 1.2;
  const std::size_t n = 1000000;
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = 1.0 / (1.0 + std::exp(-(mu + sigma * rng.normal())));
    m1 += v;
    m2 += v * v;
  }
  m1 /= n;
  m2 /= n;
  const auto out = moment_match_sigmoid_numeric(MarginalGaussian({mu}, {sigma}));
  CHECK(out.loc[0] == doctest::Approx(m1).epsilon(2e-3));
  CHECK(out.scale[0] == doctest::Approx(std::sqrt(m2 - m1 * m1)).epsilon(5e-3));
}

TEST_CASE("dirac input propagates to the forward pass exactly") {
  SeededRng init(3);
  ShapeSpec spec;
  spec.input_dim = 3;
  spec.hidden = {6, 6};
  spec.output_dim = 2;
  const Network net = init_params(spec, init);
  const Vector x = {0.4, -1.0, 0.7};
  const Vector y = forward(net, x);

  SeededRng rng(0);
  for (auto kind : {PropagationMethod::Kind::SdpFull,
                    PropagationMethod::Kind::SdpMarginalGaussian,
                    PropagationMethod::Kind::MarginalMomentMatch}) {
    PropagationMethod m;
    m.kind = kind;
    const Distribution out =
        propagate(net, MarginalGaussian(x, Vector(3, 0.0)), m, rng);
    const Vector loc = dist_location(out);
    for (std::size_t i = 0; i < 2; ++i) CHECK(loc[i] == doctest::Approx(y[i]).epsilon(1e-12));
  }
}

TEST_CASE("sdp full through an affine net matches the exact pushforward") {
  SeededRng wrng(12);
  Matrix w(3, 3);
  for (auto& v : w.data) v = wrng.normal();
  const Network net = single_dense(w, {0.0, 0.5, -0.5});

  Matrix cov(3, 3);
  cov(0, 0) = cov(1, 1) = cov(2, 2) = 1.0;
  cov(0, 1) = cov(1, 0) = 0.3;
  const FullGaussian in({1.0, 2.0, 3.0}, PsdMatrix(cov));

  SeededRng rng(0);
  PropagationMethod m;  // SdpFull
  const auto out = std::get<FullGaussian>(propagate(net, Distribution(in), m, rng));
  const auto exact = push_affine(in, w, {0.0, 0.5, -0.5});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(out.cov(i, j) == doctest::Approx(exact.cov(i, j)).epsilon(1e-10));
}

TEST_CASE("mc estimate with matching seed count recovers a gaussian closely") {
  SeededRng wrng(21);
  Matrix w(2, 2);
  for (auto& v : w.data) v = wrng.normal();
  const Network net = single_dense(w, {0.1, 0.2});
  Matrix cov = Matrix::identity(2);
  const FullGaussian in({0.5, -0.5}, PsdMatrix(cov));

  PropagationMethod m;
  m.kind = PropagationMethod::Kind::McEstimate;
  m.mc_samples = 200000;
  SeededRng rng(7);
  const auto out = std::get<FullGaussian>(propagate(net, Distribution(in), m, rng));
  const auto exact = push_affine(in, w, {0.1, 0.2});
  CHECK(out.mean[0] == doctest::Approx(exact.mean[0]).epsilon(0.02));
  CHECK(out.cov(0, 0) == doctest::Approx(exact.cov(0, 0)).epsilon(0.05));
  CHECK(out.cov(0, 1) == doctest::Approx(exact.cov(0, 1)).epsilon(0.1));
}

TEST_CASE("pnn sdp combine adds propagated input variance to predicted noise") {
  // Mean head: y = 2x; logvar head: constant log(0.25).
  PnnNetwork pnn;
  pnn.mean_head = single_dense(row({2.0}), {0.0});
  Matrix wv(1, 1);
  wv(0, 0) = 0.0;
  pnn.logvar_head = single_dense(wv, {std::log(0.25)});

  Matrix cov(1, 1);
  cov(0, 0) = 0.09;
  const FullGaussian out = pnn_sdp_combine(pnn, {1.5}, PsdMatrix(cov));
  CHECK(out.mean[0] == doctest::Approx(3.0));
  // var = 0.25 + 4 * 0.09
  CHECK(out.cov(0, 0) == doctest::Approx(0.61).epsilon(1e-10));
}
