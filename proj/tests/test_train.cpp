#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sdp/train.hpp"

using namespace sdp;

namespace {

Dataset separable_toy(std::size_t n_per_class, std::uint64_t seed) {
  SeededRng rng(seed);
  Dataset d;
  d.classification = true;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double cx = c == 0 ? -2.0 : 2.0;
      d.features.push_back({cx + 0.3 * rng.normal(), 0.3 * rng.normal()});
      d.labels.push_back(c);
    }
  }
  return d;
}

Network fresh_net(std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
                  std::uint64_t seed) {
  ShapeSpec spec;
  spec.input_dim = in;
  spec.hidden = std::move(hidden);
  spec.output_dim = out;
  SeededRng rng(seed);
  return init_params(spec, rng);
}

}  // namespace

TEST_CASE("tape forward point matches the plain forward pass") {
  const Network net = fresh_net(3, {8, 8}, 2, 5);
  const Vector x = {0.4, -0.9, 1.2};
  GradTape tape;
  const TapeParams tp = TapeParams::record(tape, net);
  const auto out = tape_forward_point(tape, net, tp, x);
  const Vector ref = forward(net, x);
  REQUIRE(out.size() == 2);
  CHECK(out[0].val() == doctest::Approx(ref[0]).epsilon(1e-12));
  CHECK(out[1].val() == doctest::Approx(ref[1]).epsilon(1e-12));
}

TEST_CASE("tape marginal propagation matches the analytic rules") {
  const Network net = fresh_net(3, {8, 8}, 2, 7);
  const Vector x = {0.2, 0.8, -0.5};
  const double sigma = 0.7;

  SeededRng dummy(0);
  PropagationMethod mg{PropagationMethod::Kind::SdpMarginalGaussian};
  const auto ref_g = std::get<MarginalGaussian>(
      propagate(net, MarginalGaussian(x, Vector(3, sigma)), mg, dummy));
  GradTape tape;
  const TapeParams tp = TapeParams::record(tape, net);
  std::vector<Var> locs, scales;
  tape_forward_marginal_gauss(tape, net, tp, x, sigma, locs, scales);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(locs[i].val() == doctest::Approx(ref_g.loc[i]).epsilon(1e-10));
    CHECK(scales[i].val() == doctest::Approx(ref_g.scale[i]).epsilon(1e-10));
  }

  PropagationMethod mc{PropagationMethod::Kind::SdpMarginalCauchy};
  const auto ref_c = std::get<MarginalCauchy>(
      propagate(net, MarginalCauchy(x, Vector(3, sigma)), mc, dummy));
  GradTape tape2;
  const TapeParams tp2 = TapeParams::record(tape2, net);
  tape_forward_marginal_cauchy(tape2, net, tp2, x, sigma, locs, scales);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(locs[i].val() == doctest::Approx(ref_c.loc[i]).epsilon(1e-10));
    CHECK(scales[i].val() == doctest::Approx(ref_c.scale[i]).epsilon(1e-10));
  }
}

TEST_CASE("every loss gradient matches central finite differences") {
  // Small smooth-activation nets keep the losses differentiable at the
  // probe point; tolerance relative 1e-4.
  struct Case {
    LossSpec::Kind kind;
    std::size_t out_dim;
    bool classification;
  };
  const Case cases[] = {
      {LossSpec::Kind::SoftmaxCE, 3, true},
      {LossSpec::Kind::PairwiseGauss, 3, true},
      {LossSpec::Kind::PairwiseCauchy, 3, true},
      {LossSpec::Kind::GaussNllSdp, 1, false},
      {LossSpec::Kind::GaussNllPnn, 2, false},
      {LossSpec::Kind::GaussNllSdpPnn, 2, false},
      {LossSpec::Kind::CauchyNllSdp, 1, false},
  };
  for (const auto& c : cases) {
    CAPTURE(static_cast<int>(c.kind));
    Network net = fresh_net(3, {6}, c.out_dim, 17 + static_cast<int>(c.kind));
    const Vector x = {0.6, -0.4, 1.1};
    LossSpec spec;
    spec.kind = c.kind;
    spec.input_scale = 0.4;
    const double target = 0.3;
    const std::size_t label = 1;

    GradTape tape;
    const TapeParams tp = TapeParams::record(tape, net);
    Var loss = tape_sample_loss(tape, net, tp, x, target, label, spec);
    tape.backward(loss);

    Vector params;
    get_params(net, params);
    SeededRng pick(41);
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t i = pick.next_u64() % params.size();
      const double h = 1e-6;
      Vector up = params, dn = params;
      up[i] += h;
      dn[i] -= h;
      Network nu = net, nd = net;
      set_params(nu, up);
      set_params(nd, dn);
      const double fd = (sample_loss_value(nu, x, target, label, spec) -
                         sample_loss_value(nd, x, target, label, spec)) /
                        (2.0 * h);
      const double got = tape.gradient(tp.flat[i]);
      CHECK(got == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("closed-form softmax-ce gradient matches the tape gradient") {
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    Network net = fresh_net(4, {10, 8}, trial % 2 ? 6 : 3, 100 + trial);
    if (trial % 2) {  // exercise the pooled routing too
      net.layers.push_back(MaxPoolLayer{2});
      net.output_dim = 3;
    }
    SeededRng rng(200 + trial);
    const Vector x = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const std::size_t label = trial % net.output_dim;
    LossSpec spec;  // SoftmaxCE

    GradTape tape;
    const TapeParams tp = TapeParams::record(tape, net);
    Var loss = tape_sample_loss(tape, net, tp, x, 0.0, label, spec);
    tape.backward(loss);

    Vector grad(param_count(net), 0.0);
    const double value = softmax_ce_grad(net, x, label, 1.0, grad);
    CHECK(value == doctest::Approx(loss.val()).epsilon(1e-12));
    for (std::size_t p = 0; p < grad.size(); ++p)
      CHECK(grad[p] == doctest::Approx(tape.gradient(tp.flat[p])).epsilon(1e-10));
  }
}

TEST_CASE("zero epochs leave the parameters untouched") {
  Network net = fresh_net(2, {4}, 2, 23);
  Vector before;
  get_params(net, before);
  TrainConfig cfg;
  cfg.epochs = 0;
  const Dataset toy = separable_toy(10, 1);
  LossSpec spec;
  const TrainHistory h = train(net, toy, spec, cfg);
  Vector after;
  get_params(net, after);
  CHECK(before == after);
  CHECK(h.train_loss.empty());
}

TEST_CASE("same seed gives identical training histories") {
  const Dataset toy = separable_toy(20, 2);
  LossSpec spec;
  spec.kind = LossSpec::Kind::PairwiseGauss;
  spec.input_scale = 0.3;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 77;

  Network a = fresh_net(2, {8}, 2, 31);
  Network b = fresh_net(2, {8}, 2, 31);
  const TrainHistory ha = train(a, toy, spec, cfg);
  const TrainHistory hb = train(b, toy, spec, cfg);
  CHECK(ha.train_loss == hb.train_loss);
  Vector pa, pb;
  get_params(a, pa);
  get_params(b, pb);
  CHECK(pa == pb);
}

TEST_CASE("linearly separable toy reaches full accuracy within 200 epochs") {
  const Dataset toy = separable_toy(25, 3);
  for (auto kind : {LossSpec::Kind::SoftmaxCE, LossSpec::Kind::PairwiseGauss}) {
    Network net = fresh_net(2, {8}, 2, 43);
    LossSpec spec;
    spec.kind = kind;
    spec.input_scale = 0.3;
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 5;
    cfg.adam.lr = 1e-2;
    train(net, toy, spec, cfg);
    CHECK(classification_accuracy(net, toy) == 1.0);
  }
}

TEST_CASE("validation history tracks the held-out loss") {
  const Dataset toy = separable_toy(20, 6);
  const Dataset val = separable_toy(10, 7);
  Network net = fresh_net(2, {6}, 2, 51);
  LossSpec spec;
  TrainConfig cfg;
  cfg.epochs = 3;
  const TrainHistory h = train(net, toy, spec, cfg, &val);
  CHECK(h.train_loss.size() == 3);
  CHECK(h.val_loss.size() == 3);
  for (double v : h.val_loss) CHECK(std::isfinite(v));
}
