#pragma once

#include <span>

#include "sdp/dist.hpp"
#include "sdp/tape.hpp"

namespace sdp {

struct InvalidCovariance : std::runtime_error {
  explicit InvalidCovariance(const std::string& what) : std::runtime_error(what) {}
};

struct NonpositiveScale : std::runtime_error {
  explicit NonpositiveScale(const std::string& what) : std::runtime_error(what) {}
};

// P(X > Y) for jointly Gaussian scores with Var(X)=var_x, Var(Y)=var_y,
// Cov(X,Y)=cov_xy.  A zero-variance difference degenerates to a step
// function with value 1/2 at equality.
double pairwise_gaussian_prob(double mu_x, double mu_y, double var_x, double var_y,
                              double cov_xy);

// P(X > Y) for independent Cauchy scores.
double pairwise_cauchy_prob(double x_x, double gamma_x, double x_y, double gamma_y);

// Mean over false classes j of -log P(X_label > X_j); probabilities are
// clamped to [1e-12, 1 - 1e-12] before the log.
double pairwise_distribution_loss(const Distribution& output, std::size_t label);

double gaussian_nll(const FullGaussian& pred, const Vector& y);
double gaussian_nll(const MarginalGaussian& pred, const Vector& y);
double cauchy_nll(const MarginalCauchy& pred, const Vector& y);
double softmax_ce(const Vector& logits, std::size_t label);

// Tape-recorded variants used on the training path (marginal propagation
// feeds these); gradients flow through locations and scales.
Var tape_pairwise_gaussian_loss(GradTape& tape, std::span<const Var> locs,
                                std::span<const Var> scales, std::size_t label);
Var tape_pairwise_cauchy_loss(GradTape& tape, std::span<const Var> locs,
                              std::span<const Var> scales, std::size_t label);
Var tape_softmax_ce(GradTape& tape, std::span<const Var> logits, std::size_t label);
Var tape_gaussian_nll_1d(GradTape& tape, Var mu, Var var, double y);
Var tape_cauchy_nll_1d(GradTape& tape, Var x0, Var gamma, double y);

}  // namespace sdp
