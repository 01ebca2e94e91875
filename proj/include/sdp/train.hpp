#pragma once

#include <cstdint>
#include <optional>

#include "sdp/data.hpp"
#include "sdp/distprop.hpp"
#include "sdp/losses.hpp"
#include "sdp/network.hpp"
#include "sdp/tape.hpp"

namespace sdp {

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

struct LossSpec {
  enum class Kind {
    SoftmaxCE,       // plain forward + cross-entropy
    PairwiseGauss,   // marginal Gaussian SDP + pairwise Gaussian loss
    PairwiseCauchy,  // marginal Cauchy SDP + pairwise Cauchy loss
    GaussNllSdp,     // 1-D regression: NLL of the SDP-propagated Gaussian
    GaussNllPnn,     // 2-output net [mean, logvar]: plain PNN NLL
    GaussNllSdpPnn,  // 2-output net: NLL with var = exp(logvar) + sdp_scale^2
    CauchyNllSdp     // 1-D regression: NLL of the SDP-propagated Cauchy
  };
  Kind kind = Kind::SoftmaxCE;
  double input_scale = 0.0;  // sigma (Gaussian) or gamma (Cauchy) at the input
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AdamConfig adam;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch, if a validation set is given
};

// Tape-recorded marginal propagation: the gradient path of every
// distribution-aware loss.  Returned pairs are (locations, scales).
struct TapeParams;
std::vector<Var> tape_forward_point(GradTape& tape, const Network& net,
                                    const TapeParams& params, const Vector& x);
void tape_forward_marginal_gauss(GradTape& tape, const Network& net,
                                 const TapeParams& params, const Vector& x,
                                 double sigma_in, std::vector<Var>& locs,
                                 std::vector<Var>& scales);
void tape_forward_marginal_cauchy(GradTape& tape, const Network& net,
                                  const TapeParams& params, const Vector& x,
                                  double gamma_in, std::vector<Var>& locs,
                                  std::vector<Var>& scales);

struct TapeParams {
  std::vector<Var> flat;  // same order as get_params / set_params
  struct DenseRef {
    std::size_t w_off = 0, rows = 0, cols = 0, b_off = 0;
  };
  std::vector<DenseRef> dense;

  static TapeParams record(GradTape& tape, const Network& net);
};

// Per-sample loss on the tape (classification target = label index,
// regression target = targets[i]).
Var tape_sample_loss(GradTape& tape, const Network& net, const TapeParams& params,
                     const Vector& x, double target, std::size_t label,
                     const LossSpec& spec);

// Loss of one sample without a tape (for validation curves).
double sample_loss_value(const Network& net, const Vector& x, double target,
                         std::size_t label, const LossSpec& spec);

// Closed-form softmax-CE sample gradient: a reverse sweep that accumulates
// scale * dL/dparams into grad (get_params order) and returns the loss.
// Same kink conventions as the tape; used by train() as a fast path so long
// classifier runs avoid rebuilding the tape per sample.
double softmax_ce_grad(const Network& net, const Vector& x, std::size_t label,
                       double scale, Vector& grad);

// Mini-batch Adam; deterministic under cfg.seed.  Throws NonFiniteLoss if
// the training loss leaves the reals.
TrainHistory train(Network& net, const Dataset& data, const LossSpec& spec,
                   const TrainConfig& cfg, const Dataset* val = nullptr);

double classification_accuracy(const Network& net, const Dataset& data);

}  // namespace sdp
