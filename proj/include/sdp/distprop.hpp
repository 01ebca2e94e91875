#pragma once

#include <cstdint>

#include "sdp/dist.hpp"
#include "sdp/network.hpp"

namespace sdp {

struct IncompatibleMethod : std::runtime_error {
  explicit IncompatibleMethod(const std::string& what) : std::runtime_error(what) {}
};

struct NegativeWeight : std::runtime_error {
  explicit NegativeWeight(const std::string& what) : std::runtime_error(what) {}
};

// Exact affine pushforward (reproductive property).
FullGaussian push_affine(const FullGaussian& d, const Matrix& w, const Vector& b);
MarginalGaussian push_affine(const MarginalGaussian& d, const Matrix& w, const Vector& b);
MarginalCauchy push_affine(const MarginalCauchy& d, const Matrix& w, const Vector& b);

enum class StableMode {
  Exact,      // requires w >= 0 elementwise, or beta = 0 (symmetric case)
  UpperBound  // any real w; scale bounds the true spread from above
};

// loc -> loc W^T + b, scale -> (scale^alpha |W|^T)^(1/alpha).
MarginalStable push_affine_stable(const MarginalStable& d, const Matrix& w,
                                  const Vector& b, StableMode mode);

// Local linearization at the location: scale is rescaled by |f'(loc)|
// (ReLU specializes to pass-through for loc >= 0 and a point mass otherwise).
MarginalGaussian push_activation(const MarginalGaussian& d, ActKind kind, double slope = 0.01);
MarginalCauchy push_activation(const MarginalCauchy& d, ActKind kind, double slope = 0.01);
FullGaussian push_activation(const FullGaussian& d, ActKind kind, double slope = 0.01);

// Per group: location max; scale taken from the argmax slot (lowest index on ties).
MarginalGaussian push_maxpool(const MarginalGaussian& d, std::size_t group_size);
MarginalCauchy push_maxpool(const MarginalCauchy& d, std::size_t group_size);

// Assumed-density-filtering baseline for ReLU (exact first two moments of
// ReLU(N(mu, sigma^2)), refit as a Gaussian per dimension).
MarginalGaussian moment_match_relu(const MarginalGaussian& d);

// Numerical moment matching for the logistic sigmoid (quadrature).
MarginalGaussian moment_match_sigmoid_numeric(const MarginalGaussian& d);

struct PropagationMethod {
  enum class Kind {
    SdpFull,
    SdpMarginalGaussian,
    SdpMarginalCauchy,
    MarginalMomentMatch,
    McEstimate
  };
  Kind kind = Kind::SdpFull;
  std::size_t mc_samples = 100;     // McEstimate only, >= 2
  bool cauchy_via_jacobian = false; // SdpMarginalCauchy: gamma_y = gamma |J(f)|^T
  bool sigmoid_numeric_mm = false;  // MarginalMomentMatch: quadrature at sigmoids
};

// Push `input` through the whole network with the chosen method.  `rng` is
// consumed only by McEstimate.
Distribution propagate(const Network& net, const Distribution& input,
                       const PropagationMethod& method, SeededRng& rng);

/// Mean/variance-head network pair sharing a trunk; the variance head
/// predicts log-variances (exponentiated on read).
struct PnnNetwork {
  Network trunk;     // may be empty (input feeds both heads directly)
  Network mean_head;
  Network logvar_head;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  Network mean_path() const;  // trunk + mean head as one network
  Vector predict_mean(const Vector& x) const;
  Vector predict_var(const Vector& x) const;
};

// N(f_mu(x), diag(f_var(x)) + J(f_mu) S_x J(f_mu)^T): input uncertainty
// propagated through the mean path, added to the predicted output noise.
FullGaussian pnn_sdp_combine(const PnnNetwork& pnn, const Vector& x,
                             const PsdMatrix& input_cov);

}  // namespace sdp
