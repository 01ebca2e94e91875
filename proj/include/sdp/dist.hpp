#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sdp/matrix.hpp"
#include "sdp/rng.hpp"

namespace sdp {

/// Independent Gaussian per dimension; scale 0 is a point mass.
struct MarginalGaussian {
  Vector loc;    // mu
  Vector scale;  // sigma >= 0

  MarginalGaussian() = default;
  MarginalGaussian(Vector mu, Vector sigma);
  std::size_t dim() const { return loc.size(); }
};

struct FullGaussian {
  Vector mean;
  PsdMatrix cov;

  FullGaussian() = default;
  FullGaussian(Vector mu, PsdMatrix sigma);
  std::size_t dim() const { return mean.size(); }
};

struct MarginalCauchy {
  Vector loc;    // x0
  Vector scale;  // gamma >= 0

  MarginalCauchy() = default;
  MarginalCauchy(Vector x0, Vector gamma);
  std::size_t dim() const { return loc.size(); }
};

/// Marginal alpha-stable; only alpha in {1, 2} is sampled/verified, the
/// affine rules hold for all alpha in (0, 2].
struct MarginalStable {
  Vector loc;
  Vector scale;
  double alpha = 2.0;
  double beta = 0.0;  // skewness

  MarginalStable() = default;
  MarginalStable(Vector x0, Vector gamma, double a, double b);
  std::size_t dim() const { return loc.size(); }
};

using Distribution = std::variant<MarginalGaussian, FullGaussian, MarginalCauchy>;

std::size_t dist_dim(const Distribution& d);
Vector dist_location(const Distribution& d);

// i.i.d. samples drawn from the given rng stream.
std::vector<Vector> sample(const MarginalGaussian& d, std::size_t n, SeededRng& rng);
std::vector<Vector> sample(const FullGaussian& d, std::size_t n, SeededRng& rng);
std::vector<Vector> sample(const MarginalCauchy& d, std::size_t n, SeededRng& rng);
std::vector<Vector> sample(const Distribution& d, std::size_t n, SeededRng& rng);

// Chunked sampling: the sample set is a deterministic function of (seed,
// chunk partition) alone, so the OpenMP path and the serial reference
// produce byte-identical output regardless of thread count.
std::vector<Vector> sample_chunked(const Distribution& d, std::size_t n,
                                   std::uint64_t seed);
std::vector<Vector> sample_chunked_serial(const Distribution& d, std::size_t n,
                                          std::uint64_t seed);

}  // namespace sdp
