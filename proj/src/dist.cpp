#include "sdp/dist.hpp"

#include <cmath>
#include <stdexcept>

namespace sdp {

namespace {

void require_scales(const Vector& loc, const Vector& scale, const char* what) {
  if (loc.size() != scale.size()) throw DimMismatch(what);
  for (double s : scale)
    if (!(s >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative scale");
}

}  // namespace

MarginalGaussian::MarginalGaussian(Vector mu, Vector sigma)
    : loc(std::move(mu)), scale(std::move(sigma)) {
  require_scales(loc, scale, "MarginalGaussian");
}

FullGaussian::FullGaussian(Vector mu, PsdMatrix sigma)
    : mean(std::move(mu)), cov(std::move(sigma)) {
  if (mean.size() != cov.dim()) throw DimMismatch("FullGaussian");
}

MarginalCauchy::MarginalCauchy(Vector x0, Vector gamma)
    : loc(std::move(x0)), scale(std::move(gamma)) {
  require_scales(loc, scale, "MarginalCauchy");
}

MarginalStable::MarginalStable(Vector x0, Vector gamma, double a, double b)
    : loc(std::move(x0)), scale(std::move(gamma)), alpha(a), beta(b) {
  require_scales(loc, scale, "MarginalStable");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("MarginalStable: alpha");
  if (!(beta >= -1.0 && beta <= 1.0)) throw std::invalid_argument("MarginalStable: beta");
}

std::size_t dist_dim(const Distribution& d) {
  return std::visit([](const auto& x) { return x.dim(); }, d);
}

Vector dist_location(const Distribution& d) {
  if (const auto* g = std::get_if<MarginalGaussian>(&d)) return g->loc;
  if (const auto* f = std::get_if<FullGaussian>(&d)) return f->mean;
  return std::get<MarginalCauchy>(d).loc;
}

std::vector<Vector> sample(const MarginalGaussian& d, std::size_t n, SeededRng& rng) {
  std::vector<Vector> out(n, Vector(d.dim()));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < d.dim(); ++i)
      out[k][i] = d.scale[i] == 0.0 ? d.loc[i] : d.loc[i] + d.scale[i] * rng.normal();
  return out;
}

std::vector<Vector> sample(const FullGaussian& d, std::size_t n, SeededRng& rng) {
  const Matrix l = psd_factor(d.cov);
  const std::size_t dim = d.dim();
  std::vector<Vector> out(n, Vector(dim));
  Vector z(dim);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < dim; ++i) z[i] = rng.normal();
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = d.mean[i];
      for (std::size_t j = 0; j <= i; ++j) acc += l(i, j) * z[j];
      out[k][i] = acc;
    }
  }
  return out;
}

std::vector<Vector> sample(const MarginalCauchy& d, std::size_t n, SeededRng& rng) {
  std::vector<Vector> out(n, Vector(d.dim()));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < d.dim(); ++i)
      out[k][i] = d.scale[i] == 0.0 ? d.loc[i] : d.loc[i] + d.scale[i] * rng.cauchy();
  return out;
}

std::vector<Vector> sample(const Distribution& d, std::size_t n, SeededRng& rng) {
  return std::visit([&](const auto& x) { return sample(x, n, rng); }, d);
}

namespace {
constexpr std::size_t kChunk = 1 << 14;
}

std::vector<Vector> sample_chunked(const Distribution& d, std::size_t n,
                                   std::uint64_t seed) {
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Vector> out(n);
#pragma omp parallel for schedule(dynamic)
  for (long long c = 0; c < static_cast<long long>(n_chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t len = std::min(kChunk, n - begin);
    SeededRng rng = SeededRng::derived(seed, static_cast<std::uint64_t>(c));
    auto chunk = sample(d, len, rng);
    for (std::size_t i = 0; i < len; ++i) out[begin + i] = std::move(chunk[i]);
  }
  return out;
}

std::vector<Vector> sample_chunked_serial(const Distribution& d, std::size_t n,
                                          std::uint64_t seed) {
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Vector> out(n);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    const std::size_t begin = c * kChunk;
    const std::size_t len = std::min(kChunk, n - begin);
    SeededRng rng = SeededRng::derived(seed, c);
    auto chunk = sample(d, len, rng);
    for (std::size_t i = 0; i < len; ++i) out[begin + i] = std::move(chunk[i]);
  }
  return out;
}

}  // namespace sdp
