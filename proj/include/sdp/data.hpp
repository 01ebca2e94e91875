#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "sdp/matrix.hpp"
#include "sdp/rng.hpp"

namespace sdp {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
struct MissingColumn : std::runtime_error {
  explicit MissingColumn(const std::string& what) : std::runtime_error(what) {}
};
struct BadMagic : std::runtime_error {
  explicit BadMagic(const std::string& what) : std::runtime_error(what) {}
};
struct TruncatedFile : std::runtime_error {
  explicit TruncatedFile(const std::string& what) : std::runtime_error(what) {}
};
struct CountMismatch : std::runtime_error {
  explicit CountMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct Dataset {
  std::vector<Vector> features;
  Vector targets;                   // regression targets (scaled)
  std::vector<std::size_t> labels;  // classification labels
  bool classification = false;

  // Normalization stats, always from the training split.
  Vector feat_mean, feat_std;
  double y_min = 0.0, y_max = 1.0;
  double y_range = 1.0;  // width of the scaled target range (1 after scaling)

  std::size_t size() const { return features.size(); }
  std::size_t feature_dim() const { return features.empty() ? 0 : features[0].size(); }
};

struct DataSplit {
  Dataset train, val, test;
};

// Numeric CSV with header.  Deterministic shuffled split; features
// standardized by train stats (std floor 1e-8); targets min-max scaled to
// [0, 1] by the train range.
DataSplit load_csv(const std::string& path, const std::string& target_column,
                   std::uint64_t split_seed,
                   std::array<double, 3> split_fractions = {0.6, 0.2, 0.2});

DataSplit split_regression(std::vector<Vector> features, Vector targets,
                           std::uint64_t split_seed, std::array<double, 3> fractions);

// IDX (MNIST-format) reader: big-endian magic 0x00000803 images /
// 0x00000801 labels, pixels scaled to [0, 1] and flattened.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);
void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::vector<std::uint8_t>>& images,
               const std::vector<std::uint8_t>& labels, std::size_t rows,
               std::size_t cols);

// Bundled synthetic generators (no external data redistributed).

// Iris-scale classification: Gaussian blobs, 4 features, 3 classes.
Dataset make_blobs(std::size_t n_per_class, std::uint64_t seed, double spread = 0.6);

// 1-D heteroscedastic regression: y = sin(x) + eps(x),
// eps ~ N(0, (0.05 + 0.2 (1+sin 2x)/2)^2), x ~ U[-3, 3].
void make_heteroscedastic(std::size_t n, std::uint64_t seed, std::vector<Vector>& x,
                          Vector& y);
double heteroscedastic_noise_std(double x);

// Two interleaved half-circles with Gaussian jitter.
Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed);

// 28x28 glyph images: digits are blobs on a radius-8 ring (10 angular
// classes); letters place the blob on other radii, so a digit classifier
// can never be right on them.
void make_glyphs(bool letters, std::size_t n, std::uint64_t seed,
                 std::vector<std::vector<std::uint8_t>>& images,
                 std::vector<std::uint8_t>& labels);

Dataset glyph_dataset(bool letters, std::size_t n, std::uint64_t seed);

}  // namespace sdp
