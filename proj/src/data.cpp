#include "sdp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace sdp {

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  SeededRng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.next_u64() % i;
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

void standardize_by_train(Dataset& train, Dataset& val, Dataset& test) {
  const std::size_t d = train.feature_dim();
  Vector mean(d, 0.0), stddev(d, 0.0);
  for (const auto& x : train.features)
    for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
  for (double& m : mean) m /= static_cast<double>(train.size());
  for (const auto& x : train.features)
    for (std::size_t i = 0; i < d; ++i) {
      const double c = x[i] - mean[i];
      stddev[i] += c * c;
    }
  for (double& s : stddev)
    s = std::max(std::sqrt(s / static_cast<double>(train.size())), 1e-8);
  for (Dataset* ds : {&train, &val, &test}) {
    ds->feat_mean = mean;
    ds->feat_std = stddev;
    for (auto& x : ds->features)
      for (std::size_t i = 0; i < d; ++i) x[i] = (x[i] - mean[i]) / stddev[i];
  }
}

void scale_targets_by_train(Dataset& train, Dataset& val, Dataset& test) {
  double lo = train.targets[0], hi = train.targets[0];
  for (double y : train.targets) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  const double range = std::max(hi - lo, 1e-12);
  for (Dataset* ds : {&train, &val, &test}) {
    ds->y_min = lo;
    ds->y_max = hi;
    ds->y_range = 1.0;  // scaled units
    for (double& y : ds->targets) y = (y - lo) / range;
  }
}

}  // namespace

DataSplit split_regression(std::vector<Vector> features, Vector targets,
                           std::uint64_t split_seed, std::array<double, 3> fractions) {
  const std::size_t n = features.size();
  const auto idx = shuffled_indices(n, split_seed);
  const std::size_t n_train = static_cast<std::size_t>(fractions[0] * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(fractions[1] * static_cast<double>(n));
  DataSplit out;
  for (std::size_t k = 0; k < n; ++k) {
    Dataset& ds = k < n_train ? out.train : (k < n_train + n_val ? out.val : out.test);
    ds.features.push_back(std::move(features[idx[k]]));
    ds.targets.push_back(targets[idx[k]]);
  }
  standardize_by_train(out.train, out.val, out.test);
  scale_targets_by_train(out.train, out.val, out.test);
  return out;
}

DataSplit load_csv(const std::string& path, const std::string& target_column,
                   std::uint64_t split_seed, std::array<double, 3> split_fractions) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file: " + path);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) header.push_back(col);
  }
  const auto it = std::find(header.begin(), header.end(), target_column);
  if (it == header.end()) throw MissingColumn("no column named " + target_column);
  const std::size_t target_idx = static_cast<std::size_t>(it - header.begin());

  std::vector<Vector> features;
  Vector targets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector row;
    std::size_t col = 0;
    double target = 0.0;
    while (std::getline(ss, cell, ',')) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("non-numeric cell at line " + std::to_string(line_no));
      }
      if (col == target_idx)
        target = v;
      else
        row.push_back(v);
      ++col;
    }
    if (col != header.size())
      throw ParseError("wrong column count at line " + std::to_string(line_no));
    features.push_back(std::move(row));
    targets.push_back(target);
  }
  if (features.empty()) throw ParseError("no data rows in " + path);
  return split_regression(std::move(features), std::move(targets), split_seed,
                          split_fractions);
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  std::uint8_t b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw TruncatedFile(path);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                             static_cast<std::uint8_t>(v >> 16),
                             static_cast<std::uint8_t>(v >> 8),
                             static_cast<std::uint8_t>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw TruncatedFile("cannot open: " + images_path);
  if (read_be32(img, images_path) != 0x00000803u)
    throw BadMagic("bad image magic in " + images_path);
  const std::uint32_t n_img = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw TruncatedFile("cannot open: " + labels_path);
  if (read_be32(lab, labels_path) != 0x00000801u)
    throw BadMagic("bad label magic in " + labels_path);
  const std::uint32_t n_lab = read_be32(lab, labels_path);
  if (n_img != n_lab) throw CountMismatch("image/label counts differ");

  std::size_t n = n_img;
  if (limit > 0) n = std::min<std::size_t>(n, limit);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

  Dataset ds;
  ds.classification = true;
  std::vector<std::uint8_t> buf(pixels);
  for (std::size_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels)))
      throw TruncatedFile("image data truncated in " + images_path);
    Vector x(pixels);
    for (std::size_t p = 0; p < pixels; ++p) x[p] = buf[p] / 255.0;
    ds.features.push_back(std::move(x));
    std::uint8_t l;
    if (!lab.read(reinterpret_cast<char*>(&l), 1))
      throw TruncatedFile("label data truncated in " + labels_path);
    ds.labels.push_back(l);
  }
  return ds;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::vector<std::uint8_t>>& images,
               const std::vector<std::uint8_t>& labels, std::size_t rows,
               std::size_t cols) {
  if (images.size() != labels.size()) throw CountMismatch("write_idx");
  std::ofstream img(images_path, std::ios::binary);
  write_be32(img, 0x00000803u);
  write_be32(img, static_cast<std::uint32_t>(images.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  for (const auto& im : images)
    img.write(reinterpret_cast<const char*>(im.data()),
              static_cast<std::streamsize>(im.size()));
  std::ofstream lab(labels_path, std::ios::binary);
  write_be32(lab, 0x00000801u);
  write_be32(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

Dataset make_blobs(std::size_t n_per_class, std::uint64_t seed, double spread) {
  // Class centroids picked to loosely echo small botanical datasets:
  // partially overlapping clusters in 4 dimensions.
  static const double centroids[3][4] = {
      {5.0, 3.4, 1.5, 0.2}, {5.9, 2.8, 4.3, 1.3}, {6.6, 3.0, 5.6, 2.0}};
  static const double widths[3][4] = {
      {0.35, 0.38, 0.17, 0.10}, {0.52, 0.31, 0.47, 0.20}, {0.64, 0.32, 0.55, 0.27}};
  SeededRng rng(seed);
  Dataset ds;
  ds.classification = true;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Vector x(4);
      for (std::size_t k = 0; k < 4; ++k)
        x[k] = centroids[c][k] + spread * widths[c][k] / 0.4 * rng.normal();
      ds.features.push_back(std::move(x));
      ds.labels.push_back(c);
    }
  // Deterministic interleave so contiguous splits are class-balanced.
  const auto idx = shuffled_indices(ds.size(), seed ^ 0x5bd1e995u);
  Dataset out;
  out.classification = true;
  for (std::size_t k : idx) {
    out.features.push_back(ds.features[k]);
    out.labels.push_back(ds.labels[k]);
  }
  return out;
}

double heteroscedastic_noise_std(double x) {
  return 0.05 + 0.2 * 0.5 * (1.0 + std::sin(2.0 * x));
}

void make_heteroscedastic(std::size_t n, std::uint64_t seed, std::vector<Vector>& x,
                          Vector& y) {
  SeededRng rng(seed);
  x.assign(n, Vector(1));
  y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = -3.0 + 6.0 * rng.uniform();
    x[i][0] = xi;
    y[i] = std::sin(xi) + heteroscedastic_noise_std(xi) * rng.normal();
  }
}

Dataset make_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  SeededRng rng(seed);
  Dataset ds;
  ds.classification = true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % 2;
    const double t = std::numbers::pi * rng.uniform();
    Vector x(2);
    if (c == 0) {
      x[0] = std::cos(t);
      x[1] = std::sin(t);
    } else {
      x[0] = 1.0 - std::cos(t);
      x[1] = 0.5 - std::sin(t);
    }
    x[0] += noise * rng.normal();
    x[1] += noise * rng.normal();
    ds.features.push_back(std::move(x));
    ds.labels.push_back(c);
  }
  return ds;
}

void make_glyphs(bool letters, std::size_t n, std::uint64_t seed,
                 std::vector<std::vector<std::uint8_t>>& images,
                 std::vector<std::uint8_t>& labels) {
  SeededRng rng(seed);
  images.assign(n, std::vector<std::uint8_t>(28 * 28, 0));
  labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = rng.next_u64() % (letters ? 26 : 10);
    labels[i] = static_cast<std::uint8_t>(cls);
    const double angle = letters
                             ? 2.0 * std::numbers::pi * static_cast<double>(cls) / 26.0
                             : 2.0 * std::numbers::pi * static_cast<double>(cls) / 10.0;
    // Digits sit on the radius-8 ring; letters use radii 3 and 12.
    const double radius = letters ? (cls % 2 == 0 ? 3.0 : 12.0) : 8.0;
    const double cx = 13.5 + radius * std::cos(angle) + 0.5 * rng.normal();
    const double cy = 13.5 + radius * std::sin(angle) + 0.5 * rng.normal();
    for (int r = 0; r < 28; ++r)
      for (int c = 0; c < 28; ++c) {
        const double dx = c - cx, dy = r - cy;
        const double v = 255.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * 2.5 * 2.5));
        const double noisy = v + 12.0 * rng.normal();
        images[i][static_cast<std::size_t>(r) * 28 + c] =
            static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
      }
  }
}

Dataset glyph_dataset(bool letters, std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<std::uint8_t>> images;
  std::vector<std::uint8_t> labels;
  make_glyphs(letters, n, seed, images, labels);
  Dataset ds;
  ds.classification = true;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(28 * 28);
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = images[i][p] / 255.0;
    ds.features.push_back(std::move(x));
    ds.labels.push_back(labels[i]);
  }
  return ds;
}

}  // namespace sdp
