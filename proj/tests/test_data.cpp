#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sdp/data.hpp"

using namespace sdp;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() / "sdp_test_data";
    std::filesystem::create_directories(path);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_CASE("csv loads, splits 6/2/2 and standardizes by train stats") {
  TempDir tmp;
  std::string csv = "a,b,y\n";
  for (int i = 0; i < 10; ++i)
    csv += std::to_string(i) + "," + std::to_string(i * 2) + "," +
           std::to_string(10 - i) + "\n";
  write_file(tmp.file("t.csv"), csv);

  const DataSplit s = load_csv(tmp.file("t.csv"), "y", 3);
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK(s.train.feature_dim() == 2);
  CHECK_FALSE(s.train.classification);

  // Train features standardized by train stats: mean 0, unit variance.
  for (std::size_t d = 0; d < 2; ++d) {
    double mean = 0.0, var = 0.0;
    for (const auto& f : s.train.features) mean += f[d];
    mean /= 6.0;
    for (const auto& f : s.train.features) var += (f[d] - mean) * (f[d] - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var / 6.0 == doctest::Approx(1.0).epsilon(1e-9));
  }
  // Train targets min-max scaled to [0, 1].
  double lo = 1e9, hi = -1e9;
  for (double t : s.train.targets) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
  CHECK(s.train.y_range == 1.0);

  const DataSplit again = load_csv(tmp.file("t.csv"), "y", 3);
  CHECK(s.train.features == again.train.features);
  CHECK(s.test.targets == again.test.targets);
  const DataSplit other = load_csv(tmp.file("t.csv"), "y", 4);
  CHECK(s.train.features != other.train.features);
}

TEST_CASE("csv error handling") {
  TempDir tmp;
  write_file(tmp.file("bad.csv"), "a,b,y\n1,2\n");
  CHECK_THROWS_AS(load_csv(tmp.file("bad.csv"), "y", 1), ParseError);
  write_file(tmp.file("col.csv"), "a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(tmp.file("col.csv"), "missing", 1), MissingColumn);
  write_file(tmp.file("nan.csv"), "a,y\nfoo,2\n");
  CHECK_THROWS_AS(load_csv(tmp.file("nan.csv"), "y", 1), ParseError);
}

TEST_CASE("constant features are floored, not divided to infinity") {
  TempDir tmp;
  std::string csv = "a,y\n";
  for (int i = 0; i < 10; ++i) csv += "5.0," + std::to_string(i) + "\n";
  write_file(tmp.file("c.csv"), csv);
  const DataSplit s = load_csv(tmp.file("c.csv"), "y", 1);
  for (const auto& f : s.train.features) CHECK(f[0] == 0.0);
}

TEST_CASE("idx round trip is bit exact") {
  TempDir tmp;
  std::vector<std::vector<std::uint8_t>> images;
  std::vector<std::uint8_t> labels;
  SeededRng rng(9);
  for (int i = 0; i < 4; ++i) {
    std::vector<std::uint8_t> img(28 * 28);
    for (auto& p : img) p = static_cast<std::uint8_t>(rng.next_u64() & 0xff);
    images.push_back(img);
    labels.push_back(static_cast<std::uint8_t>(i % 10));
  }
  write_idx(tmp.file("im.idx"), tmp.file("lb.idx"), images, labels, 28, 28);

  const Dataset d = load_idx(tmp.file("im.idx"), tmp.file("lb.idx"));
  REQUIRE(d.size() == 4);
  CHECK(d.classification);
  CHECK(d.feature_dim() == 784);
  for (int i = 0; i < 4; ++i) {
    CHECK(d.labels[i] == static_cast<std::size_t>(i % 10));
    for (int p = 0; p < 784; ++p)
      CHECK(d.features[i][p] == doctest::Approx(images[i][p] / 255.0).epsilon(1e-12));
  }

  const Dataset limited = load_idx(tmp.file("im.idx"), tmp.file("lb.idx"), 2);
  CHECK(limited.size() == 2);
}

TEST_CASE("idx error handling") {
  TempDir tmp;
  write_file(tmp.file("junk.idx"), std::string("\x00\x00\x08\x05", 4) + "rest");
  write_file(tmp.file("junk2.idx"), std::string("\x00\x00\x08\x01", 4));
  CHECK_THROWS_AS(load_idx(tmp.file("junk.idx"), tmp.file("junk2.idx")), BadMagic);

  // Valid magic but truncated payload.
  std::string trunc("\x00\x00\x08\x03", 4);
  trunc += std::string("\x00\x00\x00\x02", 4);  // claims 2 images
  trunc += std::string("\x00\x00\x00\x1c", 4);
  trunc += std::string("\x00\x00\x00\x1c", 4);
  trunc += std::string(10, '\0');  // far too few pixels
  write_file(tmp.file("trunc.idx"), trunc);
  std::string lbl("\x00\x00\x08\x01", 4);
  lbl += std::string("\x00\x00\x00\x02", 4);
  lbl += std::string(2, '\1');
  write_file(tmp.file("lbl.idx"), lbl);
  CHECK_THROWS_AS(load_idx(tmp.file("trunc.idx"), tmp.file("lbl.idx")), TruncatedFile);
}

TEST_CASE("idx image and label counts must agree") {
  TempDir tmp;
  std::vector<std::vector<std::uint8_t>> images(3, std::vector<std::uint8_t>(4, 0));
  std::vector<std::uint8_t> labels3 = {0, 1, 2};
  write_idx(tmp.file("a.idx"), tmp.file("b.idx"), images, labels3, 2, 2);
  std::vector<std::vector<std::uint8_t>> images2(2, std::vector<std::uint8_t>(4, 0));
  std::vector<std::uint8_t> labels2 = {0, 1};
  write_idx(tmp.file("c.idx"), tmp.file("d.idx"), images2, labels2, 2, 2);
  CHECK_THROWS_AS(load_idx(tmp.file("a.idx"), tmp.file("d.idx")), CountMismatch);
}

TEST_CASE("synthetic generators are deterministic and well formed") {
  const Dataset blobs = make_blobs(20, 5);
  CHECK(blobs.size() == 60);
  CHECK(blobs.feature_dim() == 4);
  CHECK(blobs.classification);
  for (auto l : blobs.labels) CHECK(l < 3);
  CHECK(make_blobs(20, 5).features == blobs.features);
  CHECK(make_blobs(20, 6).features != blobs.features);

  const Dataset moons = make_two_moons(100, 0.05, 3);
  CHECK(moons.size() == 100);
  CHECK(moons.feature_dim() == 2);
  for (auto l : moons.labels) CHECK(l < 2);

  std::vector<Vector> x;
  Vector y;
  make_heteroscedastic(200, 4, x, y);
  CHECK(x.size() == 200);
  for (const auto& v : x) {
    CHECK(v[0] >= -3.0);
    CHECK(v[0] <= 3.0);
  }
  CHECK(heteroscedastic_noise_std(0.0) > 0.0);
}

TEST_CASE("glyph datasets: digits in 10 classes, letters in 26, deterministic") {
  const Dataset digits = glyph_dataset(false, 50, 11);
  CHECK(digits.size() == 50);
  CHECK(digits.feature_dim() == 784);
  for (auto l : digits.labels) CHECK(l < 10);
  for (const auto& f : digits.features)
    for (double p : f) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  const Dataset again = glyph_dataset(false, 50, 11);
  CHECK(digits.features == again.features);

  const Dataset letters = glyph_dataset(true, 30, 12);
  for (auto l : letters.labels) CHECK(l < 26);
}
