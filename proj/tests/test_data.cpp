#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "evasion/data.hpp"
#include "test_util.hpp"

using namespace evasion;
using testutil::TempDir;
using testutil::write_text;

namespace {

void put_be32(std::string& buf, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<char>((v >> s) & 0xff));
}

// Writes an IDX image/label pair with the given raw bytes.
void write_idx(const std::filesystem::path& img, const std::filesystem::path& lab,
               const std::vector<std::vector<unsigned char>>& images, const std::vector<unsigned char>& labels,
               std::uint32_t rows, std::uint32_t cols) {
  std::string a, b;
  put_be32(a, 0x803);
  put_be32(a, static_cast<std::uint32_t>(images.size()));
  put_be32(a, rows);
  put_be32(a, cols);
  for (const auto& im : images) a.append(im.begin(), im.end());
  put_be32(b, 0x801);
  put_be32(b, static_cast<std::uint32_t>(labels.size()));
  b.append(labels.begin(), labels.end());
  write_text(img, a);
  write_text(lab, b);
}

// Independent reader: counts labels per digit straight from the label file.
std::map<int, std::size_t> count_idx_labels(const std::filesystem::path& lab) {
  std::ifstream in(lab, std::ios::binary);
  unsigned char hdr[8];
  in.read(reinterpret_cast<char*>(hdr), 8);
  std::map<int, std::size_t> out;
  char c;
  while (in.get(c)) ++out[static_cast<unsigned char>(c)];
  return out;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("labels: -1/0 legitimate, +1 malicious, others rejected") {
  CHECK(label_from_value(-1.0) == Label::Legitimate);
  CHECK(label_from_value(0.0) == Label::Legitimate);
  CHECK(label_from_value(1.0) == Label::Malicious);
  CHECK_FALSE(label_from_value(2.0).has_value());
  CHECK_FALSE(label_from_value(0.5).has_value());
  CHECK(label_value(Label::Malicious) == 1.0);
}

TEST_CASE("dataset rejects wrong widths and non-finite values") {
  CHECK_THROWS_AS(Dataset(2, {{{1.0}, Label::Legitimate}}), DataError);
  CHECK_THROWS_AS(Dataset(1, {{{NAN}, Label::Legitimate}}), DataError);
  CHECK_THROWS_AS(Dataset(1, {{{INFINITY}, Label::Legitimate}}), DataError);
  CHECK_THROWS_AS(Dataset(0, {}), DataError);
  const Dataset ok(2, {{{0.0, 1.0}, Label::Legitimate}});
  CHECK_FALSE(ok.has_both_classes());
}

TEST_CASE("dense csv: two rows with header") {
  TempDir dir;
  write_text(dir / "a.csv", "f1,f2,label\n0.1,0.2,-1\n0.9,0.8,1\n");
  const Dataset ds = load_dense_csv(dir / "a.csv");
  REQUIRE(ds.dim() == 2);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].x == Vector{0.1, 0.2});
  CHECK(ds[0].y == Label::Legitimate);
  CHECK(ds[1].x == Vector{0.9, 0.8});
  CHECK(ds[1].y == Label::Malicious);
  CHECK(ds.feature_names() == std::vector<std::string>{"f1", "f2"});
}

TEST_CASE("dense csv: label column may sit anywhere; headerless uses the last column") {
  TempDir dir;
  write_text(dir / "a.csv", "label,x,y\n1,3,4\n");
  const Dataset a = load_dense_csv(dir / "a.csv");
  CHECK(a[0].x == Vector{3, 4});
  CHECK(a[0].y == Label::Malicious);
  write_text(dir / "b.csv", "3,4,-1\n5,6,1\n");
  const Dataset b = load_dense_csv(dir / "b.csv");
  CHECK(b.dim() == 2);
  CHECK(b[1].y == Label::Malicious);
}

TEST_CASE("dense csv: a width-3 row in a width-2 file names the row") {
  TempDir dir;
  write_text(dir / "a.csv", "f1,f2,label\n0.1,0.2,-1\n0.1,0.2,0.3,1\n");
  try {
    load_dense_csv(dir / "a.csv");
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("a.csv:3") != std::string::npos);
  }
}

TEST_CASE("dense csv: bad values and labels are located errors") {
  TempDir dir;
  write_text(dir / "nan.csv", "f1,label\nnan,1\n");
  CHECK_THROWS_WITH_AS(load_dense_csv(dir / "nan.csv"), doctest::Contains("nan.csv:2"), DataError);
  write_text(dir / "lab.csv", "f1,label\n1,2\n");
  CHECK_THROWS_WITH_AS(load_dense_csv(dir / "lab.csv"), doctest::Contains("unknown label"), DataError);
  write_text(dir / "txt.csv", "f1,label\nabc,1\n");
  CHECK_THROWS_AS(load_dense_csv(dir / "txt.csv"), DataError);
  write_text(dir / "nolabel.csv", "f1,f2\n1,2\n");
  CHECK_THROWS_WITH_AS(load_dense_csv(dir / "nolabel.csv"), doctest::Contains("no column 'label'"), DataError);
  CHECK_THROWS_AS(load_dense_csv(dir / "missing.csv"), DataError);
}

TEST_CASE("dense csv: 0/1 labels are remapped and survive a write/read round trip") {
  TempDir dir;
  write_text(dir / "a.csv", "f1,label\n0.5,0\n1.5,1\n2.5,0\n");
  const Dataset a = load_dense_csv(dir / "a.csv");
  CHECK(a[0].y == Label::Legitimate);
  CHECK(a[1].y == Label::Malicious);
  write_dense_csv(a, dir / "b.csv");
  const Dataset b = load_dense_csv(dir / "b.csv");
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].x == a[i].x);
    CHECK(b[i].y == a[i].y);
  }
  // written labels are the internal -1/+1
  std::ifstream in(dir / "b.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(row == "0.5,-1");
}

TEST_CASE("dense csv: write/read preserves full precision") {
  TempDir dir;
  const Dataset a(2, {{{0.1 + 0.2, 1.0 / 3.0}, Label::Malicious}});
  write_dense_csv(a, dir / "p.csv");
  CHECK(load_dense_csv(dir / "p.csv")[0].x == a[0].x);
}

TEST_CASE("sparse format: 1-based indices, width inferred or fixed") {
  TempDir dir;
  write_text(dir / "s.txt", "1 1:2 3:5\n-1 2:1\n\n0 3:7\n");
  const Dataset ds = load_sparse(dir / "s.txt");
  REQUIRE(ds.dim() == 3);
  REQUIRE(ds.size() == 3);
  CHECK(ds[0].x == Vector{2, 0, 5});
  CHECK(ds[1].x == Vector{0, 1, 0});
  CHECK(ds[2].y == Label::Legitimate);
  CHECK(load_sparse(dir / "s.txt", 5).dim() == 5);
  CHECK_THROWS_WITH_AS(load_sparse(dir / "s.txt", 2), doctest::Contains("s.txt:1"), DataError);
  write_text(dir / "bad.txt", "1 0:2\n");
  CHECK_THROWS_AS(load_sparse(dir / "bad.txt"), DataError);
  write_text(dir / "bad2.txt", "1 2\n");
  CHECK_THROWS_AS(load_sparse(dir / "bad2.txt"), DataError);
  write_text(dir / "bad3.txt", "5 1:1\n");
  CHECK_THROWS_WITH_AS(load_sparse(dir / "bad3.txt"), doctest::Contains("unknown label"), DataError);
}

TEST_CASE("idx: zero image, 255 byte, filtering and class mapping") {
  TempDir dir;
  std::vector<unsigned char> zero(784, 0), bright(784, 0), other(784, 9);
  bright[5] = 255;
  bright[6] = 51;
  write_idx(dir / "img", dir / "lab", {zero, bright, other}, {7, 3, 1}, 28, 28);
  const Dataset ds = load_idx_images(dir / "img", dir / "lab", 7, 3);
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.dim() == 784);
  CHECK(ds[0].x == Vector(784, 0.0));
  CHECK(ds[0].y == Label::Legitimate);
  CHECK(ds[1].y == Label::Malicious);
  CHECK(ds[1].x[5] == 1.0);
  CHECK(ds[1].x[6] == 51.0 / 255.0);
  for (const auto& s : ds.samples()) CHECK(*std::max_element(s.x.begin(), s.x.end()) <= 1.0);
}

TEST_CASE("idx: every byte value b maps to exactly b/255") {
  TempDir dir;
  std::vector<unsigned char> im(256);
  for (int b = 0; b < 256; ++b) im[b] = static_cast<unsigned char>(b);
  write_idx(dir / "img", dir / "lab", {im}, {3}, 16, 16);
  const Dataset ds = load_idx_images(dir / "img", dir / "lab", 7, 3);
  for (int b = 0; b < 256; ++b) CHECK(ds[0].x[b] == static_cast<double>(b) / 255.0);
}

TEST_CASE("idx: bad magic, truncation and count mismatch") {
  TempDir dir;
  std::vector<unsigned char> im(4, 0);
  write_idx(dir / "img", dir / "lab", {im, im}, {3, 7}, 2, 2);
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "lab", dir / "lab", 7, 3), doctest::Contains("magic"), DataError);
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "img", dir / "img", 7, 3), doctest::Contains("magic"), DataError);
  write_idx(dir / "img2", dir / "lab2", {im, im}, {3}, 2, 2);
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "img2", dir / "lab2", 7, 3), doctest::Contains("mismatch"), DataError);
  // chop the last image short
  std::string raw;
  {
    std::ifstream in(dir / "img", std::ios::binary);
    raw.assign(std::istreambuf_iterator<char>(in), {});
  }
  write_text(dir / "short", raw.substr(0, raw.size() - 1));
  CHECK_THROWS_WITH_AS(load_idx_images(dir / "short", dir / "lab", 7, 3), doctest::Contains("truncated"), DataError);
  write_text(dir / "tiny", raw.substr(0, 6));
  CHECK_THROWS_AS(load_idx_images(dir / "tiny", dir / "lab", 7, 3), DataError);
  CHECK_THROWS_AS(load_idx_images(dir / "img", dir / "lab", 3, 3), DataError);
}

TEST_CASE("idx: per-class counts agree with an independent label reader") {
  TempDir dir;
  std::mt19937_64 gen(3);
  std::vector<std::vector<unsigned char>> images;
  std::vector<unsigned char> labels;
  for (int i = 0; i < 300; ++i) {
    images.emplace_back(16, static_cast<unsigned char>(gen() % 256));
    labels.push_back(static_cast<unsigned char>(gen() % 10));
  }
  write_idx(dir / "img", dir / "lab", images, labels, 4, 4);
  auto counts = count_idx_labels(dir / "lab");
  const Dataset ds = load_idx_images(dir / "img", dir / "lab", 7, 3);
  CHECK(ds.count(Label::Malicious) == counts[3]);
  CHECK(ds.count(Label::Legitimate) == counts[7]);

  // Real MNIST files, when provided.
  if (const char* mnist = std::getenv("EVASION_MNIST_DIR")) {
    const std::filesystem::path m = mnist;
    const auto img = m / "t10k-images-idx3-ubyte", lab = m / "t10k-labels-idx1-ubyte";
    if (std::filesystem::exists(img) && std::filesystem::exists(lab)) {
      auto c = count_idx_labels(lab);
      const Dataset t = load_idx_images(img, lab, 7, 3);
      CHECK(t.count(Label::Malicious) == c[3]);
      CHECK(t.count(Label::Legitimate) == c[7]);
    }
  }
}

TEST_CASE("split: 1000 samples into disjoint 500/500") {
  std::vector<Sample> s;
  for (int i = 0; i < 1000; ++i) s.push_back({{static_cast<double>(i)}, i % 3 == 0 ? Label::Malicious : Label::Legitimate});
  const Dataset ds(1, s);
  const auto [tr, te] = split_train_test(ds, 500, 500, 11);
  CHECK(tr.size() == 500);
  CHECK(te.size() == 500);
  std::set<double> a, b;
  for (const auto& x : tr.samples()) a.insert(x.x[0]);
  for (const auto& x : te.samples()) b.insert(x.x[0]);
  CHECK(a.size() == 500);
  CHECK(b.size() == 500);
  for (double v : a) CHECK_FALSE(b.count(v));
  // stratified within one sample
  const double frac = static_cast<double>(ds.count(Label::Malicious)) / ds.size();
  CHECK(std::abs(static_cast<double>(tr.count(Label::Malicious)) - frac * 500) <= 1.0);
  CHECK(std::abs(static_cast<double>(te.count(Label::Malicious)) - frac * 500) <= 1.0);
}

TEST_CASE("split: deterministic given the seed, different across seeds") {
  std::vector<Sample> s;
  for (int i = 0; i < 100; ++i) s.push_back({{static_cast<double>(i)}, i % 2 ? Label::Malicious : Label::Legitimate});
  const Dataset ds(1, s);
  const auto a = split_train_test(ds, 30, 30, 5);
  const auto b = split_train_test(ds, 30, 30, 5);
  const auto c = split_train_test(ds, 30, 30, 6);
  bool differs = false;
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(a.first[i].x == b.first[i].x);
    CHECK(a.second[i].x == b.second[i].x);
    differs |= a.first[i].x != c.first[i].x;
  }
  CHECK(differs);
}

TEST_CASE("split: 6 negatives / 4 positives, n_train=5 gives 3/2") {
  std::vector<Sample> s;
  for (int i = 0; i < 10; ++i) s.push_back({{static_cast<double>(i)}, i < 6 ? Label::Legitimate : Label::Malicious});
  const Dataset ds(1, s);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [tr, te] = split_train_test(ds, 5, 5, seed);
    CHECK(tr.count(Label::Legitimate) == 3);
    CHECK(tr.count(Label::Malicious) == 2);
    CHECK(te.count(Label::Legitimate) == 3);
    CHECK(te.count(Label::Malicious) == 2);
  }
}

TEST_CASE("split: insufficient samples") {
  const Dataset ds(1, {{{0.0}, Label::Legitimate}, {{1.0}, Label::Malicious}});
  CHECK_THROWS_AS(split_train_test(ds, 2, 1, 1), DataError);
}

TEST_CASE("cap_features") {
  const Dataset ds(2, {{{250.0, 3.0}, Label::Malicious}, {{7.0, 99.0}, Label::Legitimate}});
  const Dataset c = cap_features(ds, 100.0);
  CHECK(c[0].x == Vector{100.0, 3.0});
  CHECK(c[1].x == Vector{7.0, 99.0});
  CHECK(c.dim() == 2);
  double mx = 0.0;
  for (const auto& s : c.samples()) mx = std::max(mx, *std::max_element(s.x.begin(), s.x.end()));
  CHECK(mx == std::min(250.0, 100.0));
  CHECK_THROWS(cap_features(ds, 0.0));
}

TEST_CASE("feature bounds") {
  FeatureBounds b = FeatureBounds::box(2, 0.0, 1.0, true);
  CHECK(b.contains(Vector{0.2, 0.2}, Vector{0.5, 0.2}));
  CHECK_FALSE(b.contains(Vector{0.2, 0.2}, Vector{0.1, 0.2}));
  CHECK_FALSE(b.contains(Vector{0.2, 0.2}, Vector{1.5, 0.2}));
  b.lower[1] = 2.0;
  CHECK_THROWS(b.validate());
  CHECK(FeatureBounds::unbounded(3).contains(Vector(3, 0.0), Vector(3, -1e300)));
}

}  // TEST_SUITE
