#include "evasion/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "evasion/rng.hpp"

namespace evasion {

std::optional<Label> label_from_value(double v) {
  if (v == -1.0 || v == 0.0) return Label::Legitimate;
  if (v == 1.0) return Label::Malicious;
  return std::nullopt;
}

Dataset::Dataset(std::size_t dim, std::vector<Sample> samples,
                 std::vector<std::string> feature_names)
    : dim_(dim), samples_(std::move(samples)), feature_names_(std::move(feature_names)) {
  if (dim_ == 0) throw DataError("dataset dimensionality must be positive");
  if (!feature_names_.empty() && feature_names_.size() != dim_)
    throw DataError("feature_names has " + std::to_string(feature_names_.size()) +
                    " entries for dimensionality " + std::to_string(dim_));
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i].x.size() != dim_)
      throw DataError("sample " + std::to_string(i) + " has width " +
                      std::to_string(samples_[i].x.size()) + ", expected " +
                      std::to_string(dim_));
    if (!all_finite(samples_[i].x))
      throw DataError("sample " + std::to_string(i) + " has a non-finite value");
  }
}

std::size_t Dataset::count(Label y) const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [y](const Sample& s) { return s.y == y; }));
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<Sample> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples_.at(i));
  return Dataset(dim_, std::move(out), feature_names_);
}

Dataset Dataset::relabeled(const std::vector<Label>& labels) const {
  if (labels.size() != samples_.size()) throw DataError("label count mismatch in relabel");
  auto out = samples_;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].y = labels[i];
  return Dataset(dim_, std::move(out), feature_names_);
}

std::vector<Vector> Dataset::points_with_label(Label y) const {
  std::vector<Vector> out;
  for (const auto& s : samples_)
    if (s.y == y) out.push_back(s.x);
  return out;
}

void FeatureBounds::validate() const {
  if (lower.size() != upper.size()) throw DimensionError(lower.size(), upper.size());
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument("feature bounds: lower > upper at feature " + std::to_string(i));
}

bool FeatureBounds::contains(VectorView x0, VectorView x, double tol) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    if (increment_only && x[i] < x0[i] - tol) return false;
  }
  return true;
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string located(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  return path.string() + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace

Dataset load_dense_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::vector<Sample> samples;
  std::vector<std::string> names;
  std::optional<std::size_t> label_idx;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line, ',');
    if (first) {
      first = false;
      width = fields.size();
      const bool numeric = std::all_of(fields.begin(), fields.end(),
                                       [](const std::string& f) { return parse_number(f).has_value(); });
      if (!numeric) {
        const auto it = std::find(fields.begin(), fields.end(), label_column);
        if (it == fields.end())
          throw DataError(located(path, lineno, "header has no column '" + label_column + "'"));
        label_idx = static_cast<std::size_t>(it - fields.begin());
        for (std::size_t i = 0; i < fields.size(); ++i)
          if (i != *label_idx) names.push_back(fields[i]);
        continue;
      }
      label_idx = width - 1;
    }
    if (fields.size() != width)
      throw DataError(located(path, lineno, "row has " + std::to_string(fields.size()) +
                                                " fields, expected " + std::to_string(width)));
    Vector x;
    x.reserve(width - 1);
    std::optional<Label> y;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = parse_number(fields[i]);
      if (!v || !std::isfinite(*v))
        throw DataError(located(path, lineno, "bad numeric value '" + fields[i] + "' in column " +
                                                  std::to_string(i + 1)));
      if (i == *label_idx) {
        y = label_from_value(*v);
        if (!y) throw DataError(located(path, lineno, "unknown label value '" + fields[i] + "'"));
      } else {
        x.push_back(*v);
      }
    }
    samples.push_back({std::move(x), *y});
  }
  if (width < 2) throw DataError(path.string() + ": no feature columns");
  return Dataset(width - 1, std::move(samples), std::move(names));
}

void write_dense_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t j = 0; j < ds.dim(); ++j)
    out << (ds.feature_names().empty() ? "f" + std::to_string(j) : ds.feature_names()[j]) << ',';
  out << "label\n";
  for (const auto& s : ds.samples()) {
    for (double v : s.x) out << v << ',';
    out << static_cast<int>(s.y) << '\n';
  }
}

Dataset load_sparse(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  struct Row {
    Label y;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream tokens(line);
    std::string tok;
    if (!(tokens >> tok)) continue;
    const auto lv = parse_number(tok);
    const auto y = lv ? label_from_value(*lv) : std::nullopt;
    if (!y) throw DataError(located(path, lineno, "unknown label value '" + tok + "'"));
    Row row{*y, {}};
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw DataError(located(path, lineno, "malformed entry '" + tok + "'"));
      const auto idx = parse_number(tok.substr(0, colon));
      const auto val = parse_number(tok.substr(colon + 1));
      if (!idx || !val || *idx < 1 || std::floor(*idx) != *idx || !std::isfinite(*val))
        throw DataError(located(path, lineno, "malformed entry '" + tok + "'"));
      const auto i = static_cast<std::size_t>(*idx);
      if (dim != 0 && i > dim)
        throw DataError(located(path, lineno, "index " + std::to_string(i) + " exceeds dimensionality " +
                                                  std::to_string(dim)));
      max_index = std::max(max_index, i);
      row.entries.emplace_back(i - 1, *val);
    }
    rows.push_back(std::move(row));
  }
  const std::size_t d = dim != 0 ? dim : max_index;
  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (auto& r : rows) {
    Vector x(d, 0.0);
    for (auto [i, v] : r.entries) x[i] = v;
    samples.push_back({std::move(x), r.y});
  }
  return Dataset(d, std::move(samples));
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
  if (buf.size() < offset + 4) throw DataError(path.string() + ": truncated IDX header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

Dataset load_idx_images(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, int class_neg, int class_pos) {
  if (class_neg == class_pos) throw DataError("class_neg and class_pos must differ");
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  if (read_be32(images, 0, images_path) != 0x00000803)
    throw DataError(images_path.string() + ": bad magic number for IDX images");
  if (read_be32(labels, 0, labels_path) != 0x00000801)
    throw DataError(labels_path.string() + ": bad magic number for IDX labels");

  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_images != n_labels)
    throw DataError("IDX dimension mismatch: " + std::to_string(n_images) + " images vs " +
                    std::to_string(n_labels) + " labels");
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n_images * pixels)
    throw DataError(images_path.string() + ": truncated image payload");
  if (labels.size() < 8 + n_labels) throw DataError(labels_path.string() + ": truncated label payload");

  std::vector<Sample> samples;
  for (std::size_t i = 0; i < n_images; ++i) {
    const int digit = labels[8 + i];
    if (digit != class_neg && digit != class_pos) continue;
    Vector x(pixels);
    const auto* p = images.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) x[j] = static_cast<double>(p[j]) / 255.0;
    samples.push_back({std::move(x), digit == class_pos ? Label::Malicious : Label::Legitimate});
  }
  return Dataset(pixels, std::move(samples));
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, std::size_t n_train,
                                             std::size_t n_test, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n_train + n_test > n)
    throw DataError("insufficient samples: requested " + std::to_string(n_train) + "+" +
                    std::to_string(n_test) + " from " + std::to_string(n));

  std::array<std::vector<std::size_t>, 2> by_class;  // [0] legit, [1] malicious
  for (std::size_t i = 0; i < n; ++i)
    by_class[ds[i].y == Label::Malicious ? 1 : 0].push_back(i);
  Rng rng(seed);
  for (auto& v : by_class) rng.shuffle(v);

  const double frac_neg = n == 0 ? 0.0 : static_cast<double>(by_class[0].size()) / static_cast<double>(n);
  // Rounded proportional share, then clamped to what each class can supply.
  auto allocate = [&](std::size_t total, std::size_t avail_neg, std::size_t avail_pos) {
    auto k_neg = static_cast<std::size_t>(std::floor(static_cast<double>(total) * frac_neg + 0.5));
    k_neg = std::min(k_neg, avail_neg);
    if (total - k_neg > avail_pos) k_neg = total - avail_pos;
    return std::pair{k_neg, total - k_neg};
  };

  const auto [tr_neg, tr_pos] = allocate(n_train, by_class[0].size(), by_class[1].size());
  const auto [te_neg, te_pos] =
      allocate(n_test, by_class[0].size() - tr_neg, by_class[1].size() - tr_pos);

  std::vector<std::size_t> train(by_class[0].begin(), by_class[0].begin() + tr_neg);
  train.insert(train.end(), by_class[1].begin(), by_class[1].begin() + tr_pos);
  std::vector<std::size_t> test(by_class[0].begin() + tr_neg, by_class[0].begin() + tr_neg + te_neg);
  test.insert(test.end(), by_class[1].begin() + tr_pos, by_class[1].begin() + tr_pos + te_pos);
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

Dataset cap_features(const Dataset& ds, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("feature cap must be positive");
  auto samples = ds.samples();
  for (auto& s : samples)
    for (auto& v : s.x) v = std::min(v, cap);
  return Dataset(ds.dim(), std::move(samples), ds.feature_names());
}

}  // namespace evasion
