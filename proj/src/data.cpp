#include "scar/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scar/errors.hpp"
#include "scar/kernels.hpp"
#include "scar/rng.hpp"

namespace scar {

void AugmentationSpec::validate() const {
  if (weak_noise < 0.0f || strong_noise < weak_noise)
    throw ValueError("augmentation requires 0 <= weak_noise < strong_noise");
  if (strong_dropout < 0.0f || strong_dropout >= 1.0f)
    throw ValueError("strong_dropout must be in [0, 1)");
}

Dataset gen_two_moons(size_t n, float noise_sigma, uint64_t seed) {
  if (n < 2) throw ValueError("two_moons needs n >= 2");
  if (n % 2 != 0) throw ValueError("two_moons needs an even n");
  if (noise_sigma < 0.0f) throw ValueError("noise_sigma must be >= 0");
  const size_t half = n / 2;
  Array feat({static_cast<int64_t>(n), 2});
  std::vector<int> labels(n);
  Rng rng(mix_seed(seed, 0x2a17ull));
  const float pi = 3.14159265358979323846f;
  for (size_t i = 0; i < half; ++i) {
    const float t = half == 1 ? 0.0f : pi * static_cast<float>(i) / static_cast<float>(half - 1);
    feat.at(static_cast<int64_t>(i), 0) = std::cos(t);
    feat.at(static_cast<int64_t>(i), 1) = std::sin(t);
    labels[i] = 0;
    feat.at(static_cast<int64_t>(half + i), 0) = 1.0f - std::cos(t);
    feat.at(static_cast<int64_t>(half + i), 1) = 1.0f - std::sin(t) - 0.5f;
    labels[half + i] = 1;
  }
  if (noise_sigma > 0.0f)
    for (float& v : feat.data) v += noise_sigma * rng.normal();
  Dataset ds;
  ds.features = normalize_unit_interval(feat);
  ds.labels = std::move(labels);
  ds.num_classes = 2;
  return ds;
}

Dataset gen_blobs(size_t n, int classes, float spread, uint64_t seed) {
  if (classes < 2) throw ValueError("blobs needs at least 2 classes");
  if (n < static_cast<size_t>(classes)) throw ValueError("blobs needs n >= classes");
  Array feat({static_cast<int64_t>(n), 2});
  std::vector<int> labels(n);
  Rng rng(mix_seed(seed, 0x2b10ull));
  const float pi = 3.14159265358979323846f;
  for (size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<size_t>(classes));
    const float ang = 2.0f * pi * static_cast<float>(c) / static_cast<float>(classes);
    feat.at(static_cast<int64_t>(i), 0) = std::cos(ang) + spread * rng.normal();
    feat.at(static_cast<int64_t>(i), 1) = std::sin(ang) + spread * rng.normal();
    labels[i] = c;
  }
  Dataset ds;
  ds.features = normalize_unit_interval(feat);
  ds.labels = std::move(labels);
  ds.num_classes = classes;
  return ds;
}

Array normalize_unit_interval(const Array& features) {
  features.check_finite("normalize_unit_interval");
  const int64_t n = features.rows(), d = features.cols();
  Array out(features.shape);
  for (int64_t j = 0; j < d; ++j) {
    float lo = features.at(0, j), hi = features.at(0, j);
    for (int64_t i = 1; i < n; ++i) {
      lo = std::min(lo, features.at(i, j));
      hi = std::max(hi, features.at(i, j));
    }
    const float range = hi - lo;
    if (range <= 0.0f) {
      for (int64_t i = 0; i < n; ++i) out.at(i, j) = 0.0f;  // constant feature -> 0
    } else {
      for (int64_t i = 0; i < n; ++i) out.at(i, j) = (features.at(i, j) - lo) / range;
    }
  }
  return out;
}

SemiSplit split_semi(const Dataset& data, size_t n_l, uint64_t seed) {
  if (!data.has_labels()) throw ValueError("split_semi needs a labeled dataset");
  const size_t n = data.size();
  const size_t c = static_cast<size_t>(data.num_classes);
  if (n_l < c) throw ValueError("cannot stratify " + std::to_string(n_l) + " labels over " +
                                std::to_string(c) + " classes");
  if (n_l > n) throw ValueError("n_l exceeds dataset size");

  std::vector<std::vector<size_t>> by_class(c);
  for (size_t i = 0; i < n; ++i) by_class[static_cast<size_t>(data.labels[i])].push_back(i);

  Rng rng(mix_seed(seed, 0x5317ull));
  for (auto& group : by_class) rng.shuffle(group);

  // floor(n_l / C) per class, remainder to the lowest class indices
  std::vector<size_t> quota(c, n_l / c);
  for (size_t j = 0; j < n_l % c; ++j) ++quota[j];

  SemiSplit split;
  split.seed = seed;
  for (size_t j = 0; j < c; ++j) {
    if (quota[j] > by_class[j].size())
      throw ValueError("class " + std::to_string(j) + " has only " +
                       std::to_string(by_class[j].size()) + " samples, need " +
                       std::to_string(quota[j]));
    for (size_t t = 0; t < by_class[j].size(); ++t) {
      if (t < quota[j])
        split.labeled_indices.push_back(by_class[j][t]);
      else
        split.unlabeled_indices.push_back(by_class[j][t]);
    }
  }
  std::sort(split.labeled_indices.begin(), split.labeled_indices.end());
  std::sort(split.unlabeled_indices.begin(), split.unlabeled_indices.end());

  split.labeled.features = take_rows(data.features, split.labeled_indices);
  split.labeled.num_classes = data.num_classes;
  for (size_t i : split.labeled_indices) split.labeled.labels.push_back(data.labels[i]);

  split.unlabeled.features = take_rows(data.features, split.unlabeled_indices);
  split.unlabeled.num_classes = data.num_classes;
  for (size_t i : split.unlabeled_indices) split.withheld_labels.push_back(data.labels[i]);
  return split;
}

Array augment(const Array& x, const AugmentationSpec& spec, AugmentMode mode, uint64_t seed) {
  spec.validate();
  const int64_t n = x.rows(), d = x.cols();
  Array out(x.shape);
  const uint64_t mode_tag = mode == AugmentMode::Weak ? 0x77ull : 0x55ull;
  for (int64_t i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, mode_tag, static_cast<uint64_t>(i)));
    const float amp = mode == AugmentMode::Weak ? spec.weak_noise : spec.strong_noise;
    for (int64_t j = 0; j < d; ++j) {
      float v = x.at(i, j) + rng.uniform(-amp, amp);
      if (mode == AugmentMode::Strong && spec.strong_dropout > 0.0f &&
          rng.uniform() < spec.strong_dropout)
        v = 0.0f;
      out.at(i, j) = std::min(std::max(v, 0.0f), 1.0f);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split_fields(line);
  bool has_label = !header.empty() && header.back() == "label";
  const size_t d = header.size() - (has_label ? 1 : 0);
  if (d == 0) throw ParseError(path + ": header has no feature columns");
  for (size_t j = 0; j < d; ++j) {
    if (header[j] != "f" + std::to_string(j))
      throw ParseError(path + ": line 1: expected header column 'f" + std::to_string(j) +
                       "', got '" + header[j] + "'");
  }

  std::vector<float> values;
  std::vector<int> labels;
  size_t lineno = 1;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError(path + ": line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    for (size_t j = 0; j < d; ++j) {
      try {
        size_t used = 0;
        const float v = std::stof(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument("trailing");
        values.push_back(v);
      } catch (const std::exception&) {
        throw ParseError(path + ": line " + std::to_string(lineno) + ": non-numeric cell '" +
                         fields[j] + "'");
      }
    }
    if (has_label) {
      try {
        size_t used = 0;
        const int y = std::stoi(fields[d], &used);
        if (used != fields[d].size() || y < 0) throw std::invalid_argument("label");
        labels.push_back(y);
      } catch (const std::exception&) {
        throw ParseError(path + ": line " + std::to_string(lineno) + ": bad label '" + fields[d] + "'");
      }
    }
    ++n;
  }
  if (n == 0) throw ParseError(path + ": no data rows");

  Dataset ds;
  ds.features = normalize_unit_interval(
      Array({static_cast<int64_t>(n), static_cast<int64_t>(d)}, std::move(values)));
  if (has_label) {
    ds.labels = std::move(labels);
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  }
  return ds;
}

}  // namespace scar
