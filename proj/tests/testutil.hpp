#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scar/array.hpp"
#include "scar/rng.hpp"

namespace testutil {

inline scar::Array random_array(std::vector<int64_t> shape, scar::Rng& rng, float lo = -1.0f,
                                float hi = 1.0f) {
  scar::Array a(std::move(shape));
  for (float& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

// Random rowwise distribution with entries bounded away from 0.
inline scar::Array random_distribution(int64_t n, int64_t c, scar::Rng& rng, float floor = 0.05f) {
  scar::Array a({n, c});
  for (int64_t i = 0; i < n; ++i) {
    float sum = 0.0f;
    for (int64_t j = 0; j < c; ++j) {
      a.at(i, j) = floor + rng.uniform();
      sum += a.at(i, j);
    }
    for (int64_t j = 0; j < c; ++j) a.at(i, j) /= sum;
  }
  return a;
}

inline double max_abs_diff(const scar::Array& a, const scar::Array& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, static_cast<double>(std::abs(a.data[i] - b.data[i])));
  return m;
}

inline bool bits_equal(const scar::Array& a, const scar::Array& b) {
  if (!a.same_shape(b)) return false;
  for (size_t i = 0; i < a.numel(); ++i)
    if (a.data[i] != b.data[i]) return false;  // exact f32 compare, intended
  return true;
}

// Minimal XML well-formedness check: tags balance and nest properly.
inline bool xml_well_formed(const std::string& text) {
  std::vector<std::string> stack;
  size_t i = 0;
  if (text.rfind("<?xml", 0) == 0) {
    i = text.find("?>");
    if (i == std::string::npos) return false;
    i += 2;
  }
  while (i < text.size()) {
    if (text[i] != '<') {
      ++i;
      continue;
    }
    const size_t close = text.find('>', i);
    if (close == std::string::npos) return false;
    std::string tag = text.substr(i + 1, close - i - 1);
    i = close + 1;
    if (tag.empty()) return false;
    if (tag[0] == '/') {
      if (stack.empty()) return false;
      if (stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    const bool self_closing = tag.back() == '/';
    if (self_closing) tag.pop_back();
    const size_t space = tag.find_first_of(" \t\n");
    const std::string name = space == std::string::npos ? tag : tag.substr(0, space);
    if (name.empty()) return false;
    if (!self_closing) stack.push_back(name);
  }
  return stack.empty();
}

}  // namespace testutil
