// Copyright 2026 The FairForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef FAIRFORGE_UTIL_HPP_
#define FAIRFORGE_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fairforge {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so the helpers below derive uniforms and shuffles from raw draws to keep
// results identical across standard libraries.
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Fisher-Yates shuffle driven by raw engine output.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// 64-bit FNV-1a, used for config keys and input fingerprints (not security).
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
std::string file_fingerprint(const std::filesystem::path& path);

// Rounds to the given number of significant decimal digits.
double round_significant(double x, int digits = 12);

std::string read_file(const std::filesystem::path& path);
// Writes atomically via a temporary sibling file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace fairforge

#endif  // FAIRFORGE_UTIL_HPP_
