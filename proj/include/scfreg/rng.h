// Copyright 2026 The scfreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCFREG_RNG_H_
#define SCFREG_RNG_H_

#include <cstdint>
#include <random>

namespace scfreg {

// Deterministic random stream. Streams are keyed by (seed, index) through a
// SplitMix64 finalizer so that utterances can be processed in any order, or in
// parallel, and still see the same draws. All conversions to real/integer
// values are done here rather than through <random> distributions, whose
// output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t index = 0)
      : key_(derive_key(seed, index)), engine_(key_) {}

  // Independent child stream; does not advance this stream.
  RngStream substream(std::uint64_t index) const { return RngStream(key_, index); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on the closed range [lo, hi], unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

  // Standard normal via Box-Muller.
  double normal();

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t key_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace scfreg

#endif  // SCFREG_RNG_H_
