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

#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.h"
#include "scfreg/errors.h"
#include "scfreg/features.h"
#include "scfreg/rng.h"
#include "scfreg/specaug.h"

using namespace scfreg;

namespace {

FeatureMatrix random_features(std::size_t t, std::size_t d, std::uint64_t seed) {
  RngStream rng(seed, 0);
  FeatureMatrix f;
  f.values = Matrix(t, d);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values.data()[i] = rng.uniform(0.5, 1.5);
  return f;
}

std::vector<double> white(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = 0.3 * rng.normal();
  return x;
}

double masked_fraction(const MaskPolicy& policy, std::size_t frames, std::size_t draws) {
  RngStream rng(2024, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const MaskSet m = sample_masks(policy, frames, 80, rng);
    std::vector<std::pair<std::size_t, std::size_t>> iv;
    for (const auto& t : m.time_masks) iv.emplace_back(t.start, t.length);
    total += static_cast<double>(oracle::union_size(iv)) / frames;
  }
  return total / draws;
}

}  // namespace

TEST_CASE("empty policy gives empty masks") {
  RngStream rng(1, 0);
  const MaskSet m = sample_masks(MaskPolicy{15, 0, 8, 0}, 100, 80, rng);
  CHECK(m.empty());
}

TEST_CASE("sampled masks stay in bounds") {
  RngStream rng(2, 0);
  for (int i = 0; i < 2000; ++i) {
    const MaskSet m = sample_masks(MaskPolicy{15, 2, 8, 2}, 10, 6, rng);
    REQUIRE(m.time_masks.size() == 2);
    REQUIRE(m.channel_masks.size() == 2);
    for (const auto& t : m.time_masks) {
      CHECK(t.length >= 1);
      CHECK(t.length <= 15);
      CHECK(t.end() <= 10);
    }
    for (const auto& c : m.channel_masks) {
      CHECK(c.length >= 1);
      CHECK(c.end() <= 6);
    }
    CHECK_NOTHROW(m.check_bounds(10, 6));
  }
}

TEST_CASE("masks on an empty axis are skipped") {
  RngStream rng(3, 0);
  const MaskSet m = sample_masks(MaskPolicy{15, 2, 8, 2}, 0, 6, rng);
  CHECK(m.time_masks.empty());
  CHECK(m.channel_masks.size() == 2);
}

TEST_CASE("policy validation") {
  CHECK_THROWS_AS((MaskPolicy{0, 1, 8, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((MaskPolicy{15, 0, 0, 2}.validate()), ConfigError);
  CHECK_NOTHROW((MaskPolicy{0, 0, 0, 0}.validate()));
}

TEST_CASE("expected masked-frame fraction") {
  const double a = masked_fraction(MaskPolicy{15, 2, 8, 0}, 1000, 10000);
  const double b = masked_fraction(MaskPolicy{30, 1, 8, 0}, 1000, 10000);
  CHECK(std::abs(a - 0.015861763) < 3e-4);
  CHECK(std::abs(b - 0.015350167) < 3e-4);
  CHECK(std::abs(a - 0.016) <= 0.002);
  CHECK(std::abs(a - b) <= 0.002);
}

TEST_CASE("empty mask set is an identity") {
  const auto f = random_features(20, 10, 1);
  CHECK(apply_feature_masks(f, MaskSet{}).values == f.values);
}

TEST_CASE("full time mask zeroes everything") {
  const auto f = random_features(20, 10, 2);
  const auto g = apply_feature_masks(f, MaskSet{{{0, 20}}, {}});
  for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(g.values.data()[i] == 0.0);
}

TEST_CASE("feature masks touch exactly the masked cells") {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_features(50, 40, trial);
    const MaskSet m = sample_masks(MaskPolicy{15, 3, 8, 3}, 50, 40, rng);
    const auto g = apply_feature_masks(f, m);
    std::set<std::size_t> rows;
    std::set<std::size_t> cols;
    std::vector<std::pair<std::size_t, std::size_t>> tr;
    std::vector<std::pair<std::size_t, std::size_t>> cr;
    for (const auto& t : m.time_masks) {
      tr.emplace_back(t.start, t.length);
      for (std::size_t i = t.start; i < t.end(); ++i) rows.insert(i);
    }
    for (const auto& c : m.channel_masks) {
      cr.emplace_back(c.start, c.length);
      for (std::size_t i = c.start; i < c.end(); ++i) cols.insert(i);
    }
    std::size_t zeros = 0;
    for (std::size_t t = 0; t < 50; ++t) {
      for (std::size_t c = 0; c < 40; ++c) {
        const bool masked = rows.count(t) || cols.count(c);
        if (masked) {
          CHECK(g.values(t, c) == 0.0);
          ++zeros;
        } else {
          CHECK(g.values(t, c) == f.values(t, c));
        }
      }
    }
    const std::size_t nt = oracle::union_size(tr);
    const std::size_t nc = oracle::union_size(cr);
    CHECK(zeros == nt * 40 + nc * 50 - nt * nc);
  }
}

TEST_CASE("out-of-bounds masks are structural errors") {
  const auto f = random_features(10, 10, 3);
  CHECK_THROWS_AS(apply_feature_masks(f, MaskSet{{{5, 6}}, {}}), StructuralError);
  CHECK_THROWS_AS(apply_feature_masks(f, MaskSet{{}, {{10, 1}}}), StructuralError);
  CHECK_THROWS_AS(apply_feature_masks(f, MaskSet{{{2, 0}}, {}}), StructuralError);
}

TEST_CASE("sorted masking with the identity order equals baseline masking") {
  RngStream rng(5, 0);
  std::vector<std::size_t> identity(30);
  for (std::size_t i = 0; i < 30; ++i) identity[i] = i;
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_features(25, 30, trial);
    const MaskSet m = sample_masks(MaskPolicy{15, 2, 8, 2}, 25, 30, rng);
    CHECK(apply_sorted_feature_masks(f, identity, m).values == apply_feature_masks(f, m).values);
  }
}

TEST_CASE("reversed order masks the last channels") {
  const auto f = random_features(4, 6, 6);
  const std::vector<std::size_t> reversed{5, 4, 3, 2, 1, 0};
  const auto g = apply_sorted_feature_masks(f, reversed, MaskSet{{}, {{0, 2}}});
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(g.values(t, 5) == 0.0);
    CHECK(g.values(t, 4) == 0.0);
    for (std::size_t c = 0; c < 4; ++c) CHECK(g.values(t, c) == f.values(t, c));
  }
}

TEST_CASE("sorted masking rejects bad permutations") {
  const auto f = random_features(4, 3, 7);
  const std::vector<std::size_t> dup{0, 0, 1};
  CHECK_THROWS_AS(apply_sorted_feature_masks(f, dup, MaskSet{{}, {{0, 1}}}), StructuralError);
  const std::vector<std::size_t> short_order{0, 1};
  CHECK_THROWS_AS(apply_sorted_feature_masks(f, short_order, MaskSet{}), StructuralError);
}

TEST_CASE("sorted SCF masking drops whole groups with neighboring peaks") {
  const auto params = ScfParams::random_init(ScfGeometry{}, 21);
  const auto peaks = filter_peak_frequencies(params);
  RngStream rng(6, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const MaskSet m = sample_masks(MaskPolicy{15, 0, 8, 2}, 10, 150, rng);
    const auto channels = sorted_masked_channels(peaks.order, m, 5);
    std::set<std::size_t> base;
    for (std::size_t c : channels) base.insert(c / 5);
    CHECK(channels.size() == base.size() * 5);
    for (std::size_t b : base) {
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(std::binary_search(channels.begin(), channels.end(), b * 5 + j));
      }
    }
    for (const auto& iv : m.channel_masks) {
      double lo = 1e9;
      double hi = -1e9;
      std::set<std::size_t> in_mask;
      for (std::size_t r = iv.start; r < iv.end(); ++r) {
        lo = std::min(lo, peaks.peak_hz[peaks.order[r]]);
        hi = std::max(hi, peaks.peak_hz[peaks.order[r]]);
        in_mask.insert(peaks.order[r]);
      }
      for (std::size_t c = 0; c < 150; ++c) {
        if (in_mask.count(c)) continue;
        const double p = peaks.peak_hz[c];
        CHECK((p <= lo || p >= hi));
      }
    }
  }
}

TEST_CASE("stft masking with no masks reconstructs the input") {
  const auto x = white(8000, 1);
  const Waveform w(x, 8000);
  const auto y = apply_stft_masks(w, MaskSet{});
  REQUIRE(y.size() == x.size());
  const auto weight = istft_overlap_weight(stft(w));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (weight[i] > kOlaFloor) CHECK(std::abs(y[i] - x[i]) <= 1e-6);
  }
}

TEST_CASE("stft masking keeps the length") {
  RngStream rng(7, 0);
  const MaskPolicy policy{30, 1, 8, 2, MaskDomain::kStftDomain};
  for (std::size_t n : {1u, 150u, 201u, 999u, 4321u}) {
    CHECK(apply_stft_masks(Waveform(white(n, n), 8000), policy, rng).size() == n);
  }
}

TEST_CASE("stft masking requires the stft domain") {
  RngStream rng(7, 0);
  CHECK_THROWS_AS(
      apply_stft_masks(Waveform(white(500, 1), 8000), MaskPolicy{}, rng), ConfigError);
}

TEST_CASE("stft frequency mask attenuates its band") {
  // Bins [32, 48) at 31.25 Hz spacing: centers 1000 .. 1468.75 Hz. Powers are
  // measured on samples covered by full window overlap.
  const auto x = white(8000, 3);
  const auto y = apply_stft_masks(Waveform(x, 8000), MaskSet{{}, {{32, 16}}});
  const std::vector<double> xi(x.begin() + 200, x.end() - 200);
  const std::vector<double> yi(y.samples().begin() + 200, y.samples().end() - 200);
  const auto attenuation_db = [&](double lo, double hi) {
    return 10.0 * std::log10(oracle::band_power(xi, 8000, lo, hi) /
                             oracle::band_power(yi, 8000, lo, hi));
  };
  CHECK(attenuation_db(1000.0, 1468.75) >= 20.0);
  // Bin 48 (1500 Hz) stays, so the top edge of the nominal band leaks.
  CHECK(attenuation_db(1000.0, 1500.0) >= 15.0);
  CHECK(std::abs(attenuation_db(2000.0, 3000.0)) < 0.1);
  CHECK(std::abs(attenuation_db(100.0, 800.0)) < 0.1);
}

TEST_CASE("stft masking does not amplify the signal ends") {
  const auto x = white(8000, 5);
  const auto y = apply_stft_masks(Waveform(x, 8000), MaskSet{{}, {{10, 40}}});
  double peak_in = 0.0;
  double peak_out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    peak_in = std::max(peak_in, std::abs(x[i]));
    peak_out = std::max(peak_out, std::abs(y[i]));
  }
  CHECK(peak_out <= 1.5 * peak_in);
}

TEST_CASE("stft time mask silences the covered samples") {
  const auto x = white(4000, 4);
  const auto y = apply_stft_masks(Waveform(x, 8000), MaskSet{{{10, 10}}, {}});
  // Frames 10..19 span samples [800, 1720); one window in from each edge.
  double e_in = 0.0;
  double e_ref = 0.0;
  for (std::size_t i = 1000; i < 1520; ++i) {
    e_in += y[i] * y[i];
    e_ref += x[i] * x[i];
  }
  CHECK(e_in <= 0.01 * e_ref);
  for (std::size_t i = 2000; i < 3000; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-9);
}

TEST_CASE("mask sampling is deterministic for a stream") {
  RngStream a(9, 3);
  RngStream b(9, 3);
  for (int i = 0; i < 20; ++i) {
    CHECK(sample_masks(MaskPolicy{}, 100, 80, a) == sample_masks(MaskPolicy{}, 100, 80, b));
  }
}
