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

// Reference implementations used by the tests. They are deliberately naive
// and share no code with the library.

#ifndef SCFREG_TESTS_ORACLES_H_
#define SCFREG_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::complex<double>> dft(const std::vector<double>& x, std::size_t n) {
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < std::min(n, x.size()); ++t) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
      acc += x[t] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    out[k] = acc;
  }
  return out;
}

// |DTFT|^2 of the Hann-windowed signal at frequency f.
inline double windowed_power_at(const std::vector<double>& x, double f, double rate) {
  const std::size_t n = x.size();
  double re = 0.0;
  double im = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (t + 0.5) / n);
    const double phase = 2.0 * std::numbers::pi * f * static_cast<double>(t) / rate;
    re += w * x[t] * std::cos(phase);
    im -= w * x[t] * std::sin(phase);
  }
  return re * re + im * im;
}

// Frequency of the strongest component in [lo, hi] Hz: coarse scan, then
// golden-section refinement around the best coarse point.
inline double dominant_frequency(const std::vector<double>& x, double rate, double lo = 50.0,
                                 double hi = 3900.0, double step = 2.0) {
  double best_f = lo;
  double best_p = -1.0;
  for (double f = lo; f <= hi; f += step) {
    const double p = windowed_power_at(x, f, rate);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  double a = best_f - step;
  double b = best_f + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 40; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (windowed_power_at(x, c, rate) > windowed_power_at(x, d, rate)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

// Power of x in the band [f_lo, f_hi] from a plain DFT over the whole signal.
inline double band_power(const std::vector<double>& x, double rate, double f_lo, double f_hi) {
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * rate / n;
    if (f < f_lo || f > f_hi) continue;
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / n;
      acc += x[t] * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    total += std::norm(acc);
  }
  return total;
}

// Number of integers covered by a union of half-open intervals [start, start+len).
inline std::size_t union_size(std::vector<std::pair<std::size_t, std::size_t>> intervals) {
  std::sort(intervals.begin(), intervals.end());
  std::size_t covered = 0;
  std::size_t reach = 0;
  for (const auto& [start, len] : intervals) {
    const std::size_t end = start + len;
    if (end <= reach) continue;
    covered += end - std::max(start, reach);
    reach = end;
  }
  return covered;
}

inline std::vector<double> sine(double freq, double rate, std::size_t n, double amp = 0.5,
                                double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) {
    x[t] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / rate + phase);
  }
  return x;
}

}  // namespace oracle

#endif  // SCFREG_TESTS_ORACLES_H_
