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

#include "scfreg/fft.h"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "scfreg/errors.h"

namespace scfreg {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t size) : size_(size) {
  if (!is_power_of_two(size)) {
    throw ConfigError("FFT size must be a power of two, got " +
                      std::to_string(size));
  }
  twiddles_.resize(size / 2);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(size);
    twiddles_[k] = Complex(std::cos(angle), std::sin(angle));
  }
  bit_reverse_.resize(size);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < size) ++bits;
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    bit_reverse_[i] = r;
  }
}

void FftPlan::transform(std::span<Complex> data, bool inverse) const {
  if (data.size() != size_) {
    throw StructuralError("FFT buffer length " + std::to_string(data.size()) +
                          " does not match plan size " + std::to_string(size_));
  }
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t j = bit_reverse_[i];
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= size_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = size_ / len;
    for (std::size_t start = 0; start < size_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles_[k * step];
        if (inverse) w = std::conj(w);
        const Complex a = data[start + k];
        const Complex b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& v : data) v *= scale;
  }
}

void FftPlan::forward(std::span<Complex> data) const { transform(data, false); }
void FftPlan::inverse(std::span<Complex> data) const { transform(data, true); }

std::vector<Complex> FftPlan::forward_real(std::span<const double> input) const {
  if (input.size() > size_) {
    throw StructuralError("real FFT input longer than plan size");
  }
  std::vector<Complex> buffer(size_);
  for (std::size_t i = 0; i < input.size(); ++i) buffer[i] = input[i];
  forward(buffer);
  buffer.resize(size_ / 2 + 1);
  return buffer;
}

std::vector<double> FftPlan::inverse_real(std::span<const Complex> half) const {
  const std::size_t bins = size_ / 2 + 1;
  if (half.size() != bins) {
    throw StructuralError("one-sided spectrum has " + std::to_string(half.size()) +
                          " bins, expected " + std::to_string(bins));
  }
  std::vector<Complex> buffer(size_);
  buffer[0] = Complex(half[0].real(), 0.0);
  if (size_ > 1) buffer[size_ / 2] = Complex(half[size_ / 2].real(), 0.0);
  for (std::size_t k = 1; k < size_ / 2; ++k) {
    buffer[k] = half[k];
    buffer[size_ - k] = std::conj(half[k]);
  }
  inverse(buffer);
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = buffer[i].real();
  return out;
}

}  // namespace scfreg
