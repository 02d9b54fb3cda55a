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

#ifndef SCFREG_FFT_H_
#define SCFREG_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace scfreg {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// Iterative radix-2 FFT with precomputed twiddles and bit-reversal table.
// Immutable after construction; one plan may be shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t size);

  std::size_t size() const { return size_; }

  // In-place transforms. inverse() includes the 1/N scaling.
  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

  // Real input of length size() (shorter input is zero-padded) to the
  // one-sided spectrum of size()/2 + 1 bins.
  std::vector<Complex> forward_real(std::span<const double> input) const;

  // One-sided spectrum of size()/2 + 1 bins back to size() real samples.
  // The imaginary parts of the DC and Nyquist bins are ignored.
  std::vector<double> inverse_real(std::span<const Complex> half) const;

 private:
  void transform(std::span<Complex> data, bool inverse) const;

  std::size_t size_;
  std::vector<Complex> twiddles_;
  std::vector<std::size_t> bit_reverse_;
};

}  // namespace scfreg

#endif  // SCFREG_FFT_H_
