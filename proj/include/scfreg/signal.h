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

#ifndef SCFREG_SIGNAL_H_
#define SCFREG_SIGNAL_H_

#include <cstddef>
#include <span>
#include <vector>

#include "scfreg/fft.h"
#include "scfreg/matrix.h"

namespace scfreg {

// Mono audio. Samples are nominally in [-1, 1] and always finite.
class Waveform {
 public:
  Waveform(std::vector<double> samples, int sample_rate_hz);

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int sample_rate_hz() const { return sample_rate_hz_; }
  double duration_s() const {
    return static_cast<double>(samples_.size()) / sample_rate_hz_;
  }
  double operator[](std::size_t i) const { return samples_[i]; }

  std::vector<double> release() && { return std::move(samples_); }

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_hz_;
};

// Sample-domain framing derived from millisecond settings.
struct StftGeometry {
  std::size_t window_samples;
  std::size_t hop_samples;
  std::size_t fft_size;
  std::size_t num_bins() const { return fft_size / 2 + 1; }
};

StftGeometry stft_geometry(int sample_rate_hz, double window_ms, double hop_ms);

// 1 + ceil(max(0, N - window) / hop) for N >= 1, and 0 for N == 0. The last
// frame may run past the signal end and is zero-padded.
std::size_t stft_frame_count(std::size_t num_samples, std::size_t window_samples,
                             std::size_t hop_samples);

// One-sided STFT, frames x bins, row-major.
struct ComplexSpectrogram {
  std::vector<Complex> coefficients;
  std::size_t num_frames = 0;
  std::size_t num_bins = 0;
  std::size_t window_samples = 0;
  std::size_t hop_samples = 0;
  std::size_t fft_size = 0;
  std::size_t original_length = 0;
  int sample_rate_hz = 0;

  Complex& at(std::size_t frame, std::size_t bin) {
    return coefficients[frame * num_bins + bin];
  }
  const Complex& at(std::size_t frame, std::size_t bin) const {
    return coefficients[frame * num_bins + bin];
  }

  // Throws StructuralError when the metadata contradicts itself.
  void validate() const;
};

// Periodic Hann window: 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(std::size_t length);

ComplexSpectrogram stft(const Waveform& wave, double window_ms = 25.0,
                        double hop_ms = 10.0);

// Weighted overlap-add with the analysis window as synthesis window, divided
// by the summed squared window (floored at kOlaFloor).
Waveform istft(const ComplexSpectrogram& spec);

// Samples near the signal ends are covered by a single window tail. A floor
// well above rounding level keeps modified (masked) spectra from being blown
// up there by a near-zero divisor.
inline constexpr double kOlaFloor = 1e-3;

// Summed squared synthesis window per output sample. Samples where this does
// not exceed kOlaFloor cannot be reconstructed.
std::vector<double> istft_overlap_weight(const ComplexSpectrogram& spec);

// Band-limited resampling used as a speed change: the output has
// round(N / factor) samples and keeps the declared sample rate, so every
// frequency is multiplied by `factor`. Windowed sinc with a Kaiser window
// (beta 8.6, 16 zero crossings per side), cutoff min(1, 1/factor) Nyquist.
Waveform resample(const Waveform& wave, double factor);

inline constexpr double kResampleMinFactor = 0.5;
inline constexpr double kResampleMaxFactor = 2.0;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters, one row per band, ordered by center frequency.
struct MelFilterbank {
  Matrix weights;  // bands x (fft_size / 2 + 1)
  std::vector<double> center_hz;
  double f_min = 0.0;
  double f_max = 0.0;
  int sample_rate_hz = 0;
  std::size_t fft_size = 0;

  std::size_t num_bands() const { return weights.rows(); }

  // Mel-band energies of one power-spectrum frame.
  std::vector<double> apply(std::span<const double> power) const;
};

MelFilterbank mel_filterbank(int sample_rate_hz, std::size_t fft_size,
                             std::size_t n_bands, double f_min, double f_max);

}  // namespace scfreg

#endif  // SCFREG_SIGNAL_H_
