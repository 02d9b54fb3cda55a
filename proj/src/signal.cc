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

#include "scfreg/signal.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "scfreg/errors.h"

namespace scfreg {

Waveform::Waveform(std::vector<double> samples, int sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  if (sample_rate_hz_ <= 0) {
    throw ConfigError("sample rate must be positive, got " +
                      std::to_string(sample_rate_hz_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw StructuralError("non-finite sample at index " + std::to_string(i));
    }
  }
}

StftGeometry stft_geometry(int sample_rate_hz, double window_ms, double hop_ms) {
  if (!(window_ms > 0.0) || !(hop_ms > 0.0)) {
    throw ConfigError("STFT window and hop must be positive");
  }
  if (hop_ms > window_ms) {
    throw ConfigError("STFT hop must not exceed the window");
  }
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  const auto window = static_cast<std::size_t>(
      std::lround(window_ms * sample_rate_hz / 1000.0));
  const auto hop =
      static_cast<std::size_t>(std::lround(hop_ms * sample_rate_hz / 1000.0));
  if (window == 0 || hop == 0) {
    throw ConfigError("STFT window or hop rounds to zero samples");
  }
  return {window, std::min(hop, window), next_power_of_two(window)};
}

std::size_t stft_frame_count(std::size_t num_samples, std::size_t window_samples,
                             std::size_t hop_samples) {
  if (num_samples == 0) return 0;
  if (num_samples <= window_samples) return 1;
  const std::size_t excess = num_samples - window_samples;
  return 1 + (excess + hop_samples - 1) / hop_samples;
}

void ComplexSpectrogram::validate() const {
  if (window_samples == 0 || hop_samples == 0 || fft_size == 0) {
    throw StructuralError("spectrogram has a zero window, hop, or FFT size");
  }
  if (!is_power_of_two(fft_size)) {
    throw StructuralError("spectrogram FFT size is not a power of two");
  }
  if (hop_samples > window_samples || window_samples > fft_size) {
    throw StructuralError("spectrogram requires hop <= window <= fft_size");
  }
  if (num_bins != fft_size / 2 + 1) {
    throw StructuralError("spectrogram has " + std::to_string(num_bins) +
                          " bins but FFT size " + std::to_string(fft_size));
  }
  if (coefficients.size() != num_frames * num_bins) {
    throw StructuralError("spectrogram coefficient count does not match shape");
  }
  if (num_frames != stft_frame_count(original_length, window_samples, hop_samples)) {
    throw StructuralError("spectrogram frame count " + std::to_string(num_frames) +
                          " inconsistent with original length " +
                          std::to_string(original_length));
  }
  if (sample_rate_hz <= 0) {
    throw StructuralError("spectrogram sample rate must be positive");
  }
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  }
  return w;
}

ComplexSpectrogram stft(const Waveform& wave, double window_ms, double hop_ms) {
  const StftGeometry geo = stft_geometry(wave.sample_rate_hz(), window_ms, hop_ms);
  ComplexSpectrogram spec;
  spec.window_samples = geo.window_samples;
  spec.hop_samples = geo.hop_samples;
  spec.fft_size = geo.fft_size;
  spec.num_bins = geo.num_bins();
  spec.original_length = wave.size();
  spec.sample_rate_hz = wave.sample_rate_hz();
  spec.num_frames = stft_frame_count(wave.size(), geo.window_samples, geo.hop_samples);
  spec.coefficients.resize(spec.num_frames * spec.num_bins);

  const FftPlan plan(geo.fft_size);
  const std::vector<double> window = hann_window(geo.window_samples);
  const auto samples = wave.samples();
  std::vector<double> frame(geo.window_samples);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const std::size_t start = t * geo.hop_samples;
    for (std::size_t n = 0; n < geo.window_samples; ++n) {
      const std::size_t i = start + n;
      frame[n] = i < samples.size() ? samples[i] * window[n] : 0.0;
    }
    const std::vector<Complex> bins = plan.forward_real(frame);
    std::copy(bins.begin(), bins.end(), spec.coefficients.begin() + t * spec.num_bins);
  }
  return spec;
}

std::vector<double> istft_overlap_weight(const ComplexSpectrogram& spec) {
  spec.validate();
  const std::vector<double> window = hann_window(spec.window_samples);
  std::vector<double> weight(spec.original_length, 0.0);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const std::size_t start = t * spec.hop_samples;
    for (std::size_t n = 0; n < spec.window_samples; ++n) {
      const std::size_t i = start + n;
      if (i >= weight.size()) break;
      weight[i] += window[n] * window[n];
    }
  }
  return weight;
}

Waveform istft(const ComplexSpectrogram& spec) {
  spec.validate();
  const std::size_t length = spec.original_length;
  std::vector<double> out(length, 0.0);
  if (spec.num_frames == 0) return Waveform(std::move(out), spec.sample_rate_hz);

  const FftPlan plan(spec.fft_size);
  const std::vector<double> window = hann_window(spec.window_samples);
  std::vector<double> weight(length, 0.0);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const std::span<const Complex> row(spec.coefficients.data() + t * spec.num_bins,
                                       spec.num_bins);
    const std::vector<double> frame = plan.inverse_real(row);
    const std::size_t start = t * spec.hop_samples;
    for (std::size_t n = 0; n < spec.window_samples; ++n) {
      const std::size_t i = start + n;
      if (i >= length) break;
      out[i] += frame[n] * window[n];
      weight[i] += window[n] * window[n];
    }
  }
  for (std::size_t i = 0; i < length; ++i) {
    out[i] /= std::max(weight[i], kOlaFloor);
  }
  return Waveform(std::move(out), spec.sample_rate_hz);
}

namespace {

constexpr double kKaiserBeta = 8.6;
constexpr double kZeroCrossings = 16.0;

// Kaiser taper sampled on r in [0, 1]; linear interpolation between entries
// keeps the error around 1e-7, well below the resampler's stopband.
class KaiserTable {
 public:
  static constexpr std::size_t kEntries = 8192;

  KaiserTable() : values_(kEntries + 1) {
    const double norm = 1.0 / std::cyl_bessel_i(0.0, kKaiserBeta);
    for (std::size_t i = 0; i <= kEntries; ++i) {
      const double r = static_cast<double>(i) / kEntries;
      values_[i] = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) * norm;
    }
  }

  double operator()(double r) const {
    const double pos = std::min(std::abs(r), 1.0) * kEntries;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(pos), kEntries - 1);
    const double frac = pos - static_cast<double>(i);
    return values_[i] + (values_[i + 1] - values_[i]) * frac;
  }

 private:
  std::vector<double> values_;
};

const KaiserTable& kaiser_table() {
  static const KaiserTable table;
  return table;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

Waveform resample(const Waveform& wave, double factor) {
  if (!(factor >= kResampleMinFactor && factor <= kResampleMaxFactor)) {
    throw ConfigError("resample factor " + std::to_string(factor) +
                      " outside [0.5, 2.0]");
  }
  const auto samples = wave.samples();
  const std::size_t n_in = samples.size();
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) / factor));
  std::vector<double> out(n_out, 0.0);
  if (n_in == 0) return Waveform(std::move(out), wave.sample_rate_hz());

  const double cutoff = std::min(1.0, 1.0 / factor);
  const double half_width = kZeroCrossings / cutoff;
  const KaiserTable& taper = kaiser_table();
  const auto last = static_cast<std::int64_t>(n_in) - 1;

  for (std::size_t j = 0; j < n_out; ++j) {
    const double center = static_cast<double>(j) * factor;
    const auto lo = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::ceil(center - half_width)));
    const auto hi = std::min<std::int64_t>(
        last, static_cast<std::int64_t>(std::floor(center + half_width)));
    double acc = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) {
      const double offset = center - static_cast<double>(k);
      acc += samples[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * offset) *
             taper(offset / half_width);
    }
    out[j] = acc;
  }
  return Waveform(std::move(out), wave.sample_rate_hz());
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelFilterbank::apply(std::span<const double> power) const {
  if (power.size() != weights.cols()) {
    throw StructuralError("power spectrum has " + std::to_string(power.size()) +
                          " bins, filterbank expects " +
                          std::to_string(weights.cols()));
  }
  std::vector<double> out(weights.rows(), 0.0);
  for (std::size_t b = 0; b < weights.rows(); ++b) {
    const auto row = weights.row(b);
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * power[k];
    out[b] = acc;
  }
  return out;
}

MelFilterbank mel_filterbank(int sample_rate_hz, std::size_t fft_size,
                             std::size_t n_bands, double f_min, double f_max) {
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  if (!is_power_of_two(fft_size)) throw ConfigError("FFT size must be a power of two");
  if (n_bands == 0) throw ConfigError("mel filterbank needs at least one band");
  const double nyquist = sample_rate_hz / 2.0;
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= nyquist)) {
    throw ConfigError("mel filterbank requires 0 <= f_min < f_max <= Nyquist (" +
                      std::to_string(nyquist) + " Hz)");
  }

  const std::size_t bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_step = (hz_to_mel(f_max) - mel_lo) / static_cast<double>(n_bands + 1);
  std::vector<double> edges(n_bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + mel_step * static_cast<double>(i));
  }
  edges.back() = f_max;

  MelFilterbank fb;
  fb.weights = Matrix(n_bands, bins);
  fb.center_hz.resize(n_bands);
  fb.f_min = f_min;
  fb.f_max = f_max;
  fb.sample_rate_hz = sample_rate_hz;
  fb.fft_size = fft_size;
  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(fft_size);
  for (std::size_t b = 0; b < n_bands; ++b) {
    const double lo = edges[b];
    const double center = edges[b + 1];
    const double hi = edges[b + 2];
    fb.center_hz[b] = center;
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= center) {
        w = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb.weights(b, k) = w;
      any = any || w > 0.0;
    }
    // Bands narrower than one bin would be empty; give them the nearest bin.
    if (!any) {
      const auto k = std::min<std::size_t>(
          bins - 1, static_cast<std::size_t>(std::lround(center / bin_hz)));
      fb.weights(b, k) = 1.0;
    }
  }
  return fb;
}

}  // namespace scfreg
