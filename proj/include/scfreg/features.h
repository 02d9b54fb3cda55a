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

#ifndef SCFREG_FEATURES_H_
#define SCFREG_FEATURES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scfreg/matrix.h"
#include "scfreg/signal.h"

namespace scfreg {

// Frames x channels feature matrix.
struct FeatureMatrix {
  Matrix values;
  double frame_shift_ms = 10.0;
  // Optional channel permutation, e.g. the peak-frequency order of learned
  // filters.
  std::optional<std::vector<std::size_t>> channel_order;

  std::size_t num_frames() const { return values.rows(); }
  std::size_t dims() const { return values.cols(); }

  // Throws StructuralError on non-finite entries or a malformed channel order.
  void validate() const;
};

enum class LogMelNormalization { kPerUtterance, kNone };

struct LogMelConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t num_bands = 80;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
  double variance_floor = 1e-8;
  LogMelNormalization normalization = LogMelNormalization::kPerUtterance;
};

// STFT power spectrum, mel warping, log(x + floor) and per-channel mean and
// variance normalization over the utterance. Channels whose variance does not
// exceed the floor become all zeros.
FeatureMatrix logmel(const Waveform& wave, const LogMelConfig& config = {});

// Shape of the supervised convolutional front-end. Defaults are the 8 kHz
// setup: 150 filters of 16 ms (128 samples) at a 0.625 ms stride, then 5
// temporal filters of 40 frames at a stride of 16 frames.
struct ScfGeometry {
  int sample_rate_hz = 8000;
  std::size_t num_filters = 150;
  std::size_t filter_length = 128;
  std::size_t filter_stride = 5;
  std::size_t num_temporal = 5;
  std::size_t temporal_length = 40;
  std::size_t temporal_stride = 16;
  double root = 2.5;
  double layer_norm_eps = 1e-5;

  // Same time spans at another sample rate.
  static ScfGeometry for_rate(int sample_rate_hz);

  std::size_t feature_dim() const { return num_filters * num_temporal; }
  // Shortest input that yields one output frame.
  std::size_t min_input_length() const {
    return filter_length + (temporal_length - 1) * filter_stride;
  }
  // Input samples spanned by one output frame and the step between frames.
  std::size_t receptive_field() const { return min_input_length(); }
  std::size_t frame_step_samples() const { return filter_stride * temporal_stride; }
  double frame_shift_ms() const {
    return 1000.0 * static_cast<double>(frame_step_samples()) / sample_rate_hz;
  }
  std::size_t conv1_frames(std::size_t num_samples) const;
  std::size_t output_frames(std::size_t num_samples) const;

  void validate() const;
  friend bool operator==(const ScfGeometry&, const ScfGeometry&) = default;
};

// Learnable parameters. Feature channel c * num_temporal + j is temporal
// filter j applied to the magnitude of first-layer filter c.
struct ScfParams {
  ScfGeometry geometry;
  Matrix filters1;  // num_filters x filter_length
  Matrix filters2;  // num_temporal x temporal_length
  std::vector<double> ln_gain;
  std::vector<double> ln_bias;

  // Filters ~ U(-k, k) with k = 1 / sqrt(fan_in); unit gain, zero bias.
  static ScfParams random_init(const ScfGeometry& geometry, std::uint64_t seed);
  static ScfParams zeros(const ScfGeometry& geometry);

  void validate() const;
  friend bool operator==(const ScfParams&, const ScfParams&) = default;
};

struct ScfGradients {
  Matrix filters1;
  Matrix filters2;
  std::vector<double> ln_gain;
  std::vector<double> ln_bias;
  std::vector<double> input;
};

// Intermediate values kept for the backward pass.
struct ScfTape {
  ScfGeometry geometry;
  std::vector<double> input;
  Matrix conv1;       // num_filters x conv1 frames, before |.|
  Matrix conv2;       // frames x feature_dim, before |.|^(1/root)
  Matrix normalized;  // frames x feature_dim, layer-norm output before affine
  std::vector<double> inv_std;  // per frame
};

struct ScfOutput {
  FeatureMatrix features;
  ScfTape tape;
};

// conv1 -> |.| -> conv2 per channel -> |.|^(1/root) -> layer norm over the
// feature axis with affine. Valid convolutions without bias.
ScfOutput scf_forward(const Waveform& wave, const ScfParams& params);

// Pre-activation of first-layer filter c at conv1 frame t.
double scf_conv1_at(const ScfParams& params, std::span<const double> input, std::size_t c,
                    std::size_t t);

// The layers after the first convolution, given its pre-activations
// (num_filters x conv1 frames) and the samples they were computed from.
ScfOutput scf_forward_from_conv1(std::vector<double> input, Matrix conv1,
                                 const ScfParams& params);

// Below this magnitude the root activation is treated as having zero slope.
inline constexpr double kRootGradientCutoff = 1e-8;

// Analytic gradients of sum(upstream * features) with respect to the
// parameters and the input samples. |.| has subgradient 0 at 0. With
// want_input_grad false, ScfGradients::input is left empty.
ScfGradients scf_backward(const ScfTape& tape, const Matrix& upstream,
                          const ScfParams& params, bool want_input_grad = true);

struct FilterPeaks {
  std::vector<double> peak_hz;
  // Stable ascending order of peak_hz; order[i] is the filter at rank i.
  std::vector<std::size_t> order;
};

// Peak of each first-layer filter's magnitude response, read from a
// zero-padded DFT. Ties go to the lowest bin, so an all-zero filter peaks at
// 0 Hz.
FilterPeaks filter_peak_frequencies(const ScfParams& params, std::size_t dft_size = 1024);

}  // namespace scfreg

#endif  // SCFREG_FEATURES_H_
