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

#include "scfreg/features.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scfreg/errors.h"
#include "scfreg/fft.h"
#include "scfreg/rng.h"

namespace scfreg {

void FeatureMatrix::validate() const {
  for (double v : values.data()) {
    if (!std::isfinite(v)) throw StructuralError("feature matrix has a non-finite entry");
  }
  if (!(frame_shift_ms > 0.0)) throw StructuralError("frame shift must be positive");
  if (channel_order) {
    std::vector<bool> seen(dims(), false);
    if (channel_order->size() != dims()) {
      throw StructuralError("channel order length does not match feature dimension");
    }
    for (std::size_t c : *channel_order) {
      if (c >= dims() || seen[c]) throw StructuralError("channel order is not a permutation");
      seen[c] = true;
    }
  }
}

FeatureMatrix logmel(const Waveform& wave, const LogMelConfig& config) {
  const double f_max = config.f_max > 0.0 ? config.f_max : wave.sample_rate_hz() / 2.0;
  const ComplexSpectrogram spec = stft(wave, config.window_ms, config.hop_ms);
  const MelFilterbank bank = mel_filterbank(wave.sample_rate_hz(), spec.fft_size,
                                            config.num_bands, config.f_min, f_max);

  FeatureMatrix out;
  out.frame_shift_ms = config.hop_ms;
  out.values = Matrix(spec.num_frames, config.num_bands);
  std::vector<double> power(spec.num_bins);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    for (std::size_t k = 0; k < spec.num_bins; ++k) power[k] = std::norm(spec.at(t, k));
    const std::vector<double> mel = bank.apply(power);
    for (std::size_t b = 0; b < mel.size(); ++b) {
      out.values(t, b) = std::log(mel[b] + config.log_floor);
    }
  }
  if (config.normalization == LogMelNormalization::kNone || spec.num_frames == 0) {
    return out;
  }

  const auto frames = static_cast<double>(spec.num_frames);
  for (std::size_t b = 0; b < config.num_bands; ++b) {
    double mean = 0.0;
    for (std::size_t t = 0; t < spec.num_frames; ++t) mean += out.values(t, b);
    mean /= frames;
    double var = 0.0;
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
      const double d = out.values(t, b) - mean;
      var += d * d;
    }
    var /= frames;
    const double inv_std = var > config.variance_floor ? 1.0 / std::sqrt(var) : 0.0;
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
      out.values(t, b) = (out.values(t, b) - mean) * inv_std;
    }
  }
  return out;
}

ScfGeometry ScfGeometry::for_rate(int sample_rate_hz) {
  ScfGeometry g;
  if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
  g.sample_rate_hz = sample_rate_hz;
  g.filter_length = static_cast<std::size_t>(std::lround(0.016 * sample_rate_hz));
  g.filter_stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.000625 * sample_rate_hz)));
  return g;
}

std::size_t ScfGeometry::conv1_frames(std::size_t num_samples) const {
  if (num_samples < filter_length) return 0;
  return (num_samples - filter_length) / filter_stride + 1;
}

std::size_t ScfGeometry::output_frames(std::size_t num_samples) const {
  const std::size_t t1 = conv1_frames(num_samples);
  if (t1 < temporal_length) return 0;
  return (t1 - temporal_length) / temporal_stride + 1;
}

void ScfGeometry::validate() const {
  if (sample_rate_hz <= 0 || num_filters == 0 || filter_length == 0 ||
      filter_stride == 0 || num_temporal == 0 || temporal_length == 0 ||
      temporal_stride == 0) {
    throw ConfigError("SCF geometry entries must all be positive");
  }
  if (!(root > 0.0) || !(layer_norm_eps > 0.0)) {
    throw ConfigError("SCF root and layer-norm epsilon must be positive");
  }
}

ScfParams ScfParams::zeros(const ScfGeometry& geometry) {
  geometry.validate();
  ScfParams p;
  p.geometry = geometry;
  p.filters1 = Matrix(geometry.num_filters, geometry.filter_length);
  p.filters2 = Matrix(geometry.num_temporal, geometry.temporal_length);
  p.ln_gain.assign(geometry.feature_dim(), 0.0);
  p.ln_bias.assign(geometry.feature_dim(), 0.0);
  return p;
}

ScfParams ScfParams::random_init(const ScfGeometry& geometry, std::uint64_t seed) {
  ScfParams p = zeros(geometry);
  RngStream rng(seed, 0x5cf);
  const double k1 = 1.0 / std::sqrt(static_cast<double>(geometry.filter_length));
  for (double& v : p.filters1.data()) v = rng.uniform(-k1, k1);
  const double k2 = 1.0 / std::sqrt(static_cast<double>(geometry.temporal_length));
  for (double& v : p.filters2.data()) v = rng.uniform(-k2, k2);
  std::fill(p.ln_gain.begin(), p.ln_gain.end(), 1.0);
  return p;
}

void ScfParams::validate() const {
  geometry.validate();
  if (filters1.rows() != geometry.num_filters || filters1.cols() != geometry.filter_length ||
      filters2.rows() != geometry.num_temporal ||
      filters2.cols() != geometry.temporal_length ||
      ln_gain.size() != geometry.feature_dim() || ln_bias.size() != geometry.feature_dim()) {
    throw StructuralError("SCF parameter shapes do not match the geometry");
  }
  auto finite = [](const auto& values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  };
  if (!finite(filters1.data()) || !finite(filters2.data()) || !finite(ln_gain) ||
      !finite(ln_bias)) {
    throw StructuralError("SCF parameters contain a non-finite value");
  }
}

ScfOutput scf_forward(const Waveform& wave, const ScfParams& params) {
  params.validate();
  const ScfGeometry& geo = params.geometry;
  if (wave.sample_rate_hz() != geo.sample_rate_hz) {
    throw ConfigError("SCF front-end expects " + std::to_string(geo.sample_rate_hz) +
                      " Hz input, got " + std::to_string(wave.sample_rate_hz()) + " Hz");
  }
  const auto x = wave.samples();
  if (x.size() < geo.min_input_length()) {
    throw ConfigError("SCF input has " + std::to_string(x.size()) +
                      " samples; at least " + std::to_string(geo.min_input_length()) +
                      " are needed (filter length " + std::to_string(geo.filter_length) +
                      " + (" + std::to_string(geo.temporal_length) + " - 1) x stride " +
                      std::to_string(geo.filter_stride) + ")");
  }

  const std::size_t t1 = geo.conv1_frames(x.size());
  Matrix conv1(geo.num_filters, t1);
  for (std::size_t c = 0; c < geo.num_filters; ++c) {
    for (std::size_t t = 0; t < t1; ++t) conv1(c, t) = scf_conv1_at(params, x, c, t);
  }
  return scf_forward_from_conv1(std::vector<double>(x.begin(), x.end()), std::move(conv1),
                                params);
}

double scf_conv1_at(const ScfParams& params, std::span<const double> input, std::size_t c,
                    std::size_t t) {
  const ScfGeometry& geo = params.geometry;
  const double* f = params.filters1.row(c).data();
  const double* seg = input.data() + t * geo.filter_stride;
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t k = 0; k < geo.filter_length; ++k) acc += f[k] * seg[k];
  return acc;
}

ScfOutput scf_forward_from_conv1(std::vector<double> input, Matrix conv1,
                                 const ScfParams& params) {
  const ScfGeometry& geo = params.geometry;
  if (input.size() < geo.min_input_length()) {
    throw ConfigError("SCF input is shorter than one receptive field");
  }
  const std::size_t channels = geo.num_filters;
  const std::size_t temporal = geo.num_temporal;
  const std::size_t dim = geo.feature_dim();
  const std::size_t t1 = geo.conv1_frames(input.size());
  if (conv1.rows() != channels || conv1.cols() != t1) {
    throw StructuralError("conv1 activations do not match the input length");
  }
  const std::size_t t2 = geo.output_frames(input.size());
  const double exponent = 1.0 / geo.root;

  ScfOutput result;
  ScfTape& tape = result.tape;
  tape.geometry = geo;
  tape.input = std::move(input);
  tape.conv1 = std::move(conv1);
  tape.conv2 = Matrix(t2, dim);
  tape.normalized = Matrix(t2, dim);
  tape.inv_std.assign(t2, 0.0);

  std::vector<double> magnitude(t1);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto u1 = tape.conv1.row(c);
    for (std::size_t t = 0; t < t1; ++t) magnitude[t] = std::abs(u1[t]);
    for (std::size_t j = 0; j < temporal; ++j) {
      const double* g = params.filters2.row(j).data();
      for (std::size_t t = 0; t < t2; ++t) {
        const double* seg = magnitude.data() + t * geo.temporal_stride;
        double acc = 0.0;
#pragma omp simd reduction(+ : acc)
        for (std::size_t m = 0; m < geo.temporal_length; ++m) acc += g[m] * seg[m];
        tape.conv2(t, c * temporal + j) = acc;
      }
    }
  }

  FeatureMatrix& features = result.features;
  features.frame_shift_ms = geo.frame_shift_ms();
  features.values = Matrix(t2, dim);
  std::vector<double> act(dim);
  for (std::size_t t = 0; t < t2; ++t) {
    double mean = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      act[d] = std::pow(std::abs(tape.conv2(t, d)), exponent);
      mean += act[d];
    }
    mean /= static_cast<double>(dim);
    double var = 0.0;
    for (std::size_t d = 0; d < dim; ++d) var += (act[d] - mean) * (act[d] - mean);
    var /= static_cast<double>(dim);
    const double inv_std = 1.0 / std::sqrt(var + geo.layer_norm_eps);
    tape.inv_std[t] = inv_std;
    for (std::size_t d = 0; d < dim; ++d) {
      const double xhat = (act[d] - mean) * inv_std;
      tape.normalized(t, d) = xhat;
      features.values(t, d) = params.ln_gain[d] * xhat + params.ln_bias[d];
    }
  }
  return result;
}

ScfGradients scf_backward(const ScfTape& tape, const Matrix& upstream,
                          const ScfParams& params, bool want_input_grad) {
  params.validate();
  const ScfGeometry& geo = tape.geometry;
  if (!(geo == params.geometry)) {
    throw StructuralError("SCF tape and parameters have different geometries");
  }
  const std::size_t channels = geo.num_filters;
  const std::size_t temporal = geo.num_temporal;
  const std::size_t dim = geo.feature_dim();
  const std::size_t t1 = tape.conv1.cols();
  const std::size_t t2 = tape.conv2.rows();
  if (upstream.rows() != t2 || upstream.cols() != dim || tape.conv1.rows() != channels ||
      tape.normalized.rows() != t2 || tape.inv_std.size() != t2 ||
      geo.conv1_frames(tape.input.size()) != t1) {
    throw StructuralError("upstream gradient or tape shape does not match the forward pass");
  }

  ScfGradients grads;
  grads.filters1 = Matrix(channels, geo.filter_length);
  grads.filters2 = Matrix(temporal, geo.temporal_length);
  grads.ln_gain.assign(dim, 0.0);
  grads.ln_bias.assign(dim, 0.0);
  if (want_input_grad) grads.input.assign(tape.input.size(), 0.0);

  // Layer norm and root activation.
  const double exponent = 1.0 / geo.root;
  Matrix d_conv2(t2, dim);
  std::vector<double> d_xhat(dim);
  for (std::size_t t = 0; t < t2; ++t) {
    double mean_d = 0.0;
    double mean_dx = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double g = upstream(t, d);
      const double xhat = tape.normalized(t, d);
      grads.ln_gain[d] += g * xhat;
      grads.ln_bias[d] += g;
      d_xhat[d] = g * params.ln_gain[d];
      mean_d += d_xhat[d];
      mean_dx += d_xhat[d] * xhat;
    }
    mean_d /= static_cast<double>(dim);
    mean_dx /= static_cast<double>(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const double d_act =
          tape.inv_std[t] * (d_xhat[d] - mean_d - tape.normalized(t, d) * mean_dx);
      const double u = tape.conv2(t, d);
      const double mag = std::abs(u);
      if (mag < kRootGradientCutoff) continue;
      const double slope = exponent * std::pow(mag, exponent - 1.0);
      d_conv2(t, d) = d_act * (u > 0.0 ? slope : -slope);
    }
  }

  // Temporal convolution.
  Matrix d_mag(channels, t1);
  std::vector<double> magnitude(t1);
  for (std::size_t c = 0; c < channels; ++c) {
    const auto u1 = tape.conv1.row(c);
    for (std::size_t t = 0; t < t1; ++t) magnitude[t] = std::abs(u1[t]);
    double* dm = d_mag.row(c).data();
    for (std::size_t j = 0; j < temporal; ++j) {
      const double* g = params.filters2.row(j).data();
      double* dg = grads.filters2.row(j).data();
      for (std::size_t t = 0; t < t2; ++t) {
        const double up = d_conv2(t, c * temporal + j);
        if (up == 0.0) continue;
        const std::size_t start = t * geo.temporal_stride;
        for (std::size_t m = 0; m < geo.temporal_length; ++m) {
          dg[m] += up * magnitude[start + m];
          dm[start + m] += up * g[m];
        }
      }
    }
  }

  // |.| and the first convolution.
  for (std::size_t c = 0; c < channels; ++c) {
    const auto u1 = tape.conv1.row(c);
    const double* f = params.filters1.row(c).data();
    double* df = grads.filters1.row(c).data();
    const auto dm = d_mag.row(c);
    for (std::size_t t = 0; t < t1; ++t) {
      const double u = u1[t];
      if (u == 0.0 || dm[t] == 0.0) continue;
      const double d = u > 0.0 ? dm[t] : -dm[t];
      const std::size_t start = t * geo.filter_stride;
      const double* seg = tape.input.data() + start;
      for (std::size_t k = 0; k < geo.filter_length; ++k) df[k] += d * seg[k];
      if (want_input_grad) {
        double* dx = grads.input.data() + start;
        for (std::size_t k = 0; k < geo.filter_length; ++k) dx[k] += d * f[k];
      }
    }
  }
  return grads;
}

FilterPeaks filter_peak_frequencies(const ScfParams& params, std::size_t dft_size) {
  params.validate();
  const std::size_t size =
      next_power_of_two(std::max(dft_size, params.geometry.filter_length));
  const FftPlan plan(size);
  const double bin_hz = static_cast<double>(params.geometry.sample_rate_hz) /
                        static_cast<double>(size);
  FilterPeaks peaks;
  peaks.peak_hz.resize(params.geometry.num_filters);
  for (std::size_t c = 0; c < params.geometry.num_filters; ++c) {
    const std::vector<Complex> spectrum = plan.forward_real(params.filters1.row(c));
    std::size_t best = 0;
    double best_mag = std::abs(spectrum[0]);
    for (std::size_t k = 1; k < spectrum.size(); ++k) {
      const double mag = std::abs(spectrum[k]);
      if (mag > best_mag) {
        best_mag = mag;
        best = k;
      }
    }
    peaks.peak_hz[c] = static_cast<double>(best) * bin_hz;
  }
  peaks.order.resize(peaks.peak_hz.size());
  std::iota(peaks.order.begin(), peaks.order.end(), std::size_t{0});
  std::stable_sort(peaks.order.begin(), peaks.order.end(), [&](std::size_t a, std::size_t b) {
    return peaks.peak_hz[a] < peaks.peak_hz[b];
  });
  return peaks;
}

}  // namespace scfreg
