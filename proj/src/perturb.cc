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

#include "scfreg/perturb.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "scfreg/errors.h"
#include "scfreg/rng.h"

namespace scfreg {

namespace {

constexpr std::array<std::pair<PerturbKind, std::string_view>, 6> kKindNames{{
    {PerturbKind::kSpeed, "speed"},
    {PerturbKind::kTempo, "tempo"},
    {PerturbKind::kPitch, "pitch"},
    {PerturbKind::kNonlinearAmplitude, "nonlinear_amplitude"},
    {PerturbKind::kMuLaw, "mulaw"},
    {PerturbKind::kPreemphasisJitter, "preemphasis_jitter"},
}};

void check_speed_factor(double a, std::string_view what) {
  if (!(a >= kSpeedMinFactor && a <= kSpeedMaxFactor)) {
    throw ConfigError(std::string(what) + " factor " + std::to_string(a) +
                      " outside [0.5, 2.0]");
  }
}

// Applies `map` to peak-normalized samples when the peak exceeds 1.
template <typename Map>
Waveform map_normalized(const Waveform& wave, Map map) {
  const auto in = wave.samples();
  double peak = 0.0;
  for (double v : in) peak = std::max(peak, std::abs(v));
  const double scale = peak > 1.0 ? peak : 1.0;
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in[i] / scale;
    const double y = map(std::abs(x));
    out[i] = (x < 0.0 ? -y : y) * scale;
  }
  return Waveform(std::move(out), wave.sample_rate_hz());
}

std::size_t ms_to_samples(double ms, int rate) {
  return static_cast<std::size_t>(std::lround(ms * rate / 1000.0));
}

double sample_or_zero(std::span<const double> x, std::int64_t i) {
  return (i >= 0 && i < static_cast<std::int64_t>(x.size()))
             ? x[static_cast<std::size_t>(i)]
             : 0.0;
}

double normalized_xcorr(std::span<const double> x, std::int64_t a, std::int64_t b,
                        std::size_t length) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t n = 0; n < length; ++n) {
    const auto off = static_cast<std::int64_t>(n);
    const double va = sample_or_zero(x, a + off);
    const double vb = sample_or_zero(x, b + off);
    ab += va * vb;
    aa += va * va;
    bb += vb * vb;
  }
  const double denom = std::sqrt(aa * bb);
  return denom > 0.0 ? ab / denom : 0.0;
}

}  // namespace

std::string_view to_string(PerturbKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PerturbKind> parse_perturb_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void PerturbSpec::validate() const {
  const std::string kind_name(to_string(kind));
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ConfigError(kind_name + ": probability must lie in [0, 1]");
  }
  if (!std::isfinite(factor_min) || !std::isfinite(factor_max)) {
    throw ConfigError(kind_name + ": factor range must be finite");
  }
  if (factor_min > factor_max) {
    throw ConfigError(kind_name + ": factor_min exceeds factor_max");
  }
  auto require = [&](bool ok, const char* rule) {
    if (!ok) throw ConfigError(kind_name + ": factors must satisfy " + rule);
  };
  switch (kind) {
    case PerturbKind::kSpeed:
    case PerturbKind::kTempo:
      require(factor_min >= kSpeedMinFactor && factor_max <= kSpeedMaxFactor,
              "0.5 <= a <= 2.0");
      break;
    case PerturbKind::kPitch:
      require(factor_min >= -kPitchMaxSemitones && factor_max <= kPitchMaxSemitones,
              "-4 <= semitones <= 4");
      break;
    case PerturbKind::kNonlinearAmplitude:
      require(factor_min > 0.0, "beta > 0");
      break;
    case PerturbKind::kMuLaw:
      require(factor_min > 0.0, "mu > 0");
      break;
    case PerturbKind::kPreemphasisJitter:
      require(factor_min >= -kJitterMaxAlpha && factor_max <= kJitterMaxAlpha,
              "-0.2 <= alpha <= 0.2");
      break;
  }
}

void PerturbChain::validate() const {
  for (const auto& spec : specs) spec.validate();
}

std::size_t wsola_synthesis_hop(int sample_rate_hz, const WsolaConfig& config) {
  return std::max<std::size_t>(1, ms_to_samples(config.synthesis_hop_ms, sample_rate_hz));
}

Waveform perturb_speed(const Waveform& wave, double a) {
  check_speed_factor(a, "speed");
  return resample(wave, a);
}

Waveform perturb_tempo(const Waveform& wave, double a, const WsolaConfig& config) {
  check_speed_factor(a, "tempo");
  const int rate = wave.sample_rate_hz();
  const std::size_t frame = ms_to_samples(config.frame_ms, rate);
  const std::size_t hop = wsola_synthesis_hop(rate, config);
  const auto tolerance = static_cast<std::int64_t>(ms_to_samples(config.tolerance_ms, rate));
  if (frame == 0 || hop > frame) {
    throw ConfigError("WSOLA needs a non-empty frame no shorter than its hop");
  }
  const auto x = wave.samples();
  if (x.size() < frame) return wave;

  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) / a));
  const std::size_t num_frames = (out_len + hop - 1) / hop + 1;
  const std::vector<double> window = hann_window(frame);
  std::vector<double> out((num_frames - 1) * hop + frame, 0.0);
  std::vector<double> norm(out.size(), 0.0);

  const auto last_start = static_cast<std::int64_t>(x.size()) - 1;
  std::int64_t prev = 0;
  for (std::size_t k = 0; k < num_frames; ++k) {
    std::int64_t pos = 0;
    if (k > 0) {
      const auto nominal = static_cast<std::int64_t>(
          std::llround(static_cast<double>(k * hop) * a));
      const std::int64_t lo = std::max<std::int64_t>(0, nominal - tolerance);
      const std::int64_t hi = std::max(lo, std::min(last_start, nominal + tolerance));
      // Natural continuation of the previous segment; preferred on ties.
      const std::int64_t target = prev + static_cast<std::int64_t>(hop);
      pos = std::clamp(target, lo, hi);
      double best = normalized_xcorr(x, target, pos, frame);
      for (std::int64_t cand = lo; cand <= hi; ++cand) {
        if (cand == pos) continue;
        const double score = normalized_xcorr(x, target, cand, frame);
        if (score > best + 1e-12) {
          best = score;
          pos = cand;
        }
      }
    }
    const std::size_t out_start = k * hop;
    for (std::size_t n = 0; n < frame; ++n) {
      out[out_start + n] += window[n] * sample_or_zero(x, pos + static_cast<std::int64_t>(n));
      norm[out_start + n] += window[n];
    }
    prev = pos;
  }
  out.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    if (norm[i] > 1e-8) out[i] /= norm[i];
  }
  return Waveform(std::move(out), rate);
}

Waveform perturb_pitch(const Waveform& wave, double semitones) {
  if (!(std::abs(semitones) <= kPitchMaxSemitones)) {
    throw ConfigError("pitch shift " + std::to_string(semitones) +
                      " semitones outside [-4, 4]");
  }
  const double ratio = std::exp2(semitones / 12.0);
  if (wave.size() < ms_to_samples(WsolaConfig{}.frame_ms, wave.sample_rate_hz())) {
    return wave;
  }
  const Waveform stretched = perturb_tempo(wave, 1.0 / ratio);
  std::vector<double> out = std::move(resample(stretched, ratio)).release();
  out.resize(wave.size(), 0.0);
  return Waveform(std::move(out), wave.sample_rate_hz());
}

Waveform perturb_amplitude_nonlinear(const Waveform& wave, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ConfigError("nonlinear amplitude exponent must be positive");
  }
  return map_normalized(wave, [beta](double mag) { return std::pow(mag, beta); });
}

Waveform perturb_mulaw(const Waveform& wave, double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw ConfigError("mu-law parameter must be positive");
  }
  const double denom = std::log1p(mu);
  return map_normalized(wave, [mu, denom](double mag) { return std::log1p(mu * mag) / denom; });
}

Waveform preemphasis(const Waveform& wave, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("preemphasis coefficient must lie in [0, 1]");
  }
  const auto x = wave.samples();
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t t = 1; t < x.size(); ++t) y[t] = x[t] - alpha * x[t - 1];
  return Waveform(std::move(y), wave.sample_rate_hz());
}

Waveform perturb_preemphasis_jitter(const Waveform& wave, double alpha_tilde) {
  if (!(std::abs(alpha_tilde) <= kJitterMaxAlpha)) {
    throw ConfigError("preemphasis jitter " + std::to_string(alpha_tilde) +
                      " outside [-0.2, 0.2]");
  }
  const auto x = wave.samples();
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t t = 1; t < x.size(); ++t) y[t] = x[t] - alpha_tilde * x[t - 1];
  return Waveform(std::move(y), wave.sample_rate_hz());
}

Waveform apply_perturbation(const Waveform& wave, PerturbKind kind, double factor) {
  switch (kind) {
    case PerturbKind::kSpeed:
      return perturb_speed(wave, factor);
    case PerturbKind::kTempo:
      return perturb_tempo(wave, factor);
    case PerturbKind::kPitch:
      return perturb_pitch(wave, factor);
    case PerturbKind::kNonlinearAmplitude:
      return perturb_amplitude_nonlinear(wave, factor);
    case PerturbKind::kMuLaw:
      return perturb_mulaw(wave, factor);
    case PerturbKind::kPreemphasisJitter:
      return perturb_preemphasis_jitter(wave, factor);
  }
  throw ConfigError("unknown perturbation kind");
}

ChainResult apply_chain(const Waveform& wave, const PerturbChain& chain,
                        std::uint64_t utterance_index) {
  chain.validate();
  RngStream rng(chain.seed, utterance_index);
  ChainResult result{wave, {}};
  for (const auto& spec : chain.specs) {
    if (rng.uniform() >= spec.probability) continue;
    const double factor = rng.uniform(spec.factor_min, spec.factor_max);
    result.wave = apply_perturbation(result.wave, spec.kind, factor);
    result.applied.push_back({spec.kind, factor});
  }
  return result;
}

}  // namespace scfreg
