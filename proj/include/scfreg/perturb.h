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

#ifndef SCFREG_PERTURB_H_
#define SCFREG_PERTURB_H_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "scfreg/signal.h"

namespace scfreg {

enum class PerturbKind {
  kSpeed,
  kTempo,
  kPitch,
  kNonlinearAmplitude,
  kMuLaw,
  kPreemphasisJitter,
};

std::string_view to_string(PerturbKind kind);
std::optional<PerturbKind> parse_perturb_kind(std::string_view name);

// One perturbation with its application probability and the range its
// strength factor is drawn from. Factor units depend on the kind: a ratio for
// speed and tempo, semitones for pitch, the exponent for nonlinear amplitude,
// mu for mu-law and the second preemphasis coefficient for jitter.
struct PerturbSpec {
  PerturbKind kind = PerturbKind::kSpeed;
  double probability = 0.0;
  double factor_min = 1.0;
  double factor_max = 1.0;

  void validate() const;
  friend bool operator==(const PerturbSpec&, const PerturbSpec&) = default;
};

// Perturbations applied in declaration order.
struct PerturbChain {
  std::vector<PerturbSpec> specs;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const PerturbChain&, const PerturbChain&) = default;
};

struct AppliedPerturbation {
  PerturbKind kind;
  double factor;
};

struct ChainResult {
  Waveform wave;
  std::vector<AppliedPerturbation> applied;
};

inline constexpr double kSpeedMinFactor = 0.5;
inline constexpr double kSpeedMaxFactor = 2.0;
inline constexpr double kPitchMaxSemitones = 4.0;
inline constexpr double kJitterMaxAlpha = 0.2;

// WSOLA settings in milliseconds.
struct WsolaConfig {
  double frame_ms = 25.0;
  double synthesis_hop_ms = 12.5;
  double tolerance_ms = 5.0;
};

std::size_t wsola_synthesis_hop(int sample_rate_hz, const WsolaConfig& config = {});

// Resampling by `a`: duration divided by a, pitch multiplied by a.
Waveform perturb_speed(const Waveform& wave, double a);

// WSOLA time-scale modification. The output has exactly round(N / a)
// samples while the local pitch is kept. Inputs shorter than one frame are
// returned unchanged.
Waveform perturb_tempo(const Waveform& wave, double a, const WsolaConfig& config = {});

// Tempo change by 1 / 2^(s/12) followed by resampling back to N samples, so
// the pitch moves by s semitones and the duration is kept.
Waveform perturb_pitch(const Waveform& wave, double semitones);

// sign(x) |x|^beta. Signals with peak above 1 are peak-normalized first and
// the original peak is restored afterwards.
Waveform perturb_amplitude_nonlinear(const Waveform& wave, double beta);

// sign(x) ln(1 + mu |x|) / ln(1 + mu), with the same peak handling.
Waveform perturb_mulaw(const Waveform& wave, double mu);

// y(t) = x(t) - alpha x(t - 1), y(0) = x(0).
Waveform preemphasis(const Waveform& wave, double alpha);

// A second preemphasis pass with a small random coefficient.
Waveform perturb_preemphasis_jitter(const Waveform& wave, double alpha_tilde);

Waveform apply_perturbation(const Waveform& wave, PerturbKind kind, double factor);

// For each spec: draw u ~ U(0, 1); when u < p, draw the factor uniformly from
// [factor_min, factor_max] and apply it. Draws come from the stream keyed by
// (chain.seed, utterance_index).
ChainResult apply_chain(const Waveform& wave, const PerturbChain& chain,
                        std::uint64_t utterance_index);

}  // namespace scfreg

#endif  // SCFREG_PERTURB_H_
