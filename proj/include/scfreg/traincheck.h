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

#ifndef SCFREG_TRAINCHECK_H_
#define SCFREG_TRAINCHECK_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scfreg/features.h"
#include "scfreg/specaug.h"

namespace scfreg {

// ---------------------------------------------------------------------------
// Finite-difference gradient check

enum class GradCheckMode {
  kRandom,     // random signed input and parameters
  kPositive,   // nonnegative input and filters: every pre-activation > 0
  kZeroInput,  // all-zero input; only convolution filters are probed
};

struct GradCheckConfig {
  std::size_t probe_count = 500;
  double eps = 1e-4;
  std::uint64_t seed = 1;
  GradCheckMode mode = GradCheckMode::kRandom;
  ScfGeometry geometry;
  // 0 picks about 0.2 s, rounded so that every input sample lies inside
  // some output frame's receptive field.
  std::size_t num_samples = 0;
  // Redraw cap per probe when it keeps landing next to a kink.
  std::size_t max_redraws = 200;
};

struct GroupError {
  std::string name;
  std::size_t probes = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradReport {
  GradCheckMode mode = GradCheckMode::kRandom;
  double eps = 0.0;
  std::size_t probe_count = 0;
  std::size_t kink_exclusions = 0;
  std::vector<GroupError> groups;
  // First draws of each probe whose touched pre-activations all stay at
  // least 1e-6 from zero, whether or not the stricter rule kept them, and how
  // many of those were within 1e-3.
  std::size_t loose_probes = 0;
  std::size_t loose_within_tolerance = 0;

  double max_rel_error() const;
  double max_abs_error() const;
  double max_abs_analytic() const;
};

// Relative error |a - fd| / max(|a|, |fd|, 1e-8).
double relative_error(double analytic, double numeric);

// Compares scf_backward with central differences of
// loss = sum(readout * features) for random readout weights, on probe_count
// random coordinates spread over filters1, filters2, ln_gain, ln_bias and the
// input. A probe is redrawn when a touched pre-activation is within 1e-6 of
// zero or changes sign between the +-eps evaluations, or when halving the
// step moves the difference quotient by more than 1e-4 relative (the root's
// curvature near zero), up to max_redraws times.
GradReport finite_difference_check(const GradCheckConfig& config);

void write_report(std::ostream& os, const GradReport& report);

// ---------------------------------------------------------------------------
// Masked-gradient experiment

struct MaskedGradientConfig {
  ScfGeometry geometry;
  std::size_t num_samples = 4000;
  MaskPolicy feature_policy;  // partial baseline masks for the first check
  double stft_masked_fraction = 0.5;
};

struct MaskedGradientReport {
  std::uint64_t seed = 0;
  // Baseline masking after feature extraction.
  std::size_t masked_feature_cells = 0;
  double max_abs_grad_at_masked_cells = 0.0;
  double baseline_unmasked_filters1_norm = 0.0;
  double baseline_all_masked_filters1_norm = 0.0;
  double baseline_all_masked_filters2_norm = 0.0;
  // Masking in the STFT domain before feature extraction.
  std::size_t stft_frames = 0;
  std::size_t stft_masked_frames = 0;
  double stft_masked_filters1_norm = 0.0;
  double stft_masked_filters2_norm = 0.0;

  bool passed() const;
};

// Readout loss over all feature cells. Baseline arm: masks applied to the SCF
// output zero the gradient at masked cells, and masking every frame leaves
// the filters with exactly zero gradient. STFT arm: the same amount of masking
// applied to the waveform still lets gradient reach every filter.
MaskedGradientReport masked_gradient_experiment(std::uint64_t seed,
                                                const MaskedGradientConfig& config = {});

void write_report(std::ostream& os, const MaskedGradientReport& report);

// ---------------------------------------------------------------------------
// Toy overfitting demonstration

struct ToyTaskConfig {
  std::uint64_t seed = 1;
  std::size_t num_classes = 4;
  std::size_t train_size = 50;
  std::size_t dev_size = 50;
  double duration_s = 0.5;
  int sample_rate_hz = 8000;
};

struct ToyExample {
  Waveform wave;
  std::size_t label;
};

// Synthetic classification data: each class is a family of band-limited
// tone mixtures in overlapping class-specific bands plus white noise.
struct ToyTask {
  ToyTaskConfig config;
  std::vector<ToyExample> train;
  std::vector<ToyExample> dev;
};

ToyTask make_toy_task(const ToyTaskConfig& config);

struct DemoConfig {
  std::size_t epochs = 40;
  double head_learning_rate = 0.1;
  double frontend_learning_rate = 0.05;
  std::uint64_t seed = 1;
  // Augmented arms: tempo perturbation with p = 1 on [0.7, 1.3] plus masking.
  // Toy clips are 50 frames long; time masks of up to 3 frames cover about
  // the share that 15-frame masks cover on utterances of a few seconds.
  double tempo_min = 0.7;
  double tempo_max = 1.3;
  MaskPolicy masking{3, 2, 8, 2, MaskDomain::kStftDomain};
};

struct CurvePoint {
  std::size_t epoch;
  std::string arm;
  double train_loss;
  double dev_loss;
};

struct ArmResult {
  std::string arm;
  bool diverged = false;
  std::string diagnostics;
  double final_train_loss = 0.0;
  double final_dev_loss = 0.0;
};

struct DemoResult {
  std::vector<CurvePoint> curve;
  std::vector<ArmResult> arms;
};

// Trains a linear softmax head on time-pooled features for four arms:
// {logmel, scf} x {noaug, aug}. Log Mel is frozen; SCF is trained end to end.
// Losses are cross-entropies on the clean train and dev sets after each
// epoch of full-batch gradient descent.
DemoResult toy_overfit_demo(const ToyTask& task, const DemoConfig& config);

// Header "epoch,arm,train_loss,dev_loss", one row per (epoch, arm).
void write_curves_csv(std::ostream& os, const DemoResult& result);

}  // namespace scfreg

#endif  // SCFREG_TRAINCHECK_H_
