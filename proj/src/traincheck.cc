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

#include "scfreg/traincheck.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "scfreg/errors.h"
#include "scfreg/perturb.h"
#include "scfreg/rng.h"

namespace scfreg {

namespace {

enum class Group { kFilters1, kFilters2, kGain, kBias, kInput };

constexpr std::array<Group, 5> kAllGroups{Group::kFilters1, Group::kFilters2, Group::kGain,
                                          Group::kBias, Group::kInput};

const char* group_name(Group g) {
  switch (g) {
    case Group::kFilters1:
      return "filters1";
    case Group::kFilters2:
      return "filters2";
    case Group::kGain:
      return "ln_gain";
    case Group::kBias:
      return "ln_bias";
    case Group::kInput:
      return "input";
  }
  return "?";
}

std::vector<double>& group_values(ScfParams& p, std::vector<double>& input, Group g) {
  switch (g) {
    case Group::kFilters1:
      return p.filters1.data();
    case Group::kFilters2:
      return p.filters2.data();
    case Group::kGain:
      return p.ln_gain;
    case Group::kBias:
      return p.ln_bias;
    case Group::kInput:
      return input;
  }
  return input;
}

const std::vector<double>& group_grad(const ScfGradients& grads, Group g) {
  switch (g) {
    case Group::kFilters1:
      return grads.filters1.data();
    case Group::kFilters2:
      return grads.filters2.data();
    case Group::kGain:
      return grads.ln_gain;
    case Group::kBias:
      return grads.ln_bias;
    case Group::kInput:
      return grads.input;
  }
  return grads.input;
}

double readout_loss(const FeatureMatrix& features, const Matrix& readout) {
  double acc = 0.0;
  const auto& f = features.values.data();
  const auto& w = readout.data();
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * w[i];
  return acc;
}

enum class Kink { kNone, kCrossing, kTouching };

// kTouching: a pre-activation moved by the probe lies within 1e-6 of zero.
// kCrossing: one changes sign between the +-eps evaluations.
Kink classify_kink(const ScfTape& base, const ScfTape& plus, const ScfTape& minus) {
  Kink result = Kink::kNone;
  auto scan = [&](const std::vector<double>& u, const std::vector<double>& p,
                  const std::vector<double>& m) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (p[i] == u[i] && m[i] == u[i]) continue;
      if (std::abs(u[i]) < 1e-6 || std::abs(p[i]) < 1e-6 || std::abs(m[i]) < 1e-6) {
        result = Kink::kTouching;
        return;
      }
      if ((p[i] > 0.0) != (m[i] > 0.0) || (p[i] > 0.0) != (u[i] > 0.0)) result = Kink::kCrossing;
    }
  };
  scan(base.conv1.data(), plus.conv1.data(), minus.conv1.data());
  if (result != Kink::kTouching) scan(base.conv2.data(), plus.conv2.data(), minus.conv2.data());
  return result;
}

// Largest relative change of the difference quotient under step halving for
// a probe to count as smooth.
constexpr double kStepConsistency = 1e-4;

constexpr std::size_t kGroupRedraws = 20;

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

Matrix random_readout(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

double GradReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

double GradReport::max_abs_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_abs_error);
  return m;
}

double GradReport::max_abs_analytic() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_abs_analytic);
  return m;
}

GradReport finite_difference_check(const GradCheckConfig& config) {
  if (!(config.eps >= 1e-6 && config.eps <= 1e-2)) {
    throw ConfigError("finite-difference step must lie in [1e-6, 1e-2]");
  }
  if (config.probe_count == 0) throw ConfigError("probe count must be positive");
  const ScfGeometry& geo = config.geometry;
  geo.validate();

  std::size_t num_samples = config.num_samples;
  if (num_samples == 0) {
    const double target = 0.2 * geo.sample_rate_hz;
    const double extra = std::max(0.0, target - static_cast<double>(geo.min_input_length()));
    const auto steps = static_cast<std::size_t>(
        std::lround(extra / static_cast<double>(geo.frame_step_samples())));
    num_samples = geo.min_input_length() + steps * geo.frame_step_samples();
  }

  RngStream rng(config.seed, 0x9c);
  ScfParams params = ScfParams::random_init(geo, config.seed);
  std::vector<double> input(num_samples, 0.0);
  const bool positive = config.mode == GradCheckMode::kPositive;
  if (config.mode != GradCheckMode::kZeroInput) {
    for (double& v : input) v = positive ? rng.uniform(0.0, 1.0) : rng.uniform(-0.5, 0.5);
  }
  if (positive) {
    for (double& v : params.filters1.data()) v = std::abs(v);
    for (double& v : params.filters2.data()) v = std::abs(v);
  }
  for (double& v : params.ln_gain) v = rng.uniform(0.5, 1.5);
  for (double& v : params.ln_bias) v = rng.uniform(-0.5, 0.5);

  const ScfOutput base = scf_forward(Waveform(input, geo.sample_rate_hz), params);
  const std::size_t t1 = base.tape.conv1.cols();
  // A single coordinate only touches part of conv1: one filter row, or the
  // frames whose window covers one sample. Everything else is reused.
  auto forward = [&](Group g, std::size_t idx) {
    Matrix conv1 = base.tape.conv1;
    if (g == Group::kFilters1) {
      const std::size_t c = idx / geo.filter_length;
      for (std::size_t t = 0; t < t1; ++t) conv1(c, t) = scf_conv1_at(params, input, c, t);
    } else if (g == Group::kInput) {
      const std::size_t first =
          idx + 1 > geo.filter_length
              ? (idx + 1 - geo.filter_length + geo.filter_stride - 1) / geo.filter_stride
              : 0;
      const std::size_t last = std::min(idx / geo.filter_stride + 1, t1);
      for (std::size_t c = 0; c < geo.num_filters; ++c) {
        for (std::size_t t = first; t < last; ++t) conv1(c, t) = scf_conv1_at(params, input, c, t);
      }
    }
    return scf_forward_from_conv1(input, std::move(conv1), params);
  };
  const Matrix readout =
      random_readout(base.features.num_frames(), base.features.dims(), rng);
  const ScfGradients grads = scf_backward(base.tape, readout, params);

  std::vector<Group> groups(kAllGroups.begin(), kAllGroups.end());
  if (config.mode == GradCheckMode::kZeroInput) groups = {Group::kFilters1, Group::kFilters2};

  GradReport report;
  report.mode = config.mode;
  report.eps = config.eps;
  for (Group g : groups) report.groups.push_back({group_name(g)});

  for (std::size_t probe = 0; probe < config.probe_count; ++probe) {
    // Groups take turns so each one gets an equal share of the probes. A
    // group whose coordinates keep landing on kinks hands the probe to a
    // random group after kGroupRedraws attempts.
    for (std::size_t attempt = 0;; ++attempt) {
      const std::size_t gi =
          attempt < kGroupRedraws
              ? probe % groups.size()
              : static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(groups.size()) - 1));
      const Group g = groups[gi];
      std::vector<double>& values = group_values(params, input, g);
      const auto idx = static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(values.size()) - 1));
      const double saved = values[idx];
      auto central = [&](double h, ScfOutput* plus_out, ScfOutput* minus_out) {
        values[idx] = saved + h;
        ScfOutput plus = forward(g, idx);
        values[idx] = saved - h;
        ScfOutput minus = forward(g, idx);
        values[idx] = saved;
        const double d =
            (readout_loss(plus.features, readout) - readout_loss(minus.features, readout)) /
            (2.0 * h);
        if (plus_out != nullptr) *plus_out = std::move(plus);
        if (minus_out != nullptr) *minus_out = std::move(minus);
        return d;
      };
      ScfOutput plus;
      ScfOutput minus;
      const double numeric = central(config.eps, &plus, &minus);

      const double analytic = group_grad(grads, g)[idx];
      const Kink kind = classify_kink(base.tape, plus.tape, minus.tape);
      if (attempt == 0 && kind != Kink::kTouching) {
        ++report.loose_probes;
        if (relative_error(analytic, numeric) <= 1e-3) ++report.loose_within_tolerance;
      }
      if (config.mode != GradCheckMode::kZeroInput && attempt < config.max_redraws) {
        bool kink = kind != Kink::kNone;
        if (!kink) {
          // Close to a root kink the difference quotient still moves with the
          // step size; halving it exposes that.
          const double half = central(0.5 * config.eps, nullptr, nullptr);
          kink = relative_error(numeric, half) > kStepConsistency;
        }
        if (kink) {
          ++report.kink_exclusions;
          continue;
        }
      }
      GroupError& err = report.groups[gi];
      ++err.probes;
      err.max_rel_error = std::max(err.max_rel_error, relative_error(analytic, numeric));
      err.max_abs_error = std::max(err.max_abs_error, std::abs(analytic - numeric));
      err.max_abs_analytic = std::max(err.max_abs_analytic, std::abs(analytic));
      ++report.probe_count;
      break;
    }
  }
  return report;
}

void write_report(std::ostream& os, const GradReport& report) {
  const char* mode = report.mode == GradCheckMode::kRandom     ? "random"
                     : report.mode == GradCheckMode::kPositive ? "positive"
                                                                : "zero_input";
  os << std::setprecision(6);
  os << "mode=" << mode << '\n';
  os << "eps=" << report.eps << '\n';
  os << "probes=" << report.probe_count << '\n';
  os << "kink_exclusions=" << report.kink_exclusions << '\n';
  for (const auto& g : report.groups) {
    os << g.name << ".probes=" << g.probes << '\n';
    os << g.name << ".max_rel_err=" << g.max_rel_error << '\n';
    os << g.name << ".max_abs_err=" << g.max_abs_error << '\n';
  }
  os << "max_rel_err=" << report.max_rel_error() << '\n';
  os << "max_abs_err=" << report.max_abs_error() << '\n';
  os << "loose_probes=" << report.loose_probes << '\n';
  os << "loose_within_1e-3=" << report.loose_within_tolerance << '\n';
}

bool MaskedGradientReport::passed() const {
  return masked_feature_cells > 0 && max_abs_grad_at_masked_cells == 0.0 &&
         baseline_unmasked_filters1_norm > 1e-8 && baseline_all_masked_filters1_norm == 0.0 &&
         baseline_all_masked_filters2_norm == 0.0 && stft_masked_frames > 0 &&
         stft_masked_filters1_norm > 1e-8 && stft_masked_filters2_norm > 1e-8;
}

MaskedGradientReport masked_gradient_experiment(std::uint64_t seed,
                                                const MaskedGradientConfig& config) {
  const ScfGeometry& geo = config.geometry;
  RngStream rng(seed, 0x3a5c);
  const ScfParams params = ScfParams::random_init(geo, seed);
  std::vector<double> samples(config.num_samples);
  for (double& v : samples) v = rng.uniform(-0.5, 0.5);
  const Waveform wave(std::move(samples), geo.sample_rate_hz);

  MaskedGradientReport report;
  report.seed = seed;

  const ScfOutput clean = scf_forward(wave, params);
  const std::size_t frames = clean.features.num_frames();
  const std::size_t dims = clean.features.dims();
  const Matrix readout = random_readout(frames, dims, rng);

  // Partial baseline masks: the gradient reaching the features is the
  // readout passed through the same mask.
  const MaskSet partial = sample_masks(config.feature_policy, frames, dims, rng);
  Matrix feature_grad = readout;
  apply_feature_masks_in_place(feature_grad, partial);
  Matrix marker(frames, dims, 1.0);
  apply_feature_masks_in_place(marker, partial);
  for (std::size_t i = 0; i < marker.size(); ++i) {
    if (marker.data()[i] != 0.0) continue;
    ++report.masked_feature_cells;
    report.max_abs_grad_at_masked_cells =
        std::max(report.max_abs_grad_at_masked_cells, std::abs(feature_grad.data()[i]));
  }

  const ScfGradients unmasked = scf_backward(clean.tape, readout, params, false);
  report.baseline_unmasked_filters1_norm = l2_norm(unmasked.filters1.data());

  Matrix all_masked = readout;
  apply_feature_masks_in_place(all_masked, MaskSet{{{0, frames}}, {}});
  const ScfGradients zeroed = scf_backward(clean.tape, all_masked, params, false);
  report.baseline_all_masked_filters1_norm = l2_norm(zeroed.filters1.data());
  report.baseline_all_masked_filters2_norm = l2_norm(zeroed.filters2.data());

  const StftGeometry stft_geo = stft_geometry(geo.sample_rate_hz, 25.0, 10.0);
  report.stft_frames =
      stft_frame_count(wave.size(), stft_geo.window_samples, stft_geo.hop_samples);
  const auto masked_frames = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::lround(config.stft_masked_fraction * static_cast<double>(report.stft_frames))),
      1, report.stft_frames);
  const auto start = static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(report.stft_frames - masked_frames)));
  report.stft_masked_frames = masked_frames;
  const Waveform masked_wave = apply_stft_masks(wave, MaskSet{{{start, masked_frames}}, {}});
  const ScfOutput masked = scf_forward(masked_wave, params);
  const ScfGradients stft_grads = scf_backward(masked.tape, readout, params, false);
  report.stft_masked_filters1_norm = l2_norm(stft_grads.filters1.data());
  report.stft_masked_filters2_norm = l2_norm(stft_grads.filters2.data());
  return report;
}

void write_report(std::ostream& os, const MaskedGradientReport& report) {
  os << std::setprecision(6);
  os << "seed=" << report.seed << '\n';
  os << "baseline.masked_cells=" << report.masked_feature_cells << '\n';
  os << "baseline.max_abs_grad_at_masked_cells=" << report.max_abs_grad_at_masked_cells << '\n';
  os << "baseline.unmasked.filters1_grad_norm=" << report.baseline_unmasked_filters1_norm
     << '\n';
  os << "baseline.all_masked.filters1_grad_norm=" << report.baseline_all_masked_filters1_norm
     << '\n';
  os << "baseline.all_masked.filters2_grad_norm=" << report.baseline_all_masked_filters2_norm
     << '\n';
  os << "stft.masked_frames=" << report.stft_masked_frames << '/' << report.stft_frames << '\n';
  os << "stft.filters1_grad_norm=" << report.stft_masked_filters1_norm << '\n';
  os << "stft.filters2_grad_norm=" << report.stft_masked_filters2_norm << '\n';
  os << "passed=" << (report.passed() ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------

ToyTask make_toy_task(const ToyTaskConfig& config) {
  if (config.num_classes < 2) throw ConfigError("toy task needs at least two classes");
  if (config.train_size == 0 || config.dev_size == 0) {
    throw ConfigError("toy task needs non-empty train and dev sets");
  }
  if (!(config.duration_s > 0.0)) throw ConfigError("toy duration must be positive");
  const auto length = static_cast<std::size_t>(
      std::lround(config.duration_s * config.sample_rate_hz));
  const double rate = config.sample_rate_hz;
  const double band_top = 0.45 * rate;

  auto make = [&](std::uint64_t index, std::size_t label) {
    RngStream rng(config.seed, index);
    const double spacing = (0.5 * band_top - 200.0) / static_cast<double>(config.num_classes);
    const double low = 200.0 + spacing * static_cast<double>(label);
    std::vector<double> x(length, 0.0);
    for (int tone = 0; tone < 3; ++tone) {
      // Harmonically spread bands that overlap between neighboring classes.
      const double f = rng.uniform(low, low + 1.6 * spacing) * (1.0 + tone * 0.9);
      if (f >= band_top) continue;
      const double amp = rng.uniform(0.05, 0.25);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double drift = rng.uniform(-0.05, 0.05);
      for (std::size_t n = 0; n < length; ++n) {
        const double t = static_cast<double>(n) / rate;
        x[n] += amp * std::sin(2.0 * std::numbers::pi * f * (1.0 + drift * t) * t + phase);
      }
    }
    const double noise = rng.uniform(0.1, 0.3);
    for (double& v : x) v += noise * rng.normal();
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 1.0) {
      for (double& v : x) v /= peak;
    }
    return ToyExample{Waveform(std::move(x), config.sample_rate_hz), label};
  };

  ToyTask task;
  task.config = config;
  for (std::size_t i = 0; i < config.train_size; ++i) {
    task.train.push_back(make(i, i % config.num_classes));
  }
  // Dev streams live in a disjoint index range.
  constexpr std::uint64_t kDevOffset = 1ULL << 32;
  for (std::size_t i = 0; i < config.dev_size; ++i) {
    task.dev.push_back(make(kDevOffset + i, i % config.num_classes));
  }
  return task;
}

namespace {

struct Arm {
  const char* name;
  bool scf;
  bool augment;
};

constexpr std::array<Arm, 4> kArms{{
    {"logmel-noaug", false, false},
    {"logmel-aug", false, true},
    {"scf-noaug", true, false},
    {"scf-aug", true, true},
}};

struct Head {
  Matrix weights;  // classes x dims
  std::vector<double> bias;

  // Cross-entropy; fills d_logits with softmax - onehot.
  double loss(std::span<const double> pooled, std::size_t label,
              std::vector<double>* d_logits) const {
    const std::size_t classes = weights.rows();
    std::vector<double> logits(classes);
    for (std::size_t k = 0; k < classes; ++k) {
      double acc = bias[k];
      const auto w = weights.row(k);
      for (std::size_t d = 0; d < pooled.size(); ++d) acc += w[d] * pooled[d];
      logits[k] = acc;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double& l : logits) {
      l = std::exp(l - top);
      denom += l;
    }
    if (d_logits != nullptr) {
      d_logits->resize(classes);
      for (std::size_t k = 0; k < classes; ++k) {
        (*d_logits)[k] = logits[k] / denom - (k == label ? 1.0 : 0.0);
      }
    }
    return -std::log(logits[label] / denom);
  }
};

std::vector<double> pool_frames(const Matrix& values) {
  std::vector<double> pooled(values.cols(), 0.0);
  if (values.rows() == 0) return pooled;
  for (std::size_t t = 0; t < values.rows(); ++t) {
    const auto row = values.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) pooled[d] += row[d];
  }
  for (double& v : pooled) v /= static_cast<double>(values.rows());
  return pooled;
}

class Standardizer {
 public:
  explicit Standardizer(const std::vector<std::vector<double>>& rows) {
    const std::size_t dims = rows.front().size();
    mean_.assign(dims, 0.0);
    inv_std_.assign(dims, 0.0);
    for (const auto& r : rows) {
      for (std::size_t d = 0; d < dims; ++d) mean_[d] += r[d];
    }
    for (double& m : mean_) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t d = 0; d < dims; ++d) inv_std_[d] += (r[d] - mean_[d]) * (r[d] - mean_[d]);
    }
    for (double& v : inv_std_) {
      v /= static_cast<double>(rows.size());
      v = v > 1e-8 ? 1.0 / std::sqrt(v) : 0.0;
    }
  }

  std::vector<double> operator()(std::vector<double> v) const {
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = (v[d] - mean_[d]) * inv_std_[d];
    return v;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> inv_std_;
};

LogMelConfig demo_logmel_config() {
  LogMelConfig config;
  config.normalization = LogMelNormalization::kNone;
  return config;
}

}  // namespace

DemoResult toy_overfit_demo(const ToyTask& task, const DemoConfig& config) {
  if (task.train.empty() || task.dev.empty()) throw ConfigError("toy task is empty");
  config.masking.validate();
  const int rate = task.config.sample_rate_hz;
  const ScfGeometry geo = ScfGeometry::for_rate(rate);
  const std::size_t classes = task.config.num_classes;
  const LogMelConfig mel_config = demo_logmel_config();

  std::vector<std::vector<double>> raw_mel_train;
  std::vector<std::vector<double>> raw_mel_dev;
  for (const auto& ex : task.train) {
    raw_mel_train.push_back(pool_frames(logmel(ex.wave, mel_config).values));
  }
  for (const auto& ex : task.dev) {
    raw_mel_dev.push_back(pool_frames(logmel(ex.wave, mel_config).values));
  }

  // Augmentation for training example i in the given epoch. Log Mel arms
  // also get their masks here; SCF masks are drawn after the forward pass.
  auto augment = [&](const ToyExample& ex, RngStream& rng) {
    Waveform wave = perturb_tempo(ex.wave, rng.uniform(config.tempo_min, config.tempo_max));
    if (config.masking.domain == MaskDomain::kStftDomain) {
      wave = apply_stft_masks(wave, config.masking, rng);
    }
    return wave;
  };
  auto example_rng = [&](std::size_t epoch, std::size_t i) {
    return RngStream(config.seed ^ 0xa11ce, epoch * 1000003ULL + i);
  };
  auto augmented_mel = [&](const ToyExample& ex, std::size_t epoch, std::size_t i) {
    RngStream rng = example_rng(epoch, i);
    FeatureMatrix mel = logmel(augment(ex, rng), mel_config);
    if (config.masking.domain != MaskDomain::kStftDomain) {
      // Mel channels are already in frequency order.
      apply_feature_masks_in_place(
          mel.values, sample_masks(config.masking, mel.num_frames(), mel.dims(), rng));
    }
    return pool_frames(mel.values);
  };

  DemoResult result;
  for (const Arm& arm : kArms) {
    ScfParams params = ScfParams::random_init(geo, config.seed);
    const std::size_t dims = arm.scf ? geo.feature_dim() : mel_config.num_bands;
    Head head{Matrix(classes, dims), std::vector<double>(classes, 0.0)};
    ArmResult status;
    status.arm = arm.name;

    // Log Mel inputs are standardized with statistics of what the head is
    // trained on: clean features, or one augmented pass (epoch 0 draws).
    std::optional<Standardizer> standardize;
    std::vector<std::vector<double>> clean_mel_train;
    std::vector<std::vector<double>> clean_mel_dev;
    if (!arm.scf) {
      std::vector<std::vector<double>> fit = raw_mel_train;
      if (arm.augment) {
        for (std::size_t i = 0; i < task.train.size(); ++i) {
          fit[i] = augmented_mel(task.train[i], 0, i);
        }
      }
      standardize.emplace(fit);
      for (const auto& v : raw_mel_train) clean_mel_train.push_back((*standardize)(v));
      for (const auto& v : raw_mel_dev) clean_mel_dev.push_back((*standardize)(v));
    }

    auto evaluate = [&](const std::vector<ToyExample>& set,
                        const std::vector<std::vector<double>>& mel_cache) {
      double total = 0.0;
      for (std::size_t i = 0; i < set.size(); ++i) {
        if (arm.scf) {
          const ScfOutput out = scf_forward(set[i].wave, params);
          total += head.loss(pool_frames(out.features.values), set[i].label, nullptr);
        } else {
          total += head.loss(mel_cache[i], set[i].label, nullptr);
        }
      }
      return total / static_cast<double>(set.size());
    };

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      Matrix grad_w(classes, dims);
      std::vector<double> grad_b(classes, 0.0);
      ScfParams grad_p = ScfParams::zeros(geo);

      for (std::size_t i = 0; i < task.train.size(); ++i) {
        const ToyExample& ex = task.train[i];
        MaskSet feature_masks;
        const bool feature_masking =
            arm.augment && config.masking.domain != MaskDomain::kStftDomain;

        std::vector<double> pooled;
        std::optional<ScfOutput> scf_out;
        std::vector<std::size_t> order;
        std::size_t group = 1;
        if (arm.scf) {
          RngStream rng = example_rng(epoch, i);
          scf_out = scf_forward(arm.augment ? augment(ex, rng) : ex.wave, params);
          Matrix& values = scf_out->features.values;
          if (feature_masking) {
            feature_masks = sample_masks(config.masking, values.rows(),
                                         config.masking.domain == MaskDomain::kFeatureSorted
                                             ? geo.num_filters
                                             : values.cols(),
                                         rng);
            if (config.masking.domain == MaskDomain::kFeatureSorted) {
              order = filter_peak_frequencies(params).order;
              group = geo.num_temporal;
              values = apply_sorted_feature_masks(scf_out->features, order, feature_masks, group)
                           .values;
            } else {
              apply_feature_masks_in_place(values, feature_masks);
            }
          }
          pooled = pool_frames(values);
        } else if (arm.augment) {
          pooled = (*standardize)(augmented_mel(ex, epoch, i));
        } else {
          pooled = clean_mel_train[i];
        }

        std::vector<double> d_logits;
        head.loss(pooled, ex.label, &d_logits);
        for (std::size_t k = 0; k < classes; ++k) {
          grad_b[k] += d_logits[k];
          auto gw = grad_w.row(k);
          for (std::size_t d = 0; d < dims; ++d) gw[d] += d_logits[k] * pooled[d];
        }
        if (!arm.scf) continue;

        const Matrix& values = scf_out->features.values;
        std::vector<double> d_pooled(dims, 0.0);
        for (std::size_t k = 0; k < classes; ++k) {
          const auto w = head.weights.row(k);
          for (std::size_t d = 0; d < dims; ++d) d_pooled[d] += d_logits[k] * w[d];
        }
        Matrix upstream(values.rows(), dims);
        const double inv_frames = 1.0 / static_cast<double>(values.rows());
        for (std::size_t t = 0; t < values.rows(); ++t) {
          for (std::size_t d = 0; d < dims; ++d) upstream(t, d) = d_pooled[d] * inv_frames;
        }
        if (feature_masking) {
          if (config.masking.domain == MaskDomain::kFeatureSorted) {
            FeatureMatrix g;
            g.values = upstream;
            upstream = apply_sorted_feature_masks(g, order, feature_masks, group).values;
          } else {
            apply_feature_masks_in_place(upstream, feature_masks);
          }
        }
        const ScfGradients g = scf_backward(scf_out->tape, upstream, params, false);
        auto add = [](std::vector<double>& into, const std::vector<double>& from) {
          for (std::size_t j = 0; j < into.size(); ++j) into[j] += from[j];
        };
        add(grad_p.filters1.data(), g.filters1.data());
        add(grad_p.filters2.data(), g.filters2.data());
        add(grad_p.ln_gain, g.ln_gain);
        add(grad_p.ln_bias, g.ln_bias);
      }

      const double scale = 1.0 / static_cast<double>(task.train.size());
      auto step = [scale](std::vector<double>& into, const std::vector<double>& grad,
                          double lr) {
        for (std::size_t j = 0; j < into.size(); ++j) into[j] -= lr * scale * grad[j];
      };
      step(head.weights.data(), grad_w.data(), config.head_learning_rate);
      step(head.bias, grad_b, config.head_learning_rate);
      if (arm.scf) {
        step(params.filters1.data(), grad_p.filters1.data(), config.frontend_learning_rate);
        step(params.filters2.data(), grad_p.filters2.data(), config.frontend_learning_rate);
        step(params.ln_gain, grad_p.ln_gain, config.frontend_learning_rate);
        step(params.ln_bias, grad_p.ln_bias, config.frontend_learning_rate);
      }

      double train_loss = 0.0;
      double dev_loss = 0.0;
      try {
        train_loss = evaluate(task.train, clean_mel_train);
        dev_loss = evaluate(task.dev, clean_mel_dev);
      } catch (const StructuralError& e) {
        train_loss = dev_loss = std::nan("");
        status.diagnostics = e.what();
      }
      result.curve.push_back({epoch, arm.name, train_loss, dev_loss});
      status.final_train_loss = train_loss;
      status.final_dev_loss = dev_loss;
      if (!std::isfinite(train_loss) || !std::isfinite(dev_loss)) {
        status.diverged = true;
        std::ostringstream msg;
        msg << "epoch " << epoch << ": train_loss=" << train_loss << " dev_loss=" << dev_loss;
        if (!status.diagnostics.empty()) msg << " (" << status.diagnostics << ")";
        status.diagnostics = msg.str();
        break;
      }
    }
    result.arms.push_back(status);
  }
  return result;
}

void write_curves_csv(std::ostream& os, const DemoResult& result) {
  os << "epoch,arm,train_loss,dev_loss\n";
  os << std::setprecision(10);
  for (const auto& p : result.curve) {
    os << p.epoch << ',' << p.arm << ',' << p.train_loss << ',' << p.dev_loss << '\n';
  }
}

}  // namespace scfreg
