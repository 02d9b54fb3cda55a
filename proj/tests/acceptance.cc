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

// Acceptance run: one PASS/FAIL line per criterion, details below each.
// Exits nonzero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "scfreg/cli.h"
#include "scfreg/features.h"
#include "scfreg/io.h"
#include "scfreg/perturb.h"
#include "scfreg/signal.h"
#include "scfreg/specaug.h"
#include "scfreg/traincheck.h"

using namespace scfreg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("info " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<double> to_vec(const Waveform& w) { return {w.samples().begin(), w.samples().end()}; }

std::vector<double> uniform_noise(std::size_t n, RngStream& rng, double amp = 1.0) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-amp, amp);
  return x;
}

// Strongest frequency in [50, 3900] Hz of the Hann-windowed signal. The scan
// advances each probe frequency by phasor rotation instead of calling sin/cos
// per sample; the refinement uses the direct evaluation.
double dominant_frequency(const std::vector<double>& x, double rate) {
  const std::size_t n = x.size();
  std::vector<double> wx(n);
  for (std::size_t t = 0; t < n; ++t) {
    wx[t] = x[t] * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (t + 0.5) / n));
  }
  const double step = 4.0;
  double best_f = 50.0;
  double best_p = -1.0;
  for (double f = 50.0; f <= 3900.0; f += step) {
    const std::complex<double> rot = std::polar(1.0, -2.0 * std::numbers::pi * f / rate);
    std::complex<double> phasor = 1.0;
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += wx[t] * phasor;
      phasor *= rot;
    }
    const double p = std::norm(acc);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  double a = best_f - step;
  double b = best_f + step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 40; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (oracle::windowed_power_at(x, c, rate) > oracle::windowed_power_at(x, d, rate)) {
      b = d;
    } else {
      a = c;
    }
  }
  return 0.5 * (a + b);
}

// Centered excerpt of at most `len` samples.
std::vector<double> middle(const std::vector<double>& x, std::size_t len) {
  if (x.size() <= len) return x;
  const std::size_t off = (x.size() - len) / 2;
  return {x.begin() + static_cast<std::ptrdiff_t>(off),
          x.begin() + static_cast<std::ptrdiff_t>(off + len)};
}

// Samples of an N-sample signal covered by as many analysis windows as in an
// unbounded signal: every frame that could contain them exists.
std::pair<std::size_t, std::size_t> full_overlap_range(std::size_t n, std::size_t window,
                                                       std::size_t hop) {
  const std::size_t frames = 1 + (n > window ? (n - window + hop - 1) / hop : 0);
  return {window - hop, std::min(n, frames * hop)};
}

// ---------------------------------------------------------------------------

Outcome stft_round_trip() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    RngStream rng(101, i);
    const Waveform w(uniform_noise(8000, rng), 8000);
    const Waveform y = istft(stft(w));
    const auto [lo, hi] = full_overlap_range(8000, 200, 80);
    for (std::size_t t = lo; t < hi; ++t) {
      worst = std::max(worst, std::abs(y.samples()[t] - w.samples()[t]));
    }
  }
  const double elapsed = seconds_since(start);
  o.require(worst <= 1e-6, fmt("max |istft(stft(w)) - w| on full-overlap samples = %.3g (<= 1e-6)", worst));
  o.require(elapsed < 10.0, fmt("runtime %.2f s (< 10 s)", elapsed));
  return o;
}

Outcome unit_vectors() {
  Outcome o;
  double worst = 0.0;
  auto track = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };

  const std::vector<double> ramp{-1.0, -0.5, -0.25, 0.0, 0.1, 0.25, 0.5, 1.0};
  const Waveform r(ramp, 8000);
  const Waveform same = perturb_amplitude_nonlinear(r, 1.0);
  for (std::size_t i = 0; i < ramp.size(); ++i) track(same.samples()[i], ramp[i]);
  const Waveform sq = perturb_amplitude_nonlinear(Waveform({0.25, -0.25}, 8000), 2.0);
  track(sq.samples()[0], 0.0625);
  track(sq.samples()[1], -0.0625);
  track(perturb_amplitude_nonlinear(Waveform({-0.5}, 8000), 0.8).samples()[0],
        -0.5743491774985174);

  for (double mu : {1.0, 2.5, 5.0, 255.0}) {
    const Waveform m = perturb_mulaw(Waveform({-1.0, 0.0, 1.0}, 8000), mu);
    track(m.samples()[0], -1.0);
    track(m.samples()[1], 0.0);
    track(m.samples()[2], 1.0);
  }
  track(perturb_mulaw(Waveform({0.5}, 8000), 5.0).samples()[0], 0.6991803252671503);

  const Waveform p = preemphasis(Waveform({1.0, 0.0, 0.0}, 8000), 0.97);
  track(p.samples()[0], 1.0);
  track(p.samples()[1], -0.97);
  track(p.samples()[2], 0.0);
  const Waveform id = preemphasis(r, 0.0);
  for (std::size_t i = 0; i < ramp.size(); ++i) track(id.samples()[i], ramp[i]);
  const Waveform c = preemphasis(Waveform({0.3, 0.3, 0.3, 0.3}, 8000), 1.0);
  track(c.samples()[0], 0.3);
  for (std::size_t i = 1; i < 4; ++i) track(c.samples()[i], 0.0);
  const Waveform j = perturb_preemphasis_jitter(Waveform({1.0, 0.0}, 8000), 0.05);
  track(j.samples()[0], 1.0);
  track(j.samples()[1], -0.05);

  o.require(worst <= 1e-9, fmt("max abs error over the unit vectors = %.3g (<= 1e-9)", worst));
  return o;
}

Outcome tempo_pitch_contracts() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t hop = wsola_synthesis_hop(8000);
  const PerturbChain tempo_chain{{{PerturbKind::kTempo, 1.0, 0.7, 1.3}}, 303};
  const PerturbChain pitch_chain{{{PerturbKind::kPitch, 1.0, -2.0, 2.0}}, 304};
  std::size_t length_bad = 0, tempo_freq_bad = 0, pitch_freq_bad = 0, pitch_len_bad = 0;
  double worst_len = 0.0, worst_tempo = 0.0, worst_pitch = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RngStream rng(305, i);
    const double f0 = rng.uniform(250.0, 1500.0);
    const auto n = static_cast<std::size_t>(rng.uniform_int(4000, 8000));
    const Waveform w(oracle::sine(f0, 8000.0, n, 0.5, rng.uniform(0.0, 6.283)), 8000);

    const ChainResult t = apply_chain(w, tempo_chain, i);
    const double a = t.applied.at(0).factor;
    const double len_err = std::abs(static_cast<double>(t.wave.size()) - n / a);
    worst_len = std::max(worst_len, len_err);
    if (len_err > static_cast<double>(hop)) ++length_bad;
    const double ft = dominant_frequency(middle(to_vec(t.wave), 4000), 8000.0);
    const double et = std::abs(ft / f0 - 1.0);
    worst_tempo = std::max(worst_tempo, et);
    if (et > 0.02) ++tempo_freq_bad;

    const ChainResult p = apply_chain(w, pitch_chain, i);
    const double s = p.applied.at(0).factor;
    if (std::abs(static_cast<double>(p.wave.size()) - static_cast<double>(n)) >
        static_cast<double>(hop)) {
      ++pitch_len_bad;
    }
    const double fp = dominant_frequency(middle(to_vec(p.wave), 4000), 8000.0);
    const double ep = std::abs(fp / (f0 * std::pow(2.0, s / 12.0)) - 1.0);
    worst_pitch = std::max(worst_pitch, ep);
    if (ep > 0.02) ++pitch_freq_bad;
  }
  const double elapsed = seconds_since(start);
  o.require(length_bad == 0, fmt("tempo length within +-%zu samples of N/a: %zu/1000 outside, worst %.2f",
                                 hop, length_bad, worst_len));
  o.require(tempo_freq_bad == 0, fmt("tempo keeps frequency within 2%%: %zu/1000 outside, worst %.4f%%",
                                     tempo_freq_bad, 100.0 * worst_tempo));
  o.require(pitch_len_bad == 0, fmt("pitch keeps length within one hop: %zu/1000 outside", pitch_len_bad));
  o.require(pitch_freq_bad == 0,
            fmt("pitch scales frequency by 2^(s/12) within 2%%: %zu/1000 outside, worst %.4f%%",
                pitch_freq_bad, 100.0 * worst_pitch));
  o.require(elapsed < 120.0, fmt("runtime %.1f s (< 120 s)", elapsed));
  return o;
}

Outcome scf_conformance() {
  Outcome o;
  const ScfGeometry geo;
  const ScfParams params = ScfParams::random_init(geo, 404);
  RngStream rng(404, 1);
  const std::vector<double> x = uniform_noise(8000, rng, 0.5);
  const ScfOutput out = scf_forward(Waveform(x, 8000), params);
  const std::size_t t1 = (8000 - 128) / 5 + 1;
  const std::size_t t2 = (t1 - 40) / 16 + 1;
  o.require(params.filters1.rows() == 150 && params.filters1.cols() == 128,
            fmt("conv1 filters %zu x %zu (150 x 128)", params.filters1.rows(), params.filters1.cols()));
  o.require(params.filters2.rows() == 5 && params.filters2.cols() == 40,
            fmt("conv2 filters %zu x %zu (5 x 40)", params.filters2.rows(), params.filters2.cols()));
  o.require(out.tape.conv1.rows() == 150 && out.tape.conv1.cols() == t1,
            fmt("conv1 output %zu x %zu (150 x %zu, stride 5)", out.tape.conv1.rows(),
                out.tape.conv1.cols(), t1));
  o.require(out.tape.conv2.rows() == t2 && out.features.num_frames() == t2,
            fmt("output frames %zu (%zu, stride 16)", out.features.num_frames(), t2));
  o.require(out.features.dims() == 750, fmt("D = %zu (750)", out.features.dims()));
  o.require(out.features.frame_shift_ms == 10.0,
            fmt("frame shift %.6g ms (10)", out.features.frame_shift_ms));

  // Direct sums at random positions pin down the stride and layout.
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(0, 149));
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, 4));
    const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(t2) - 1));
    const auto s = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(t1) - 1));
    double u1 = 0.0;
    for (std::size_t q = 0; q < 128; ++q) u1 += params.filters1(c, q) * x[5 * s + q];
    worst = std::max(worst, std::abs(u1 - out.tape.conv1(c, s)));
    double u2 = 0.0;
    for (std::size_t m = 0; m < 40; ++m) {
      double a = 0.0;
      for (std::size_t q = 0; q < 128; ++q) a += params.filters1(c, q) * x[5 * (16 * t + m) + q];
      u2 += params.filters2(j, m) * std::abs(a);
    }
    worst = std::max(worst, std::abs(u2 - out.tape.conv2(t, c * 5 + j)));
  }
  o.require(worst <= 1e-9, fmt("direct conv1/conv2 sums match the tape within %.3g", worst));
  return o;
}

Outcome gradient_oracle() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  GradCheckConfig cfg;
  cfg.probe_count = 500;
  cfg.eps = 1e-4;
  const GradReport r = finite_difference_check(cfg);
  o.require(r.probe_count == 500 && r.max_rel_error() <= 1e-3,
            fmt("finite differences: %zu probes, max relative error %.3g (<= 1e-3), %zu kink redraws",
                r.probe_count, r.max_rel_error(), r.kink_exclusions));
  for (const auto& g : r.groups) {
    o.note(fmt("  %s: %zu probes, max relative error %.3g", g.name.c_str(), g.probes,
               g.max_rel_error));
  }
  o.note(fmt("first draws clear of |pre-activation| < 1e-6 only: %zu/%zu within 1e-3",
             r.loose_within_tolerance, r.loose_probes));

  const ScfParams params = ScfParams::random_init(ScfGeometry{}, 505);
  RngStream rng(505, 1);
  const std::vector<double> x = uniform_noise(8000, rng, 0.5);
  const Matrix base = scf_forward(Waveform(x, 8000), params).features.values;
  double worst = 0.0;
  for (double c : {0.5, 2.0, 10.0}) {
    std::vector<double> y(x);
    for (double& v : y) v *= c;
    const Matrix s = scf_forward(Waveform(y, 8000), params).features.values;
    double err = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s.data()[i] - base.data()[i]));
    o.note(fmt("  c = %g: max |SCF(c x) - SCF(x)| = %.3g", c, err));
    worst = std::max(worst, err);
  }
  o.require(worst <= 1e-5,
            fmt("input-scaling invariance at amplitude 0.5: max deviation %.3g (<= 1e-5)", worst));
  const double elapsed = seconds_since(start);
  o.require(elapsed < 60.0, fmt("runtime %.1f s (< 60 s)", elapsed));
  return o;
}

Outcome zero_gradient_demo() {
  Outcome o;
  std::size_t a_zero = 0, b_nonzero = 0, passed = 0;
  double max_masked_cell = 0.0, min_b_norm = 1e300;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const MaskedGradientReport r = masked_gradient_experiment(seed);
    if (r.baseline_all_masked_filters1_norm == 0.0 && r.baseline_all_masked_filters2_norm == 0.0) {
      ++a_zero;
    }
    if (r.stft_masked_filters1_norm > 0.0 && r.stft_masked_filters2_norm > 0.0) ++b_nonzero;
    if (r.passed()) ++passed;
    max_masked_cell = std::max(max_masked_cell, r.max_abs_grad_at_masked_cells);
    min_b_norm = std::min({min_b_norm, r.stft_masked_filters1_norm, r.stft_masked_filters2_norm});
  }
  o.require(a_zero == 100, fmt("arm A (all frames masked after features): zero front-end gradient on %zu/100 seeds", a_zero));
  o.require(b_nonzero == 100, fmt("arm B (50%% of STFT frames masked): nonzero front-end gradient on %zu/100 seeds, smallest norm %.3g",
                                  b_nonzero, min_b_norm));
  o.require(max_masked_cell == 0.0, fmt("gradient at partially masked feature cells: max %.3g", max_masked_cell));
  o.note(fmt("full experiment checks passed on %zu/100 seeds", passed));
  return o;
}

Outcome masking_coverage() {
  Outcome o;
  auto masked_fraction = [](const MaskPolicy& policy, std::uint64_t seed) {
    const std::size_t frames = 1000;
    double total = 0.0;
    for (std::uint64_t i = 0; i < 10000; ++i) {
      RngStream rng(seed, i);
      const MaskSet m = sample_masks(policy, frames, 80, rng);
      std::vector<std::pair<std::size_t, std::size_t>> iv;
      for (const auto& t : m.time_masks) iv.emplace_back(t.start, t.length);
      total += static_cast<double>(oracle::union_size(iv)) / frames;
    }
    return total / 10000.0;
  };
  const double two = masked_fraction(MaskPolicy{15, 2, 8, 0}, 707);
  const double one = masked_fraction(MaskPolicy{30, 1, 8, 0}, 708);
  o.require(std::abs(two - one) <= 0.002,
            fmt("masked-frame fraction 15x2 = %.5f, 30x1 = %.5f, difference %.5f (<= 0.002)", two,
                one, std::abs(two - one)));
  o.note("exact expectations at 1000 frames: 0.015862 (15x2), 0.015350 (30x1)");

  std::size_t trials = 0, partial_groups = 0, broken_ranges = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ScfParams params = ScfParams::random_init(ScfGeometry{}, seed);
    const FilterPeaks peaks = filter_peak_frequencies(params);
    RngStream rng(709, seed);
    Matrix ones(20, 750, 1.0);
    FeatureMatrix f{ones, 10.0};
    for (int k = 0; k < 100; ++k, ++trials) {
      const MaskSet m = sample_masks(MaskPolicy{15, 0, 8, 2}, 20, 150, rng);
      const FeatureMatrix out = apply_sorted_feature_masks(f, peaks.order, m, 5);
      std::set<std::size_t> masked;
      for (std::size_t c = 0; c < 150; ++c) {
        std::size_t zeros = 0;
        for (std::size_t j = 0; j < 5; ++j) zeros += out.values(0, c * 5 + j) == 0.0 ? 1 : 0;
        if (zeros == 5) masked.insert(c);
        if (zeros != 0 && zeros != 5) ++partial_groups;
      }
      for (const auto& iv : m.channel_masks) {
        double lo = 1e300, hi = -1e300;
        std::set<std::size_t> in_mask;
        for (std::size_t r = iv.start; r < iv.end(); ++r) {
          lo = std::min(lo, peaks.peak_hz[peaks.order[r]]);
          hi = std::max(hi, peaks.peak_hz[peaks.order[r]]);
          in_mask.insert(peaks.order[r]);
        }
        for (std::size_t c : in_mask) {
          if (!masked.count(c)) ++broken_ranges;
        }
        for (std::size_t c = 0; c < 150; ++c) {
          if (in_mask.count(c)) continue;
          const double p = peaks.peak_hz[c];
          if (p > lo && p < hi) ++broken_ranges;
        }
      }
    }
  }
  o.require(partial_groups == 0,
            fmt("sorted SCF masking: %zu partially masked 5-channel groups over %zu trials",
                partial_groups, trials));
  o.require(broken_ranges == 0,
            fmt("sorted SCF masking: %zu masks whose peaks are not a contiguous range", broken_ranges));
  return o;
}

Outcome band_attenuation() {
  Outcome o;
  const double bin_hz = 8000.0 / 256.0;
  double worst_masked = 1e300, worst_nominal = 1e300;
  for (std::uint64_t i = 0; i < 6; ++i) {
    RngStream rng(808, i);
    const std::vector<double> x = uniform_noise(8000, rng);
    const auto first = static_cast<std::size_t>(rng.uniform_int(8, 100));
    const Waveform y = apply_stft_masks(Waveform(x, 8000), MaskSet{{}, {{first, 16}}});
    const std::vector<double> xi(x.begin() + 200, x.end() - 200);
    const std::vector<double> yi(y.samples().begin() + 200, y.samples().end() - 200);
    auto db = [&](double lo, double hi) {
      return 10.0 * std::log10(oracle::band_power(xi, 8000, lo, hi) /
                               oracle::band_power(yi, 8000, lo, hi));
    };
    const double lo = first * bin_hz;
    worst_masked = std::min(worst_masked, db(lo, lo + 15 * bin_hz));
    worst_nominal = std::min(worst_nominal, db(lo, lo + 16 * bin_hz));
  }
  o.require(worst_masked >= 20.0,
            fmt("16 masked bins: attenuation over their center frequencies >= %.2f dB (>= 20 dB)",
                worst_masked));
  o.note(fmt("same band extended to the first unmasked bin center: %.2f dB", worst_nominal));

  RngStream rng(809, 0);
  const std::vector<double> x = uniform_noise(8000, rng);
  const Waveform y = apply_stft_masks(Waveform(x, 8000), MaskSet{});
  const auto [lo, hi] = full_overlap_range(8000, 200, 80);
  double worst = 0.0, edge = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double e = std::abs(y.samples()[t] - x[t]);
    if (t >= lo && t < hi) {
      worst = std::max(worst, e);
    } else {
      edge = std::max(edge, e);
    }
  }
  o.require(worst <= 1e-6, fmt("zero-mask application: max deviation %.3g on full-overlap samples (<= 1e-6)", worst));
  o.note(fmt("outside full overlap (first %zu / last %zu samples): max deviation %.3g", lo,
             x.size() - hi, edge));
  return o;
}

// ---------------------------------------------------------------------------

struct Run {
  int code;
  std::string out;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "scfreg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str() + err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("scfreg_accept_" + std::to_string(::getpid()));
  fs::create_directories(root);
  RngStream rng(909, 0);
  std::vector<double> x = oracle::sine(330.0, 8000.0, 8000, 0.4);
  for (double& v : x) v += 0.05 * rng.normal();
  write_wav(root / "in.wav", Waveform(x, 8000));
  {
    std::ofstream(root / "scf.cfg") << "frontend = scf\n";
    std::ofstream(root / "list.txt") << (root / "in.wav").string() << ' ' << (root / "b0.feat").string() << '\n'
                                     << (root / "in.wav").string() << ' ' << (root / "b1.feat").string() << '\n';
  }
  const std::string in = (root / "in.wav").string();
  const std::string cfg = (root / "scf.cfg").string();
  const std::string list = (root / "list.txt").string();

  struct Command {
    std::string name;
    std::vector<std::string> args;  // "@" is replaced by the output path
    std::vector<std::string> outputs;
  };
  std::vector<Command> commands;
  for (const char* p : {"table1-speed", "table1-tempo", "table1-pitch", "table1-nonlinear-amplitude",
                        "table1-mulaw", "table1-preemphasis"}) {
    commands.push_back({std::string("perturb ") + p, {"perturb", in, "@out.wav", "--preset", p, "--seed", "17"}, {"out.wav"}});
  }
  commands.push_back({"featurize logmel", {"featurize", in, "@out.feat", "--preset", "table1-tempo", "--seed", "17"}, {"out.feat"}});
  commands.push_back({"featurize scf", {"featurize", in, "@out.feat", "--config", cfg, "--seed", "17"}, {"out.feat"}});
  commands.push_back({"augment stft", {"augment", in, "@out.wav", "--preset", "table2-stft-30-8", "--seed", "17"}, {"out.wav"}});
  commands.push_back({"augment baseline", {"augment", in, "@out.feat", "--preset", "table2-baseline-15-8", "--seed", "17"}, {"out.feat"}});
  commands.push_back({"augment sorted scf", {"augment", in, "@out.feat", "--config", cfg, "--preset", "table2-sorted-15-8", "--seed", "17"}, {"out.feat"}});
  commands.push_back({"inspect", {"inspect", in, "--pgm", "@out.pgm", "--csv", "@out.csv"}, {"out.pgm", "out.csv"}});
  commands.push_back({"init-params", {"init-params", "@out.scf", "--seed", "17"}, {"out.scf"}});
  commands.push_back({"gradcheck", {"gradcheck", "--probes", "30", "--seed", "17"}, {}});
  commands.push_back({"demo", {"demo", "--out", "@out.csv", "--epochs", "2", "--train", "4", "--dev", "4", "--seed", "17"}, {"out.csv"}});
  commands.push_back({"featurize batch", {"featurize", "--batch", list, "--jobs", "2", "--config", cfg, "--seed", "17"}, {}});

  std::size_t identical = 0;
  for (const auto& c : commands) {
    std::vector<std::string> outputs[2];
    std::string stdout_text[2];
    bool ok = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (std::to_string(rep));
      fs::create_directories(dir);
      std::vector<std::string> args;
      for (const auto& a : c.args) args.push_back(a.front() == '@' ? (dir / a.substr(1)).string() : a);
      const Run r = cli(args);
      ok = ok && r.code == kExitOk;
      stdout_text[rep] = r.out;
      for (const auto& f : c.outputs) outputs[rep].push_back(slurp(dir / f));
      if (c.name == "featurize batch") {
        outputs[rep].push_back(slurp(root / "b0.feat"));
        outputs[rep].push_back(slurp(root / "b1.feat"));
      }
    }
    const bool same = ok && outputs[0] == outputs[1] && stdout_text[0] == stdout_text[1] &&
                      std::all_of(outputs[0].begin(), outputs[0].end(),
                                  [](const std::string& s) { return !s.empty(); });
    if (same) ++identical;
    if (!same) o.require(false, "not reproducible: " + c.name);
  }
  o.require(identical == commands.size(),
            fmt("%zu/%zu CLI commands byte-identical across two runs with the same --seed",
                identical, commands.size()));

  const fs::path feat = root / "0" / "out.feat";
  const FeatureMatrix f = read_feat(feat);
  write_feat(root / "again.feat", f);
  const FeatureMatrix g = read_feat(root / "again.feat");
  o.require(slurp(feat) == slurp(root / "again.feat") && f.values == g.values &&
                f.frame_shift_ms == g.frame_shift_ms,
            ".feat read/write round trip is bit-exact");
  fs::remove_all(root);
  return o;
}

Outcome toy_demo() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  ToyTaskConfig task_cfg;
  DemoConfig demo_cfg;
  task_cfg.seed = demo_cfg.seed;
  const DemoResult result = toy_overfit_demo(make_toy_task(task_cfg), demo_cfg);
  const double elapsed = seconds_since(start);
  std::ostringstream csv;
  write_curves_csv(csv, result);

  std::istringstream is(csv.str());
  std::string line;
  std::getline(is, line);
  bool header = line == "epoch,arm,train_loss,dev_loss";
  std::map<std::string, std::set<std::size_t>> epochs;
  std::map<std::string, std::vector<double>> train_curve;
  std::size_t bad_rows = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string epoch, arm, train, dev;
    if (!std::getline(ls, epoch, ',') || !std::getline(ls, arm, ',') ||
        !std::getline(ls, train, ',') || !std::getline(ls, dev, ',')) {
      ++bad_rows;
      continue;
    }
    const double tr = std::stod(train), dv = std::stod(dev);
    if (!std::isfinite(tr) || !std::isfinite(dv) || tr < 0.0 || dv < 0.0) ++bad_rows;
    if (!epochs[arm].insert(std::stoul(epoch)).second) ++bad_rows;
    train_curve[arm].push_back(tr);
  }
  const std::set<std::string> want{"logmel-noaug", "logmel-aug", "scf-noaug", "scf-aug"};
  std::set<std::string> got;
  bool complete = true;
  for (const auto& [arm, e] : epochs) {
    got.insert(arm);
    complete = complete && e.size() == demo_cfg.epochs;
  }
  o.require(header && bad_rows == 0 && got == want && complete,
            fmt("curves well formed: 4 arms x %zu epochs, %zu malformed rows", demo_cfg.epochs, bad_rows));
  // Monotone-ish: training ends below where it started and never climbs
  // far above the first epoch.
  std::size_t rough = 0;
  for (const auto& [arm, curve] : train_curve) {
    const double first = curve.front();
    const double peak = *std::max_element(curve.begin(), curve.end());
    if (!(curve.back() < first && peak <= 1.5 * first)) ++rough;
  }
  o.require(rough == 0, fmt("train-loss curves monotone-ish: %zu arms end above their start "
                            "or climb past 1.5x the first epoch", rough));
  bool diverged = false;
  for (const auto& arm : result.arms) {
    diverged = diverged || arm.diverged;
    o.note(fmt("  %-13s train %.4f  dev %.4f  gap %+.4f", arm.arm.c_str(), arm.final_train_loss,
               arm.final_dev_loss, arm.final_dev_loss - arm.final_train_loss));
  }
  o.require(!diverged, "no arm diverged");
  o.note(fmt("seed %llu, %zu train / %zu dev examples", static_cast<unsigned long long>(demo_cfg.seed),
             task_cfg.train_size, task_cfg.dev_size));
  o.require(elapsed < 600.0, fmt("runtime %.1f s (< 600 s)", elapsed));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"STFT round trip", stft_round_trip},
      {"perturbation unit vectors", unit_vectors},
      {"tempo and pitch contracts", tempo_pitch_contracts},
      {"SCF architecture conformance", scf_conformance},
      {"gradient oracle and scale invariance", gradient_oracle},
      {"zero-gradient demonstration", zero_gradient_demo},
      {"masking coverage", masking_coverage},
      {"STFT-mask band attenuation", band_attenuation},
      {"determinism", determinism},
      {"toy overfitting demo", toy_demo},
  };
  std::vector<std::string> summary;
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const std::string line = fmt("criterion %2zu: %s  %s (%.1f s)", i + 1, o.pass ? "PASS" : "FAIL",
                                 criteria[i].first.c_str(), seconds_since(start));
    std::cout << line << '\n';
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
    summary.push_back(line);
    all = all && o.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto& s : summary) std::cout << s << '\n';
  return all ? 0 : 1;
}
