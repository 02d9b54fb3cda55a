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

#include "scfreg/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "scfreg/config.h"
#include "scfreg/errors.h"
#include "scfreg/features.h"
#include "scfreg/io.h"
#include "scfreg/perturb.h"
#include "scfreg/specaug.h"
#include "scfreg/traincheck.h"

namespace scfreg {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> presets;
  std::optional<std::uint64_t> seed;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Pipeline config file");
  cmd->add_option("--preset", opts.presets, "Named preset, applied after --config (repeatable)");
  cmd->add_option("--seed", opts.seed, "Overrides the config seed");
}

PipelineConfig build_config(const ConfigOptions& opts) {
  PipelineConfig config;
  if (!opts.config_path.empty()) config = load_config(opts.config_path);
  for (const auto& name : opts.presets) {
    apply_config_text(config, preset_text(name), "preset " + name);
  }
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

enum class FileKind { kWav, kFeat };

FileKind sniff(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path + ": cannot open for reading");
  char magic[4] = {};
  is.read(magic, 4);
  const std::string tag(magic, static_cast<std::size_t>(is.gcount()));
  if (tag == "RIFF") return FileKind::kWav;
  if (tag == "FEAT") return FileKind::kFeat;
  throw IoError(path + ": neither a WAV nor a .feat file");
}

ScfParams scf_params_for(const PipelineConfig& config, int rate) {
  if (config.scf_params_path) return read_scf_params(*config.scf_params_path, rate);
  return ScfParams::random_init(ScfGeometry::for_rate(rate), config.seed);
}

RngStream mask_stream(const PipelineConfig& config, std::uint64_t index) {
  return RngStream(config.seed, index).substream(0x6d61736b);
}

std::string format_applied(const std::vector<AppliedPerturbation>& applied) {
  std::ostringstream os;
  os << std::setprecision(6);
  for (const auto& a : applied) os << "kind=" << to_string(a.kind) << ", factor=" << a.factor << '\n';
  return os.str();
}

// Chain, standard preemphasis and the selected front-end.
FeatureMatrix featurize(const Waveform& wave, const PipelineConfig& config,
                        std::uint64_t index, std::string* log) {
  ChainResult perturbed = apply_chain(wave, config.perturb_chain(), index);
  if (log != nullptr) *log = format_applied(perturbed.applied);
  Waveform signal = config.preemphasis > 0.0 ? preemphasis(perturbed.wave, config.preemphasis)
                                             : std::move(perturbed.wave);
  if (config.frontend == FrontEnd::kLogMel) return logmel(signal);
  return scf_forward(signal, scf_params_for(config, signal.sample_rate_hz())).features;
}

FeatureMatrix mask_features(const FeatureMatrix& features, const PipelineConfig& config,
                            const MaskPolicy& policy, std::uint64_t index, int rate) {
  RngStream rng = mask_stream(config, index);
  if (policy.domain == MaskDomain::kFeatureBaseline) {
    return apply_feature_masks(features, sample_masks(policy, features.num_frames(),
                                                      features.dims(), rng));
  }
  const ScfGeometry geo = ScfGeometry::for_rate(rate);
  if (features.dims() == geo.feature_dim()) {
    const ScfParams params = scf_params_for(config, rate);
    const FilterPeaks peaks = filter_peak_frequencies(params);
    const MaskSet masks = sample_masks(policy, features.num_frames(), geo.num_filters, rng);
    FeatureMatrix out = apply_sorted_feature_masks(features, peaks.order, masks, geo.num_temporal);
    return out;
  }
  // Log Mel channels are already ordered by frequency.
  std::vector<std::size_t> identity(features.dims());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  return apply_sorted_feature_masks(
      features, identity, sample_masks(policy, features.num_frames(), features.dims(), rng));
}

struct BatchItem {
  std::string input;
  std::string output;
};

std::vector<BatchItem> read_batch(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path + ": cannot open batch list");
  std::vector<BatchItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    BatchItem item;
    if (!(ls >> item.input)) continue;
    if (item.input.front() == '#') continue;
    if (!(ls >> item.output)) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected '<input> <output>'");
    }
    items.push_back(item);
  }
  return items;
}

int exit_code_for(const std::exception_ptr& error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const VerificationFailure& e) {
    err << "verification failed: " << e.what() << '\n';
    return kExitVerification;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

// Runs `job(index, item, log)` over the items on `jobs` threads; logs are
// printed in list order.
int run_batch(const std::vector<BatchItem>& items, std::size_t jobs,
              const std::function<void(std::uint64_t, const BatchItem&, std::string&)>& job,
              std::ostream& out, std::ostream& err) {
  std::vector<std::string> logs(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        job(i, items[i], logs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 1; t < std::max<std::size_t>(1, jobs); ++t) threads.emplace_back(worker);
    worker();
  }
  int code = kExitOk;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!logs[i].empty()) out << "# " << items[i].input << '\n' << logs[i];
    if (errors[i]) {
      const int c = exit_code_for(errors[i], err);
      if (code == kExitOk) code = c;
    }
  }
  return code;
}

GradCheckMode parse_mode(const std::string& name) {
  if (name == "random") return GradCheckMode::kRandom;
  if (name == "positive") return GradCheckMode::kPositive;
  if (name == "zero") return GradCheckMode::kZeroInput;
  throw UsageError("--mode must be random, positive or zero");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audio perturbation, feature extraction and masking for learnable front-ends",
               "scfreg"};
  app.require_subcommand(1);

  // perturb
  ConfigOptions perturb_cfg;
  std::string perturb_in, perturb_out, perturb_batch;
  std::uint64_t perturb_index = 0;
  std::size_t perturb_jobs = 1;
  auto* perturb = app.add_subcommand("perturb", "Apply the configured perturbation chain to a WAV");
  add_config_options(perturb, perturb_cfg);
  perturb->add_option("input", perturb_in, "Input WAV");
  perturb->add_option("output", perturb_out, "Output WAV (16-bit PCM)");
  perturb->add_option("--index", perturb_index, "Utterance index for the random stream");
  perturb->add_option("--batch", perturb_batch, "File with '<input> <output>' lines");
  perturb->add_option("--jobs", perturb_jobs, "Worker threads in batch mode");

  // featurize
  ConfigOptions feat_cfg;
  std::string feat_in, feat_out, feat_batch;
  std::uint64_t feat_index = 0;
  std::size_t feat_jobs = 1;
  auto* featurize_cmd =
      app.add_subcommand("featurize", "Chain, preemphasis and front-end: WAV to .feat");
  add_config_options(featurize_cmd, feat_cfg);
  featurize_cmd->add_option("input", feat_in, "Input WAV");
  featurize_cmd->add_option("output", feat_out, "Output .feat");
  featurize_cmd->add_option("--index", feat_index, "Utterance index for the random stream");
  featurize_cmd->add_option("--batch", feat_batch, "File with '<input> <output>' lines");
  featurize_cmd->add_option("--jobs", feat_jobs, "Worker threads in batch mode");

  // augment
  ConfigOptions aug_cfg;
  std::string aug_in, aug_out;
  std::uint64_t aug_index = 0;
  auto* augment = app.add_subcommand(
      "augment", "Masking: WAV to WAV in the STFT domain, features to .feat otherwise");
  add_config_options(augment, aug_cfg);
  augment->add_option("input", aug_in, "Input WAV or .feat")->required();
  augment->add_option("output", aug_out, "Output file")->required();
  augment->add_option("--index", aug_index, "Utterance index for the random stream");

  // inspect
  std::string inspect_in, inspect_pgm, inspect_csv;
  auto* inspect = app.add_subcommand("inspect", "Render a WAV spectrogram or .feat as PGM/CSV");
  inspect->add_option("input", inspect_in, "Input WAV or .feat")->required();
  inspect->add_option("--pgm", inspect_pgm, "Output PGM image");
  inspect->add_option("--csv", inspect_csv, "Output CSV matrix");

  // gradcheck
  GradCheckConfig grad_config;
  std::string grad_mode = "random";
  double grad_tolerance = 1e-3;
  std::size_t masked_seeds = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of SCF gradients");
  gradcheck->add_option("--probes", grad_config.probe_count, "Probed coordinates");
  gradcheck->add_option("--eps", grad_config.eps, "Central-difference step");
  gradcheck->add_option("--seed", grad_config.seed, "Random seed");
  gradcheck->add_option("--tolerance", grad_tolerance, "Maximum relative error");
  gradcheck->add_option("--mode", grad_mode, "random, positive or zero");
  gradcheck->add_option("--masked-seeds", masked_seeds,
                        "Also run the masked-gradient experiment for this many seeds");

  // demo
  ToyTaskConfig task_config;
  DemoConfig demo_config;
  std::string demo_out, demo_masking = "stft";
  auto* demo = app.add_subcommand("demo", "Toy overfitting experiment, writes learning curves");
  demo->add_option("--out", demo_out, "Output CSV")->required();
  demo->add_option("--epochs", demo_config.epochs, "Training epochs");
  demo->add_option("--train", task_config.train_size, "Training examples");
  demo->add_option("--dev", task_config.dev_size, "Dev examples");
  demo->add_option("--seed", demo_config.seed, "Random seed");
  demo->add_option("--lr-head", demo_config.head_learning_rate, "Classifier learning rate");
  demo->add_option("--lr-frontend", demo_config.frontend_learning_rate,
                   "SCF front-end learning rate");
  demo->add_option("--masking", demo_masking, "Masking in augmented arms: stft, baseline, sorted");

  // init-params
  std::string init_out;
  std::uint64_t init_seed = 0;
  int init_rate = 8000;
  auto* init_params = app.add_subcommand("init-params", "Write randomly initialized SCF parameters");
  init_params->add_option("output", init_out, "Output parameter file")->required();
  init_params->add_option("--seed", init_seed, "Random seed");
  init_params->add_option("--rate", init_rate, "Sample rate in Hz");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (perturb->parsed()) {
      const PipelineConfig config = build_config(perturb_cfg);
      auto job = [&](std::uint64_t index, const BatchItem& item, std::string& log) {
        const ChainResult result =
            apply_chain(read_wav(item.input), config.perturb_chain(), index);
        write_wav(item.output, result.wave);
        log = format_applied(result.applied);
      };
      if (!perturb_batch.empty()) {
        return run_batch(read_batch(perturb_batch), perturb_jobs, job, out, err);
      }
      if (perturb_in.empty() || perturb_out.empty()) {
        throw UsageError("perturb needs <input> <output> or --batch");
      }
      std::string log;
      job(perturb_index, {perturb_in, perturb_out}, log);
      out << log;
      return kExitOk;
    }

    if (featurize_cmd->parsed()) {
      const PipelineConfig config = build_config(feat_cfg);
      auto job = [&](std::uint64_t index, const BatchItem& item, std::string& log) {
        write_feat(item.output, featurize(read_wav(item.input), config, index, &log));
      };
      if (!feat_batch.empty()) {
        return run_batch(read_batch(feat_batch), feat_jobs, job, out, err);
      }
      if (feat_in.empty() || feat_out.empty()) {
        throw UsageError("featurize needs <input> <output> or --batch");
      }
      std::string log;
      job(feat_index, {feat_in, feat_out}, log);
      out << log;
      return kExitOk;
    }

    if (augment->parsed()) {
      const PipelineConfig config = build_config(aug_cfg);
      if (!config.masking) {
        throw UsageError("no masking policy configured; add a [specaug] section or a table2 preset");
      }
      const MaskPolicy& policy = *config.masking;
      const FileKind kind = sniff(aug_in);
      if (policy.domain == MaskDomain::kStftDomain) {
        if (kind != FileKind::kWav) {
          throw UsageError(
              "STFT-domain masking runs before feature extraction (STFT, mask, inverse STFT, "
              "then features), so it needs a WAV input, not features");
        }
        RngStream rng = mask_stream(config, aug_index);
        write_wav(aug_out, apply_stft_masks(read_wav(aug_in), policy, rng));
        return kExitOk;
      }
      // Feature-domain masking comes after feature extraction.
      FeatureMatrix features;
      int rate = 8000;
      if (kind == FileKind::kWav) {
        const Waveform wave = read_wav(aug_in);
        rate = wave.sample_rate_hz();
        std::string log;
        features = featurize(wave, config, aug_index, &log);
        out << log;
      } else {
        features = read_feat(aug_in);
      }
      write_feat(aug_out, mask_features(features, config, policy, aug_index, rate));
      return kExitOk;
    }

    if (inspect->parsed()) {
      if (inspect_pgm.empty() && inspect_csv.empty()) {
        throw UsageError("inspect needs --pgm and/or --csv");
      }
      const Matrix image = sniff(inspect_in) == FileKind::kWav
                               ? log_magnitude_spectrogram(read_wav(inspect_in))
                               : read_feat(inspect_in).values;
      if (!inspect_pgm.empty()) write_pgm(inspect_pgm, image);
      if (!inspect_csv.empty()) write_csv(inspect_csv, image);
      return kExitOk;
    }

    if (gradcheck->parsed()) {
      grad_config.mode = parse_mode(grad_mode);
      const GradReport report = finite_difference_check(grad_config);
      write_report(out, report);
      bool ok = report.max_rel_error() <= grad_tolerance;
      if (grad_config.mode == GradCheckMode::kZeroInput) {
        ok = report.max_abs_analytic() == 0.0 && report.max_abs_error() <= 1e-8;
      }
      for (std::size_t s = 0; s < masked_seeds; ++s) {
        const MaskedGradientReport masked = masked_gradient_experiment(grad_config.seed + s);
        write_report(out, masked);
        ok = ok && masked.passed();
      }
      out << "status=" << (ok ? "pass" : "fail") << '\n';
      if (!ok) throw VerificationFailure("gradient tolerances violated");
      return kExitOk;
    }

    if (demo->parsed()) {
      if (demo_masking == "stft") {
        demo_config.masking.domain = MaskDomain::kStftDomain;
      } else if (demo_masking == "baseline") {
        demo_config.masking.domain = MaskDomain::kFeatureBaseline;
      } else if (demo_masking == "sorted") {
        demo_config.masking.domain = MaskDomain::kFeatureSorted;
      } else {
        throw UsageError("--masking must be stft, baseline or sorted");
      }
      task_config.seed = demo_config.seed;
      const DemoResult result = toy_overfit_demo(make_toy_task(task_config), demo_config);
      std::ofstream os(demo_out);
      if (!os) throw IoError(demo_out + ": cannot open for writing");
      write_curves_csv(os, result);
      os.flush();
      if (!os) throw IoError(demo_out + ": write failed");
      out << "seed=" << demo_config.seed << '\n';
      bool diverged = false;
      for (const auto& arm : result.arms) {
        out << arm.arm << ".final_train_loss=" << arm.final_train_loss << '\n'
            << arm.arm << ".final_dev_loss=" << arm.final_dev_loss << '\n'
            << arm.arm << ".gap=" << arm.final_dev_loss - arm.final_train_loss << '\n';
        if (arm.diverged) {
          out << arm.arm << ".diverged=" << arm.diagnostics << '\n';
          diverged = true;
        }
      }
      if (diverged) throw VerificationFailure("a training run diverged");
      return kExitOk;
    }

    if (init_params->parsed()) {
      write_scf_params(init_out, ScfParams::random_init(ScfGeometry::for_rate(init_rate), init_seed));
      return kExitOk;
    }
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
  return kExitUsage;
}

}  // namespace scfreg
