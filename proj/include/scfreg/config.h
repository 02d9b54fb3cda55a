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

#ifndef SCFREG_CONFIG_H_
#define SCFREG_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scfreg/perturb.h"
#include "scfreg/specaug.h"

namespace scfreg {

enum class FrontEnd { kLogMel, kScf };

// Everything a CLI pipeline needs. Text grammar:
//
//   # comment              (also ';'; trailing comments allowed)
//   seed = 42              top-level keys come before any section:
//   preemphasis = 0.97       seed, preemphasis, frontend, scf_params
//   frontend = scf
//
//   [chain]                one line per perturbation, applied in order:
//   tempo = 1.0 0.7 1.3      <kind> = <probability> <min> <max>
//
//   [specaug]              domain = none | baseline | sorted | stft
//   domain = stft            max_time_mask, num_time_masks,
//   max_time_mask = 30       max_channel_mask, num_channel_masks
//
// Unknown sections and keys are errors. Later text overrides earlier scalar
// keys and appends to [chain].
struct PipelineConfig {
  std::uint64_t seed = 0;
  double preemphasis = 0.97;
  FrontEnd frontend = FrontEnd::kLogMel;
  std::optional<std::string> scf_params_path;
  std::vector<PerturbSpec> chain;
  std::optional<MaskPolicy> masking;

  PerturbChain perturb_chain() const { return {chain, seed}; }
  void validate() const;
  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

void apply_config_text(PipelineConfig& config, std::string_view text,
                       const std::string& source = "<config>");
PipelineConfig parse_config(std::string_view text, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

// Hyperparameter cells shipped as named config snippets, e.g. "table1-tempo"
// or "table2-stft-30-8".
std::vector<std::string> preset_names();
std::string preset_text(std::string_view name);

std::string_view to_string(MaskDomain domain);
std::string_view to_string(FrontEnd frontend);

}  // namespace scfreg

#endif  // SCFREG_CONFIG_H_
