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

#include "scfreg/config.h"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scfreg/errors.h"

namespace scfreg {

namespace {

struct Preset {
  std::string_view name;
  std::string_view text;
};

// Perturbation rows: probability, min, max. Mask rows: maximum time and
// feature mask sizes; two time masks at size 15 and one at size 30 keep the
// masked-frame ratio constant.
constexpr std::array<Preset, 12> kPresets{{
    {"table1-speed", "[chain]\nspeed = 0.7 0.88 1.12\n"},
    {"table1-tempo", "[chain]\ntempo = 1.0 0.7 1.3\n"},
    {"table1-pitch", "[chain]\npitch = 0.7 -2 2\n"},
    {"table1-nonlinear-amplitude", "[chain]\nnonlinear_amplitude = 0.7 0.8 1.2\n"},
    {"table1-mulaw", "[chain]\nmulaw = 0.3 1 5\n"},
    {"table1-preemphasis", "[chain]\npreemphasis_jitter = 0.7 -0.05 0.05\n"},
    {"table2-baseline-15-8",
     "[specaug]\ndomain = baseline\nmax_time_mask = 15\nnum_time_masks = 2\n"
     "max_channel_mask = 8\nnum_channel_masks = 2\n"},
    {"table2-baseline-30-8",
     "[specaug]\ndomain = baseline\nmax_time_mask = 30\nnum_time_masks = 1\n"
     "max_channel_mask = 8\nnum_channel_masks = 2\n"},
    {"table2-baseline-15-15",
     "[specaug]\ndomain = baseline\nmax_time_mask = 15\nnum_time_masks = 2\n"
     "max_channel_mask = 15\nnum_channel_masks = 2\n"},
    {"table2-sorted-15-8",
     "[specaug]\ndomain = sorted\nmax_time_mask = 15\nnum_time_masks = 2\n"
     "max_channel_mask = 8\nnum_channel_masks = 2\n"},
    {"table2-stft-15-4",
     "[specaug]\ndomain = stft\nmax_time_mask = 15\nnum_time_masks = 2\n"
     "max_channel_mask = 4\nnum_channel_masks = 2\n"},
    {"table2-stft-30-8",
     "[specaug]\ndomain = stft\nmax_time_mask = 30\nnum_time_masks = 1\n"
     "max_channel_mask = 8\nnum_channel_masks = 2\n"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class LineError {
 public:
  LineError(const std::string& source, std::size_t line) : prefix_(source + ":" + std::to_string(line) + ": ") {}
  [[noreturn]] void operator()(const std::string& what) const { throw ConfigError(prefix_ + what); }

 private:
  std::string prefix_;
};

double parse_real(std::string_view token, const std::string& key, const LineError& fail) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    fail("key '" + key + "': expected a number, got '" + std::string(token) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view token, const std::string& key, const LineError& fail) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail("key '" + key + "': expected a nonnegative integer, got '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

std::string_view to_string(MaskDomain domain) {
  switch (domain) {
    case MaskDomain::kFeatureBaseline:
      return "baseline";
    case MaskDomain::kFeatureSorted:
      return "sorted";
    case MaskDomain::kStftDomain:
      return "stft";
  }
  return "?";
}

std::string_view to_string(FrontEnd frontend) {
  return frontend == FrontEnd::kScf ? "scf" : "logmel";
}

void PipelineConfig::validate() const {
  if (!(preemphasis >= 0.0 && preemphasis <= 1.0)) {
    throw ConfigError("preemphasis must lie in [0, 1]");
  }
  for (const auto& spec : chain) spec.validate();
  if (masking) masking->validate();
}

void apply_config_text(PipelineConfig& config, std::string_view text,
                       const std::string& source) {
  std::string section;
  bool masking_disabled = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const LineError fail(source, line_no);
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) {
      line = line.substr(0, c);
    }
    line = trim(line);
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "chain" && section != "specaug") {
        fail("unknown section [" + section + "]");
      }
      if (section == "specaug" && !config.masking) config.masking = MaskPolicy{};
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (value.empty()) fail("key '" + key + "' has no value");

    if (section.empty()) {
      if (key == "seed") {
        config.seed = parse_uint(value, key, fail);
      } else if (key == "preemphasis") {
        config.preemphasis = parse_real(value, key, fail);
        if (!(config.preemphasis >= 0.0 && config.preemphasis <= 1.0)) {
          fail("key 'preemphasis' must lie in [0, 1]");
        }
      } else if (key == "frontend") {
        if (value == "logmel") {
          config.frontend = FrontEnd::kLogMel;
        } else if (value == "scf") {
          config.frontend = FrontEnd::kScf;
        } else {
          fail("key 'frontend' must be logmel or scf, got '" + std::string(value) + "'");
        }
      } else if (key == "scf_params") {
        config.scf_params_path = std::string(value);
      } else {
        fail("unknown key '" + key + "'");
      }
    } else if (section == "chain") {
      const auto kind = parse_perturb_kind(key);
      if (!kind) fail("unknown key '" + key + "' in [chain] (not a perturbation kind)");
      const auto parts = split_ws(value);
      if (parts.size() != 3) fail("key '" + key + "' expects '<probability> <min> <max>'");
      PerturbSpec spec{*kind, parse_real(parts[0], key, fail), parse_real(parts[1], key, fail),
                       parse_real(parts[2], key, fail)};
      try {
        spec.validate();
      } catch (const ConfigError& e) {
        fail("key '" + key + "': " + e.what());
      }
      config.chain.push_back(spec);
    } else {
      MaskPolicy& policy = *config.masking;
      if (key == "domain") {
        if (value == "none") {
          masking_disabled = true;
        } else if (value == "baseline") {
          policy.domain = MaskDomain::kFeatureBaseline;
          masking_disabled = false;
        } else if (value == "sorted") {
          policy.domain = MaskDomain::kFeatureSorted;
          masking_disabled = false;
        } else if (value == "stft") {
          policy.domain = MaskDomain::kStftDomain;
          masking_disabled = false;
        } else {
          fail("key 'domain' must be none, baseline, sorted or stft, got '" +
               std::string(value) + "'");
        }
      } else if (key == "max_time_mask") {
        policy.max_time_mask = parse_uint(value, key, fail);
      } else if (key == "num_time_masks") {
        policy.num_time_masks = parse_uint(value, key, fail);
      } else if (key == "max_channel_mask") {
        policy.max_channel_mask = parse_uint(value, key, fail);
      } else if (key == "num_channel_masks") {
        policy.num_channel_masks = parse_uint(value, key, fail);
      } else {
        fail("unknown key '" + key + "' in [specaug]");
      }
    }
    if (eol == text.size()) break;
  }
  if (masking_disabled) config.masking.reset();
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

PipelineConfig parse_config(std::string_view text, const std::string& source) {
  PipelineConfig config;
  apply_config_text(config, text, source);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

std::string preset_text(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return std::string(p.text);
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace scfreg
