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

#include "scfreg/specaug.h"

#include <algorithm>
#include <string>

#include "scfreg/errors.h"

namespace scfreg {

namespace {

void sample_axis(std::size_t count, std::size_t max_len, std::size_t extent, RngStream& rng,
                 std::vector<MaskInterval>& out) {
  if (extent == 0) return;
  for (std::size_t i = 0; i < count; ++i) {
    const auto length =
        static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_len)));
    const auto start =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(extent) - 1));
    out.push_back({start, std::min(length, extent - start)});
  }
}

void check_intervals(const std::vector<MaskInterval>& intervals, std::size_t extent,
                     const char* axis) {
  for (const auto& m : intervals) {
    if (m.length == 0 || m.start >= extent || m.end() > extent) {
      throw StructuralError(std::string(axis) + " mask [" + std::to_string(m.start) + ", " +
                            std::to_string(m.end()) + ") outside extent " +
                            std::to_string(extent));
    }
  }
}

}  // namespace

void MaskPolicy::validate() const {
  if (num_time_masks > 0 && max_time_mask == 0) {
    throw ConfigError("max_time_mask must be at least 1 when time masks are requested");
  }
  if (num_channel_masks > 0 && max_channel_mask == 0) {
    throw ConfigError("max_channel_mask must be at least 1 when channel masks are requested");
  }
}

void MaskSet::check_bounds(std::size_t num_frames, std::size_t num_channels) const {
  check_intervals(time_masks, num_frames, "time");
  check_intervals(channel_masks, num_channels, "channel");
}

MaskSet sample_masks(const MaskPolicy& policy, std::size_t num_frames,
                     std::size_t num_channels, RngStream& rng) {
  policy.validate();
  MaskSet masks;
  sample_axis(policy.num_time_masks, policy.max_time_mask, num_frames, rng, masks.time_masks);
  sample_axis(policy.num_channel_masks, policy.max_channel_mask, num_channels, rng,
              masks.channel_masks);
  return masks;
}

void apply_feature_masks_in_place(Matrix& values, const MaskSet& masks) {
  masks.check_bounds(values.rows(), values.cols());
  for (const auto& m : masks.time_masks) {
    for (std::size_t t = m.start; t < m.end(); ++t) {
      auto row = values.row(t);
      std::fill(row.begin(), row.end(), 0.0);
    }
  }
  for (const auto& m : masks.channel_masks) {
    for (std::size_t t = 0; t < values.rows(); ++t) {
      for (std::size_t c = m.start; c < m.end(); ++c) values(t, c) = 0.0;
    }
  }
}

FeatureMatrix apply_feature_masks(const FeatureMatrix& features, const MaskSet& masks) {
  FeatureMatrix out = features;
  apply_feature_masks_in_place(out.values, masks);
  return out;
}

std::vector<std::size_t> sorted_masked_channels(std::span<const std::size_t> order,
                                                const MaskSet& masks,
                                                std::size_t group_size) {
  if (group_size == 0) throw StructuralError("channel group size must be positive");
  std::vector<bool> seen(order.size(), false);
  for (std::size_t c : order) {
    if (c >= order.size() || seen[c]) {
      throw StructuralError("channel order is not a permutation of 0.." +
                            std::to_string(order.size() - 1));
    }
    seen[c] = true;
  }
  check_intervals(masks.channel_masks, order.size(), "channel");
  std::vector<bool> hit(order.size() * group_size, false);
  for (const auto& m : masks.channel_masks) {
    for (std::size_t rank = m.start; rank < m.end(); ++rank) {
      for (std::size_t j = 0; j < group_size; ++j) hit[order[rank] * group_size + j] = true;
    }
  }
  std::vector<std::size_t> channels;
  for (std::size_t c = 0; c < hit.size(); ++c) {
    if (hit[c]) channels.push_back(c);
  }
  return channels;
}

FeatureMatrix apply_sorted_feature_masks(const FeatureMatrix& features,
                                         std::span<const std::size_t> order,
                                         const MaskSet& masks, std::size_t group_size) {
  if (order.size() * group_size != features.dims()) {
    throw StructuralError("channel order of " + std::to_string(order.size()) + " x " +
                          std::to_string(group_size) + " does not cover " +
                          std::to_string(features.dims()) + " feature channels");
  }
  const std::vector<std::size_t> channels = sorted_masked_channels(order, masks, group_size);
  FeatureMatrix out = features;
  MaskSet time_only{masks.time_masks, {}};
  apply_feature_masks_in_place(out.values, time_only);
  for (std::size_t t = 0; t < out.num_frames(); ++t) {
    for (std::size_t c : channels) out.values(t, c) = 0.0;
  }
  return out;
}

void apply_stft_mask_set(ComplexSpectrogram& spec, const MaskSet& masks) {
  masks.check_bounds(spec.num_frames, spec.num_bins);
  for (const auto& m : masks.time_masks) {
    for (std::size_t t = m.start; t < m.end(); ++t) {
      for (std::size_t k = 0; k < spec.num_bins; ++k) spec.at(t, k) = Complex(0.0, 0.0);
    }
  }
  for (const auto& m : masks.channel_masks) {
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
      for (std::size_t k = m.start; k < m.end(); ++k) spec.at(t, k) = Complex(0.0, 0.0);
    }
  }
}

Waveform apply_stft_masks(const Waveform& wave, const MaskSet& masks) {
  ComplexSpectrogram spec = stft(wave);
  apply_stft_mask_set(spec, masks);
  return istft(spec);
}

Waveform apply_stft_masks(const Waveform& wave, const MaskPolicy& policy, RngStream& rng,
                          MaskSet* sampled) {
  if (policy.domain != MaskDomain::kStftDomain) {
    throw ConfigError("STFT masking requires a policy with the STFT domain");
  }
  ComplexSpectrogram spec = stft(wave);
  const MaskSet masks = sample_masks(policy, spec.num_frames, spec.num_bins, rng);
  apply_stft_mask_set(spec, masks);
  if (sampled != nullptr) *sampled = masks;
  return istft(spec);
}

}  // namespace scfreg
