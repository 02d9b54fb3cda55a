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

#ifndef SCFREG_SPECAUG_H_
#define SCFREG_SPECAUG_H_

#include <cstddef>
#include <span>
#include <vector>

#include "scfreg/features.h"
#include "scfreg/rng.h"
#include "scfreg/signal.h"

namespace scfreg {

enum class MaskDomain {
  kFeatureBaseline,  // mask features after extraction
  kFeatureSorted,    // mask feature channels in peak-frequency order
  kStftDomain,       // mask the STFT of the waveform, then invert
};

struct MaskPolicy {
  std::size_t max_time_mask = 15;
  std::size_t num_time_masks = 2;
  std::size_t max_channel_mask = 8;
  std::size_t num_channel_masks = 2;
  MaskDomain domain = MaskDomain::kFeatureBaseline;

  void validate() const;
  friend bool operator==(const MaskPolicy&, const MaskPolicy&) = default;
};

struct MaskInterval {
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t end() const { return start + length; }
  friend bool operator==(const MaskInterval&, const MaskInterval&) = default;
};

struct MaskSet {
  std::vector<MaskInterval> time_masks;
  std::vector<MaskInterval> channel_masks;

  bool empty() const { return time_masks.empty() && channel_masks.empty(); }
  // Throws StructuralError when an interval is empty or leaves [0, extent).
  void check_bounds(std::size_t num_frames, std::size_t num_channels) const;
  friend bool operator==(const MaskSet&, const MaskSet&) = default;
};

// Each mask draws its length uniformly from {1..max} and its start uniformly
// from {0..extent-1}, then is clipped to the extent. Masks may overlap. An
// axis with zero extent gets no masks.
MaskSet sample_masks(const MaskPolicy& policy, std::size_t num_frames,
                     std::size_t num_channels, RngStream& rng);

// Zeroes masked frames and channels; every other cell is left untouched.
FeatureMatrix apply_feature_masks(const FeatureMatrix& features, const MaskSet& masks);
void apply_feature_masks_in_place(Matrix& values, const MaskSet& masks);

// Storage channels hit by channel masks interpreted in the ranked order
// `order`: mask [s, s + l) covers ranks s..s+l-1, and rank i expands to the
// channels order[i] * group_size ... + group_size - 1.
std::vector<std::size_t> sorted_masked_channels(std::span<const std::size_t> order,
                                                const MaskSet& masks,
                                                std::size_t group_size = 1);

// Channel masks act on neighbors in `order` instead of storage neighbors.
// For SCF features, `order` ranks the base filters and group_size is the
// number of temporal filters, so each masked filter drops all of its
// channels. Time masks are applied as usual.
FeatureMatrix apply_sorted_feature_masks(const FeatureMatrix& features,
                                         std::span<const std::size_t> order,
                                         const MaskSet& masks, std::size_t group_size = 1);

// Zeroes complex coefficients in masked frames (time masks) and bins
// (channel masks).
void apply_stft_mask_set(ComplexSpectrogram& spec, const MaskSet& masks);

// STFT (25 ms / 10 ms), mask, inverse STFT back to the original length.
Waveform apply_stft_masks(const Waveform& wave, const MaskSet& masks);
Waveform apply_stft_masks(const Waveform& wave, const MaskPolicy& policy, RngStream& rng,
                          MaskSet* sampled = nullptr);

}  // namespace scfreg

#endif  // SCFREG_SPECAUG_H_
