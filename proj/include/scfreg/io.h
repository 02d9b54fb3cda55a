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

#ifndef SCFREG_IO_H_
#define SCFREG_IO_H_

#include <filesystem>
#include <iosfwd>
#include <string>

#include "scfreg/features.h"
#include "scfreg/signal.h"

namespace scfreg {

// Mono RIFF/WAVE: 8-bit unsigned, 16/24/32-bit signed PCM or 32-bit float
// (plain or WAVE_FORMAT_EXTENSIBLE). Multi-channel files are rejected.
Waveform read_wav(const std::filesystem::path& path);
Waveform read_wav(std::istream& is, const std::string& name = "<stream>");

// 16-bit PCM, round-to-nearest with clipping, no dither.
void write_wav(const std::filesystem::path& path, const Waveform& wave);
void write_wav(std::ostream& os, const Waveform& wave);

// .feat: "FEAT", u32 frames, u32 dims, f32 frame_shift_ms, then row-major
// f32 values, all little-endian.
void write_feat(const std::filesystem::path& path, const FeatureMatrix& features);
void write_feat(std::ostream& os, const FeatureMatrix& features);
FeatureMatrix read_feat(const std::filesystem::path& path);
FeatureMatrix read_feat(std::istream& is, const std::string& name = "<stream>");

// SCF parameters: "SCF1", u32 num_filters, filter_length, num_temporal,
// temporal_length, feature_dim, then row-major filters1, filters2, ln_gain,
// ln_bias as little-endian f32. Strides and root come from the default
// geometry for `sample_rate_hz`.
void write_scf_params(const std::filesystem::path& path, const ScfParams& params);
ScfParams read_scf_params(const std::filesystem::path& path, int sample_rate_hz = 8000);

// Binary PGM (P5). Values are min-max scaled to 0..255 per image; a constant
// image maps to 0 everywhere. Rows are drawn top-down with the highest
// channel first.
void write_pgm(const std::filesystem::path& path, const Matrix& frames_by_channels);

void write_csv(const std::filesystem::path& path, const Matrix& frames_by_channels);

// Log magnitude (natural log of |X| + 1e-10) of the 25/10 ms STFT.
Matrix log_magnitude_spectrogram(const Waveform& wave);

}  // namespace scfreg

#endif  // SCFREG_IO_H_
