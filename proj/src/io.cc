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

#include "scfreg/io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "scfreg/errors.h"

namespace scfreg {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>(v >> 24)};
  os.write(b, 4);
}

void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t le_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

class Reader {
 public:
  Reader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}

  void bytes(void* dst, std::size_t n) {
    is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("unexpected end of file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    return le_u32(b);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string tag() {
    char b[4];
    bytes(b, 4);
    return std::string(b, 4);
  }
  bool at_eof() { return is_.peek() == std::char_traits<char>::eof(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(name_ + ": " + what);
  }

 private:
  std::istream& is_;
  std::string name_;
};

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string() + ": cannot open for reading");
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path.string() + ": cannot open for writing");
  return os;
}

void finish(std::ostream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError(path.string() + ": write failed");
}

}  // namespace

Waveform read_wav(std::istream& is, const std::string& name) {
  Reader r(is, name);
  if (r.tag() != "RIFF") r.fail("not a RIFF file");
  r.u32();
  if (r.tag() != "WAVE") r.fail("RIFF file is not WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<unsigned char> data;
  bool have_data = false;
  while (!have_data) {
    if (r.at_eof()) break;
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    std::vector<unsigned char> body(size);
    r.bytes(body.data(), size);
    if (size % 2 == 1 && !r.at_eof()) {
      unsigned char pad;
      r.bytes(&pad, 1);
    }
    if (id == "fmt ") {
      if (size < 16) r.fail("fmt chunk too short");
      format = le_u16(&body[0]);
      channels = le_u16(&body[2]);
      rate = le_u32(&body[4]);
      bits = le_u16(&body[14]);
      if (format == kFormatExtensible) {
        if (size < 26) r.fail("extensible fmt chunk too short");
        format = le_u16(&body[24]);
      }
      have_fmt = true;
    } else if (id == "data") {
      data = std::move(body);
      have_data = true;
    }
  }
  if (!have_fmt) r.fail("missing fmt chunk");
  if (!have_data) r.fail("missing data chunk");
  if (channels != 1) {
    r.fail("expected mono audio, found " + std::to_string(channels) + " channels");
  }
  if (rate == 0 || rate > 1'000'000) r.fail("invalid sample rate " + std::to_string(rate));

  const std::size_t width = bits / 8;
  const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == kFormatFloat && bits == 32;
  if (!pcm_ok && !float_ok) {
    r.fail("unsupported sample format " + std::to_string(format) + " with " +
           std::to_string(bits) + " bits");
  }
  const std::size_t count = data.size() / width;
  std::vector<double> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* p = &data[i * width];
    double v = 0.0;
    if (float_ok) {
      v = std::bit_cast<float>(le_u32(p));
      if (!std::isfinite(v)) r.fail("non-finite float sample at index " + std::to_string(i));
    } else if (bits == 8) {
      v = (static_cast<int>(p[0]) - 128) / 128.0;
    } else if (bits == 16) {
      v = static_cast<std::int16_t>(le_u16(p)) / 32768.0;
    } else if (bits == 24) {
      std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (s & 0x800000) s -= 0x1000000;
      v = s / 8388608.0;
    } else {
      v = static_cast<std::int32_t>(le_u32(p)) / 2147483648.0;
    }
    samples[i] = v;
  }
  return Waveform(std::move(samples), static_cast<int>(rate));
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  return read_wav(is, path.string());
}

void write_wav(std::ostream& os, const Waveform& wave) {
  const auto samples = wave.samples();
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, kFormatPcm);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(wave.sample_rate_hz()));
  put_u32(os, static_cast<std::uint32_t>(wave.sample_rate_hz()) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (double v : samples) {
    const double scaled = std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0);
    put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  std::ofstream os = open_out(path);
  write_wav(os, wave);
  finish(os, path);
}

void write_feat(std::ostream& os, const FeatureMatrix& features) {
  features.validate();
  os.write("FEAT", 4);
  put_u32(os, static_cast<std::uint32_t>(features.num_frames()));
  put_u32(os, static_cast<std::uint32_t>(features.dims()));
  put_f32(os, static_cast<float>(features.frame_shift_ms));
  for (double v : features.values.data()) put_f32(os, static_cast<float>(v));
}

void write_feat(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ofstream os = open_out(path);
  write_feat(os, features);
  finish(os, path);
}

FeatureMatrix read_feat(std::istream& is, const std::string& name) {
  Reader r(is, name);
  if (r.tag() != "FEAT") r.fail("not a .feat file (bad magic)");
  const std::uint32_t frames = r.u32();
  const std::uint32_t dims = r.u32();
  FeatureMatrix f;
  f.frame_shift_ms = r.f32();
  if (!(f.frame_shift_ms > 0.0)) r.fail("frame shift must be positive");
  std::vector<double> values(static_cast<std::size_t>(frames) * dims);
  for (double& v : values) {
    v = r.f32();
    if (!std::isfinite(v)) r.fail("non-finite feature value");
  }
  if (!r.at_eof()) r.fail("trailing bytes after feature data");
  f.values = Matrix(frames, dims, std::move(values));
  return f;
}

FeatureMatrix read_feat(const std::filesystem::path& path) {
  std::ifstream is = open_in(path);
  return read_feat(is, path.string());
}

void write_scf_params(const std::filesystem::path& path, const ScfParams& params) {
  params.validate();
  std::ofstream os = open_out(path);
  const ScfGeometry& g = params.geometry;
  os.write("SCF1", 4);
  put_u32(os, static_cast<std::uint32_t>(g.num_filters));
  put_u32(os, static_cast<std::uint32_t>(g.filter_length));
  put_u32(os, static_cast<std::uint32_t>(g.num_temporal));
  put_u32(os, static_cast<std::uint32_t>(g.temporal_length));
  put_u32(os, static_cast<std::uint32_t>(g.feature_dim()));
  for (double v : params.filters1.data()) put_f32(os, static_cast<float>(v));
  for (double v : params.filters2.data()) put_f32(os, static_cast<float>(v));
  for (double v : params.ln_gain) put_f32(os, static_cast<float>(v));
  for (double v : params.ln_bias) put_f32(os, static_cast<float>(v));
  finish(os, path);
}

ScfParams read_scf_params(const std::filesystem::path& path, int sample_rate_hz) {
  std::ifstream is = open_in(path);
  Reader r(is, path.string());
  if (r.tag() != "SCF1") r.fail("not an SCF parameter file (bad magic)");
  ScfGeometry g = ScfGeometry::for_rate(sample_rate_hz);
  g.num_filters = r.u32();
  g.filter_length = r.u32();
  g.num_temporal = r.u32();
  g.temporal_length = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim != g.feature_dim()) r.fail("feature dimension does not match filter counts");
  try {
    g.validate();
  } catch (const ConfigError& e) {
    r.fail(e.what());
  }
  ScfParams p = ScfParams::zeros(g);
  for (double& v : p.filters1.data()) v = r.f32();
  for (double& v : p.filters2.data()) v = r.f32();
  for (double& v : p.ln_gain) v = r.f32();
  for (double& v : p.ln_bias) v = r.f32();
  if (!r.at_eof()) r.fail("trailing bytes after parameters");
  try {
    p.validate();
  } catch (const StructuralError& e) {
    r.fail(e.what());
  }
  return p;
}

void write_pgm(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os = open_out(path);
  const std::size_t width = m.rows();
  const std::size_t height = m.cols();
  os << "P5\n" << width << ' ' << height << "\n255\n";
  double lo = 0.0, hi = 0.0;
  if (!m.empty()) {
    const auto [mn, mx] = std::minmax_element(m.data().begin(), m.data().end());
    lo = *mn;
    hi = *mx;
  }
  const double range = hi - lo;
  std::vector<char> row(width);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t channel = height - 1 - y;
    for (std::size_t x = 0; x < width; ++x) {
      const double v = range > 0.0 ? (m(x, channel) - lo) / range : 0.0;
      row[x] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    os.write(row.data(), static_cast<std::streamsize>(width));
  }
  finish(os, path);
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os = open_out(path);
  os << std::setprecision(9);
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) os << ',';
      os << m(t, c);
    }
    os << '\n';
  }
  finish(os, path);
}

Matrix log_magnitude_spectrogram(const Waveform& wave) {
  const ComplexSpectrogram spec = stft(wave);
  Matrix out(spec.num_frames, spec.num_bins);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    for (std::size_t k = 0; k < spec.num_bins; ++k) {
      out(t, k) = std::log(std::abs(spec.at(t, k)) + 1e-10);
    }
  }
  return out;
}

}  // namespace scfreg
