// Copyright 2026 The gesturegen Authors
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

#include "ggen/audio/waveform.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace ggen::audio {

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

struct WavFormat {
  uint16_t codec = 0;  // 1 = integer PCM, 3 = IEEE float
  uint16_t channels = 0;
  uint32_t rate = 0;
  uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const WavFormat& f) {
  switch (f.bits) {
    case 16: {
      const auto v = static_cast<int16_t>(read_u16(p));
      return static_cast<double>(v) / 32768.0;
    }
    case 24: {
      int32_t v = static_cast<int32_t>(p[0]) | (static_cast<int32_t>(p[1]) << 8) |
                  (static_cast<int32_t>(p[2]) << 16);
      if (v & 0x800000) v -= 0x1000000;  // sign-extend
      return static_cast<double>(v) / 8388608.0;
    }
    case 32: {
      if (f.codec == 3) {
        float fv;
        std::memcpy(&fv, p, 4);
        return static_cast<double>(fv);
      }
      const auto v = static_cast<int32_t>(read_u32(p));
      return static_cast<double>(v) / 2147483648.0;
    }
    case 64: {
      double dv;
      std::memcpy(&dv, p, 8);
      return dv;
    }
    default:
      throw UnreadableFile("wav: unsupported bit depth " + std::to_string(f.bits));
  }
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Blackman window on [-1, 1].
double blackman(double u) {
  if (std::abs(u) > 1.0) return 0.0;
  return 0.42 + 0.5 * std::cos(M_PI * u) + 0.08 * std::cos(2.0 * M_PI * u);
}

}  // namespace

Waveform decode_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFile("wav: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw UnreadableFile("wav: not a RIFF/WAVE file: " + path);

  WavFormat fmt;
  bool have_fmt = false;
  size_t data_off = 0, data_len = 0;
  size_t off = 12;
  while (off + 8 <= n) {
    const char* id = bytes.data() + off;
    const uint32_t len = read_u32(p + off + 4);
    const size_t body = off + 8;
    if (body + len > n) throw UnreadableFile("wav: truncated chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw UnreadableFile("wav: fmt chunk too small in " + path);
      fmt.codec = read_u16(p + body);
      fmt.channels = read_u16(p + body + 2);
      fmt.rate = read_u32(p + body + 4);
      fmt.bits = read_u16(p + body + 14);
      if (fmt.codec == 0xFFFE && len >= 40) fmt.codec = read_u16(p + body + 24);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0)
    throw UnreadableFile("wav: missing fmt/data chunk in " + path);
  if (fmt.codec != 1 && fmt.codec != 3)
    throw UnreadableFile("wav: unsupported codec " + std::to_string(fmt.codec));
  if (fmt.channels == 0 || fmt.rate == 0)
    throw UnreadableFile("wav: malformed fmt chunk in " + path);

  const size_t bytes_per = fmt.bits / 8u;
  const size_t stride = bytes_per * fmt.channels;
  if (bytes_per == 0 || stride == 0) throw UnreadableFile("wav: zero sample width");
  const size_t frames = data_len / stride;
  if (frames == 0) throw EmptyAudio("wav: no samples in " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(fmt.rate);
  w.samples.resize(frames);
  for (size_t t = 0; t < frames; ++t) {
    double acc = 0.0;
    for (uint16_t c = 0; c < fmt.channels; ++c)
      acc += decode_sample(p + data_off + t * stride + c * bytes_per, fmt);
    const double v = acc / fmt.channels;
    if (!std::isfinite(v)) throw UnreadableFile("wav: non-finite sample in " + path);
    w.samples[t] = v;
  }
  return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
  std::string out;
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 2);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double v : w.samples) {
    const long q = std::lround(std::min(1.0, std::max(-1.0, v)) * 32768.0);
    const auto s = static_cast<int16_t>(std::min(32767l, std::max(-32768l, q)));
    put_u16(out, static_cast<uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UnreadableFile("wav: cannot write " + path);
  f << out;
}

void write_wav_float64(const std::string& path, const Waveform& w) {
  std::string out;
  const uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 8);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 3);  // IEEE float
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 8);
  put_u16(out, 8);
  put_u16(out, 64);
  out += "data";
  put_u32(out, data_len);
  for (double v : w.samples) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UnreadableFile("wav: cannot write " + path);
  f << out;
}

Waveform resample(const Waveform& w, int dst_rate) {
  require(w.sample_rate > 0 && dst_rate > 0, "resample: positive rates required");
  if (w.sample_rate == dst_rate) return w;

  const int64_t g = std::gcd(static_cast<int64_t>(w.sample_rate), static_cast<int64_t>(dst_rate));
  const int64_t up = dst_rate / g;    // L: output samples per block
  const int64_t down = w.sample_rate / g;  // M: input samples per block

  // Anti-alias cutoff at the narrower Nyquist; when downsampling the kernel
  // is stretched so it keeps the same number of zero crossings.
  const double ratio = static_cast<double>(up) / static_cast<double>(down);
  const double cutoff = 0.5 * std::min(1.0, ratio);
  constexpr double kZeroCrossings = 32.0;
  const double half_width = kZeroCrossings / std::min(1.0, ratio);

  const auto in_len = static_cast<int64_t>(w.samples.size());
  const int64_t out_len = (in_len * up) / down;

  Waveform out;
  out.sample_rate = dst_rate;
  out.samples.resize(static_cast<size_t>(out_len));

  // One tap set per output phase (polyphase): phase r covers all outputs n
  // with n % up == r, which share the same fractional source offset.
  std::vector<std::vector<double>> taps(static_cast<size_t>(up));
  std::vector<int64_t> first_k(static_cast<size_t>(up));
  for (int64_t r = 0; r < up; ++r) {
    const double frac = static_cast<double>(r * down % up) / static_cast<double>(up);
    const auto k0 = static_cast<int64_t>(std::ceil(frac - half_width));
    const auto k1 = static_cast<int64_t>(std::floor(frac + half_width));
    std::vector<double> t;
    t.reserve(static_cast<size_t>(k1 - k0 + 1));
    double sum = 0.0;
    for (int64_t k = k0; k <= k1; ++k) {
      const double x = static_cast<double>(k) - frac;
      const double v = 2.0 * cutoff * sinc(2.0 * cutoff * x) * blackman(x / half_width);
      t.push_back(v);
      sum += v;
    }
    for (double& v : t) v /= sum;  // exact DC gain
    taps[static_cast<size_t>(r)] = std::move(t);
    first_k[static_cast<size_t>(r)] = k0;
  }

  for (int64_t n = 0; n < out_len; ++n) {
    const int64_t num = n * down;           // source position = num / up
    const int64_t base = num / up;          // integer part
    const auto r = static_cast<size_t>(num % up);
    const auto& t = taps[r];
    const int64_t k0 = base + first_k[r];
    double acc = 0.0;
    for (size_t j = 0; j < t.size(); ++j) {
      const int64_t k = k0 + static_cast<int64_t>(j);
      if (k >= 0 && k < in_len) acc += w.samples[static_cast<size_t>(k)] * t[j];
    }
    out.samples[static_cast<size_t>(n)] = acc;
  }
  return out;
}

Waveform load_waveform(const std::string& path) {
  Waveform w = decode_wav(path);
  return resample(w, kModelSampleRate);
}

std::vector<Waveform> segment_waveform(const Waveform& w, double clip_seconds,
                                       double hop_seconds) {
  require(clip_seconds > 0 && hop_seconds > 0, "segment: positive window sizes required");
  const auto clip = static_cast<int64_t>(std::llround(clip_seconds * w.sample_rate));
  const auto hop = static_cast<int64_t>(std::llround(hop_seconds * w.sample_rate));
  const auto len = static_cast<int64_t>(w.samples.size());
  if (clip > len)
    throw ClipTooLong("segment: clip of " + std::to_string(clip_seconds) +
                      " s exceeds source of " + std::to_string(w.seconds()) + " s");
  std::vector<Waveform> clips;
  for (int64_t start = 0; start + clip <= len; start += hop) {
    Waveform c;
    c.sample_rate = w.sample_rate;
    c.samples.assign(w.samples.begin() + start, w.samples.begin() + start + clip);
    clips.push_back(std::move(c));
  }
  return clips;
}

}  // namespace ggen::audio
