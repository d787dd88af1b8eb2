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

#pragma once

#include "ggen/common.hpp"

#include <string>
#include <vector>

namespace ggen::audio {

// The one sample rate every downstream consumer sees.
inline constexpr int kModelSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;  // mono, full-scale normalized to [-1, 1]
  int sample_rate = 0;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a WAV file (PCM 16/24/32-bit or IEEE float, any rate, any channel
// count), averages channels to mono, normalizes by the container full scale,
// and resamples to 16 kHz. Throws UnreadableFile / EmptyAudio.
Waveform load_waveform(const std::string& path);

// Same decoding pipeline minus the resample; exposed for tests and tools.
Waveform decode_wav(const std::string& path);

// Writes mono PCM16 (quantized) or IEEE float64 WAV, for fixtures and for
// exporting prepared clips.
void write_wav_pcm16(const std::string& path, const Waveform& w);
void write_wav_float64(const std::string& path, const Waveform& w);

// Windowed-sinc resampling at a rational rate ratio; identity when the
// rates already match.
Waveform resample(const Waveform& w, int dst_rate);

// Fixed-size windows of clip_seconds, advancing by hop_seconds; the final
// partial window is dropped. Throws ClipTooLong when the source is shorter
// than one clip.
std::vector<Waveform> segment_waveform(const Waveform& w, double clip_seconds,
                                       double hop_seconds);

}  // namespace ggen::audio
