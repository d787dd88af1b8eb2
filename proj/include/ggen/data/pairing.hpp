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

#include "ggen/audio/waveform.hpp"
#include "ggen/motion/features.hpp"

#include <string>
#include <vector>

namespace ggen::data {

// One training example: a speech clip and the gesture clip performed with
// it, cut from a shared timeline.
struct PairedClip {
  audio::Waveform audio;
  motion::MotionClip motion;
  std::string clip_id;
  std::string source;

  // Audio and motion must describe the same span within one motion frame.
  void check_durations() const;
};

// Index-aligned pairing. Throws CountMismatch on unequal counts and
// DurationMismatch when any pair's spans disagree by more than one frame.
std::vector<PairedClip> pair_clips(std::vector<audio::Waveform> audio_clips,
                                   std::vector<motion::MotionClip> motion_clips,
                                   const std::string& source = "");

}  // namespace ggen::data
