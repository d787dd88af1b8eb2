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

#include "ggen/data/pairing.hpp"

#include <cmath>

namespace ggen::data {

void PairedClip::check_durations() const {
  const double frame = 1.0 / motion.fps;
  const double gap = std::abs(audio.seconds() - motion.seconds());
  if (gap > frame + 1e-9)
    throw DurationMismatch("clip '" + clip_id + "': audio spans " +
                           std::to_string(audio.seconds()) + " s but motion spans " +
                           std::to_string(motion.seconds()) + " s");
}

std::vector<PairedClip> pair_clips(std::vector<audio::Waveform> audio_clips,
                                   std::vector<motion::MotionClip> motion_clips,
                                   const std::string& source) {
  if (audio_clips.size() != motion_clips.size())
    throw CountMismatch("pair_clips: " + std::to_string(audio_clips.size()) +
                        " audio clips vs " + std::to_string(motion_clips.size()) +
                        " motion clips");
  std::vector<PairedClip> pairs;
  pairs.reserve(audio_clips.size());
  for (size_t i = 0; i < audio_clips.size(); ++i) {
    PairedClip p;
    p.audio = std::move(audio_clips[i]);
    p.motion = std::move(motion_clips[i]);
    p.clip_id = source.empty() ? ("clip_" + std::to_string(i))
                               : (source + "_" + std::to_string(i));
    p.source = source;
    p.check_durations();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace ggen::data
