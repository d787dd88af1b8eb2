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
//
// Synthetic fixtures shared across the test binaries: a small three-joint
// skeleton and deterministic smooth motion on it.

#pragma once

#include "ggen/motion/bvh.hpp"

#include <cmath>

namespace ggen::test {

// Hips (6 channels) -> Spine (3) -> Head (3 + end site); 12 channels total.
inline motion::Skeleton three_joint_skeleton() {
  motion::Skeleton skel;
  motion::Skeleton::Joint hips;
  hips.name = "Hips";
  hips.parent = -1;
  hips.offset = {0.0, 0.0, 0.0};
  hips.channels = {"Xposition", "Yposition", "Zposition",
                   "Zrotation", "Xrotation", "Yrotation"};
  motion::Skeleton::Joint spine;
  spine.name = "Spine";
  spine.parent = 0;
  spine.offset = {0.0, 10.0, 0.0};
  spine.channels = {"Zrotation", "Xrotation", "Yrotation"};
  motion::Skeleton::Joint head;
  head.name = "Head";
  head.parent = 1;
  head.offset = {0.0, 15.0, 0.0};
  head.channels = {"Zrotation", "Xrotation", "Yrotation"};
  head.end_offset = Eigen::Vector3d(0.0, 5.0, 0.0);
  skel.joints = {hips, spine, head};
  return skel;
}

// Smooth deterministic motion: the root drifts forward while turning, and
// every rotation channel follows its own sinusoid. Amplitudes stay well
// under 90 degrees so exponential maps remain far from the pi boundary.
inline motion::BvhDocument synthetic_bvh(Eigen::Index frames, double fps,
                                         double forward_speed_cm_s = 6.0) {
  motion::BvhDocument doc;
  doc.skeleton = three_joint_skeleton();
  doc.frame_time = 1.0 / fps;
  doc.frames.resize(frames, 12);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double s = static_cast<double>(t) / fps;  // seconds
    doc.frames(t, 0) = 2.0 * std::sin(0.9 * s);               // Xposition
    doc.frames(t, 1) = 92.0 + 1.5 * std::sin(2.1 * s + 0.4);  // Yposition
    doc.frames(t, 2) = forward_speed_cm_s * s;                // Zposition
    doc.frames(t, 3) = 8.0 * std::sin(1.1 * s + 0.3);         // root Z
    doc.frames(t, 4) = 12.0 * std::sin(0.7 * s + 1.1);        // root X
    doc.frames(t, 5) = 25.0 * std::sin(0.5 * s);              // root Y (yaw-ish)
    doc.frames(t, 6) = 30.0 * std::sin(1.7 * s + 0.9);        // spine Z
    doc.frames(t, 7) = 20.0 * std::sin(1.3 * s + 2.0);        // spine X
    doc.frames(t, 8) = 15.0 * std::sin(0.8 * s + 0.5);        // spine Y
    doc.frames(t, 9) = 10.0 * std::sin(2.3 * s + 1.7);        // head Z
    doc.frames(t, 10) = 18.0 * std::sin(1.9 * s + 0.2);       // head X
    doc.frames(t, 11) = 22.0 * std::sin(0.6 * s + 2.6);       // head Y
  }
  return doc;
}

}  // namespace ggen::test
