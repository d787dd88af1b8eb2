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
// Pose-feature pipeline: BVH frames become per-joint exponential maps plus
// root velocities in the horizontal heading frame, at 20 fps; and back again
// for playback. Feature column layout, with S selected joints:
//   [0, 3S)        joint rotations as expmap radians (root stores its tilt,
//                  i.e. rotation with the yaw component removed)
//   [3S, 3S+3)     root linear velocity, cm/frame, in the previous frame's
//                  heading frame
//   [3S+3, 3S+6)   root angular velocity, radians/frame (yaw increment
//                  about +Y)

#pragma once

#include "ggen/motion/bvh.hpp"
#include "ggen/motion/rotation.hpp"

#include <string>
#include <vector>

namespace ggen::motion {

inline constexpr double kTargetFps = 20.0;

struct MotionClip {
  Matrix features;  // T x (3S + 6)
  double fps = kTargetFps;
  std::string skeleton_ref;

  Eigen::Index frames() const { return features.rows(); }
  Eigen::Index dims() const { return features.cols(); }
  double seconds() const { return static_cast<double>(features.rows()) / fps; }
};

struct RootMotion {
  Matrix linear;   // T x 3
  Matrix angular;  // T x 3
};

// Per-frame finite differences of the root trajectory, expressed in the
// previous frame's heading frame; the first frame duplicates the second so
// every frame carries a velocity. Throws TooShort for T < 2.
RootMotion extract_root_motion(const Matrix& positions, const Matrix& rotations_expmap);

// Joints to include, in feature-column order. An empty list selects every
// joint with rotation channels; the root is always included first.
std::vector<int> select_joints(const Skeleton& skel, const std::vector<std::string>& names);

// Full forward pipeline at the document's native rate (no resampling here).
MotionClip clip_from_bvh(const BvhDocument& doc,
                         const std::vector<std::string>& selection = {});

// Inverse: integrates the root trajectory from the origin with identity
// heading and writes Euler channels in the skeleton's layout. Joints not in
// the selection get zero rotations. Throws LayoutMismatch when the clip's
// width does not fit the selection.
BvhDocument bvh_from_clip(const MotionClip& clip, const Skeleton& skel,
                          const std::vector<std::string>& selection = {});

// Downsampling only (UpsampleNotSupported otherwise). Rotations interpolate
// on quaternions; root velocities are re-derived from the integrated and
// resampled trajectory, so displacement over the common time span is kept.
MotionClip resample_motion(const MotionClip& clip, double dst_fps = kTargetFps);

}  // namespace ggen::motion
