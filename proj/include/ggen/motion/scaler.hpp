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

#include "ggen/motion/features.hpp"

#include <string>
#include <vector>

namespace ggen::motion {

// Per-channel z-score normalization fitted on a training corpus. Immutable
// after fit; apply/invert are exact inverses. The joint selection that
// produced the feature layout travels with the statistics so artifacts are
// self-describing.
struct FeatureScaler {
  RowVector mean;
  RowVector std;
  std::vector<std::string> joint_selection;

  static constexpr double kMinStd = 1e-8;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;

  std::string to_json() const;
  static FeatureScaler from_json(const std::string& text);
  void save(const std::string& path) const;
  static FeatureScaler load(const std::string& path);
};

// Population statistics over every frame of every clip. Zero-variance
// channels get kMinStd and a stderr warning. Needs >= 2 clips.
FeatureScaler fit_scaler(const std::vector<MotionClip>& clips,
                         const std::vector<std::string>& joint_selection = {});

}  // namespace ggen::motion
