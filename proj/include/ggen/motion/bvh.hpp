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

#include <Eigen/Geometry>

#include <optional>
#include <string>
#include <vector>

namespace ggen::motion {

struct Skeleton {
  struct Joint {
    std::string name;
    int parent = -1;  // -1 for the root; parents precede children
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // cm, relative to parent
    std::vector<std::string> channels;  // document order, e.g. "Zrotation"
    std::optional<Eigen::Vector3d> end_offset;  // End Site, if present
  };

  std::vector<Joint> joints;

  int joint_index(const std::string& name) const;
  Eigen::Index total_channels() const;
  // Euler order string like "ZXY" for a joint's rotation channels.
  std::string rotation_order(int joint) const;
};

struct BvhDocument {
  Skeleton skeleton;
  Matrix frames;  // T x total_channels, document order; rotations in degrees
  double frame_time = 0.0;

  double fps() const { return 1.0 / frame_time; }
};

// Parses HIERARCHY + MOTION. Throws MalformedBVH on structural problems and
// UnsupportedChannels on channel names outside the six position/rotation
// kinds. Content after the last declared frame is ignored, which is where
// our writer places the provenance comment.
BvhDocument parse_bvh(const std::string& text);

BvhDocument parse_bvh_file(const std::string& path);

// Serializes a document; `trailer` (if nonempty) is written as one line
// after the frame data.
std::string write_bvh(const BvhDocument& doc, const std::string& trailer = "");

void write_bvh_file(const std::string& path, const BvhDocument& doc,
                    const std::string& trailer = "");

}  // namespace ggen::motion
