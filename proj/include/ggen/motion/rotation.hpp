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
// Rotation conversions used by the motion pipeline. Angles are radians
// everywhere; degrees exist only at the BVH text boundary. Euler orders are
// channel orders ("ZXY" = apply Z first), composing right-to-left onto
// column vectors: R = Rz * Rx * Ry.

#pragma once

#include "ggen/common.hpp"

#include <Eigen/Geometry>

#include <string>

namespace ggen::motion {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

Mat3 axis_rotation(int axis, double radians);  // axis: 0 = X, 1 = Y, 2 = Z

// order must be three distinct characters from {X, Y, Z}.
Mat3 euler_to_matrix(const Vec3& radians, const std::string& order);

// Inverse of euler_to_matrix for the same order; picks the gimbal-lock-safe
// branch when the middle angle saturates.
Vec3 matrix_to_euler(const Mat3& r, const std::string& order);

// Axis-angle 3-vector with |angle| <= pi.
Vec3 matrix_to_expmap(const Mat3& r);
Mat3 expmap_to_matrix(const Vec3& e);

Vec3 euler_to_expmap(const Vec3& radians, const std::string& order);

// Equivalent representative of `e` (angle shifted by multiples of 2*pi)
// closest to `prev`; keeps per-joint expmap tracks temporally smooth.
Vec3 rewrap_expmap_near(const Vec3& e, const Vec3& prev);

// Yaw of the rotation about +Y, measured from where `r` sends the world
// forward axis +Z; falls back to `fallback` when forward points straight up
// or down.
double heading_yaw(const Mat3& r, double fallback = 0.0);

// Decomposition r = yaw_rotation(+Y) * tilt, with tilt sending +Z into the
// x = 0 half-plane with nonnegative z.
Mat3 heading_rotation(const Mat3& r, double fallback_yaw = 0.0);
Mat3 remove_heading(const Mat3& r, double fallback_yaw = 0.0);

// Shortest-arc interpolation between two rotations, p in [0, 1].
Mat3 slerp(const Mat3& a, const Mat3& b, double p);

double wrap_angle(double radians);  // into (-pi, pi]

}  // namespace ggen::motion
