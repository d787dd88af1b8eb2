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

#include "ggen/motion/rotation.hpp"

#include <cmath>

namespace ggen::motion {

namespace {

int axis_index(char c) {
  switch (c) {
    case 'X': return 0;
    case 'Y': return 1;
    case 'Z': return 2;
    default: throw Error(std::string("rotation: bad axis '") + c + "'");
  }
}

bool even_permutation(int i, int j, int k) {
  return (i == 0 && j == 1 && k == 2) || (i == 1 && j == 2 && k == 0) ||
         (i == 2 && j == 0 && k == 1);
}

}  // namespace

Mat3 axis_rotation(int axis, double radians) {
  return Mat3(Eigen::AngleAxisd(radians, Vec3::Unit(axis)));
}

Mat3 euler_to_matrix(const Vec3& radians, const std::string& order) {
  require(order.size() == 3, "rotation: order must have 3 axes");
  Mat3 r = Mat3::Identity();
  for (int n = 0; n < 3; ++n) r = r * axis_rotation(axis_index(order[static_cast<size_t>(n)]), radians[n]);
  return r;
}

Vec3 matrix_to_euler(const Mat3& r, const std::string& order) {
  require(order.size() == 3, "rotation: order must have 3 axes");
  const int i = axis_index(order[0]);
  const int j = axis_index(order[1]);
  const int k = axis_index(order[2]);
  require(i != j && j != k && i != k, "rotation: axes must be distinct");

  // Tait-Bryan extraction; sign pattern depends on the axis permutation's
  // parity. Derivation mirrors the explicit XYZ / ZYX matrix products.
  const double sign = even_permutation(i, j, k) ? 1.0 : -1.0;
  const double s = sign * r(i, k);
  Vec3 out;
  if (std::abs(s) > 1.0 - 1e-12) {
    // Middle angle at +-pi/2: first and last axes align, split arbitrary.
    out[1] = std::copysign(M_PI / 2.0, s);
    out[0] = std::atan2(sign * r(k, j), r(j, j));
    out[2] = 0.0;
    return out;
  }
  out[1] = std::asin(s);
  out[0] = std::atan2(-sign * r(j, k), r(k, k));
  out[2] = std::atan2(-sign * r(i, j), r(i, i));
  return out;
}

Vec3 matrix_to_expmap(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);  // angle in [0, pi]
  return aa.angle() * aa.axis();
}

Mat3 expmap_to_matrix(const Vec3& e) {
  const double angle = e.norm();
  if (angle < 1e-14) return Mat3::Identity();
  return Mat3(Eigen::AngleAxisd(angle, e / angle));
}

Vec3 euler_to_expmap(const Vec3& radians, const std::string& order) {
  return matrix_to_expmap(euler_to_matrix(radians, order));
}

Vec3 rewrap_expmap_near(const Vec3& e, const Vec3& prev) {
  const double angle = e.norm();
  if (angle < 1e-14) {
    // Identity rotation: any axis works, so aim straight at prev's multiple
    // of 2*pi.
    const double pn = prev.norm();
    if (pn < M_PI) return Vec3::Zero();
    const double k = std::round(pn / (2.0 * M_PI));
    return prev * (2.0 * M_PI * k / pn);
  }
  const Vec3 axis = e / angle;
  Vec3 best = e;
  double best_d = (e - prev).squaredNorm();
  for (int k = -2; k <= 2; ++k) {
    if (k == 0) continue;
    const Vec3 cand = axis * (angle + 2.0 * M_PI * k);
    const double d = (cand - prev).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = cand;
    }
  }
  return best;
}

double heading_yaw(const Mat3& r, double fallback) {
  const Vec3 f = r * Vec3::UnitZ();
  if (std::hypot(f.x(), f.z()) < 1e-9) return fallback;
  return std::atan2(f.x(), f.z());
}

Mat3 heading_rotation(const Mat3& r, double fallback_yaw) {
  return axis_rotation(1, heading_yaw(r, fallback_yaw));
}

Mat3 remove_heading(const Mat3& r, double fallback_yaw) {
  return heading_rotation(r, fallback_yaw).transpose() * r;
}

Mat3 slerp(const Mat3& a, const Mat3& b, double p) {
  const Eigen::Quaterniond qa(a), qb(b);
  return qa.slerp(p, qb).toRotationMatrix();
}

double wrap_angle(double radians) {
  double w = std::fmod(radians, 2.0 * M_PI);
  if (w > M_PI) w -= 2.0 * M_PI;
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

}  // namespace ggen::motion
