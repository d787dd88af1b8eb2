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

#include "ggen/motion/features.hpp"

#include <cmath>

namespace ggen::motion {

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;

// Column index of each joint's first channel in the document layout.
std::vector<Eigen::Index> channel_starts(const Skeleton& skel) {
  std::vector<Eigen::Index> starts(skel.joints.size());
  Eigen::Index cursor = 0;
  for (size_t j = 0; j < skel.joints.size(); ++j) {
    starts[j] = cursor;
    cursor += static_cast<Eigen::Index>(skel.joints[j].channels.size());
  }
  return starts;
}

// Rotation of one joint at one frame from its Euler channels (degrees).
Mat3 joint_rotation(const BvhDocument& doc, const std::vector<Eigen::Index>& starts,
                    int joint, Eigen::Index frame) {
  const auto& chans = doc.skeleton.joints[static_cast<size_t>(joint)].channels;
  Mat3 r = Mat3::Identity();
  for (size_t c = 0; c < chans.size(); ++c) {
    if (chans[c].substr(1) != "rotation") continue;
    const int axis = chans[c][0] == 'X' ? 0 : (chans[c][0] == 'Y' ? 1 : 2);
    const double deg = doc.frames(frame, starts[static_cast<size_t>(joint)] +
                                             static_cast<Eigen::Index>(c));
    r = r * axis_rotation(axis, deg * kDegToRad);
  }
  return r;
}

Eigen::Vector3d joint_position(const BvhDocument& doc, const std::vector<Eigen::Index>& starts,
                               int joint, Eigen::Index frame) {
  const auto& chans = doc.skeleton.joints[static_cast<size_t>(joint)].channels;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (size_t c = 0; c < chans.size(); ++c) {
    if (chans[c].substr(1) != "position") continue;
    const int axis = chans[c][0] == 'X' ? 0 : (chans[c][0] == 'Y' ? 1 : 2);
    p[axis] = doc.frames(frame, starts[static_cast<size_t>(joint)] +
                                    static_cast<Eigen::Index>(c));
  }
  return p;
}

struct RootTrajectory {
  std::vector<double> yaw;          // accumulated, continuous
  std::vector<Eigen::Vector3d> pos;
};

// Rebuilds the world root trajectory a clip's velocity features describe,
// starting at the origin with identity heading.
RootTrajectory integrate_root(const MotionClip& clip) {
  const Eigen::Index t_len = clip.frames();
  const Eigen::Index d = clip.dims() - 6;
  RootTrajectory traj;
  traj.yaw.assign(static_cast<size_t>(t_len), 0.0);
  traj.pos.assign(static_cast<size_t>(t_len), Eigen::Vector3d::Zero());
  for (Eigen::Index t = 1; t < t_len; ++t) {
    const double prev_yaw = traj.yaw[static_cast<size_t>(t - 1)];
    const Mat3 h_prev = axis_rotation(1, prev_yaw);
    const Eigen::Vector3d v = clip.features.row(t).segment<3>(d).transpose();
    traj.pos[static_cast<size_t>(t)] = traj.pos[static_cast<size_t>(t - 1)] + h_prev * v;
    traj.yaw[static_cast<size_t>(t)] = prev_yaw + clip.features(t, d + 4);
  }
  return traj;
}

}  // namespace

RootMotion extract_root_motion(const Matrix& positions, const Matrix& rotations_expmap) {
  const Eigen::Index t_len = positions.rows();
  if (t_len < 2) throw TooShort("root motion needs at least 2 frames");
  require(positions.cols() == 3 && rotations_expmap.cols() == 3 &&
              rotations_expmap.rows() == t_len,
          "extract_root_motion: T x 3 inputs required");

  std::vector<double> yaw(static_cast<size_t>(t_len));
  double prev = 0.0;
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Mat3 r = expmap_to_matrix(rotations_expmap.row(t).transpose());
    prev = heading_yaw(r, prev);
    yaw[static_cast<size_t>(t)] = prev;
  }

  RootMotion rm;
  rm.linear.resize(t_len, 3);
  rm.angular.resize(t_len, 3);
  for (Eigen::Index t = 1; t < t_len; ++t) {
    const Mat3 h_prev = axis_rotation(1, yaw[static_cast<size_t>(t - 1)]);
    const Eigen::Vector3d dp =
        (positions.row(t) - positions.row(t - 1)).transpose();
    rm.linear.row(t) = (h_prev.transpose() * dp).transpose();
    rm.angular.row(t) = Eigen::RowVector3d(
        0.0, wrap_angle(yaw[static_cast<size_t>(t)] - yaw[static_cast<size_t>(t - 1)]), 0.0);
  }
  rm.linear.row(0) = rm.linear.row(1);
  rm.angular.row(0) = rm.angular.row(1);
  return rm;
}

std::vector<int> select_joints(const Skeleton& skel, const std::vector<std::string>& names) {
  std::vector<int> selected;
  if (names.empty()) {
    for (size_t j = 0; j < skel.joints.size(); ++j)
      if (!skel.rotation_order(static_cast<int>(j)).empty())
        selected.push_back(static_cast<int>(j));
  } else {
    selected.push_back(0);  // root always leads
    for (const auto& name : names) {
      const int idx = skel.joint_index(name);
      if (idx < 0) throw LayoutMismatch("unknown joint in selection: " + name);
      if (idx != 0) selected.push_back(idx);
    }
  }
  require(!selected.empty() && selected.front() == 0, "selection must start at the root");
  for (int j : selected)
    if (skel.rotation_order(j).size() != 3)
      throw UnsupportedChannels("joint '" + skel.joints[static_cast<size_t>(j)].name +
                                "' lacks a full rotation triplet");
  return selected;
}

MotionClip clip_from_bvh(const BvhDocument& doc, const std::vector<std::string>& selection) {
  const auto starts = channel_starts(doc.skeleton);
  const auto joints = select_joints(doc.skeleton, selection);
  const Eigen::Index t_len = doc.frames.rows();
  if (t_len < 2) throw TooShort("clip needs at least 2 frames");
  const auto s_count = static_cast<Eigen::Index>(joints.size());

  MotionClip clip;
  clip.fps = doc.fps();
  clip.features.resize(t_len, 3 * s_count + 6);

  Matrix root_positions(t_len, 3);
  Matrix root_expmap(t_len, 3);
  double prev_yaw = 0.0;
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      const int j = joints[static_cast<size_t>(s)];
      Mat3 r = joint_rotation(doc, starts, j, t);
      if (j == 0) {
        root_positions.row(t) = joint_position(doc, starts, 0, t).transpose();
        root_expmap.row(t) = matrix_to_expmap(r).transpose();
        prev_yaw = heading_yaw(r, prev_yaw);
        r = axis_rotation(1, prev_yaw).transpose() * r;  // keep the tilt only
      }
      Vec3 e = matrix_to_expmap(r);
      if (t > 0)
        e = rewrap_expmap_near(e, clip.features.row(t - 1).segment<3>(3 * s).transpose());
      clip.features.row(t).segment<3>(3 * s) = e.transpose();
    }
  }

  const RootMotion rm = extract_root_motion(root_positions, root_expmap);
  clip.features.middleCols(3 * s_count, 3) = rm.linear;
  clip.features.middleCols(3 * s_count + 3, 3) = rm.angular;
  return clip;
}

BvhDocument bvh_from_clip(const MotionClip& clip, const Skeleton& skel,
                          const std::vector<std::string>& selection) {
  const auto joints = select_joints(skel, selection);
  if (clip.dims() != static_cast<Eigen::Index>(joints.size()) * 3 + 6)
    throw LayoutMismatch("clip width " + std::to_string(clip.dims()) +
                         " does not match selection of " + std::to_string(joints.size()) +
                         " joints");
  const auto starts = channel_starts(skel);
  const Eigen::Index t_len = clip.frames();
  const RootTrajectory traj = integrate_root(clip);

  BvhDocument doc;
  doc.skeleton = skel;
  doc.frame_time = 1.0 / clip.fps;
  doc.frames = Matrix::Zero(t_len, skel.total_channels());

  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (size_t s = 0; s < joints.size(); ++s) {
      const int j = joints[s];
      Mat3 r = expmap_to_matrix(clip.features.row(t).segment<3>(3 * static_cast<Eigen::Index>(s)).transpose());
      if (j == 0) r = axis_rotation(1, traj.yaw[static_cast<size_t>(t)]) * r;
      const Vec3 euler = matrix_to_euler(r, skel.rotation_order(j));

      const auto& chans = skel.joints[static_cast<size_t>(j)].channels;
      int rot_cursor = 0;
      for (size_t c = 0; c < chans.size(); ++c) {
        const Eigen::Index col = starts[static_cast<size_t>(j)] + static_cast<Eigen::Index>(c);
        if (chans[c].substr(1) == "rotation") {
          doc.frames(t, col) = euler[rot_cursor++] * kRadToDeg;
        } else if (j == 0) {
          const int axis = chans[c][0] == 'X' ? 0 : (chans[c][0] == 'Y' ? 1 : 2);
          doc.frames(t, col) = traj.pos[static_cast<size_t>(t)][axis];
        }
      }
    }
  }
  return doc;
}

MotionClip resample_motion(const MotionClip& clip, double dst_fps) {
  const double src_fps = clip.fps;
  require(dst_fps > 0, "resample_motion: positive target fps");
  if (dst_fps > src_fps + 1e-9)
    throw UpsampleNotSupported("resample_motion: " + std::to_string(src_fps) + " -> " +
                               std::to_string(dst_fps) + " fps would upsample");
  if (std::abs(dst_fps - src_fps) < 1e-9) return clip;

  const Eigen::Index t_src = clip.frames();
  const auto t_dst = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(t_src) * dst_fps / src_fps));
  if (t_dst < 2) throw TooShort("resample_motion: output would have fewer than 2 frames");
  const Eigen::Index d = clip.dims() - 6;
  const double step = src_fps / dst_fps;  // source frames per output frame

  MotionClip out;
  out.fps = dst_fps;
  out.skeleton_ref = clip.skeleton_ref;
  out.features.resize(t_dst, clip.dims());

  // Joint rotations: spherical interpolation at each output time.
  for (Eigen::Index k = 0; k < t_dst; ++k) {
    const double tau = static_cast<double>(k) * step;
    const auto i0 = std::min(static_cast<Eigen::Index>(tau), t_src - 1);
    const auto i1 = std::min(i0 + 1, t_src - 1);
    const double frac = tau - static_cast<double>(i0);
    for (Eigen::Index s = 0; s * 3 < d; ++s) {
      const Mat3 a = expmap_to_matrix(clip.features.row(i0).segment<3>(3 * s).transpose());
      const Mat3 b = expmap_to_matrix(clip.features.row(i1).segment<3>(3 * s).transpose());
      Vec3 e = matrix_to_expmap(slerp(a, b, frac));
      if (k > 0) e = rewrap_expmap_near(e, out.features.row(k - 1).segment<3>(3 * s).transpose());
      out.features.row(k).segment<3>(3 * s) = e.transpose();
    }
  }

  // Root: interpolate the integrated trajectory, then differentiate at the
  // new rate. Accumulated yaw is continuous, so plain lerp is safe.
  const RootTrajectory traj = integrate_root(clip);
  std::vector<double> yaw(static_cast<size_t>(t_dst));
  std::vector<Eigen::Vector3d> pos(static_cast<size_t>(t_dst));
  for (Eigen::Index k = 0; k < t_dst; ++k) {
    const double tau = static_cast<double>(k) * step;
    const auto i0 = std::min(static_cast<Eigen::Index>(tau), t_src - 1);
    const auto i1 = std::min(i0 + 1, t_src - 1);
    const double frac = tau - static_cast<double>(i0);
    yaw[static_cast<size_t>(k)] = (1.0 - frac) * traj.yaw[static_cast<size_t>(i0)] +
                                  frac * traj.yaw[static_cast<size_t>(i1)];
    pos[static_cast<size_t>(k)] = (1.0 - frac) * traj.pos[static_cast<size_t>(i0)] +
                                  frac * traj.pos[static_cast<size_t>(i1)];
  }
  for (Eigen::Index k = 1; k < t_dst; ++k) {
    const Mat3 h_prev = axis_rotation(1, yaw[static_cast<size_t>(k - 1)]);
    const Eigen::Vector3d dp = pos[static_cast<size_t>(k)] - pos[static_cast<size_t>(k - 1)];
    out.features.row(k).segment<3>(d) = (h_prev.transpose() * dp).transpose();
    out.features.row(k).segment<3>(d + 3) =
        Eigen::RowVector3d(0.0, yaw[static_cast<size_t>(k)] - yaw[static_cast<size_t>(k - 1)], 0.0);
  }
  out.features.row(0).segment<3>(d) = out.features.row(1).segment<3>(d);
  out.features.row(0).segment<3>(d + 3) = out.features.row(1).segment<3>(d + 3);
  return out;
}

}  // namespace ggen::motion
