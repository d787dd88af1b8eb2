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

#include "doctest.h"
#include "fixtures.hpp"

#include "ggen/data/pairing.hpp"
#include "ggen/motion/bvh.hpp"
#include "ggen/motion/features.hpp"
#include "ggen/motion/scaler.hpp"

#include <cmath>
#include <string>

using namespace ggen;
using namespace ggen::motion;

namespace {

// Hand-written document whose expected channel matrix was typed out, not
// computed; exercises nesting, end sites, and mixed channel counts.
const char* kGoldenBvh = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Spine
  {
    OFFSET 0 10 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    JOINT Head
    {
      OFFSET 0 15 0
      CHANNELS 3 Zrotation Xrotation Yrotation
      End Site
      {
        OFFSET 0 5 0
      }
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.05
1.5 92 -3 10 -20 30 5 6 7 -1 -2 -3
2.5 92.5 -3.2 11 -21 31 5.5 6.5 7.5 -1.5 -2.5 -3.5
)";

}  // namespace

TEST_CASE("golden bvh parses to the exact channel matrix") {
  const BvhDocument doc = parse_bvh(kGoldenBvh);
  REQUIRE(doc.skeleton.joints.size() == 3);
  CHECK(doc.skeleton.joints[0].name == "Hips");
  CHECK(doc.skeleton.joints[0].parent == -1);
  CHECK(doc.skeleton.joints[1].name == "Spine");
  CHECK(doc.skeleton.joints[1].parent == 0);
  CHECK(doc.skeleton.joints[2].parent == 1);
  CHECK(doc.skeleton.joints[1].offset == Eigen::Vector3d(0, 10, 0));
  REQUIRE(doc.skeleton.joints[2].end_offset.has_value());
  CHECK(*doc.skeleton.joints[2].end_offset == Eigen::Vector3d(0, 5, 0));
  CHECK(doc.skeleton.total_channels() == 12);
  CHECK(doc.skeleton.rotation_order(0) == "ZXY");
  CHECK(doc.frame_time == 0.05);

  REQUIRE(doc.frames.rows() == 2);
  const double want0[] = {1.5, 92, -3, 10, -20, 30, 5, 6, 7, -1, -2, -3};
  const double want1[] = {2.5, 92.5, -3.2, 11, -21, 31, 5.5, 6.5, 7.5, -1.5, -2.5, -3.5};
  for (int c = 0; c < 12; ++c) {
    CHECK(doc.frames(0, c) == want0[c]);
    CHECK(doc.frames(1, c) == want1[c]);
  }
}

TEST_CASE("single joint bvh with zero rotations parses to zeros") {
  const std::string text =
      "HIERARCHY\nROOT Node\n{\n OFFSET 0 0 0\n CHANNELS 3 Xrotation Yrotation "
      "Zrotation\n}\nMOTION\nFrames: 2\nFrame Time: 0.05\n0 0 0\n0 0 0\n";
  const BvhDocument doc = parse_bvh(text);
  CHECK(doc.skeleton.joints.size() == 1);
  CHECK(doc.frames.rows() == 2);
  CHECK(doc.frames.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("malformed bvh documents raise typed errors") {
  CHECK_THROWS_AS(parse_bvh("HIERARCHY\nROOT A\n{\n OFFSET 0 0 0\n CHANNELS 3 "
                            "Xrotation Yrotation Zrotation\n}\n"),
                  MalformedBVH);  // no MOTION section
  CHECK_THROWS_AS(parse_bvh("not a bvh at all"), MalformedBVH);
  CHECK_THROWS_AS(parse_bvh("HIERARCHY\nROOT A\n{\n OFFSET 0 0 0\n CHANNELS 3 "
                            "Xrotation Yrotation Wrotation\n}\nMOTION\nFrames: 0\n"
                            "Frame Time: 0.05\n"),
                  UnsupportedChannels);
}

TEST_CASE("bvh writer output reparses to identical structure") {
  const BvhDocument doc = test::synthetic_bvh(40, 20.0);
  const std::string text = write_bvh(doc, "# provenance: deadbeef");
  const BvhDocument back = parse_bvh(text);

  REQUIRE(back.skeleton.joints.size() == doc.skeleton.joints.size());
  for (size_t j = 0; j < doc.skeleton.joints.size(); ++j) {
    CHECK(back.skeleton.joints[j].name == doc.skeleton.joints[j].name);
    CHECK(back.skeleton.joints[j].parent == doc.skeleton.joints[j].parent);
    CHECK(back.skeleton.joints[j].channels == doc.skeleton.joints[j].channels);
  }
  CHECK(back.frame_time == doctest::Approx(doc.frame_time));
  REQUIRE(back.frames.rows() == doc.frames.rows());
  CHECK((back.frames - doc.frames).cwiseAbs().maxCoeff() < 5e-7);  // %.6f text
}

TEST_CASE("root motion velocities match hand-derived cases") {
  // Stationary root: all velocities zero.
  Matrix pos = Matrix::Zero(5, 3);
  Matrix rot = Matrix::Zero(5, 3);
  RootMotion rm = extract_root_motion(pos, rot);
  CHECK(rm.linear.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rm.angular.cwiseAbs().maxCoeff() == 0.0);

  // +10 cm/frame along world X with identity heading.
  for (Eigen::Index t = 0; t < 5; ++t) pos(t, 0) = 10.0 * static_cast<double>(t);
  rm = extract_root_motion(pos, rot);
  for (Eigen::Index t = 0; t < 5; ++t) {
    CHECK(rm.linear(t, 0) == doctest::Approx(10.0));
    CHECK(rm.linear(t, 1) == 0.0);
    CHECK(rm.linear(t, 2) == 0.0);
  }

  // Constant 5 degrees/frame yaw, no translation.
  const double step = 5.0 * M_PI / 180.0;
  pos.setZero();
  for (Eigen::Index t = 0; t < 5; ++t) rot.row(t) = Eigen::RowVector3d(0, step * static_cast<double>(t), 0);
  rm = extract_root_motion(pos, rot);
  CHECK(rm.linear.cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index t = 0; t < 5; ++t) {
    CHECK(rm.angular.row(t).norm() == doctest::Approx(step));
    CHECK(rm.angular(t, 1) == doctest::Approx(step));
  }

  // Velocity is reported in the heading frame: moving along world X while
  // facing 90 degrees left means moving along the body's local axis.
  pos.setZero();
  for (Eigen::Index t = 0; t < 5; ++t) {
    pos(t, 0) = 7.0 * static_cast<double>(t);
    rot.row(t) = Eigen::RowVector3d(0, M_PI / 2, 0);
  }
  rm = extract_root_motion(pos, rot);
  // Heading sends +Z to +X, so a world +X step is a body +Z step.
  CHECK(rm.linear(2, 2) == doctest::Approx(7.0));
  CHECK(std::abs(rm.linear(2, 0)) < 1e-12);

  CHECK_THROWS_AS(extract_root_motion(Matrix::Zero(1, 3), Matrix::Zero(1, 3)), TooShort);
}

TEST_CASE("clip features round-trip through bvh text") {
  const BvhDocument doc = test::synthetic_bvh(80, 20.0);
  const MotionClip clip = clip_from_bvh(doc);
  CHECK(clip.fps == doctest::Approx(20.0));
  CHECK(clip.dims() == 3 * 3 + 6);
  CHECK(clip.frames() == 80);
  // Expmaps stay under the wrap boundary for this gentle motion.
  for (Eigen::Index s = 0; s < 3; ++s)
    for (Eigen::Index t = 0; t < clip.frames(); ++t)
      CHECK(clip.features.row(t).segment<3>(3 * s).norm() < M_PI);

  const BvhDocument out = bvh_from_clip(clip, doc.skeleton);
  const std::string text = write_bvh(out);
  const MotionClip back = clip_from_bvh(parse_bvh(text));

  REQUIRE(back.features.rows() == clip.features.rows());
  REQUIRE(back.features.cols() == clip.features.cols());
  CHECK((back.features - clip.features).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("all-zero features reconstruct the rest pose at the origin") {
  const Skeleton skel = test::three_joint_skeleton();
  MotionClip clip;
  clip.fps = 20.0;
  clip.features = Matrix::Zero(6, 15);
  const BvhDocument doc = bvh_from_clip(clip, skel);
  CHECK(doc.frames.cwiseAbs().maxCoeff() == 0.0);

  // Constant +X linear velocity of 1 cm/frame integrates to x = t.
  clip.features.col(9).setConstant(1.0);
  const BvhDocument moving = bvh_from_clip(clip, skel);
  for (Eigen::Index t = 0; t < 6; ++t) {
    CHECK(moving.frames(t, 0) == doctest::Approx(static_cast<double>(t)));
    CHECK(moving.frames(t, 1) == 0.0);
    CHECK(moving.frames(t, 2) == 0.0);
  }
}

TEST_CASE("resampling 60 to 20 fps keeps pose and displacement") {
  const BvhDocument doc = test::synthetic_bvh(61, 60.0);
  const MotionClip src = clip_from_bvh(doc);
  const MotionClip dst = resample_motion(src, 20.0);
  CHECK(dst.fps == 20.0);
  CHECK(dst.frames() == 20);  // floor(61 * 20/60)

  // Output frame k corresponds to source frame 3k exactly; joint rotations
  // land on the knots.
  for (Eigen::Index k = 0; k < dst.frames(); ++k)
    for (Eigen::Index s = 0; s < 3; ++s) {
      const Vec3 a = dst.features.row(k).segment<3>(3 * s).transpose();
      const Vec3 b = src.features.row(3 * k).segment<3>(3 * s).transpose();
      CHECK((expmap_to_matrix(a) - expmap_to_matrix(b)).cwiseAbs().maxCoeff() < 1e-9);
    }

  // World root displacement over the common span survives: integrate both
  // clips through the writer and compare endpoints.
  const BvhDocument w_src = bvh_from_clip(src, doc.skeleton);
  const BvhDocument w_dst = bvh_from_clip(dst, doc.skeleton);
  const Eigen::Vector3d p_src = w_src.frames.row(57).head<3>().transpose();  // frame 19*3
  const Eigen::Vector3d p_dst = w_dst.frames.row(19).head<3>().transpose();
  CHECK((p_src - p_dst).norm() < 1.0);

  // A non-integral ratio stays within the same displacement budget.
  const BvhDocument doc25 = test::synthetic_bvh(50, 25.0);
  const MotionClip src25 = clip_from_bvh(doc25);
  const MotionClip dst25 = resample_motion(src25, 20.0);
  CHECK(dst25.frames() == 40);
  const BvhDocument w25s = bvh_from_clip(src25, doc25.skeleton);
  const BvhDocument w25d = bvh_from_clip(dst25, doc25.skeleton);
  // t = 39/20 s = 1.95 s = source frame 48.75: bracket with both knots.
  const Eigen::Vector3d lo = w25s.frames.row(48).head<3>().transpose();
  const Eigen::Vector3d hi = w25s.frames.row(49).head<3>().transpose();
  const Eigen::Vector3d got = w25d.frames.row(39).head<3>().transpose();
  CHECK((got - (0.25 * lo + 0.75 * hi)).norm() < 1.0);

  // Identity and rejection cases.
  const MotionClip same = resample_motion(src, 60.0);
  CHECK((same.features - src.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(resample_motion(src, 120.0), UpsampleNotSupported);

  // Constant pose stays constant through resampling.
  BvhDocument still = test::synthetic_bvh(30, 60.0);
  for (Eigen::Index t = 1; t < 30; ++t) still.frames.row(t) = still.frames.row(0);
  const MotionClip still20 = resample_motion(clip_from_bvh(still), 20.0);
  for (Eigen::Index k = 1; k < still20.frames(); ++k)
    CHECK((still20.features.row(k) - still20.features.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scaler matches hand-computed statistics and round-trips") {
  MotionClip a, b;
  a.fps = b.fps = 20.0;
  a.features = Matrix::Constant(4, 15, 1.0);
  b.features = Matrix::Constant(4, 15, 3.0);

  const FeatureScaler s = fit_scaler({a, b});
  for (Eigen::Index c = 0; c < 15; ++c) {
    CHECK(s.mean[c] == doctest::Approx(2.0));
    CHECK(s.std[c] == doctest::Approx(1.0));  // population statistics
  }

  // Degenerate corpus: identical clips floor the std and map to zero.
  const FeatureScaler flat = fit_scaler({a, a});
  CHECK(flat.std.minCoeff() == FeatureScaler::kMinStd);
  CHECK(flat.apply(a.features).cwiseAbs().maxCoeff() == 0.0);

  // invert(apply(x)) = x.
  const Matrix x = a.features * 1.7 + Matrix::Constant(4, 15, 0.3);
  CHECK((s.invert(s.apply(x)) - x).cwiseAbs().maxCoeff() < 1e-6);

  // Applying over the fitted corpus yields zero mean, unit variance.
  const Matrix both = (Matrix(8, 15) << s.apply(a.features), s.apply(b.features)).finished();
  for (Eigen::Index c = 0; c < 15; ++c) {
    CHECK(std::abs(both.col(c).mean()) < 1e-6);
    const double var = (both.col(c).array() - both.col(c).mean()).square().mean();
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
  }

  CHECK_THROWS_AS(fit_scaler({a}), InsufficientData);

  // Persistence round-trip.
  const std::string path = "/tmp/ggen_test_scaler.json";
  s.save(path);
  const FeatureScaler loaded = FeatureScaler::load(path);
  CHECK((loaded.mean - s.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.std - s.std).cwiseAbs().maxCoeff() == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("pairing validates counts and durations") {
  audio::Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(16000 * 4, 0.0);  // 4 s

  MotionClip m;
  m.fps = 20.0;
  m.features = Matrix::Zero(80, 15);  // 4 s

  auto pairs = data::pair_clips({w, w, w}, {m, m, m}, "demo");
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].clip_id == "demo_0");

  CHECK_THROWS_AS(data::pair_clips({w, w, w}, {m, m}), CountMismatch);

  // 20 s of audio against 350 frames (17.5 s at 20 fps).
  audio::Waveform w20;
  w20.sample_rate = 16000;
  w20.samples.assign(16000 * 20, 0.0);
  MotionClip m350;
  m350.fps = 20.0;
  m350.features = Matrix::Zero(350, 15);
  CHECK_THROWS_AS(data::pair_clips({w20}, {m350}), DurationMismatch);

  // One frame of slack is tolerated.
  MotionClip m399;
  m399.fps = 20.0;
  m399.features = Matrix::Zero(399, 15);
  CHECK_NOTHROW(data::pair_clips({w20}, {m399}));
}
