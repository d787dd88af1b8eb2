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

#include "ggen/motion/scaler.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace ggen::motion {

Matrix FeatureScaler::apply(const Matrix& x) const {
  require(x.cols() == mean.cols(), "scaler: channel count mismatch");
  return (x.rowwise() - mean).array().rowwise() / std.array();
}

Matrix FeatureScaler::invert(const Matrix& x) const {
  require(x.cols() == mean.cols(), "scaler: channel count mismatch");
  return (x.array().rowwise() * std.array()).matrix().rowwise() + mean;
}

std::string FeatureScaler::to_json() const {
  nlohmann::json j;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  j["std"] = std::vector<double>(std.data(), std.data() + std.size());
  j["joint_selection"] = joint_selection;
  j["dims"] = mean.size();
  j["fps"] = kTargetFps;
  j["velocity_units"] = "per-frame";
  return j.dump(2);
}

FeatureScaler FeatureScaler::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  FeatureScaler s;
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto d = j.at("std").get<std::vector<double>>();
  require(m.size() == d.size(), "scaler: mean/std length mismatch");
  s.mean = Eigen::Map<const RowVector>(m.data(), static_cast<Eigen::Index>(m.size()));
  s.std = Eigen::Map<const RowVector>(d.data(), static_cast<Eigen::Index>(d.size()));
  if (j.contains("joint_selection"))
    s.joint_selection = j.at("joint_selection").get<std::vector<std::string>>();
  return s;
}

void FeatureScaler::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UnreadableFile("scaler: cannot write " + path);
  out << to_json() << "\n";
}

FeatureScaler FeatureScaler::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnreadableFile("scaler: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

FeatureScaler fit_scaler(const std::vector<MotionClip>& clips,
                         const std::vector<std::string>& joint_selection) {
  if (clips.size() < 2) throw InsufficientData("scaler: need at least 2 clips to fit");
  const Eigen::Index dims = clips.front().dims();
  for (const auto& c : clips)
    require(c.dims() == dims, "scaler: clips disagree on channel count");

  Eigen::Index total = 0;
  RowVector sum = RowVector::Zero(dims);
  for (const auto& c : clips) {
    sum += c.features.colwise().sum();
    total += c.frames();
  }
  const RowVector mean = sum / static_cast<double>(total);

  RowVector sq = RowVector::Zero(dims);
  for (const auto& c : clips)
    sq += (c.features.rowwise() - mean).array().square().colwise().sum().matrix();
  RowVector std = (sq / static_cast<double>(total)).cwiseSqrt();

  for (Eigen::Index i = 0; i < dims; ++i)
    if (std[i] < FeatureScaler::kMinStd) {
      std::fprintf(stderr, "scaler: channel %ld has (near-)zero variance; flooring std\n",
                   static_cast<long>(i));
      std[i] = FeatureScaler::kMinStd;
    }

  FeatureScaler s;
  s.mean = mean;
  s.std = std;
  s.joint_selection = joint_selection;
  return s;
}

}  // namespace ggen::motion
