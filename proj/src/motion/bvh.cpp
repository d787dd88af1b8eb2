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

#include "ggen/motion/bvh.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace ggen::motion {

namespace {

const char* kChannelNames[] = {"Xposition", "Yposition", "Zposition",
                               "Xrotation", "Yrotation", "Zrotation"};

bool known_channel(const std::string& c) {
  return std::find(std::begin(kChannelNames), std::end(kChannelNames), c) !=
         std::end(kChannelNames);
}

// Whitespace tokenizer with one-token lookahead.
class Tokens {
 public:
  explicit Tokens(const std::string& text) : in_(text) {}

  std::string next() {
    std::string t;
    if (!(in_ >> t)) throw MalformedBVH("bvh: unexpected end of document");
    return t;
  }

  std::string expect(const std::string& want) {
    const std::string t = next();
    if (t != want) throw MalformedBVH("bvh: expected '" + want + "', got '" + t + "'");
    return t;
  }

  double number() {
    const std::string t = next();
    try {
      size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw MalformedBVH("bvh: expected a number, got '" + t + "'");
    }
  }

  bool peek_is(const std::string& want) {
    std::streampos pos = in_.tellg();
    std::string t;
    if (!(in_ >> t)) return false;
    in_.clear();
    in_.seekg(pos);
    return t == want;
  }

 private:
  std::istringstream in_;
};

void parse_joint(Tokens& tok, Skeleton& skel, int parent) {
  const int index = static_cast<int>(skel.joints.size());
  skel.joints.emplace_back();
  // References into skel.joints are invalidated by recursion; index instead.
  skel.joints[static_cast<size_t>(index)].name = tok.next();
  skel.joints[static_cast<size_t>(index)].parent = parent;

  tok.expect("{");
  tok.expect("OFFSET");
  for (int i = 0; i < 3; ++i) skel.joints[static_cast<size_t>(index)].offset[i] = tok.number();
  tok.expect("CHANNELS");
  const int n = static_cast<int>(tok.number());
  for (int i = 0; i < n; ++i) {
    const std::string c = tok.next();
    if (!known_channel(c)) throw UnsupportedChannels("bvh: unknown channel '" + c + "'");
    skel.joints[static_cast<size_t>(index)].channels.push_back(c);
  }

  while (true) {
    const std::string t = tok.next();
    if (t == "}") break;
    if (t == "JOINT") {
      parse_joint(tok, skel, index);
    } else if (t == "End") {
      tok.expect("Site");
      tok.expect("{");
      tok.expect("OFFSET");
      Eigen::Vector3d off;
      for (int i = 0; i < 3; ++i) off[i] = tok.number();
      skel.joints[static_cast<size_t>(index)].end_offset = off;
      tok.expect("}");
    } else {
      throw MalformedBVH("bvh: unexpected token '" + t + "' in joint block");
    }
  }
}

}  // namespace

int Skeleton::joint_index(const std::string& name) const {
  for (size_t i = 0; i < joints.size(); ++i)
    if (joints[i].name == name) return static_cast<int>(i);
  return -1;
}

Eigen::Index Skeleton::total_channels() const {
  Eigen::Index n = 0;
  for (const auto& j : joints) n += static_cast<Eigen::Index>(j.channels.size());
  return n;
}

std::string Skeleton::rotation_order(int joint) const {
  std::string order;
  for (const auto& c : joints[static_cast<size_t>(joint)].channels)
    if (c.size() == 9 && c.substr(1) == "rotation") order.push_back(c[0]);
  return order;
}

BvhDocument parse_bvh(const std::string& text) {
  Tokens tok(text);
  BvhDocument doc;

  tok.expect("HIERARCHY");
  tok.expect("ROOT");
  parse_joint(tok, doc.skeleton, -1);
  if (tok.peek_is("ROOT")) throw MalformedBVH("bvh: multiple ROOT joints");

  tok.expect("MOTION");
  tok.expect("Frames:");
  const auto frames = static_cast<Eigen::Index>(tok.number());
  tok.expect("Frame");
  tok.expect("Time:");
  doc.frame_time = tok.number();
  if (frames < 0 || doc.frame_time <= 0.0)
    throw MalformedBVH("bvh: bad frame count or frame time");

  const Eigen::Index cols = doc.skeleton.total_channels();
  doc.frames.resize(frames, cols);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index c = 0; c < cols; ++c) doc.frames(t, c) = tok.number();
  return doc;
}

BvhDocument parse_bvh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UnreadableFile("bvh: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bvh(ss.str());
}

std::string write_bvh(const BvhDocument& doc, const std::string& trailer) {
  std::ostringstream out;
  out << "HIERARCHY\n";

  const auto& joints = doc.skeleton.joints;
  // children[i] lists joints whose parent is i, in document order.
  std::vector<std::vector<int>> children(joints.size());
  for (size_t i = 0; i < joints.size(); ++i)
    if (joints[i].parent >= 0) children[static_cast<size_t>(joints[i].parent)].push_back(static_cast<int>(i));

  auto indent = [&](int depth) { return std::string(static_cast<size_t>(depth * 2), ' '); };

  std::function<void(int, int)> emit = [&](int idx, int depth) {
    const auto& j = joints[static_cast<size_t>(idx)];
    out << indent(depth) << (j.parent < 0 ? "ROOT " : "JOINT ") << j.name << "\n";
    out << indent(depth) << "{\n";
    out << indent(depth + 1) << "OFFSET " << j.offset.x() << " " << j.offset.y() << " "
        << j.offset.z() << "\n";
    out << indent(depth + 1) << "CHANNELS " << j.channels.size();
    for (const auto& c : j.channels) out << " " << c;
    out << "\n";
    for (int child : children[static_cast<size_t>(idx)]) emit(child, depth + 1);
    if (j.end_offset) {
      out << indent(depth + 1) << "End Site\n";
      out << indent(depth + 1) << "{\n";
      out << indent(depth + 2) << "OFFSET " << j.end_offset->x() << " " << j.end_offset->y()
          << " " << j.end_offset->z() << "\n";
      out << indent(depth + 1) << "}\n";
    }
    out << indent(depth) << "}\n";
  };
  out.precision(8);
  emit(0, 0);

  out << "MOTION\n";
  out << "Frames: " << doc.frames.rows() << "\n";
  out << "Frame Time: " << doc.frame_time << "\n";
  out.setf(std::ios::fixed);
  out.precision(6);
  for (Eigen::Index t = 0; t < doc.frames.rows(); ++t) {
    for (Eigen::Index c = 0; c < doc.frames.cols(); ++c) {
      if (c) out << " ";
      out << doc.frames(t, c);
    }
    out << "\n";
  }
  if (!trailer.empty()) out << trailer << "\n";
  return out.str();
}

void write_bvh_file(const std::string& path, const BvhDocument& doc,
                    const std::string& trailer) {
  std::ofstream out(path);
  if (!out) throw UnreadableFile("bvh: cannot write " + path);
  out << write_bvh(doc, trailer);
}

}  // namespace ggen::motion
