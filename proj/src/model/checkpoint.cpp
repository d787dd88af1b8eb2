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

#include "ggen/model/checkpoint.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>

namespace ggen::model {
namespace {

using nlohmann::json;

constexpr char kMagic[] = "GGCKPT1\n";
constexpr size_t kMagicLen = 8;

json backbone_to_json(const BackboneConfig& c) {
  return json{{"num_blocks", c.num_blocks},   {"num_heads", c.num_heads},
              {"d_model", c.d_model},         {"d_features", c.d_features},
              {"mode", to_string(c.mode)},    {"tisa_kernels", c.tisa_kernels},
              {"attention_window", c.attention_window}, {"causal", c.causal}};
}

BackboneConfig backbone_from_json(const json& j) {
  BackboneConfig c;
  c.num_blocks = j.at("num_blocks").get<Eigen::Index>();
  c.num_heads = j.at("num_heads").get<Eigen::Index>();
  c.d_model = j.at("d_model").get<Eigen::Index>();
  c.d_features = j.at("d_features").get<Eigen::Index>();
  c.mode = conditioning_mode_from_string(j.at("mode").get<std::string>());
  c.tisa_kernels = j.at("tisa_kernels").get<int>();
  c.attention_window = j.at("attention_window").get<int>();
  c.causal = j.at("causal").get<bool>();
  return c;
}

json condition_to_json(const cond::ConditionConfig& c) {
  return json{{"d_token", c.d_token},         {"d_cond", c.d_cond},
              {"num_steps", c.num_steps},     {"style", cond::to_string(c.style)},
              {"style_kernel", c.style_kernel}, {"num_styles", c.num_styles}};
}

cond::ConditionConfig condition_from_json(const json& j) {
  cond::ConditionConfig c;
  c.d_token = j.at("d_token").get<Eigen::Index>();
  c.d_cond = j.at("d_cond").get<Eigen::Index>();
  c.num_steps = j.at("num_steps").get<int64_t>();
  c.style = cond::style_mode_from_string(j.at("style").get<std::string>());
  c.style_kernel = j.at("style_kernel").get<int>();
  c.num_styles = j.at("num_styles").get<int>();
  return c;
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(static_cast<size_t>(m.size()) * sizeof(double)));
}

void read_matrix(std::ifstream& in, Matrix& m) {
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(static_cast<size_t>(m.size()) * sizeof(double)));
}

// Opens and validates magic + header; leaves the stream at the weight data.
json open_header(const std::string& path, std::ifstream& in) {
  if (!std::filesystem::exists(path)) {
    throw CheckpointMissing("no checkpoint at " + path);
  }
  in.open(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint: " + path);
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  require(in.good() && std::string(magic, kMagicLen) == kMagic,
          "bad checkpoint magic: " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  require(in.good() && len > 0, "bad checkpoint header length: " + path);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  require(in.good(), "checkpoint header truncated: " + path);
  return json::parse(text);
}

}  // namespace

void write_checkpoint(const std::string& path, const CheckpointHeader& header,
                      const nn::ParamRefs& params, const nn::AdamOptimizer* opt) {
  json params_meta = json::array();
  for (const nn::Parameter* p : params) {
    params_meta.push_back(json{{"name", p->name},
                               {"rows", p->value.rows()},
                               {"cols", p->value.cols()}});
  }
  json j{{"format_version", 1},
         {"config_digest", header.config_digest},
         {"backbone", backbone_to_json(header.backbone)},
         {"condition", condition_to_json(header.condition)},
         {"beta_start", header.beta_start},
         {"beta_end", header.beta_end},
         {"extractor_kind", header.extractor_kind},
         {"scaler_json", header.scaler_json},
         {"step_count", header.step_count},
         {"rng_state", header.rng_state},
         {"has_optimizer", opt != nullptr},
         {"adam_t", opt != nullptr ? opt->steps_taken() : 0},
         {"params", params_meta}};
  const std::string text = j.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write checkpoint: " + path);
  out.write(kMagic, kMagicLen);
  const uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(len));
  for (const nn::Parameter* p : params) write_matrix(out, p->value);
  if (opt != nullptr) {
    for (const Matrix& m : opt->moments_m()) write_matrix(out, m);
    for (const Matrix& v : opt->moments_v()) write_matrix(out, v);
  }
  require(out.good(), "short write to checkpoint: " + path);
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  std::ifstream in;
  const json j = open_header(path, in);
  CheckpointHeader h;
  h.config_digest = j.at("config_digest").get<std::string>();
  h.backbone = backbone_from_json(j.at("backbone"));
  h.condition = condition_from_json(j.at("condition"));
  h.beta_start = j.at("beta_start").get<double>();
  h.beta_end = j.at("beta_end").get<double>();
  h.extractor_kind = j.at("extractor_kind").get<std::string>();
  h.scaler_json = j.at("scaler_json").get<std::string>();
  h.step_count = j.at("step_count").get<int64_t>();
  h.rng_state = j.at("rng_state").get<std::string>();
  h.has_optimizer = j.at("has_optimizer").get<bool>();
  return h;
}

void read_checkpoint_state(const std::string& path, const nn::ParamRefs& params,
                           nn::AdamOptimizer* opt) {
  std::ifstream in;
  const json j = open_header(path, in);
  const json& meta = j.at("params");
  require(meta.size() == params.size(),
          "checkpoint stores " + std::to_string(meta.size()) + " tensors, model has " +
              std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& m = meta[i];
    require(m.at("name").get<std::string>() == params[i]->name,
            "checkpoint tensor order mismatch at " + params[i]->name);
    require(m.at("rows").get<Eigen::Index>() == params[i]->value.rows() &&
                m.at("cols").get<Eigen::Index>() == params[i]->value.cols(),
            "checkpoint tensor shape mismatch at " + params[i]->name);
  }
  for (nn::Parameter* p : params) read_matrix(in, p->value);
  require(in.good(), "checkpoint weights truncated: " + path);

  if (opt != nullptr) {
    require(j.at("has_optimizer").get<bool>(),
            "checkpoint has no optimizer state: " + path);
    std::vector<Matrix> m(params.size()), v(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m[i].resize(params[i]->value.rows(), params[i]->value.cols());
      read_matrix(in, m[i]);
    }
    for (size_t i = 0; i < params.size(); ++i) {
      v[i].resize(params[i]->value.rows(), params[i]->value.cols());
      read_matrix(in, v[i]);
    }
    require(in.good(), "checkpoint optimizer state truncated: " + path);
    opt->restore(j.at("adam_t").get<int64_t>(), std::move(m), std::move(v));
  }
}

}  // namespace ggen::model
