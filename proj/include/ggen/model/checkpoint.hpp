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
// Checkpoint container: everything needed to rebuild the model and resume
// training bit-exactly — both configs, the schedule endpoints, the frozen
// extractor kind, the feature scaler document, every weight, the optimizer
// moments, and the training draw stream. Layout: magic line, JSON header
// (length-prefixed), then raw little-endian doubles in registration order.

#pragma once

#include "ggen/cond/extractor.hpp"
#include "ggen/model/backbone.hpp"
#include "ggen/nn/layers.hpp"

#include <string>

namespace ggen::model {

struct CheckpointHeader {
  std::string config_digest;  // run configuration stamp; artifacts must agree
  BackboneConfig backbone;
  cond::ConditionConfig condition;
  double beta_start = 0.0, beta_end = 0.0;
  std::string extractor_kind;  // "stub" or "pretrained"
  std::string scaler_json;     // embedded feature-scaler document
  int64_t step_count = 0;
  std::string rng_state;       // trainer draw stream
  bool has_optimizer = false;
};

// Writes header + weights (+ optimizer moments when opt != nullptr).
void write_checkpoint(const std::string& path, const CheckpointHeader& header,
                      const nn::ParamRefs& params, const nn::AdamOptimizer* opt);

// Header only; used to rebuild the model before loading weights.
// Throws CheckpointMissing when the file does not exist.
CheckpointHeader read_checkpoint_header(const std::string& path);

// Fills `params` (which must match the stored names/shapes) and, when
// opt != nullptr and moments were stored, restores the optimizer.
void read_checkpoint_state(const std::string& path, const nn::ParamRefs& params,
                           nn::AdamOptimizer* opt);

}  // namespace ggen::model
