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
// The noise-prediction network: a kernel-3 gesture encoder, a stack of
// transformer blocks fused with the condition sequence, a conditioned final
// layer, and a pointwise gesture decoder. The default fusion is per-token
// adaptive layer normalization with zero-initialized residual gates, which
// makes every block the exact identity before training; three alternative
// fusion modes exist for ablation runs.

#pragma once

#include "ggen/nn/attention.hpp"
#include "ggen/nn/layers.hpp"

#include <string>
#include <vector>

namespace ggen::model {

enum class ConditioningMode { kAdaln, kCrossAttention, kInContext, kConcat };

ConditioningMode conditioning_mode_from_string(const std::string& s);
std::string to_string(ConditioningMode m);

struct BackboneConfig {
  Eigen::Index num_blocks = 12;
  Eigen::Index num_heads = 16;
  Eigen::Index d_model = 1280;    // hidden width D''
  Eigen::Index d_features = 0;    // gesture feature width (joint dims + root)
  ConditioningMode mode = ConditioningMode::kAdaln;
  int tisa_kernels = 5;
  int attention_window = 0;  // 0 = unbounded history
  bool causal = true;        // config switch for mask sensitivity checks
};

// One transformer block. In adaln mode the residual branches are modulated
// by shift/scale/gate vectors regressed pointwise from the condition; the
// gate head is zero-initialized so the block starts as the identity.
class AdaLnBlock {
 public:
  AdaLnBlock() = default;
  AdaLnBlock(const BackboneConfig& cfg, Rng& rng, const std::string& name);

  struct Cache {
    Matrix h;        // block input
    Matrix c;        // condition as received (adaln + cross modes)
    Matrix mod;      // T x 6D modulation, adaln mode
    Matrix ln1, branch1_in, branch1_out;
    Matrix h1;       // after first residual
    Matrix ln2, branch2_in, branch2_out;
    Matrix hcat, hp;          // concat mode: joined input and its projection
    Matrix ln_x, x_out, h_x;  // cross-attention stage, cross mode
    nn::SelfAttention::Cache attn;
    nn::CrossAttention::Cache xattn;
    nn::Ffn::Cache ffn;
  };

  Matrix forward(const Matrix& h, const Matrix& c, Cache* cache = nullptr) const;
  // Returns dh; accumulates parameter grads and (when conditioned) *dc.
  Matrix backward(const Cache& cache, const Matrix& dy, Matrix* dc);

  void params(nn::ParamRefs& out);
  const nn::SelfAttention& attention() const { return attn_; }

 private:
  ConditioningMode mode_ = ConditioningMode::kAdaln;
  Eigen::Index dim_ = 0;
  nn::LayerNorm ln_;
  nn::SelfAttention attn_;
  nn::Ffn ffn_;
  nn::Linear mod_;    // adaln: D'' -> 6 D'', zero-init
  nn::CrossAttention xattn_;  // cross_attention mode
  nn::Linear proj_;   // concat mode: 2 D'' -> D''
};

// LN, then scale/shift regressed from the condition (no gate), then a
// pointwise linear. The scale head starts at zero, so the initial output is
// the linear layer's response to the shift alone. Unconditioned fusion
// modes skip the modulation.
class FinalLayer {
 public:
  FinalLayer() = default;
  FinalLayer(const BackboneConfig& cfg, Rng& rng, const std::string& name);

  struct Cache {
    Matrix h, c, lnh, scale, y_in;
  };

  Matrix forward(const Matrix& h, const Matrix& c, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& dy, Matrix* dc);
  void params(nn::ParamRefs& out);

 private:
  bool modulated_ = true;
  nn::LayerNorm ln_;
  nn::Linear shift_head_, scale_head_;  // scale head zero-init
  nn::Linear lin_;
};

class NoisePredictor {
 public:
  NoisePredictor() = default;
  NoisePredictor(const BackboneConfig& cfg, Rng& rng);

  struct Cache {
    Matrix g;     // raw gesture features (encoder input)
    Matrix h0;    // trunk input (condition rows prepended in in_context mode)
    std::vector<AdaLnBlock::Cache> blocks;
    FinalLayer::Cache final;
    Matrix final_out;
    Eigen::Index cond_rows = 0;
  };

  // eps_hat = decode(final(block_M(...block_1(encode(g), c)...), c))
  Matrix forward(const Matrix& g_n, const Matrix& c, Cache* cache = nullptr) const;
  // Returns d(g_n); accumulates parameter grads and *dc.
  Matrix backward(const Cache& cache, const Matrix& d_eps, Matrix* dc = nullptr);

  void params(nn::ParamRefs& out);
  int64_t parameter_count();
  const BackboneConfig& config() const { return cfg_; }

  // Stage accessors for structural tests.
  const nn::Conv1d& encoder() const { return encoder_; }
  const nn::Conv1d& decoder() const { return decoder_; }
  std::vector<AdaLnBlock>& blocks() { return blocks_; }
  FinalLayer& final_layer() { return final_; }

 private:
  BackboneConfig cfg_;
  nn::Conv1d encoder_;   // kernel 3, symmetric padding
  std::vector<AdaLnBlock> blocks_;
  FinalLayer final_;
  nn::Conv1d decoder_;   // kernel 1
};

}  // namespace ggen::model
