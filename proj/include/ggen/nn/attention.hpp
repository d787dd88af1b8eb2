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

#include "ggen/nn/layers.hpp"

#include <vector>

namespace ggen::nn {

// Position information enters attention only as a learned function of the
// query-key offset, so the operator commutes with time shifts. The per-head
// bias is a mixture of Gaussian kernels over the offset:
//   bias_h(d) = sum_k amp * exp(-width^2 * (d - center)^2)
class TisaBias {
 public:
  TisaBias() = default;
  TisaBias(Eigen::Index heads, int kernels, Rng& rng, const std::string& name);

  // Bias values for offsets d = j - i in [d_min, d_max], one row per head.
  Matrix table(Eigen::Index d_min, Eigen::Index d_max) const;
  // d_bias laid out like table(); accumulates kernel-parameter grads.
  void backward(const Matrix& d_bias, Eigen::Index d_min);

  void params(ParamRefs& out);
  int kernels() const { return static_cast<int>(amp_.value.cols()); }

 private:
  Parameter amp_, width_, center_;  // heads x kernels
};

struct AttentionConfig {
  Eigen::Index dim = 0;
  Eigen::Index heads = 1;
  int tisa_kernels = 5;
  // Max number of visible keys per query; 0 = unbounded history. A finite
  // window makes interior outputs exactly shift-equivariant.
  int window = 0;
  bool causal = true;
};

// Multi-head self-attention with TISA relative-position bias.
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(const AttentionConfig& cfg, Rng& rng, const std::string& name);

  struct Cache {
    Matrix x, qkv;
    std::vector<Matrix> probs;  // per head, T x T with masked entries at 0
  };

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& dy);

  // Full per-head logit-bias matrix (T x T); exposed so tests can assert the
  // Toeplitz structure directly.
  Matrix bias_matrix(Eigen::Index head, Eigen::Index t) const;

  void params(ParamRefs& out);
  const AttentionConfig& config() const { return cfg_; }

 private:
  bool visible(Eigen::Index i, Eigen::Index j) const;

  AttentionConfig cfg_;
  Linear qkv_, out_;
  TisaBias bias_;
};

// Full (unmasked) attention of a sequence onto a same-length condition
// sequence; used by the cross-attention conditioning variant.
class CrossAttention {
 public:
  CrossAttention() = default;
  CrossAttention(Eigen::Index dim, Eigen::Index heads, Rng& rng, const std::string& name);

  struct Cache {
    Matrix x, cond, q, kv;
    std::vector<Matrix> probs;
  };

  Matrix forward(const Matrix& x, const Matrix& cond, Cache* cache = nullptr) const;
  // Returns dx; accumulates dcond into *dcond.
  Matrix backward(const Cache& cache, const Matrix& dy, Matrix* dcond);

  void params(ParamRefs& out);

 private:
  Eigen::Index heads_ = 1;
  Linear q_, kv_, out_;
};

}  // namespace ggen::nn
