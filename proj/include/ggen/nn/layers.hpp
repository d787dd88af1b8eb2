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
// Minimal dense NN layers with explicit forward/backward passes. Matrices
// are time-major (rows = frames/tokens). Forward passes are const and take
// caller-owned caches, so concurrent inference on shared weights is safe;
// backward passes accumulate into Parameter::grad and belong to the single
// training thread.

#pragma once

#include "ggen/common.hpp"
#include "ggen/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ggen::nn {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // empty until first backward

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Matrix::Zero(value.rows(), value.cols());
  }
  void zero_grad() {
    if (grad.size() > 0) grad.setZero();
  }
};

using ParamRefs = std::vector<Parameter*>;

enum class Init { kXavier, kZero };

// Elementwise activations.
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& dy);
Matrix silu(const Matrix& x);
Matrix silu_backward(const Matrix& x, const Matrix& dy);

// y = x * W^T + b, applied per row.
class Linear {
 public:
  Linear() = default;
  Linear(Eigen::Index in, Eigen::Index out, Rng& rng, std::string name,
         Init init = Init::kXavier);

  Matrix forward(const Matrix& x) const;
  // Accumulates dW/db; returns dL/dx.
  Matrix backward(const Matrix& x, const Matrix& dy);

  void params(ParamRefs& out);
  Eigen::Index in_dim() const { return w_.value.cols(); }
  Eigen::Index out_dim() const { return w_.value.rows(); }

 private:
  Parameter w_;  // out x in
  Parameter b_;  // 1 x out
};

enum class Pad { kNone, kSymmetric, kReflect };

// Temporal convolution over the row axis, any kernel/stride.
// Weight layout: (out_ch) x (kernel*in_ch), tap-major.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(Eigen::Index in_ch, Eigen::Index out_ch, int kernel, int stride, Pad pad,
         Rng& rng, std::string name);

  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy);

  Eigen::Index out_rows(Eigen::Index in_rows) const;
  void params(ParamRefs& out);
  int kernel() const { return kernel_; }

 private:
  Matrix padded(const Matrix& x) const;
  std::vector<Eigen::Index> pad_map(Eigen::Index rows) const;

  Parameter w_;
  Parameter b_;
  Eigen::Index in_ch_ = 0, out_ch_ = 0;
  int kernel_ = 1, stride_ = 1;
  Pad pad_ = Pad::kNone;
};

// Per-channel temporal convolution (valid, stride 1); the depthwise half of
// a depthwise separable convolution.
class DepthwiseConv1d {
 public:
  DepthwiseConv1d() = default;
  DepthwiseConv1d(Eigen::Index channels, int kernel, Rng& rng, std::string name);

  Matrix forward(const Matrix& x) const;  // (T) -> (T - k + 1)
  Matrix backward(const Matrix& x, const Matrix& dy);

  void params(ParamRefs& out);
  int kernel() const { return kernel_; }

 private:
  Parameter w_;  // channels x kernel
  Parameter b_;  // 1 x channels
  int kernel_ = 1;
};

// Parameter-free layer normalization over channels.
class LayerNorm {
 public:
  Matrix forward(const Matrix& x) const;
  Matrix backward(const Matrix& x, const Matrix& dy) const;
  static constexpr double kEps = 1e-5;
};

// Pointwise two-layer expansion (x4 by default) with GELU.
class Ffn {
 public:
  Ffn() = default;
  Ffn(Eigen::Index dim, Eigen::Index hidden, Rng& rng, const std::string& name);

  struct Cache {
    Matrix x, h1;
  };

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& dy);
  void params(ParamRefs& out);

 private:
  Linear fc1_, fc2_;
};

// Adam with global-norm gradient clipping. Moments are kept in the order the
// parameters are registered, which is also the checkpoint order.
class AdamOptimizer {
 public:
  struct Config {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // <= 0 disables clipping
  };

  AdamOptimizer() = default;
  explicit AdamOptimizer(const Config& cfg) : cfg_(cfg) {}

  // Applies one update from the accumulated grads, then zeroes them.
  // Returns the pre-clip global gradient norm.
  double step(const ParamRefs& params);

  int64_t steps_taken() const { return t_; }
  const Config& config() const { return cfg_; }

  // Checkpoint support: moments for each registered parameter, in order.
  std::vector<Matrix> moments_m() const { return m_; }
  std::vector<Matrix> moments_v() const { return v_; }
  void restore(int64_t t, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  Config cfg_;
  int64_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

double global_grad_norm(const ParamRefs& params);

}  // namespace ggen::nn
