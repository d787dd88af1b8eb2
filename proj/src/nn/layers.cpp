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

#include "ggen/nn/layers.hpp"

#include <cmath>

namespace ggen::nn {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
}

Matrix gelu_backward(const Matrix& x, const Matrix& dy) {
  Matrix d = x.unaryExpr([](double v) {
    const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
    return cdf + v * pdf;
  });
  return dy.cwiseProduct(d);
}

Matrix silu(const Matrix& x) {
  return x.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Matrix silu_backward(const Matrix& x, const Matrix& dy) {
  Matrix d = x.unaryExpr([](double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    return s * (1.0 + v * (1.0 - s));
  });
  return dy.cwiseProduct(d);
}

// ---------------------------------------------------------------- Linear

Linear::Linear(Eigen::Index in, Eigen::Index out, Rng& rng, std::string name, Init init) {
  w_.name = name + ".w";
  b_.name = name + ".b";
  if (init == Init::kZero) {
    w_.value = Matrix::Zero(out, in);
  } else {
    const double scale = std::sqrt(2.0 / static_cast<double>(in + out));
    w_.value = rng.normal_matrix(out, in, scale);
  }
  b_.value = Matrix::Zero(1, out);
}

Matrix Linear::forward(const Matrix& x) const {
  Matrix y = x * w_.value.transpose();
  y.rowwise() += b_.value.row(0);
  return y;
}

Matrix Linear::backward(const Matrix& x, const Matrix& dy) {
  w_.ensure_grad();
  b_.ensure_grad();
  w_.grad.noalias() += dy.transpose() * x;
  b_.grad.row(0) += dy.colwise().sum();
  return dy * w_.value;
}

void Linear::params(ParamRefs& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(Eigen::Index in_ch, Eigen::Index out_ch, int kernel, int stride, Pad pad,
               Rng& rng, std::string name)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
  w_.name = name + ".w";
  b_.name = name + ".b";
  const double scale = std::sqrt(2.0 / static_cast<double>(kernel * in_ch + out_ch));
  w_.value = rng.normal_matrix(out_ch, static_cast<Eigen::Index>(kernel) * in_ch, scale);
  b_.value = Matrix::Zero(1, out_ch);
}

std::vector<Eigen::Index> Conv1d::pad_map(Eigen::Index rows) const {
  // Same-length padding split (k-1) as left = (k-1)/2 + remainder on the right.
  const Eigen::Index pl = (pad_ == Pad::kNone) ? 0 : (kernel_ - 1) / 2;
  const Eigen::Index pr = (pad_ == Pad::kNone) ? 0 : (kernel_ - 1) - pl;
  std::vector<Eigen::Index> map(static_cast<size_t>(rows + pl + pr));
  for (Eigen::Index i = 0; i < rows + pl + pr; ++i) {
    Eigen::Index s = i - pl;
    if (pad_ == Pad::kSymmetric) {
      // mirror with edge duplication, period 2*rows
      const Eigen::Index m = 2 * rows;
      s = ((s % m) + m) % m;
      if (s >= rows) s = m - 1 - s;
    } else if (pad_ == Pad::kReflect) {
      // mirror without edge duplication, period 2*rows - 2
      require(rows >= 2 || (kernel_ == 1), "Conv1d: reflect pad needs >= 2 rows");
      const Eigen::Index m = rows > 1 ? 2 * rows - 2 : 1;
      s = ((s % m) + m) % m;
      if (s >= rows) s = m - s;
    }
    map[static_cast<size_t>(i)] = s;
  }
  return map;
}

Matrix Conv1d::padded(const Matrix& x) const {
  if (pad_ == Pad::kNone) return x;
  const auto map = pad_map(x.rows());
  Matrix p(static_cast<Eigen::Index>(map.size()), x.cols());
  for (size_t i = 0; i < map.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = x.row(map[i]);
  return p;
}

Eigen::Index Conv1d::out_rows(Eigen::Index in_rows) const {
  const Eigen::Index padded_rows =
      (pad_ == Pad::kNone) ? in_rows : in_rows + (kernel_ - 1);
  if (padded_rows < kernel_) return 0;
  return (padded_rows - kernel_) / stride_ + 1;
}

Matrix Conv1d::forward(const Matrix& x) const {
  require(x.cols() == in_ch_, "Conv1d: channel mismatch");
  const Matrix p = padded(x);
  const Eigen::Index t_out = out_rows(x.rows());
  require(t_out >= 1, "Conv1d: input too short for kernel");
  Matrix y = Matrix::Zero(t_out, out_ch_);
  Matrix gathered(t_out, in_ch_);
  for (int j = 0; j < kernel_; ++j) {
    for (Eigen::Index t = 0; t < t_out; ++t) gathered.row(t) = p.row(t * stride_ + j);
    y.noalias() += gathered * w_.value.middleCols(static_cast<Eigen::Index>(j) * in_ch_, in_ch_).transpose();
  }
  y.rowwise() += b_.value.row(0);
  return y;
}

Matrix Conv1d::backward(const Matrix& x, const Matrix& dy) {
  w_.ensure_grad();
  b_.ensure_grad();
  const Matrix p = padded(x);
  const Eigen::Index t_out = dy.rows();
  Matrix dpad = Matrix::Zero(p.rows(), p.cols());
  Matrix gathered(t_out, in_ch_);
  for (int j = 0; j < kernel_; ++j) {
    for (Eigen::Index t = 0; t < t_out; ++t) gathered.row(t) = p.row(t * stride_ + j);
    auto wj = w_.value.middleCols(static_cast<Eigen::Index>(j) * in_ch_, in_ch_);
    w_.grad.middleCols(static_cast<Eigen::Index>(j) * in_ch_, in_ch_).noalias() +=
        dy.transpose() * gathered;
    const Matrix dgather = dy * wj;
    for (Eigen::Index t = 0; t < t_out; ++t) dpad.row(t * stride_ + j) += dgather.row(t);
  }
  b_.grad.row(0) += dy.colwise().sum();

  if (pad_ == Pad::kNone) return dpad;
  Matrix dx = Matrix::Zero(x.rows(), x.cols());
  const auto map = pad_map(x.rows());
  for (size_t i = 0; i < map.size(); ++i) dx.row(map[i]) += dpad.row(static_cast<Eigen::Index>(i));
  return dx;
}

void Conv1d::params(ParamRefs& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ------------------------------------------------------- DepthwiseConv1d

DepthwiseConv1d::DepthwiseConv1d(Eigen::Index channels, int kernel, Rng& rng, std::string name)
    : kernel_(kernel) {
  w_.name = name + ".w";
  b_.name = name + ".b";
  w_.value = rng.normal_matrix(channels, kernel, std::sqrt(1.0 / kernel));
  b_.value = Matrix::Zero(1, channels);
}

Matrix DepthwiseConv1d::forward(const Matrix& x) const {
  require(x.cols() == w_.value.rows(), "DepthwiseConv1d: channel mismatch");
  const Eigen::Index t_out = x.rows() - kernel_ + 1;
  require(t_out >= 1, "DepthwiseConv1d: input shorter than kernel");
  Matrix y = Matrix::Zero(t_out, x.cols());
  for (int j = 0; j < kernel_; ++j)
    y += x.middleRows(j, t_out) * w_.value.col(j).asDiagonal();
  y.rowwise() += b_.value.row(0);
  return y;
}

Matrix DepthwiseConv1d::backward(const Matrix& x, const Matrix& dy) {
  w_.ensure_grad();
  b_.ensure_grad();
  const Eigen::Index t_out = dy.rows();
  Matrix dx = Matrix::Zero(x.rows(), x.cols());
  for (int j = 0; j < kernel_; ++j) {
    w_.grad.col(j) += x.middleRows(j, t_out).cwiseProduct(dy).colwise().sum().transpose();
    dx.middleRows(j, t_out) += dy * w_.value.col(j).asDiagonal();
  }
  b_.grad.row(0) += dy.colwise().sum();
  return dx;
}

void DepthwiseConv1d::params(ParamRefs& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// -------------------------------------------------------------- LayerNorm

Matrix LayerNorm::forward(const Matrix& x) const {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    y.row(r) = (x.row(r).array() - mu) / std::sqrt(var + kEps);
  }
  return y;
}

Matrix LayerNorm::backward(const Matrix& x, const Matrix& dy) const {
  Matrix dx(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + kEps);
    const Eigen::ArrayXd xhat = (x.row(r).array() - mu) * inv_std;
    const Eigen::ArrayXd g = dy.row(r).array();
    const double g_mean = g.mean();
    const double gx_mean = (g * xhat).mean();
    dx.row(r) = (inv_std * (g - g_mean - xhat * gx_mean)).matrix();
    (void)n;
  }
  return dx;
}

// -------------------------------------------------------------------- Ffn

Ffn::Ffn(Eigen::Index dim, Eigen::Index hidden, Rng& rng, const std::string& name)
    : fc1_(dim, hidden, rng, name + ".fc1"), fc2_(hidden, dim, rng, name + ".fc2") {}

Matrix Ffn::forward(const Matrix& x, Cache* cache) const {
  Matrix h1 = fc1_.forward(x);
  Matrix y = fc2_.forward(gelu(h1));
  if (cache) {
    cache->x = x;
    cache->h1 = std::move(h1);
  }
  return y;
}

Matrix Ffn::backward(const Cache& cache, const Matrix& dy) {
  const Matrix dact = fc2_.backward(gelu(cache.h1), dy);
  const Matrix dh1 = gelu_backward(cache.h1, dact);
  return fc1_.backward(cache.x, dh1);
}

void Ffn::params(ParamRefs& out) {
  fc1_.params(out);
  fc2_.params(out);
}

// ------------------------------------------------------------------- Adam

double global_grad_norm(const ParamRefs& params) {
  double sq = 0.0;
  for (const auto* p : params)
    if (p->grad.size() > 0) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

double AdamOptimizer::step(const ParamRefs& params) {
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  require(m_.size() == params.size(), "AdamOptimizer: parameter set changed");

  const double norm = global_grad_norm(params);
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    p.ensure_grad();
    const Matrix g = p.grad * scale;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    const Matrix mhat = m_[i] / bc1;
    const Matrix vhat = v_[i] / bc2;
    p.value -= cfg_.lr * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                            Matrix::Constant(vhat.rows(), vhat.cols(), cfg_.eps));
    p.zero_grad();
  }
  return norm;
}

void AdamOptimizer::restore(int64_t t, std::vector<Matrix> m, std::vector<Matrix> v) {
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace ggen::nn
