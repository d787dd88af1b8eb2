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

#include "ggen/nn/attention.hpp"

#include <cmath>
#include <limits>

namespace ggen::nn {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// In-place masked softmax over each row; masked entries hold -inf and end
// up exactly zero.
void softmax_rows(Matrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - mx).exp();
    logits.row(r) = (e / e.sum()).matrix();
  }
}

// dLogits = P .* (dP - rowsum(dP .* P))
Matrix softmax_backward_rows(const Matrix& probs, const Matrix& dprobs) {
  Matrix d(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    const double dot = probs.row(r).dot(dprobs.row(r));
    d.row(r) = probs.row(r).cwiseProduct(dprobs.row(r) - RowVector::Constant(probs.cols(), dot));
  }
  return d;
}
}  // namespace

// ---------------------------------------------------------------- TisaBias

TisaBias::TisaBias(Eigen::Index heads, int kernels, Rng& rng, const std::string& name) {
  amp_.name = name + ".amp";
  width_.name = name + ".width";
  center_.name = name + ".center";
  amp_.value = rng.normal_matrix(heads, kernels, 0.1);
  width_.value = Matrix::Constant(heads, kernels, 0.7);
  // Kernels start centered on recent offsets 0, -1, -2, ...
  center_.value = Matrix(heads, kernels);
  for (Eigen::Index h = 0; h < heads; ++h)
    for (int k = 0; k < kernels; ++k) center_.value(h, k) = -static_cast<double>(k);
}

Matrix TisaBias::table(Eigen::Index d_min, Eigen::Index d_max) const {
  const Eigen::Index heads = amp_.value.rows();
  const int kernels = this->kernels();
  Matrix t = Matrix::Zero(heads, d_max - d_min + 1);
  for (Eigen::Index h = 0; h < heads; ++h)
    for (Eigen::Index d = d_min; d <= d_max; ++d) {
      double v = 0.0;
      for (int k = 0; k < kernels; ++k) {
        const double w = width_.value(h, k);
        const double diff = static_cast<double>(d) - center_.value(h, k);
        v += amp_.value(h, k) * std::exp(-w * w * diff * diff);
      }
      t(h, d - d_min) = v;
    }
  return t;
}

void TisaBias::backward(const Matrix& d_bias, Eigen::Index d_min) {
  amp_.ensure_grad();
  width_.ensure_grad();
  center_.ensure_grad();
  const Eigen::Index heads = amp_.value.rows();
  const int kernels = this->kernels();
  for (Eigen::Index h = 0; h < heads; ++h)
    for (Eigen::Index col = 0; col < d_bias.cols(); ++col) {
      const double g = d_bias(h, col);
      if (g == 0.0) continue;
      const double d = static_cast<double>(d_min + col);
      for (int k = 0; k < kernels; ++k) {
        const double a = amp_.value(h, k);
        const double w = width_.value(h, k);
        const double diff = d - center_.value(h, k);
        const double e = std::exp(-w * w * diff * diff);
        amp_.grad(h, k) += g * e;
        width_.grad(h, k) += g * a * e * (-2.0 * w * diff * diff);
        center_.grad(h, k) += g * a * e * (2.0 * w * w * diff);
      }
    }
}

void TisaBias::params(ParamRefs& out) {
  out.push_back(&amp_);
  out.push_back(&width_);
  out.push_back(&center_);
}

// ----------------------------------------------------------- SelfAttention

SelfAttention::SelfAttention(const AttentionConfig& cfg, Rng& rng, const std::string& name)
    : cfg_(cfg),
      qkv_(cfg.dim, 3 * cfg.dim, rng, name + ".qkv"),
      out_(cfg.dim, cfg.dim, rng, name + ".out"),
      bias_(cfg.heads, cfg.tisa_kernels, rng, name + ".tisa") {
  require(cfg.dim % cfg.heads == 0, "SelfAttention: dim must divide into heads");
}

bool SelfAttention::visible(Eigen::Index i, Eigen::Index j) const {
  if (cfg_.causal && j > i) return false;
  if (cfg_.window > 0 && std::abs(static_cast<long>(i - j)) > cfg_.window - 1) return false;
  return true;
}

Matrix SelfAttention::bias_matrix(Eigen::Index head, Eigen::Index t) const {
  const Matrix tab = bias_.table(-(t - 1), t - 1);
  Matrix b(t, t);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < t; ++j) b(i, j) = tab(head, (j - i) + (t - 1));
  return b;
}

Matrix SelfAttention::forward(const Matrix& x, Cache* cache) const {
  const Eigen::Index t = x.rows();
  const Eigen::Index dh = cfg_.dim / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix qkv = qkv_.forward(x);
  const Matrix tab = bias_.table(-(t - 1), t - 1);

  Matrix concat(t, cfg_.dim);
  std::vector<Matrix> probs(static_cast<size_t>(cfg_.heads));
  for (Eigen::Index h = 0; h < cfg_.heads; ++h) {
    const auto q = qkv.middleCols(h * dh, dh);
    const auto k = qkv.middleCols(cfg_.dim + h * dh, dh);
    const auto v = qkv.middleCols(2 * cfg_.dim + h * dh, dh);

    Matrix logits = (q * k.transpose()) * scale;
    for (Eigen::Index i = 0; i < t; ++i)
      for (Eigen::Index j = 0; j < t; ++j) {
        if (visible(i, j))
          logits(i, j) += tab(h, (j - i) + (t - 1));
        else
          logits(i, j) = kNegInf;
      }
    softmax_rows(logits);
    concat.middleCols(h * dh, dh).noalias() = logits * v;
    probs[static_cast<size_t>(h)] = std::move(logits);
  }

  Matrix y = out_.forward(concat);
  if (cache) {
    cache->x = x;
    cache->qkv = std::move(qkv);
    cache->probs = std::move(probs);
  }
  return y;
}

Matrix SelfAttention::backward(const Cache& cache, const Matrix& dy) {
  const Eigen::Index t = cache.x.rows();
  const Eigen::Index dh = cfg_.dim / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Recompute the concat input of the output projection from cached probs.
  Matrix concat(t, cfg_.dim);
  for (Eigen::Index h = 0; h < cfg_.heads; ++h) {
    const auto v = cache.qkv.middleCols(2 * cfg_.dim + h * dh, dh);
    concat.middleCols(h * dh, dh).noalias() = cache.probs[static_cast<size_t>(h)] * v;
  }
  const Matrix dconcat = out_.backward(concat, dy);

  Matrix dqkv = Matrix::Zero(t, 3 * cfg_.dim);
  Matrix dbias_tab = Matrix::Zero(cfg_.heads, 2 * t - 1);
  for (Eigen::Index h = 0; h < cfg_.heads; ++h) {
    const auto q = cache.qkv.middleCols(h * dh, dh);
    const auto k = cache.qkv.middleCols(cfg_.dim + h * dh, dh);
    const auto v = cache.qkv.middleCols(2 * cfg_.dim + h * dh, dh);
    const Matrix& p = cache.probs[static_cast<size_t>(h)];
    const auto dout_h = dconcat.middleCols(h * dh, dh);

    dqkv.middleCols(2 * cfg_.dim + h * dh, dh).noalias() = p.transpose() * dout_h;  // dV
    const Matrix dprobs = dout_h * v.transpose();
    const Matrix dlogits = softmax_backward_rows(p, dprobs);

    dqkv.middleCols(h * dh, dh).noalias() = dlogits * k * scale;              // dQ
    dqkv.middleCols(cfg_.dim + h * dh, dh).noalias() = dlogits.transpose() * q * scale;  // dK

    for (Eigen::Index i = 0; i < t; ++i)
      for (Eigen::Index j = 0; j < t; ++j)
        if (visible(i, j)) dbias_tab(h, (j - i) + (t - 1)) += dlogits(i, j);
  }
  bias_.backward(dbias_tab, -(t - 1));
  return qkv_.backward(cache.x, dqkv);
}

void SelfAttention::params(ParamRefs& out) {
  qkv_.params(out);
  out_.params(out);
  bias_.params(out);
}

// ---------------------------------------------------------- CrossAttention

CrossAttention::CrossAttention(Eigen::Index dim, Eigen::Index heads, Rng& rng,
                               const std::string& name)
    : heads_(heads),
      q_(dim, dim, rng, name + ".q"),
      kv_(dim, 2 * dim, rng, name + ".kv"),
      out_(dim, dim, rng, name + ".out") {
  require(dim % heads == 0, "CrossAttention: dim must divide into heads");
}

Matrix CrossAttention::forward(const Matrix& x, const Matrix& cond, Cache* cache) const {
  const Eigen::Index dim = q_.out_dim();
  const Eigen::Index dh = dim / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix q = q_.forward(x);
  Matrix kv = kv_.forward(cond);

  Matrix concat(x.rows(), dim);
  std::vector<Matrix> probs(static_cast<size_t>(heads_));
  for (Eigen::Index h = 0; h < heads_; ++h) {
    const auto qh = q.middleCols(h * dh, dh);
    const auto kh = kv.middleCols(h * dh, dh);
    const auto vh = kv.middleCols(dim + h * dh, dh);
    Matrix logits = (qh * kh.transpose()) * scale;
    softmax_rows(logits);
    concat.middleCols(h * dh, dh).noalias() = logits * vh;
    probs[static_cast<size_t>(h)] = std::move(logits);
  }
  Matrix y = out_.forward(concat);
  if (cache) {
    cache->x = x;
    cache->cond = cond;
    cache->q = std::move(q);
    cache->kv = std::move(kv);
    cache->probs = std::move(probs);
  }
  return y;
}

Matrix CrossAttention::backward(const Cache& cache, const Matrix& dy, Matrix* dcond) {
  const Eigen::Index dim = q_.out_dim();
  const Eigen::Index dh = dim / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix concat(cache.x.rows(), dim);
  for (Eigen::Index h = 0; h < heads_; ++h) {
    const auto vh = cache.kv.middleCols(dim + h * dh, dh);
    concat.middleCols(h * dh, dh).noalias() = cache.probs[static_cast<size_t>(h)] * vh;
  }
  const Matrix dconcat = out_.backward(concat, dy);

  Matrix dq = Matrix::Zero(cache.x.rows(), dim);
  Matrix dkv = Matrix::Zero(cache.cond.rows(), 2 * dim);
  for (Eigen::Index h = 0; h < heads_; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.kv.middleCols(h * dh, dh);
    const auto vh = cache.kv.middleCols(dim + h * dh, dh);
    const Matrix& p = cache.probs[static_cast<size_t>(h)];
    const auto dout_h = dconcat.middleCols(h * dh, dh);

    dkv.middleCols(dim + h * dh, dh).noalias() = p.transpose() * dout_h;
    const Matrix dprobs = dout_h * vh.transpose();
    const Matrix dlogits = softmax_backward_rows(p, dprobs);
    dq.middleCols(h * dh, dh).noalias() = dlogits * kh * scale;
    dkv.middleCols(h * dh, dh).noalias() = dlogits.transpose() * qh * scale;
  }
  if (dcond) *dcond += kv_.backward(cache.cond, dkv);
  else kv_.backward(cache.cond, dkv);
  return q_.backward(cache.x, dq);
}

void CrossAttention::params(ParamRefs& out) {
  q_.params(out);
  kv_.params(out);
  out_.params(out);
}

}  // namespace ggen::nn
