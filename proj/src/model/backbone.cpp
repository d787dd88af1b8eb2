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

#include "ggen/model/backbone.hpp"

namespace ggen::model {
namespace {

void check_pair(const Matrix& h, const Matrix& c, Eigen::Index dim) {
  if (h.cols() != dim || c.cols() != dim || h.rows() != c.rows()) {
    throw ShapeMismatch("hidden " + std::to_string(h.rows()) + "x" +
                        std::to_string(h.cols()) + " vs condition " +
                        std::to_string(c.rows()) + "x" + std::to_string(c.cols()) +
                        " (width " + std::to_string(dim) + ")");
  }
}

}  // namespace

ConditioningMode conditioning_mode_from_string(const std::string& s) {
  if (s == "adaln") return ConditioningMode::kAdaln;
  if (s == "cross_attention") return ConditioningMode::kCrossAttention;
  if (s == "in_context") return ConditioningMode::kInContext;
  if (s == "concat") return ConditioningMode::kConcat;
  throw Error("unknown conditioning mode: " + s +
              " (expected adaln|cross_attention|in_context|concat)");
}

std::string to_string(ConditioningMode m) {
  switch (m) {
    case ConditioningMode::kAdaln: return "adaln";
    case ConditioningMode::kCrossAttention: return "cross_attention";
    case ConditioningMode::kInContext: return "in_context";
    case ConditioningMode::kConcat: return "concat";
  }
  return "?";
}

AdaLnBlock::AdaLnBlock(const BackboneConfig& cfg, Rng& rng, const std::string& name)
    : mode_(cfg.mode), dim_(cfg.d_model) {
  nn::AttentionConfig acfg;
  acfg.dim = cfg.d_model;
  acfg.heads = cfg.num_heads;
  acfg.tisa_kernels = cfg.tisa_kernels;
  acfg.window = cfg.attention_window;
  acfg.causal = cfg.causal;
  attn_ = nn::SelfAttention(acfg, rng, name + ".attn");
  ffn_ = nn::Ffn(cfg.d_model, 4 * cfg.d_model, rng, name + ".ffn");
  switch (mode_) {
    case ConditioningMode::kAdaln:
      // Zero init makes every gate (and shift/scale) start at zero, so the
      // block is exactly the identity before the first update.
      mod_ = nn::Linear(cfg.d_model, 6 * cfg.d_model, rng, name + ".mod", nn::Init::kZero);
      break;
    case ConditioningMode::kCrossAttention:
      xattn_ = nn::CrossAttention(cfg.d_model, cfg.num_heads, rng, name + ".xattn");
      break;
    case ConditioningMode::kConcat:
      proj_ = nn::Linear(2 * cfg.d_model, cfg.d_model, rng, name + ".proj");
      break;
    case ConditioningMode::kInContext:
      break;  // the condition arrives as prepended trunk rows
  }
}

Matrix AdaLnBlock::forward(const Matrix& h, const Matrix& c, Cache* cache) const {
  Cache local;
  Cache& cc = cache != nullptr ? *cache : local;
  cc.h = h;

  if (mode_ == ConditioningMode::kAdaln) {
    check_pair(h, c, dim_);
    cc.c = c;
    cc.mod = mod_.forward(nn::silu(c));  // [b1 g1 a1 b2 g2 a2]
    const auto beta1 = cc.mod.middleCols(0, dim_);
    const auto gamma1 = cc.mod.middleCols(dim_, dim_);
    const auto alpha1 = cc.mod.middleCols(2 * dim_, dim_);
    const auto beta2 = cc.mod.middleCols(3 * dim_, dim_);
    const auto gamma2 = cc.mod.middleCols(4 * dim_, dim_);
    const auto alpha2 = cc.mod.middleCols(5 * dim_, dim_);

    cc.ln1 = ln_.forward(h);
    cc.branch1_in = cc.ln1.cwiseProduct((gamma1.array() + 1.0).matrix()) + beta1;
    cc.branch1_out = attn_.forward(cc.branch1_in, &cc.attn);
    cc.h1 = h + alpha1.cwiseProduct(cc.branch1_out);

    cc.ln2 = ln_.forward(cc.h1);
    cc.branch2_in = cc.ln2.cwiseProduct((gamma2.array() + 1.0).matrix()) + beta2;
    cc.branch2_out = ffn_.forward(cc.branch2_in, &cc.ffn);
    return cc.h1 + alpha2.cwiseProduct(cc.branch2_out);
  }

  if (mode_ == ConditioningMode::kConcat) {
    check_pair(h, c, dim_);
    cc.hcat.resize(h.rows(), 2 * dim_);
    cc.hcat << h, c;
    cc.hp = proj_.forward(cc.hcat);
  } else {
    cc.hp = h;
  }

  cc.ln1 = ln_.forward(cc.hp);
  cc.branch1_out = attn_.forward(cc.ln1, &cc.attn);
  cc.h1 = cc.hp + cc.branch1_out;

  Matrix u = cc.h1;
  if (mode_ == ConditioningMode::kCrossAttention) {
    check_pair(h, c, dim_);
    cc.c = c;
    cc.ln_x = ln_.forward(cc.h1);
    cc.x_out = xattn_.forward(cc.ln_x, c, &cc.xattn);
    cc.h_x = cc.h1 + cc.x_out;
    u = cc.h_x;
  }

  cc.ln2 = ln_.forward(u);
  cc.branch2_out = ffn_.forward(cc.ln2, &cc.ffn);
  return u + cc.branch2_out;
}

Matrix AdaLnBlock::backward(const Cache& cache, const Matrix& dy, Matrix* dc) {
  if (mode_ == ConditioningMode::kAdaln) {
    const auto gamma1 = cache.mod.middleCols(dim_, dim_);
    const auto alpha1 = cache.mod.middleCols(2 * dim_, dim_);
    const auto gamma2 = cache.mod.middleCols(4 * dim_, dim_);
    const auto alpha2 = cache.mod.middleCols(5 * dim_, dim_);

    Matrix dmod(dy.rows(), 6 * dim_);

    // Feed-forward branch.
    Matrix dh1 = dy;
    dmod.middleCols(5 * dim_, dim_) = dy.cwiseProduct(cache.branch2_out);  // d alpha2
    Matrix d_branch2 = dy.cwiseProduct(alpha2);
    Matrix d_f_in = ffn_.backward(cache.ffn, d_branch2);
    dmod.middleCols(3 * dim_, dim_) = d_f_in;                              // d beta2
    dmod.middleCols(4 * dim_, dim_) = d_f_in.cwiseProduct(cache.ln2);      // d gamma2
    Matrix d_ln2 = d_f_in.cwiseProduct((gamma2.array() + 1.0).matrix());
    dh1 += ln_.backward(cache.h1, d_ln2);

    // Attention branch.
    Matrix dh = dh1;
    dmod.middleCols(2 * dim_, dim_) = dh1.cwiseProduct(cache.branch1_out);  // d alpha1
    Matrix d_branch1 = dh1.cwiseProduct(alpha1);
    Matrix d_a_in = attn_.backward(cache.attn, d_branch1);
    dmod.middleCols(0, dim_) = d_a_in;                                      // d beta1
    dmod.middleCols(dim_, dim_) = d_a_in.cwiseProduct(cache.ln1);           // d gamma1
    Matrix d_ln1 = d_a_in.cwiseProduct((gamma1.array() + 1.0).matrix());
    dh += ln_.backward(cache.h, d_ln1);

    Matrix d_cm = mod_.backward(nn::silu(cache.c), dmod);
    if (dc != nullptr) *dc += nn::silu_backward(cache.c, d_cm);
    return dh;
  }

  // Feed-forward stage (shared by the remaining modes).
  Matrix du = dy;
  Matrix d_ln2 = ffn_.backward(cache.ffn, dy);
  const Matrix& u = (mode_ == ConditioningMode::kCrossAttention) ? cache.h_x : cache.h1;
  du += ln_.backward(u, d_ln2);

  Matrix dh1 = du;
  if (mode_ == ConditioningMode::kCrossAttention) {
    Matrix d_ln_x = xattn_.backward(cache.xattn, du, dc);
    dh1 += ln_.backward(cache.h1, d_ln_x);
  }

  Matrix dhp = dh1;
  Matrix d_ln1 = attn_.backward(cache.attn, dh1);
  dhp += ln_.backward(cache.hp, d_ln1);

  if (mode_ == ConditioningMode::kConcat) {
    Matrix dhcat = proj_.backward(cache.hcat, dhp);
    if (dc != nullptr) *dc += dhcat.rightCols(dim_);
    return dhcat.leftCols(dim_);
  }
  return dhp;
}

void AdaLnBlock::params(nn::ParamRefs& out) {
  attn_.params(out);
  ffn_.params(out);
  if (mode_ == ConditioningMode::kAdaln) mod_.params(out);
  if (mode_ == ConditioningMode::kCrossAttention) xattn_.params(out);
  if (mode_ == ConditioningMode::kConcat) proj_.params(out);
}

FinalLayer::FinalLayer(const BackboneConfig& cfg, Rng& rng, const std::string& name)
    : modulated_(cfg.mode == ConditioningMode::kAdaln),
      lin_(cfg.d_model, cfg.d_model, rng, name + ".lin") {
  if (modulated_) {
    shift_head_ = nn::Linear(cfg.d_model, cfg.d_model, rng, name + ".shift");
    scale_head_ = nn::Linear(cfg.d_model, cfg.d_model, rng, name + ".scale",
                             nn::Init::kZero);
  }
}

Matrix FinalLayer::forward(const Matrix& h, const Matrix& c, Cache* cache) const {
  Cache local;
  Cache& cc = cache != nullptr ? *cache : local;
  cc.h = h;
  cc.lnh = ln_.forward(h);
  if (!modulated_) {
    cc.y_in = cc.lnh;
    return lin_.forward(cc.y_in);
  }
  check_pair(h, c, h.cols());
  cc.c = c;
  const Matrix cm = nn::silu(c);
  const Matrix shift = shift_head_.forward(cm);
  cc.scale = scale_head_.forward(cm);
  cc.y_in = cc.lnh.cwiseProduct(cc.scale) + shift;  // literal scale: zero kills h
  return lin_.forward(cc.y_in);
}

Matrix FinalLayer::backward(const Cache& cache, const Matrix& dy, Matrix* dc) {
  Matrix d_yin = lin_.backward(cache.y_in, dy);
  if (!modulated_) {
    return ln_.backward(cache.h, d_yin);
  }
  const Matrix cm = nn::silu(cache.c);
  Matrix d_cm = shift_head_.backward(cm, d_yin);
  d_cm += scale_head_.backward(cm, d_yin.cwiseProduct(cache.lnh));
  if (dc != nullptr) *dc += nn::silu_backward(cache.c, d_cm);
  Matrix d_lnh = d_yin.cwiseProduct(cache.scale);
  return ln_.backward(cache.h, d_lnh);
}

void FinalLayer::params(nn::ParamRefs& out) {
  if (modulated_) {
    shift_head_.params(out);
    scale_head_.params(out);
  }
  lin_.params(out);
}

NoisePredictor::NoisePredictor(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
  require(cfg.num_blocks >= 1, "backbone needs at least one block");
  require(cfg.num_heads >= 1 && cfg.d_model % cfg.num_heads == 0,
          "hidden dim must be divisible by the head count");
  require(cfg.d_features >= 1, "gesture feature dim must be set");
  encoder_ = nn::Conv1d(cfg.d_features, cfg.d_model, 3, 1, nn::Pad::kSymmetric, rng,
                        "backbone.encoder");
  blocks_.reserve(static_cast<size_t>(cfg.num_blocks));
  for (Eigen::Index m = 0; m < cfg.num_blocks; ++m) {
    blocks_.emplace_back(cfg, rng, "backbone.block" + std::to_string(m));
  }
  final_ = FinalLayer(cfg, rng, "backbone.final");
  decoder_ = nn::Conv1d(cfg.d_model, cfg.d_features, 1, 1, nn::Pad::kNone, rng,
                        "backbone.decoder");
}

Matrix NoisePredictor::forward(const Matrix& g_n, const Matrix& c, Cache* cache) const {
  if (g_n.cols() != cfg_.d_features) {
    throw ShapeMismatch("gesture width " + std::to_string(g_n.cols()) +
                        " does not match configured feature dim " +
                        std::to_string(cfg_.d_features));
  }
  if (c.cols() != cfg_.d_model || c.rows() != g_n.rows()) {
    throw ShapeMismatch("condition " + std::to_string(c.rows()) + "x" +
                        std::to_string(c.cols()) + " does not match gestures " +
                        std::to_string(g_n.rows()) + "x" + std::to_string(cfg_.d_model));
  }

  Cache local;
  Cache& cc = cache != nullptr ? *cache : local;
  cc.g = g_n;
  cc.blocks.resize(blocks_.size());

  Matrix h = encoder_.forward(g_n);
  cc.cond_rows = 0;
  if (cfg_.mode == ConditioningMode::kInContext) {
    cc.cond_rows = c.rows();
    Matrix joined(c.rows() + h.rows(), cfg_.d_model);
    joined << c, h;
    h = std::move(joined);
  }
  cc.h0 = h;

  for (size_t m = 0; m < blocks_.size(); ++m) {
    h = blocks_[m].forward(h, c, &cc.blocks[m]);
  }
  if (cc.cond_rows > 0) h = h.bottomRows(g_n.rows()).eval();

  cc.final_out = final_.forward(h, c, &cc.final);
  Matrix eps = decoder_.forward(cc.final_out);
  if (!eps.allFinite()) {
    throw NonFiniteActivation("noise prediction produced NaN/Inf");
  }
  return eps;
}

Matrix NoisePredictor::backward(const Cache& cache, const Matrix& d_eps, Matrix* dc) {
  Matrix d_final = decoder_.backward(cache.final_out, d_eps);
  Matrix dh = final_.backward(cache.final, d_final, dc);

  if (cache.cond_rows > 0) {
    Matrix padded = Matrix::Zero(cache.cond_rows + dh.rows(), dh.cols());
    padded.bottomRows(dh.rows()) = dh;
    dh = std::move(padded);
  }
  for (size_t m = blocks_.size(); m-- > 0;) {
    dh = blocks_[m].backward(cache.blocks[m], dh, dc);
  }
  if (cache.cond_rows > 0) {
    if (dc != nullptr) *dc += dh.topRows(cache.cond_rows);
    dh = dh.bottomRows(dh.rows() - cache.cond_rows).eval();
  }
  return encoder_.backward(cache.g, dh);
}

void NoisePredictor::params(nn::ParamRefs& out) {
  encoder_.params(out);
  for (auto& b : blocks_) b.params(out);
  final_.params(out);
  decoder_.params(out);
}

int64_t NoisePredictor::parameter_count() {
  nn::ParamRefs refs;
  params(refs);
  int64_t n = 0;
  for (const nn::Parameter* p : refs) n += p->value.size();
  return n;
}

}  // namespace ggen::model
