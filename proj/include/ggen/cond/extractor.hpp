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
// Condition path: raw speech -> per-token latents (frozen local extractor)
// -> + global style summary -> strided wide-kernel downsampling to the
// gesture frame rate -> + diffusion-step embedding. The local extractor is
// frozen; the style extractor, downsampler, and step embedding train with
// the denoiser.

#pragma once

#include "ggen/audio/waveform.hpp"
#include "ggen/nn/layers.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ggen::cond {

inline constexpr double kTokenRate = 50.0;  // tokens per second at 16 kHz

struct TokenSequence {
  Matrix tokens;  // T' x D'
  double token_rate = kTokenRate;
};

// Produces TokenSequence at 50 tokens/s from 16 kHz mono audio. Frozen:
// extraction never takes gradients.
class LocalExtractor {
 public:
  virtual ~LocalExtractor() = default;
  virtual TokenSequence extract(const audio::Waveform& w) const = 0;
  virtual Eigen::Index dim() const = 0;          // D'
  virtual std::string kind() const = 0;

 protected:
  // Shared preconditions: 16 kHz and at least 0.1 s of audio.
  static void check_input(const audio::Waveform& w);
};

// Deterministic 80-band log mel filterbank (25 ms window, 20 ms hop) mapped
// through a fixed seeded linear projection; stands in for the external
// pretrained speech model in tests and alternate-language builds.
class StubFilterbankExtractor : public LocalExtractor {
 public:
  static constexpr Eigen::Index kBands = 80;
  static constexpr int kWindow = 400;  // samples at 16 kHz
  static constexpr int kHop = 320;

  StubFilterbankExtractor();

  TokenSequence extract(const audio::Waveform& w) const override;
  Eigen::Index dim() const override { return kBands; }
  std::string kind() const override { return "stub"; }

  // Frames that fit: 1 + floor((len - window)/hop).
  static Eigen::Index frame_count(Eigen::Index samples);

 private:
  Matrix mel_weights_;   // kBands x (kFft/2 + 1)
  Matrix projection_;    // kBands x kBands, fixed seed
};

// Bridge to an external self-supervised speech encoder. Looks up
// previously computed token files (keyed by a digest of the waveform) in
// the directory named by $GGEN_ENCODER_CACHE; if absent and
// $GGEN_ENCODER_CMD is set, runs `cmd <raw-f64-file> <out-token-file>` once
// and reads the result. Never falls back silently: missing tokens raise
// ExternalModelUnavailable.
class PretrainedSpeechEncoderAdapter : public LocalExtractor {
 public:
  explicit PretrainedSpeechEncoderAdapter(Eigen::Index dim = 1024) : dim_(dim) {}

  TokenSequence extract(const audio::Waveform& w) const override;
  Eigen::Index dim() const override { return dim_; }
  std::string kind() const override { return "pretrained"; }

  // Token file layout: "GGTOK1\n", u32 rows, u32 cols, f32 row-major data.
  static void write_token_file(const std::string& path, const Matrix& tokens);
  static Matrix read_token_file(const std::string& path);
  static std::string waveform_digest(const audio::Waveform& w);

 private:
  Eigen::Index dim_;
};

// GE: depthwise separable convolution over the token axis, then temporal
// mean pooling, producing one style vector per clip.
class GlobalStyleExtractor {
 public:
  GlobalStyleExtractor() = default;
  GlobalStyleExtractor(Eigen::Index dim, int kernel, Rng& rng, const std::string& name);

  struct Cache {
    Matrix tokens, depthwise_out;
  };

  RowVector forward(const Matrix& tokens, Cache* cache = nullptr) const;
  // Accumulates parameter grads; returns d(tokens).
  Matrix backward(const Cache& cache, const RowVector& d_style);
  void params(nn::ParamRefs& out);
  int kernel() const { return depthwise_.kernel(); }

 private:
  nn::DepthwiseConv1d depthwise_;
  nn::Linear pointwise_;
};

// DS: wide-kernel strided convolution D' -> D'' over the token axis, then
// linear time interpolation to exactly the requested frame count.
class Downsampler {
 public:
  static constexpr int kKernel = 201;
  static constexpr int kStride = 2;

  Downsampler() = default;
  Downsampler(Eigen::Index d_in, Eigen::Index d_out, Rng& rng, const std::string& name);

  struct Cache {
    Matrix x;                 // conv input
    Eigen::Index latent_rows = 0;
    std::vector<Eigen::Index> lo;  // interpolation knots per output row
    std::vector<double> frac;
  };

  Matrix forward(const Matrix& tokens, Eigen::Index target_frames,
                 Cache* cache = nullptr) const;
  Matrix backward(const Cache& cache, const Matrix& dy);
  void params(nn::ParamRefs& out);

 private:
  nn::Conv1d conv_;
};

// DTE: sinusoidal encoding of the diffusion step followed by a trained
// two-layer pointwise transform.
class TimestepEmbedding {
 public:
  TimestepEmbedding() = default;
  TimestepEmbedding(Eigen::Index dim, int64_t num_steps, Rng& rng, const std::string& name);

  struct Cache {
    Matrix sinusoid, h1;
  };

  RowVector forward(int64_t n, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const RowVector& d_embed);
  void params(nn::ParamRefs& out);
  int64_t num_steps() const { return num_steps_; }

  static RowVector sinusoid(int64_t n, Eigen::Index dim);

 private:
  nn::Linear fc1_, fc2_;
  int64_t num_steps_ = 0;
};

enum class StyleMode { kFuzzy, kNone, kOnehot };

StyleMode style_mode_from_string(const std::string& s);
std::string to_string(StyleMode m);

struct ConditionConfig {
  Eigen::Index d_token = 80;   // D', set from the local extractor
  Eigen::Index d_cond = 64;    // D''
  int64_t num_steps = 100;     // diffusion N, for step-range checks
  StyleMode style = StyleMode::kFuzzy;
  int style_kernel = 31;
  int num_styles = 4;          // one-hot table size
};

// Full condition assembly; owns the trainable pieces, borrows the frozen
// local extractor.
class ConditionExtractor {
 public:
  ConditionExtractor() = default;
  ConditionExtractor(const ConditionConfig& cfg, Rng& rng);

  struct LatentCache {
    Matrix tokens;  // z_a as fed to the style/downsample path
    GlobalStyleExtractor::Cache style;
    Downsampler::Cache down;
    int style_label = 0;
    bool used_style = false;
  };
  struct Cache {
    LatentCache latent;
    TimestepEmbedding::Cache step;
  };

  // Audio part of the condition: DS(z_a [+ broadcast style]), shape T x D''.
  // Step-independent, so callers can compute it once per clip and reuse it
  // across every diffusion step.
  Matrix latents(const TokenSequence& z_a, Eigen::Index target_frames,
                 LatentCache* cache = nullptr, int style_label = 0) const;

  // Step part: one row, broadcast-added to the latents.
  RowVector step_embedding(int64_t n, TimestepEmbedding::Cache* cache = nullptr) const;

  // c = latents + broadcast step_embedding(n), shape T x D''.
  Matrix condition(const TokenSequence& z_a, int64_t n, Eigen::Index target_frames,
                   Cache* cache = nullptr, int style_label = 0) const;

  // Convenience: extract tokens then fuse.
  Matrix condition(const LocalExtractor& local, const audio::Waveform& w, int64_t n,
                   Eigen::Index target_frames, Cache* cache = nullptr,
                   int style_label = 0) const;

  void backward(const Cache& cache, const Matrix& dc);
  void params(nn::ParamRefs& out);
  const ConditionConfig& config() const { return cfg_; }

 private:
  ConditionConfig cfg_;
  GlobalStyleExtractor style_;
  nn::Parameter onehot_table_;  // num_styles x D'
  Downsampler down_;
  TimestepEmbedding step_;
};

}  // namespace ggen::cond
