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

#include "ggen/cond/extractor.hpp"

#include "ggen/audio/dsp.hpp"
#include "ggen/digest.hpp"
#include "ggen/rng.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace ggen::cond {
namespace {

constexpr int kFft = 512;  // next power of two above the 400-sample window

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters with mel-spaced centers spanning 0..Nyquist.
Matrix make_mel_weights(Eigen::Index bands, int fft_size, double sample_rate) {
  const Eigen::Index bins = fft_size / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(static_cast<size_t>(bands) + 2);
  for (size_t m = 0; m < centers.size(); ++m) {
    const double mel = mel_max * static_cast<double>(m) / static_cast<double>(bands + 1);
    centers[m] = mel_to_hz(mel) * fft_size / sample_rate;  // in bin units
  }
  Matrix w = Matrix::Zero(bands, bins);
  for (Eigen::Index b = 0; b < bands; ++b) {
    const double lo = centers[static_cast<size_t>(b)];
    const double mid = centers[static_cast<size_t>(b) + 1];
    const double hi = centers[static_cast<size_t>(b) + 2];
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k);
      if (f > lo && f < mid) {
        w(b, k) = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        w(b, k) = (hi - f) / (hi - mid);
      }
    }
  }
  return w;
}

}  // namespace

void LocalExtractor::check_input(const audio::Waveform& w) {
  require(w.sample_rate == audio::kModelSampleRate,
          "extractor expects " + std::to_string(audio::kModelSampleRate) +
              " Hz input, got " + std::to_string(w.sample_rate));
  if (w.seconds() < 0.1) {
    throw AudioTooShort("audio clip shorter than 0.1 s (" +
                        std::to_string(w.seconds()) + " s)");
  }
}

StubFilterbankExtractor::StubFilterbankExtractor()
    : mel_weights_(make_mel_weights(kBands, kFft, audio::kModelSampleRate)) {
  // The projection is fixed at a constant seed so every build of the stub
  // produces identical tokens; it mixes bands the way a learned encoder
  // would, without being trainable.
  Rng rng(derive_seed(0x676573747572ull, "stub-filterbank-projection"));
  projection_ = rng.normal_matrix(kBands, kBands) / std::sqrt(static_cast<double>(kBands));
}

Eigen::Index StubFilterbankExtractor::frame_count(Eigen::Index samples) {
  if (samples < kWindow) return 0;
  return 1 + (samples - kWindow) / kHop;
}

TokenSequence StubFilterbankExtractor::extract(const audio::Waveform& w) const {
  check_input(w);
  const Eigen::Index frames = frame_count(static_cast<Eigen::Index>(w.samples.size()));
  require(frames > 0, "waveform too short to frame");

  Matrix log_fb(frames, kBands);
  std::vector<std::complex<double>> buf(kFft);
  std::vector<double> window(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    window[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / (kWindow - 1));  // Hann
  }

  Vector power(kFft / 2 + 1);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index start = t * kHop;
    for (int i = 0; i < kWindow; ++i) {
      buf[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(start + i)] *
                                    window[static_cast<size_t>(i)];
    }
    for (int i = kWindow; i < kFft; ++i) buf[static_cast<size_t>(i)] = 0.0;
    audio::fft_radix2(buf);
    for (int k = 0; k <= kFft / 2; ++k) power(k) = std::norm(buf[static_cast<size_t>(k)]);
    log_fb.row(t) = ((mel_weights_ * power).array() + 1e-10).log().transpose();
  }

  TokenSequence out;
  out.tokens = log_fb * projection_.transpose();
  out.token_rate = kTokenRate;
  return out;
}

std::string PretrainedSpeechEncoderAdapter::waveform_digest(const audio::Waveform& w) {
  uint64_t h = fnv1a64(w.samples.data(), w.samples.size() * sizeof(double));
  const int64_t rate = w.sample_rate;
  h = fnv1a64(&rate, sizeof(rate), h);
  return hex64(h);
}

void PretrainedSpeechEncoderAdapter::write_token_file(const std::string& path,
                                                      const Matrix& tokens) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write token file: " + path);
  out.write("GGTOK1\n", 7);
  const uint32_t rows = static_cast<uint32_t>(tokens.rows());
  const uint32_t cols = static_cast<uint32_t>(tokens.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    for (Eigen::Index d = 0; d < tokens.cols(); ++d) {
      const float v = static_cast<float>(tokens(t, d));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  require(out.good(), "short write to token file: " + path);
}

Matrix PretrainedSpeechEncoderAdapter::read_token_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw UnreadableFile("cannot open token file: " + path);
  char magic[7];
  in.read(magic, 7);
  require(in.good() && std::string(magic, 7) == "GGTOK1\n",
          "bad token file magic: " + path);
  uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  require(in.good() && rows > 0 && cols > 0, "bad token file header: " + path);
  Matrix tokens(rows, cols);
  for (uint32_t t = 0; t < rows; ++t) {
    for (uint32_t d = 0; d < cols; ++d) {
      float v = NAN;
      in.read(reinterpret_cast<char*>(&v), 4);
      tokens(t, d) = v;
    }
  }
  require(in.good(), "token file truncated: " + path);
  return tokens;
}

TokenSequence PretrainedSpeechEncoderAdapter::extract(const audio::Waveform& w) const {
  check_input(w);
  const char* cache_dir = std::getenv("GGEN_ENCODER_CACHE");
  if (cache_dir == nullptr || cache_dir[0] == '\0') {
    throw ExternalModelUnavailable(
        "GGEN_ENCODER_CACHE is not set; the pretrained speech encoder runs out of "
        "process and its tokens must be cached (or GGEN_ENCODER_CMD configured)");
  }
  const std::string digest = waveform_digest(w);
  const std::string token_path = std::string(cache_dir) + "/" + digest + ".tok";

  if (!std::filesystem::exists(token_path)) {
    const char* cmd = std::getenv("GGEN_ENCODER_CMD");
    if (cmd == nullptr || cmd[0] == '\0') {
      throw ExternalModelUnavailable("no cached tokens for waveform " + digest +
                                     " and GGEN_ENCODER_CMD is not set");
    }
    const std::string raw_path = std::string(cache_dir) + "/" + digest + ".f64";
    std::ofstream raw(raw_path, std::ios::binary);
    require(raw.good(), "cannot write " + raw_path);
    raw.write(reinterpret_cast<const char*>(w.samples.data()),
              static_cast<std::streamsize>(w.samples.size() * sizeof(double)));
    raw.close();
    const std::string full = std::string(cmd) + " " + raw_path + " " + token_path;
    const int rc = std::system(full.c_str());
    std::filesystem::remove(raw_path);
    if (rc != 0 || !std::filesystem::exists(token_path)) {
      throw ExternalModelUnavailable("encoder command failed (exit " +
                                     std::to_string(rc) + "): " + full);
    }
  }

  TokenSequence out;
  out.tokens = read_token_file(token_path);
  require(out.tokens.cols() == dim_, "token file width " + std::to_string(out.tokens.cols()) +
                                         " does not match configured encoder dim " +
                                         std::to_string(dim_));
  out.token_rate = kTokenRate;
  return out;
}

GlobalStyleExtractor::GlobalStyleExtractor(Eigen::Index dim, int kernel, Rng& rng,
                                           const std::string& name)
    : depthwise_(dim, kernel, rng, name + ".depthwise"),
      pointwise_(dim, dim, rng, name + ".pointwise") {}

RowVector GlobalStyleExtractor::forward(const Matrix& tokens, Cache* cache) const {
  if (tokens.rows() < depthwise_.kernel()) {
    throw SequenceTooShort("style extractor needs at least " +
                           std::to_string(depthwise_.kernel()) + " tokens, got " +
                           std::to_string(tokens.rows()));
  }
  const Matrix dw = depthwise_.forward(tokens);
  const Matrix pw = pointwise_.forward(dw);
  if (cache != nullptr) {
    cache->tokens = tokens;
    cache->depthwise_out = dw;
  }
  return pw.colwise().mean();
}

Matrix GlobalStyleExtractor::backward(const Cache& cache, const RowVector& d_style) {
  const Eigen::Index rows = cache.depthwise_out.rows();
  // Mean pool spreads the gradient evenly over time.
  Matrix d_pw = d_style.replicate(rows, 1) / static_cast<double>(rows);
  Matrix d_dw = pointwise_.backward(cache.depthwise_out, d_pw);
  return depthwise_.backward(cache.tokens, d_dw);
}

void GlobalStyleExtractor::params(nn::ParamRefs& out) {
  depthwise_.params(out);
  pointwise_.params(out);
}

Downsampler::Downsampler(Eigen::Index d_in, Eigen::Index d_out, Rng& rng,
                         const std::string& name)
    : conv_(d_in, d_out, kKernel, kStride, nn::Pad::kReflect, rng, name + ".conv") {}

Matrix Downsampler::forward(const Matrix& tokens, Eigen::Index target_frames,
                            Cache* cache) const {
  require(target_frames >= 1, "downsampler target must be at least one frame");
  const Matrix latent = conv_.forward(tokens);
  const Eigen::Index latent_rows = latent.rows();

  Matrix out(target_frames, latent.cols());
  std::vector<Eigen::Index> lo(static_cast<size_t>(target_frames));
  std::vector<double> frac(static_cast<size_t>(target_frames));
  for (Eigen::Index t = 0; t < target_frames; ++t) {
    // Endpoint-aligned positions; a single output frame reads the middle.
    const double pos = (target_frames == 1)
                           ? 0.5 * static_cast<double>(latent_rows - 1)
                           : static_cast<double>(t) * static_cast<double>(latent_rows - 1) /
                                 static_cast<double>(target_frames - 1);
    Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(pos));
    if (i0 >= latent_rows - 1) i0 = latent_rows - 2;
    if (i0 < 0) i0 = 0;
    const double f = (latent_rows == 1) ? 0.0 : pos - static_cast<double>(i0);
    lo[static_cast<size_t>(t)] = i0;
    frac[static_cast<size_t>(t)] = f;
    if (latent_rows == 1) {
      out.row(t) = latent.row(0);
    } else {
      out.row(t) = (1.0 - f) * latent.row(i0) + f * latent.row(i0 + 1);
    }
  }
  if (cache != nullptr) {
    cache->x = tokens;
    cache->latent_rows = latent_rows;
    cache->lo = std::move(lo);
    cache->frac = std::move(frac);
  }
  return out;
}

Matrix Downsampler::backward(const Cache& cache, const Matrix& dy) {
  Matrix d_latent = Matrix::Zero(cache.latent_rows, dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const Eigen::Index i0 = cache.lo[static_cast<size_t>(t)];
    const double f = cache.frac[static_cast<size_t>(t)];
    if (cache.latent_rows == 1) {
      d_latent.row(0) += dy.row(t);
    } else {
      d_latent.row(i0) += (1.0 - f) * dy.row(t);
      d_latent.row(i0 + 1) += f * dy.row(t);
    }
  }
  return conv_.backward(cache.x, d_latent);
}

void Downsampler::params(nn::ParamRefs& out) { conv_.params(out); }

TimestepEmbedding::TimestepEmbedding(Eigen::Index dim, int64_t num_steps, Rng& rng,
                                     const std::string& name)
    : fc1_(dim, dim, rng, name + ".fc1"),
      fc2_(dim, dim, rng, name + ".fc2"),
      num_steps_(num_steps) {
  require(dim % 2 == 0, "step embedding dim must be even");
  require(num_steps >= 1, "step embedding needs at least one diffusion step");
}

RowVector TimestepEmbedding::sinusoid(int64_t n, Eigen::Index dim) {
  RowVector enc(dim);
  const Eigen::Index half = dim / 2;
  for (Eigen::Index i = 0; i < half; ++i) {
    const double freq =
        std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    enc(i) = std::sin(static_cast<double>(n) * freq);
    enc(half + i) = std::cos(static_cast<double>(n) * freq);
  }
  return enc;
}

RowVector TimestepEmbedding::forward(int64_t n, Cache* cache) const {
  if (n < 1 || n > num_steps_) {
    throw StepOutOfRange("diffusion step " + std::to_string(n) + " outside [1, " +
                         std::to_string(num_steps_) + "]");
  }
  Matrix enc = sinusoid(n, fc1_.in_dim());
  Matrix h1 = fc1_.forward(enc);
  Matrix out = fc2_.forward(nn::silu(h1));
  if (cache != nullptr) {
    cache->sinusoid = enc;
    cache->h1 = h1;
  }
  return out.row(0);
}

void TimestepEmbedding::backward(const Cache& cache, const RowVector& d_embed) {
  Matrix d_h1a = fc2_.backward(nn::silu(cache.h1), d_embed);
  Matrix d_h1 = nn::silu_backward(cache.h1, d_h1a);
  fc1_.backward(cache.sinusoid, d_h1);  // sinusoid gradient is discarded
}

void TimestepEmbedding::params(nn::ParamRefs& out) {
  fc1_.params(out);
  fc2_.params(out);
}

StyleMode style_mode_from_string(const std::string& s) {
  if (s == "fuzzy") return StyleMode::kFuzzy;
  if (s == "none") return StyleMode::kNone;
  if (s == "onehot") return StyleMode::kOnehot;
  throw Error("unknown style mode: " + s + " (expected fuzzy|none|onehot)");
}

std::string to_string(StyleMode m) {
  switch (m) {
    case StyleMode::kFuzzy: return "fuzzy";
    case StyleMode::kNone: return "none";
    case StyleMode::kOnehot: return "onehot";
  }
  return "?";
}

ConditionExtractor::ConditionExtractor(const ConditionConfig& cfg, Rng& rng) : cfg_(cfg) {
  require(cfg.d_token >= 1 && cfg.d_cond >= 1, "condition dims must be positive");
  if (cfg.style == StyleMode::kFuzzy) {
    style_ = GlobalStyleExtractor(cfg.d_token, cfg.style_kernel, rng, "cond.style");
  } else if (cfg.style == StyleMode::kOnehot) {
    require(cfg.num_styles >= 1, "one-hot style needs at least one label");
    onehot_table_.name = "cond.onehot_table";
    onehot_table_.value = rng.normal_matrix(cfg.num_styles, cfg.d_token) * 0.02;
  }
  down_ = Downsampler(cfg.d_token, cfg.d_cond, rng, "cond.down");
  step_ = TimestepEmbedding(cfg.d_cond, cfg.num_steps, rng, "cond.step");
}

Matrix ConditionExtractor::latents(const TokenSequence& z_a, Eigen::Index target_frames,
                                   LatentCache* cache, int style_label) const {
  require(z_a.tokens.cols() == cfg_.d_token,
          "token width " + std::to_string(z_a.tokens.cols()) + " does not match configured D' " +
              std::to_string(cfg_.d_token));
  Matrix x = z_a.tokens;
  bool used_style = false;
  if (cfg_.style == StyleMode::kFuzzy) {
    RowVector s = style_.forward(x, cache != nullptr ? &cache->style : nullptr);
    x.rowwise() += s;
    used_style = true;
  } else if (cfg_.style == StyleMode::kOnehot) {
    require(style_label >= 0 && style_label < cfg_.num_styles,
            "style label " + std::to_string(style_label) + " outside table of " +
                std::to_string(cfg_.num_styles));
    x.rowwise() += RowVector(onehot_table_.value.row(style_label));
  }

  Matrix z_l = down_.forward(x, target_frames, cache != nullptr ? &cache->down : nullptr);
  if (cache != nullptr) {
    cache->tokens = std::move(x);
    cache->style_label = style_label;
    cache->used_style = used_style;
  }
  return z_l;
}

RowVector ConditionExtractor::step_embedding(int64_t n,
                                             TimestepEmbedding::Cache* cache) const {
  return step_.forward(n, cache);
}

Matrix ConditionExtractor::condition(const TokenSequence& z_a, int64_t n,
                                     Eigen::Index target_frames, Cache* cache,
                                     int style_label) const {
  Matrix c = latents(z_a, target_frames, cache != nullptr ? &cache->latent : nullptr,
                     style_label);
  c.rowwise() += step_embedding(n, cache != nullptr ? &cache->step : nullptr);
  return c;
}

Matrix ConditionExtractor::condition(const LocalExtractor& local, const audio::Waveform& w,
                                     int64_t n, Eigen::Index target_frames, Cache* cache,
                                     int style_label) const {
  return condition(local.extract(w), n, target_frames, cache, style_label);
}

void ConditionExtractor::backward(const Cache& cache, const Matrix& dc) {
  // Broadcast additions split the gradient: the step embedding sees the
  // column sums, the downsampler sees dc unchanged.
  step_.backward(cache.step, dc.colwise().sum());
  Matrix dx = down_.backward(cache.latent.down, dc);
  if (cache.latent.used_style) {
    style_.backward(cache.latent.style, dx.colwise().sum());
  } else if (cfg_.style == StyleMode::kOnehot) {
    onehot_table_.ensure_grad();
    onehot_table_.grad.row(cache.latent.style_label) += dx.colwise().sum();
  }
  // dx w.r.t. the raw tokens is dropped: the local extractor is frozen.
}

void ConditionExtractor::params(nn::ParamRefs& out) {
  if (cfg_.style == StyleMode::kFuzzy) style_.params(out);
  if (cfg_.style == StyleMode::kOnehot) out.push_back(&onehot_table_);
  down_.params(out);
  step_.params(out);
}

}  // namespace ggen::cond
