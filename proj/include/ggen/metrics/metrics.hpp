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
// Objective evaluation: Fréchet distance between Gaussian summaries of
// gesture windows (raw space and learned embedding space), beat-synchrony
// scoring between audio and motion, and 2-D embedding exports for cluster
// plots.

#pragma once

#include "ggen/audio/waveform.hpp"
#include "ggen/motion/features.hpp"
#include "ggen/nn/layers.hpp"

#include <string>
#include <vector>

namespace ggen::metrics {

inline constexpr Eigen::Index kDefaultWindow = 20;   // frames per summary vector
inline constexpr double kDefaultBeatSigma = 0.1;     // seconds

struct GaussianSummary {
  RowVector mean;
  Matrix cov;  // symmetric, sample covariance
};

// Rows are observations. Needs at least two rows.
GaussianSummary summarize(const Matrix& rows);

// ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 sqrt(Sa Sb)), square root taken by
// eigendecomposition with negative eigenvalues clipped to zero. Small
// negative totals from roundoff clamp to exactly 0.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

// Flattened non-overlapping windows of clip features; the sample space both
// Fréchet metrics operate on. Partial trailing windows are dropped.
Matrix collect_windows(const std::vector<motion::MotionClip>& clips,
                       Eigen::Index window);

// Fréchet distance between window summaries of the two sets in raw feature
// space. Throws InsufficientData (< 2 windows a side), DimensionMismatch.
double fgd_raw(const std::vector<motion::MotionClip>& set_a,
               const std::vector<motion::MotionClip>& set_b,
               Eigen::Index window = kDefaultWindow);

// Temporal convolutional autoencoder over fixed windows; its bottleneck
// code is the learned feature space for fgd_feature. Three conv layers,
// code width 32.
class FeatureEmbedder {
 public:
  static constexpr Eigen::Index kCode = 32;

  FeatureEmbedder() = default;
  FeatureEmbedder(Eigen::Index feat_dim, Eigen::Index window, Rng& rng);

  // One 32-dim code per window (rows of `windows` are flattened windows).
  Matrix encode(const Matrix& windows) const;
  // Mean squared reconstruction error over the given windows.
  double reconstruction_error(const Matrix& windows) const;

  // Minibatch reconstruction training; returns the final batch error.
  double train(const Matrix& windows, int steps, int batch, Rng& rng, double lr = 1e-3);

  void save(const std::string& path) const;
  static FeatureEmbedder load(const std::string& path);

  Eigen::Index feat_dim() const { return feat_dim_; }
  Eigen::Index window() const { return window_; }
  // Identifies the architecture + weights in reports; metric values are
  // comparable only within one embedder version.
  std::string version_digest() const;

 private:
  Matrix forward(const Matrix& win_rows, Matrix* codes) const;
  void params(nn::ParamRefs& out);

  Eigen::Index feat_dim_ = 0, window_ = 0;
  nn::Conv1d enc1_, enc2_, dec_;
};

// Trains a fresh embedder on ground-truth clips only.
FeatureEmbedder train_embedder(const std::vector<motion::MotionClip>& corpus,
                               Eigen::Index window, int steps, uint64_t seed);

// Fréchet distance between bottleneck-code summaries.
double fgd_feature(const std::vector<motion::MotionClip>& set_a,
                   const std::vector<motion::MotionClip>& set_b,
                   const FeatureEmbedder& embedder);

struct BeatSequence {
  std::vector<double> times;  // seconds, strictly increasing
};

// Onset peaks of the spectral-flux envelope. Throws TooShort below 1 s.
BeatSequence detect_audio_beats(const audio::Waveform& w);

// Local minima of total joint angular speed under an adaptive threshold;
// constant poses yield no beats. Throws TooShort below 1 s.
BeatSequence detect_gesture_beats(const motion::MotionClip& clip);

// mean over gesture beats of exp(-min distance^2 / (2 sigma^2)); 1.0 for
// perfectly matched beats. Empty gesture beats score 0 by convention.
// Throws EmptyAudioBeats.
double beat_align(const BeatSequence& gesture, const BeatSequence& audio,
                  double sigma = kDefaultBeatSigma);

struct EmbeddingPoint {
  std::string clip_id;
  std::string label;
  double x = 0.0, y = 0.0;
};

// One 2-D point per clip: window codes (or raw windows when embedder is
// null) are mean-pooled per clip and projected onto the two leading
// principal axes, with a deterministic sign convention. A single clip maps
// to the origin. Throws InsufficientData when no clip yields a window.
std::vector<EmbeddingPoint> export_embeddings(
    const std::vector<motion::MotionClip>& clips,
    const std::vector<std::string>& ids, const std::vector<std::string>& labels,
    const FeatureEmbedder* embedder, Eigen::Index window = kDefaultWindow);

}  // namespace ggen::metrics
