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
// Denoising-diffusion machinery: the variance schedule and its derived
// arrays, closed-form forward noising, the training loop (noise-prediction
// MSE + one optimizer update per step), and annealed reverse sampling.

#pragma once

#include "ggen/cond/extractor.hpp"
#include "ggen/model/backbone.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ggen::diffusion {

// Arrays are 0-indexed by step-1: beta(0) is the step-1 variance.
struct NoiseSchedule {
  Vector beta;
  Vector alpha;       // 1 - beta
  Vector alpha_bar;   // running product of alpha
  Vector beta_tilde;  // posterior variance; exactly 0 at step 1
  int64_t num_steps() const { return beta.size(); }
};

// Linear interpolation of beta between the endpoints (either direction).
// Throws InvalidEndpoints unless both lie in (0, 1).
NoiseSchedule build_schedule(int64_t num_steps, double beta_start, double beta_end);

// g_n = sqrt(alpha_bar_n) g0 + sqrt(1 - alpha_bar_n) eps. The noise is
// injected by the caller so tests can pin it.
Matrix forward_noise(const Matrix& g0, int64_t n, const Matrix& eps,
                     const NoiseSchedule& sched);

// Closed-form mean of the reverse-posterior q(g_{n-1} | g_n, g0); the
// independent reference the sampler's update is checked against.
Matrix posterior_mean(const Matrix& g0, const Matrix& g_n, int64_t n,
                      const NoiseSchedule& sched);

// One prepared training example: frozen audio tokens plus scaled gesture
// features of matching duration.
struct ClipExample {
  cond::TokenSequence tokens;
  Matrix features;  // T x F, scaled space
  int style_label = 0;
};

struct TrainConfig {
  int64_t batch_size = 4;
  nn::AdamOptimizer::Config adam;
};

// Owns the optimizer and the training randomness; borrows the model parts.
class Trainer {
 public:
  Trainer(model::NoisePredictor* net, cond::ConditionExtractor* ce,
          const NoiseSchedule& sched, const TrainConfig& cfg, uint64_t seed);

  // Draws batch_size (clip, step, noise) triples, takes one optimizer step,
  // returns the batch loss. Throws NonFiniteLoss on divergence.
  double step(const std::vector<ClipExample>& corpus);

  int64_t steps() const { return steps_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  Rng& rng() { return rng_; }
  nn::AdamOptimizer& optimizer() { return opt_; }
  const nn::ParamRefs& params() const { return params_; }

  // Resume support: counters and draw stream restored from a checkpoint
  // (optimizer moments are restored separately on the optimizer).
  void restore(int64_t steps, const std::string& rng_state);

  // Test hook: replaces the network with a closed-form denoiser
  // (g_n, condition, true-noise) -> predicted noise. No gradient step runs
  // while set.
  std::function<Matrix(const Matrix&, const Matrix&, const Matrix&)> oracle;

 private:
  model::NoisePredictor* net_;
  cond::ConditionExtractor* ce_;
  NoiseSchedule sched_;
  TrainConfig cfg_;
  Rng rng_;
  nn::ParamRefs params_;
  nn::AdamOptimizer opt_;
  int64_t steps_ = 0;
  std::vector<double> loss_history_;
};

// Annealed reverse diffusion from standard-normal noise, conditioned on one
// clip's audio tokens. The audio latents are computed once; each step adds
// its own step embedding. Draw order per run: the initial field first, then
// one noise field after each step n > 1. Throws NonFiniteSample.
Matrix sample_features(const model::NoisePredictor& net,
                       const cond::ConditionExtractor& ce,
                       const cond::TokenSequence& tokens, const NoiseSchedule& sched,
                       Eigen::Index frames, Rng& rng, int style_label = 0);

}  // namespace ggen::diffusion
