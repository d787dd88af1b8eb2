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

#include "ggen/diffusion/diffusion.hpp"

#include <cmath>

namespace ggen::diffusion {
namespace {

void check_step(int64_t n, const NoiseSchedule& sched) {
  if (n < 1 || n > sched.num_steps()) {
    throw StepOutOfRange("diffusion step " + std::to_string(n) + " outside [1, " +
                         std::to_string(sched.num_steps()) + "]");
  }
}

}  // namespace

NoiseSchedule build_schedule(int64_t num_steps, double beta_start, double beta_end) {
  require(num_steps >= 1, "schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_start < 1.0 && beta_end > 0.0 && beta_end < 1.0)) {
    throw InvalidEndpoints("beta endpoints must lie in (0, 1), got " +
                           std::to_string(beta_start) + " and " +
                           std::to_string(beta_end));
  }
  NoiseSchedule s;
  s.beta.resize(num_steps);
  s.alpha.resize(num_steps);
  s.alpha_bar.resize(num_steps);
  s.beta_tilde.resize(num_steps);
  double bar = 1.0;  // alpha_bar at step 0 by convention
  for (int64_t i = 0; i < num_steps; ++i) {
    const double frac =
        num_steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(num_steps - 1);
    const double prev_bar = bar;
    s.beta(i) = beta_start + (beta_end - beta_start) * frac;
    s.alpha(i) = 1.0 - s.beta(i);
    bar *= s.alpha(i);
    s.alpha_bar(i) = bar;
    s.beta_tilde(i) = (1.0 - prev_bar) / (1.0 - bar) * s.beta(i);
  }
  // Construction-time checks for every schedule, not just tested ones.
  require(s.beta.minCoeff() > 0.0 && s.beta.maxCoeff() < 1.0, "beta escaped (0,1)");
  for (int64_t i = 1; i < num_steps; ++i) {
    require(s.alpha_bar(i) < s.alpha_bar(i - 1), "alpha_bar must strictly decrease");
  }
  require(s.beta_tilde(0) == 0.0, "posterior variance at step 1 must be zero");
  return s;
}

Matrix forward_noise(const Matrix& g0, int64_t n, const Matrix& eps,
                     const NoiseSchedule& sched) {
  check_step(n, sched);
  if (g0.rows() != eps.rows() || g0.cols() != eps.cols()) {
    throw ShapeMismatch("noise shape " + std::to_string(eps.rows()) + "x" +
                        std::to_string(eps.cols()) + " does not match features " +
                        std::to_string(g0.rows()) + "x" + std::to_string(g0.cols()));
  }
  const double bar = sched.alpha_bar(n - 1);
  return std::sqrt(bar) * g0 + std::sqrt(1.0 - bar) * eps;
}

Matrix posterior_mean(const Matrix& g0, const Matrix& g_n, int64_t n,
                      const NoiseSchedule& sched) {
  check_step(n, sched);
  const double bar = sched.alpha_bar(n - 1);
  const double prev_bar = n == 1 ? 1.0 : sched.alpha_bar(n - 2);
  const double w0 = std::sqrt(prev_bar) * sched.beta(n - 1) / (1.0 - bar);
  const double wn = std::sqrt(sched.alpha(n - 1)) * (1.0 - prev_bar) / (1.0 - bar);
  return w0 * g0 + wn * g_n;
}

Trainer::Trainer(model::NoisePredictor* net, cond::ConditionExtractor* ce,
                 const NoiseSchedule& sched, const TrainConfig& cfg, uint64_t seed)
    : net_(net), ce_(ce), sched_(sched), cfg_(cfg), rng_(seed), opt_(cfg.adam) {
  require(net_ != nullptr && ce_ != nullptr, "trainer needs a model and a condition path");
  require(cfg_.batch_size >= 1, "batch size must be positive");
  require(sched_.num_steps() == ce_->config().num_steps,
          "schedule length does not match the condition path's step range");
  net_->params(params_);
  ce_->params(params_);
}

double Trainer::step(const std::vector<ClipExample>& corpus) {
  require(!corpus.empty(), "training corpus is empty");

  const Eigen::Index feat_dim = net_->config().d_features;
  double loss = 0.0;
  const int64_t batch = cfg_.batch_size;

  for (int64_t b = 0; b < batch; ++b) {
    const auto& clip =
        corpus[static_cast<size_t>(rng_.uniform_int(0, static_cast<int64_t>(corpus.size()) - 1))];
    require(clip.features.cols() == feat_dim, "clip feature width mismatch");
    const Eigen::Index frames = clip.features.rows();

    const int64_t n = rng_.uniform_int(1, sched_.num_steps());
    const Matrix eps = rng_.normal_matrix(frames, feat_dim);
    const Matrix g_n = forward_noise(clip.features, n, eps, sched_);

    if (oracle) {
      const Matrix c = ce_->condition(clip.tokens, n, frames, nullptr, clip.style_label);
      const Matrix eps_hat = oracle(g_n, c, eps);
      loss += (eps_hat - eps).squaredNorm() /
              static_cast<double>(batch * frames * feat_dim);
      continue;
    }

    cond::ConditionExtractor::Cache ccache;
    model::NoisePredictor::Cache ncache;
    const Matrix c = ce_->condition(clip.tokens, n, frames, &ccache, clip.style_label);
    const Matrix eps_hat = net_->forward(g_n, c, &ncache);

    const Matrix diff = eps_hat - eps;
    const double denom = static_cast<double>(batch * frames * feat_dim);
    loss += diff.squaredNorm() / denom;

    Matrix d_eps = (2.0 / denom) * diff;
    Matrix dc = Matrix::Zero(c.rows(), c.cols());
    net_->backward(ncache, d_eps, &dc);
    ce_->backward(ccache, dc);
  }

  if (!std::isfinite(loss)) {
    throw NonFiniteLoss("training diverged at step " + std::to_string(steps_ + 1) +
                        " (loss is not finite)");
  }
  if (!oracle) opt_.step(params_);
  ++steps_;
  loss_history_.push_back(loss);
  return loss;
}

void Trainer::restore(int64_t steps, const std::string& rng_state) {
  steps_ = steps;
  rng_.deserialize(rng_state);
}

Matrix sample_features(const model::NoisePredictor& net,
                       const cond::ConditionExtractor& ce,
                       const cond::TokenSequence& tokens, const NoiseSchedule& sched,
                       Eigen::Index frames, Rng& rng, int style_label) {
  require(frames >= 1, "sampling needs at least one frame");
  const Eigen::Index feat_dim = net.config().d_features;

  // The audio latents do not depend on the step; compute them once.
  const Matrix z_l = ce.latents(tokens, frames, nullptr, style_label);

  Matrix g = rng.normal_matrix(frames, feat_dim);
  for (int64_t n = sched.num_steps(); n >= 1; --n) {
    Matrix c = z_l;
    c.rowwise() += ce.step_embedding(n);
    const Matrix eps_hat = net.forward(g, c);

    const double bar = sched.alpha_bar(n - 1);
    g = (g - (sched.beta(n - 1) / std::sqrt(1.0 - bar)) * eps_hat) /
        std::sqrt(sched.alpha(n - 1));
    if (n > 1) {
      g += std::sqrt(sched.beta_tilde(n - 1)) * rng.normal_matrix(frames, feat_dim);
    }
    if (!g.allFinite()) {
      throw NonFiniteSample("reverse diffusion produced NaN/Inf at step " +
                            std::to_string(n));
    }
  }
  return g;
}

}  // namespace ggen::diffusion
