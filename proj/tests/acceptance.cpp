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
// Release acceptance checks. Every check is a self-contained scenario with
// its tolerance pinned in code; the binary prints one [PASS]/[FAIL] line
// per check and exits with the number of failures. Pass check numbers as
// arguments to run a subset, e.g. `acceptance 4 8`.

#include "ggen/audio/waveform.hpp"
#include "ggen/cond/extractor.hpp"
#include "ggen/diffusion/diffusion.hpp"
#include "ggen/metrics/metrics.hpp"
#include "ggen/model/backbone.hpp"
#include "ggen/motion/bvh.hpp"
#include "ggen/motion/features.hpp"
#include "ggen/motion/rotation.hpp"
#include "ggen/motion/scaler.hpp"
#include "ggen/pipeline/pipeline.hpp"
#include "ggen/rng.hpp"

#include "fixtures.hpp"
#include "gradcheck.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

using namespace ggen;
namespace fs = std::filesystem;

namespace {

// A check failure carries the condition that broke; anything else thrown
// (library errors included) fails the check with its own message.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw CheckFailed(what);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  expect(in.good(), "missing artifact: " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct TempTree {
  fs::path root;
  explicit TempTree(const std::string& tag) {
    root = fs::temp_directory_path() / ("ggen_accept_" + tag);
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
  std::string dir(const std::string& name) const {
    fs::create_directories(root / name);
    return (root / name).string();
  }
  std::string file(const std::string& name) const { return (root / name).string(); }
};

// Tremolo tone with onset structure; the per-seed fundamental and envelope
// make each clip acoustically distinct.
audio::Waveform speech_like(double seconds, uint64_t seed) {
  audio::Waveform w;
  w.sample_rate = audio::kModelSampleRate;
  const auto n = static_cast<size_t>(seconds * w.sample_rate);
  w.samples.resize(n);
  Rng rng(seed);
  const double f0 = 180.0 + rng.uniform(0.0, 80.0);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / w.sample_rate;
    const double env = 0.5 * (1.0 + std::sin(2.0 * M_PI * 3.0 * t));
    w.samples[i] = 0.4 * env * std::sin(2.0 * M_PI * f0 * t) +
                   0.02 * std::sin(2.0 * M_PI * 7.0 * f0 * t);
  }
  return w;
}

void write_pair(const std::string& dir, const std::string& stem, double seconds,
                uint64_t seed) {
  audio::write_wav_float64(dir + "/" + stem + ".wav", speech_like(seconds, seed));
  const auto frames = static_cast<Eigen::Index>(seconds * motion::kTargetFps);
  motion::write_bvh_file(dir + "/" + stem + ".bvh",
                         test::synthetic_bvh(frames, motion::kTargetFps));
}

// Pushes every parameter away from its initialization so structural checks
// exercise nontrivial weights (zero-init gates included).
void randomize(model::NoisePredictor& net, uint64_t seed, double scale = 0.05) {
  Rng rng(seed);
  nn::ParamRefs refs;
  net.params(refs);
  for (nn::Parameter* p : refs) {
    p->value += rng.normal_matrix(p->value.rows(), p->value.cols(), scale);
  }
}

// ---------------------------------------------------------------------------
// 1. Diffusion algebra: schedule invariants, forward-noising moments, and
//    the reverse update against the closed-form posterior mean.
// ---------------------------------------------------------------------------

std::string check_diffusion_algebra() {
  using namespace diffusion;
  double worst_gap = 0.0;
  const std::pair<double, double> endpoints[] = {{1e-4, 5e-5}, {1e-4, 2e-2}};
  for (auto [bs, be] : endpoints) {
    const int64_t N = 1000;
    NoiseSchedule s = build_schedule(N, bs, be);
    expect(s.num_steps() == N, "schedule length");

    // Invariants, each recomputed independently of the library arrays.
    long double running = 1.0L;
    for (int64_t n = 1; n <= N; ++n) {
      const double frac = static_cast<double>(n - 1) / static_cast<double>(N - 1);
      const double beta = bs + (be - bs) * frac;
      expect(std::abs(s.beta(n - 1) - beta) < 1e-15, "beta interpolation");
      expect(beta > 0.0 && beta < 1.0, "beta range");
      expect(s.alpha(n - 1) == 1.0 - beta, "alpha complement");
      const long double prev = running;
      running *= 1.0L - static_cast<long double>(beta);
      expect(std::abs(s.alpha_bar(n - 1) - static_cast<double>(running)) < 1e-12,
             "alpha_bar running product");
      if (n >= 2) {
        expect(s.alpha_bar(n - 1) < s.alpha_bar(n - 2), "alpha_bar strictly decreasing");
        const double bt = static_cast<double>((1.0L - prev) / (1.0L - running)) * beta;
        expect(std::abs(s.beta_tilde(n - 1) - bt) < 1e-12, "posterior variance");
      } else {
        expect(s.beta_tilde(0) == 0.0, "posterior variance is exactly zero at step 1");
      }
    }

    // First and second moments of the forward noising at 3 standard errors
    // over 1e5 draws, at the first, middle, and final step.
    Rng rng(derive_seed(0xACC1, fmt("schedule-%g-%g", bs, be)));
    const int K = 100000;
    for (int64_t n : {int64_t{1}, N / 2, N}) {
      const double g0v = 0.7;
      const Matrix g0 = Matrix::Constant(1, K, g0v);
      const Matrix eps = rng.normal_matrix(1, K);
      const Matrix gn = forward_noise(g0, n, eps, s);
      const double ab = s.alpha_bar(n - 1);
      const double want_mean = std::sqrt(ab) * g0v;
      const double want_var = 1.0 - ab;
      const double m = gn.mean();
      const double v = (gn.array() - m).square().sum() / (K - 1);
      const double se_mean = std::sqrt(want_var / K);
      const double se_var = want_var * std::sqrt(2.0 / (K - 1));
      expect(std::abs(m - want_mean) < 3.0 * se_mean,
             fmt("forward mean off by %.2f SE at n=%lld", std::abs(m - want_mean) / se_mean,
                 static_cast<long long>(n)));
      expect(std::abs(v - want_var) < 3.0 * se_var,
             fmt("forward variance off by %.2f SE at n=%lld", std::abs(v - want_var) / se_var,
                 static_cast<long long>(n)));
    }

    // A denoiser handed the true noise turns the reverse update into the
    // posterior mean; the two expressions share no code path here.
    const Matrix g0 = rng.normal_matrix(4, 6);
    for (int64_t n = 1; n <= N; ++n) {
      const Matrix eps = rng.normal_matrix(4, 6);
      const Matrix gn = forward_noise(g0, n, eps, s);
      const double a = s.alpha(n - 1);
      const double ab = s.alpha_bar(n - 1);
      const double b = s.beta(n - 1);
      const Matrix step = (gn - (b / std::sqrt(1.0 - ab)) * eps) / std::sqrt(a);
      const Matrix ref = posterior_mean(g0, gn, n, s);
      worst_gap = std::max(worst_gap, (step - ref).cwiseAbs().maxCoeff());
    }
  }
  expect(worst_gap < 1e-6, fmt("reverse step vs posterior mean gap %.2e", worst_gap));
  return fmt("invariants + moments at 3 SE on both schedules; reverse-update gap %.1e",
             worst_gap);
}

// ---------------------------------------------------------------------------
// 2. Backbone structure: identity at init, causal non-leakage, windowed
//    shift equivariance, and finite-difference gradients, all at desk width.
// ---------------------------------------------------------------------------

std::string check_backbone_structure() {
  using namespace model;
  BackboneConfig desk = pipeline::desk_config().backbone;
  desk.d_features = 15;

  {  // Freshly initialized blocks are bitwise identity maps.
    Rng rng(201);
    AdaLnBlock block(desk, rng, "b");
    const Matrix h = rng.normal_matrix(16, desk.d_model);
    const Matrix c = rng.normal_matrix(16, desk.d_model);
    expect((block.forward(h, c) - h).cwiseAbs().maxCoeff() == 0.0,
           "block is not the identity at initialization");
  }

  {  // Rewriting frames t+1.. must leave predictions strictly before t
     // untouched for every t (the feature encoder reaches one frame ahead).
    Rng rng(203);
    NoisePredictor net(desk, rng);
    randomize(net, 205);
    const Eigen::Index T = 16;
    const Matrix c = rng.normal_matrix(T, desk.d_model);
    const Matrix g = rng.normal_matrix(T, desk.d_features);
    const Matrix base = net.forward(g, c);
    for (Eigen::Index t = 1; t + 1 < T; ++t) {
      Matrix g2 = g;
      g2.bottomRows(T - (t + 1)) = rng.normal_matrix(T - (t + 1), desk.d_features);
      const Matrix out = net.forward(g2, c);
      expect((out.topRows(t) - base.topRows(t)).cwiseAbs().maxCoeff() == 0.0,
             fmt("future frames leaked into the past at t=%lld", static_cast<long long>(t)));
      expect((out - base).cwiseAbs().maxCoeff() > 0.0, "perturbation had no effect at all");
    }
  }

  double worst_shift = 0.0;
  {  // Relative-position attention with a finite window: shifting the inputs
     // shifts the outputs once rows clear the window boundary.
    Rng rng(207);
    BackboneConfig cfg = desk;
    cfg.attention_window = 3;
    NoisePredictor net(cfg, rng);
    randomize(net, 209);
    AdaLnBlock& block = net.blocks()[0];
    const Eigen::Index T = 16, shift = 4;
    const Matrix h = rng.normal_matrix(T, cfg.d_model);
    const Matrix c = rng.normal_matrix(T, cfg.d_model);
    Matrix h2(T, cfg.d_model), c2(T, cfg.d_model);
    h2.topRows(shift) = rng.normal_matrix(shift, cfg.d_model);
    c2.topRows(shift) = rng.normal_matrix(shift, cfg.d_model);
    h2.bottomRows(T - shift) = h.topRows(T - shift);
    c2.bottomRows(T - shift) = c.topRows(T - shift);
    const Matrix o1 = block.forward(h, c);
    const Matrix o2 = block.forward(h2, c2);
    for (Eigen::Index i = shift + cfg.attention_window - 1; i < T; ++i) {
      worst_shift =
          std::max(worst_shift, (o2.row(i) - o1.row(i - shift)).cwiseAbs().maxCoeff());
    }
    expect(worst_shift < 1e-5, fmt("shift-equivariance gap %.2e", worst_shift));
  }

  double worst_grad = 0.0;
  {  // Analytic gradients against central differences on the full net.
    Rng rng(211);
    NoisePredictor net(desk, rng);
    randomize(net, 213);
    nn::ParamRefs params;
    net.params(params);
    const Eigen::Index T = 6;
    Matrix g = rng.normal_matrix(T, desk.d_features);
    Matrix c = rng.normal_matrix(T, desk.d_model);
    const Matrix probe = rng.normal_matrix(T, desk.d_features);
    auto loss = [&]() { return (net.forward(g, c).array() * probe.array()).sum(); };
    NoisePredictor::Cache cache;
    net.forward(g, c, &cache);
    test::zero_all(params);
    net.backward(cache, probe, nullptr);
    Rng pick(215);
    worst_grad = test::sampled_param_rel_error(params, loss, pick, 3);
    expect(worst_grad < 1e-3, fmt("gradient relative error %.2e", worst_grad));
  }
  return fmt("identity exact; no leakage on T=16; shift gap %.1e; grad rel err %.1e",
             worst_shift, worst_grad);
}

// ---------------------------------------------------------------------------
// 3. Alignment contract: the condition chain lands on exactly one condition
//    row per gesture frame for arbitrary clip lengths.
// ---------------------------------------------------------------------------

std::string check_alignment() {
  cond::StubFilterbankExtractor stub;
  cond::ConditionConfig cc;  // desk defaults: 80 -> 64, 100 steps
  Rng rng(301);
  cond::ConditionExtractor ce(cc, rng);

  auto tone = [](double seconds) {
    audio::Waveform w;
    w.sample_rate = audio::kModelSampleRate;
    const auto n = static_cast<size_t>(std::llround(seconds * w.sample_rate));
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / w.sample_rate;
      w.samples[i] = 0.3 * std::sin(2.0 * M_PI * 220.0 * t);
    }
    return w;
  };

  Rng lens(303);
  for (int i = 0; i < 100; ++i) {
    const double seconds = lens.uniform(2.0, 30.0);
    const audio::Waveform w = tone(seconds);
    const auto frames =
        static_cast<Eigen::Index>(std::llround(w.seconds() * motion::kTargetFps));
    const cond::TokenSequence tokens = stub.extract(w);
    const auto n = static_cast<int64_t>(lens.uniform_int(1, 100));
    const Matrix c = ce.condition(tokens, n, frames);
    expect(c.rows() == frames,
           fmt("condition rows %lld != gesture frames %lld at %.3f s",
               static_cast<long long>(c.rows()), static_cast<long long>(frames), seconds));
    expect(c.cols() == cc.d_cond, "condition width");
  }

  // The canonical clip length: 20 s is exactly 400 frames.
  const audio::Waveform canon = tone(20.0);
  const auto frames =
      static_cast<Eigen::Index>(std::llround(canon.seconds() * motion::kTargetFps));
  expect(frames == 400, fmt("20 s mapped to %lld frames", static_cast<long long>(frames)));
  expect(ce.condition(stub.extract(canon), 1, frames).rows() == 400,
         "20 s condition is not 400 rows");
  return "100 random lengths in [2 s, 30 s] aligned exactly; 20 s -> 400 frames";
}

// ---------------------------------------------------------------------------
// 4. Overfit-and-recover: a desk-profile model memorizes a 3-clip synthetic
//    corpus and its samples land far closer to the data than an untrained
//    model's samples do.
// ---------------------------------------------------------------------------

struct PairedSample {
  audio::Waveform wav;
  motion::MotionClip clip;
};

// Audio and motion drawn from the same per-clip envelope so the audio
// identifies the gesture: the tremolo that shapes the waveform also gates
// every motion channel.
PairedSample make_paired_sample(uint64_t seed, double seconds) {
  Rng rng(derive_seed(seed, "paired-clip"));
  const double f0 = 150.0 + rng.uniform(0.0, 120.0);
  const double env_rate = rng.uniform(1.0, 3.0);
  const double env_phase = rng.uniform(0.0, 2.0 * M_PI);
  auto env = [&](double t) {
    return 0.5 * (1.0 + std::sin(2.0 * M_PI * env_rate * t + env_phase));
  };

  PairedSample out;
  out.wav.sample_rate = audio::kModelSampleRate;
  const auto n = static_cast<size_t>(seconds * out.wav.sample_rate);
  out.wav.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / out.wav.sample_rate;
    out.wav.samples[i] = 0.5 * env(t) * std::sin(2.0 * M_PI * f0 * t);
  }

  const auto frames = static_cast<Eigen::Index>(std::llround(seconds * motion::kTargetFps));
  const Eigen::Index width = 9;  // one rotated joint + root velocities
  out.clip.features.resize(frames, width);
  out.clip.fps = motion::kTargetFps;
  for (Eigen::Index c = 0; c < width; ++c) {
    const double amp = rng.uniform(0.3, 0.8);
    const double freq = rng.uniform(0.2, 0.8);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (Eigen::Index t = 0; t < frames; ++t) {
      const double s = static_cast<double>(t) / motion::kTargetFps;
      out.clip.features(t, c) =
          amp * env(s) * std::sin(2.0 * M_PI * freq * s + phase);
    }
  }
  return out;
}

std::string check_overfit_and_recover() {
  const double seconds = 4.0;
  std::vector<PairedSample> data;
  for (uint64_t s : {1u, 2u, 3u}) data.push_back(make_paired_sample(s, seconds));

  std::vector<motion::MotionClip> train_set;
  for (const auto& d : data) train_set.push_back(d.clip);
  const motion::FeatureScaler scaler = motion::fit_scaler(train_set);

  cond::StubFilterbankExtractor stub;
  cond::ConditionConfig cc;  // desk defaults
  model::BackboneConfig bb = pipeline::desk_config().backbone;
  bb.d_features = train_set[0].dims();
  const diffusion::NoiseSchedule sched = diffusion::build_schedule(100, 1e-3, 0.2);

  std::vector<diffusion::ClipExample> corpus;
  for (const auto& d : data) {
    diffusion::ClipExample ex;
    ex.tokens = stub.extract(d.wav);
    ex.features = scaler.apply(d.clip.features);
    corpus.push_back(std::move(ex));
  }

  Rng init(derive_seed(401, "model-init"));
  model::NoisePredictor net(bb, init);
  cond::ConditionExtractor ce(cc, init);
  diffusion::TrainConfig tc;
  tc.batch_size = 4;
  tc.adam.lr = 1e-3;
  diffusion::Trainer trainer(&net, &ce, sched, tc, 403);

  int64_t hit_step = -1;
  double best = 1e300;
  const int64_t budget = 2000;
  for (int64_t i = 1; i <= budget; ++i) {
    const double l = trainer.step(corpus);
    best = std::min(best, l);
    if (hit_step < 0 && l < 0.05) hit_step = i;
  }
  expect(hit_step > 0, fmt("loss never fell below 0.05 in %lld steps (best %.4f)",
                           static_cast<long long>(budget), best));

  // Sample twice per training clip from the trained weights and from an
  // untouched initialization, conditioning on the training audio.
  const auto frames = train_set[0].frames();
  auto sample_set = [&](const model::NoisePredictor& m, const cond::ConditionExtractor& x) {
    std::vector<motion::MotionClip> out;
    Rng srng(405);
    for (const auto& ex : corpus) {
      for (int rep = 0; rep < 2; ++rep) {
        motion::MotionClip mc;
        mc.features =
            scaler.invert(diffusion::sample_features(m, x, ex.tokens, sched, frames, srng));
        mc.fps = motion::kTargetFps;
        out.push_back(std::move(mc));
      }
    }
    return out;
  };
  const auto trained = sample_set(net, ce);
  Rng fresh(derive_seed(407, "untrained"));
  model::NoisePredictor net0(bb, fresh);
  cond::ConditionExtractor ce0(cc, fresh);
  const auto untrained = sample_set(net0, ce0);

  const double fgd_trained = metrics::fgd_raw(trained, train_set);
  const double fgd_untrained = metrics::fgd_raw(untrained, train_set);
  expect(fgd_untrained >= 10.0 * fgd_trained,
         fmt("recovery ratio %.1fx below 10x (trained %.4f, untrained %.4f)",
             fgd_untrained / fgd_trained, fgd_trained, fgd_untrained));
  return fmt("loss<0.05 at step %lld (best %.4f); fgd_raw %.3f trained vs %.3f untrained (%.0fx)",
             static_cast<long long>(hit_step), best, fgd_trained, fgd_untrained,
             fgd_untrained / fgd_trained);
}

// ---------------------------------------------------------------------------
// 5. Ablation plumbing: every conditioning mode crossed with every style
//    mode constructs, trains a step, and samples with the right shapes.
// ---------------------------------------------------------------------------

std::string check_ablations() {
  const std::string modes[] = {"adaln", "cross_attention", "in_context", "concat"};
  const std::pair<cond::StyleMode, const char*> styles[] = {
      {cond::StyleMode::kFuzzy, "fuzzy"},
      {cond::StyleMode::kNone, "none"},
      {cond::StyleMode::kOnehot, "onehot"},
  };

  const audio::Waveform wav = speech_like(1.0, 501);
  cond::StubFilterbankExtractor stub;
  const cond::TokenSequence tokens = stub.extract(wav);
  const diffusion::NoiseSchedule sched = diffusion::build_schedule(100, 1e-3, 0.2);
  const Eigen::Index T = 20, F = 9;

  int combos = 0;
  for (const auto& mode : modes) {
    for (const auto& [style, style_name] : styles) {
      Rng rng(derive_seed(503, fmt("%s/%s", mode.c_str(), style_name)));
      model::BackboneConfig bb = pipeline::desk_config().backbone;
      bb.d_features = F;
      bb.mode = model::conditioning_mode_from_string(mode);
      cond::ConditionConfig cc;
      cc.style = style;
      model::NoisePredictor net(bb, rng);
      cond::ConditionExtractor ce(cc, rng);

      diffusion::ClipExample ex;
      ex.tokens = tokens;
      ex.features = rng.normal_matrix(T, F);
      ex.style_label = 1;
      diffusion::TrainConfig tc;
      tc.batch_size = 2;
      diffusion::Trainer trainer(&net, &ce, sched, tc, 505);
      const double loss = trainer.step({ex});
      expect(std::isfinite(loss), fmt("%s/%s: non-finite training loss", mode.c_str(),
                                      style_name));

      Rng srng(507);
      const Matrix out = diffusion::sample_features(net, ce, tokens, sched, T, srng, 1);
      expect(out.rows() == T && out.cols() == F,
             fmt("%s/%s: sample shape %lldx%lld", mode.c_str(), style_name,
                 static_cast<long long>(out.rows()), static_cast<long long>(out.cols())));
      expect(out.allFinite(), fmt("%s/%s: non-finite sample", mode.c_str(), style_name));
      ++combos;
    }
  }
  return fmt("%d conditioning x style combinations trained one step and sampled", combos);
}

// ---------------------------------------------------------------------------
// 6. Metrics: the Gaussian closed form, the beat-alignment kernel, and the
//    onset detector on a synthetic click track.
// ---------------------------------------------------------------------------

std::string check_metrics() {
  // Frechet distance against an independently computed closed form: the
  // trace term is evaluated through the eigenvalues of the (non-symmetric)
  // covariance product rather than the symmetrized square root.
  Rng rng(601);
  double worst_fd = 0.0;
  for (int i = 0; i < 20; ++i) {
    auto draw = [&]() {
      metrics::GaussianSummary s;
      s.mean = rng.normal_matrix(4, 1);
      const Matrix a = rng.normal_matrix(4, 4);
      s.cov = a * a.transpose() + 0.05 * Matrix::Identity(4, 4);
      return s;
    };
    const auto a = draw(), b = draw();
    const double got = metrics::frechet_distance(a, b);
    Eigen::EigenSolver<Matrix> eig(a.cov * b.cov);
    double tr_sqrt = 0.0;
    for (Eigen::Index k = 0; k < 4; ++k) {
      tr_sqrt += std::sqrt(std::max(0.0, eig.eigenvalues()(k).real()));
    }
    const double want = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
                        2.0 * tr_sqrt;
    worst_fd = std::max(worst_fd, std::abs(got - want));
  }
  expect(worst_fd < 1e-6, fmt("frechet closed-form gap %.2e", worst_fd));

  // Beat alignment: exact 1.0 on identical beats; the Gaussian kernel value
  // under a uniform offset small enough to keep partners nearest.
  metrics::BeatSequence g;
  for (int k = 0; k < 9; ++k) g.times.push_back(1.0 + k);
  expect(metrics::beat_align(g, g) == 1.0, "identical beats must score exactly 1");
  double worst_ba = 0.0;
  for (double d : {0.01, 0.05, 0.12, 0.3}) {
    metrics::BeatSequence a;
    for (double t : g.times) a.times.push_back(t + d);
    const double want = std::exp(-d * d / (2.0 * 0.1 * 0.1));
    worst_ba = std::max(worst_ba, std::abs(metrics::beat_align(g, a) - want));
  }
  expect(worst_ba < 1e-9, fmt("beat-align kernel gap %.2e", worst_ba));

  // Click track: nine decaying clicks at half-second marks.
  audio::Waveform w;
  w.sample_rate = audio::kModelSampleRate;
  w.samples.assign(5 * w.sample_rate, 0.0);
  std::vector<double> truth;
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.5 * k;
    truth.push_back(t);
    const auto s = static_cast<size_t>(t * w.sample_rate);
    for (size_t i = 0; i < 64; ++i) {
      w.samples[s + i] = 0.9 * std::exp(-static_cast<double>(i) / 12.0);
    }
  }
  const metrics::BeatSequence beats = metrics::detect_audio_beats(w);
  expect(beats.times.size() == truth.size(),
         fmt("detected %zu beats, expected %zu", beats.times.size(), truth.size()));
  double worst_click = 0.0;
  for (size_t k = 0; k < truth.size(); ++k) {
    worst_click = std::max(worst_click, std::abs(beats.times[k] - truth[k]));
  }
  expect(worst_click <= 0.025, fmt("click recovered %.1f ms off", worst_click * 1e3));
  return fmt("frechet gap %.1e; kernel gap %.1e; clicks within %.1f ms", worst_fd, worst_ba,
             worst_click * 1e3);
}

// ---------------------------------------------------------------------------
// 7. Data roundtrips: rotation encoding, BVH text, and the feature scaler.
// ---------------------------------------------------------------------------

std::string check_roundtrips() {
  Rng rng(701);
  double worst_rot = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    if (q.norm() < 1e-8) continue;
    q.normalize();
    const motion::Mat3 r = q.toRotationMatrix();
    const motion::Mat3 r2 = motion::expmap_to_matrix(motion::matrix_to_expmap(r));
    worst_rot = std::max(worst_rot, (r - r2).cwiseAbs().maxCoeff());
  }
  expect(worst_rot < 1e-9, fmt("rotation roundtrip error %.2e", worst_rot));

  const motion::BvhDocument doc = test::synthetic_bvh(60, motion::kTargetFps);
  const motion::MotionClip before = motion::clip_from_bvh(doc);
  const motion::BvhDocument reparsed = motion::parse_bvh(motion::write_bvh(doc));
  const motion::MotionClip after = motion::clip_from_bvh(reparsed);
  const double worst_bvh = (before.features - after.features).cwiseAbs().maxCoeff();
  expect(worst_bvh < 1e-4, fmt("BVH write/parse feature error %.2e", worst_bvh));

  std::vector<motion::MotionClip> clips(2);
  for (auto& c : clips) {
    c.features = rng.normal_matrix(40, 15);
    c.features.array().rowwise() *=
        (rng.normal_matrix(1, 15).array().abs() + 0.5).row(0);
    c.fps = motion::kTargetFps;
  }
  const motion::FeatureScaler sc = motion::fit_scaler(clips);
  const Matrix x = rng.normal_matrix(25, 15);
  const double worst_scaler =
      std::max((sc.invert(sc.apply(x)) - x).cwiseAbs().maxCoeff(),
               (sc.apply(sc.invert(x)) - x).cwiseAbs().maxCoeff());
  expect(worst_scaler < 1e-6, fmt("scaler roundtrip error %.2e", worst_scaler));
  return fmt("rotation %.1e over 1e4; BVH features %.1e; scaler %.1e", worst_rot, worst_bvh,
             worst_scaler);
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism: two fresh prepare -> train -> sample -> eval
//    runs produce byte-identical gestures and reports.
// ---------------------------------------------------------------------------

std::string check_determinism() {
  TempTree tree("determinism");
  const std::string data = tree.dir("data");
  for (int i = 0; i < 3; ++i) write_pair(data, "clip" + std::to_string(i), 2.0, 810 + i);

  struct RunOutput {
    std::string bvh0, bvh1, report, plot;
  };
  auto run = [&](const std::string& tag) {
    pipeline::RunConfig cfg = pipeline::desk_config();
    cfg.data_dir = data;
    cfg.work_dir = tree.dir(tag);
    cfg.clip_seconds = 2.0;
    cfg.train.steps = 50;
    cfg.train.checkpoint_every = 25;
    pipeline::cmd_prepare(cfg);
    const pipeline::TrainReport tr = pipeline::cmd_train(cfg);
    const std::string gen = tree.dir(tag + "_gen");
    pipeline::cmd_sample(cfg, data + "/clip0.wav", tr.checkpoint_path, 99, gen + "/s0.bvh");
    pipeline::cmd_sample(cfg, data + "/clip1.wav", tr.checkpoint_path, 100, gen + "/s1.bvh");
    const pipeline::EvalReport ev =
        pipeline::cmd_eval(cfg, gen, data, tree.file(tag + "_report.json"));
    RunOutput out;
    out.bvh0 = slurp(gen + "/s0.bvh");
    out.bvh1 = slurp(gen + "/s1.bvh");
    out.report = slurp(ev.report_path);
    out.plot = slurp(ev.plot_path);
    return out;
  };

  const RunOutput a = run("run_a");
  const RunOutput b = run("run_b");
  expect(a.bvh0 == b.bvh0 && a.bvh1 == b.bvh1, "sampled BVH differs between runs");
  expect(a.report == b.report, "metric report differs between runs");
  expect(a.plot == b.plot, "embedding table differs between runs");
  return fmt("BVH (%zu + %zu bytes), report (%zu bytes), and plot identical across runs",
             a.bvh0.size(), a.bvh1.size(), a.report.size());
}

struct Check {
  int id;
  const char* name;
  std::function<std::string()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Check> checks = {
      {1, "diffusion algebra", check_diffusion_algebra},
      {2, "backbone structure", check_backbone_structure},
      {3, "conditioning alignment", check_alignment},
      {4, "overfit and recover", check_overfit_and_recover},
      {5, "ablation plumbing", check_ablations},
      {6, "metric closed forms", check_metrics},
      {7, "data roundtrips", check_roundtrips},
      {8, "end-to-end determinism", check_determinism},
  };

  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& check : checks) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), check.id) == wanted.end()) {
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
      detail = check.run();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", check.id, check.name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
