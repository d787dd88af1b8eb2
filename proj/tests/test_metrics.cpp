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

#include "ggen/metrics/metrics.hpp"

#include "ggen/rng.hpp"

#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>

using namespace ggen;
using metrics::BeatSequence;
using metrics::GaussianSummary;

namespace {

// Clip whose feature matrix is filled by fn(t, c); width 3*joints + 6 so the
// same clips work for both the Fréchet metrics and the beat detector.
motion::MotionClip make_clip(Eigen::Index frames, Eigen::Index joints, double fps,
                             const std::function<double(Eigen::Index, Eigen::Index)>& fn) {
  motion::MotionClip clip;
  clip.fps = fps;
  clip.features.resize(frames, 3 * joints + 6);
  for (Eigen::Index t = 0; t < frames; ++t)
    for (Eigen::Index c = 0; c < clip.features.cols(); ++c)
      clip.features(t, c) = fn(t, c);
  return clip;
}

motion::MotionClip noise_clip(Eigen::Index frames, Eigen::Index joints, Rng& rng,
                              double shift = 0.0, Eigen::Index shift_col = 0) {
  motion::MotionClip clip;
  clip.fps = 20.0;
  clip.features = rng.normal_matrix(frames, 3 * joints + 6);
  clip.features.col(shift_col).array() += shift;
  return clip;
}

GaussianSummary make_summary(const RowVector& mean, const Matrix& cov) {
  GaussianSummary s;
  s.mean = mean;
  s.cov = cov;
  return s;
}

// Independent evaluation of the Fréchet formula: the cross term uses the
// (generally non-symmetric) product Sa*Sb and a general eigensolver, unlike
// the implementation's symmetrized square-root route.
double frechet_oracle(const GaussianSummary& a, const GaussianSummary& b) {
  Eigen::EigenSolver<Matrix> eig(a.cov * b.cov);
  double tr_cross = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    tr_cross += std::sqrt(std::max(0.0, eig.eigenvalues()[i].real()));
  return (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
         2.0 * tr_cross;
}

Matrix random_spd(Eigen::Index d, Rng& rng) {
  Matrix a = rng.normal_matrix(d, d);
  return a * a.transpose() + 0.2 * Matrix::Identity(d, d);
}

double mean_silhouette(const std::vector<metrics::EmbeddingPoint>& pts) {
  const size_t n = pts.size();
  auto dist = [&](size_t i, size_t j) {
    return std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
  };
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double intra = 0.0, inter = 0.0;
    int n_intra = 0, n_inter = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (pts[j].label == pts[i].label) {
        intra += dist(i, j);
        ++n_intra;
      } else {
        inter += dist(i, j);
        ++n_inter;
      }
    }
    const double a = intra / n_intra, b = inter / n_inter;
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_CASE("summarize matches hand-computed moments") {
  Matrix rows(3, 2);
  rows << 1.0, 2.0, 3.0, 4.0, 5.0, 9.0;
  const auto s = metrics::summarize(rows);
  CHECK(s.mean(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.mean(1) == doctest::Approx(5.0).epsilon(1e-12));
  // Sample covariance: var0 = ((-2)^2+0+2^2)/2 = 4, var1 = (9+1+16)/2 = 13,
  // cov01 = ((-2)(-3)+0+2*4)/2 = 7.
  CHECK(s.cov(0, 0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.cov(1, 1) == doctest::Approx(13.0).epsilon(1e-12));
  CHECK(s.cov(0, 1) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(s.cov(1, 0) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK_THROWS_AS(metrics::summarize(rows.topRows(1)), InsufficientData);
}

TEST_CASE("frechet_distance closed forms") {
  Rng rng(101);

  SUBCASE("identical summaries give zero") {
    const auto s = make_summary(RowVector::Constant(3, 0.7), random_spd(3, rng));
    CHECK(metrics::frechet_distance(s, s) == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("identity covariances reduce to squared mean distance") {
    RowVector m(3);
    m << 0.5, -1.25, 2.0;
    const auto a = make_summary(RowVector::Zero(3), Matrix::Identity(3, 3));
    const auto b = make_summary(m, Matrix::Identity(3, 3));
    CHECK(metrics::frechet_distance(a, b) ==
          doctest::Approx(m.squaredNorm()).epsilon(1e-12));
  }
  SUBCASE("diagonal covariances") {
    // For commuting covariances the trace term is sum (sqrt(ai)-sqrt(bi))^2.
    Vector da(3), db(3);
    da << 1.0, 4.0, 0.25;
    db << 9.0, 1.0, 1.0;
    RowVector ma = RowVector::Zero(3), mb = RowVector::Constant(3, 1.0);
    const auto a = make_summary(ma, Matrix(da.asDiagonal()));
    const auto b = make_summary(mb, Matrix(db.asDiagonal()));
    double expect = (ma - mb).squaredNorm();
    for (int i = 0; i < 3; ++i)
      expect += std::pow(std::sqrt(da[i]) - std::sqrt(db[i]), 2);
    CHECK(metrics::frechet_distance(a, b) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("random 4-D summaries match an independent evaluation") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = make_summary(rng.normal_matrix(1, 4), random_spd(4, rng));
      const auto b = make_summary(rng.normal_matrix(1, 4), random_spd(4, rng));
      const double got = metrics::frechet_distance(a, b);
      CHECK(got == doctest::Approx(frechet_oracle(a, b)).epsilon(1e-6));
      CHECK(got >= 0.0);
      // Symmetry.
      CHECK(got == doctest::Approx(metrics::frechet_distance(b, a)).epsilon(1e-9));
    }
  }
  SUBCASE("dimension mismatch throws") {
    const auto a = make_summary(RowVector::Zero(3), Matrix::Identity(3, 3));
    const auto b = make_summary(RowVector::Zero(4), Matrix::Identity(4, 4));
    CHECK_THROWS_AS(metrics::frechet_distance(a, b), DimensionMismatch);
  }
}

TEST_CASE("collect_windows flattens frame-major and drops the tail") {
  auto clip = make_clip(45, 1, 20.0,
                        [](Eigen::Index t, Eigen::Index c) { return 100.0 * t + c; });
  const Matrix w = metrics::collect_windows({clip}, 20);
  REQUIRE(w.rows() == 2);  // 45 frames -> 2 full windows, 5 frames dropped
  REQUIRE(w.cols() == 20 * 9);
  for (Eigen::Index t = 0; t < 20; ++t)
    for (Eigen::Index c = 0; c < 9; ++c) {
      CHECK(w(0, t * 9 + c) == 100.0 * t + c);
      CHECK(w(1, t * 9 + c) == 100.0 * (t + 20) + c);
    }

  auto other = make_clip(40, 2, 20.0, [](auto, auto) { return 0.0; });
  CHECK_THROWS_AS(metrics::collect_windows({clip, other}, 20), DimensionMismatch);
}

TEST_CASE("fgd_raw set semantics") {
  Rng rng(202);
  std::vector<motion::MotionClip> set_a, set_b;
  for (int i = 0; i < 4; ++i) {
    set_a.push_back(noise_clip(90, 1, rng));
    set_b.push_back(noise_clip(90, 1, rng));
  }

  SUBCASE("identical sets score zero") {
    CHECK(metrics::fgd_raw(set_a, set_a) == doctest::Approx(0.0).epsilon(1e-8));
  }
  SUBCASE("clip order within a set does not matter") {
    std::vector<motion::MotionClip> permuted = {set_a[2], set_a[0], set_a[3], set_a[1]};
    CHECK(metrics::fgd_raw(set_a, permuted) == doctest::Approx(0.0).epsilon(1e-6));
    const double d_ab = metrics::fgd_raw(set_a, set_b);
    CHECK(metrics::fgd_raw(permuted, set_b) == doctest::Approx(d_ab).epsilon(1e-6));
  }
  SUBCASE("mean shift grows the distance monotonically") {
    double prev = metrics::fgd_raw(set_a, set_a);
    for (const double k : {0.5, 1.0, 2.0, 4.0}) {
      std::vector<motion::MotionClip> shifted = set_a;
      for (auto& c : shifted) c.features.col(0).array() += k;
      const double d = metrics::fgd_raw(set_a, shifted);
      CHECK(d > prev);
      prev = d;
    }
  }
  SUBCASE("insufficient data throws") {
    CHECK_THROWS_AS(metrics::fgd_raw({set_a[0]}, set_b), InsufficientData);
    std::vector<motion::MotionClip> tiny = {make_clip(5, 1, 20.0, [](auto, auto) { return 0.0; }),
                                            make_clip(5, 1, 20.0, [](auto, auto) { return 0.0; })};
    CHECK_THROWS_AS(metrics::fgd_raw(tiny, tiny), InsufficientData);
  }
}

TEST_CASE("fgd_raw approaches the analytic value on synthetic Gaussians") {
  // Frames iid N(0, I) vs N(mu, I): flattened windows are again Gaussian with
  // identity covariance, so the true distance is window * ||mu||^2.
  Rng rng(303);
  const Eigen::Index window = 2, frames = 600;
  const double shift = 0.4;
  std::vector<motion::MotionClip> base, shifted, base2;
  for (int i = 0; i < 10; ++i) {
    base.push_back(noise_clip(frames, 0, rng));  // width 6
    shifted.push_back(noise_clip(frames, 0, rng));
    shifted.back().features.array() += shift;
    base2.push_back(noise_clip(frames, 0, rng));
  }
  const double analytic = static_cast<double>(window) * 6.0 * shift * shift;
  const double got = metrics::fgd_raw(base, shifted, window);
  CHECK(got == doctest::Approx(analytic).epsilon(0.2));
  // Same distribution: only estimator bias remains, far below the signal.
  CHECK(metrics::fgd_raw(base, base2, window) < 0.15 * analytic);
}

TEST_CASE("feature embedder trains, persists, and separates sets") {
  Rng rng(404);
  // Structured corpus: smooth sinusoids with per-clip phase, mild noise.
  auto structured = [&](int n, uint64_t seed) {
    Rng local(seed);
    std::vector<motion::MotionClip> clips;
    for (int i = 0; i < n; ++i) {
      const double phase = local.uniform(0.0, 6.28);
      auto clip = make_clip(80, 1, 20.0, [&](Eigen::Index t, Eigen::Index c) {
        return std::sin(0.3 * static_cast<double>(t) + phase + 0.5 * c);
      });
      clip.features += 0.05 * local.normal_matrix(80, 9);
      clips.push_back(std::move(clip));
    }
    return clips;
  };
  const auto corpus = structured(6, 1);
  const auto held_out = structured(4, 2);
  const Matrix held_windows = metrics::collect_windows(held_out, 20);

  Rng init_rng(derive_seed(404, "untrained"));
  metrics::FeatureEmbedder untrained(9, 20, init_rng);
  const double before = untrained.reconstruction_error(held_windows);

  const auto trained = metrics::train_embedder(corpus, 20, /*steps=*/400, /*seed=*/7);
  const double after = trained.reconstruction_error(held_windows);
  CHECK(after < before);

  SUBCASE("save/load reproduces codes and version digest") {
    const std::string path = "embedder_roundtrip.json";
    trained.save(path);
    const auto loaded = metrics::FeatureEmbedder::load(path);
    std::remove(path.c_str());
    CHECK(loaded.window() == trained.window());
    CHECK(loaded.feat_dim() == trained.feat_dim());
    CHECK(loaded.version_digest() == trained.version_digest());
    const Matrix a = trained.encode(held_windows);
    const Matrix b = loaded.encode(held_windows);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // bitwise
    CHECK(trained.version_digest() != untrained.version_digest());
  }
  SUBCASE("fgd_feature set semantics") {
    CHECK(metrics::fgd_feature(corpus, corpus, trained) ==
          doctest::Approx(0.0).epsilon(1e-8));
    std::vector<motion::MotionClip> permuted = {corpus[3], corpus[0], corpus[5],
                                                corpus[1], corpus[4], corpus[2]};
    CHECK(metrics::fgd_feature(corpus, permuted, trained) ==
          doctest::Approx(0.0).epsilon(1e-6));
    std::vector<motion::MotionClip> far = corpus;
    for (auto& c : far) c.features.array() += 3.0;
    CHECK(metrics::fgd_feature(corpus, far, trained) > 1e-3);
    CHECK_THROWS_AS(metrics::fgd_feature({corpus[0]}, corpus, trained),
                    InsufficientData);
  }
}

TEST_CASE("audio beats land on metronome clicks") {
  const int rate = 16000;
  audio::Waveform w;
  w.sample_rate = rate;
  w.samples.assign(5 * rate, 0.0);
  std::vector<double> truth;
  for (int k = 1; k <= 9; ++k) {
    const double t = 0.5 * k;
    truth.push_back(t);
    const auto s = static_cast<size_t>(t * rate);
    // Short decaying click.
    for (size_t i = 0; i < 64 && s + i < w.samples.size(); ++i)
      w.samples[s + i] = 0.9 * std::exp(-static_cast<double>(i) / 12.0);
  }
  const auto beats = metrics::detect_audio_beats(w);
  REQUIRE(beats.times.size() == truth.size());
  for (size_t i = 0; i < truth.size(); ++i)
    CHECK(std::abs(beats.times[i] - truth[i]) <= 0.025);

  audio::Waveform brief;
  brief.sample_rate = rate;
  brief.samples.assign(rate / 2, 0.0);
  CHECK_THROWS_AS(metrics::detect_audio_beats(brief), TooShort);
}

TEST_CASE("gesture beats follow speed minima") {
  SUBCASE("constant pose yields no beats") {
    const auto still = make_clip(100, 2, 20.0, [](auto, auto) { return 0.4; });
    CHECK(metrics::detect_gesture_beats(still).times.empty());
  }
  SUBCASE("sinusoidal speed of period one second spaces beats one second apart") {
    // Integrate speed 1 + sin(2 pi t) into a single joint channel so the
    // frame-difference speed is sinusoidal with period 1 s.
    const double fps = 20.0;
    std::vector<double> pos(121, 0.0);
    for (size_t t = 1; t < pos.size(); ++t) {
      const double tt = static_cast<double>(t - 1) / fps;
      pos[t] = pos[t - 1] + (1.0 + std::sin(2.0 * M_PI * tt)) / fps;
    }
    auto clip = make_clip(121, 1, fps, [&](Eigen::Index t, Eigen::Index c) {
      return c == 0 ? pos[static_cast<size_t>(t)] : 0.0;
    });
    const auto beats = metrics::detect_gesture_beats(clip);
    REQUIRE(beats.times.size() >= 4);
    for (size_t i = 1; i < beats.times.size(); ++i)
      CHECK(beats.times[i] - beats.times[i - 1] == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("short or malformed clips throw") {
    const auto brief = make_clip(10, 1, 20.0, [](auto t, auto) { return 0.1 * t; });
    CHECK_THROWS_AS(metrics::detect_gesture_beats(brief), TooShort);
    motion::MotionClip bad;
    bad.fps = 20.0;
    bad.features = Matrix::Zero(40, 8);  // not 3S + 6
    CHECK_THROWS_AS(metrics::detect_gesture_beats(bad), LayoutMismatch);
  }
}

TEST_CASE("beat_align closed forms and invariants") {
  BeatSequence audio;
  for (int k = 0; k < 8; ++k) audio.times.push_back(1.0 + k);

  SUBCASE("identical sequences score exactly one") {
    CHECK(metrics::beat_align(audio, audio) == 1.0);
  }
  SUBCASE("uniform offset follows the Gaussian kernel exactly") {
    const double sigma = metrics::kDefaultBeatSigma;
    for (const double delta : {0.01, 0.05, 0.12, 0.3}) {
      BeatSequence g;
      for (const double t : audio.times) g.times.push_back(t + delta);
      const double expect = std::exp(-delta * delta / (2.0 * sigma * sigma));
      CHECK(metrics::beat_align(g, audio) == doctest::Approx(expect).epsilon(1e-9));
    }
  }
  SUBCASE("empty gesture scores zero; empty audio throws") {
    CHECK(metrics::beat_align(BeatSequence{}, audio) == 0.0);
    CHECK_THROWS_AS(metrics::beat_align(audio, BeatSequence{}), EmptyAudioBeats);
  }
  SUBCASE("bounded in [0, 1] on random sequences") {
    Rng rng(505);
    for (int trial = 0; trial < 10; ++trial) {
      BeatSequence g;
      double t = 0.0;
      for (int k = 0; k < 12; ++k) g.times.push_back(t += rng.uniform(0.05, 1.5));
      const double v = metrics::beat_align(g, audio);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      CHECK(v < 1.0);  // random beats score below perfectly matched ones
    }
  }
  SUBCASE("invariant to a common time shift") {
    BeatSequence g;
    for (const double t : audio.times) g.times.push_back(t + 0.07);
    const double base = metrics::beat_align(g, audio);
    BeatSequence g2 = g, a2 = audio;
    for (auto& t : g2.times) t += 17.3;
    for (auto& t : a2.times) t += 17.3;
    CHECK(metrics::beat_align(g2, a2) == doctest::Approx(base).epsilon(1e-12));
  }
  SUBCASE("monotone non-increasing as the offset grows") {
    double prev = 1.1;
    for (double delta = 0.0; delta <= 0.451; delta += 0.05) {
      BeatSequence g;
      for (const double t : audio.times) g.times.push_back(t + delta);
      const double v = metrics::beat_align(g, audio);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("embedding export separates clusters deterministically") {
  Rng rng(606);
  std::vector<motion::MotionClip> clips;
  std::vector<std::string> ids, labels;
  for (int i = 0; i < 6; ++i) {
    const bool first = i < 3;
    auto clip = noise_clip(40, 1, rng);
    clip.features *= 0.1;
    if (!first) clip.features.array() += 5.0;
    clips.push_back(std::move(clip));
    ids.push_back("clip" + std::to_string(i));
    labels.push_back(first ? "styleA" : "styleB");
  }
  const auto pts = metrics::export_embeddings(clips, ids, labels, nullptr, 10);
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].clip_id == "clip0");
  CHECK(pts[5].label == "styleB");
  CHECK(mean_silhouette(pts) > 0.5);

  SUBCASE("deterministic across runs") {
    const auto again = metrics::export_embeddings(clips, ids, labels, nullptr, 10);
    for (size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts[i].x == again[i].x);
      CHECK(pts[i].y == again[i].y);
    }
  }
  SUBCASE("single clip maps to the origin") {
    const auto one = metrics::export_embeddings({clips[0]}, {"only"}, {"x"}, nullptr, 10);
    REQUIRE(one.size() == 1);
    CHECK(one[0].x == 0.0);
    CHECK(one[0].y == 0.0);
  }
  SUBCASE("clips shorter than a window throw") {
    const auto tiny = make_clip(5, 1, 20.0, [](auto, auto) { return 0.0; });
    CHECK_THROWS_AS(metrics::export_embeddings({tiny}, {"t"}, {"x"}, nullptr, 10),
                    InsufficientData);
  }
}
