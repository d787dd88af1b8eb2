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

#include "ggen/audio/dsp.hpp"
#include "ggen/digest.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

namespace ggen::metrics {
namespace {

// Reshape one flattened window row (frame-major) back to (window x feat).
Matrix unflatten(const RowVector& row, Eigen::Index window, Eigen::Index feat) {
  Matrix x(window, feat);
  for (Eigen::Index t = 0; t < window; ++t) x.row(t) = row.segment(t * feat, feat);
  return x;
}

RowVector flatten(const Matrix& x) {
  RowVector row(x.rows() * x.cols());
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    row.segment(t * x.cols(), x.cols()) = x.row(t);
  return row;
}

// Symmetric PSD square root with negative eigenvalues clipped to zero.
Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  Vector lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

GaussianSummary summarize(const Matrix& rows) {
  if (rows.rows() < 2)
    throw InsufficientData("summarize: need at least 2 rows, got " +
                           std::to_string(rows.rows()));
  GaussianSummary s;
  s.mean = rows.colwise().mean();
  Matrix centered = rows.rowwise() - s.mean;
  s.cov = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  // Average out asymmetry from the accumulation order.
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  return s;
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows())
    throw DimensionMismatch("frechet_distance: summary dimensions differ (" +
                            std::to_string(a.mean.size()) + " vs " +
                            std::to_string(b.mean.size()) + ")");
  const double mean_term = (a.mean - b.mean).squaredNorm();
  // tr((Sa Sb)^{1/2}) computed as tr((sqrt(Sa) Sb sqrt(Sa))^{1/2}), which
  // keeps the inner matrix symmetric so a self-adjoint solver applies.
  const Matrix root_a = psd_sqrt(a.cov);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(root_a * b.cov * root_a);
  const double tr_cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d2 = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * tr_cross;
  return std::max(d2, 0.0);
}

Matrix collect_windows(const std::vector<motion::MotionClip>& clips,
                       Eigen::Index window) {
  require(window >= 1, "collect_windows: window must be >= 1");
  Eigen::Index feat = -1;
  Eigen::Index total = 0;
  for (const auto& c : clips) {
    if (feat < 0) feat = c.features.cols();
    if (c.features.cols() != feat)
      throw DimensionMismatch("collect_windows: clips disagree on feature width (" +
                              std::to_string(feat) + " vs " +
                              std::to_string(c.features.cols()) + ")");
    total += c.features.rows() / window;
  }
  Matrix out(total, window * std::max<Eigen::Index>(feat, 0));
  Eigen::Index r = 0;
  for (const auto& c : clips) {
    const Eigen::Index n = c.features.rows() / window;
    for (Eigen::Index w = 0; w < n; ++w)
      out.row(r++) = flatten(c.features.middleRows(w * window, window));
  }
  return out;
}

double fgd_raw(const std::vector<motion::MotionClip>& set_a,
               const std::vector<motion::MotionClip>& set_b,
               Eigen::Index window) {
  if (set_a.size() < 2 || set_b.size() < 2)
    throw InsufficientData("fgd_raw: need at least 2 clips per set");
  const Matrix wa = collect_windows(set_a, window);
  const Matrix wb = collect_windows(set_b, window);
  if (wa.cols() != wb.cols())
    throw DimensionMismatch("fgd_raw: sets disagree on feature layout");
  if (wa.rows() < 2 || wb.rows() < 2)
    throw InsufficientData("fgd_raw: need at least 2 windows per set");
  return frechet_distance(summarize(wa), summarize(wb));
}

// ---------------------------------------------------------------------------
// FeatureEmbedder

FeatureEmbedder::FeatureEmbedder(Eigen::Index feat_dim, Eigen::Index window,
                                 Rng& rng)
    : feat_dim_(feat_dim),
      window_(window),
      enc1_(feat_dim, 64, 3, 1, nn::Pad::kSymmetric, rng, "emb.enc1"),
      enc2_(64, kCode, 3, 1, nn::Pad::kSymmetric, rng, "emb.enc2"),
      dec_(kCode, feat_dim, 3, 1, nn::Pad::kSymmetric, rng, "emb.dec") {
  require(feat_dim >= 1 && window >= 2, "FeatureEmbedder: bad dimensions");
}

Matrix FeatureEmbedder::forward(const Matrix& win_rows, Matrix* codes) const {
  if (win_rows.cols() != window_ * feat_dim_)
    throw DimensionMismatch("FeatureEmbedder: expected rows of width " +
                            std::to_string(window_ * feat_dim_) + ", got " +
                            std::to_string(win_rows.cols()));
  Matrix recon(win_rows.rows(), win_rows.cols());
  if (codes) codes->resize(win_rows.rows(), kCode);
  for (Eigen::Index i = 0; i < win_rows.rows(); ++i) {
    const Matrix x = unflatten(win_rows.row(i), window_, feat_dim_);
    const Matrix h1 = nn::gelu(enc1_.forward(x));
    const RowVector code = enc2_.forward(h1).colwise().mean();
    if (codes) codes->row(i) = code;
    recon.row(i) = flatten(dec_.forward(code.replicate(window_, 1)));
  }
  return recon;
}

Matrix FeatureEmbedder::encode(const Matrix& windows) const {
  Matrix codes;
  forward(windows, &codes);
  return codes;
}

double FeatureEmbedder::reconstruction_error(const Matrix& windows) const {
  const Matrix recon = forward(windows, nullptr);
  return (recon - windows).squaredNorm() / static_cast<double>(windows.size());
}

void FeatureEmbedder::params(nn::ParamRefs& out) {
  enc1_.params(out);
  enc2_.params(out);
  dec_.params(out);
}

double FeatureEmbedder::train(const Matrix& windows, int steps, int batch,
                              Rng& rng, double lr) {
  if (windows.rows() < 1) throw InsufficientData("FeatureEmbedder::train: no windows");
  nn::ParamRefs refs;
  params(refs);
  for (auto* p : refs) p->ensure_grad();
  nn::AdamOptimizer::Config cfg;
  cfg.lr = lr;
  nn::AdamOptimizer opt(cfg);
  double loss = 0.0;
  for (int s = 0; s < steps; ++s) {
    loss = 0.0;
    const double scale = 1.0 / (static_cast<double>(batch) * window_ * feat_dim_);
    for (int b = 0; b < batch; ++b) {
      const Eigen::Index i =
          rng.uniform_int(0, static_cast<int>(windows.rows()) - 1);
      const Matrix x = unflatten(windows.row(i), window_, feat_dim_);
      const Matrix a1 = enc1_.forward(x);
      const Matrix h1 = nn::gelu(a1);
      const Matrix h2 = enc2_.forward(h1);
      const RowVector code = h2.colwise().mean();
      const Matrix dec_in = code.replicate(window_, 1);
      const Matrix y = dec_.forward(dec_in);
      const Matrix diff = y - x;
      loss += diff.squaredNorm() * scale;
      const Matrix d_dec_in = dec_.backward(dec_in, 2.0 * scale * diff);
      const Matrix d_h2 =
          (d_dec_in.colwise().sum() / static_cast<double>(window_))
              .replicate(window_, 1);
      const Matrix d_h1 = enc2_.backward(h1, d_h2);
      enc1_.backward(x, nn::gelu_backward(a1, d_h1));
    }
    opt.step(refs);
  }
  return loss;
}

namespace {

nlohmann::json embedder_json(const FeatureEmbedder& e, nn::ParamRefs& refs) {
  nlohmann::json j;
  j["format"] = "GGEMB1";
  j["feat_dim"] = e.feat_dim();
  j["window"] = e.window();
  j["code"] = FeatureEmbedder::kCode;
  auto tensors = nlohmann::json::array();
  for (const auto* p : refs) {
    nlohmann::json t;
    t["name"] = p->name;
    t["rows"] = p->value.rows();
    t["cols"] = p->value.cols();
    std::vector<double> data(p->value.data(), p->value.data() + p->value.size());
    t["data"] = data;
    tensors.push_back(std::move(t));
  }
  j["tensors"] = std::move(tensors);
  return j;
}

}  // namespace

void FeatureEmbedder::save(const std::string& path) const {
  nn::ParamRefs refs;
  const_cast<FeatureEmbedder*>(this)->params(refs);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "FeatureEmbedder::save: cannot open " + path);
  out << embedder_json(*this, refs).dump();
  require(out.good(), "FeatureEmbedder::save: write failed for " + path);
}

FeatureEmbedder FeatureEmbedder::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw UnreadableFile("FeatureEmbedder::load: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/true);
  require(j.value("format", "") == std::string("GGEMB1"),
          "FeatureEmbedder::load: unrecognized format");
  Rng rng(0);
  FeatureEmbedder e(j.at("feat_dim").get<Eigen::Index>(),
                    j.at("window").get<Eigen::Index>(), rng);
  nn::ParamRefs refs;
  e.params(refs);
  const auto& tensors = j.at("tensors");
  require(tensors.size() == refs.size(), "FeatureEmbedder::load: tensor count mismatch");
  for (size_t i = 0; i < refs.size(); ++i) {
    const auto& t = tensors[i];
    require(t.at("name").get<std::string>() == refs[i]->name &&
                t.at("rows").get<Eigen::Index>() == refs[i]->value.rows() &&
                t.at("cols").get<Eigen::Index>() == refs[i]->value.cols(),
            "FeatureEmbedder::load: tensor " + refs[i]->name + " mismatch");
    const auto data = t.at("data").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(data.size()) == refs[i]->value.size(),
            "FeatureEmbedder::load: tensor size mismatch");
    std::copy(data.begin(), data.end(), refs[i]->value.data());
  }
  return e;
}

std::string FeatureEmbedder::version_digest() const {
  nn::ParamRefs refs;
  const_cast<FeatureEmbedder*>(this)->params(refs);
  return digest_hex(embedder_json(*this, refs).dump());
}

FeatureEmbedder train_embedder(const std::vector<motion::MotionClip>& corpus,
                               Eigen::Index window, int steps, uint64_t seed) {
  const Matrix windows = collect_windows(corpus, window);
  if (windows.rows() < 2)
    throw InsufficientData("train_embedder: need at least 2 windows");
  Rng rng(derive_seed(seed, "feature-embedder"));
  FeatureEmbedder e(windows.cols() / window, window, rng);
  e.train(windows, steps, /*batch=*/8, rng);
  return e;
}

double fgd_feature(const std::vector<motion::MotionClip>& set_a,
                   const std::vector<motion::MotionClip>& set_b,
                   const FeatureEmbedder& embedder) {
  if (set_a.size() < 2 || set_b.size() < 2)
    throw InsufficientData("fgd_feature: need at least 2 clips per set");
  const Matrix wa = collect_windows(set_a, embedder.window());
  const Matrix wb = collect_windows(set_b, embedder.window());
  if (wa.rows() < 2 || wb.rows() < 2)
    throw InsufficientData("fgd_feature: need at least 2 windows per set");
  return frechet_distance(summarize(embedder.encode(wa)),
                          summarize(embedder.encode(wb)));
}

// ---------------------------------------------------------------------------
// Beat detection

namespace {

constexpr int kFluxWindow = 512;
constexpr int kFluxHop = 256;

// Peaks of a 1-D envelope above mean + one standard deviation; strict rise,
// non-strict fall so flat-topped peaks report their first frame.
std::vector<Eigen::Index> envelope_peaks(const Vector& env) {
  std::vector<Eigen::Index> peaks;
  const Eigen::Index n = env.size();
  if (n < 3) return peaks;
  const double mean = env.mean();
  const double sd = std::sqrt((env.array() - mean).square().sum() /
                              static_cast<double>(n - 1));
  const double thr = mean + sd;
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    if (env[i] > thr && env[i] > env[i - 1] && env[i] >= env[i + 1])
      peaks.push_back(i);
  return peaks;
}

}  // namespace

BeatSequence detect_audio_beats(const audio::Waveform& w) {
  audio::Waveform at_rate =
      (w.sample_rate == audio::kModelSampleRate) ? w : audio::resample(w, audio::kModelSampleRate);
  if (at_rate.seconds() < 1.0)
    throw TooShort("detect_audio_beats: need at least 1 s of audio, got " +
                   std::to_string(at_rate.seconds()) + " s");
  const auto& s = at_rate.samples;
  const Eigen::Index frames =
      1 + (static_cast<Eigen::Index>(s.size()) - kFluxWindow) / kFluxHop;
  std::vector<double> hann(kFluxWindow);
  for (int i = 0; i < kFluxWindow; ++i)
    hann[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / (kFluxWindow - 1));
  Vector flux = Vector::Zero(frames);
  std::vector<double> prev(kFluxWindow / 2 + 1, 0.0), mag(kFluxWindow / 2 + 1, 0.0);
  std::vector<std::complex<double>> buf(kFluxWindow);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index base = f * kFluxHop;
    for (int i = 0; i < kFluxWindow; ++i)
      buf[static_cast<size_t>(i)] = s[static_cast<size_t>(base + i)] *
                                    hann[static_cast<size_t>(i)];
    audio::fft_radix2(buf);
    for (size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
    if (f > 0) {
      double acc = 0.0;
      for (size_t k = 0; k < mag.size(); ++k) acc += std::max(0.0, mag[k] - prev[k]);
      flux[f] = acc;
    }
    std::swap(prev, mag);
  }
  BeatSequence beats;
  for (const Eigen::Index i : envelope_peaks(flux))
    beats.times.push_back(
        (static_cast<double>(i * kFluxHop) + kFluxWindow / 2.0) /
        audio::kModelSampleRate);
  return beats;
}

BeatSequence detect_gesture_beats(const motion::MotionClip& clip) {
  const Eigen::Index cols = clip.features.cols();
  if (cols < 9 || (cols - 6) % 3 != 0)
    throw LayoutMismatch("detect_gesture_beats: feature width " +
                         std::to_string(cols) +
                         " does not decompose into joint rotations + root");
  const Eigen::Index t_frames = clip.features.rows();
  require(clip.fps > 0.0, "detect_gesture_beats: fps must be positive");
  if (static_cast<double>(t_frames) / clip.fps < 1.0)
    throw TooShort("detect_gesture_beats: need at least 1 s of motion");
  const Eigen::Index joints = (cols - 6) / 3;
  // Total angular speed of the per-frame pose change; root columns excluded.
  Vector speed = Vector::Zero(t_frames - 1);
  for (Eigen::Index k = 0; k + 1 < t_frames; ++k) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < joints; ++j)
      acc += (clip.features.row(k + 1).segment(3 * j, 3) -
              clip.features.row(k).segment(3 * j, 3))
                 .norm();
    speed[k] = acc * clip.fps;
  }
  const double thr = speed.mean();
  BeatSequence beats;
  for (Eigen::Index k = 1; k + 1 < speed.size(); ++k)
    if (speed[k] < thr && speed[k] < speed[k - 1] && speed[k] < speed[k + 1])
      beats.times.push_back((static_cast<double>(k) + 0.5) / clip.fps);
  return beats;
}

double beat_align(const BeatSequence& gesture, const BeatSequence& audio,
                  double sigma) {
  require(sigma > 0.0, "beat_align: sigma must be positive");
  if (audio.times.empty())
    throw EmptyAudioBeats("beat_align: audio beat list is empty");
  if (gesture.times.empty()) return 0.0;  // documented convention
  double acc = 0.0;
  for (const double tg : gesture.times) {
    double best = std::numeric_limits<double>::infinity();
    for (const double ta : audio.times)
      best = std::min(best, (tg - ta) * (tg - ta));
    acc += std::exp(-best / (2.0 * sigma * sigma));
  }
  return acc / static_cast<double>(gesture.times.size());
}

// ---------------------------------------------------------------------------
// Embedding export

std::vector<EmbeddingPoint> export_embeddings(
    const std::vector<motion::MotionClip>& clips,
    const std::vector<std::string>& ids, const std::vector<std::string>& labels,
    const FeatureEmbedder* embedder, Eigen::Index window) {
  require(clips.size() == ids.size() && clips.size() == labels.size(),
          "export_embeddings: clips/ids/labels lengths differ");
  if (clips.empty()) throw InsufficientData("export_embeddings: no clips");
  if (embedder) window = embedder->window();
  // One descriptor per clip: mean over its window vectors (codes when an
  // embedder is given, raw flattened windows otherwise).
  Matrix desc;
  for (size_t i = 0; i < clips.size(); ++i) {
    const Matrix wins = collect_windows({clips[i]}, window);
    if (wins.rows() < 1)
      throw InsufficientData("export_embeddings: clip " + ids[i] +
                             " is shorter than one window");
    const Matrix rows = embedder ? embedder->encode(wins) : wins;
    if (desc.size() == 0) desc.resize(static_cast<Eigen::Index>(clips.size()), rows.cols());
    desc.row(static_cast<Eigen::Index>(i)) = rows.colwise().mean();
  }
  const Eigen::Index n = desc.rows();
  std::vector<EmbeddingPoint> points(clips.size());
  for (size_t i = 0; i < clips.size(); ++i) {
    points[i].clip_id = ids[i];
    points[i].label = labels[i];
  }
  if (n == 1) return points;  // single clip: origin by convention
  const RowVector mean = desc.colwise().mean();
  const Matrix centered = desc.rowwise() - mean;
  const Matrix cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const Eigen::Index d = cov.rows();
  // Leading principal axes (eigenvalues ascend, so take the tail), with the
  // sign fixed so each axis' largest-magnitude component is positive.
  for (int axis = 0; axis < 2 && axis < d; ++axis) {
    Vector v = eig.eigenvectors().col(d - 1 - axis);
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
    if (v[arg] < 0.0) v = -v;
    const Vector proj = centered * v;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (axis == 0)
        points[static_cast<size_t>(i)].x = proj[i];
      else
        points[static_cast<size_t>(i)].y = proj[i];
    }
  }
  return points;
}

}  // namespace ggen::metrics
