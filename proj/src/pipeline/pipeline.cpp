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

#include "ggen/pipeline/pipeline.hpp"

#include "ggen/digest.hpp"
#include "ggen/metrics/metrics.hpp"
#include "ggen/model/checkpoint.hpp"
#include "ggen/motion/bvh.hpp"
#include "ggen/motion/scaler.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace ggen::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kClipMagic[] = "GGCLIP1\n";
constexpr size_t kClipMagicLen = 8;

// --- small file helpers -----------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw UnreadableFile("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Leaves identical files untouched so re-runs are no-ops; returns whether
// bytes were written.
bool write_if_changed(const std::string& path, const std::string& bytes) {
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    if (in.good() && os.str() == bytes) return false;
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), "short write to " + path);
  return true;
}

void append_raw(std::string& buf, const void* data, size_t bytes) {
  buf.append(static_cast<const char*>(data), bytes);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --- config serialization ---------------------------------------------------

json condition_to_json(const cond::ConditionConfig& c) {
  return json{{"d_token", c.d_token},           {"d_cond", c.d_cond},
              {"num_steps", c.num_steps},       {"style", cond::to_string(c.style)},
              {"style_kernel", c.style_kernel}, {"num_styles", c.num_styles}};
}

cond::ConditionConfig condition_from_json(const json& j) {
  cond::ConditionConfig c;
  c.d_token = j.at("d_token").get<Eigen::Index>();
  c.d_cond = j.at("d_cond").get<Eigen::Index>();
  c.num_steps = j.at("num_steps").get<int64_t>();
  c.style = cond::style_mode_from_string(j.at("style").get<std::string>());
  c.style_kernel = j.at("style_kernel").get<int>();
  c.num_styles = j.at("num_styles").get<int>();
  return c;
}

json backbone_to_json(const model::BackboneConfig& c) {
  return json{{"num_blocks", c.num_blocks},
              {"num_heads", c.num_heads},
              {"d_model", c.d_model},
              {"d_features", c.d_features},
              {"mode", to_string(c.mode)},
              {"tisa_kernels", c.tisa_kernels},
              {"attention_window", c.attention_window},
              {"causal", c.causal}};
}

model::BackboneConfig backbone_from_json(const json& j) {
  model::BackboneConfig c;
  c.num_blocks = j.at("num_blocks").get<Eigen::Index>();
  c.num_heads = j.at("num_heads").get<Eigen::Index>();
  c.d_model = j.at("d_model").get<Eigen::Index>();
  c.d_features = j.at("d_features").get<Eigen::Index>();
  c.mode = model::conditioning_mode_from_string(j.at("mode").get<std::string>());
  c.tisa_kernels = j.at("tisa_kernels").get<int>();
  c.attention_window = j.at("attention_window").get<int>();
  c.causal = j.at("causal").get<bool>();
  return c;
}

void validate(const RunConfig& cfg) {
  if (cfg.extractor != "stub" && cfg.extractor != "pretrained")
    throw ConfigMismatch("unknown extractor kind: " + cfg.extractor);
  if (cfg.condition.num_steps != cfg.schedule.num_steps)
    throw ConfigMismatch("condition num_steps (" +
                         std::to_string(cfg.condition.num_steps) +
                         ") must equal schedule num_steps (" +
                         std::to_string(cfg.schedule.num_steps) + ")");
  if (cfg.condition.d_cond != cfg.backbone.d_model)
    throw ConfigMismatch("condition width must equal the model width");
  require(cfg.clip_seconds > 0.0, "clip_seconds must be positive");
  require(cfg.train.steps >= 1 && cfg.train.batch_size >= 1 &&
              cfg.train.checkpoint_every >= 1,
          "training settings must be positive");
}

std::unique_ptr<cond::LocalExtractor> make_extractor(const RunConfig& cfg) {
  if (cfg.extractor == "stub")
    return std::make_unique<cond::StubFilterbankExtractor>();
  if (cfg.extractor == "pretrained")
    return std::make_unique<cond::PretrainedSpeechEncoderAdapter>(cfg.condition.d_token);
  throw ConfigMismatch("unknown extractor kind: " + cfg.extractor);
}

// --- corpus paths -----------------------------------------------------------

std::string corpus_dir(const RunConfig& cfg) { return cfg.work_dir + "/corpus"; }
std::string manifest_path(const RunConfig& cfg) { return corpus_dir(cfg) + "/manifest.json"; }
std::string scaler_path(const RunConfig& cfg) { return corpus_dir(cfg) + "/scaler.json"; }
std::string skeleton_path(const RunConfig& cfg) { return corpus_dir(cfg) + "/skeleton.bvh"; }
std::string checkpoints_dir(const RunConfig& cfg) { return cfg.work_dir + "/checkpoints"; }
std::string latest_checkpoint(const RunConfig& cfg) { return checkpoints_dir(cfg) + "/latest.ckpt"; }
std::string embedder_path(const RunConfig& cfg) { return cfg.work_dir + "/embedder.json"; }

json load_manifest(const RunConfig& cfg) {
  const std::string path = manifest_path(cfg);
  if (!fs::exists(path))
    throw EmptyCorpus("no prepared corpus at " + path + "; run prepare first");
  json m = json::parse(read_file(path));
  if (m.value("config_digest", "") != config_digest(cfg))
    throw ConfigMismatch("corpus at " + path +
                         " was prepared under a different configuration");
  return m;
}

std::vector<StoredClip> load_corpus(const RunConfig& cfg, const json& manifest) {
  std::vector<StoredClip> clips;
  for (const auto& entry : manifest.at("clips"))
    clips.push_back(read_clip_file(corpus_dir(cfg) + "/" +
                                   entry.at("file").get<std::string>()));
  return clips;
}

// Sorted *.bvh files of a directory; id = filename stem.
std::vector<std::string> bvh_stems(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UnreadableFile("not a directory: " + dir);
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bvh")
      stems.push_back(e.path().stem().string());
  std::sort(stems.begin(), stems.end());
  return stems;
}

// Clips at the model frame rate with identical widths; width disagreement
// inside or across directories is a skeleton mismatch.
std::vector<motion::MotionClip> load_bvh_dir(const std::string& dir,
                                             const std::vector<std::string>& stems) {
  std::vector<motion::MotionClip> clips;
  for (const auto& stem : stems) {
    const auto doc = motion::parse_bvh_file(dir + "/" + stem + ".bvh");
    auto clip = motion::clip_from_bvh(doc);
    if (clip.fps != motion::kTargetFps) clip = motion::resample_motion(clip);
    if (!clips.empty() && clip.dims() != clips.front().dims())
      throw LayoutMismatch("skeletons disagree within " + dir + " (" + stem +
                           ".bvh has width " + std::to_string(clip.dims()) + ")");
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::string dir_digest(const std::string& dir, const std::vector<std::string>& stems) {
  std::string acc;
  for (const auto& stem : stems)
    acc += stem + "=" + digest_hex(read_file(dir + "/" + stem + ".bvh")) + "\n";
  return digest_hex(acc);
}

// Shared model bundle for train/sample so parameter registration order (and
// with it the checkpoint layout) has one definition.
struct ModelBundle {
  model::NoisePredictor net;
  cond::ConditionExtractor ce;
  nn::ParamRefs params;

  ModelBundle(const model::BackboneConfig& bc, const cond::ConditionConfig& cc,
              uint64_t seed) {
    Rng rng(derive_seed(seed, "model-init"));
    net = model::NoisePredictor(bc, rng);
    ce = cond::ConditionExtractor(cc, rng);
    net.params(params);
    ce.params(params);
  }
};

std::string plot_table(const std::vector<metrics::EmbeddingPoint>& pts) {
  std::string out = "clip_id\tlabel\tx\ty\n";
  for (const auto& p : pts)
    out += p.clip_id + "\t" + p.label + "\t" + format_double(p.x) + "\t" +
           format_double(p.y) + "\n";
  return out;
}

}  // namespace

// --- config -----------------------------------------------------------------

RunConfig desk_config() {
  RunConfig cfg;
  cfg.backbone.num_blocks = 2;
  cfg.backbone.num_heads = 4;
  cfg.backbone.d_model = 64;
  cfg.condition.d_cond = 64;
  cfg.condition.num_steps = 100;
  cfg.schedule = {100, 1e-3, 0.2};
  cfg.train = {200, 4, 1e-4, 100};
  return cfg;
}

RunConfig full_config() {
  RunConfig cfg;
  cfg.backbone.num_blocks = 12;
  cfg.backbone.num_heads = 16;
  cfg.backbone.d_model = 1280;
  cfg.condition.d_cond = 1280;
  cfg.condition.num_steps = 1000;
  cfg.schedule = {1000, 1e-4, 5e-5};
  cfg.train = {100000, 32, 1e-4, 1000};
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j{{"data_dir", cfg.data_dir},
         {"work_dir", cfg.work_dir},
         {"joint_selection", cfg.joint_selection},
         {"clip_seconds", cfg.clip_seconds},
         {"extractor", cfg.extractor},
         {"condition", condition_to_json(cfg.condition)},
         {"backbone", backbone_to_json(cfg.backbone)},
         {"schedule",
          json{{"num_steps", cfg.schedule.num_steps},
               {"beta_start", cfg.schedule.beta_start},
               {"beta_end", cfg.schedule.beta_end}}},
         {"train",
          json{{"steps", cfg.train.steps},
               {"batch_size", cfg.train.batch_size},
               {"lr", cfg.train.lr},
               {"checkpoint_every", cfg.train.checkpoint_every}}},
         {"seed", cfg.seed}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg;
  cfg.data_dir = j.value("data_dir", "");
  cfg.work_dir = j.value("work_dir", "");
  cfg.joint_selection = j.value("joint_selection", std::vector<std::string>{});
  cfg.clip_seconds = j.value("clip_seconds", 20.0);
  cfg.extractor = j.value("extractor", "stub");
  if (j.contains("condition")) cfg.condition = condition_from_json(j.at("condition"));
  if (j.contains("backbone")) cfg.backbone = backbone_from_json(j.at("backbone"));
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    cfg.schedule.num_steps = s.at("num_steps").get<int64_t>();
    cfg.schedule.beta_start = s.at("beta_start").get<double>();
    cfg.schedule.beta_end = s.at("beta_end").get<double>();
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    cfg.train.steps = t.at("steps").get<int64_t>();
    cfg.train.batch_size = t.at("batch_size").get<int64_t>();
    cfg.train.lr = t.at("lr").get<double>();
    cfg.train.checkpoint_every = t.at("checkpoint_every").get<int64_t>();
  }
  cfg.seed = j.value("seed", uint64_t{17});
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(read_file(path));
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  write_if_changed(path, run_config_to_json(cfg));
}

std::string config_digest(const RunConfig& cfg) {
  // Only fields that change what a run computes enter the digest.
  // Filesystem locations, the step target (runs are resumable to a longer
  // target), and checkpoint cadence stay out so those artifacts remain
  // interchangeable.
  RunConfig canonical = cfg;
  canonical.data_dir.clear();
  canonical.work_dir.clear();
  canonical.train.steps = 0;
  canonical.train.checkpoint_every = 1;
  return digest_hex(run_config_to_json(canonical));
}

// --- clip files ---------------------------------------------------------------

bool write_clip_file(const std::string& path, const StoredClip& clip) {
  const auto& pair = clip.pair;
  json header{{"id", pair.clip_id},
              {"source", pair.source},
              {"frames", pair.motion.frames()},
              {"dims", pair.motion.dims()},
              {"fps", pair.motion.fps},
              {"skeleton_ref", pair.motion.skeleton_ref},
              {"samples", pair.audio.samples.size()},
              {"sample_rate", pair.audio.sample_rate},
              {"style_label", clip.style_label}};
  const std::string text = header.dump();
  std::string buf(kClipMagic, kClipMagicLen);
  const uint64_t len = text.size();
  append_raw(buf, &len, sizeof(len));
  buf += text;
  append_raw(buf, pair.motion.features.data(),
             static_cast<size_t>(pair.motion.features.size()) * sizeof(double));
  append_raw(buf, pair.audio.samples.data(), pair.audio.samples.size() * sizeof(double));
  return write_if_changed(path, buf);
}

StoredClip read_clip_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw UnreadableFile("cannot open clip file " + path);
  char magic[kClipMagicLen];
  in.read(magic, kClipMagicLen);
  require(in.good() && std::string(magic, kClipMagicLen) == kClipMagic,
          "bad clip file magic: " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  require(in.good(), "clip header truncated: " + path);
  const json h = json::parse(text);

  StoredClip clip;
  clip.style_label = h.at("style_label").get<int>();
  clip.pair.clip_id = h.at("id").get<std::string>();
  clip.pair.source = h.at("source").get<std::string>();
  clip.pair.motion.fps = h.at("fps").get<double>();
  clip.pair.motion.skeleton_ref = h.at("skeleton_ref").get<std::string>();
  clip.pair.motion.features.resize(h.at("frames").get<Eigen::Index>(),
                                   h.at("dims").get<Eigen::Index>());
  in.read(reinterpret_cast<char*>(clip.pair.motion.features.data()),
          static_cast<std::streamsize>(
              static_cast<size_t>(clip.pair.motion.features.size()) * sizeof(double)));
  clip.pair.audio.sample_rate = h.at("sample_rate").get<int>();
  clip.pair.audio.samples.resize(h.at("samples").get<size_t>());
  in.read(reinterpret_cast<char*>(clip.pair.audio.samples.data()),
          static_cast<std::streamsize>(clip.pair.audio.samples.size() * sizeof(double)));
  require(in.good(), "clip data truncated: " + path);
  return clip;
}

// --- prepare ------------------------------------------------------------------

PrepareReport cmd_prepare(const RunConfig& cfg) {
  validate(cfg);
  PrepareReport report;

  std::vector<std::string> wav_paths;
  if (fs::is_directory(cfg.data_dir))
    for (const auto& e : fs::recursive_directory_iterator(cfg.data_dir))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        wav_paths.push_back(e.path().string());
  std::sort(wav_paths.begin(), wav_paths.end());

  std::vector<StoredClip> clips;
  std::string skeleton_text;
  int source_index = 0;
  for (const auto& wav : wav_paths) {
    const fs::path bvh = fs::path(wav).replace_extension(".bvh");
    if (!fs::exists(bvh)) {
      report.failures.push_back(wav + ": no matching .bvh");
      continue;
    }
    try {
      const audio::Waveform w = audio::load_waveform(wav);
      const auto doc = motion::parse_bvh_file(bvh.string());
      auto clip = motion::clip_from_bvh(doc, cfg.joint_selection);
      if (clip.fps != motion::kTargetFps) clip = motion::resample_motion(clip);

      const auto n = static_cast<Eigen::Index>(
          std::floor(std::min(w.seconds(), clip.seconds()) / cfg.clip_seconds));
      if (n == 0)
        throw TooShort("shorter than one " + std::to_string(cfg.clip_seconds) +
                       " s clip window");
      const auto samples_per = static_cast<Eigen::Index>(
          std::llround(cfg.clip_seconds * w.sample_rate));
      const auto frames_per = static_cast<Eigen::Index>(
          std::llround(cfg.clip_seconds * clip.fps));
      for (Eigen::Index k = 0; k < n; ++k) {
        StoredClip stored;
        stored.style_label = source_index % cfg.condition.num_styles;
        auto& pair = stored.pair;
        pair.source = fs::path(wav).filename().string();
        char suffix[8];
        std::snprintf(suffix, sizeof(suffix), "_%03d", static_cast<int>(k));
        pair.clip_id = fs::path(wav).stem().string() + suffix;
        pair.audio.sample_rate = w.sample_rate;
        pair.audio.samples.assign(
            w.samples.begin() + static_cast<ptrdiff_t>(k * samples_per),
            w.samples.begin() + static_cast<ptrdiff_t>((k + 1) * samples_per));
        pair.motion.fps = clip.fps;
        pair.motion.skeleton_ref = clip.skeleton_ref;
        pair.motion.features = clip.features.middleRows(k * frames_per, frames_per);
        pair.check_durations();
        clips.push_back(std::move(stored));
      }
      if (skeleton_text.empty()) skeleton_text = read_file(bvh.string());
      ++source_index;
    } catch (const Error& e) {
      report.failures.push_back(wav + ": " + e.what());
    }
  }
  if (clips.empty())
    throw EmptyCorpus("no usable clips under " + cfg.data_dir + " (" +
                      std::to_string(report.failures.size()) + " files failed)");

  std::vector<motion::MotionClip> motions;
  for (const auto& c : clips) motions.push_back(c.pair.motion);
  // The scaler needs two clips; a one-clip corpus has exactly its own
  // statistics, so fitting on a duplicate is the same population.
  if (motions.size() == 1) motions.push_back(motions.front());
  const auto scaler = motion::fit_scaler(motions, cfg.joint_selection);

  fs::create_directories(corpus_dir(cfg));
  const std::string digest = config_digest(cfg);
  json clip_entries = json::array();
  for (const auto& c : clips) {
    const std::string file = c.pair.clip_id + ".clip";
    if (write_clip_file(corpus_dir(cfg) + "/" + file, c)) ++report.clips_written;
    const std::string bytes = read_file(corpus_dir(cfg) + "/" + file);
    clip_entries.push_back(json{{"id", c.pair.clip_id},
                                {"file", file},
                                {"source", c.pair.source},
                                {"frames", c.pair.motion.frames()},
                                {"dims", c.pair.motion.dims()},
                                {"samples", c.pair.audio.samples.size()},
                                {"style_label", c.style_label},
                                {"digest", digest_hex(bytes)}});
  }
  report.clips_total = static_cast<int>(clips.size());

  json manifest{{"format", "GGMAN1"},
                {"config_digest", digest},
                {"skeleton", "skeleton.bvh"},
                {"clips", std::move(clip_entries)},
                {"failures", report.failures}};
  const std::string manifest_text = manifest.dump(2) + "\n";

  write_if_changed(skeleton_path(cfg), skeleton_text);
  write_if_changed(scaler_path(cfg), scaler.to_json());
  write_if_changed(manifest_path(cfg), manifest_text);
  report.manifest_digest = digest_hex(manifest_text);
  report.manifest_path = manifest_path(cfg);
  return report;
}

// --- train --------------------------------------------------------------------

TrainReport cmd_train(const RunConfig& cfg) {
  validate(cfg);
  const json manifest = load_manifest(cfg);
  const auto corpus = load_corpus(cfg, manifest);
  const auto scaler = motion::FeatureScaler::load(scaler_path(cfg));
  const auto extractor = make_extractor(cfg);
  require(extractor->dim() == cfg.condition.d_token,
          "extractor emits " + std::to_string(extractor->dim()) +
              "-wide tokens but the condition path expects " +
              std::to_string(cfg.condition.d_token));

  std::vector<diffusion::ClipExample> examples;
  for (const auto& c : corpus) {
    diffusion::ClipExample ex;
    ex.tokens = extractor->extract(c.pair.audio);
    ex.features = scaler.apply(c.pair.motion.features);
    ex.style_label = c.style_label;
    examples.push_back(std::move(ex));
  }

  model::BackboneConfig bc = cfg.backbone;
  if (bc.d_features == 0) bc.d_features = examples.front().features.cols();
  ModelBundle bundle(bc, cfg.condition, cfg.seed);

  const auto sched = diffusion::build_schedule(
      cfg.schedule.num_steps, cfg.schedule.beta_start, cfg.schedule.beta_end);
  diffusion::TrainConfig tc;
  tc.batch_size = cfg.train.batch_size;
  tc.adam.lr = cfg.train.lr;
  diffusion::Trainer trainer(&bundle.net, &bundle.ce, sched, tc,
                             derive_seed(cfg.seed, "train-draws"));

  const std::string digest = config_digest(cfg);
  fs::create_directories(checkpoints_dir(cfg));
  std::string last_good;
  if (fs::exists(latest_checkpoint(cfg))) {
    const auto header = model::read_checkpoint_header(latest_checkpoint(cfg));
    if (header.config_digest != digest)
      throw ConfigMismatch("checkpoint " + latest_checkpoint(cfg) +
                           " belongs to a different configuration");
    model::read_checkpoint_state(latest_checkpoint(cfg), trainer.params(),
                                 &trainer.optimizer());
    trainer.restore(header.step_count, header.rng_state);
    last_good = latest_checkpoint(cfg);
  }

  TrainReport report;
  report.log_path = cfg.work_dir + "/train_log.txt";
  std::ofstream log(report.log_path, std::ios::app);

  auto write_ckpt = [&](int64_t step) {
    model::CheckpointHeader h;
    h.config_digest = digest;
    h.backbone = bc;
    h.condition = cfg.condition;
    h.beta_start = cfg.schedule.beta_start;
    h.beta_end = cfg.schedule.beta_end;
    h.extractor_kind = cfg.extractor;
    h.scaler_json = scaler.to_json();
    h.step_count = step;
    h.rng_state = trainer.rng().serialize();
    const std::string path =
        checkpoints_dir(cfg) + "/step_" + std::to_string(step) + ".ckpt";
    model::write_checkpoint(path, h, trainer.params(), &trainer.optimizer());
    model::write_checkpoint(latest_checkpoint(cfg), h, trainer.params(),
                            &trainer.optimizer());
    last_good = path;
  };

  double loss = 0.0;
  while (trainer.steps() < cfg.train.steps) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      loss = trainer.step(examples);
    } catch (const NonFiniteLoss& e) {
      throw NonFiniteLoss(std::string(e.what()) + "; last good checkpoint: " +
                          (last_good.empty() ? "none" : last_good));
    } catch (const NonFiniteActivation& e) {
      // Divergence caught inside the forward pass before the loss exists.
      throw NonFiniteLoss(std::string(e.what()) + "; last good checkpoint: " +
                          (last_good.empty() ? "none" : last_good));
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << trainer.steps() << ' ' << format_double(loss) << ' '
        << format_double(wall) << '\n';
    ++report.steps_run;
    if (trainer.steps() % cfg.train.checkpoint_every == 0 ||
        trainer.steps() == cfg.train.steps)
      write_ckpt(trainer.steps());
  }
  log.flush();

  report.total_steps = trainer.steps();
  report.final_loss = loss;
  report.checkpoint_path = latest_checkpoint(cfg);
  return report;
}

// --- sample ---------------------------------------------------------------------

SampleReport cmd_sample(const RunConfig& cfg, const std::string& wav_path,
                        const std::string& checkpoint_path, uint64_t seed,
                        const std::string& out_bvh, int style_label) {
  validate(cfg);
  const auto header = model::read_checkpoint_header(checkpoint_path);
  if (header.config_digest != config_digest(cfg))
    throw ConfigMismatch("checkpoint " + checkpoint_path +
                         " belongs to a different configuration");

  ModelBundle bundle(header.backbone, header.condition, cfg.seed);
  model::read_checkpoint_state(checkpoint_path, bundle.params, nullptr);
  const auto scaler = motion::FeatureScaler::from_json(header.scaler_json);
  const auto sched = diffusion::build_schedule(header.condition.num_steps,
                                               header.beta_start, header.beta_end);

  const audio::Waveform w = audio::load_waveform(wav_path);
  const auto extractor = make_extractor(cfg);
  const auto tokens = extractor->extract(w);  // rejects audio under 0.1 s
  const auto frames = static_cast<Eigen::Index>(
      std::llround(w.seconds() * motion::kTargetFps));

  Rng rng(derive_seed(seed, "sample"));
  const Matrix scaled = diffusion::sample_features(bundle.net, bundle.ce, tokens,
                                                   sched, frames, rng, style_label);

  motion::MotionClip clip;
  clip.features = scaler.invert(scaled);
  clip.fps = motion::kTargetFps;

  const auto skel_doc = motion::parse_bvh_file(skeleton_path(cfg));
  const auto doc = motion::bvh_from_clip(clip, skel_doc.skeleton, scaler.joint_selection);
  const std::string trailer = "generated config=" + header.config_digest +
                              " step=" + std::to_string(header.step_count) +
                              " seed=" + std::to_string(seed) +
                              " style=" + std::to_string(style_label);
  write_if_changed(out_bvh, motion::write_bvh(doc, trailer));

  SampleReport report;
  report.bvh_path = out_bvh;
  report.frames = frames;
  // Keep the conditioning audio beside the gesture so eval can score beat
  // synchrony without reaching back into the dataset.
  report.audio_copy_path = fs::path(out_bvh).replace_extension(".wav").string();
  audio::write_wav_float64(report.audio_copy_path, w);
  return report;
}

// --- eval -----------------------------------------------------------------------

EvalReport cmd_eval(const RunConfig& cfg, const std::string& generated_dir,
                    const std::string& reference_dir,
                    const std::string& report_path) {
  validate(cfg);
  const auto gen_stems = bvh_stems(generated_dir);
  const auto ref_stems = bvh_stems(reference_dir);
  if (gen_stems.size() < 2 || ref_stems.size() < 2)
    throw InsufficientData("eval needs at least 2 clips per directory (got " +
                           std::to_string(gen_stems.size()) + " generated, " +
                           std::to_string(ref_stems.size()) + " reference)");
  const auto gen = load_bvh_dir(generated_dir, gen_stems);
  const auto ref = load_bvh_dir(reference_dir, ref_stems);
  if (gen.front().dims() != ref.front().dims())
    throw LayoutMismatch("generated skeleton width " +
                         std::to_string(gen.front().dims()) +
                         " does not match reference width " +
                         std::to_string(ref.front().dims()));

  EvalReport out;
  const Eigen::Index window = metrics::kDefaultWindow;
  out.fgd_raw = metrics::fgd_raw(gen, ref, window);

  // The embedder is fit on the reference corpus only and persisted; scores
  // are comparable only across reports carrying the same embedder version.
  metrics::FeatureEmbedder embedder;
  bool reuse = false;
  if (fs::exists(embedder_path(cfg))) {
    embedder = metrics::FeatureEmbedder::load(embedder_path(cfg));
    reuse = embedder.window() == window &&
            embedder.feat_dim() == ref.front().dims();
  }
  if (!reuse) {
    embedder = metrics::train_embedder(ref, window, /*steps=*/300,
                                       derive_seed(cfg.seed, "embedder"));
    fs::create_directories(cfg.work_dir.empty() ? "." : cfg.work_dir);
    embedder.save(embedder_path(cfg));
  }
  out.fgd_feature = metrics::fgd_feature(gen, ref, embedder);

  // Beat synchrony of each generated clip against its own conditioning
  // audio; the WAV lives beside the BVH (sample writes it there) or under
  // the reference directory with the same stem.
  double beat_acc = 0.0;
  int beat_count = 0;
  for (size_t i = 0; i < gen_stems.size(); ++i) {
    std::string wav = generated_dir + "/" + gen_stems[i] + ".wav";
    if (!fs::exists(wav)) wav = reference_dir + "/" + gen_stems[i] + ".wav";
    if (!fs::exists(wav)) continue;
    const auto audio_beats = metrics::detect_audio_beats(audio::load_waveform(wav));
    const auto gesture_beats = metrics::detect_gesture_beats(gen[i]);
    beat_acc += metrics::beat_align(gesture_beats, audio_beats);
    ++beat_count;
  }
  out.has_beat_align = beat_count > 0;
  out.beat_align = beat_count > 0 ? beat_acc / beat_count : 0.0;

  json report{{"format", "GGREPORT1"},
              {"config_digest", config_digest(cfg)},
              {"window", window},
              {"sigma", metrics::kDefaultBeatSigma},
              {"embedder_version", embedder.version_digest()},
              {"inputs",
               json{{"generated", json{{"clips", gen_stems.size()},
                                       {"digest", dir_digest(generated_dir, gen_stems)}}},
                    {"reference", json{{"clips", ref_stems.size()},
                                       {"digest", dir_digest(reference_dir, ref_stems)}}}}},
              {"metrics", json{{"fgd_raw", out.fgd_raw},
                               {"fgd_feature", out.fgd_feature},
                               {"beat_align", out.has_beat_align
                                                  ? json(out.beat_align)
                                                  : json(nullptr)},
                               {"beat_align_clips", beat_count}}}};
  out.report_text = report.dump(2) + "\n";
  write_if_changed(report_path, out.report_text);
  out.report_path = report_path;

  // Embedding table of both sets for cluster plots.
  std::vector<motion::MotionClip> all = gen;
  all.insert(all.end(), ref.begin(), ref.end());
  std::vector<std::string> ids, labels;
  for (const auto& s : gen_stems) ids.push_back(s), labels.push_back("generated");
  for (const auto& s : ref_stems) ids.push_back(s), labels.push_back("reference");
  const auto pts = metrics::export_embeddings(all, ids, labels, &embedder, window);
  out.plot_path = report_path + ".plot.tsv";
  write_if_changed(out.plot_path, plot_table(pts));
  return out;
}

// --- export-plot -------------------------------------------------------------------

void cmd_export_plot(const RunConfig& cfg, const std::string& out_path) {
  validate(cfg);
  const json manifest = load_manifest(cfg);
  const auto corpus = load_corpus(cfg, manifest);
  std::vector<motion::MotionClip> clips;
  std::vector<std::string> ids, labels;
  for (const auto& c : corpus) {
    clips.push_back(c.pair.motion);
    ids.push_back(c.pair.clip_id);
    labels.push_back("style" + std::to_string(c.style_label));
  }
  const metrics::FeatureEmbedder* embedder = nullptr;
  metrics::FeatureEmbedder loaded;
  if (fs::exists(embedder_path(cfg))) {
    loaded = metrics::FeatureEmbedder::load(embedder_path(cfg));
    if (loaded.feat_dim() == clips.front().dims()) embedder = &loaded;
  }
  const auto pts = metrics::export_embeddings(clips, ids, labels, embedder,
                                              metrics::kDefaultWindow);
  write_if_changed(out_path, plot_table(pts));
}

}  // namespace ggen::pipeline
