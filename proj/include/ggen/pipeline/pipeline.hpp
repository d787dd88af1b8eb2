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
// Run orchestration: a serializable run configuration plus the five
// commands (prepare/train/sample/eval/export-plot) the CLI exposes. Every
// artifact a run produces carries the run's config digest; commands refuse
// to mix artifacts across digests.

#pragma once

#include "ggen/cond/extractor.hpp"
#include "ggen/data/pairing.hpp"
#include "ggen/diffusion/diffusion.hpp"
#include "ggen/model/backbone.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ggen::pipeline {

struct ScheduleSettings {
  int64_t num_steps = 100;
  double beta_start = 1e-3;
  double beta_end = 0.2;
};

struct TrainSettings {
  int64_t steps = 200;          // total optimizer steps for the run
  int64_t batch_size = 4;
  double lr = 1e-4;
  int64_t checkpoint_every = 100;
};

struct RunConfig {
  std::string data_dir;   // raw WAV+BVH tree
  std::string work_dir;   // corpus/, checkpoints/, reports live here
  std::vector<std::string> joint_selection;  // empty = every rotated joint
  double clip_seconds = 20.0;
  std::string extractor = "stub";  // "stub" | "pretrained"
  cond::ConditionConfig condition;
  model::BackboneConfig backbone;  // d_features 0 = inferred from the corpus
  ScheduleSettings schedule;
  TrainSettings train;
  uint64_t seed = 17;
};

// Small profile every test uses; trains in seconds on a CPU.
RunConfig desk_config();
// Full-size profile (constructible, not desk-trainable).
RunConfig full_config();

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

// Digest of the canonical serialization; the stamp artifacts carry.
std::string config_digest(const RunConfig& cfg);

// One prepared example on disk: the paired clip plus its style label.
struct StoredClip {
  data::PairedClip pair;
  int style_label = 0;
};

// Returns whether bytes changed on disk (false = identical file existed).
bool write_clip_file(const std::string& path, const StoredClip& clip);
StoredClip read_clip_file(const std::string& path);

struct PrepareReport {
  int clips_written = 0;   // files created or rewritten this run
  int clips_total = 0;     // clips in the manifest
  std::vector<std::string> failures;  // "file: reason", corpus not aborted
  std::string manifest_digest;
  std::string manifest_path;
};

// WAV+BVH tree -> aligned fixed-length clips + fitted scaler + manifest.
// Deterministic; re-running without input changes rewrites nothing and
// reports the same manifest digest. Throws EmptyCorpus when no clip
// survives.
PrepareReport cmd_prepare(const RunConfig& cfg);

struct TrainReport {
  int64_t steps_run = 0;       // steps executed by this invocation
  int64_t total_steps = 0;     // trainer step counter at exit
  double final_loss = 0.0;
  std::string checkpoint_path;
  std::string log_path;
};

// Trains to cfg.train.steps, resuming from the newest checkpoint when one
// exists. Appends "step loss wall-seconds" lines to the loss log. On
// divergence rethrows NonFiniteLoss naming the last good checkpoint.
TrainReport cmd_train(const RunConfig& cfg);

struct SampleReport {
  std::string bvh_path;
  std::string audio_copy_path;  // conditioning audio kept beside the BVH
  Eigen::Index frames = 0;
};

// WAV -> gesture BVH through the checkpointed model. Deterministic for a
// fixed seed, byte for byte.
SampleReport cmd_sample(const RunConfig& cfg, const std::string& wav_path,
                        const std::string& checkpoint_path, uint64_t seed,
                        const std::string& out_bvh, int style_label = 0);

struct EvalReport {
  double fgd_raw = 0.0;
  double fgd_feature = 0.0;
  double beat_align = 0.0;
  bool has_beat_align = false;  // needs a WAV beside each generated BVH
  std::string report_path;
  std::string plot_path;
  std::string report_text;
};

// Scores a directory of generated BVH against a reference directory and
// writes a structured report plus a 2-D embedding table of both sets.
EvalReport cmd_eval(const RunConfig& cfg, const std::string& generated_dir,
                    const std::string& reference_dir,
                    const std::string& report_path);

// 2-D embedding table of the prepared corpus, labeled by style; TSV columns
// clip_id, label, x, y.
void cmd_export_plot(const RunConfig& cfg, const std::string& out_path);

}  // namespace ggen::pipeline
