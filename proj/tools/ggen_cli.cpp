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
// Command-line front door: prepare / train / sample / eval / export-plot
// over a JSON run configuration. Exit codes: 0 success, 1 usage, 2 data
// error, 3 numeric divergence.

#include "ggen/pipeline/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace {

int run(int argc, char** argv) {
  CLI::App app{"speech-to-gesture pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* prepare = app.add_subcommand("prepare", "pair and cut the raw corpus");

  auto* train = app.add_subcommand("train", "train (or resume) on the prepared corpus");

  auto* sample = app.add_subcommand("sample", "generate a gesture BVH from a WAV");
  std::string wav_path, checkpoint_path, out_bvh;
  uint64_t sample_seed = 0;
  int style_label = 0;
  sample->add_option("--audio", wav_path, "conditioning WAV")->required();
  sample->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  sample->add_option("--out", out_bvh, "output BVH path")->required();
  sample->add_option("--seed", sample_seed, "sampling seed");
  sample->add_option("--style", style_label, "style label (onehot mode)");

  auto* eval = app.add_subcommand("eval", "score generated clips against a reference set");
  std::string generated_dir, reference_dir, report_path;
  eval->add_option("--generated", generated_dir, "directory of generated BVH")->required();
  eval->add_option("--reference", reference_dir, "directory of reference BVH")->required();
  eval->add_option("--report", report_path, "metric report output path")->required();

  auto* plot = app.add_subcommand("export-plot", "2-D embedding table of the prepared corpus");
  std::string plot_path;
  plot->add_option("--out", plot_path, "output TSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto cfg = ggen::pipeline::load_run_config(config_path);
  if (prepare->parsed()) {
    const auto report = ggen::pipeline::cmd_prepare(cfg);
    std::cout << "prepared " << report.clips_total << " clips ("
              << report.clips_written << " written, " << report.failures.size()
              << " failures)\nmanifest " << report.manifest_digest << '\n';
    for (const auto& f : report.failures) std::cerr << "skipped " << f << '\n';
  } else if (train->parsed()) {
    const auto report = ggen::pipeline::cmd_train(cfg);
    std::cout << "trained " << report.steps_run << " steps (total "
              << report.total_steps << "), final loss " << report.final_loss
              << "\ncheckpoint " << report.checkpoint_path << '\n';
  } else if (sample->parsed()) {
    const auto report = ggen::pipeline::cmd_sample(cfg, wav_path, checkpoint_path,
                                                   sample_seed, out_bvh, style_label);
    std::cout << "wrote " << report.bvh_path << " (" << report.frames
              << " frames)\n";
  } else if (eval->parsed()) {
    const auto report =
        ggen::pipeline::cmd_eval(cfg, generated_dir, reference_dir, report_path);
    std::cout << report.report_text;
  } else if (plot->parsed()) {
    ggen::pipeline::cmd_export_plot(cfg, plot_path);
    std::cout << "wrote " << plot_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ggen::NonFiniteLoss& e) {
    std::cerr << "numeric divergence: " << e.what() << '\n';
    return 3;
  } catch (const ggen::NonFiniteSample& e) {
    std::cerr << "numeric divergence: " << e.what() << '\n';
    return 3;
  } catch (const ggen::NonFiniteActivation& e) {
    std::cerr << "numeric divergence: " << e.what() << '\n';
    return 3;
  } catch (const ggen::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
