/**
 * Copyright 2026 The qmrisim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// qmrisim command-line front end. Exit codes: 0 success, 2 configuration
// error, 3 data error.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qmrisim/pipeline.hpp"

namespace fs = std::filesystem;
using namespace qmrisim;

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;

struct RunFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  int threads = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, RunFlags& f, bool needs_config) {
  auto* c = cmd->add_option("--config", f.config, "JSON run configuration");
  if (needs_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", f.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", f.threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("-q,--quiet", f.quiet, "No progress messages");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig c = RunConfig::load(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (f.threads > 0) c.threads = f.threads;
  return c;
}

Logger logger(bool quiet) {
  if (quiet) return {};
  return [](const std::string& m) { std::cerr << m << "\n"; };
}

void apply_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-based MRI synthesis from tissue labels"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kEngineVersion);

  RunFlags synth_flags, sim_flags;
  auto* synth = app.add_subcommand("synth-maps", "Draw quantitative maps from a label volume");
  add_common(synth, synth_flags, true);
  auto* sim = app.add_subcommand("simulate", "Simulate corrupted MR images (and optionally segment and score them)");
  add_common(sim, sim_flags, true);

  std::string pred_dir, truth_dir, eval_out;
  EvaluateOptions eval_opt;
  int eval_threads = 0;
  bool no_pad = false;
  auto* eval = app.add_subcommand("evaluate", "Dice and HD95 over masks paired by file name");
  eval->add_option("--pred", pred_dir, "Directory of predicted masks")->required();
  eval->add_option("--truth", truth_dir, "Directory of reference masks")->required();
  eval->add_option("--out", eval_out, "Report directory")->required();
  eval->add_option("--seed", eval_opt.seed, "Bootstrap seed");
  eval->add_option("--resamples", eval_opt.resamples, "Bootstrap resamples");
  eval->add_option("--level", eval_opt.level, "Confidence level");
  eval->add_flag("--no-pad", no_pad, "Do not zero-pad masks to 256^3 before HD95");
  eval->add_flag("--max-directed", eval_opt.max_of_directed, "HD95 as the max of the two directed percentiles");
  eval->add_option("--threads", eval_threads, "Worker threads")->check(CLI::NonNegativeNumber);

  std::string image, png_out;
  int axis = 2;
  std::optional<int> index;
  double lo = 0.5, hi = 99.5;
  auto* preview = app.add_subcommand("preview", "Render one slice to PNG");
  preview->add_option("image", image, "Input NIfTI volume")->required();
  preview->add_option("--axis", axis, "0 sagittal, 1 coronal, 2 axial");
  preview->add_option("--index", index, "Slice index (default: middle)");
  preview->add_option("--window", lo, "Lower window percentile");
  preview->add_option("--window-hi", hi, "Upper window percentile");
  preview->add_option("--out", png_out, "Output PNG")->required();

  std::string manifest, replay_out;
  int replay_threads = 0;
  bool replay_quiet = false;
  auto* replay = app.add_subcommand("replay", "Re-run a manifest and verify identical outputs");
  replay->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replay_out, "Directory for the re-run outputs")->required();
  replay->add_option("--threads", replay_threads, "Worker threads")->check(CLI::NonNegativeNumber);
  replay->add_flag("-q,--quiet", replay_quiet, "No progress messages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (synth->parsed()) {
      const RunConfig c = resolve(synth_flags);
      apply_threads(c.threads);
      const auto m = cmd_synth_maps(c, logger(synth_flags.quiet));
      std::cout << "wrote " << m["files"].size() << " files and manifest.json to " << c.out.string() << "\n";
    } else if (sim->parsed()) {
      const RunConfig c = resolve(sim_flags);
      apply_threads(c.threads);
      const auto m = cmd_simulate(c, logger(sim_flags.quiet));
      std::cout << "wrote " << m["files"].size() << " files and manifest.json to " << c.out.string() << "\n";
      if (c.segment.enabled) {
        std::ifstream t(c.out / "report.txt");
        std::cout << t.rdbuf();
      }
    } else if (eval->parsed()) {
      apply_threads(eval_threads);
      eval_opt.pad_256 = !no_pad;
      const MetricReport r = cmd_evaluate(pred_dir, truth_dir, eval_out, eval_opt);
      std::cout << r.to_table();
    } else if (preview->parsed()) {
      cmd_preview(image, axis, index, png_out, lo, hi);
      std::cout << "wrote " << png_out << "\n";
    } else if (replay->parsed()) {
      apply_threads(replay_threads);
      const ReplayResult r = cmd_replay(manifest, replay_out, logger(replay_quiet));
      if (!r.identical) {
        for (const auto& m : r.mismatches) std::cerr << "mismatch: " << m << "\n";
        std::cerr << "replay differs from " << manifest << "\n";
        return kDataExit;
      }
      std::cout << "replay identical: every output matches " << manifest << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataExit;
  }
  return 0;
}
