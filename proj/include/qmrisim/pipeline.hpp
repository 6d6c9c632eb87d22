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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmrisim/corrupt.hpp"
#include "qmrisim/harness.hpp"
#include "qmrisim/metrics.hpp"
#include "qmrisim/physics.hpp"
#include "qmrisim/priors.hpp"
#include "qmrisim/qmap_synth.hpp"

namespace qmrisim {

inline constexpr const char* kEngineVersion = "0.1.0";

/// Invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, malformed or inconsistent data; maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolved run configuration. Every field has a default; the JSON form
/// written into manifests lists all of them.
struct RunConfig {
  std::optional<std::filesystem::path> labels;                // label map
  std::optional<std::array<std::filesystem::path, 4>> qmri;  // pd, r1, r2s, mt
  std::optional<std::filesystem::path> priors;                // empty: built-in defaults
  uint64_t seed = 0;
  int count = 1;
  std::vector<Sequence> sequences{Sequence::FSE, Sequence::MPRAGE};
  ParamRanges param_ranges = ParamRanges::defaults();
  AugmentPlan augment;
  struct Lesions {
    bool enabled = true;
    LesionStampConfig stamp;
  } lesions;
  B0Scaling b0_scaling;
  struct Receive {
    double amplitude = 0.0;  // log-field std of the B1 receive map; 0 is uniform
    double fwhm_mm = 100.0;
  } receive;
  struct Segment {
    bool enabled = false;
    std::vector<Sequence> sequences{Sequence::FSE};
    float threshold = 1.5f;  // on the normalised image
    float gain = 4.0f;
    WindowSpec window;
    bool tta = true;
    bool pad_256 = true;
    int resamples = 1000;
    double level = 0.95;
  } segment;
  /// Output directory and worker count; neither is echoed into manifests,
  /// since results do not depend on them.
  std::filesystem::path out;
  int threads = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Input paths are written relative to `relative_to` when possible.
  nlohmann::json to_json(const std::filesystem::path& relative_to = {}) const;
  /// Relative input paths resolve against `base_dir`. Unknown keys and
  /// wrong types raise ConfigError.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

/// Output name "{sample:05}_{sequence}_{kind}.nii.gz".
std::string output_name(int sample, const std::string& sequence, const std::string& kind);

/// Per-sample seed: derive_seed(master, "sample", index).
uint64_t sample_seed(uint64_t master, int index);

using Logger = std::function<void(const std::string&)>;

/// Draw qMRI maps from the label map (after optional lesion stamping) and
/// write {i}_qmri_{pd,r1,r2s,mt}.nii.gz plus manifest.json. Returns the
/// manifest.
nlohmann::json cmd_synth_maps(const RunConfig& config, const Logger& log = {});

/// Full pipeline per sample: [lesions, qMRI draw,] one spatial transform
/// shared by all sequences and the labels, then per sequence parameter
/// draw, forward model and intensity corruption. Writes
/// {i}_{SEQ}_image.nii.gz, {i}_all_labels.nii.gz when labels exist, the
/// optional segmentation outputs and report, and manifest.json.
nlohmann::json cmd_simulate(const RunConfig& config, const Logger& log = {});

struct EvaluateOptions {
  bool pad_256 = true;
  bool max_of_directed = false;
  int resamples = 10000;
  double level = 0.95;
  uint64_t seed = 0;
};

/// Pair masks by file name across the two directories, score every pair,
/// and write report.json and report.txt to `out`.
MetricReport cmd_evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& truth_dir,
                          const std::filesystem::path& out, const EvaluateOptions& options);

/// Write a PNG of one slice, windowed at the given percentiles.
void cmd_preview(const std::filesystem::path& image, int axis, std::optional<int> index,
                 const std::filesystem::path& out, double lo_pct = 0.5, double hi_pct = 99.5);

struct ReplayResult {
  bool identical = false;
  std::vector<std::string> mismatches;  // one line per differing file or record
};

/// Re-run the command recorded in a manifest into `out` and compare every
/// output checksum and the per-record contents.
ReplayResult cmd_replay(const std::filesystem::path& manifest, const std::filesystem::path& out,
                        const Logger& log = {});

}  // namespace qmrisim
