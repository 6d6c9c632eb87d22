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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Co-registered binary masks (values > 0.5 are foreground). When `spacing`
/// is empty the prediction's voxel spacing is used.
struct SegMaskPair {
  VoxelGrid prediction;
  VoxelGrid truth;
  std::optional<Spacing> spacing;
};

/// 2|P & T| / (|P| + |T|); 1.0 when both are empty.
double dice(const SegMaskPair& pair);

struct Hd95Options {
  /// Zero-pad both masks to this cubic extent first (0 disables). Voxels on
  /// the original volume edge then count as boundary.
  int pad_extent = 256;
  /// Value when exactly one mask is empty.
  double empty_value = 256.0;
  /// false: 95th percentile of the union of both directed distance sets.
  /// true: max of the two directed 95th percentiles.
  bool max_of_directed = false;
};

/// 95th-percentile symmetric boundary distance in mm. Boundaries are
/// foreground voxels with a 6-neighbour outside the mask; nearest
/// distances come from an exact Euclidean distance transform. Both empty
/// gives 0.
double hd95(const SegMaskPair& pair, const Hd95Options& options = {});

/// Squared-distance transform of `sites` (nonzero entries) with anisotropic
/// spacing; entries with no site anywhere stay at +infinity.
std::vector<double> squared_distance_transform(std::span<const uint8_t> sites, const Dims& dims,
                                               const Spacing& spacing);

struct MedianCI {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Nonparametric bootstrap of the median with a percentile interval. The
/// interval is widened, if needed, to contain the sample median.
MedianCI bootstrap_median_ci(std::span<const double> values, int resamples, double level, uint64_t seed);

/// Sample median (mean of the middle pair for even counts).
double median(std::vector<double> values);

enum class NormalizeMethod { PercentileClipZscore };

/// Foreground is every voxel above the volume minimum. Clip to the 0.5 and
/// 99.5 foreground percentiles, then z-score with foreground mean and std;
/// background voxels become 0. Throws std::invalid_argument when the
/// foreground is empty or constant.
VoxelGrid normalize(const VoxelGrid& vol, NormalizeMethod method = NormalizeMethod::PercentileClipZscore);

/// Zero-pad (or centre-crop) symmetrically to `extent` per axis; geometry
/// keeps world positions of the retained voxels.
VoxelGrid pad_to(const VoxelGrid& grid, const Dims& extent);

struct CaseMetrics {
  std::string name;
  double dice = 0.0;
  double hd95 = 0.0;
};

struct MetricReport {
  std::vector<CaseMetrics> cases;
  MedianCI dice;
  MedianCI hd95;
  int resamples = 0;
  double level = 0.95;

  nlohmann::json to_json() const;
  /// Aligned table: per-case rows, then cohort median over its CI.
  std::string to_table() const;
};

MetricReport build_report(std::vector<CaseMetrics> cases, int resamples = 10000, double level = 0.95,
                          uint64_t seed = 0);

}  // namespace qmrisim
