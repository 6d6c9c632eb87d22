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
#include <set>

#include "qmrisim/priors.hpp"
#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Draw a quantitative volume from per-label Gaussian mixtures.
///
/// Voxel n takes its own Philox lane n: one uniform picks the component,
/// then four normals give PD, R1, R2*, MT. Labels with smooth_fwhm_mm get
/// their sampled field smoothed by normalised convolution restricted to
/// that label (so other labels are untouched) before the physical clamp.
/// Throws PriorError for a label without a prior.
QmriVolume sample_qmri(const LabelVolume& labels, const TissuePriorSet& priors, uint64_t seed);

/// Random binary lesion maps.
struct LesionStampConfig {
  int count_min = 1;
  int count_max = 3;
  double size_min_mm = 8.0;  // equivalent-sphere diameter
  double size_max_mm = 25.0;
  double irregularity = 0.5;  // 0: smooth ellipsoid; 1: strongly noise-shaped
  std::set<int> replaceable{1, 2, 3};
  int lesion_label = 5;

  /// Throws std::invalid_argument naming the bad field.
  void validate() const;
};

/// Overlay `lesion_mask` (values > 0.5) onto `labels`: masked voxels whose
/// current label is in `replaceable` become `lesion_label`.
LabelVolume stamp_lesion(const LabelVolume& labels, const VoxelGrid& lesion_mask, int lesion_label,
                         const std::set<int>& replaceable);

/// Build a lesion mask of count in [count_min, count_max] blobs.
///
/// Each blob thresholds a local field (ellipsoidal envelope plus
/// irregularity-weighted smoothed white noise) at the level that yields the
/// drawn volume, keeping the connected piece at the field maximum. Blob
/// centres are kept apart so components do not merge unless the grid is too
/// small to honour that. When `anchor` is given, centres are drawn from its
/// voxels carrying a replaceable label.
VoxelGrid generate_lesion_mask(const Geometry& geometry, const LesionStampConfig& config, uint64_t seed,
                               const LabelVolume* anchor = nullptr);

}  // namespace qmrisim
