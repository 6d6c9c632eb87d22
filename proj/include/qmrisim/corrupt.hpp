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
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmrisim/physics.hpp"
#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Rician magnitude noise: sqrt((S + n_r)^2 + n_i^2), n_r, n_i ~ N(0, sigma^2),
/// independent per voxel. Throws std::invalid_argument for sigma < 0.
VoxelGrid add_rician(const VoxelGrid& signal, double sigma, uint64_t seed);

/// Plain additive Gaussian noise, S + n.
VoxelGrid add_gaussian(const VoxelGrid& signal, double sigma, uint64_t seed);

/// Hard central k-space truncation per axis: along each axis with
/// fraction f < 1, frequencies with |k| > floor(f * n / 2) are zeroed and
/// the real part of the inverse transform kept. DC is never touched.
VoxelGrid gibbs_ringing(const VoxelGrid& signal, const std::array<double, 3>& kept_fraction);

/// Simulate thick-slice acquisition: Gaussian slice profile (FWHM
/// sqrt(sim^2 - native^2)), trilinear downsample to `simulated_spacing`,
/// trilinear upsample back onto the original lattice.
VoxelGrid lowres_reslice(const VoxelGrid& signal, const Spacing& simulated_spacing);

/// signal * exp(log-Gaussian smooth field); see generate_receive_field.
VoxelGrid bias_field_augment(const VoxelGrid& signal, double amplitude, double fwhm_mm, uint64_t seed);

/// Stage settings for one run. Ranges are sampled per volume.
struct AugmentPlan {
  struct AffineStage {
    bool enabled = true;
    double rotation_deg = 10.0;   // per axis, U(-r, r)
    double scale = 0.1;           // per axis, U(1 - s, 1 + s)
    double translation_mm = 5.0;  // per axis, U(-t, t)
  } affine;
  struct ElasticStage {
    bool enabled = true;
    double control_spacing_mm = 32.0;
    double displacement_std_mm = 2.0;
  } elastic;
  std::array<double, 3> flip_probability{0.5, 0.5, 0.5};
  struct CropStage {
    bool enabled = true;
    Dims size{192, 192, 192};
    bool pad_to_crop = true;  // zero-pad symmetrically when the volume is smaller
    bool require_lesion = true;
    int lesion_label = 5;
  } crop;
  struct BiasStage {
    bool enabled = true;
    Interval amplitude{0.0, 0.3};
    double fwhm_mm = 100.0;
  } bias;
  struct GibbsStage {
    bool enabled = true;
    Interval kept_fraction{0.5, 1.0};
  } gibbs;
  struct LowresStage {
    bool enabled = true;
    Interval slice_spacing_mm{1.0, 5.0};  // applied along one randomly chosen axis
  } lowres;
  struct NoiseStage {
    bool enabled = true;
    Interval sigma{0.0, 0.05};
    bool relative = true;  // sigma is a fraction of the 99th-percentile intensity
  } rician, gaussian;

  AugmentPlan() { gaussian.enabled = false; }

  /// Everything off; crop disabled. Applying it is the identity.
  static AugmentPlan disabled();
  void validate() const;
  nlohmann::json to_json() const;
  /// Overlay `j` onto `base`; unknown keys are errors.
  static AugmentPlan from_json(const nlohmann::json& j, AugmentPlan base = {});
};

struct SpatialResult {
  std::vector<VoxelGrid> images;
  std::optional<LabelVolume> labels;
  nlohmann::json realized;  // drawn angles, scales, shifts, flips, crop offset
};

/// Sample one transform (affine, elastic, flips, crop) and apply it to every
/// input: images trilinear with zero fill, labels nearest. All inputs must
/// share a lattice.
SpatialResult spatial_augment(const std::vector<VoxelGrid>& images, const std::optional<LabelVolume>& labels,
                              const AugmentPlan& plan, uint64_t seed);

struct IntensityResult {
  VoxelGrid image;
  nlohmann::json realized;
};

/// Fixed stage order: bias, gibbs, lowres, rician, gaussian. Each stage
/// draws from its own seed derived from `seed` and its name.
IntensityResult corrupt_intensity(const VoxelGrid& signal, const AugmentPlan& plan, uint64_t seed);

}  // namespace qmrisim
