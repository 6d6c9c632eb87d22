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
#include <span>
#include <vector>

#include "qmrisim/volume.hpp"

namespace qmrisim {

enum class Boundary {
  Reflect,  // half-sample symmetric: ... b a | a b c ... c b a | a ...
  Zero,
};

/// FWHM (mm) to Gaussian standard deviation (mm).
double fwhm_to_sigma(double fwhm);

/// Normalised 1-D Gaussian taps, radius ceil(truncate * sigma). sigma <= 0
/// yields the single tap {1}.
std::vector<double> gaussian_taps(double sigma_vox, double truncate = 4.0);

/// In-place separable Gaussian smoothing of a dense x-fastest field.
/// sigma is per axis in voxels; axes with sigma <= 0 are skipped. Output is
/// bitwise independent of the OpenMP thread count.
void smooth_in_place(std::span<double> field, const Dims& dims, const std::array<double, 3>& sigma_vox,
                     Boundary boundary = Boundary::Reflect);

/// Smooth a grid with per-axis sigma given in millimetres.
VoxelGrid gaussian_smooth(const VoxelGrid& grid, const std::array<double, 3>& sigma_mm,
                          Boundary boundary = Boundary::Reflect);

/// Deterministic sum: fixed-size blocks reduced in parallel, then the block
/// partials summed in order.
double deterministic_sum(std::span<const double> values);

/// Mean and population standard deviation, deterministic as above.
struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};
Moments moments(std::span<const double> values);

/// Percentile with linear interpolation between order statistics
/// (h = (n - 1) * q). `q` in [0, 1]. Input is copied.
double percentile(std::span<const float> values, double q);
double percentile(std::span<const double> values, double q);

}  // namespace qmrisim
