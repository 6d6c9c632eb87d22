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

#include "qmrisim/volume.hpp"

namespace qmrisim {

enum class Interpolation { Nearest, Trilinear };

/// What a sample outside the source lattice returns.
enum class Extrapolation {
  Clamp,  // nearest edge voxel
  Zero,
};

/// Trilinear sample at a continuous voxel coordinate.
float sample_trilinear(const VoxelGrid& grid, double i, double j, double k, Extrapolation ext);
/// Nearest-neighbour sample (ties round up).
float sample_nearest(const VoxelGrid& grid, double i, double j, double k, Extrapolation ext);

/// Geometry with `target_spacing` covering the same field of view.
///
/// New dims are round(dims * spacing / target_spacing) (at least 1); the
/// outer voxel faces stay aligned, so output voxel i sits at input
/// continuous index -0.5 + (i + 0.5) * target / spacing.
Geometry respaced_geometry(const Geometry& source, const Spacing& target_spacing);

/// Resample onto a new spacing over the same field of view. Label volumes
/// must use Nearest. Resampling to the current spacing returns a copy.
VoxelGrid resample(const VoxelGrid& grid, const Spacing& target_spacing, Interpolation interp);

/// Resample onto an arbitrary target lattice by world-coordinate lookup.
VoxelGrid resample_to(const VoxelGrid& grid, const Geometry& target, Interpolation interp,
                      Extrapolation ext = Extrapolation::Clamp);

}  // namespace qmrisim
