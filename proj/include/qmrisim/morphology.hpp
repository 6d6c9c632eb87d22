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
#include <span>
#include <vector>

#include "qmrisim/volume.hpp"

namespace qmrisim {

enum class Connectivity { Face6 = 6, Full26 = 26 };

/// Binary mask (nonzero = foreground) as bytes.
std::vector<uint8_t> to_mask(const VoxelGrid& grid, float threshold = 0.5f);

/// Connected-component labelling. Returns per-voxel component ids (0 =
/// background, 1..n in raster order of first voxel) and writes the count.
std::vector<int32_t> connected_components(std::span<const uint8_t> mask, const Dims& dims,
                                          Connectivity conn, int* count);

/// Foreground voxels with at least one 6-neighbour outside the mask; voxels
/// beyond the volume edge count as background.
std::vector<uint8_t> boundary_voxels(std::span<const uint8_t> mask, const Dims& dims);

}  // namespace qmrisim
