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
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "qmrisim/volume.hpp"

namespace qmrisim {

/// 8-bit grayscale image, row-major, row 0 at the top.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;
};

/// Requested slice does not exist.
class SliceRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Slice `index` perpendicular to `axis` (0 = x sagittal, 1 = y coronal,
/// 2 = z axial), windowed linearly so the lo_pct and hi_pct percentiles of
/// the slice map to 0 and 255 (clipped). A slice whose window is empty
/// renders as uniform 0. The in-plane second axis runs bottom-to-top so
/// anterior/superior ends up at the top.
GrayImage render_slice(const VoxelGrid& grid, int axis, int index, double lo_pct = 0.5, double hi_pct = 99.5);

void write_png(const GrayImage& image, const std::filesystem::path& path);

}  // namespace qmrisim
