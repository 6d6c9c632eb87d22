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

/// Multi-channel patch exchanged with predictors: `channels[c]` holds
/// dims[0]*dims[1]*dims[2] floats, x fastest.
struct Patch {
  Dims dims{0, 0, 0};
  std::vector<std::vector<float>> channels;

  std::size_t voxel_count() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
};

class TensorFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary tensor exchange file, little-endian:
///
///   offset  size  field
///   0       4     magic "QTNS"
///   4       4     uint32 version (1)
///   8       4     uint32 channel count C
///   12      12    uint32 dims[3] (x, y, z)
///   24      4*C*X*Y*Z  float32 values, channel-major, x fastest
void write_tensor(const Patch& patch, const std::filesystem::path& path);
Patch read_tensor(const std::filesystem::path& path);

}  // namespace qmrisim
