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

#include <filesystem>
#include <stdexcept>
#include <string>

#include "qmrisim/volume.hpp"

namespace qmrisim {

/// Malformed, truncated or unsupported NIfTI-1 input, or an I/O failure.
/// The message names the offending header field where there is one.
class NiftiError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// On-disk voxel types this library can emit.
enum class StorageType { Float32, UInt8, Int16 };

/// Reads a 3-D scalar NIfTI-1 volume (.nii or .nii.gz, either endianness).
///
/// Geometry comes from the sform when sform_code > 0, otherwise the qform,
/// otherwise pixdim alone. Values are converted to float with scl_slope and
/// scl_inter applied (slope 0 means "unscaled"). Trailing singleton
/// dimensions (e.g. dim = {4, x, y, z, 1}) are accepted.
VoxelGrid read_nifti(const std::filesystem::path& path);

/// Writes a NIfTI-1 volume; ".gz" suffix selects gzip. Both sform and qform
/// carry the affine; slope is 1 and intercept 0. Non-finite grids are
/// rejected before anything is written. Integer storage types require
/// integral values in range.
void write_nifti(const VoxelGrid& grid, const std::filesystem::path& path,
                 StorageType storage = StorageType::Float32);

}  // namespace qmrisim
