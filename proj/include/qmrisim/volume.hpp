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
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qmrisim {

using Dims = std::array<int, 3>;
using Spacing = std::array<double, 3>;
using Affine = Eigen::Matrix4d;

/// Raised when a volume violates a structural invariant (shape, spacing,
/// finiteness, co-registration).
class VolumeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lattice geometry shared by every volume.
///
/// Axis order follows NIfTI: voxel (i, j, k) lives at linear index
/// i + nx * (j + ny * k), so x varies fastest. The affine maps voxel indices
/// (voxel centres) to RAS+ world millimetres.
struct Geometry {
  Dims dims{1, 1, 1};
  Spacing spacing{1.0, 1.0, 1.0};
  Affine affine = Affine::Identity();

  /// Axis-aligned geometry with the origin at voxel (0,0,0).
  static Geometry make(Dims dims, Spacing spacing);
  static Geometry make(Dims dims, Spacing spacing, const Affine& affine);

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
           static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(k));
  }
  Eigen::Vector3d voxel_to_world(const Eigen::Vector3d& ijk) const;
  Eigen::Vector3d world_to_voxel(const Eigen::Vector3d& xyz) const;

  /// Throws VolumeError if dims/spacing/affine are invalid.
  void validate() const;

  /// Same dims and affine (within tol) and spacing.
  bool same_lattice(const Geometry& other, double tol = 1e-5) const;
};

/// Dense scalar volume. Treated as immutable by every operation in the
/// library: transforms return new grids.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(Geometry geometry, std::vector<float> data);
  /// Grid filled with `value`.
  VoxelGrid(Geometry geometry, float value);

  const Geometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims; }
  const Spacing& spacing() const { return geometry_.spacing; }
  const Affine& affine() const { return geometry_.affine; }
  std::size_t size() const { return data_.size(); }

  std::span<const float> values() const& { return data_; }
  std::span<const float> values() const&& = delete;  // would dangle
  float at(int i, int j, int k) const { return data_[geometry_.index(i, j, k)]; }
  float operator[](std::size_t n) const { return data_[n]; }

  /// Moves the storage out; the grid is left empty.
  std::vector<float> release() && { return std::move(data_); }

  bool all_finite() const;
  /// Throws VolumeError naming `what` if any value is NaN or infinite.
  void require_finite(const std::string& what) const;

 private:
  Geometry geometry_;
  std::vector<float> data_;
};

/// Throws VolumeError unless every grid shares `reference`'s lattice.
void require_coregistered(const VoxelGrid& reference, std::span<const VoxelGrid> others,
                          const std::string& what);

/// Integer tissue labels plus their names. Label 0 is always background.
class LabelVolume {
 public:
  LabelVolume() = default;
  LabelVolume(VoxelGrid grid, std::map<int, std::string> names);

  const VoxelGrid& grid() const { return grid_; }
  const std::map<int, std::string>& names() const { return names_; }
  const Geometry& geometry() const { return grid_.geometry(); }
  int label_at(std::size_t n) const { return static_cast<int>(grid_[n]); }
  /// Labels actually present, ascending.
  std::vector<int> present_labels() const;

  /// Default names for labels that have none: "label_<n>" (0 -> background).
  static std::map<int, std::string> default_names(const VoxelGrid& grid);

 private:
  VoxelGrid grid_;
  std::map<int, std::string> names_;
};

/// Four co-registered quantitative maps.
struct QmriVolume {
  VoxelGrid pd;   // proton density, a.u., >= 0
  VoxelGrid r1;   // 1/s, >= 0
  VoxelGrid r2s;  // 1/s, >= 0
  VoxelGrid mt;   // percent, [0, 100]

  const Geometry& geometry() const { return pd.geometry(); }
  /// Throws VolumeError on lattice mismatch or out-of-bounds values.
  void validate() const;
};

}  // namespace qmrisim
