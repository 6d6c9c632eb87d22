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

#include "qmrisim/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace qmrisim {

Geometry Geometry::make(Dims dims, Spacing spacing) {
  Affine affine = Affine::Identity();
  for (int a = 0; a < 3; ++a) affine(a, a) = spacing[a];
  return make(dims, spacing, affine);
}

Geometry Geometry::make(Dims dims, Spacing spacing, const Affine& affine) {
  Geometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.affine = affine;
  g.validate();
  return g;
}

Eigen::Vector3d Geometry::voxel_to_world(const Eigen::Vector3d& ijk) const {
  return affine.topLeftCorner<3, 3>() * ijk + affine.topRightCorner<3, 1>();
}

Eigen::Vector3d Geometry::world_to_voxel(const Eigen::Vector3d& xyz) const {
  return affine.topLeftCorner<3, 3>().inverse() * (xyz - affine.topRightCorner<3, 1>());
}

void Geometry::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] <= 0) {
      std::ostringstream os;
      os << "dims[" << a << "] must be positive, got " << dims[a];
      throw VolumeError(os.str());
    }
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      std::ostringstream os;
      os << "spacing[" << a << "] must be positive and finite, got " << spacing[a];
      throw VolumeError(os.str());
    }
  }
  if (!affine.allFinite()) throw VolumeError("affine contains non-finite entries");
  const double det = affine.topLeftCorner<3, 3>().determinant();
  if (!(std::abs(det) > 0.0)) throw VolumeError("affine 3x3 block is singular");
}

bool Geometry::same_lattice(const Geometry& other, double tol) const {
  if (dims != other.dims) return false;
  for (int a = 0; a < 3; ++a)
    if (std::abs(spacing[a] - other.spacing[a]) > tol) return false;
  return (affine - other.affine).cwiseAbs().maxCoeff() <= tol;
}

VoxelGrid::VoxelGrid(Geometry geometry, std::vector<float> data)
    : geometry_(std::move(geometry)), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.voxel_count()) {
    std::ostringstream os;
    os << "data length " << data_.size() << " does not match dims " << geometry_.dims[0] << "x"
       << geometry_.dims[1] << "x" << geometry_.dims[2];
    throw VolumeError(os.str());
  }
}

VoxelGrid::VoxelGrid(Geometry geometry, float value)
    : VoxelGrid(geometry, std::vector<float>(geometry.voxel_count(), value)) {}

bool VoxelGrid::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void VoxelGrid::require_finite(const std::string& what) const {
  for (std::size_t n = 0; n < data_.size(); ++n) {
    if (!std::isfinite(data_[n])) {
      std::ostringstream os;
      os << what << ": non-finite value at voxel " << n;
      throw VolumeError(os.str());
    }
  }
}

void require_coregistered(const VoxelGrid& reference, std::span<const VoxelGrid> others,
                          const std::string& what) {
  for (const auto& g : others) {
    if (!reference.geometry().same_lattice(g.geometry())) {
      const auto& a = reference.dims();
      const auto& b = g.dims();
      std::ostringstream os;
      os << what << ": lattice mismatch (" << a[0] << "x" << a[1] << "x" << a[2] << " vs " << b[0]
         << "x" << b[1] << "x" << b[2] << " or differing affine)";
      throw VolumeError(os.str());
    }
  }
}

LabelVolume::LabelVolume(VoxelGrid grid, std::map<int, std::string> names)
    : grid_(std::move(grid)), names_(std::move(names)) {
  auto it = names_.find(0);
  if (it == names_.end())
    names_[0] = "background";
  else if (it->second != "background")
    throw VolumeError("label 0 must be named \"background\", got \"" + it->second + "\"");
  for (float v : grid_.values()) {
    if (!(v >= 0.0f) || v != std::floor(v))
      throw VolumeError("label volume holds a non-integer or negative value");
  }
  for (int label : present_labels()) {
    if (!names_.count(label))
      throw VolumeError("label " + std::to_string(label) + " has no name");
  }
}

std::vector<int> LabelVolume::present_labels() const {
  std::vector<bool> seen;
  for (float v : grid_.values()) {
    const auto l = static_cast<std::size_t>(v);
    if (l >= seen.size()) seen.resize(l + 1, false);
    seen[l] = true;
  }
  std::vector<int> out;
  for (std::size_t l = 0; l < seen.size(); ++l)
    if (seen[l]) out.push_back(static_cast<int>(l));
  return out;
}

std::map<int, std::string> LabelVolume::default_names(const VoxelGrid& grid) {
  std::set<int> labels;
  for (float v : grid.values()) labels.insert(static_cast<int>(v));
  std::map<int, std::string> names;
  for (int l : labels) names[l] = l == 0 ? "background" : "label_" + std::to_string(l);
  names[0] = "background";
  return names;
}

void QmriVolume::validate() const {
  const VoxelGrid others[] = {r1, r2s, mt};
  require_coregistered(pd, others, "qMRI maps");
  auto check = [](const VoxelGrid& g, const char* name, float lo, float hi) {
    for (float v : g.values()) {
      if (!std::isfinite(v) || v < lo || v > hi) {
        std::ostringstream os;
        os << name << " value " << v << " outside [" << lo << ", " << hi << "]";
        throw VolumeError(os.str());
      }
    }
  };
  const float inf = std::numeric_limits<float>::max();
  check(pd, "PD", 0.0f, inf);
  check(r1, "R1", 0.0f, inf);
  check(r2s, "R2*", 0.0f, inf);
  check(mt, "MT", 0.0f, 100.0f);
}

}  // namespace qmrisim
