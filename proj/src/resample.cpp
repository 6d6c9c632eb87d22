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

#include "qmrisim/resample.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qmrisim {

float sample_trilinear(const VoxelGrid& grid, double i, double j, double k, Extrapolation ext) {
  const auto& d = grid.dims();
  if (ext == Extrapolation::Zero) {
    if (i < -1.0 || j < -1.0 || k < -1.0 || i > d[0] || j > d[1] || k > d[2]) return 0.0f;
  } else {
    i = std::clamp(i, 0.0, static_cast<double>(d[0] - 1));
    j = std::clamp(j, 0.0, static_cast<double>(d[1] - 1));
    k = std::clamp(k, 0.0, static_cast<double>(d[2] - 1));
  }
  const double fi = std::floor(i), fj = std::floor(j), fk = std::floor(k);
  const int i0 = static_cast<int>(fi), j0 = static_cast<int>(fj), k0 = static_cast<int>(fk);
  const double ti = i - fi, tj = j - fj, tk = k - fk;
  const double wi[2] = {1.0 - ti, ti};
  const double wj[2] = {1.0 - tj, tj};
  const double wk[2] = {1.0 - tk, tk};
  double acc = 0.0;
  for (int c = 0; c < 2; ++c) {
    const int kk = k0 + c;
    if (wk[c] == 0.0) continue;
    if (kk < 0 || kk >= d[2]) continue;
    for (int b = 0; b < 2; ++b) {
      const int jj = j0 + b;
      if (wj[b] == 0.0) continue;
      if (jj < 0 || jj >= d[1]) continue;
      for (int a = 0; a < 2; ++a) {
        const int ii = i0 + a;
        if (wi[a] == 0.0) continue;
        if (ii < 0 || ii >= d[0]) continue;
        acc += wi[a] * wj[b] * wk[c] * grid.at(ii, jj, kk);
      }
    }
  }
  return static_cast<float>(acc);
}

float sample_nearest(const VoxelGrid& grid, double i, double j, double k, Extrapolation ext) {
  const auto& d = grid.dims();
  long ii = static_cast<long>(std::floor(i + 0.5));
  long jj = static_cast<long>(std::floor(j + 0.5));
  long kk = static_cast<long>(std::floor(k + 0.5));
  if (ext == Extrapolation::Zero) {
    if (ii < 0 || jj < 0 || kk < 0 || ii >= d[0] || jj >= d[1] || kk >= d[2]) return 0.0f;
  } else {
    ii = std::clamp(ii, 0L, static_cast<long>(d[0] - 1));
    jj = std::clamp(jj, 0L, static_cast<long>(d[1] - 1));
    kk = std::clamp(kk, 0L, static_cast<long>(d[2] - 1));
  }
  return grid.at(static_cast<int>(ii), static_cast<int>(jj), static_cast<int>(kk));
}

Geometry respaced_geometry(const Geometry& source, const Spacing& target_spacing) {
  Geometry out;
  out.spacing = target_spacing;
  Affine scale = Affine::Identity();
  for (int a = 0; a < 3; ++a) {
    if (!(target_spacing[a] > 0.0)) {
      std::ostringstream os;
      os << "target spacing[" << a << "] must be positive, got " << target_spacing[a];
      throw VolumeError(os.str());
    }
    const double ratio = target_spacing[a] / source.spacing[a];
    out.dims[a] = std::max(1, static_cast<int>(std::lround(source.dims[a] / ratio)));
    scale(a, a) = ratio;
    scale(a, 3) = 0.5 * (ratio - 1.0);
  }
  out.affine = source.affine * scale;
  out.validate();
  return out;
}

VoxelGrid resample(const VoxelGrid& grid, const Spacing& target_spacing, Interpolation interp) {
  const Geometry target = respaced_geometry(grid.geometry(), target_spacing);
  if (target_spacing == grid.spacing()) return grid;
  return resample_to(grid, target, interp, Extrapolation::Clamp);
}

VoxelGrid resample_to(const VoxelGrid& grid, const Geometry& target, Interpolation interp,
                      Extrapolation ext) {
  target.validate();
  if (target.dims == grid.dims() && target.affine == grid.affine()) return VoxelGrid(target, std::vector<float>(grid.values().begin(), grid.values().end()));

  // target voxel -> source continuous voxel index
  const Eigen::Matrix4d map = grid.affine().inverse() * target.affine;
  const auto& d = target.dims;
  std::vector<float> out(target.voxel_count());

#pragma omp parallel for schedule(static)
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        const Eigen::Vector4d src = map * Eigen::Vector4d(i, j, k, 1.0);
        out[target.index(i, j, k)] = interp == Interpolation::Trilinear
                                         ? sample_trilinear(grid, src[0], src[1], src[2], ext)
                                         : sample_nearest(grid, src[0], src[1], src[2], ext);
      }
    }
  }
  return VoxelGrid(target, std::move(out));
}

}  // namespace qmrisim
