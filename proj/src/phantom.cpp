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

#include "qmrisim/phantom.hpp"

#include <cmath>
#include <map>
#include <string>

namespace qmrisim {

LabelVolume make_brain_phantom(const Dims& dims, const Spacing& spacing) {
  Geometry g = Geometry::make(dims, spacing);
  for (int a = 0; a < 3; ++a) g.affine(a, 3) = -0.5 * (dims[a] - 1) * spacing[a];
  g.validate();
  std::array<double, 3> semi;
  for (int a = 0; a < 3; ++a) semi[a] = 0.42 * dims[a] * spacing[a];
  std::vector<float> out(g.voxel_count(), 0.0f);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Eigen::Vector3d w = g.voxel_to_world(Eigen::Vector3d(i, j, k));
        const double x = w[0] / semi[0], y = w[1] / semi[1], z = w[2] / semi[2];
        const double r = std::sqrt(x * x + y * y + z * z);
        const double fold = 1.0 + 0.05 * std::sin(7.0 * std::atan2(y, x)) * std::cos(5.0 * std::atan2(z, std::hypot(x, y)));
        const double rf = r * fold;
        float label = 0.0f;
        if (r <= 1.0) label = 4.0f;
        if (r <= 0.94) label = 1.0f;
        if (rf <= 0.78) label = 3.0f;
        if (rf <= 0.74) label = 2.0f;
        for (double side : {-1.0, 1.0}) {
          const double vx = (x - side * 0.14) / 0.09, vy = (y - 0.05) / 0.35, vz = (z - 0.05) / 0.18;
          if (vx * vx + vy * vy + vz * vz <= 1.0) label = 4.0f;
        }
        out[g.index(i, j, k)] = label;
      }
  return LabelVolume(VoxelGrid(g, std::move(out)),
                     {{0, "background"}, {1, "grey_matter"}, {2, "white_matter"}, {3, "partial_volume"}, {4, "csf"}});
}

}  // namespace qmrisim
