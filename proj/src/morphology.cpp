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

#include "qmrisim/morphology.hpp"

#include <cstdlib>
#include <stdexcept>

namespace qmrisim {

std::vector<uint8_t> to_mask(const VoxelGrid& grid, float threshold) {
  std::vector<uint8_t> m(grid.size());
  const auto v = grid.values();
  for (std::size_t n = 0; n < m.size(); ++n) m[n] = v[n] > threshold ? 1 : 0;
  return m;
}

std::vector<int32_t> connected_components(std::span<const uint8_t> mask, const Dims& dims,
                                          Connectivity conn, int* count) {
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (mask.size() != total) throw std::invalid_argument("connected_components: size mismatch");
  std::vector<int32_t> ids(total, 0);
  std::vector<std::size_t> stack;
  int next = 0;
  const int reach = 1;
  for (std::size_t seed = 0; seed < total; ++seed) {
    if (!mask[seed] || ids[seed]) continue;
    ++next;
    ids[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(n % dims[0]);
      const int j = static_cast<int>((n / dims[0]) % dims[1]);
      const int k = static_cast<int>(n / (static_cast<std::size_t>(dims[0]) * dims[1]));
      for (int dk = -reach; dk <= reach; ++dk)
        for (int dj = -reach; dj <= reach; ++dj)
          for (int di = -reach; di <= reach; ++di) {
            const int manhattan = std::abs(di) + std::abs(dj) + std::abs(dk);
            if (manhattan == 0) continue;
            if (conn == Connectivity::Face6 && manhattan != 1) continue;
            const int a = i + di, b = j + dj, c = k + dk;
            if (a < 0 || b < 0 || c < 0 || a >= dims[0] || b >= dims[1] || c >= dims[2]) continue;
            const std::size_t m = static_cast<std::size_t>(a) +
                                  static_cast<std::size_t>(dims[0]) *
                                      (static_cast<std::size_t>(b) + static_cast<std::size_t>(dims[1]) * c);
            if (mask[m] && !ids[m]) {
              ids[m] = next;
              stack.push_back(m);
            }
          }
    }
  }
  if (count) *count = next;
  return ids;
}

std::vector<uint8_t> boundary_voxels(std::span<const uint8_t> mask, const Dims& dims) {
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (mask.size() != total) throw std::invalid_argument("boundary_voxels: size mismatch");
  std::vector<uint8_t> out(total, 0);
  const long sx = 1, sy = dims[0], sz = static_cast<long>(dims[0]) * dims[1];
#pragma omp parallel for schedule(static)
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const long n = i * sx + j * sy + k * sz;
        if (!mask[static_cast<std::size_t>(n)]) continue;
        const bool edge = i == 0 || j == 0 || k == 0 || i == dims[0] - 1 || j == dims[1] - 1 ||
                          k == dims[2] - 1;
        if (edge || !mask[static_cast<std::size_t>(n - sx)] || !mask[static_cast<std::size_t>(n + sx)] ||
            !mask[static_cast<std::size_t>(n - sy)] || !mask[static_cast<std::size_t>(n + sy)] ||
            !mask[static_cast<std::size_t>(n - sz)] || !mask[static_cast<std::size_t>(n + sz)])
          out[static_cast<std::size_t>(n)] = 1;
      }
  return out;
}

}  // namespace qmrisim
