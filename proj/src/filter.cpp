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

#include "qmrisim/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qmrisim {
namespace {

constexpr std::size_t kSumBlock = 1 << 14;

inline long reflect_index(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Convolve every line along `axis`. Lines are independent, so the result
// does not depend on how they are spread over threads.
void smooth_axis(std::span<double> field, const Dims& dims, int axis, const std::vector<double>& taps,
                 Boundary boundary) {
  const long n = dims[axis];
  const long radius = static_cast<long>(taps.size() / 2);
  const long stride = axis == 0 ? 1 : axis == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const int other_a = axis == 0 ? 1 : 0;
  const int other_b = axis == 2 ? 1 : 2;
  const long count_a = dims[other_a];
  const long count_b = dims[other_b];
  const long stride_a = other_a == 0 ? 1 : other_a == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const long stride_b = other_b == 0 ? 1 : other_b == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
  const long lines = count_a * count_b;

#pragma omp parallel
  {
    std::vector<double> line(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (long l = 0; l < lines; ++l) {
      const long a = l % count_a;
      const long b = l / count_a;
      double* base = field.data() + a * stride_a + b * stride_b;
      for (long i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = base[i * stride];
      for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long t = -radius; t <= radius; ++t) {
          long j = i + t;
          double v;
          if (j < 0 || j >= n) {
            if (boundary == Boundary::Zero) continue;
            j = reflect_index(j, n);
          }
          v = line[static_cast<std::size_t>(j)];
          acc += taps[static_cast<std::size_t>(t + radius)] * v;
        }
        base[i * stride] = acc;
      }
    }
  }
}

}  // namespace

double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

std::vector<double> gaussian_taps(double sigma_vox, double truncate) {
  if (!(sigma_vox > 0.0)) return {1.0};
  const long radius = std::max(1L, static_cast<long>(std::ceil(truncate * sigma_vox)));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long t = -radius; t <= radius; ++t) {
    const double w = std::exp(-0.5 * (t * t) / (sigma_vox * sigma_vox));
    taps[static_cast<std::size_t>(t + radius)] = w;
    total += w;
  }
  for (auto& w : taps) w /= total;
  return taps;
}

void smooth_in_place(std::span<double> field, const Dims& dims, const std::array<double, 3>& sigma_vox,
                     Boundary boundary) {
  if (field.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2])
    throw std::invalid_argument("smooth_in_place: field size does not match dims");
  for (int axis = 0; axis < 3; ++axis) {
    if (!(sigma_vox[axis] > 0.0)) continue;
    smooth_axis(field, dims, axis, gaussian_taps(sigma_vox[axis]), boundary);
  }
}

VoxelGrid gaussian_smooth(const VoxelGrid& grid, const std::array<double, 3>& sigma_mm, Boundary boundary) {
  std::vector<double> work(grid.values().begin(), grid.values().end());
  std::array<double, 3> sigma_vox{};
  for (int a = 0; a < 3; ++a) sigma_vox[a] = sigma_mm[a] / grid.spacing()[a];
  smooth_in_place(work, grid.dims(), sigma_vox, boundary);
  return VoxelGrid(grid.geometry(), std::vector<float>(work.begin(), work.end()));
}

double deterministic_sum(std::span<const double> values) {
  const std::size_t blocks = (values.size() + kSumBlock - 1) / kSumBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < static_cast<long>(blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kSumBlock;
    const std::size_t hi = std::min(values.size(), lo + kSumBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = deterministic_sum(values) / n;
  std::vector<double> sq(values.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(values.size()); ++i) {
    const double d = values[static_cast<std::size_t>(i)] - mean;
    sq[static_cast<std::size_t>(i)] = d * d;
  }
  return {mean, std::sqrt(deterministic_sum(sq) / n)};
}

namespace {
template <typename T>
double percentile_impl(std::span<const T> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::vector<T> v(values.begin(), values.end());
  q = std::clamp(q, 0.0, 1.0);
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<long>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(v.begin() + static_cast<long>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}
}  // namespace

double percentile(std::span<const float> values, double q) { return percentile_impl(values, q); }
double percentile(std::span<const double> values, double q) { return percentile_impl(values, q); }

}  // namespace qmrisim
