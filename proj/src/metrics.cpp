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

#include "qmrisim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qmrisim/filter.hpp"
#include "qmrisim/morphology.hpp"
#include "qmrisim/random.hpp"

namespace qmrisim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pair(const SegMaskPair& pair) {
  const VoxelGrid t[] = {pair.truth};
  require_coregistered(pair.prediction, t, "segmentation pair");
}

// Felzenszwalb-Huttenlocher lower envelope of parabolas along one line;
// positions are index * step.
void edt_line(const double* f, double* out, int n, double step, std::vector<int>& v, std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    const double xq = q * step;
    while (k >= 0) {
      const double xv = v[k] * step;
      const double s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : [&] {
      const double xv = v[k - 1] * step;
      return ((f[q] + xq * xq) - (f[v[k - 1]] + xv * xv)) / (2.0 * (xq - xv));
    }();
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = q * step;
    while (z[j + 1] < xq) ++j;
    const double d = xq - v[j] * step;
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

double dice(const SegMaskPair& pair) {
  require_pair(pair);
  const auto p = pair.prediction.values();
  const auto t = pair.truth.values();
  std::size_t inter = 0, np = 0, nt = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool a = p[i] > 0.5f, b = t[i] > 0.5f;
    np += a;
    nt += b;
    inter += a && b;
  }
  if (np + nt == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + nt);
}

std::vector<double> squared_distance_transform(std::span<const uint8_t> sites, const Dims& dims,
                                               const Spacing& spacing) {
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (sites.size() != total) throw std::invalid_argument("distance transform: size mismatch");
  std::vector<double> d(total);
  for (std::size_t i = 0; i < total; ++i) d[i] = sites[i] ? 0.0 : kInf;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = dims[axis];
    const long stride = axis == 0 ? 1 : axis == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
    const int oa = axis == 0 ? 1 : 0;
    const int ob = axis == 2 ? 1 : 2;
    const long sa = oa == 0 ? 1 : oa == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
    const long sb = ob == 0 ? 1 : ob == 1 ? dims[0] : static_cast<long>(dims[0]) * dims[1];
    const long lines = static_cast<long>(dims[oa]) * dims[ob];
#pragma omp parallel
    {
      std::vector<double> f(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
      std::vector<int> v(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
      for (long l = 0; l < lines; ++l) {
        double* base = d.data() + (l % dims[oa]) * sa + (l / dims[oa]) * sb;
        for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = base[i * stride];
        edt_line(f.data(), out.data(), n, spacing[axis], v, z);
        for (int i = 0; i < n; ++i) base[i * stride] = out[static_cast<std::size_t>(i)];
      }
    }
  }
  return d;
}

VoxelGrid pad_to(const VoxelGrid& grid, const Dims& extent) {
  const auto& d = grid.dims();
  Dims offset{};  // input voxel i lands at output i + offset
  for (int a = 0; a < 3; ++a) offset[a] = (extent[a] - d[a]) / 2;
  Affine shift = Affine::Identity();
  for (int a = 0; a < 3; ++a) shift(a, 3) = -offset[a];
  const Geometry g = Geometry::make(extent, grid.spacing(), grid.affine() * shift);
  std::vector<float> out(g.voxel_count(), 0.0f);
  for (int k = 0; k < extent[2]; ++k) {
    const int sk = k - offset[2];
    if (sk < 0 || sk >= d[2]) continue;
    for (int j = 0; j < extent[1]; ++j) {
      const int sj = j - offset[1];
      if (sj < 0 || sj >= d[1]) continue;
      for (int i = 0; i < extent[0]; ++i) {
        const int si = i - offset[0];
        if (si < 0 || si >= d[0]) continue;
        out[g.index(i, j, k)] = grid.at(si, sj, sk);
      }
    }
  }
  return VoxelGrid(g, std::move(out));
}

double hd95(const SegMaskPair& pair, const Hd95Options& options) {
  require_pair(pair);
  VoxelGrid pred = pair.prediction;
  VoxelGrid truth = pair.truth;
  if (options.pad_extent > 0) {
    Dims extent{};
    bool grow = false;
    for (int a = 0; a < 3; ++a) {
      extent[a] = std::max(options.pad_extent, pred.dims()[a]);
      grow = grow || extent[a] != pred.dims()[a];
    }
    if (grow) {
      pred = pad_to(pred, extent);
      truth = pad_to(truth, extent);
    }
  }
  const Spacing spacing = pair.spacing.value_or(pred.spacing());
  const Dims& dims = pred.dims();
  const auto pm = to_mask(pred);
  const auto tm = to_mask(truth);
  const bool p_any = std::any_of(pm.begin(), pm.end(), [](uint8_t x) { return x != 0; });
  const bool t_any = std::any_of(tm.begin(), tm.end(), [](uint8_t x) { return x != 0; });
  if (!p_any && !t_any) return 0.0;
  if (!p_any || !t_any) return options.empty_value;

  const auto pb = boundary_voxels(pm, dims);
  const auto tb = boundary_voxels(tm, dims);

  // Distances between points of the two boundary sets are unaffected by
  // restricting the transform to their joint bounding box.
  Dims lo{dims[0], dims[1], dims[2]}, hi{-1, -1, -1};
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const std::size_t n = static_cast<std::size_t>(i) + static_cast<std::size_t>(dims[0]) * (j + static_cast<std::size_t>(dims[1]) * k);
        if (!pb[n] && !tb[n]) continue;
        lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
        hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
      }
  const Dims box{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
  const std::size_t bn = static_cast<std::size_t>(box[0]) * box[1] * box[2];
  std::vector<uint8_t> pbox(bn), tbox(bn);
  for (int k = 0; k < box[2]; ++k)
    for (int j = 0; j < box[1]; ++j)
      for (int i = 0; i < box[0]; ++i) {
        const std::size_t b = static_cast<std::size_t>(i) + static_cast<std::size_t>(box[0]) * (j + static_cast<std::size_t>(box[1]) * k);
        const std::size_t n = static_cast<std::size_t>(i + lo[0]) +
                              static_cast<std::size_t>(dims[0]) * ((j + lo[1]) + static_cast<std::size_t>(dims[1]) * (k + lo[2]));
        pbox[b] = pb[n];
        tbox[b] = tb[n];
      }
  const auto dist_to_t = squared_distance_transform(tbox, box, spacing);
  const auto dist_to_p = squared_distance_transform(pbox, box, spacing);
  std::vector<double> forward, backward;
  for (std::size_t b = 0; b < bn; ++b) {
    if (pbox[b]) forward.push_back(std::sqrt(dist_to_t[b]));
    if (tbox[b]) backward.push_back(std::sqrt(dist_to_p[b]));
  }
  if (options.max_of_directed) return std::max(percentile(std::span<const double>(forward), 0.95),
                                               percentile(std::span<const double>(backward), 0.95));
  std::vector<double> all = std::move(forward);
  all.insert(all.end(), backward.begin(), backward.end());
  return percentile(std::span<const double>(all), 0.95);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return 0.5 * (lower + upper);
}

MedianCI bootstrap_median_ci(std::span<const double> values, int resamples, double level, uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("bootstrap_median_ci: empty input");
  if (resamples < 1) throw std::invalid_argument("bootstrap_median_ci: resamples must be positive");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_median_ci: level must lie in (0, 1)");
  const double point = median(std::vector<double>(values.begin(), values.end()));
  const auto n = static_cast<int64_t>(values.size());
  std::vector<double> medians(static_cast<std::size_t>(resamples));
  const uint32_t stream = stream_id("metrics.bootstrap");
#pragma omp parallel
  {
    std::vector<double> sample(values.size());
#pragma omp for schedule(static)
    for (int r = 0; r < resamples; ++r) {
      RandomStream rng(seed, stream, static_cast<uint64_t>(r));
      for (auto& s : sample) s = values[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
      medians[static_cast<std::size_t>(r)] = median(sample);
    }
  }
  const double alpha = 1.0 - level;
  MedianCI ci;
  ci.median = point;
  ci.lo = std::min(point, percentile(std::span<const double>(medians), alpha / 2.0));
  ci.hi = std::max(point, percentile(std::span<const double>(medians), 1.0 - alpha / 2.0));
  return ci;
}

VoxelGrid normalize(const VoxelGrid& vol, NormalizeMethod) {
  const auto v = vol.values();
  if (v.empty()) throw std::invalid_argument("normalize: empty volume");
  const float floor_value = *std::min_element(v.begin(), v.end());
  std::vector<float> fg;
  for (float x : v)
    if (x > floor_value) fg.push_back(x);
  if (fg.empty()) throw std::invalid_argument("normalize: constant volume has no foreground");
  const double lo = percentile(std::span<const float>(fg), 0.005);
  const double hi = percentile(std::span<const float>(fg), 0.995);
  std::vector<double> clipped(fg.size());
  for (std::size_t i = 0; i < fg.size(); ++i) clipped[i] = std::clamp(static_cast<double>(fg[i]), lo, hi);
  const Moments m = moments(clipped);
  if (!(m.stddev > 0.0)) throw std::invalid_argument("normalize: foreground has zero variance after clipping");
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > floor_value)) {
      out[i] = 0.0f;
      continue;
    }
    out[i] = static_cast<float>((std::clamp(static_cast<double>(v[i]), lo, hi) - m.mean) / m.stddev);
  }
  return VoxelGrid(vol.geometry(), std::move(out));
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : cases) cj.push_back({{"case", c.name}, {"dice", c.dice}, {"hd95_mm", c.hd95}});
  auto ci = [](const MedianCI& m) { return nlohmann::json{{"median", m.median}, {"ci_lo", m.lo}, {"ci_hi", m.hi}}; };
  return {{"cases", cj},
          {"cohort", {{"dice", ci(dice)}, {"hd95_mm", ci(hd95)}}},
          {"bootstrap", {{"resamples", resamples}, {"level", level}}}};
}

std::string MetricReport::to_table() const {
  std::size_t width = 6;
  for (const auto& c : cases) width = std::max(width, c.name.size());
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(static_cast<int>(width)) << "case" << "  " << std::right << std::setw(16) << "Dice (%)"
     << "  " << std::setw(16) << "HD95 (mm)" << "\n";
  for (const auto& c : cases)
    os << std::left << std::setw(static_cast<int>(width)) << c.name << "  " << std::right << std::setw(16)
       << 100.0 * c.dice << "  " << std::setw(16) << c.hd95 << "\n";
  auto interval = [](double lo, double hi) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << "[" << lo << ", " << hi << "]";
    return s.str();
  };
  os << std::left << std::setw(static_cast<int>(width)) << "median" << "  " << std::right << std::setw(16)
     << 100.0 * dice.median << "  " << std::setw(16) << hd95.median << "\n";
  os << std::left << std::setw(static_cast<int>(width)) << "95% CI" << "  " << std::right << std::setw(16)
     << interval(100.0 * dice.lo, 100.0 * dice.hi) << "  " << std::setw(16) << interval(hd95.lo, hd95.hi) << "\n";
  return os.str();
}

MetricReport build_report(std::vector<CaseMetrics> cases, int resamples, double level, uint64_t seed) {
  MetricReport r;
  r.cases = std::move(cases);
  r.resamples = resamples;
  r.level = level;
  if (r.cases.empty()) return r;
  std::vector<double> d, h;
  for (const auto& c : r.cases) {
    d.push_back(c.dice);
    h.push_back(c.hd95);
  }
  r.dice = bootstrap_median_ci(d, resamples, level, derive_seed(seed, "report.dice"));
  r.hd95 = bootstrap_median_ci(h, resamples, level, derive_seed(seed, "report.hd95"));
  return r;
}

}  // namespace qmrisim
