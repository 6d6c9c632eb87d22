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

#include "qmrisim/qmap_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qmrisim/filter.hpp"
#include "qmrisim/kernels.hpp"
#include "qmrisim/morphology.hpp"
#include "qmrisim/random.hpp"

namespace qmrisim {

QmriVolume sample_qmri(const LabelVolume& labels, const TissuePriorSet& priors, uint64_t seed) {
  const auto present = labels.present_labels();
  for (int l : present) {
    if (!priors.contains(l))
      throw PriorError("/" + std::to_string(l), "no prior for label " + std::to_string(l) + " (" +
                                                    labels.names().at(l) + ")");
  }
  priors.validate();

  // Dense label -> prior table for the voxel loop.
  const int max_label = present.empty() ? 0 : present.back();
  std::vector<const LabelPrior*> table(static_cast<std::size_t>(max_label) + 1, nullptr);
  for (int l : present) table[static_cast<std::size_t>(l)] = &priors.at(l);

  const auto& geom = labels.geometry();
  const std::size_t n = geom.voxel_count();
  std::array<std::vector<float>, 4> out;
  for (auto& ch : out) ch.resize(n);

  std::vector<int> smoothed;
  for (int l : present)
    if (priors.at(l).smooth_fwhm_mm) smoothed.push_back(l);

  // Channels of smoothed labels are kept unclamped until after smoothing.
#pragma omp parallel for schedule(static)
  for (long v = 0; v < static_cast<long>(n); ++v) {
    const auto idx = static_cast<std::size_t>(v);
    const LabelPrior& prior = *table[static_cast<std::size_t>(labels.label_at(idx))];
    QmriVector x = kernels::gmm_draw(prior, seed, idx);
    if (!prior.smooth_fwhm_mm) x = kernels::clamp_physical(x);
    for (int ch = 0; ch < 4; ++ch) out[ch][idx] = static_cast<float>(x[ch]);
  }

  for (int l : smoothed) {
    const double sigma_mm = fwhm_to_sigma(*priors.at(l).smooth_fwhm_mm);
    std::array<double, 3> sigma_vox{};
    for (int a = 0; a < 3; ++a) sigma_vox[a] = sigma_mm / geom.spacing[a];
    std::vector<double> weight(n);
    for (std::size_t v = 0; v < n; ++v) weight[v] = labels.label_at(v) == l ? 1.0 : 0.0;
    std::vector<double> norm = weight;
    smooth_in_place(norm, geom.dims, sigma_vox, Boundary::Zero);
    for (int ch = 0; ch < 4; ++ch) {
      std::vector<double> field(n);
      for (std::size_t v = 0; v < n; ++v) field[v] = weight[v] * out[ch][v];
      smooth_in_place(field, geom.dims, sigma_vox, Boundary::Zero);
      for (std::size_t v = 0; v < n; ++v)
        if (weight[v] > 0.0) out[ch][v] = static_cast<float>(field[v] / norm[v]);
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (weight[v] == 0.0) continue;
      const auto c = kernels::clamp_physical({out[0][v], out[1][v], out[2][v], out[3][v]});
      for (int ch = 0; ch < 4; ++ch) out[ch][v] = static_cast<float>(c[ch]);
    }
  }

  return QmriVolume{VoxelGrid(geom, std::move(out[0])), VoxelGrid(geom, std::move(out[1])),
                    VoxelGrid(geom, std::move(out[2])), VoxelGrid(geom, std::move(out[3]))};
}

void LesionStampConfig::validate() const {
  if (count_min < 0 || count_max < count_min)
    throw std::invalid_argument("lesion count range [" + std::to_string(count_min) + ", " +
                                std::to_string(count_max) + "] is empty or negative");
  if (!(size_min_mm > 0.0) || size_max_mm < size_min_mm)
    throw std::invalid_argument("lesion size range must be positive with min <= max");
  if (!(irregularity >= 0.0 && irregularity <= 1.0))
    throw std::invalid_argument("lesion irregularity must lie in [0, 1]");
  if (lesion_label <= 0) throw std::invalid_argument("lesion label must be a positive integer");
}

LabelVolume stamp_lesion(const LabelVolume& labels, const VoxelGrid& lesion_mask, int lesion_label,
                         const std::set<int>& replaceable) {
  const VoxelGrid mask_only[] = {lesion_mask};
  require_coregistered(labels.grid(), mask_only, "stamp_lesion");
  std::vector<float> out(labels.grid().values().begin(), labels.grid().values().end());
  const auto mask = lesion_mask.values();
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (mask[v] > 0.5f && replaceable.count(static_cast<int>(out[v])))
      out[v] = static_cast<float>(lesion_label);
  }
  auto names = labels.names();
  if (!names.count(lesion_label)) names[lesion_label] = "lesion";
  return LabelVolume(VoxelGrid(labels.geometry(), std::move(out)), std::move(names));
}

namespace {

struct Blob {
  Eigen::Vector3d centre_vox;  // continuous voxel coordinates
  double reach_mm;             // no voxel of the blob lies farther than this
};

Eigen::Matrix3d random_rotation(RandomStream& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace

VoxelGrid generate_lesion_mask(const Geometry& geometry, const LesionStampConfig& config, uint64_t seed,
                               const LabelVolume* anchor) {
  config.validate();
  geometry.validate();
  const auto& dims = geometry.dims;
  const auto& sp = geometry.spacing;
  RandomStream rng(seed, stream_id("lesion.layout"));
  const int count = static_cast<int>(rng.uniform_int(config.count_min, config.count_max));

  std::vector<std::size_t> candidates;
  if (anchor) {
    const VoxelGrid only[] = {anchor->grid()};
    require_coregistered(VoxelGrid(geometry, 0.0f), only, "lesion anchor labels");
    for (std::size_t v = 0; v < anchor->grid().size(); ++v)
      if (config.replaceable.count(anchor->label_at(v))) candidates.push_back(v);
  }

  std::vector<uint8_t> mask(geometry.voxel_count(), 0);
  std::vector<Blob> placed;
  const double voxel_volume = sp[0] * sp[1] * sp[2];
  const double max_sp = std::max({sp[0], sp[1], sp[2]});

  for (int b = 0; b < count; ++b) {
    const double diameter = rng.uniform(config.size_min_mm, config.size_max_mm);
    const double radius = 0.5 * diameter;
    // Volume-preserving random aspect ratios.
    Eigen::Vector3d axes;
    for (int a = 0; a < 3; ++a) axes[a] = std::exp(rng.uniform(-0.25, 0.25));
    axes /= std::cbrt(axes.prod());
    const Eigen::Matrix3d rot = random_rotation(rng);
    const double reach = 1.5 * radius * axes.maxCoeff() + max_sp;

    auto draw_centre = [&]() -> Eigen::Vector3d {
      if (!candidates.empty()) {
        const std::size_t v = candidates[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))];
        return {static_cast<double>(v % dims[0]), static_cast<double>((v / dims[0]) % dims[1]),
                static_cast<double>(v / (static_cast<std::size_t>(dims[0]) * dims[1]))};
      }
      Eigen::Vector3d c;
      for (int a = 0; a < 3; ++a) {
        const double margin = std::min(reach / sp[a], 0.5 * (dims[a] - 1));
        c[a] = rng.uniform(margin, (dims[a] - 1) - margin);
      }
      return c;
    };
    auto separated = [&](const Eigen::Vector3d& c) {
      for (const auto& other : placed) {
        const Eigen::Vector3d d = (c - other.centre_vox).cwiseProduct(Eigen::Vector3d(sp[0], sp[1], sp[2]));
        if (d.norm() < reach + other.reach_mm + 2.0 * max_sp) return false;
      }
      return true;
    };
    Eigen::Vector3d centre = draw_centre();
    for (int attempt = 0; attempt < 200 && !separated(centre); ++attempt) centre = draw_centre();
    placed.push_back({centre, reach});

    // Local box around the centre.
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor(centre[a] - reach / sp[a])));
      hi[a] = std::min(dims[a] - 1, static_cast<int>(std::ceil(centre[a] + reach / sp[a])));
    }
    const Dims box{hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    const std::size_t box_n = static_cast<std::size_t>(box[0]) * box[1] * box[2];

    std::vector<double> noise(box_n);
    RandomStream noise_rng(derive_seed(seed, "lesion.noise", static_cast<uint64_t>(b)), stream_id("lesion.noise"));
    for (auto& x : noise) x = noise_rng.normal();
    const double noise_sigma_mm = 0.35 * radius;
    smooth_in_place(noise, box, {noise_sigma_mm / sp[0], noise_sigma_mm / sp[1], noise_sigma_mm / sp[2]},
                    Boundary::Reflect);
    const Moments nm = moments(noise);

    const Eigen::Matrix3d to_local = (rot * axes.asDiagonal()).inverse();
    std::vector<double> field(box_n, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> inside;
    for (int k = 0; k < box[2]; ++k)
      for (int j = 0; j < box[1]; ++j)
        for (int i = 0; i < box[0]; ++i) {
          const std::size_t bn = static_cast<std::size_t>(i) + box[0] * (static_cast<std::size_t>(j) + box[1] * k);
          const Eigen::Vector3d d_mm((lo[0] + i - centre[0]) * sp[0], (lo[1] + j - centre[1]) * sp[1],
                                     (lo[2] + k - centre[2]) * sp[2]);
          if (d_mm.norm() > reach) continue;
          const double rho = (to_local * d_mm).norm() / radius;
          const double z = nm.stddev > 0.0 ? (noise[bn] - nm.mean) / nm.stddev : 0.0;
          field[bn] = (1.0 - rho) + config.irregularity * 0.6 * z;
          inside.push_back(bn);
        }
    if (inside.empty()) continue;

    const auto target = static_cast<std::size_t>(
        std::clamp(std::lround(std::numbers::pi / 6.0 * diameter * diameter * diameter / voxel_volume), 1L,
                   static_cast<long>(inside.size())));
    std::vector<double> ranked;
    ranked.reserve(inside.size());
    for (auto bn : inside) ranked.push_back(field[bn]);
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<long>(target - 1), ranked.end(),
                     std::greater<>());
    const double level = ranked[target - 1];

    std::vector<uint8_t> local(box_n, 0);
    std::size_t peak = inside.front();
    for (auto bn : inside) {
      if (field[bn] >= level) local[bn] = 1;
      if (field[bn] > field[peak]) peak = bn;
    }
    int ncomp = 0;
    const auto ids = connected_components(local, box, Connectivity::Face6, &ncomp);
    const int keep = ids[peak];
    for (int k = 0; k < box[2]; ++k)
      for (int j = 0; j < box[1]; ++j)
        for (int i = 0; i < box[0]; ++i) {
          const std::size_t bn = static_cast<std::size_t>(i) + box[0] * (static_cast<std::size_t>(j) + box[1] * k);
          if (ids[bn] == keep && keep != 0) mask[geometry.index(lo[0] + i, lo[1] + j, lo[2] + k)] = 1;
        }
  }

  return VoxelGrid(geometry, std::vector<float>(mask.begin(), mask.end()));
}

}  // namespace qmrisim
