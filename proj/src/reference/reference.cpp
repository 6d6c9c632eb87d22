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

#include "qmrisim/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "qmrisim/kernels.hpp"

namespace qmrisim::reference {

VoxelGrid simulate(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1) {
  p.validate();
  const std::size_t n = q.pd.size();
  std::vector<float> out(n);
  const auto flip = kernels::sincos_deg(p.alpha);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = b1.b1[i], pd = q.pd[i], r1 = q.r1[i], r2 = q.r2s[i];
    double s = 0.0;
    switch (p.sequence) {
      case Sequence::FSE: s = kernels::fse_signal(b, pd, r1, r2, p.tr, p.te); break;
      case Sequence::GRE: s = kernels::gre_signal(b, pd, r1, r2, p.tr, p.te, flip); break;
      case Sequence::FLAIR: s = kernels::flair_signal(b, pd, r1, r2, p.tr, p.te, p.ti); break;
      case Sequence::MPRAGE: s = kernels::mprage_signal(b, pd, r1, r2, p.te, p.ti, p.tx, p.td, flip); break;
    }
    out[i] = static_cast<float>(s);
  }
  return VoxelGrid(q.pd.geometry(), std::move(out));
}

VoxelGrid add_rician(const VoxelGrid& signal, double sigma, uint64_t seed) {
  std::vector<float> out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = sigma == 0.0 ? std::abs(signal[i]) : static_cast<float>(kernels::rician_sample(signal[i], sigma, seed, i));
  return VoxelGrid(signal.geometry(), std::move(out));
}

void smooth_in_place(std::span<double> field, const Dims& dims, const std::array<double, 3>& sigma_vox,
                     Boundary boundary) {
  const Geometry g = Geometry::make(dims, {1.0, 1.0, 1.0});
  for (int axis = 0; axis < 3; ++axis) {
    if (!(sigma_vox[axis] > 0.0)) continue;
    const auto taps = gaussian_taps(sigma_vox[axis]);
    const int radius = static_cast<int>(taps.size() / 2);
    const int n = dims[axis];
    std::vector<double> src(field.begin(), field.end());
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const int pos[3] = {i, j, k};
          double acc = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            int m = pos[axis] + t;
            if (m < 0 || m >= n) {
              if (boundary == Boundary::Zero) continue;
              const int period = 2 * n;
              m %= period;
              if (m < 0) m += period;
              if (m >= n) m = period - 1 - m;
            }
            int q[3] = {i, j, k};
            q[axis] = m;
            acc += taps[static_cast<std::size_t>(t + radius)] * src[g.index(q[0], q[1], q[2])];
          }
          field[g.index(i, j, k)] = acc;
        }
  }
}

QmriVolume sample_qmri(const LabelVolume& labels, const TissuePriorSet& priors, uint64_t seed) {
  const auto& geom = labels.geometry();
  const std::size_t n = geom.voxel_count();
  std::array<std::vector<float>, 4> out;
  for (auto& ch : out) ch.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const LabelPrior& prior = priors.at(labels.label_at(v));
    QmriVector x = kernels::gmm_draw(prior, seed, v);
    if (!prior.smooth_fwhm_mm) x = kernels::clamp_physical(x);
    for (int ch = 0; ch < 4; ++ch) out[ch][v] = static_cast<float>(x[ch]);
  }
  for (int l : labels.present_labels()) {
    const LabelPrior& prior = priors.at(l);
    if (!prior.smooth_fwhm_mm) continue;
    std::array<double, 3> sigma_vox{};
    for (int a = 0; a < 3; ++a) sigma_vox[a] = fwhm_to_sigma(*prior.smooth_fwhm_mm) / geom.spacing[a];
    std::vector<double> weight(n), norm(n);
    for (std::size_t v = 0; v < n; ++v) norm[v] = weight[v] = labels.label_at(v) == l ? 1.0 : 0.0;
    reference::smooth_in_place(norm, geom.dims, sigma_vox, Boundary::Zero);
    for (int ch = 0; ch < 4; ++ch) {
      std::vector<double> field(n);
      for (std::size_t v = 0; v < n; ++v) field[v] = weight[v] * out[ch][v];
      reference::smooth_in_place(field, geom.dims, sigma_vox, Boundary::Zero);
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

VoxelGrid resample_to(const VoxelGrid& grid, const Geometry& target, Interpolation interp, Extrapolation ext) {
  const Eigen::Matrix4d map = grid.affine().inverse() * target.affine;
  std::vector<float> out(target.voxel_count());
  for (int k = 0; k < target.dims[2]; ++k)
    for (int j = 0; j < target.dims[1]; ++j)
      for (int i = 0; i < target.dims[0]; ++i) {
        const Eigen::Vector4d s = map * Eigen::Vector4d(i, j, k, 1.0);
        out[target.index(i, j, k)] = interp == Interpolation::Trilinear ? sample_trilinear(grid, s[0], s[1], s[2], ext)
                                                                        : sample_nearest(grid, s[0], s[1], s[2], ext);
      }
  return VoxelGrid(target, std::move(out));
}

Logits sliding_window_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec) {
  const Geometry& geom = channels.front().geometry();
  const Dims& vd = geom.dims;
  const Dims& P = spec.patch;
  Dims pd{}, lo{};
  for (int a = 0; a < 3; ++a) {
    pd[a] = std::max(vd[a], P[a]);
    lo[a] = (pd[a] - vd[a]) / 2;
  }
  const Geometry pg = Geometry::make(pd, {1.0, 1.0, 1.0});
  const Geometry patch_g = Geometry::make(P, {1.0, 1.0, 1.0});
  // Value of channel c at padded voxel (i, j, k); zero outside the volume.
  auto padded_at = [&](std::size_t c, int i, int j, int k) -> float {
    const int si = i - lo[0], sj = j - lo[1], sk = k - lo[2];
    if (si < 0 || sj < 0 || sk < 0 || si >= vd[0] || sj >= vd[1] || sk >= vd[2]) return 0.0f;
    return channels[c].at(si, sj, sk);
  };
  const int classes = model.num_classes();
  std::vector<std::vector<double>> num(static_cast<std::size_t>(classes), std::vector<double>(pg.voxel_count(), 0.0));
  std::vector<double> den(pg.voxel_count(), 0.0);
  const auto w = blend_weights(P, spec.sigma_fraction);
  for (int z0 : window_starts(pd[2], P[2], spec.overlap))
    for (int y0 : window_starts(pd[1], P[1], spec.overlap))
      for (int x0 : window_starts(pd[0], P[0], spec.overlap)) {
        Patch in;
        in.dims = P;
        in.channels.assign(channels.size(), std::vector<float>(patch_g.voxel_count()));
        for (std::size_t c = 0; c < channels.size(); ++c)
          for (int k = 0; k < P[2]; ++k)
            for (int j = 0; j < P[1]; ++j)
              for (int i = 0; i < P[0]; ++i) in.channels[c][patch_g.index(i, j, k)] = padded_at(c, x0 + i, y0 + j, z0 + k);
        const Patch out = model.predict(in);
        for (int k = 0; k < P[2]; ++k)
          for (int j = 0; j < P[1]; ++j)
            for (int i = 0; i < P[0]; ++i) {
              const std::size_t pv = patch_g.index(i, j, k);
              const std::size_t gv = pg.index(x0 + i, y0 + j, z0 + k);
              den[gv] += w[pv];
              for (int c = 0; c < classes; ++c)
                num[static_cast<std::size_t>(c)][gv] += w[pv] * out.channels[static_cast<std::size_t>(c)][pv];
            }
      }
  Logits result;
  for (int c = 0; c < classes; ++c) {
    std::vector<float> v(geom.voxel_count());
    for (int k = 0; k < vd[2]; ++k)
      for (int j = 0; j < vd[1]; ++j)
        for (int i = 0; i < vd[0]; ++i) {
          const std::size_t gv = pg.index(i + lo[0], j + lo[1], k + lo[2]);
          v[geom.index(i, j, k)] = static_cast<float>(num[static_cast<std::size_t>(c)][gv] / den[gv]);
        }
    result.emplace_back(geom, std::move(v));
  }
  return result;
}

}  // namespace qmrisim::reference
