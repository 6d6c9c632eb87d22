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

// Scalar per-voxel kernels shared by the OpenMP operations and the serial
// reference implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "qmrisim/priors.hpp"
#include "qmrisim/random.hpp"

namespace qmrisim::kernels {

inline constexpr uint32_t kGmmStream = stream_id("qmri.gmm");
inline constexpr uint32_t kRicianStream = stream_id("corrupt.rician");
inline constexpr uint32_t kGaussianNoiseStream = stream_id("corrupt.gaussian");
inline constexpr uint32_t kFieldNoiseStream = stream_id("field.noise");

/// sin and cos of an angle in degrees, exact at 90 degrees so the GRE
/// equation collapses bitwise onto the FSE one.
struct SinCos {
  double s, c;
};
inline SinCos sincos_deg(double deg) {
  if (deg == 90.0) return {1.0, 0.0};
  const double rad = deg * (std::numbers::pi / 180.0);
  return {std::sin(rad), std::cos(rad)};
}

/// S = B1 PD (1 - e^{-R1 TR}) e^{-R2 TE}
inline double fse_signal(double b1, double pd, double r1, double r2, double tr, double te) {
  return b1 * pd * (1.0 - std::exp(-r1 * tr)) * std::exp(-r2 * te);
}

/// Spoiled steady-state gradient echo (Ernst):
/// S = B1 PD sin(a) (1 - E1) E2 / (1 - cos(a) E1)
inline double gre_signal(double b1, double pd, double r1, double r2s, double tr, double te, SinCos flip) {
  const double e1 = std::exp(-r1 * tr);
  return b1 * pd * flip.s * (1.0 - e1) * std::exp(-r2s * te) / (1.0 - flip.c * e1);
}

/// Magnitude inversion-recovery spin echo:
/// S = B1 PD |1 - 2 e^{-R1 TI} + e^{-R1 TR}| e^{-R2* TE}
inline double flair_signal(double b1, double pd, double r1, double r2s, double tr, double te, double ti) {
  return b1 * pd * std::abs(1.0 - 2.0 * std::exp(-r1 * ti) + std::exp(-r1 * tr)) * std::exp(-r2s * te);
}

/// Inversion-prepared gradient echo with TD + TX + TI as the recovery period:
/// S = B1 PD sin(a) |1 - 2 e^{-R1 TI} + e^{-R1 (TD + TX + TI)}| e^{-R2* TE}
inline double mprage_signal(double b1, double pd, double r1, double r2s, double te, double ti, double tx,
                            double td, SinCos flip) {
  return b1 * pd * flip.s * std::abs(1.0 - 2.0 * std::exp(-r1 * ti) + std::exp(-r1 * (td + tx + ti))) *
         std::exp(-r2s * te);
}

/// |S + n_r + i n_i| with n_r, n_i ~ N(0, sigma^2) drawn from lane `index`.
inline double rician_sample(double signal, double sigma, uint64_t seed, uint64_t index) {
  RandomStream rng(seed, kRicianStream, index);
  const double nr = sigma * rng.normal();
  const double ni = sigma * rng.normal();
  const double re = signal + nr;
  return std::sqrt(re * re + ni * ni);
}

/// One draw from a label's mixture on lane `index`, before clamping.
inline QmriVector gmm_draw(const LabelPrior& prior, uint64_t seed, uint64_t index) {
  RandomStream rng(seed, kGmmStream, index);
  const double u = rng.uniform();
  const auto& comps = prior.components;
  std::size_t pick = comps.size() - 1;
  double cum = 0.0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    cum += comps[c].weight;
    if (u < cum) {
      pick = c;
      break;
    }
  }
  // Zero-weight trailing components must never be picked by rounding.
  while (pick > 0 && comps[pick].weight == 0.0) --pick;
  const auto& comp = comps[pick];
  QmriVector v;
  for (int ch = 0; ch < 4; ++ch) v[ch] = comp.mean[ch] + comp.stddev[ch] * rng.normal();
  return v;
}

inline QmriVector clamp_physical(QmriVector v) {
  v[kPD] = std::max(v[kPD], 0.0);
  v[kR1] = std::max(v[kR1], 0.0);
  v[kR2s] = std::max(v[kR2s], 0.0);
  v[kMT] = std::clamp(v[kMT], 0.0, 100.0);
  return v;
}

}  // namespace qmrisim::kernels
