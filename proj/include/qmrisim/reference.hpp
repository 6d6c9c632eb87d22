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

// Single-threaded reference implementations of the parallel kernels. They
// use the same per-voxel arithmetic in plain nested loops and exist so
// tests can require bitwise agreement and benchmarks can measure speed-up.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qmrisim/filter.hpp"
#include "qmrisim/harness.hpp"
#include "qmrisim/physics.hpp"
#include "qmrisim/priors.hpp"
#include "qmrisim/resample.hpp"
#include "qmrisim/volume.hpp"

namespace qmrisim::reference {

VoxelGrid simulate(const QmriVolume& q, const AcquisitionParams& p, const ReceiveField& b1);
VoxelGrid add_rician(const VoxelGrid& signal, double sigma, uint64_t seed);
void smooth_in_place(std::span<double> field, const Dims& dims, const std::array<double, 3>& sigma_vox,
                     Boundary boundary);
QmriVolume sample_qmri(const LabelVolume& labels, const TissuePriorSet& priors, uint64_t seed);
VoxelGrid resample_to(const VoxelGrid& grid, const Geometry& target, Interpolation interp, Extrapolation ext);
Logits sliding_window_predict(const std::vector<VoxelGrid>& channels, const Predictor& model, const WindowSpec& spec);

}  // namespace qmrisim::reference
