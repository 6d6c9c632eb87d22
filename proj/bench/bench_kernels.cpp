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

// Serial reference kernels against their OpenMP counterparts. Thread count
// follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "qmrisim/corrupt.hpp"
#include "qmrisim/phantom.hpp"
#include "qmrisim/qmap_synth.hpp"
#include "qmrisim/reference.hpp"
#include "qmrisim/resample.hpp"

using namespace qmrisim;

namespace {

const LabelVolume& labels() {
  static const LabelVolume l = make_brain_phantom({128, 128, 128}, {1.5, 1.5, 1.5});
  return l;
}

const QmriVolume& maps() {
  static const QmriVolume q = sample_qmri(labels(), default_priors(), 1);
  return q;
}

const AcquisitionParams& mprage() {
  static const AcquisitionParams p = sample_params(ParamRanges::defaults(), Sequence::MPRAGE, 1);
  return p;
}

void BM_SampleQmri_Serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::sample_qmri(labels(), default_priors(), 2));
}
void BM_SampleQmri_Parallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(sample_qmri(labels(), default_priors(), 2));
}

void BM_Simulate_Serial(benchmark::State& s) {
  const auto b1 = uniform_receive_field(maps().geometry());
  for (auto _ : s) benchmark::DoNotOptimize(reference::simulate(maps(), mprage(), b1));
}
void BM_Simulate_Parallel(benchmark::State& s) {
  const auto b1 = uniform_receive_field(maps().geometry());
  for (auto _ : s) benchmark::DoNotOptimize(simulate(maps(), mprage(), b1));
}

void BM_Rician_Serial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(reference::add_rician(maps().pd, 0.02, 3));
}
void BM_Rician_Parallel(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(add_rician(maps().pd, 0.02, 3));
}

void BM_Smooth_Serial(benchmark::State& s) {
  const auto v = maps().r1.values();
  for (auto _ : s) {
    std::vector<double> f(v.begin(), v.end());
    reference::smooth_in_place(f, maps().geometry().dims, {2.0, 2.0, 2.0}, Boundary::Reflect);
    benchmark::DoNotOptimize(f.data());
  }
}
void BM_Smooth_Parallel(benchmark::State& s) {
  const auto v = maps().r1.values();
  for (auto _ : s) {
    std::vector<double> f(v.begin(), v.end());
    smooth_in_place(f, maps().geometry().dims, {2.0, 2.0, 2.0}, Boundary::Reflect);
    benchmark::DoNotOptimize(f.data());
  }
}

void BM_Resample_Serial(benchmark::State& s) {
  const Geometry t = respaced_geometry(maps().geometry(), {1.0, 1.0, 1.0});
  for (auto _ : s)
    benchmark::DoNotOptimize(reference::resample_to(maps().r1, t, Interpolation::Trilinear, Extrapolation::Zero));
}
void BM_Resample_Parallel(benchmark::State& s) {
  const Geometry t = respaced_geometry(maps().geometry(), {1.0, 1.0, 1.0});
  for (auto _ : s) benchmark::DoNotOptimize(resample_to(maps().r1, t, Interpolation::Trilinear, Extrapolation::Zero));
}

void BM_SlidingWindow_Serial(benchmark::State& s) {
  WindowSpec spec;
  spec.patch = {64, 64, 64};
  const ThresholdPredictor model(0.7f);
  for (auto _ : s) benchmark::DoNotOptimize(reference::sliding_window_predict({maps().pd}, model, spec));
}
void BM_SlidingWindow_Parallel(benchmark::State& s) {
  WindowSpec spec;
  spec.patch = {64, 64, 64};
  const ThresholdPredictor model(0.7f);
  for (auto _ : s) benchmark::DoNotOptimize(sliding_window_predict({maps().pd}, model, spec));
}

}  // namespace

BENCHMARK(BM_SampleQmri_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleQmri_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Simulate_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Rician_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rician_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Smooth_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Smooth_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Resample_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resample_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SlidingWindow_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SlidingWindow_Parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
