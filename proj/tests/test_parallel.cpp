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

#include <doctest.h>

#include <cstring>

#include "qmrisim/corrupt.hpp"
#include "qmrisim/metrics.hpp"
#include "qmrisim/phantom.hpp"
#include "qmrisim/qmap_synth.hpp"
#include "qmrisim/random.hpp"
#include "qmrisim/reference.hpp"
#include "test_support.hpp"

using namespace qmrisim;

namespace {

const int kThreadCounts[] = {1, 2, 3, 8};

bool same_doubles(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

const LabelVolume& phantom() {
  static const LabelVolume p = make_brain_phantom({40, 44, 36}, {1.5, 1.5, 1.5});
  return p;
}

const QmriVolume& maps() {
  static const QmriVolume q = reference::sample_qmri(phantom(), default_priors(), 31);
  return q;
}

}  // namespace

TEST_CASE("qMRI sampling matches the serial reference at every thread count") {
  TissuePriorSet priors = default_priors();
  LabelPrior gm = priors.at(1);
  gm.smooth_fwhm_mm = 4.0;
  priors = priors.with(1, gm);
  const QmriVolume ref = reference::sample_qmri(phantom(), priors, 5);
  for (int n : kThreadCounts) {
    CAPTURE(n);
    const QmriVolume q = test::with_threads(n, [&] { return sample_qmri(phantom(), priors, 5); });
    CHECK(test::bitwise_equal(q.pd, ref.pd));
    CHECK(test::bitwise_equal(q.r1, ref.r1));
    CHECK(test::bitwise_equal(q.r2s, ref.r2s));
    CHECK(test::bitwise_equal(q.mt, ref.mt));
  }
}

TEST_CASE("forward models match the serial reference") {
  const auto b1 = generate_receive_field(maps().geometry(), 0.2, 60.0, 3);
  for (Sequence s : {Sequence::FSE, Sequence::GRE, Sequence::FLAIR, Sequence::MPRAGE}) {
    const AcquisitionParams p = sample_params(ParamRanges::defaults(), s, 17);
    const VoxelGrid ref = reference::simulate(maps(), p, b1);
    for (int n : kThreadCounts) {
      CAPTURE(n);
      CHECK(test::bitwise_equal(test::with_threads(n, [&] { return simulate(maps(), p, b1); }), ref));
    }
  }
}

TEST_CASE("Rician noise matches the serial reference") {
  const VoxelGrid signal = simulate(maps(), sample_params(ParamRanges::defaults(), Sequence::FSE, 1),
                                    uniform_receive_field(maps().geometry()));
  const VoxelGrid ref = reference::add_rician(signal, 0.02, 9);
  for (int n : kThreadCounts)
    CHECK(test::bitwise_equal(test::with_threads(n, [&] { return add_rician(signal, 0.02, 9); }), ref));
}

TEST_CASE("separable smoothing matches the direct reference") {
  const Dims d{23, 19, 17};
  std::vector<double> base(static_cast<std::size_t>(d[0]) * d[1] * d[2]);
  RandomStream r(2, 2);
  for (auto& v : base) v = r.normal();
  for (Boundary b : {Boundary::Reflect, Boundary::Zero}) {
    std::vector<double> ref = base;
    reference::smooth_in_place(ref, d, {1.2, 0.0, 2.5}, b);
    for (int n : kThreadCounts) {
      std::vector<double> f = base;
      test::with_threads(n, [&] {
        smooth_in_place(f, d, {1.2, 0.0, 2.5}, b);
        return 0;
      });
      CHECK(same_doubles(f, ref));
    }
  }
}

TEST_CASE("resampling matches the serial reference") {
  const VoxelGrid img = maps().r1;
  const Geometry target = respaced_geometry(img.geometry(), {1.1, 2.3, 0.9});
  for (Interpolation in : {Interpolation::Nearest, Interpolation::Trilinear}) {
    const VoxelGrid ref = reference::resample_to(img, target, in, Extrapolation::Zero);
    for (int n : kThreadCounts)
      CHECK(test::bitwise_equal(test::with_threads(n, [&] { return resample_to(img, target, in, Extrapolation::Zero); }), ref));
  }
}

TEST_CASE("sliding window matches the serial reference") {
  WindowSpec spec;
  spec.patch = {16, 16, 16};
  const ThresholdPredictor model(0.6f, 2.0f);
  const Logits ref = reference::sliding_window_predict({maps().pd}, model, spec);
  for (int n : kThreadCounts) {
    const Logits l = test::with_threads(n, [&] { return sliding_window_predict({maps().pd}, model, spec); });
    REQUIRE(l.size() == ref.size());
    for (std::size_t c = 0; c < l.size(); ++c) CHECK(test::bitwise_equal(l[c], ref[c]));
  }
}

TEST_CASE("stochastic stages are thread-count invariant") {
  AugmentPlan plan;
  plan.crop.size = {32, 32, 32};
  const VoxelGrid signal = maps().pd;
  const SpatialResult s1 = test::with_threads(1, [&] { return spatial_augment({signal}, phantom(), plan, 4); });
  const IntensityResult i1 = test::with_threads(1, [&] { return corrupt_intensity(s1.images[0], plan, 4); });
  const VoxelGrid m1 = test::with_threads(1, [&] { return normalize(i1.image); });
  const ReceiveField f1 = test::with_threads(1, [&] { return generate_receive_field(signal.geometry(), 0.2, 40, 6); });
  for (int n : {2, 3, 8}) {
    const SpatialResult s = test::with_threads(n, [&] { return spatial_augment({signal}, phantom(), plan, 4); });
    CHECK(test::bitwise_equal(s.images[0], s1.images[0]));
    CHECK(test::bitwise_equal(s.labels->grid(), s1.labels->grid()));
    const IntensityResult i = test::with_threads(n, [&] { return corrupt_intensity(s.images[0], plan, 4); });
    CHECK(test::bitwise_equal(i.image, i1.image));
    CHECK(i.realized == i1.realized);
    CHECK(test::bitwise_equal(test::with_threads(n, [&] { return normalize(i.image); }), m1));
    CHECK(test::bitwise_equal(
        test::with_threads(n, [&] { return generate_receive_field(signal.geometry(), 0.2, 40, 6); }).b1, f1.b1));
  }
}

TEST_CASE("metrics are thread-count invariant") {
  const VoxelGrid a = test::filled({30, 30, 30}, {1, 1, 1}, [](int i, int j, int k) { return std::hypot(i - 14, j - 15, k - 13) < 8 ? 1.0f : 0.0f; });
  const VoxelGrid b = test::filled({30, 30, 30}, {1, 1, 1}, [](int i, int j, int k) { return std::hypot(i - 16, j - 13, k - 15) < 6 ? 1.0f : 0.0f; });
  const double h1 = test::with_threads(1, [&] { return hd95({a, b, std::nullopt}); });
  std::vector<double> vals(300);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(double(i)) * 10;
  const MedianCI c1 = test::with_threads(1, [&] { return bootstrap_median_ci(vals, 2000, 0.95, 1); });
  for (int n : {2, 3, 8}) {
    CHECK(test::with_threads(n, [&] { return hd95({a, b, std::nullopt}); }) == h1);
    const MedianCI c = test::with_threads(n, [&] { return bootstrap_median_ci(vals, 2000, 0.95, 1); });
    CHECK((c.lo == c1.lo && c.hi == c1.hi && c.median == c1.median));
  }
}
