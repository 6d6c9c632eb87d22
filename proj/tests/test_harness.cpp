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

#include <cmath>

#include "qmrisim/harness.hpp"
#include "qmrisim/random.hpp"
#include "test_support.hpp"

using namespace qmrisim;

namespace {

// Logit = channel 0, one class.
class IdentityPredictor : public Predictor {
 public:
  int num_classes() const override { return 1; }
  Patch predict(const Patch& in) const override {
    Patch out;
    out.dims = in.dims;
    out.channels = {in.channels.at(0)};
    return out;
  }
};

// +1 when the patch increases along every axis (input unflipped), else -1.
class OrientationPredictor : public Predictor {
 public:
  int num_classes() const override { return 1; }
  Patch predict(const Patch& in) const override {
    const auto& c = in.channels.at(0);
    const int nx = in.dims[0], ny = in.dims[1];
    const bool up = c[1] > c[0] && c[nx] > c[0] && c[static_cast<std::size_t>(nx) * ny] > c[0];
    Patch out;
    out.dims = in.dims;
    out.channels = {std::vector<float>(in.voxel_count(), up ? 1.0f : -1.0f)};
    return out;
  }
};

class WrongShapePredictor : public Predictor {
 public:
  int num_classes() const override { return 1; }
  Patch predict(const Patch& in) const override {
    Patch out;
    out.dims = {in.dims[0] - 1, in.dims[1], in.dims[2]};
    out.channels = {std::vector<float>(out.voxel_count(), 0.0f)};
    return out;
  }
};

VoxelGrid ramp(const Dims& d) {
  return test::filled(d, {1, 1, 1}, [](int i, int j, int k) { return float(i + 0.5 * j + 0.25 * k); });
}

VoxelGrid random_grid(const Dims& d, uint64_t seed) {
  RandomStream r(seed, 1);
  return test::filled(d, {1, 1, 1}, [&](int, int, int) { return float(r.normal()); });
}

}  // namespace

TEST_CASE("window starts cover the axis with the requested stride") {
  CHECK(window_starts(192, 192, 0.5) == std::vector<int>{0});
  CHECK(window_starts(256, 192, 0.5) == std::vector<int>{0, 64});
  CHECK(window_starts(10, 4, 0.5) == std::vector<int>{0, 2, 4, 6});
  CHECK(window_starts(11, 4, 0.5) == std::vector<int>{0, 2, 4, 6, 7});
  CHECK(window_starts(5, 4, 0.99) == std::vector<int>{0, 1});
}

TEST_CASE("blend weights peak at 1 in the centre") {
  const auto w = blend_weights({9, 9, 9}, 0.125);
  CHECK(w.size() == 729);
  CHECK(*std::max_element(w.begin(), w.end()) == doctest::Approx(1.0));
  CHECK(w[4 + 9 * (4 + 9 * 4)] == doctest::Approx(1.0));
  for (double x : w) CHECK(x > 0.0);
}

TEST_CASE("constant predictor gives its logits everywhere (partition of unity)") {
  const ConstantPredictor model({0.25f, -3.0f, 7.5f});
  for (double overlap : {0.0, 0.3, 0.5, 0.75}) {
    WindowSpec spec;
    spec.patch = {8, 6, 5};
    spec.overlap = overlap;
    const Logits out = sliding_window_predict({random_grid({21, 13, 9}, 1)}, model, spec);
    REQUIRE(out.size() == 3);
    for (int c = 0; c < 3; ++c)
      for (float v : out[c].values()) REQUIRE(std::abs(v - std::vector<float>{0.25f, -3.0f, 7.5f}[c]) <= 1e-6f * 7.5f);
  }
}

TEST_CASE("single window equals the raw predictor output") {
  const VoxelGrid x = random_grid({8, 8, 8}, 2);
  WindowSpec spec;
  spec.patch = {8, 8, 8};
  const Logits out = sliding_window_predict({x}, IdentityPredictor(), spec);
  CHECK(test::bitwise_equal(out[0], x));
}

TEST_CASE("blending consistent windows reproduces a ramp") {
  const VoxelGrid x = ramp({40, 24, 16});
  WindowSpec spec;
  spec.patch = {16, 16, 16};
  const Logits out = sliding_window_predict({x}, IdentityPredictor(), spec);
  for (std::size_t v = 0; v < x.size(); ++v) REQUIRE(std::abs(out[0][v] - x[v]) <= 1e-5f * std::max(1.0f, x[v]));
}

TEST_CASE("volumes smaller than the patch are padded and cropped back") {
  const VoxelGrid x = ramp({5, 7, 3});
  WindowSpec spec;
  spec.patch = {8, 8, 8};
  const Logits out = sliding_window_predict({x}, IdentityPredictor(), spec);
  CHECK(out[0].geometry().dims == x.geometry().dims);
  for (std::size_t v = 0; v < x.size(); ++v) CHECK(out[0][v] == doctest::Approx(x[v]));
}

TEST_CASE("predictor shape mismatch is an error") {
  WindowSpec spec;
  spec.patch = {4, 4, 4};
  CHECK_THROWS_AS(sliding_window_predict({ramp({8, 8, 8})}, WrongShapePredictor(), spec), PredictorError);
}

TEST_CASE("TTA is a no-op for a pointwise predictor") {
  const VoxelGrid x = random_grid({20, 12, 10}, 3);
  WindowSpec spec;
  spec.patch = {8, 8, 8};
  const ThresholdPredictor model(0.2f, 3.0f);
  const Logits plain = sliding_window_predict({x}, model, spec);
  const Logits tta = tta_predict({x}, model, spec);
  for (int c = 0; c < 2; ++c)
    for (std::size_t v = 0; v < x.size(); ++v) REQUIRE(std::abs(plain[c][v] - tta[c][v]) <= 1e-6f * std::max(1.0f, std::abs(plain[c][v])));
}

TEST_CASE("TTA averages one identity view with seven flipped views") {
  WindowSpec spec;
  spec.patch = {6, 6, 6};
  const Logits out = tta_predict({ramp({12, 9, 6})}, OrientationPredictor(), spec);
  for (float v : out[0].values()) REQUIRE(v == doctest::Approx(-0.75));
  const Logits c = tta_predict({ramp({12, 9, 6})}, ConstantPredictor({2.0f}), spec);
  for (float v : c[0].values()) REQUIRE(v == doctest::Approx(2.0));
}

TEST_CASE("flip_axes is an involution") {
  const VoxelGrid x = random_grid({5, 4, 3}, 4);
  const VoxelGrid f = flip_axes(x, {true, false, true});
  CHECK(f[x.geometry().index(0, 1, 0)] == x[x.geometry().index(4, 1, 2)]);
  CHECK(test::bitwise_equal(flip_axes(f, {true, false, true}), x));
}

TEST_CASE("ensemble of contrasts") {
  const VoxelGrid a = random_grid({4, 4, 4}, 5);
  const Logits single = ensemble_logits({{a}});
  CHECK(test::bitwise_equal(single[0], a));

  std::vector<float> neg(a.values().begin(), a.values().end());
  for (auto& v : neg) v = -v;
  const Logits zero = ensemble_logits({{a}, {VoxelGrid(a.geometry(), neg)}});
  for (float v : zero[0].values()) CHECK(v == 0.0f);

  const Logits three = ensemble_logits({{test::constant({4, 4, 4}, 1)}, {test::constant({4, 4, 4}, 2)}, {test::constant({4, 4, 4}, 6)}});
  for (float v : three[0].values()) CHECK(v == 3.0f);

  const VoxelGrid b = random_grid({4, 4, 4}, 6), c = random_grid({4, 4, 4}, 7);
  const Logits abc = ensemble_logits({{a}, {b}, {c}}), cab = ensemble_logits({{c}, {a}, {b}});
  for (std::size_t v = 0; v < a.size(); ++v) CHECK(abc[0][v] == doctest::Approx(cab[0][v]).epsilon(1e-6));

  CHECK_THROWS(ensemble_logits({{a}, {a, b}}));
  CHECK_THROWS(ensemble_logits({{a}, {test::constant({4, 4, 5}, 0)}}));
}

TEST_CASE("argmax masks: strict winner, ties, brute force, shift invariance") {
  const Logits strict{test::constant({3, 3, 3}, 0), test::constant({3, 3, 3}, 1)};
  const VoxelGrid all = logits_to_mask(strict, 1);
  for (float v : all.values()) CHECK(v == 1.0f);
  const Logits tie{test::constant({3, 3, 3}, 2), test::constant({3, 3, 3}, 2)};
  const VoxelGrid tie1 = logits_to_mask(tie, 1), tie0 = logits_to_mask(tie, 0);
  for (float v : tie1.values()) CHECK(v == 0.0f);
  for (float v : tie0.values()) CHECK(v == 1.0f);

  const Logits r{random_grid({8, 8, 8}, 8), random_grid({8, 8, 8}, 9), random_grid({8, 8, 8}, 10)};
  const VoxelGrid m = logits_to_mask(r, 2);
  Logits shifted = r;
  for (auto& g : shifted) {
    std::vector<float> v(g.values().begin(), g.values().end());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] += float(n % 7);
    g = VoxelGrid(g.geometry(), v);
  }
  const VoxelGrid ms = logits_to_mask(shifted, 2);
  for (std::size_t v = 0; v < m.size(); ++v) {
    int best = 0;
    for (int c = 1; c < 3; ++c)
      if (r[c][v] > r[best][v]) best = c;
    CHECK(m[v] == (best == 2 ? 1.0f : 0.0f));
    CHECK(ms[v] == m[v]);
  }
}

TEST_CASE("command predictor matches the in-process threshold mock") {
  const auto scratch = test::scratch_dir("command_predictor");
  const CommandPredictor cmd(QMRISIM_ECHO_PREDICTOR, 2, scratch);
  const ThresholdPredictor mock(0.5f);
  const VoxelGrid x = random_grid({10, 9, 8}, 11);
  WindowSpec spec;
  spec.patch = {8, 8, 8};
  const Logits a = sliding_window_predict({x}, cmd, spec);
  const Logits b = sliding_window_predict({x}, mock, spec);
  CHECK(test::bitwise_equal(a[1], b[1]));

  const CommandPredictor broken("false", 2, scratch);
  CHECK_THROWS_AS(broken.predict(Patch{{2, 2, 2}, {std::vector<float>(8, 0.0f)}}), PredictorError);
}

TEST_CASE("window spec validation") {
  WindowSpec s;
  s.overlap = 1.0;
  CHECK_THROWS(s.validate());
  s = {};
  s.patch = {0, 4, 4};
  CHECK_THROWS(s.validate());
}
