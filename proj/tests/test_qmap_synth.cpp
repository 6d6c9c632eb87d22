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
#include <numbers>

#include "qmrisim/morphology.hpp"
#include "qmrisim/qmap_synth.hpp"
#include "test_support.hpp"

using namespace qmrisim;

namespace {

LabelVolume uniform_labels(const Dims& d, int label, const Spacing& s = {1, 1, 1}) {
  const VoxelGrid g(Geometry::make(d, s), static_cast<float>(label));
  return LabelVolume(g, LabelVolume::default_names(g));
}

TissuePriorSet single(int label, QmriVector mean, QmriVector sd) {
  LabelPrior p;
  p.components = {{1.0, mean, sd}};
  return TissuePriorSet({{0, LabelPrior{{{1.0, {0, 0, 0, 0}, {0, 0, 0, 0}}}, {}}}, {label, p}});
}

// Stripes of labels 0..3 along x on a 16^3 grid.
LabelVolume striped() {
  const VoxelGrid g = test::filled({16, 16, 16}, {1, 1, 1}, [](int i, int, int) { return float(i / 4); });
  return LabelVolume(g, LabelVolume::default_names(g));
}

}  // namespace

TEST_CASE("zero-variance priors reproduce class means exactly") {
  const TissuePriorSet p = default_priors();
  TissuePriorSet z;
  for (const auto& [l, prior] : p.labels()) {
    LabelPrior q = prior;
    q.components.resize(1);
    q.components[0].weight = 1.0;
    q.components[0].stddev = {0, 0, 0, 0};
    z = z.with(l, q);
  }
  const LabelVolume labels = striped();
  const QmriVolume q = sample_qmri(labels, z, 99);
  for (std::size_t v = 0; v < labels.grid().size(); ++v) {
    const auto& m = z.at(labels.label_at(v)).components[0].mean;
    CHECK(q.pd[v] == static_cast<float>(m[kPD]));
    CHECK(q.r1[v] == static_cast<float>(m[kR1]));
    CHECK(q.r2s[v] == static_cast<float>(m[kR2s]));
    CHECK(q.mt[v] == static_cast<float>(m[kMT]));
  }
}

TEST_CASE("single-component sample moments on 64^3") {
  const QmriVector mu{0.7, 1.0, 20.0, 2.0}, sd{0.05, 0.1, 2.0, 0.2};
  const QmriVolume q = sample_qmri(uniform_labels({64, 64, 64}, 1), single(1, mu, sd), 5);
  const VoxelGrid* ch[4] = {&q.pd, &q.r1, &q.r2s, &q.mt};
  const double n = 64.0 * 64 * 64;
  for (int c = 0; c < 4; ++c) {
    double s = 0, s2 = 0;
    for (float v : ch[c]->values()) {
      s += v;
      s2 += double(v) * v;
    }
    const double mean = s / n;
    const double std = std::sqrt(s2 / n - mean * mean);
    CHECK(std::abs(mean - mu[c]) < 4.0 * sd[c] / std::sqrt(n));
    CHECK(std::abs(std - sd[c]) < 0.05 * sd[c]);
  }
}

TEST_CASE("0.3/0.7 mixture occupancy within 0.01") {
  LabelPrior p;
  p.components = {{0.3, {0.2, 0.5, 5, 1}, {0.01, 0.01, 0.1, 0.01}}, {0.7, {0.9, 1.5, 30, 3}, {0.01, 0.01, 0.1, 0.01}}};
  const TissuePriorSet set({{1, p}});
  const QmriVolume q = sample_qmri(uniform_labels({64, 64, 64}, 1), set, 17);
  std::size_t first = 0;
  for (float v : q.pd.values()) first += std::abs(v - 0.2f) < std::abs(v - 0.9f);
  CHECK(std::abs(double(first) / q.pd.size() - 0.3) < 0.01);
}

TEST_CASE("missing prior names the label") {
  try {
    sample_qmri(striped(), single(1, {1, 1, 1, 1}, {0, 0, 0, 0}), 1);
    FAIL("expected PriorError");
  } catch (const PriorError& e) {
    CHECK(std::string(e.what()).find("label 2") != std::string::npos);
  }
}

TEST_CASE("clamping enforces physical bounds") {
  const QmriVolume q = sample_qmri(uniform_labels({24, 24, 24}, 1), single(1, {0.01, 0.01, 0.5, 99.0}, {1, 1, 5, 10}), 3);
  for (std::size_t v = 0; v < q.pd.size(); ++v) {
    CHECK(q.pd[v] >= 0.0f);
    CHECK(q.r1[v] >= 0.0f);
    CHECK(q.r2s[v] >= 0.0f);
    CHECK(q.mt[v] >= 0.0f);
    CHECK(q.mt[v] <= 100.0f);
  }
  CHECK_NOTHROW(q.validate());
}

TEST_CASE("changing one label's prior leaves other labels untouched") {
  const LabelVolume labels = striped();
  const TissuePriorSet a = default_priors();
  LabelPrior changed = a.at(2);
  changed.components[0].mean[kPD] = 0.3;
  const QmriVolume qa = sample_qmri(labels, a, 8);
  const QmriVolume qb = sample_qmri(labels, a.with(2, changed), 8);
  for (std::size_t v = 0; v < labels.grid().size(); ++v) {
    if (labels.label_at(v) == 2) continue;
    CHECK(qa.pd[v] == qb.pd[v]);
    CHECK(qa.r2s[v] == qb.r2s[v]);
  }
}

TEST_CASE("within-label smoothing lowers variance and stays inside the label") {
  const LabelVolume labels = striped();
  TissuePriorSet p = default_priors();
  LabelPrior smooth = p.at(1);
  smooth.smooth_fwhm_mm = 3.0;
  const QmriVolume rough = sample_qmri(labels, p, 21);
  const QmriVolume fine = sample_qmri(labels, p.with(1, smooth), 21);
  auto var_of = [&](const QmriVolume& q) {
    double s = 0, s2 = 0, n = 0;
    for (std::size_t v = 0; v < labels.grid().size(); ++v)
      if (labels.label_at(v) == 1) {
        s += q.r2s[v];
        s2 += double(q.r2s[v]) * q.r2s[v];
        ++n;
      }
    return s2 / n - (s / n) * (s / n);
  };
  CHECK(var_of(fine) < 0.5 * var_of(rough));
  for (std::size_t v = 0; v < labels.grid().size(); ++v)
    if (labels.label_at(v) != 1) CHECK(fine.r2s[v] == rough.r2s[v]);
}

TEST_CASE("sampling is a pure function of the seed") {
  const LabelVolume labels = striped();
  const QmriVolume a = sample_qmri(labels, default_priors(), 4);
  const QmriVolume b = sample_qmri(labels, default_priors(), 4);
  const QmriVolume c = sample_qmri(labels, default_priors(), 5);
  CHECK(test::bitwise_equal(a.r1, b.r1));
  CHECK_FALSE(test::bitwise_equal(a.r1, c.r1));
}

TEST_CASE("stamp_lesion: empty mask, full mask, and exclusion counting") {
  const LabelVolume labels = striped();  // 0 bg, 1, 2, 3 in x stripes
  const VoxelGrid empty = test::constant({16, 16, 16}, 0.0f);
  const LabelVolume same = stamp_lesion(labels, empty, 5, {1, 2, 3});
  CHECK(test::bitwise_equal(same.grid(), labels.grid()));

  const VoxelGrid all = test::constant({16, 16, 16}, 1.0f);
  const LabelVolume full = stamp_lesion(labels, all, 5, {1, 2, 3});
  for (std::size_t v = 0; v < labels.grid().size(); ++v)
    CHECK(full.label_at(v) == (labels.label_at(v) == 0 ? 0 : 5));
  CHECK(full.names().at(5) == "lesion");

  // 10 voxels of label 2 ("WM") and 5 of label 3 ("CSF"), CSF excluded.
  const VoxelGrid mask = test::filled({16, 16, 16}, {1, 1, 1}, [](int i, int j, int k) {
    if (k != 0 || j != 0) return 0.0f;
    return (i >= 8 && i < 12) || (i >= 12 && i < 16) ? 1.0f : 0.0f;
  });
  const VoxelGrid mask2 = test::filled({16, 16, 16}, {1, 1, 1}, [&](int i, int j, int k) {
    if (k != 0) return 0.0f;
    if (i >= 8 && i < 12) return (j * 4 + (i - 8)) < 10 ? 1.0f : 0.0f;
    if (i >= 12) return (j * 4 + (i - 12)) < 5 ? 1.0f : 0.0f;
    return 0.0f;
  });
  (void)mask;
  const LabelVolume stamped = stamp_lesion(labels, mask2, 5, {1, 2});
  int changed = 0;
  for (std::size_t v = 0; v < labels.grid().size(); ++v) changed += stamped.label_at(v) != labels.label_at(v);
  CHECK(changed == 10);
  const LabelVolume twice = stamp_lesion(stamped, mask2, 5, {1, 2});
  CHECK(test::bitwise_equal(twice.grid(), stamped.grid()));
}

TEST_CASE("lesion masks are deterministic and sized") {
  const Geometry g = Geometry::make({64, 64, 64}, {1, 1, 1});
  LesionStampConfig cfg;
  cfg.count_min = cfg.count_max = 1;
  cfg.irregularity = 0.0;
  const VoxelGrid a = generate_lesion_mask(g, cfg, 12);
  const VoxelGrid b = generate_lesion_mask(g, cfg, 12);
  CHECK(test::bitwise_equal(a, b));
  int count = 0;
  connected_components(to_mask(a), g.dims, Connectivity::Face6, &count);
  CHECK(count == 1);
  double voxels = 0;
  for (float v : a.values()) voxels += v;
  const double diameter = std::cbrt(6.0 * voxels / std::numbers::pi);
  CHECK(diameter >= 0.8 * cfg.size_min_mm);
  CHECK(diameter <= 1.2 * cfg.size_max_mm);
}

TEST_CASE("count range [3,3] gives three components in at least 95 of 100 seeds") {
  const Geometry g = Geometry::make({96, 96, 96}, {1, 1, 1});
  LesionStampConfig cfg;
  cfg.count_min = cfg.count_max = 3;
  int good = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    int count = 0;
    connected_components(to_mask(generate_lesion_mask(g, cfg, seed)), g.dims, Connectivity::Face6, &count);
    good += count == 3;
  }
  CHECK(good >= 95);
}

TEST_CASE("anchored lesions fall on replaceable tissue") {
  const LabelVolume labels = striped();
  LesionStampConfig cfg;
  cfg.count_min = cfg.count_max = 1;
  cfg.size_min_mm = cfg.size_max_mm = 3.0;
  cfg.replaceable = {2};
  const VoxelGrid m = generate_lesion_mask(labels.geometry(), cfg, 3, &labels);
  int on_two = 0, total = 0;
  for (std::size_t v = 0; v < m.size(); ++v)
    if (m[v] > 0.5f) {
      ++total;
      on_two += labels.label_at(v) == 2;
    }
  REQUIRE(total > 0);
  CHECK(on_two > 0);
}

TEST_CASE("lesion config validation") {
  LesionStampConfig c;
  c.count_min = 4;
  c.count_max = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.size_min_mm = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.irregularity = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
