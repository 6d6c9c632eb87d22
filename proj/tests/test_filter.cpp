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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qmrisim/filter.hpp"
#include "qmrisim/morphology.hpp"
#include "qmrisim/random.hpp"
#include "qmrisim/tensor_io.hpp"
#include "test_support.hpp"

using namespace qmrisim;

TEST_CASE("gaussian taps are normalised and symmetric") {
  for (double s : {0.5, 1.0, 2.7, 6.0}) {
    const auto t = gaussian_taps(s);
    CHECK(std::accumulate(t.begin(), t.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == t[t.size() - 1 - i]);
    CHECK(t.size() == 2 * static_cast<std::size_t>(std::ceil(4.0 * s)) + 1);
  }
  CHECK(gaussian_taps(0.0) == std::vector<double>{1.0});
  CHECK(fwhm_to_sigma(2.0 * std::sqrt(2.0 * std::log(2.0))) == doctest::Approx(1.0));
}

TEST_CASE("reflect smoothing preserves constants and sums") {
  std::vector<double> f(9 * 8 * 7, 2.5);
  smooth_in_place(f, {9, 8, 7}, {1.3, 0.0, 2.0});
  for (double v : f) CHECK(v == doctest::Approx(2.5).epsilon(1e-13));

  RandomStream r(1, 1);
  std::vector<double> g(9 * 8 * 7);
  for (auto& v : g) v = r.normal();
  const double before = std::accumulate(g.begin(), g.end(), 0.0);
  smooth_in_place(g, {9, 8, 7}, {0.8, 0.8, 0.8});
  CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("smoothing matches a direct 1-D convolution oracle") {
  const int n = 13;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = (i == 4) ? 1.0 : (i == 11 ? -2.0 : 0.0);
  std::vector<double> g = f;
  smooth_in_place(g, {n, 1, 1}, {1.5, 0, 0}, Boundary::Zero);
  const double s = 1.5;
  const int radius = static_cast<int>(std::ceil(4 * s));
  double norm = 0.0;
  for (int t = -radius; t <= radius; ++t) norm += std::exp(-0.5 * t * t / (s * s));
  for (int i = 0; i < n; ++i) {
    double expect = 0.0;
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) <= radius) expect += f[j] * std::exp(-0.5 * (i - j) * (i - j) / (s * s)) / norm;
    CHECK(g[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("deterministic sum and moments agree with long double references") {
  RandomStream r(4, 4);
  std::vector<double> v(100003);
  for (auto& x : v) x = r.uniform(-1e3, 1e3);
  long double ref = 0.0L;
  for (double x : v) ref += x;
  CHECK(deterministic_sum(v) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
  const Moments m = moments(std::vector<double>{1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.stddev == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("percentile uses linear interpolation between order statistics") {
  const std::vector<double> v{10, 1, 4, 7};
  CHECK(percentile(std::span<const double>(v), 0.0) == 1.0);
  CHECK(percentile(std::span<const double>(v), 1.0) == 10.0);
  CHECK(percentile(std::span<const double>(v), 0.5) == doctest::Approx(5.5));
  // h = 3 * 0.95 = 2.85 -> 7 + 0.85 * 3
  CHECK(percentile(std::span<const double>(v), 0.95) == doctest::Approx(9.55));
  const std::vector<float> f{3.0f};
  CHECK(percentile(std::span<const float>(f), 0.3) == 3.0);
}

TEST_CASE("connected components under 6- and 26-connectivity") {
  const Dims d{5, 5, 5};
  std::vector<uint8_t> m(125, 0);
  auto at = [&](int i, int j, int k) -> uint8_t& { return m[static_cast<std::size_t>(i + 5 * (j + 5 * k))]; };
  at(0, 0, 0) = at(1, 0, 0) = 1;  // face-connected pair
  at(3, 3, 3) = at(4, 4, 4) = 1;  // corner-touching pair
  int n6 = 0, n26 = 0;
  const auto c6 = connected_components(m, d, Connectivity::Face6, &n6);
  connected_components(m, d, Connectivity::Full26, &n26);
  CHECK(n6 == 3);
  CHECK(n26 == 2);
  CHECK(c6[0] == 1);
  CHECK(c6[1] == 1);
}

TEST_CASE("boundary voxels of a solid cube are its surface") {
  const Dims d{6, 6, 6};
  std::vector<uint8_t> m(216, 0);
  for (int k = 1; k < 5; ++k)
    for (int j = 1; j < 5; ++j)
      for (int i = 1; i < 5; ++i) m[static_cast<std::size_t>(i + 6 * (j + 6 * k))] = 1;
  const auto b = boundary_voxels(m, d);
  CHECK(std::count(b.begin(), b.end(), 1) == 64 - 8);
  // A mask touching the volume edge counts the edge as outside.
  const std::vector<uint8_t> full(27, 1);
  const auto bf = boundary_voxels(full, {3, 3, 3});
  CHECK(std::count(bf.begin(), bf.end(), 1) == 26);
}

TEST_CASE("tensor files round trip and reject corruption") {
  const auto dir = test::scratch_dir("tensor_io");
  Patch p;
  p.dims = {3, 2, 2};
  p.channels = {std::vector<float>(12), std::vector<float>(12)};
  for (int i = 0; i < 12; ++i) {
    p.channels[0][i] = static_cast<float>(i);
    p.channels[1][i] = -0.5f * i;
  }
  write_tensor(p, dir / "p.qtns");
  const Patch r = read_tensor(dir / "p.qtns");
  CHECK(r.dims == p.dims);
  CHECK(r.channels == p.channels);
  CHECK(std::filesystem::file_size(dir / "p.qtns") == 24 + 2 * 12 * 4);

  auto bytes = test::read_bytes(dir / "p.qtns");
  bytes[0] = 'X';
  std::ofstream(dir / "bad.qtns", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHECK_THROWS_AS(read_tensor(dir / "bad.qtns"), TensorFormatError);
  std::ofstream(dir / "short.qtns", std::ios::binary).write(test::read_bytes(dir / "p.qtns").data(), 40);
  CHECK_THROWS_AS(read_tensor(dir / "short.qtns"), TensorFormatError);
}
