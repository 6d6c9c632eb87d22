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

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "qmrisim/nifti.hpp"
#include "qmrisim/resample.hpp"
#include "test_support.hpp"

using namespace qmrisim;
namespace fs = std::filesystem;

namespace {

// Minimal NIfTI-1 header writer, independent of the library's writer.
struct RawHeader {
  std::vector<unsigned char> bytes = std::vector<unsigned char>(352, 0);
  bool big_endian = false;

  template <typename T>
  void put(std::size_t offset, T value) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &value, sizeof(T));
    if (big_endian) std::reverse(b, b + sizeof(T));
    std::memcpy(bytes.data() + offset, b, sizeof(T));
  }

  RawHeader(Dims d, int16_t datatype, int16_t bitpix, Spacing s, bool be = false) : big_endian(be) {
    put<int32_t>(0, 348);
    put<int16_t>(40, 3);
    for (int a = 0; a < 3; ++a) put<int16_t>(42 + 2 * a, static_cast<int16_t>(d[a]));
    for (int a = 3; a < 7; ++a) put<int16_t>(42 + 2 * a, 1);
    put<int16_t>(70, datatype);
    put<int16_t>(72, bitpix);
    put<float>(76, 1.0f);
    for (int a = 0; a < 3; ++a) put<float>(80 + 4 * a, static_cast<float>(s[a]));
    put<float>(108, 352.0f);
    std::memcpy(bytes.data() + 344, "n+1\0", 4);
  }
};

template <typename T>
void write_raw(const fs::path& p, const RawHeader& h, const std::vector<T>& data) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(h.bytes.data()), static_cast<std::streamsize>(h.bytes.size()));
  for (T v : data) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if (h.big_endian) std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
  }
}

}  // namespace

TEST_CASE("geometry maps voxels to world and back") {
  Affine a = Affine::Identity();
  a.block<3, 3>(0, 0) << 0, -2, 0, 1.5, 0, 0, 0, 0, 3;
  a.block<3, 1>(0, 3) << 10, -4, 7;
  const Geometry g = Geometry::make({5, 6, 7}, {1.5, 2.0, 3.0}, a);
  const Eigen::Vector3d w = g.voxel_to_world({1, 2, 3});
  CHECK(w[0] == doctest::Approx(10 - 4));
  CHECK(w[1] == doctest::Approx(-4 + 1.5));
  CHECK(w[2] == doctest::Approx(7 + 9));
  const Eigen::Vector3d back = g.world_to_voxel(w);
  CHECK((back - Eigen::Vector3d(1, 2, 3)).norm() < 1e-12);
  CHECK(g.index(1, 2, 3) == 1 + 5 * (2 + 6 * 3));
}

TEST_CASE("geometry validation rejects bad lattices") {
  CHECK_THROWS_AS(Geometry::make({0, 4, 4}, {1, 1, 1}), VolumeError);
  CHECK_THROWS_AS(Geometry::make({4, 4, 4}, {1, -1, 1}), VolumeError);
  Affine singular = Affine::Identity();
  singular(2, 2) = 0.0;
  CHECK_THROWS_AS(Geometry::make({4, 4, 4}, {1, 1, 1}, singular), VolumeError);
}

TEST_CASE("voxel grids enforce size and report non-finite data") {
  const Geometry g = Geometry::make({2, 2, 2}, {1, 1, 1});
  CHECK_THROWS_AS(VoxelGrid(g, std::vector<float>(7)), VolumeError);
  std::vector<float> v(8, 1.0f);
  v[3] = std::nanf("");
  const VoxelGrid grid(g, v);
  CHECK_FALSE(grid.all_finite());
  CHECK_THROWS_AS(grid.require_finite("test grid"), VolumeError);
}

TEST_CASE("coregistration check names the mismatch") {
  const VoxelGrid a = test::constant({4, 4, 4}, 0.0f);
  const VoxelGrid b[] = {test::constant({4, 4, 5}, 0.0f)};
  CHECK_THROWS_AS(require_coregistered(a, b, "pair"), VolumeError);
  const VoxelGrid c[] = {test::constant({4, 4, 4}, 2.0f)};
  CHECK_NOTHROW(require_coregistered(a, c, "pair"));
}

TEST_CASE("label volumes require integer labels and a background name") {
  const VoxelGrid g = test::filled({4, 4, 4}, {1, 1, 1}, [](int i, int, int) { return static_cast<float>(i % 3); });
  const LabelVolume lv(g, LabelVolume::default_names(g));
  CHECK(lv.present_labels() == std::vector<int>{0, 1, 2});
  CHECK(lv.names().at(0) == "background");
  CHECK_THROWS_AS(LabelVolume(g, {{0, "tissue"}, {1, "a"}, {2, "b"}}), VolumeError);
  CHECK_THROWS_AS(LabelVolume(test::constant({2, 2, 2}, 1.5f), {}), VolumeError);
}

TEST_CASE("qmri volume validation enforces physical bounds") {
  const auto g = Geometry::make({2, 2, 2}, {1, 1, 1});
  QmriVolume q{VoxelGrid(g, 0.8f), VoxelGrid(g, 1.0f), VoxelGrid(g, 20.0f), VoxelGrid(g, 1.0f)};
  CHECK_NOTHROW(q.validate());
  q.mt = VoxelGrid(g, 150.0f);
  CHECK_THROWS_AS(q.validate(), VolumeError);
  q.mt = VoxelGrid(g, 1.0f);
  q.r1 = VoxelGrid(g, -0.1f);
  CHECK_THROWS_AS(q.validate(), VolumeError);
}

TEST_CASE("nifti round trip of a constant 4x4x4 grid") {
  const auto dir = test::scratch_dir("nifti_roundtrip");
  Affine a = Affine::Identity();
  a.block<3, 1>(0, 3) << -3.5, 2.25, 10.0;
  const VoxelGrid g(Geometry::make({4, 4, 4}, {1, 1, 1}, a), 7.0f);
  for (const char* name : {"seven.nii", "seven.nii.gz"}) {
    write_nifti(g, dir / name);
    const VoxelGrid r = read_nifti(dir / name);
    CHECK(r.dims() == g.dims());
    CHECK(r.affine().isApprox(g.affine(), 1e-5));
    CHECK(test::bitwise_equal(r, g));
  }
}

TEST_CASE("nifti round trip preserves rotated affines, anisotropic spacing and storage types") {
  const auto dir = test::scratch_dir("nifti_types");
  const double th = 0.3;
  Affine a = Affine::Identity();
  a.block<3, 3>(0, 0) << std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th), 0, 0, 0, 1;
  a.block<3, 3>(0, 0) = a.block<3, 3>(0, 0) * Eigen::Vector3d(1, 1, 3).asDiagonal();
  a.block<3, 1>(0, 3) << 5, 6, 7;
  const VoxelGrid g = test::filled({5, 4, 3}, {1, 1, 3}, [](int i, int j, int k) { return float(i + 5 * j + 20 * k); });
  const VoxelGrid ga(Geometry::make({5, 4, 3}, {1, 1, 3}, a), std::vector<float>(g.values().begin(), g.values().end()));
  for (auto [name, st] : {std::pair{"f.nii.gz", StorageType::Float32}, std::pair{"u.nii.gz", StorageType::UInt8},
                          std::pair{"s.nii", StorageType::Int16}}) {
    write_nifti(ga, dir / name, st);
    const VoxelGrid r = read_nifti(dir / name);
    CHECK(r.spacing()[0] == doctest::Approx(1.0));
    CHECK(r.spacing()[2] == doctest::Approx(3.0));
    CHECK(r.affine().isApprox(a, 1e-5));
    CHECK(test::bitwise_equal(r, ga));
  }
}

TEST_CASE("nifti writer records pixdim (1,1,3)") {
  const auto dir = test::scratch_dir("nifti_pixdim");
  write_nifti(test::constant({3, 3, 3}, 1.0f, {1, 1, 3}), dir / "a.nii");
  const auto bytes = test::read_bytes(dir / "a.nii");
  float pix[3];
  std::memcpy(pix, bytes.data() + 80, 12);
  CHECK(pix[0] == 1.0f);
  CHECK(pix[1] == 1.0f);
  CHECK(pix[2] == 3.0f);
}

TEST_CASE("nifti writer rejects NaN before touching the file") {
  const auto dir = test::scratch_dir("nifti_nan");
  std::vector<float> v(8, 0.0f);
  v[5] = std::nanf("");
  CHECK_THROWS_AS(write_nifti(VoxelGrid(Geometry::make({2, 2, 2}, {1, 1, 1}), v), dir / "bad.nii"), NiftiError);
  CHECK_FALSE(fs::exists(dir / "bad.nii"));
}

TEST_CASE("integer storage refuses values it cannot hold") {
  const auto dir = test::scratch_dir("nifti_int");
  CHECK_THROWS_AS(write_nifti(test::constant({2, 2, 2}, 300.0f), dir / "a.nii", StorageType::UInt8), NiftiError);
  CHECK_THROWS_AS(write_nifti(test::constant({2, 2, 2}, 0.5f), dir / "b.nii", StorageType::Int16), NiftiError);
}

TEST_CASE("slope 2 and intercept 1 turn raw 3 into 7") {
  const auto dir = test::scratch_dir("nifti_slope");
  RawHeader h({2, 2, 2}, 4, 16, {1, 1, 1});
  h.put<float>(112, 2.0f);
  h.put<float>(116, 1.0f);
  write_raw(dir / "s.nii", h, std::vector<int16_t>(8, 3));
  const VoxelGrid r = read_nifti(dir / "s.nii");
  for (float v : r.values()) CHECK(v == 7.0f);
}

TEST_CASE("slope 0 means unscaled data") {
  const auto dir = test::scratch_dir("nifti_slope0");
  RawHeader h({2, 1, 1}, 2, 8, {1, 1, 1});
  h.put<float>(116, 5.0f);
  write_raw(dir / "s.nii", h, std::vector<uint8_t>{4, 9});
  const VoxelGrid r = read_nifti(dir / "s.nii");
  CHECK(r[0] == 4.0f);
  CHECK(r[1] == 9.0f);
}

TEST_CASE("big-endian files are byte swapped") {
  const auto dir = test::scratch_dir("nifti_be");
  RawHeader h({3, 1, 1}, 16, 32, {2, 2, 2}, true);
  write_raw(dir / "be.nii", h, std::vector<float>{1.5f, -2.0f, 1e6f});
  const VoxelGrid r = read_nifti(dir / "be.nii");
  CHECK(r.spacing()[0] == 2.0);
  CHECK(r[0] == 1.5f);
  CHECK(r[1] == -2.0f);
  CHECK(r[2] == 1e6f);
}

TEST_CASE("qform-only header yields the quaternion affine") {
  const auto dir = test::scratch_dir("nifti_qform");
  RawHeader h({2, 2, 2}, 16, 32, {2, 3, 4});
  h.put<int16_t>(252, 1);
  // 90 degrees about z: (b, c, d) = (0, 0, sin 45), a = cos 45.
  h.put<float>(264, static_cast<float>(std::sqrt(0.5)));
  h.put<float>(268, 10.0f);
  h.put<float>(272, 20.0f);
  h.put<float>(276, 30.0f);
  write_raw(dir / "q.nii", h, std::vector<float>(8, 1.0f));
  const VoxelGrid r = read_nifti(dir / "q.nii");
  Affine expect = Affine::Identity();
  expect.block<3, 3>(0, 0) << 0, -3, 0, 2, 0, 0, 0, 0, 4;
  expect.block<3, 1>(0, 3) << 10, 20, 30;
  CHECK(r.affine().isApprox(expect, 1e-5));
}

TEST_CASE("pixdim-only header yields a diagonal affine") {
  const auto dir = test::scratch_dir("nifti_pixdim_only");
  RawHeader h({2, 2, 2}, 16, 32, {2, 3, 4});
  write_raw(dir / "p.nii", h, std::vector<float>(8, 1.0f));
  const VoxelGrid r = read_nifti(dir / "p.nii");
  CHECK(r.affine().isApprox(Eigen::Vector4d(2, 3, 4, 1).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("truncated header names the missing bytes") {
  const auto dir = test::scratch_dir("nifti_trunc");
  RawHeader h({2, 2, 2}, 16, 32, {1, 1, 1});
  {
    std::ofstream out(dir / "t.nii", std::ios::binary);
    out.write(reinterpret_cast<const char*>(h.bytes.data()), 100);
  }
  try {
    read_nifti(dir / "t.nii");
    FAIL("expected NiftiError");
  } catch (const NiftiError& e) {
    CHECK(std::string(e.what()).find("missing 248") != std::string::npos);
  }
}

TEST_CASE("truncated voxel data is reported") {
  const auto dir = test::scratch_dir("nifti_trunc_data");
  RawHeader h({2, 2, 2}, 16, 32, {1, 1, 1});
  write_raw(dir / "t.nii", h, std::vector<float>(5, 1.0f));
  CHECK_THROWS_AS(read_nifti(dir / "t.nii"), NiftiError);
}

TEST_CASE("gzip output is byte-stable across writes") {
  const auto dir = test::scratch_dir("nifti_stable");
  const VoxelGrid g = test::filled({8, 8, 8}, {1, 1, 1}, [](int i, int j, int k) { return float(i * j - k); });
  write_nifti(g, dir / "a.nii.gz");
  write_nifti(g, dir / "b.nii.gz");
  CHECK(test::read_bytes(dir / "a.nii.gz") == test::read_bytes(dir / "b.nii.gz"));
}

TEST_CASE("resampling to the own spacing is the identity") {
  const VoxelGrid g = test::filled({6, 5, 4}, {1, 2, 3}, [](int i, int j, int k) { return float(i * i + j - k); });
  CHECK(test::bitwise_equal(resample(g, {1, 2, 3}, Interpolation::Trilinear), g));
}

TEST_CASE("resampling a constant field stays constant") {
  const VoxelGrid g = test::constant({9, 7, 5}, 3.25f, {1, 1, 2});
  for (Spacing s : {Spacing{0.7, 1.3, 2.9}, Spacing{2, 2, 2}, Spacing{0.5, 0.5, 0.5}})
    for (auto interp : {Interpolation::Nearest, Interpolation::Trilinear})
      for (const VoxelGrid r = resample(g, s, interp); float v : r.values()) CHECK(v == 3.25f);
}

TEST_CASE("2x trilinear downsample of an x ramp matches direct interpolation") {
  const VoxelGrid g = test::filled({8, 8, 8}, {1, 1, 1}, [](int i, int, int) { return 0.5f * i + 1.0f; });
  const VoxelGrid r = resample(g, {2, 2, 2}, Interpolation::Trilinear);
  REQUIRE(r.dims() == Dims{4, 4, 4});
  double worst = 0.0;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        // Output voxel centre sits at input index 2i + 0.5 (face-aligned fields of view).
        const double x = 2.0 * i + 0.5;
        const int x0 = static_cast<int>(std::floor(x));
        const double t = x - x0;
        const double direct = (1 - t) * (0.5 * x0 + 1.0) + t * (0.5 * (x0 + 1) + 1.0);
        worst = std::max(worst, std::abs(direct - r.at(i, j, k)));
      }
  CHECK(worst < 1e-5);
}

TEST_CASE("nearest resampling of labels keeps only input labels") {
  const VoxelGrid g = test::filled({10, 9, 8}, {1, 1, 1}, [](int i, int j, int k) { return float((i + 2 * j + 3 * k) % 4 * 2); });
  std::set<float> seen;
  const VoxelGrid r = resample(g, {0.7, 1.6, 1.3}, Interpolation::Nearest);
  for (float v : r.values()) seen.insert(v);
  for (float v : seen) CHECK((v == 0 || v == 2 || v == 4 || v == 6));
}

TEST_CASE("voxel (0,0,0) shifts by less than half the coarser spacing") {
  Affine a = Affine::Identity();
  a.block<3, 1>(0, 3) << 4, -2, 9;
  const Geometry src = Geometry::make({20, 20, 20}, {1, 1, 1}, a);
  for (Spacing s : {Spacing{2, 2, 2}, Spacing{0.5, 3, 1.7}}) {
    const Geometry dst = respaced_geometry(src, s);
    const double shift = (dst.voxel_to_world({0, 0, 0}) - src.voxel_to_world({0, 0, 0})).norm();
    const double coarser = std::max({s[0], s[1], s[2], 1.0});
    CHECK(shift < 0.5 * coarser * std::sqrt(3.0));
    for (int ax = 0; ax < 3; ++ax)
      CHECK(std::abs(dst.voxel_to_world({0, 0, 0})[ax] - src.voxel_to_world({0, 0, 0})[ax]) < 0.5 * std::max(s[ax], 1.0));
  }
}

TEST_CASE("resample_to follows world coordinates") {
  const VoxelGrid g = test::filled({10, 10, 10}, {1, 1, 1}, [](int i, int j, int k) { return float(i + 10 * j + 100 * k); });
  Affine shifted = Affine::Identity();
  shifted.block<3, 1>(0, 3) << 2, 3, 4;
  const VoxelGrid r = resample_to(g, Geometry::make({4, 4, 4}, {1, 1, 1}, shifted), Interpolation::Trilinear);
  CHECK(r.at(0, 0, 0) == doctest::Approx(2 + 30 + 400));
  CHECK(r.at(1, 2, 3) == doctest::Approx(3 + 50 + 700));
}
