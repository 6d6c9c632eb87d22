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

#include "qmrisim/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <vector>

namespace qmrisim {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kDataOffset = 352;  // header + 4-byte empty extension block

enum Datatype : int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUInt16 = 512,
  kUInt32 = 768,
  kInt64 = 1024,
  kUInt64 = 1280,
};

int bytes_per_voxel(int16_t datatype) {
  switch (datatype) {
    case kUInt8:
    case kInt8:
      return 1;
    case kInt16:
    case kUInt16:
      return 2;
    case kInt32:
    case kUInt32:
    case kFloat32:
      return 4;
    case kFloat64:
    case kInt64:
    case kUInt64:
      return 8;
    default:
      return 0;
  }
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// Fixed-offset view over the raw header bytes, swapping when the file's
// endianness differs from ours.
class HeaderView {
 public:
  HeaderView(const unsigned char* bytes, bool swap) : bytes_(bytes), swap_(swap) {}

  template <typename T>
  T get(int offset) const {
    T v;
    std::memcpy(&v, bytes_ + offset, sizeof(T));
    if (swap_) v = byteswap(v);
    return v;
  }

  template <typename T>
  static T byteswap(T v) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    std::reverse(b.begin(), b.end());
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }

 private:
  const unsigned char* bytes_;
  bool swap_;
};

class HeaderWriter {
 public:
  HeaderWriter() { bytes_.fill(0); }
  template <typename T>
  void put(int offset, T v) {
    std::memcpy(bytes_.data() + offset, &v, sizeof(T));
  }
  void put_text(int offset, const char* text, std::size_t max_len) {
    std::memcpy(bytes_.data() + offset, text, std::min(std::strlen(text), max_len));
  }
  const std::array<unsigned char, kDataOffset>& bytes() const { return bytes_; }

 private:
  std::array<unsigned char, kDataOffset> bytes_;
};

Affine quatern_to_affine(float qb, float qc, float qd, float qx, float qy, float qz,
                         const Spacing& spacing, double qfac) {
  double b = qb, c = qc, d = qd;
  double a = 1.0 - (b * b + c * c + d * d);
  if (a < 1e-7) {
    a = 1.0 / std::sqrt(b * b + c * c + d * d);
    b *= a;
    c *= a;
    d *= a;
    a = 0.0;
  } else {
    a = std::sqrt(a);
  }
  Eigen::Matrix3d r;
  r << a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c),
      2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b),
      2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b;
  Affine m = Affine::Identity();
  m.topLeftCorner<3, 3>() =
      r * Eigen::DiagonalMatrix<double, 3>(spacing[0], spacing[1], qfac * spacing[2]);
  m(0, 3) = qx;
  m(1, 3) = qy;
  m(2, 3) = qz;
  return m;
}

struct Quatern {
  double b, c, d, qfac;
};

// Nearest rotation to the affine's direction cosines, then the standard
// rotation-matrix-to-quaternion conversion.
Quatern affine_to_quatern(const Affine& affine, const Spacing& spacing) {
  Eigen::Matrix3d m = affine.topLeftCorner<3, 3>();
  for (int col = 0; col < 3; ++col) m.col(col) /= spacing[col];
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  double qfac = 1.0;
  if (r.determinant() < 0) {
    qfac = -1.0;
    r.col(2) = -r.col(2);
  }
  double a = r(0, 0) + r(1, 1) + r(2, 2) + 1.0;
  double b, c, d;
  if (a > 0.5) {
    a = 0.5 * std::sqrt(a);
    b = 0.25 * (r(2, 1) - r(1, 2)) / a;
    c = 0.25 * (r(0, 2) - r(2, 0)) / a;
    d = 0.25 * (r(1, 0) - r(0, 1)) / a;
  } else {
    const double xd = 1.0 + r(0, 0) - (r(1, 1) + r(2, 2));
    const double yd = 1.0 + r(1, 1) - (r(0, 0) + r(2, 2));
    const double zd = 1.0 + r(2, 2) - (r(0, 0) + r(1, 1));
    if (xd > 1.0) {
      b = 0.5 * std::sqrt(xd);
      c = 0.25 * (r(0, 1) + r(1, 0)) / b;
      d = 0.25 * (r(0, 2) + r(2, 0)) / b;
      a = 0.25 * (r(2, 1) - r(1, 2)) / b;
    } else if (yd > 1.0) {
      c = 0.5 * std::sqrt(yd);
      b = 0.25 * (r(0, 1) + r(1, 0)) / c;
      d = 0.25 * (r(1, 2) + r(2, 1)) / c;
      a = 0.25 * (r(0, 2) - r(2, 0)) / c;
    } else {
      d = 0.5 * std::sqrt(zd);
      b = 0.25 * (r(0, 2) + r(2, 0)) / d;
      c = 0.25 * (r(1, 2) + r(2, 1)) / d;
      a = 0.25 * (r(1, 0) - r(0, 1)) / d;
    }
    if (a < 0.0) {
      b = -b;
      c = -c;
      d = -d;
    }
  }
  return {b, c, d, qfac};
}

template <typename T>
void convert(const unsigned char* raw, std::size_t n, bool swap, double slope, double inter,
             std::vector<float>& out) {
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw + i * sizeof(T), sizeof(T));
    if (swap) v = HeaderView::byteswap(v);
    out[i] = static_cast<float>(static_cast<double>(v) * slope + inter);
  }
}

std::string field_error(const std::filesystem::path& path, const std::string& msg) {
  return path.string() + ": " + msg;
}

}  // namespace

VoxelGrid read_nifti(const std::filesystem::path& path) {
  GzHandle file(gzopen(path.string().c_str(), "rb"));
  if (!file) throw NiftiError(field_error(path, "cannot open file"));
  gzbuffer(file.get(), 1 << 20);

  std::array<unsigned char, kHeaderSize> hdr{};
  const int got = gzread(file.get(), hdr.data(), kHeaderSize);
  if (got < 0) throw NiftiError(field_error(path, "read failure in header"));
  if (got < kHeaderSize) {
    std::ostringstream os;
    os << "header truncated: read " << got << " of " << kHeaderSize << " bytes (missing "
       << kHeaderSize - got << ")";
    throw NiftiError(field_error(path, os.str()));
  }

  int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, hdr.data(), 4);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    if (HeaderView::byteswap(sizeof_hdr) != kHeaderSize)
      throw NiftiError(field_error(path, "sizeof_hdr is " + std::to_string(sizeof_hdr) +
                                             ", expected 348 (not NIfTI-1)"));
    swap = true;
  }
  const HeaderView h(hdr.data(), swap);

  const char* magic = reinterpret_cast<const char*>(hdr.data() + 344);
  if (std::strncmp(magic, "n+1", 4) != 0 && std::strncmp(magic, "ni1", 4) != 0)
    throw NiftiError(field_error(path, "magic is not \"n+1\""));
  if (std::strncmp(magic, "ni1", 4) == 0)
    throw NiftiError(field_error(path, "magic \"ni1\": split header/image pairs are unsupported"));

  const int16_t ndim = h.get<int16_t>(40);
  if (ndim < 3 || ndim > 7)
    throw NiftiError(field_error(path, "dim[0] is " + std::to_string(ndim) + ", expected 3"));
  Dims dims{};
  for (int a = 0; a < 3; ++a) {
    const int16_t d = h.get<int16_t>(42 + 2 * a);
    if (d <= 0)
      throw NiftiError(field_error(path, "dim[" + std::to_string(a + 1) + "] is " +
                                             std::to_string(d) + ", must be positive"));
    dims[a] = d;
  }
  for (int a = 4; a <= ndim; ++a) {
    const int16_t d = h.get<int16_t>(40 + 2 * a);
    if (d > 1)
      throw NiftiError(field_error(path, "dim[" + std::to_string(a) + "] is " + std::to_string(d) +
                                             ": only 3-D volumes are supported"));
  }

  const int16_t datatype = h.get<int16_t>(70);
  const int bpv = bytes_per_voxel(datatype);
  if (bpv == 0)
    throw NiftiError(field_error(path, "datatype " + std::to_string(datatype) + " is unsupported"));

  Spacing spacing{};
  for (int a = 0; a < 3; ++a) {
    const float p = h.get<float>(80 + 4 * a);
    if (!(p > 0.0f) || !std::isfinite(p))
      throw NiftiError(field_error(path, "pixdim[" + std::to_string(a + 1) + "] is " +
                                             std::to_string(p) + ", must be positive"));
    spacing[a] = p;
  }

  const float vox_offset = h.get<float>(108);
  if (vox_offset < kHeaderSize)
    throw NiftiError(field_error(path, "vox_offset " + std::to_string(vox_offset) + " < 348"));

  double slope = h.get<float>(112);
  double inter = h.get<float>(116);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;

  Affine affine = Affine::Identity();
  const int16_t qform_code = h.get<int16_t>(252);
  const int16_t sform_code = h.get<int16_t>(254);
  if (sform_code > 0) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) affine(r, c) = h.get<float>(280 + 16 * r + 4 * c);
  } else if (qform_code > 0) {
    float qfac = h.get<float>(76);
    affine = quatern_to_affine(h.get<float>(256), h.get<float>(260), h.get<float>(264),
                               h.get<float>(268), h.get<float>(272), h.get<float>(276), spacing,
                               qfac < 0 ? -1.0 : 1.0);
  } else {
    for (int a = 0; a < 3; ++a) affine(a, a) = spacing[a];
  }

  // Skip extensions up to the data.
  const auto skip = static_cast<long>(vox_offset) - kHeaderSize;
  if (skip > 0) {
    std::vector<unsigned char> ext(static_cast<std::size_t>(skip));
    const int n = gzread(file.get(), ext.data(), static_cast<unsigned>(skip));
    if (n != skip) throw NiftiError(field_error(path, "file truncated before vox_offset"));
  }

  Geometry geometry;
  geometry.dims = dims;
  geometry.spacing = spacing;
  geometry.affine = affine;
  try {
    geometry.validate();
  } catch (const VolumeError& e) {
    throw NiftiError(field_error(path, std::string("srow/qform: ") + e.what()));
  }

  const std::size_t n = geometry.voxel_count();
  const std::size_t nbytes = n * static_cast<std::size_t>(bpv);
  std::vector<unsigned char> raw(nbytes);
  std::size_t done = 0;
  while (done < nbytes) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(nbytes - done, 1u << 30));
    const int r = gzread(file.get(), raw.data() + done, chunk);
    if (r <= 0) break;
    done += static_cast<std::size_t>(r);
  }
  if (done < nbytes) {
    std::ostringstream os;
    os << "voxel data truncated: read " << done << " of " << nbytes << " bytes (missing "
       << nbytes - done << ")";
    throw NiftiError(field_error(path, os.str()));
  }

  std::vector<float> data(n);
  switch (datatype) {
    case kUInt8: convert<uint8_t>(raw.data(), n, swap, slope, inter, data); break;
    case kInt8: convert<int8_t>(raw.data(), n, swap, slope, inter, data); break;
    case kInt16: convert<int16_t>(raw.data(), n, swap, slope, inter, data); break;
    case kUInt16: convert<uint16_t>(raw.data(), n, swap, slope, inter, data); break;
    case kInt32: convert<int32_t>(raw.data(), n, swap, slope, inter, data); break;
    case kUInt32: convert<uint32_t>(raw.data(), n, swap, slope, inter, data); break;
    case kInt64: convert<int64_t>(raw.data(), n, swap, slope, inter, data); break;
    case kUInt64: convert<uint64_t>(raw.data(), n, swap, slope, inter, data); break;
    case kFloat32:
      if (slope == 1.0 && inter == 0.0) {
        std::memcpy(data.data(), raw.data(), nbytes);
        if (swap)
          for (auto& v : data) v = HeaderView::byteswap(v);
      } else {
        convert<float>(raw.data(), n, swap, slope, inter, data);
      }
      break;
    case kFloat64: convert<double>(raw.data(), n, swap, slope, inter, data); break;
    default: break;
  }

  VoxelGrid grid(std::move(geometry), std::move(data));
  if (!grid.all_finite()) throw NiftiError(field_error(path, "voxel data contains NaN or Inf"));
  return grid;
}

void write_nifti(const VoxelGrid& grid, const std::filesystem::path& path, StorageType storage) {
  if (!grid.all_finite())
    throw NiftiError(field_error(path, "refusing to write a grid containing NaN or Inf"));

  int16_t datatype = kFloat32;
  int16_t bitpix = 32;
  if (storage == StorageType::UInt8) {
    datatype = kUInt8;
    bitpix = 8;
  } else if (storage == StorageType::Int16) {
    datatype = kInt16;
    bitpix = 16;
  }

  const auto& g = grid.geometry();
  HeaderWriter w;
  w.put<int32_t>(0, kHeaderSize);
  w.put<char>(39, 0);
  w.put<int16_t>(40, 3);
  for (int a = 0; a < 3; ++a) w.put<int16_t>(42 + 2 * a, static_cast<int16_t>(g.dims[a]));
  for (int a = 4; a < 8; ++a) w.put<int16_t>(40 + 2 * a, 1);
  w.put<int16_t>(70, datatype);
  w.put<int16_t>(72, bitpix);

  const Quatern q = affine_to_quatern(g.affine, g.spacing);
  w.put<float>(76, static_cast<float>(q.qfac));
  for (int a = 0; a < 3; ++a) w.put<float>(80 + 4 * a, static_cast<float>(g.spacing[a]));
  for (int a = 4; a < 8; ++a) w.put<float>(76 + 4 * a, 1.0f);
  w.put<float>(108, static_cast<float>(kDataOffset));
  w.put<float>(112, 1.0f);
  w.put<float>(116, 0.0f);
  w.put<char>(123, 2);  // NIFTI_UNITS_MM
  w.put_text(148, "qmrisim", 80);
  w.put<int16_t>(252, 1);  // NIFTI_XFORM_SCANNER_ANAT
  w.put<int16_t>(254, 1);
  w.put<float>(256, static_cast<float>(q.b));
  w.put<float>(260, static_cast<float>(q.c));
  w.put<float>(264, static_cast<float>(q.d));
  for (int r = 0; r < 3; ++r) w.put<float>(268 + 4 * r, static_cast<float>(g.affine(r, 3)));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) w.put<float>(280 + 16 * r + 4 * c, static_cast<float>(g.affine(r, c)));
  w.put_text(344, "n+1", 4);

  const auto values = grid.values();
  std::vector<unsigned char> payload;
  if (storage == StorageType::Float32) {
    payload.resize(values.size() * 4);
    std::memcpy(payload.data(), values.data(), payload.size());
  } else {
    const double lo = storage == StorageType::UInt8 ? 0.0 : std::numeric_limits<int16_t>::min();
    const double hi = storage == StorageType::UInt8 ? 255.0 : std::numeric_limits<int16_t>::max();
    payload.resize(values.size() * static_cast<std::size_t>(bitpix / 8));
    for (std::size_t n = 0; n < values.size(); ++n) {
      const double v = values[n];
      if (v != std::floor(v) || v < lo || v > hi)
        throw NiftiError(field_error(path, "value " + std::to_string(v) +
                                               " not representable in integer storage"));
      if (storage == StorageType::UInt8) {
        payload[n] = static_cast<uint8_t>(v);
      } else {
        const auto s = static_cast<int16_t>(v);
        std::memcpy(payload.data() + 2 * n, &s, 2);
      }
    }
  }

  const bool gz = path.extension() == ".gz";
  if (gz) {
    GzHandle file(gzopen(path.string().c_str(), "wb1"));
    if (!file) throw NiftiError(field_error(path, "cannot open for writing"));
    gzbuffer(file.get(), 1 << 20);
    bool ok = gzwrite(file.get(), w.bytes().data(), kDataOffset) == kDataOffset;
    std::size_t done = 0;
    while (ok && done < payload.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(payload.size() - done, 1u << 30));
      ok = gzwrite(file.get(), payload.data() + done, chunk) == static_cast<int>(chunk);
      done += chunk;
    }
    if (gzclose(file.release()) != Z_OK) ok = false;
    if (!ok) throw NiftiError(field_error(path, "write failure"));
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NiftiError(field_error(path, "cannot open for writing"));
    out.write(reinterpret_cast<const char*>(w.bytes().data()), kDataOffset);
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw NiftiError(field_error(path, "write failure"));
  }
}

}  // namespace qmrisim
