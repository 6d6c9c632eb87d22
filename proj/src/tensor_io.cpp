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

#include "qmrisim/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace qmrisim {

namespace {
constexpr char kMagic[4] = {'Q', 'T', 'N', 'S'};
constexpr uint32_t kVersion = 1;
}  // namespace

void write_tensor(const Patch& patch, const std::filesystem::path& path) {
  const std::size_t n = patch.voxel_count();
  for (const auto& ch : patch.channels)
    if (ch.size() != n) throw TensorFormatError("write_tensor: channel length does not match dims");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TensorFormatError("cannot open " + path.string() + " for writing");
  const uint32_t header[5] = {kVersion, static_cast<uint32_t>(patch.channels.size()),
                              static_cast<uint32_t>(patch.dims[0]), static_cast<uint32_t>(patch.dims[1]),
                              static_cast<uint32_t>(patch.dims[2])};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& ch : patch.channels)
    out.write(reinterpret_cast<const char*>(ch.data()), static_cast<std::streamsize>(ch.size() * sizeof(float)));
  if (!out) throw TensorFormatError("write failure on " + path.string());
}

Patch read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TensorFormatError("cannot open tensor file " + path.string());
  char magic[4];
  uint32_t header[5];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw TensorFormatError(path.string() + ": truncated tensor header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw TensorFormatError(path.string() + ": bad magic");
  if (header[0] != kVersion)
    throw TensorFormatError(path.string() + ": unsupported version " + std::to_string(header[0]));
  Patch p;
  p.dims = {static_cast<int>(header[2]), static_cast<int>(header[3]), static_cast<int>(header[4])};
  const std::size_t n = p.voxel_count();
  p.channels.assign(header[1], std::vector<float>(n));
  for (auto& ch : p.channels) {
    in.read(reinterpret_cast<char*>(ch.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw TensorFormatError(path.string() + ": truncated tensor data");
  }
  return p;
}

}  // namespace qmrisim
