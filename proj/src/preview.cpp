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

#include "qmrisim/preview.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "qmrisim/filter.hpp"

namespace qmrisim {

GrayImage render_slice(const VoxelGrid& grid, int axis, int index, double lo_pct, double hi_pct) {
  if (axis < 0 || axis > 2) throw SliceRangeError("slice axis must be 0, 1 or 2, got " + std::to_string(axis));
  const auto& d = grid.dims();
  if (index < 0 || index >= d[axis])
    throw SliceRangeError("slice index " + std::to_string(index) + " outside [0, " + std::to_string(d[axis] - 1) +
                          "] along axis " + std::to_string(axis));
  if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 100.0))
    throw std::invalid_argument("window percentiles must satisfy 0 <= lo < hi <= 100");
  const int u_axis = axis == 0 ? 1 : 0;
  const int v_axis = axis == 2 ? 1 : 2;
  GrayImage img;
  img.width = d[u_axis];
  img.height = d[v_axis];
  std::vector<float> slice(static_cast<std::size_t>(img.width) * img.height);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      int ijk[3];
      ijk[axis] = index;
      ijk[u_axis] = u;
      ijk[v_axis] = v;
      slice[static_cast<std::size_t>(img.height - 1 - v) * img.width + u] = grid.at(ijk[0], ijk[1], ijk[2]);
    }
  const double lo = percentile(std::span<const float>(slice), lo_pct / 100.0);
  const double hi = percentile(std::span<const float>(slice), hi_pct / 100.0);
  img.pixels.resize(slice.size());
  for (std::size_t n = 0; n < slice.size(); ++n) {
    if (!(hi > lo)) {
      img.pixels[n] = 0;
      continue;
    }
    const double t = std::clamp((slice[n] - lo) / (hi - lo), 0.0, 1.0);
    img.pixels[n] = static_cast<uint8_t>(std::lround(255.0 * t));
  }
  return img;
}

void write_png(const GrayImage& image, const std::filesystem::path& path) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
    throw std::invalid_argument("write_png: image size does not match its pixel buffer");
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.height; ++r)
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(r) * image.width);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw std::runtime_error("close failure on " + path.string());
}

}  // namespace qmrisim
