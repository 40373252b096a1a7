// Copyright 2026 The cfaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfaudit/mask_ops.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include <png.h>

#include "cfaudit/error.hpp"

namespace cfaudit {
namespace {

void require_dims(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) {
    throw Error("mask dimensions must be positive");
  }
}

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error("mask dimension mismatch: " + std::to_string(a.width()) + "x" +
                std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                "x" + std::to_string(b.height()));
  }
}

// Frees libpng's state on every exit path.
struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height, bool fill)
    : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {
  require_dims(width, height);
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height,
                       std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  require_dims(width, height);
  if (bits_.size() != width * height) {
    throw Error("mask raster holds " + std::to_string(bits_.size()) +
                " pixels, expected " + std::to_string(width * height));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

BinaryMask decode_mask(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw Error("cannot read PNG " + path.string() + ": " + png.image.message);
  }
  const auto fmt = png.image.format;
  if (fmt & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA)) {
    throw Error(path.string() + ": expected a single-channel grayscale PNG");
  }
  if (fmt & (PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_COLORMAP)) {
    throw Error(path.string() + ": expected an 8-bit grayscale PNG");
  }
  png.image.format = PNG_FORMAT_GRAY;
  const std::size_t w = png.image.width;
  const std::size_t h = png.image.height;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, pixels.data(), 0, nullptr)) {
    throw Error("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  for (auto& p : pixels) p = p > 127 ? 1 : 0;
  return BinaryMask(w, h, std::move(pixels));
}

void encode_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(mask.width());
  png.image.height = static_cast<png_uint_32>(mask.height());
  png.image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(mask.bits());
  for (auto& p : pixels) p = p ? 255 : 0;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, pixels.data(), 0,
                               nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

BinaryMask compose_inpaint_mask(const BinaryMask& person, const BinaryMask& skin,
                                CombineMode mode) {
  require_same_dims(person, skin);
  std::vector<std::uint8_t> out(person.size());
  const auto& p = person.bits();
  const auto& s = skin.bits();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mode == CombineMode::kIntersect ? (p[i] & s[i]) : (p[i] | s[i]);
  }
  return BinaryMask(person.width(), person.height(), std::move(out));
}

BinaryMask dilate_3x3(const BinaryMask& mask, int iterations) {
  if (iterations < 0) throw Error("dilation iterations must be non-negative");
  if (mask.size() == 0) return mask;
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<std::uint8_t> cur = mask.bits();
  std::vector<std::uint8_t> tmp(cur.size());
  // The 3x3 square is separable: horizontal max, then vertical max.
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t y = 0; y < h; ++y) {
      const std::uint8_t* src = cur.data() + y * w;
      std::uint8_t* dst = tmp.data() + y * w;
      for (std::size_t x = 0; x < w; ++x) {
        std::uint8_t v = src[x];
        if (x > 0) v |= src[x - 1];
        if (x + 1 < w) v |= src[x + 1];
        dst[x] = v;
      }
    }
    for (std::size_t y = 0; y < h; ++y) {
      std::uint8_t* dst = cur.data() + y * w;
      const std::uint8_t* mid = tmp.data() + y * w;
      const std::uint8_t* up = y > 0 ? mid - w : nullptr;
      const std::uint8_t* down = y + 1 < h ? mid + w : nullptr;
      for (std::size_t x = 0; x < w; ++x) {
        std::uint8_t v = mid[x];
        if (up) v |= up[x];
        if (down) v |= down[x];
        dst[x] = v;
      }
    }
  }
  return BinaryMask(w, h, std::move(cur));
}

double coverage(const BinaryMask& mask) {
  if (mask.size() == 0) return 0.0;
  return static_cast<double>(mask.count()) / static_cast<double>(mask.size());
}

bool is_subset(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] && !y[i]) return false;
  }
  return true;
}

}  // namespace cfaudit
