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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cfaudit {

/// Row-major binary raster; `true` is foreground.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t width, std::size_t height, bool fill = false);
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool at(std::size_t x, std::size_t y) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t x, std::size_t y, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }

  /// One byte per pixel, 0 or 1.
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  std::size_t count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

enum class CombineMode { kIntersect, kUnion };

/// Loads an 8-bit single-channel PNG; pixels above 127 become foreground.
/// Colour, alpha, palette and 16-bit images are rejected.
BinaryMask decode_mask(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG, foreground 255, background 0.
void encode_mask(const BinaryMask& mask, const std::filesystem::path& path);

/// Person/skin combination. Intersection is the default; union is kept for
/// reproduction experiments.
BinaryMask compose_inpaint_mask(const BinaryMask& person, const BinaryMask& skin,
                                CombineMode mode = CombineMode::kIntersect);

/// Square 3x3 dilation, out-of-bounds treated as background, applied
/// `iterations` times.
BinaryMask dilate_3x3(const BinaryMask& mask, int iterations = 1);

/// Foreground fraction in [0, 1]; 0 for an empty raster.
double coverage(const BinaryMask& mask);

/// `a` is pixelwise contained in `b` (same dimensions required).
bool is_subset(const BinaryMask& a, const BinaryMask& b);

}  // namespace cfaudit
