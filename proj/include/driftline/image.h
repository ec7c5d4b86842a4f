/* Copyright 2026 The Driftline Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DRIFTLINE_IMAGE_H_
#define DRIFTLINE_IMAGE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace driftline {

struct ImageSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Interleaved 8-bit RGB, row-major, no padding.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t r = 0, std::uint8_t g = 0,
        std::uint8_t b = 0);

  ImageSize size() const { return {width, height}; }
  std::uint8_t* pixel(int x, int y) {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  void fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r,
                 std::uint8_t g, std::uint8_t b);
};

// Deterministic PNG encoding: fixed compression settings, no ancillary
// chunks, so equal pixels always give equal bytes.
std::string encode_png(const Image& image);

bool looks_like_png(std::string_view bytes);
bool looks_like_jpeg(std::string_view bytes);

// Decodes PNG or JPEG into RGB8. Throws kProtocolError when the bytes are
// not a decodable image.
Image decode_image(std::string_view bytes);

// Reads only the header; throws kProtocolError on non-images.
ImageSize probe_image_size(std::string_view bytes);

Image resize_nearest(const Image& image, ImageSize size);

}  // namespace driftline

#endif  // DRIFTLINE_IMAGE_H_
