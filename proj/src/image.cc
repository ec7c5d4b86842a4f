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

#include "driftline/image.h"

#include <png.h>
// jpeglib.h needs size_t and FILE declared first.
#include <cstddef>
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>

#include "driftline/status.h"

namespace driftline {

Image::Image(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b)
    : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  fill_rect(0, 0, w, h, r, g, b);
}

void Image::fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b) {
  x0 = std::clamp(x0, 0, width);
  x1 = std::clamp(x1, 0, width);
  y0 = std::clamp(y0, 0, height);
  y1 = std::clamp(y1, 0, height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      std::uint8_t* p = pixel(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  }
}

bool looks_like_png(std::string_view bytes) {
  static constexpr unsigned char kMagic[8] = {0x89, 'P', 'N', 'G',
                                              '\r', '\n', 0x1A, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kMagic, 8) == 0;
}

bool looks_like_jpeg(std::string_view bytes) {
  return bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
         static_cast<unsigned char>(bytes[1]) == 0xD8 &&
         static_cast<unsigned char>(bytes[2]) == 0xFF;
}

std::string encode_png(const Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.rgb.size() != static_cast<std::size_t>(image.width) *
                              image.height * 3) {
    throw Error(ErrorCode::kInvalidArgument, "malformed image buffer");
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgb.data(), 0,
                                 nullptr)) {
    throw Error(ErrorCode::kIoError,
                std::string("PNG sizing failed: ") + png.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.rgb.data(),
                                 0, nullptr)) {
    throw Error(ErrorCode::kIoError,
                std::string("PNG encoding failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

namespace {

Image decode_png(std::string_view bytes, bool header_only) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kProtocolError,
                std::string("undecodable PNG: ") + png.message);
  }
  Image image;
  image.width = static_cast<int>(png.width);
  image.height = static_cast<int>(png.height);
  if (header_only) {
    png_image_free(&png);
    return image;
  }
  png.format = PNG_FORMAT_RGB;
  image.rgb.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, image.rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::kProtocolError,
                std::string("undecodable PNG: ") + png.message);
  }
  return image;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

// Kept free of objects with destructors between setjmp and longjmp.
bool decode_jpeg_raw(std::string_view bytes, bool header_only, int* width,
                     int* height, std::vector<std::uint8_t>* rgb,
                     char* message) {
  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&info);
    return false;
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  *width = static_cast<int>(info.image_width);
  *height = static_cast<int>(info.image_height);
  if (!header_only) {
    info.out_color_space = JCS_RGB;
    jpeg_start_decompress(&info);
    const std::size_t stride = static_cast<std::size_t>(info.output_width) * 3;
    rgb->resize(stride * info.output_height);
    while (info.output_scanline < info.output_height) {
      JSAMPROW row = rgb->data() + stride * info.output_scanline;
      jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
  }
  jpeg_destroy_decompress(&info);
  return true;
}

Image decode_jpeg(std::string_view bytes, bool header_only) {
  Image image;
  char message[JMSG_LENGTH_MAX] = {0};
  if (!decode_jpeg_raw(bytes, header_only, &image.width, &image.height,
                       &image.rgb, message)) {
    throw Error(ErrorCode::kProtocolError,
                std::string("undecodable JPEG: ") + message);
  }
  return image;
}

}  // namespace

Image decode_image(std::string_view bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes, false);
  if (looks_like_jpeg(bytes)) return decode_jpeg(bytes, false);
  throw Error(ErrorCode::kProtocolError, "payload is not a PNG or JPEG image");
}

ImageSize probe_image_size(std::string_view bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes, true).size();
  if (looks_like_jpeg(bytes)) return decode_jpeg(bytes, true).size();
  throw Error(ErrorCode::kProtocolError, "payload is not a PNG or JPEG image");
}

Image resize_nearest(const Image& image, ImageSize size) {
  if (size.width <= 0 || size.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "resize target must be positive");
  }
  Image out(size.width, size.height);
  for (int y = 0; y < size.height; ++y) {
    const int sy = static_cast<int>(static_cast<long long>(y) * image.height /
                                    size.height);
    for (int x = 0; x < size.width; ++x) {
      const int sx = static_cast<int>(static_cast<long long>(x) * image.width /
                                      size.width);
      std::memcpy(out.pixel(x, y), image.pixel(sx, sy), 3);
    }
  }
  return out;
}

}  // namespace driftline
