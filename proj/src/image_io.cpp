#include "lrtc/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

namespace lrtc {

namespace {

struct PngPixels {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<unsigned char> rgb;  // row-major, interleaved RGB
};

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

PngPixels read_rgb8(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot open image '" + path.string() + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("libpng: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng: out of memory");
  }

  PngPixels out;
  std::vector<png_bytep> rows;
  // libpng reports errors by longjmp; everything with a destructor that is
  // touched after setjmp lives outside this frame.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("corrupt or unreadable PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported bit depth 16 in '" + path.string() + "' (8-bit only)");
  }
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != out.width * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unexpected pixel layout in '" + path.string() + "'");
  }
  out.rgb.resize(out.height * out.width * 3);
  rows.resize(out.height);
  for (std::size_t y = 0; y < out.height; ++y) rows[y] = out.rgb.data() + y * out.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

DenseTensor load_image(const std::filesystem::path& path) {
  const PngPixels px = read_rgb8(path);
  DenseTensor t({px.height, px.width, 3});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t x = 0; x < px.width; ++x) {
      for (std::size_t y = 0; y < px.height; ++y) {
        t[y + px.height * (x + px.width * c)] = px.rgb[(y * px.width + x) * 3 + c];
      }
    }
  }
  return t;
}

unsigned char to_pixel(double v) {
  return static_cast<unsigned char>(std::round(std::clamp(v, 0.0, 255.0)));
}

void save_image(const DenseTensor& t, const std::filesystem::path& path) {
  if (t.order() != 3 || t.extent(2) != 3) {
    throw std::invalid_argument("save_image expects an H x W x 3 tensor");
  }
  for (double v : t.data()) {
    if (std::isnan(v)) throw std::invalid_argument("save_image: tensor has NaN entries");
  }
  const std::size_t h = t.extent(0);
  const std::size_t w = t.extent(1);
  std::vector<unsigned char> rgb(h * w * 3);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) rgb[(y * w + x) * 3 + c] = to_pixel(t[y + h * (x + w * c)]);
    }
  }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw std::runtime_error("cannot write PNG '" + path.string() + "': " + msg);
  }
}

ObservationMask load_mask_image(const std::filesystem::path& path, const Shape& shape) {
  const DenseTensor m = load_image(path);
  if (m.shape() != shape) throw std::invalid_argument("mask image size does not match the input image");
  std::vector<std::size_t> observed;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] != 0.0) observed.push_back(i);
  }
  return ObservationMask(shape, std::move(observed));
}

}  // namespace lrtc
