#include "inrc/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace inrc {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void on_png_error(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

std::uint8_t to_byte(double unit_value) {
  const double scaled = std::floor(unit_value * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

}  // namespace

ImageTensor load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(Errc::file_error, "cannot open " + path.string());

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(Errc::file_error, path.string() + " is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error(Errc::file_error, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::file_error, "libpng init failed");
  }

  // No C++ objects with destructors may be created between setjmp and the
  // last libpng call, so everything is sized up front.
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  volatile bool unsupported = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::file_error, "failed to decode " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_GRAY) ||
      png_get_valid(png, info, PNG_INFO_tRNS) != 0) {
    unsupported = true;
  } else {
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    pixels.resize(static_cast<std::size_t>(width) * height * channels);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + static_cast<std::size_t>(r) * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (unsupported) {
    throw Error(Errc::unsupported_png, path.string() + ": only 8-bit RGB or grayscale PNGs are supported (bit depth " +
                                           std::to_string(bit_depth) + ", color type " +
                                           std::to_string(color_type) + ")");
  }
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  std::vector<double> values(pixels.size());
  for (std::size_t k = 0; k < pixels.size(); ++k) values[k] = static_cast<double>(pixels[k]) / 255.0;
  return {static_cast<int>(height), static_cast<int>(width), channels, std::move(values), PixelRange::unit};
}

void save_png(const ImageTensor& img, const std::filesystem::path& path) {
  const ImageTensor u = img.to_unit();
  std::vector<std::uint8_t> pixels(u.values().size());
  for (std::size_t k = 0; k < pixels.size(); ++k) pixels[k] = to_byte(u.values()[k]);
  std::vector<png_bytep> rows(static_cast<std::size_t>(u.height()));
  const std::size_t stride = static_cast<std::size_t>(u.width()) * static_cast<std::size_t>(u.channels());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = pixels.data() + r * stride;

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(Errc::file_error, "cannot open " + path.string() + " for writing");

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_png_error, on_png_warning);
  if (!png) throw Error(Errc::file_error, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::file_error, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::file_error, "failed to encode " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(u.width()), static_cast<png_uint_32>(u.height()), 8,
               u.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace inrc
