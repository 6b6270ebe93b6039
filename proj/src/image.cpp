#include "causalnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>

namespace causalnet {

Eigen::MatrixXd area_weights(Eigen::Index in_size, Eigen::Index out_size) {
  if (in_size <= 0 || out_size <= 0) throw std::invalid_argument("area_weights: sizes must be positive");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(out_size, in_size);
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  for (Eigen::Index o = 0; o < out_size; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    for (auto i = static_cast<Eigen::Index>(lo); i < in_size && i < hi; ++i) {
      const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
      if (overlap > 0) w(o, i) = overlap / scale;
    }
  }
  return w;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

void write_rows(const std::filesystem::path& path, int rows, int cols, int color_type,
                const std::vector<png_bytep>& row_ptrs) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(row_ptrs.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Frame& gray) {
  const int rows = static_cast<int>(gray.rows());
  const int cols = static_cast<int>(gray.cols());
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(rows) * cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) buffer[static_cast<std::size_t>(y) * cols + x] = gray(y, x);
  std::vector<png_bytep> ptrs(rows);
  for (int y = 0; y < rows; ++y) ptrs[y] = buffer.data() + static_cast<std::size_t>(y) * cols;
  write_rows(path, rows, cols, PNG_COLOR_TYPE_GRAY, ptrs);
}

void write_png(const std::filesystem::path& path, const RgbImage& rgb) {
  std::vector<png_bytep> ptrs(rgb.rows);
  auto& data = const_cast<std::vector<std::uint8_t>&>(rgb.data);
  for (int y = 0; y < rgb.rows; ++y) ptrs[y] = data.data() + static_cast<std::size_t>(y) * rgb.cols * 3;
  write_rows(path, rgb.rows, rgb.cols, PNG_COLOR_TYPE_RGB, ptrs);
}

Frame read_png_gray(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed reading " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  const int rows = static_cast<int>(png_get_image_height(png, info));
  const int cols = static_cast<int>(png_get_image_width(png, info));
  const auto stride = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> buffer(stride * rows);
  std::vector<png_bytep> ptrs(rows);
  for (int y = 0; y < rows; ++y) ptrs[y] = buffer.data() + stride * y;
  png_read_image(png, ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Frame out(rows, cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) out(y, x) = buffer[stride * y + x];
  return out;
}

}  // namespace causalnet
