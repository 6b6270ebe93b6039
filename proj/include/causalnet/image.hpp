#pragma once

#include "causalnet/data_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace causalnet {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 3, 0) {}

  std::uint8_t* at(int y, int x) { return &data[(static_cast<std::size_t>(y) * cols + x) * 3]; }
  const std::uint8_t* at(int y, int x) const { return &data[(static_cast<std::size_t>(y) * cols + x) * 3]; }
};

/// Row-stochastic (out x in) matrix averaging input cells by fractional
/// overlap with each output cell.
Eigen::MatrixXd area_weights(Eigen::Index in_size, Eigen::Index out_size);

/// Area-average resample; identity when the shape already matches.
template <typename Derived>
Eigen::MatrixXd area_resize(const Eigen::MatrixBase<Derived>& src, Eigen::Index out_rows, Eigen::Index out_cols) {
  if (src.rows() == out_rows && src.cols() == out_cols) return src.template cast<double>();
  return area_weights(src.rows(), out_rows) * src.template cast<double>() *
         area_weights(src.cols(), out_cols).transpose();
}

inline Eigen::MatrixXd to_double(const Frame& f) { return f.cast<double>(); }

void write_png(const std::filesystem::path& path, const Frame& gray);
void write_png(const std::filesystem::path& path, const RgbImage& rgb);
/// Reads any 8/16-bit PNG, converting to 8-bit grayscale.
Frame read_png_gray(const std::filesystem::path& path);

}  // namespace causalnet
