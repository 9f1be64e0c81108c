#pragma once

#include "inrc/bundle.hpp"
#include "inrc/grid.hpp"
#include "inrc/siren.hpp"
#include "inrc/weight_space.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace inrc {

enum class PixelRange {
  unit,    // [0, 1]
  signed_unit  // [-1, 1]
};

/// H x W x C pixels, interleaved row-major (HWC). Values are clamped to the
/// tagged range on construction.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, PixelRange range = PixelRange::unit);
  ImageTensor(int height, int width, int channels, std::vector<double> values,
              PixelRange range = PixelRange::unit);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  PixelRange range() const { return range_; }
  ImageDims dims() const { return {height_, width_, channels_}; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_); }

  double at(int row, int col, int channel) const { return values_[index(row, col, channel)]; }
  /// Writes a clamped value.
  void set(int row, int col, int channel, double value);

  const std::vector<double>& values() const { return values_; }

  ImageTensor to_unit() const;
  ImageTensor to_signed() const;

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(channel);
  }
  void clamp_all();

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  PixelRange range_ = PixelRange::unit;
  std::vector<double> values_;
};

/// C x (H*W) matrix in signed range, column p = pixel p in row-major order.
/// This is the layout the network predicts.
Eigen::MatrixXd to_channel_matrix(const ImageTensor& img);

/// Inverse of to_channel_matrix for signed-range network output: maps
/// (v + 1) / 2 into unit range and clamps.
ImageTensor from_network_output(const Eigen::MatrixXd& output, int height, int width);

/// loss_and_grad against an image (converted to signed range).
LossAndGrad loss_and_grad(const WeightSet& w, const CoordGrid& coords, const ImageTensor& target);

/// 10 log10(1 / MSE) over unit-range values; +infinity when identical.
double psnr(const ImageTensor& a, const ImageTensor& b);

/// 2x2 box average. Throws on odd dimensions.
ImageTensor downsample2x(const ImageTensor& img);

/// |a - b| per entry, rescaled by its own maximum (all zeros if a == b).
ImageTensor residual(const ImageTensor& a, const ImageTensor& b);

/// Renders image `image_index` (1-based) of the bundle on a
/// round(scale H) x round(scale W) grid.
ImageTensor reconstruct(const Bundle& bundle, int image_index, double scale = 1.0);

/// Renders one weight set on an explicit raster (unit range, clamped).
ImageTensor render(const WeightSet& w, int height, int width);

/// Quarter turn counter-clockwise (portrait -> landscape).
ImageTensor rotate90(const ImageTensor& img);

/// Places images side by side on one row; every image must share H and C.
ImageTensor hstack(const std::vector<ImageTensor>& images);
/// Stacks images vertically; every image must share W and C.
ImageTensor vstack(const std::vector<ImageTensor>& images);

/// Pixelwise mean of equally shaped images.
ImageTensor pixel_average(const std::vector<ImageTensor>& images);

/// Broadcasts a single-channel image to three channels.
ImageTensor gray_to_rgb(const ImageTensor& img);

}  // namespace inrc
