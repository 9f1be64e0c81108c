#include "inrc/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace inrc {

namespace {

std::string dims_str(const ImageTensor& img) {
  return std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
         std::to_string(img.channels());
}

void require_same_dims(const ImageTensor& a, const ImageTensor& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw Error(Errc::shape_mismatch, std::string(op) + ": " + dims_str(a) + " vs " + dims_str(b));
  }
}

double lower_bound_of(PixelRange r) { return r == PixelRange::unit ? 0.0 : -1.0; }

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels, PixelRange range)
    : ImageTensor(height, width, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                      static_cast<std::size_t>(std::max(width, 0)) *
                                      static_cast<std::size_t>(std::max(channels, 0)),
                                      lower_bound_of(range)),
                  range) {}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<double> values,
                         PixelRange range)
    : height_(height), width_(width), channels_(channels), range_(range), values_(std::move(values)) {
  if (height < 1 || width < 1) throw Error(Errc::invalid_argument, "image dims must be positive");
  if (channels != 1 && channels != 3) {
    throw Error(Errc::invalid_argument, "images have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (values_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(channels)) {
    throw Error(Errc::shape_mismatch, "pixel buffer length does not match dims");
  }
  clamp_all();
}

void ImageTensor::clamp_all() {
  const double lo = lower_bound_of(range_);
  for (double& v : values_) v = std::clamp(v, lo, 1.0);
}

void ImageTensor::set(int row, int col, int channel, double value) {
  values_[index(row, col, channel)] = std::clamp(value, lower_bound_of(range_), 1.0);
}

ImageTensor ImageTensor::to_unit() const {
  if (range_ == PixelRange::unit) return *this;
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return (x + 1.0) * 0.5; });
  return {height_, width_, channels_, std::move(v), PixelRange::unit};
}

ImageTensor ImageTensor::to_signed() const {
  if (range_ == PixelRange::signed_unit) return *this;
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return 2.0 * x - 1.0; });
  return {height_, width_, channels_, std::move(v), PixelRange::signed_unit};
}

Eigen::MatrixXd to_channel_matrix(const ImageTensor& img) {
  const ImageTensor s = img.to_signed();
  // HWC interleaved storage is exactly a column-major C x (H*W) matrix.
  return Eigen::Map<const Eigen::MatrixXd>(s.values().data(), s.channels(),
                                           static_cast<Eigen::Index>(s.pixel_count()));
}

ImageTensor from_network_output(const Eigen::MatrixXd& output, int height, int width) {
  if (output.cols() != static_cast<Eigen::Index>(height) * width) {
    throw Error(Errc::shape_mismatch, "network output does not cover the raster");
  }
  std::vector<double> v(static_cast<std::size_t>(output.size()));
  for (Eigen::Index k = 0; k < output.size(); ++k) {
    v[static_cast<std::size_t>(k)] = (output.data()[k] + 1.0) * 0.5;
  }
  return {height, width, static_cast<int>(output.rows()), std::move(v), PixelRange::unit};
}

LossAndGrad loss_and_grad(const WeightSet& w, const CoordGrid& coords, const ImageTensor& target) {
  if (static_cast<std::size_t>(coords.size()) != target.pixel_count()) {
    throw Error(Errc::shape_mismatch, "coordinate count does not match target pixel count");
  }
  return loss_and_grad(w, coords.points, to_channel_matrix(target));
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same_dims(a, b, "psnr");
  const ImageTensor ua = a.to_unit();
  const ImageTensor ub = b.to_unit();
  double sum = 0.0;
  for (std::size_t k = 0; k < ua.values().size(); ++k) {
    const double d = ua.values()[k] - ub.values()[k];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(ua.values().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

ImageTensor downsample2x(const ImageTensor& img) {
  if (img.height() % 2 != 0 || img.width() % 2 != 0) {
    throw Error(Errc::invalid_argument, "downsample2x needs even dims, got " + dims_str(img));
  }
  ImageTensor out(img.height() / 2, img.width() / 2, img.channels(), img.range());
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        const double sum = img.at(2 * r, 2 * c, ch) + img.at(2 * r, 2 * c + 1, ch) +
                           img.at(2 * r + 1, 2 * c, ch) + img.at(2 * r + 1, 2 * c + 1, ch);
        out.set(r, c, ch, 0.25 * sum);
      }
    }
  }
  return out;
}

ImageTensor residual(const ImageTensor& a, const ImageTensor& b) {
  require_same_dims(a, b, "residual");
  const ImageTensor ua = a.to_unit();
  const ImageTensor ub = b.to_unit();
  std::vector<double> diff(ua.values().size());
  double peak = 0.0;
  for (std::size_t k = 0; k < diff.size(); ++k) {
    diff[k] = std::abs(ua.values()[k] - ub.values()[k]);
    peak = std::max(peak, diff[k]);
  }
  if (peak > 0.0) {
    for (double& d : diff) d /= peak;
  }
  return {a.height(), a.width(), a.channels(), std::move(diff), PixelRange::unit};
}

ImageTensor render(const WeightSet& w, int height, int width) {
  const CoordGrid grid = coord_grid(height, width);
  return from_network_output(forward(w, grid), height, width);
}

ImageTensor reconstruct(const Bundle& bundle, int image_index, double scale) {
  const int m = bundle.m_images();
  if (image_index < 1 || image_index > m) {
    throw Error(Errc::index_out_of_range,
                "image index " + std::to_string(image_index) + " outside 1.." + std::to_string(m));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(Errc::invalid_argument, "scale must be positive");
  }
  const int h = std::max(1, static_cast<int>(std::lround(scale * bundle.dims.height)));
  const int w = std::max(1, static_cast<int>(std::lround(scale * bundle.dims.width)));
  const Eigen::VectorXd row = bundle.spec.alpha.row(image_index - 1).transpose();
  return render(combine(bundle.bank, row), h, w);
}

ImageTensor rotate90(const ImageTensor& img) {
  ImageTensor out(img.width(), img.height(), img.channels(), img.range());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.set(img.width() - 1 - c, r, ch, img.at(r, c, ch));
      }
    }
  }
  return out;
}

ImageTensor hstack(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw Error(Errc::invalid_argument, "hstack of nothing");
  int width = 0;
  for (const auto& im : images) {
    if (im.height() != images.front().height() || im.channels() != images.front().channels()) {
      throw Error(Errc::shape_mismatch, "hstack needs equal heights and channels");
    }
    width += im.width();
  }
  ImageTensor out(images.front().height(), width, images.front().channels());
  int offset = 0;
  for (const auto& im : images) {
    const ImageTensor u = im.to_unit();
    for (int r = 0; r < u.height(); ++r) {
      for (int c = 0; c < u.width(); ++c) {
        for (int ch = 0; ch < u.channels(); ++ch) out.set(r, offset + c, ch, u.at(r, c, ch));
      }
    }
    offset += im.width();
  }
  return out;
}

ImageTensor vstack(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw Error(Errc::invalid_argument, "vstack of nothing");
  int height = 0;
  for (const auto& im : images) {
    if (im.width() != images.front().width() || im.channels() != images.front().channels()) {
      throw Error(Errc::shape_mismatch, "vstack needs equal widths and channels");
    }
    height += im.height();
  }
  ImageTensor out(height, images.front().width(), images.front().channels());
  int offset = 0;
  for (const auto& im : images) {
    const ImageTensor u = im.to_unit();
    for (int r = 0; r < u.height(); ++r) {
      for (int c = 0; c < u.width(); ++c) {
        for (int ch = 0; ch < u.channels(); ++ch) out.set(offset + r, c, ch, u.at(r, c, ch));
      }
    }
    offset += im.height();
  }
  return out;
}

ImageTensor pixel_average(const std::vector<ImageTensor>& images) {
  if (images.empty()) throw Error(Errc::invalid_argument, "average of nothing");
  std::vector<double> acc(images.front().values().size(), 0.0);
  for (const auto& im : images) {
    require_same_dims(im, images.front(), "pixel_average");
    const ImageTensor u = im.to_unit();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += u.values()[k];
  }
  for (double& v : acc) v /= static_cast<double>(images.size());
  const auto& f = images.front();
  return {f.height(), f.width(), f.channels(), std::move(acc), PixelRange::unit};
}

ImageTensor gray_to_rgb(const ImageTensor& img) {
  if (img.channels() == 3) return img;
  ImageTensor out(img.height(), img.width(), 3, img.range());
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) out.set(r, c, ch, img.at(r, c, 0));
    }
  }
  return out;
}

}  // namespace inrc
