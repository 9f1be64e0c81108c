#include "inrc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace inrc::synth {

namespace {

int stroke_width(int size) { return std::max(1, size / 8); }

ImageTensor blank(int size) { return ImageTensor(size, size, 3); }

void fill_white(ImageTensor& img, int r, int c) {
  for (int ch = 0; ch < 3; ++ch) img.set(r, c, ch, 1.0);
}

}  // namespace

ImageTensor plus_sign(int size) {
  ImageTensor img = blank(size);
  const int t = stroke_width(size);
  const int lo = (size - t) / 2;
  const int margin = size / 8;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const bool vertical = c >= lo && c < lo + t && r >= margin && r < size - margin;
      const bool horizontal = r >= lo && r < lo + t && c >= margin && c < size - margin;
      if (vertical || horizontal) fill_white(img, r, c);
    }
  }
  return img;
}

ImageTensor cross_sign(int size) {
  ImageTensor img = blank(size);
  const double half_t = 0.5 * stroke_width(size);
  const int margin = size / 8;
  const double last = size - 1;
  for (int r = margin; r < size - margin; ++r) {
    for (int c = margin; c < size - margin; ++c) {
      // distance to the two diagonals r = c and r = last - c
      const double d1 = std::abs(r - c) / std::sqrt(2.0);
      const double d2 = std::abs(r + c - last) / std::sqrt(2.0);
      if (d1 < half_t || d2 < half_t) fill_white(img, r, c);
    }
  }
  return img;
}

ImageTensor gaussian_blobs(int height, int width, int blobs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Blob {
    double cy, cx, sigma, color[3];
  };
  std::vector<Blob> list;
  for (int b = 0; b < blobs; ++b) {
    Blob blob{};
    blob.cy = unit(rng) * height;
    blob.cx = unit(rng) * width;
    blob.sigma = (0.12 + 0.18 * unit(rng)) * std::min(height, width);
    for (double& ch : blob.color) ch = 0.2 + 0.8 * unit(rng);
    list.push_back(blob);
  }
  ImageTensor img(height, width, 3);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double acc[3] = {0.08, 0.08, 0.1};
      for (const auto& b : list) {
        const double d2 = (r - b.cy) * (r - b.cy) + (c - b.cx) * (c - b.cx);
        const double g = std::exp(-d2 / (2.0 * b.sigma * b.sigma));
        for (int ch = 0; ch < 3; ++ch) acc[ch] += 0.7 * g * b.color[ch];
      }
      for (int ch = 0; ch < 3; ++ch) img.set(r, c, ch, acc[ch]);
    }
  }
  return img;
}

ImageTensor sailboat(int size) {
  ImageTensor img(size, size, 3);
  const double s = size;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double y = r / s;
      const double x = c / s;
      double rgb[3];
      if (y < 0.62) {
        // sky: light blue fading to pale near the horizon
        rgb[0] = 0.45 + 0.4 * y;
        rgb[1] = 0.65 + 0.3 * y;
        rgb[2] = 0.95;
      } else {
        // sea with gentle ripples
        const double ripple = 0.05 * std::sin(40.0 * x + 25.0 * y);
        rgb[0] = 0.05 + ripple;
        rgb[1] = 0.25 + 0.2 * (y - 0.62) + ripple;
        rgb[2] = 0.5 + ripple;
      }
      // sun
      const double sun = (x - 0.8) * (x - 0.8) + (y - 0.18) * (y - 0.18);
      if (sun < 0.006) {
        rgb[0] = 1.0;
        rgb[1] = 0.85;
        rgb[2] = 0.2;
      }
      // hull: trapezoid sitting on the water line
      if (y >= 0.56 && y < 0.66) {
        const double inset = (y - 0.56) * 1.2;
        if (x > 0.22 + inset && x < 0.78 - inset) {
          rgb[0] = 0.55;
          rgb[1] = 0.25;
          rgb[2] = 0.1;
        }
      }
      // main sail: triangle left of the mast
      if (y >= 0.12 && y < 0.54 && x < 0.5 && x > 0.5 - 0.7 * (y - 0.12)) {
        rgb[0] = 0.95;
        rgb[1] = 0.95;
        rgb[2] = 0.9;
      }
      // jib: red triangle right of the mast
      if (y >= 0.2 && y < 0.54 && x > 0.52 && x < 0.52 + 0.55 * (y - 0.2)) {
        rgb[0] = 0.85;
        rgb[1] = 0.15;
        rgb[2] = 0.15;
      }
      // mast
      if (x >= 0.49 && x < 0.52 && y >= 0.08 && y < 0.58) {
        rgb[0] = 0.3;
        rgb[1] = 0.2;
        rgb[2] = 0.1;
      }
      for (int ch = 0; ch < 3; ++ch) img.set(r, c, ch, rgb[ch]);
    }
  }
  return img;
}

}  // namespace inrc::synth
