#pragma once

#include <Eigen/Core>

namespace inrc {

/// Pixel coordinates of an H x W raster, one column per pixel in row-major
/// pixel order. Row 0 holds x (column position), row 1 holds y (row position).
struct CoordGrid {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd points;  // 2 x (height * width)

  Eigen::Index size() const { return points.cols(); }
};

/// Endpoint-inclusive uniform grid over [-1, 1]^2. A single row or column
/// maps to coordinate 0.
CoordGrid coord_grid(int height, int width);

}  // namespace inrc
