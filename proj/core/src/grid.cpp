#include "inrc/grid.hpp"

#include "inrc/error.hpp"

#include <string>

namespace inrc {

namespace {

double axis_coord(int i, int count) {
  if (count == 1) return 0.0;
  if (i == count - 1) return 1.0;
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace

CoordGrid coord_grid(int height, int width) {
  if (height < 1 || width < 1) {
    throw Error(Errc::invalid_argument,
                "coord_grid needs positive dims, got " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  CoordGrid grid;
  grid.height = height;
  grid.width = width;
  grid.points.resize(2, static_cast<Eigen::Index>(height) * width);
  for (int r = 0; r < height; ++r) {
    const double y = axis_coord(r, height);
    for (int c = 0; c < width; ++c) {
      const Eigen::Index p = static_cast<Eigen::Index>(r) * width + c;
      grid.points(0, p) = axis_coord(c, width);
      grid.points(1, p) = y;
    }
  }
  return grid;
}

}  // namespace inrc
