#pragma once

#include <array>
#include <vector>

#include "vdfield/mesh2d.hpp"

namespace vdfield::detail {

struct RigGeometry {
  std::vector<Vec2> rest;
  std::vector<Face> faces;
  // Per face inverse of the rest edge matrix [b-a, c-a], row-major.
  std::vector<std::array<double, 4>> einv;

  // Uniform grid over the rest bounding box; faces listed per cell in CSR form.
  double x0 = 0.0, y0 = 0.0, cell = 1.0;
  int nx = 1, ny = 1;
  std::vector<int> cell_start;
  std::vector<int> cell_faces;
};

struct RigDeformation {
  std::vector<Vec2> deformed;
  std::vector<Mat2> jacobian;
  bool identity = true;
};

}  // namespace vdfield::detail
