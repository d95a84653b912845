// SPDX-License-Identifier: Apache-2.0
#include "trajcl/grid.hpp"

#include <algorithm>
#include <string>

#include "trajcl/error.hpp"

namespace trajcl {
namespace {

std::size_t clamp_axis(double offset, double cell_size, std::size_t count) {
  const double idx = std::floor(offset / cell_size);
  if (!(idx > 0.0)) return 0;  // also catches NaN
  if (idx >= static_cast<double>(count - 1)) return count - 1;
  return static_cast<std::size_t>(idx);
}

}  // namespace

Cell endpoint_to_cell(Vec2 endpoint, const GridSpec& spec) {
  return {clamp_axis(endpoint.y - spec.origin.y, spec.cell_size, spec.rows_h),
          clamp_axis(endpoint.x - spec.origin.x, spec.cell_size, spec.cols_w)};
}

Vec2 cell_to_center(Cell cell, const GridSpec& spec) {
  if (cell.row >= spec.rows_h || cell.col >= spec.cols_w) {
    throw Error("cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                ") outside a " + std::to_string(spec.rows_h) + "x" + std::to_string(spec.cols_w) + " grid");
  }
  return {spec.origin.x + (static_cast<double>(cell.col) + 0.5) * spec.cell_size,
          spec.origin.y + (static_cast<double>(cell.row) + 0.5) * spec.cell_size};
}

}  // namespace trajcl
