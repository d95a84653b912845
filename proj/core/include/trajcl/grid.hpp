// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "trajcl/types.hpp"

namespace trajcl {

/// Nearest cell center to `endpoint`. Points outside the grid clamp to the
/// nearest border cell, so this never fails.
Cell endpoint_to_cell(Vec2 endpoint, const GridSpec& spec);

/// Center of `cell`. Throws Error when the cell lies outside the grid.
Vec2 cell_to_center(Cell cell, const GridSpec& spec);

}  // namespace trajcl
