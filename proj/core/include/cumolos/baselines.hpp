#pragma once

#include "cumolos/field.hpp"

namespace cumolos {

/// Sliding-window mean filter. The even default kernel is floor-centered:
/// an 8x8 window covers offsets [-4, +3] on each axis.
struct FilterConfig {
  int kernel_t = 8;
  int kernel_g = 8;
  // boundary handling is reflect (mirror without repeating the edge pixel)
};

/// Windowed mean over valid pixels only; positions whose whole window is
/// invalid yield 0. Reflect boundary. Output has the input's shape and units.
Matrix mean_filter(const Matrix& values, const BoolMatrix& validity,
                   const FilterConfig& config = {});

inline Matrix mean_filter(const PatchSample& patch,
                          const FilterConfig& config = {}) {
  return mean_filter(patch.values, patch.validity, config);
}

}  // namespace cumolos
