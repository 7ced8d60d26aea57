#include "cumolos/field.hpp"

#include <algorithm>
#include <cmath>

#include "cumolos/errors.hpp"

namespace cumolos {

TimeHeightField preprocess(const TimeHeightField& field, double snr_threshold,
                           double clamp_lo, double clamp_hi) {
  if (snr_threshold < 0.0)
    throw ParameterError("preprocess: snr_threshold must be >= 0");
  if (!(clamp_lo < clamp_hi))
    throw ParameterError("preprocess: clamp interval is empty");
  if (field.velocity.rows() != field.intensity.rows() ||
      field.velocity.cols() != field.intensity.cols())
    throw ShapeError("preprocess: velocity and intensity shapes differ");

  TimeHeightField out = field;
  const Eigen::Index t = field.time_count(), g = field.gate_count();
  out.valid.resize(t, g);
  for (Eigen::Index j = 0; j < g; ++j) {
    for (Eigen::Index i = 0; i < t; ++i) {
      const double v = field.velocity(i, j);
      const double snr = field.intensity(i, j);
      // NaN velocities behave like intensity-0 pixels: real lidar files
      // carry fill values, not errors.
      const bool keep = std::isfinite(v) && std::isfinite(snr) &&
                        snr >= snr_threshold;
      out.valid(i, j) = keep ? 1 : 0;
      out.velocity(i, j) = keep ? std::clamp(v, clamp_lo, clamp_hi) : 0.0;
    }
  }
  return out;
}

std::vector<PatchSample> extract_patches(const TimeHeightField& field,
                                         Eigen::Index window_t,
                                         Eigen::Index window_g,
                                         Eigen::Index gate_limit) {
  const Eigen::Index t = field.time_count(), g = field.gate_count();
  if (window_t <= 0 || window_g <= 0)
    throw ParameterError("extract_patches: window must be positive");
  if (gate_limit > g)
    throw ShapeError("extract_patches: gate_limit exceeds gate count");
  if (window_t > t || window_g > gate_limit)
    throw ShapeError("extract_patches: window larger than field");

  const Eigen::Index nt = t / window_t;
  const Eigen::Index ng = gate_limit / window_g;
  const bool has_valid = field.preprocessed();

  std::vector<PatchSample> patches;
  patches.reserve(static_cast<std::size_t>(nt * ng));
  for (Eigen::Index bt = 0; bt < nt; ++bt) {
    for (Eigen::Index bg = 0; bg < ng; ++bg) {
      PatchSample p;
      p.t_origin = bt * window_t;
      p.g_origin = bg * window_g;
      p.values.resize(window_t, window_g);
      p.validity.resize(window_t, window_g);
      for (Eigen::Index j = 0; j < window_g; ++j) {
        for (Eigen::Index i = 0; i < window_t; ++i) {
          const double v = field.velocity(p.t_origin + i, p.g_origin + j);
          const bool ok = has_valid
                              ? field.valid(p.t_origin + i, p.g_origin + j) != 0
                              : std::isfinite(v);
          p.validity(i, j) = ok ? 1 : 0;
          p.values(i, j) =
              ok ? normalize_velocity(std::clamp(v, -kClampBound, kClampBound))
                 : 0.0;
        }
      }
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

Matrix reassemble_patches(const std::vector<Matrix>& arrays,
                          const std::vector<PatchSample>& layout) {
  if (arrays.size() != layout.size())
    throw AlignmentError("reassemble_patches: array/layout counts differ");
  if (arrays.empty()) return Matrix();

  Eigen::Index rows = 0, cols = 0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (arrays[k].rows() != layout[k].values.rows() ||
        arrays[k].cols() != layout[k].values.cols())
      throw ShapeError("reassemble_patches: array shape differs from layout");
    rows = std::max(rows, layout[k].t_origin + arrays[k].rows());
    cols = std::max(cols, layout[k].g_origin + arrays[k].cols());
  }

  Matrix out = Matrix::Zero(rows, cols);
  for (std::size_t k = 0; k < layout.size(); ++k)
    out.block(layout[k].t_origin, layout[k].g_origin, arrays[k].rows(),
              arrays[k].cols()) = arrays[k];
  return out;
}

}  // namespace cumolos
