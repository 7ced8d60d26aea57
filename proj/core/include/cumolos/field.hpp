#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace cumolos {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Raw instrument record: velocity and backscatter intensity over
/// (profile time, range gate). Rows index time, columns index gates.
struct TimeHeightField {
  Matrix velocity;        // m/s, shape (T, G)
  Matrix intensity;       // dimensionless SNR proxy, shape (T, G)
  double time_step_s = 1.0;
  double gate_spacing_m = 30.0;
  double start_time = 0.0;  // seconds since epoch
  BoolMatrix valid;         // empty until preprocess() has run

  Eigen::Index time_count() const { return velocity.rows(); }
  Eigen::Index gate_count() const { return velocity.cols(); }
  bool preprocessed() const { return valid.size() != 0; }
};

/// One normalized window of the field. `values` lie in [-1, 1]; pixels with
/// validity false hold the fill value 0.
struct PatchSample {
  Matrix values;       // shape (H, W): H along time, W along gates
  BoolMatrix validity; // same shape
  Eigen::Index t_origin = 0;
  Eigen::Index g_origin = 0;
};

/// Physical clamp bound; normalization divides by this, so one constant maps
/// normalized units back to m/s.
inline constexpr double kClampBound = 5.0;

inline double normalize_velocity(double v, double bound = kClampBound) {
  return v / bound;
}
inline double denormalize_velocity(double v, double bound = kClampBound) {
  return v * bound;
}

/// SNR filter + clamp. Pixels with intensity below `snr_threshold` (or a
/// non-finite velocity) are marked invalid and zeroed; the rest are clamped
/// into [clamp_lo, clamp_hi]. The threshold comparison is inclusive.
TimeHeightField preprocess(const TimeHeightField& field,
                           double snr_threshold = 0.005,
                           double clamp_lo = -kClampBound,
                           double clamp_hi = kClampBound);

/// Tiles the lowest `gate_limit` gates with non-overlapping window_t x
/// window_g patches (trailing time remainder discarded) and normalizes each
/// to [-1, 1]. Works on preprocessed fields; on raw fields validity defaults
/// to finiteness and values are clamped before normalization.
std::vector<PatchSample> extract_patches(const TimeHeightField& field,
                                         Eigen::Index window_t = 64,
                                         Eigen::Index window_g = 64,
                                         Eigen::Index gate_limit = 64);

/// Inverse of the patch tiling: lays `arrays[i]` (same order and shape as the
/// extraction output) back into a (ceil-tiled T', gate_limit) matrix.
/// Arrays may be normalized values or physical reconstructions; no scaling
/// is applied.
Matrix reassemble_patches(const std::vector<Matrix>& arrays,
                          const std::vector<PatchSample>& layout);

}  // namespace cumolos
