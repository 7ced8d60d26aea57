#pragma once

#include <cstdint>

#include "cumolos/field.hpp"

namespace cumolos {

/// Desk-scale stand-in for real lidar archives: a smooth background flow with
/// injected coherent structures, measurement noise, and low-SNR dropout
/// regions for the intensity filter to reject.
struct SyntheticSpec {
  Eigen::Index time_count = 2048;
  Eigen::Index gate_count = 64;
  double time_step_s = 1.0;
  double gate_spacing_m = 30.0;

  double background_amplitude = 1.0;
  int blob_count = 96;             // Gaussian updraft/downdraft cores
  double blob_amplitude_min = 1.5; // m/s, sign drawn per blob
  double blob_amplitude_max = 4.0;
  double blob_radius_t_min = 3.0;  // profiles
  double blob_radius_t_max = 12.0;
  double blob_radius_g_min = 2.0;  // gates
  double blob_radius_g_max = 8.0;
  int shear_band_count = 8;        // linear shear layers across gates
  double shear_amplitude_min = 0.5;
  double shear_amplitude_max = 1.5;

  double noise_sigma = 0.35;       // additive Gaussian, m/s
  double dropout_fraction = 0.06;  // target fraction of low-SNR pixels
  std::uint64_t seed = 0;
};

/// Deterministic given (spec, seed). The structure template depends only on
/// the dimensions, structure parameters, and seed, so zeroing noise_sigma and
/// dropout_fraction reproduces the clean field under the same seed.
TimeHeightField generate_synthetic(const SyntheticSpec& spec,
                                   std::uint64_t seed);

}  // namespace cumolos
