#pragma once

#include <filesystem>
#include <string>

#include "cumolos/field.hpp"

namespace cumolos {

/// Dataset names inside self-describing files.
struct VariableNames {
  std::string velocity = "velocity";
  std::string intensity = "intensity";
  std::string time = "time";
};

/// Loads a time-height field, dispatching on the file's magic bytes:
/// "CMLS" selects the raw binary container, the HDF5 signature selects the
/// NetCDF-style self-describing reader. No preprocessing is applied.
TimeHeightField load_field(const std::filesystem::path& path,
                           const VariableNames& names = {});

/// Raw binary container, little-endian:
///   "CMLS" | u32 version | u32 T | u32 G | f32 time_step_s |
///   f32 gate_spacing_m | T*G f32 velocity row-major | T*G f32 intensity.
void save_field_cmls(const TimeHeightField& field,
                     const std::filesystem::path& path);

/// Self-describing HDF5 layout: 2D float64 datasets for velocity and
/// intensity, a 1D time coordinate in seconds, and scalar attributes
/// gate_spacing_m / start_time on the root group.
void save_field_hdf5(const TimeHeightField& field,
                     const std::filesystem::path& path,
                     const VariableNames& names = {});

/// Writes a pair of equally-shaped arrays (one record per array) in the CMLS
/// container layout. Used for per-patch ensemble results, where `first` is
/// the posterior mean and `second` the per-pixel sigma.
void save_array_pair_cmls(const Matrix& first, const Matrix& second,
                          double time_step_s, double gate_spacing_m,
                          const std::filesystem::path& path);

/// Reads a two-record CMLS file back as (first, second).
std::pair<Matrix, Matrix> load_array_pair_cmls(
    const std::filesystem::path& path);

}  // namespace cumolos
