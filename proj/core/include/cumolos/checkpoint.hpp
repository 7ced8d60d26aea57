#pragma once

#include <filesystem>

#include "cumolos/training.hpp"

namespace cumolos {

/// Self-contained inference state: architecture, curriculum, the velocity
/// normalization constant, trained parameters, and optimizer state for
/// seamless resume.
struct Checkpoint {
  ModelConfig model;
  CurriculumSchedule curriculum;
  TrainConfig training;
  double norm_constant = kClampBound;
  int epoch = 0;  // epochs completed when written

  MaeParams params;
  std::vector<double> adam_m, adam_v;
  std::int64_t adam_t = 0;
};

/// Atomic write (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cumolos
