#pragma once

#include <cstdint>
#include <vector>

#include "cumolos/field.hpp"

namespace cumolos {

/// Patch pixels regrouped into flattened 2x2 micro-patches. Row k holds the
/// pixels {(2i,2j), (2i,2j+1), (2i+1,2j), (2i+1,2j+1)} for k = i*grid_w + j.
struct TokenGrid {
  Matrix tokens;  // (L, 4)
  Eigen::Index grid_h = 0;
  Eigen::Index grid_w = 0;

  Eigen::Index token_count() const { return tokens.rows(); }
};

/// One boolean token-visibility draw. Exactly round(ratio * L) entries are
/// hidden (round half away from zero).
struct MaskRealization {
  std::vector<std::uint8_t> visible;  // length L, 1 = shown to the encoder
  double ratio = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index hidden_count() const {
    Eigen::Index n = 0;
    for (auto v : visible) n += (v == 0);
    return n;
  }
  Eigen::Index visible_count() const {
    return static_cast<Eigen::Index>(visible.size()) - hidden_count();
  }
};

/// Mask-ratio curriculum: hold at r_start, half-cosine ramp to r_end by
/// ramp_end_epoch, hold thereafter. Disabled => fixed r_end for all epochs.
struct CurriculumSchedule {
  double r_start = 0.5;
  double r_end = 0.7;
  int hold_epochs = 5;
  int ramp_end_epoch = 30;
  bool enabled = true;
};

TokenGrid tokenize(const Matrix& patch_values);
inline TokenGrid tokenize(const PatchSample& patch) {
  return tokenize(patch.values);
}

/// Exact inverse of tokenize.
Matrix untokenize(const TokenGrid& grid);

/// Flattens a (H, W) per-pixel mask into token order, matching
/// tokenize's pixel layout. Used to carry patch validity into the loss.
std::vector<std::uint8_t> tokenize_mask(const BoolMatrix& pixel_mask);

/// Uniformly random subset of exactly round(ratio * L) hidden tokens via a
/// seeded shuffle of 0..L-1. Deterministic per (seed, L, ratio).
MaskRealization sample_mask(Eigen::Index token_count, double ratio,
                            std::uint64_t seed);

/// Scheduled mask ratio for an integer epoch.
double mask_ratio_at(const CurriculumSchedule& schedule, int epoch);

/// Validates the schedule's invariants; throws ParameterError.
void validate(const CurriculumSchedule& schedule);

}  // namespace cumolos
