#include "cumolos/patching.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "cumolos/errors.hpp"
#include "cumolos/rng.hpp"

namespace cumolos {

TokenGrid tokenize(const Matrix& patch_values) {
  const Eigen::Index h = patch_values.rows(), w = patch_values.cols();
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("tokenize: patch dimensions must be even");

  TokenGrid grid;
  grid.grid_h = h / 2;
  grid.grid_w = w / 2;
  grid.tokens.resize(grid.grid_h * grid.grid_w, 4);
  for (Eigen::Index i = 0; i < grid.grid_h; ++i)
    for (Eigen::Index j = 0; j < grid.grid_w; ++j) {
      const Eigen::Index k = i * grid.grid_w + j;
      grid.tokens(k, 0) = patch_values(2 * i, 2 * j);
      grid.tokens(k, 1) = patch_values(2 * i, 2 * j + 1);
      grid.tokens(k, 2) = patch_values(2 * i + 1, 2 * j);
      grid.tokens(k, 3) = patch_values(2 * i + 1, 2 * j + 1);
    }
  return grid;
}

Matrix untokenize(const TokenGrid& grid) {
  if (grid.tokens.rows() != grid.grid_h * grid.grid_w ||
      grid.tokens.cols() != 4)
    throw ShapeError("untokenize: token count inconsistent with grid dims");

  Matrix out(2 * grid.grid_h, 2 * grid.grid_w);
  for (Eigen::Index i = 0; i < grid.grid_h; ++i)
    for (Eigen::Index j = 0; j < grid.grid_w; ++j) {
      const Eigen::Index k = i * grid.grid_w + j;
      out(2 * i, 2 * j) = grid.tokens(k, 0);
      out(2 * i, 2 * j + 1) = grid.tokens(k, 1);
      out(2 * i + 1, 2 * j) = grid.tokens(k, 2);
      out(2 * i + 1, 2 * j + 1) = grid.tokens(k, 3);
    }
  return out;
}

std::vector<std::uint8_t> tokenize_mask(const BoolMatrix& pixel_mask) {
  const Eigen::Index h = pixel_mask.rows(), w = pixel_mask.cols();
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("tokenize_mask: dimensions must be even");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(h * w / 4 * 4));
  const Eigen::Index grid_w = w / 2;
  for (Eigen::Index i = 0; i < h / 2; ++i)
    for (Eigen::Index j = 0; j < grid_w; ++j) {
      const std::size_t k = static_cast<std::size_t>(i * grid_w + j) * 4;
      out[k + 0] = pixel_mask(2 * i, 2 * j);
      out[k + 1] = pixel_mask(2 * i, 2 * j + 1);
      out[k + 2] = pixel_mask(2 * i + 1, 2 * j);
      out[k + 3] = pixel_mask(2 * i + 1, 2 * j + 1);
    }
  return out;
}

MaskRealization sample_mask(Eigen::Index token_count, double ratio,
                            std::uint64_t seed) {
  if (token_count < 1)
    throw ParameterError("sample_mask: token_count must be >= 1");
  if (!(ratio >= 0.0 && ratio < 1.0))
    throw ParameterError("sample_mask: ratio outside [0, 1)");

  const auto hidden = static_cast<Eigen::Index>(
      std::llround(ratio * static_cast<double>(token_count)));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(token_count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(mix64(seed));
  rng.shuffle(order);

  MaskRealization mask;
  mask.ratio = ratio;
  mask.seed = seed;
  mask.visible.assign(static_cast<std::size_t>(token_count), 1);
  for (Eigen::Index k = 0; k < hidden; ++k)
    mask.visible[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] =
        0;
  return mask;
}

void validate(const CurriculumSchedule& s) {
  if (!(0.0 <= s.r_start && s.r_start <= s.r_end && s.r_end < 1.0))
    throw ParameterError("curriculum: need 0 <= r_start <= r_end < 1");
  if (!(s.hold_epochs >= 0 && s.hold_epochs < s.ramp_end_epoch))
    throw ParameterError("curriculum: need 0 <= hold_epochs < ramp_end_epoch");
}

double mask_ratio_at(const CurriculumSchedule& s, int epoch) {
  if (epoch < 0) throw ParameterError("mask_ratio_at: negative epoch");
  validate(s);
  if (!s.enabled) return s.r_end;  // fixed-mask configuration
  if (epoch < s.hold_epochs) return s.r_start;
  if (epoch >= s.ramp_end_epoch) return s.r_end;
  const double progress = static_cast<double>(epoch - s.hold_epochs) /
                          static_cast<double>(s.ramp_end_epoch - s.hold_epochs);
  return s.r_start + (s.r_end - s.r_start) *
                         (1.0 - std::cos(std::numbers::pi * progress)) / 2.0;
}

}  // namespace cumolos
