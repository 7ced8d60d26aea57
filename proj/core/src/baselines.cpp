#include "cumolos/baselines.hpp"

#include "cumolos/errors.hpp"

namespace cumolos {

namespace {

// Mirror index into [0, n) without repeating the edge sample.
Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  const Eigen::Index period = 2 * (n - 1);
  i = ((i % period) + period) % period;
  return i < n ? i : period - i;
}

}  // namespace

Matrix mean_filter(const Matrix& values, const BoolMatrix& validity,
                   const FilterConfig& config) {
  const Eigen::Index h = values.rows(), w = values.cols();
  if (validity.rows() != h || validity.cols() != w)
    throw ShapeError("mean_filter: validity shape differs from values");
  if (config.kernel_t < 1 || config.kernel_g < 1)
    throw ParameterError("mean_filter: kernel sizes must be positive");
  if (config.kernel_t > h || config.kernel_g > w)
    throw ParameterError("mean_filter: kernel larger than patch");

  const Eigen::Index kt = config.kernel_t, kg = config.kernel_g;
  const Eigen::Index lo_t = -(kt / 2), hi_t = kt - kt / 2 - 1;
  const Eigen::Index lo_g = -(kg / 2), hi_g = kg - kg / 2 - 1;

  // Separable two-pass windowed sums over value*valid and valid counts.
  Matrix col_sum = Matrix::Zero(h, w);
  Matrix col_cnt = Matrix::Zero(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      double s = 0, c = 0;
      for (Eigen::Index dg = lo_g; dg <= hi_g; ++dg) {
        const Eigen::Index jj = reflect(j + dg, w);
        if (validity(i, jj)) {
          s += values(i, jj);
          c += 1;
        }
      }
      col_sum(i, j) = s;
      col_cnt(i, j) = c;
    }

  Matrix out(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < w; ++j) {
      double s = 0, c = 0;
      for (Eigen::Index dt = lo_t; dt <= hi_t; ++dt) {
        const Eigen::Index ii = reflect(i + dt, h);
        s += col_sum(ii, j);
        c += col_cnt(ii, j);
      }
      out(i, j) = c > 0 ? s / c : 0.0;
    }
  return out;
}

}  // namespace cumolos
