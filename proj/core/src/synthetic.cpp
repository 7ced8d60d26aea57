#include "cumolos/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cumolos/errors.hpp"
#include "cumolos/rng.hpp"

namespace cumolos {

namespace {

// Template, noise, and dropout draw from independent streams so that
// disabling one corruption leaves the others bit-identical.
enum Stream : std::uint64_t { kTemplate = 1, kNoise = 2, kDropout = 3 };

void add_background(Matrix& v, const SyntheticSpec& spec, Rng& rng) {
  const double amp = spec.background_amplitude;
  if (amp == 0.0) return;
  const double pt = rng.next_uniform(0.5, 2.0);  // periods per field extent
  const double pg = rng.next_uniform(0.5, 2.0);
  const double phi_t = rng.next_uniform(0.0, 2.0 * std::numbers::pi);
  const double phi_g = rng.next_uniform(0.0, 2.0 * std::numbers::pi);
  const double wt = 2.0 * std::numbers::pi * pt / double(v.rows());
  const double wg = 2.0 * std::numbers::pi * pg / double(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (Eigen::Index i = 0; i < v.rows(); ++i)
      v(i, j) += amp * std::sin(wt * double(i) + phi_t) *
                 std::cos(wg * double(j) + phi_g);
}

void add_blobs(Matrix& v, const SyntheticSpec& spec, Rng& rng) {
  for (int b = 0; b < spec.blob_count; ++b) {
    const double tc = rng.next_uniform(0.0, double(v.rows()));
    const double gc = rng.next_uniform(0.0, double(v.cols()));
    const double rt =
        rng.next_uniform(spec.blob_radius_t_min, spec.blob_radius_t_max);
    const double rg =
        rng.next_uniform(spec.blob_radius_g_min, spec.blob_radius_g_max);
    double a =
        rng.next_uniform(spec.blob_amplitude_min, spec.blob_amplitude_max);
    if (rng.next_u64() & 1) a = -a;  // downdraft

    const auto lo_t = Eigen::Index(std::max(0.0, std::floor(tc - 4 * rt)));
    const auto hi_t =
        Eigen::Index(std::min(double(v.rows()), std::ceil(tc + 4 * rt)));
    const auto lo_g = Eigen::Index(std::max(0.0, std::floor(gc - 4 * rg)));
    const auto hi_g =
        Eigen::Index(std::min(double(v.cols()), std::ceil(gc + 4 * rg)));
    for (Eigen::Index j = lo_g; j < hi_g; ++j)
      for (Eigen::Index i = lo_t; i < hi_t; ++i) {
        const double dt = (double(i) - tc) / rt;
        const double dg = (double(j) - gc) / rg;
        v(i, j) += a * std::exp(-0.5 * (dt * dt + dg * dg));
      }
  }
}

void add_shear_bands(Matrix& v, const SyntheticSpec& spec, Rng& rng) {
  for (int s = 0; s < spec.shear_band_count; ++s) {
    const double g0 = rng.next_uniform(4.0, double(v.cols()) - 4.0);
    const double width = rng.next_uniform(2.0, 6.0);  // gates
    double a =
        rng.next_uniform(spec.shear_amplitude_min, spec.shear_amplitude_max);
    if (rng.next_u64() & 1) a = -a;
    const double tc = rng.next_uniform(0.0, double(v.rows()));
    const double span = rng.next_uniform(32.0, 160.0);  // profiles

    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double ramp =
          std::clamp((double(j) - g0) / width, -1.0, 1.0);  // linear shear
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double dt = (double(i) - tc) / span;
        const double envelope = std::exp(-0.5 * dt * dt);
        v(i, j) += a * ramp * envelope;
      }
    }
  }
}

void apply_dropout(TimeHeightField& f, const SyntheticSpec& spec, Rng& rng) {
  const Eigen::Index t = f.time_count(), g = f.gate_count();
  const auto target =
      static_cast<Eigen::Index>(std::llround(spec.dropout_fraction *
                                             double(t) * double(g)));
  if (target <= 0) return;

  BoolMatrix hit = BoolMatrix::Zero(t, g);
  Eigen::Index covered = 0;
  int guard = 0;
  while (covered < target && guard++ < 100000) {
    const auto ht = Eigen::Index(rng.next_uniform(4.0, 16.0));
    const auto hg = Eigen::Index(rng.next_uniform(2.0, 8.0));
    const auto it = Eigen::Index(rng.next_below(std::uint64_t(t)));
    const auto ig = Eigen::Index(rng.next_below(std::uint64_t(g)));
    for (Eigen::Index j = ig; j < std::min(g, ig + hg); ++j)
      for (Eigen::Index i = it; i < std::min(t, it + ht); ++i) {
        if (!hit(i, j)) {
          hit(i, j) = 1;
          ++covered;
          // low-SNR gates return garbage, not attenuated signal
          f.intensity(i, j) = 0.004 * rng.next_double();
          f.velocity(i, j) = rng.next_uniform(-8.0, 8.0);
        }
      }
  }
}

}  // namespace

TimeHeightField generate_synthetic(const SyntheticSpec& spec,
                                   std::uint64_t seed) {
  if (spec.time_count <= 0 || spec.gate_count <= 0)
    throw ParameterError("generate_synthetic: dimensions must be positive");
  if (spec.time_step_s <= 0 || spec.gate_spacing_m <= 0)
    throw ParameterError("generate_synthetic: sampling metadata must be positive");
  if (spec.dropout_fraction < 0 || spec.dropout_fraction >= 1)
    throw ParameterError("generate_synthetic: dropout_fraction outside [0, 1)");
  if (spec.noise_sigma < 0)
    throw ParameterError("generate_synthetic: noise_sigma must be >= 0");

  TimeHeightField f;
  f.time_step_s = spec.time_step_s;
  f.gate_spacing_m = spec.gate_spacing_m;
  f.velocity = Matrix::Zero(spec.time_count, spec.gate_count);
  f.intensity.resize(spec.time_count, spec.gate_count);

  Rng template_rng(mix64(seed, kTemplate));
  add_background(f.velocity, spec, template_rng);
  add_blobs(f.velocity, spec, template_rng);
  add_shear_bands(f.velocity, spec, template_rng);
  for (Eigen::Index j = 0; j < f.gate_count(); ++j)
    for (Eigen::Index i = 0; i < f.time_count(); ++i)
      f.intensity(i, j) = template_rng.next_uniform(0.5, 1.0);

  if (spec.noise_sigma > 0) {
    Rng noise_rng(mix64(seed, kNoise));
    for (Eigen::Index j = 0; j < f.gate_count(); ++j)
      for (Eigen::Index i = 0; i < f.time_count(); ++i)
        f.velocity(i, j) += spec.noise_sigma * noise_rng.next_normal();
  }

  Rng dropout_rng(mix64(seed, kDropout));
  apply_dropout(f, spec, dropout_rng);

  return f;
}

}  // namespace cumolos
