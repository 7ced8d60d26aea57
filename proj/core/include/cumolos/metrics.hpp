#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "cumolos/field.hpp"

namespace cumolos {

// ---- image-quality metrics --------------------------------------------------

double mse(const Matrix& reference, const Matrix& test);

/// 10*log10(range^2 / mse); identical inputs return +infinity.
double psnr(const Matrix& reference, const Matrix& test, double data_range);

/// Mean local SSIM over fully-interior windows, Gaussian-weighted
/// (default 7x7, sigma 1.5), c1=(0.01 r)^2, c2=(0.03 r)^2.
double ssim(const Matrix& reference, const Matrix& test, double data_range,
            int window = 7, double gaussian_sigma = 1.5);

// ---- FID ---------------------------------------------------------------------

using FeatureExtractor = std::function<Vector(const Matrix& patch)>;

/// Frozen random two-layer convolutional feature map ("fid-rand-v1"): fixed
/// seed, tanh nonlinearities, stride-2 3x3 kernels, per-channel global mean
/// and standard-deviation pooling. Deterministic across runs; FID values are
/// comparable only within this artifact.
FeatureExtractor make_rand_conv_extractor(int channels_1 = 8,
                                          int channels_2 = 16);

/// Frechet distance between Gaussians fit (population moments) to extracted
/// features of the two sets.
double fid(const std::vector<Matrix>& set_a, const std::vector<Matrix>& set_b,
           const FeatureExtractor& extractor);

double frechet_distance(const Vector& mu_a, const Matrix& cov_a,
                        const Vector& mu_b, const Matrix& cov_b);

// ---- spectral fidelity -------------------------------------------------------

struct WelchParams {
  Eigen::Index segment = 256;  // capped at the series length
  double overlap = 0.5;
};

struct Psd {
  std::vector<double> freqs;  // Hz, from 0
  std::vector<double> power;  // per-bin power; bins sum to ~signal variance
};

/// Welch estimate with a periodic Hann window; one-sided, scaled so the bin
/// sum matches the windowed signal's mean power.
Psd welch_psd(const std::vector<double>& series, double time_step_s,
              const WelchParams& params = {});

struct PsdPair {
  std::vector<double> freqs;
  std::vector<double> p_raw, p_den;
  Eigen::Index gate_index = 0;
};

struct SpectralResult {
  double fidelity = 0.0;  // pooled over gates
  std::vector<PsdPair> per_gate;
  std::vector<double> per_gate_fidelity;
  Eigen::Index included_bins = 0;
  Eigen::Index excluded_bins = 0;  // |log10 p_raw| < guard
};

/// Log-PSD relative error per low-frequency bin, pooled across gates:
/// fidelity = fraction of bins with |eps_log| <= tol for f <= f_cut_hz.
/// Bins where |log10 p_raw| < 1e-6 are excluded (the ratio is singular
/// there) and counted in excluded_bins.
SpectralResult spectral_fidelity(const Matrix& raw, const Matrix& denoised,
                                 double time_step_s, double f_cut_hz = 0.01,
                                 double tol = 0.5,
                                 const std::vector<Eigen::Index>& gates = {},
                                 const WelchParams& params = {});

SpectralResult spectral_fidelity(const TimeHeightField& raw,
                                 const TimeHeightField& denoised,
                                 double f_cut_hz = 0.01, double tol = 0.5,
                                 const std::vector<Eigen::Index>& gates = {},
                                 const WelchParams& params = {});

/// Bin evaluation only, reusable against stubbed PSD pairs.
SpectralResult fidelity_from_pairs(const std::vector<PsdPair>& pairs,
                                   double f_cut_hz, double tol);

// ---- uncertainty calibration ---------------------------------------------------

struct CalibrationReport {
  double per_patch_pearson_mean = 0.0;
  double per_patch_pearson_std = 0.0;
  int excluded_patches = 0;  // undefined per-patch correlations
  double global_pearson = 0.0;
  double global_spearman = 0.0;
  bool degenerate = false;  // a global stack had zero variance
  std::array<double, 10> decile_mae{};
  std::map<int, double> topk_capture;  // percent -> share of total |error|
};

/// errors[i] and sigmas[i] are the |mean - truth| and sigma maps of patch i.
CalibrationReport uncertainty_diagnostics(const std::vector<Matrix>& errors,
                                          const std::vector<Matrix>& sigmas);

// ---- report ---------------------------------------------------------------------

struct MetricsReport {
  std::string method;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  double fid = 0.0;
  double spectral_fidelity = 0.0;

  bool has_calibration = false;
  CalibrationReport calibration;

  // conventions the numbers depend on, reported alongside them
  double data_range = 10.0;
  double f_cut_hz = 0.01;
  double tol = 0.5;
  Eigen::Index psd_segment = 256;
  Eigen::Index spectral_included_bins = 0;
  Eigen::Index spectral_excluded_bins = 0;
};

/// Flat key-value text file, one "key = value" per line.
void write_keyvalue(const MetricsReport& report,
                    const std::filesystem::path& path);

/// CSV in Table-1 column order:
/// method,psnr_db,ssim,mse,fid,spectral_fidelity
void write_table_csv(const std::vector<MetricsReport>& rows,
                     const std::filesystem::path& path);

}  // namespace cumolos
