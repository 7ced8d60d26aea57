#include "cumolos/metrics.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "cumolos/errors.hpp"
#include "cumolos/rng.hpp"

namespace cumolos {

namespace {

constexpr double kLogGuard = 1e-6;

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(who) + ": shapes differ");
}

// Population Pearson correlation; returns false when either side has zero
// variance.
bool pearson(const double* x, const double* y, std::size_t n, double* out) {
  if (n < 2) return false;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / double(n), my = sy / double(n);
  double vxx = 0, vyy = 0, vxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    vxx += dx * dx;
    vyy += dy * dy;
    vxy += dx * dy;
  }
  if (vxx <= 0 || vyy <= 0) return false;
  *out = vxy / std::sqrt(vxx * vyy);
  return true;
}

// Average-rank transform (ties share the mean of their rank range).
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * (double(i) + double(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Vector gaussian_kernel(int window, double sigma) {
  Vector g(window);
  const int rad = window / 2;
  double sum = 0;
  for (int u = 0; u < window; ++u) {
    const double d = double(u - rad);
    g(u) = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += g(u);
  }
  return g / sum;
}

// Separable weighted local mean; results are only meaningful at positions
// whose window lies fully inside the image.
Matrix local_weighted(const Matrix& x, const Vector& g) {
  const int rad = static_cast<int>(g.size()) / 2;
  const Eigen::Index h = x.rows(), w = x.cols();
  Matrix tmp = Matrix::Zero(h, w);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = rad; j < w - rad; ++j) {
      double s = 0;
      for (int u = -rad; u <= rad; ++u) s += g(u + rad) * x(i, j + u);
      tmp(i, j) = s;
    }
  Matrix out = Matrix::Zero(h, w);
  for (Eigen::Index i = rad; i < h - rad; ++i)
    for (Eigen::Index j = rad; j < w - rad; ++j) {
      double s = 0;
      for (int u = -rad; u <= rad; ++u) s += g(u + rad) * tmp(i + u, j);
      out(i, j) = s;
    }
  return out;
}

std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

double mse(const Matrix& reference, const Matrix& test) {
  require_same_shape(reference, test, "mse");
  return (reference - test).array().square().mean();
}

double psnr(const Matrix& reference, const Matrix& test, double data_range) {
  if (data_range <= 0) throw ParameterError("psnr: data_range must be > 0");
  const double e = mse(reference, test);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / e);
}

double ssim(const Matrix& reference, const Matrix& test, double data_range,
            int window, double gaussian_sigma) {
  require_same_shape(reference, test, "ssim");
  if (window % 2 == 0 || window < 3)
    throw ParameterError("ssim: window must be odd and >= 3");
  if (window > reference.rows() || window > reference.cols())
    throw ShapeError("ssim: window larger than image");
  if (data_range <= 0) throw ParameterError("ssim: data_range must be > 0");

  const Vector g = gaussian_kernel(window, gaussian_sigma);
  const int rad = window / 2;
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);

  const Matrix mu_x = local_weighted(reference, g);
  const Matrix mu_y = local_weighted(test, g);
  const Matrix xx = local_weighted(reference.cwiseProduct(reference), g);
  const Matrix yy = local_weighted(test.cwiseProduct(test), g);
  const Matrix xy = local_weighted(reference.cwiseProduct(test), g);

  double sum = 0;
  std::size_t count = 0;
  for (Eigen::Index i = rad; i < reference.rows() - rad; ++i)
    for (Eigen::Index j = rad; j < reference.cols() - rad; ++j) {
      const double mx = mu_x(i, j), my = mu_y(i, j);
      const double vx = xx(i, j) - mx * mx;
      const double vy = yy(i, j) - my * my;
      const double cxy = xy(i, j) - mx * my;
      const double val = ((2 * mx * my + c1) * (2 * cxy + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
      sum += val;
      ++count;
    }
  return sum / double(count);
}

// ---- FID ---------------------------------------------------------------------

namespace {

struct ConvLayer {
  // weights[out][in] is a 3x3 kernel
  std::vector<std::vector<Matrix>> weights;
};

Matrix conv3x3_stride2(const std::vector<Matrix>& in,
                       const std::vector<Matrix>& kernels) {
  const Eigen::Index h = in[0].rows(), w = in[0].cols();
  const Eigen::Index oh = (h + 1) / 2, ow = (w + 1) / 2;
  Matrix out = Matrix::Zero(oh, ow);
  for (std::size_t c = 0; c < in.size(); ++c) {
    const Matrix& x = in[c];
    const Matrix& k = kernels[c];
    for (Eigen::Index oi = 0; oi < oh; ++oi)
      for (Eigen::Index oj = 0; oj < ow; ++oj) {
        double s = 0;
        for (int u = -1; u <= 1; ++u)
          for (int v = -1; v <= 1; ++v) {
            const Eigen::Index ii = 2 * oi + u, jj = 2 * oj + v;
            if (ii >= 0 && ii < h && jj >= 0 && jj < w)
              s += k(u + 1, v + 1) * x(ii, jj);
          }
        out(oi, oj) += s;
      }
  }
  return out;
}

}  // namespace

FeatureExtractor make_rand_conv_extractor(int channels_1, int channels_2) {
  if (channels_1 < 1 || channels_2 < 1)
    throw ParameterError("fid extractor: channel counts must be positive");

  // "fid-rand-v1": weights frozen under a fixed seed
  auto layer1 = std::make_shared<ConvLayer>();
  auto layer2 = std::make_shared<ConvLayer>();
  Rng rng(mix64(0xF1DFEA700001ull));
  const double s1 = 1.0 / 3.0;  // 1/sqrt(fan_in), fan_in = 9
  layer1->weights.resize(static_cast<std::size_t>(channels_1));
  for (auto& per_out : layer1->weights) {
    per_out.resize(1);
    per_out[0].resize(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        per_out[0](i, j) = s1 * rng.next_normal();
  }
  const double s2 = 1.0 / std::sqrt(9.0 * channels_1);
  layer2->weights.resize(static_cast<std::size_t>(channels_2));
  for (auto& per_out : layer2->weights) {
    per_out.resize(static_cast<std::size_t>(channels_1));
    for (auto& k : per_out) {
      k.resize(3, 3);
      for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) k(i, j) = s2 * rng.next_normal();
    }
  }

  return [layer1, layer2, channels_1, channels_2](const Matrix& patch) {
    std::vector<Matrix> a(1, patch);
    std::vector<Matrix> h1;
    h1.reserve(layer1->weights.size());
    for (const auto& per_out : layer1->weights)
      h1.push_back(conv3x3_stride2(a, per_out)
                       .unaryExpr([](double v) { return std::tanh(v); }));
    std::vector<Matrix> h2;
    h2.reserve(layer2->weights.size());
    for (const auto& per_out : layer2->weights)
      h2.push_back(conv3x3_stride2(h1, per_out)
                       .unaryExpr([](double v) { return std::tanh(v); }));

    Vector features(2 * channels_2);
    for (int c = 0; c < channels_2; ++c) {
      const Matrix& m = h2[static_cast<std::size_t>(c)];
      const double mean = m.mean();
      const double var = (m.array() - mean).square().mean();
      features(2 * c) = mean;
      features(2 * c + 1) = std::sqrt(var);
    }
    return features;
  };
}

namespace {

void feature_stats(const std::vector<Matrix>& set,
                   const FeatureExtractor& extractor, Vector& mu,
                   Matrix& cov) {
  if (set.empty()) throw ParameterError("fid: empty patch set");
  std::vector<Vector> feats;
  feats.reserve(set.size());
  for (const auto& p : set) feats.push_back(extractor(p));
  const Eigen::Index d = feats.front().size();
  const double n = double(feats.size());

  mu = Vector::Zero(d);
  for (const auto& f : feats) mu += f;
  mu /= n;
  cov = Matrix::Zero(d, d);
  for (const auto& f : feats) {
    const Vector c = f - mu;
    cov.noalias() += c * c.transpose();
  }
  cov /= n;  // population covariance
  if (!mu.allFinite() || !cov.allFinite())
    throw NumericError("fid: feature statistics are not finite");
}

Matrix psd_sqrt(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sym + sym.transpose()));
  Vector lam = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lam.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Vector& mu_a, const Matrix& cov_a,
                        const Vector& mu_b, const Matrix& cov_b) {
  const Matrix a_half = psd_sqrt(cov_a);
  const Matrix inner = a_half * cov_b * a_half;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(
      0.5 * (inner + inner.transpose()));
  const double tr_sqrt =
      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d2 = (mu_a - mu_b).squaredNorm() + cov_a.trace() +
                    cov_b.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, d2);
}

double fid(const std::vector<Matrix>& set_a, const std::vector<Matrix>& set_b,
           const FeatureExtractor& extractor) {
  Vector mu_a, mu_b;
  Matrix cov_a, cov_b;
  feature_stats(set_a, extractor, mu_a, cov_a);
  feature_stats(set_b, extractor, mu_b, cov_b);
  return frechet_distance(mu_a, cov_a, mu_b, cov_b);
}

// ---- Welch / spectral fidelity -------------------------------------------------

Psd welch_psd(const std::vector<double>& series, double time_step_s,
              const WelchParams& params) {
  if (time_step_s <= 0) throw MetadataError("welch: time_step_s must be > 0");
  const auto n = static_cast<Eigen::Index>(series.size());
  if (n < 2) throw ParameterError("welch: series too short");
  if (!(params.overlap >= 0 && params.overlap < 1))
    throw ParameterError("welch: overlap outside [0, 1)");

  const Eigen::Index m = std::min<Eigen::Index>(
      params.segment > 0 ? params.segment : n, n);
  if (m < 2) throw ParameterError("welch: segment too short");
  const auto step = std::max<Eigen::Index>(
      1, m - static_cast<Eigen::Index>(std::llround(params.overlap *
                                                    double(m))));

  // periodic Hann
  std::vector<double> window(static_cast<std::size_t>(m));
  double wsum2 = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * double(i) / double(m)));
    window[static_cast<std::size_t>(i)] = w;
    wsum2 += w * w;
  }

  const Eigen::Index n_bins = m / 2 + 1;
  std::vector<double> acc(static_cast<std::size_t>(n_bins), 0.0);

  std::vector<double> buf(static_cast<std::size_t>(m));
  std::vector<fftw_complex> out(static_cast<std::size_t>(n_bins));
  fftw_plan plan;
  {
    std::scoped_lock lock(fftw_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), buf.data(), out.data(),
                                FFTW_ESTIMATE);
  }
  if (!plan) throw NumericError("welch: FFT planning failed");

  Eigen::Index segments = 0;
  for (Eigen::Index start = 0; start + m <= n; start += step) {
    for (Eigen::Index i = 0; i < m; ++i)
      buf[static_cast<std::size_t>(i)] =
          series[static_cast<std::size_t>(start + i)] *
          window[static_cast<std::size_t>(i)];
    fftw_execute(plan);
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      const double re = out[static_cast<std::size_t>(k)][0];
      const double im = out[static_cast<std::size_t>(k)][1];
      acc[static_cast<std::size_t>(k)] += re * re + im * im;
    }
    ++segments;
  }
  {
    std::scoped_lock lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  if (segments == 0) throw ParameterError("welch: no full segments");

  Psd psd;
  psd.freqs.resize(static_cast<std::size_t>(n_bins));
  psd.power.resize(static_cast<std::size_t>(n_bins));
  const double norm = double(segments) * double(m) * wsum2;
  for (Eigen::Index k = 0; k < n_bins; ++k) {
    const bool half = (k == 0) || (m % 2 == 0 && k == n_bins - 1);
    const double c = half ? 1.0 : 2.0;
    psd.freqs[static_cast<std::size_t>(k)] =
        double(k) / (double(m) * time_step_s);
    psd.power[static_cast<std::size_t>(k)] =
        c * acc[static_cast<std::size_t>(k)] / norm;
  }
  return psd;
}

SpectralResult fidelity_from_pairs(const std::vector<PsdPair>& pairs,
                                   double f_cut_hz, double tol) {
  SpectralResult result;
  result.per_gate = pairs;
  Eigen::Index pass_total = 0;
  for (const auto& pair : pairs) {
    Eigen::Index included = 0, pass = 0;
    for (std::size_t k = 0; k < pair.freqs.size(); ++k) {
      if (pair.freqs[k] > f_cut_hz) break;
      const double p_raw = pair.p_raw[k];
      const double p_den = pair.p_den[k];
      if (p_raw == p_den) {  // eps_log = 0 identically
        ++included;
        ++pass;
        continue;
      }
      if (p_raw <= 0 || p_den <= 0) {  // log-ratio diverges
        ++included;
        continue;
      }
      const double log_raw = std::log10(p_raw);
      if (std::abs(log_raw) < kLogGuard) {  // denominator singular
        ++result.excluded_bins;
        continue;
      }
      const double eps = (std::log10(p_den) - log_raw) / log_raw;
      ++included;
      if (std::abs(eps) <= tol) ++pass;
    }
    result.included_bins += included;
    pass_total += pass;
    result.per_gate_fidelity.push_back(
        included > 0 ? double(pass) / double(included)
                     : std::numeric_limits<double>::quiet_NaN());
  }
  if (result.included_bins == 0)
    throw ParameterError("spectral_fidelity: no usable low-frequency bins");
  result.fidelity = double(pass_total) / double(result.included_bins);
  return result;
}

SpectralResult spectral_fidelity(const Matrix& raw, const Matrix& denoised,
                                 double time_step_s, double f_cut_hz,
                                 double tol,
                                 const std::vector<Eigen::Index>& gates,
                                 const WelchParams& params) {
  require_same_shape(raw, denoised, "spectral_fidelity");
  if (time_step_s <= 0)
    throw MetadataError("spectral_fidelity: time_step_s unknown");
  const Eigen::Index t = raw.rows();
  const Eigen::Index m = std::min<Eigen::Index>(
      params.segment > 0 ? params.segment : t, t);
  if (m < 2) throw ParameterError("spectral_fidelity: series too short");
  const double first_bin = 1.0 / (double(m) * time_step_s);
  if (f_cut_hz < first_bin)
    throw ParameterError(
        "spectral_fidelity: f_cut below the first nonzero frequency bin");

  std::vector<Eigen::Index> use = gates;
  if (use.empty()) {
    use.resize(static_cast<std::size_t>(raw.cols()));
    std::iota(use.begin(), use.end(), Eigen::Index{0});
  }

  std::vector<PsdPair> pairs;
  pairs.reserve(use.size());
  for (Eigen::Index gate : use) {
    if (gate < 0 || gate >= raw.cols())
      throw ParameterError("spectral_fidelity: gate index out of range");
    std::vector<double> sr(static_cast<std::size_t>(t)),
        sd(static_cast<std::size_t>(t));
    for (Eigen::Index i = 0; i < t; ++i) {
      sr[static_cast<std::size_t>(i)] = raw(i, gate);
      sd[static_cast<std::size_t>(i)] = denoised(i, gate);
    }
    const Psd praw = welch_psd(sr, time_step_s, params);
    const Psd pden = welch_psd(sd, time_step_s, params);
    PsdPair pair;
    pair.gate_index = gate;
    pair.freqs = praw.freqs;
    pair.p_raw = praw.power;
    pair.p_den = pden.power;
    pairs.push_back(std::move(pair));
  }
  return fidelity_from_pairs(pairs, f_cut_hz, tol);
}

SpectralResult spectral_fidelity(const TimeHeightField& raw,
                                 const TimeHeightField& denoised,
                                 double f_cut_hz, double tol,
                                 const std::vector<Eigen::Index>& gates,
                                 const WelchParams& params) {
  if (raw.time_step_s <= 0)
    throw MetadataError("spectral_fidelity: field lacks time_step_s");
  return spectral_fidelity(raw.velocity, denoised.velocity, raw.time_step_s,
                           f_cut_hz, tol, gates, params);
}

// ---- uncertainty calibration ----------------------------------------------------

CalibrationReport uncertainty_diagnostics(const std::vector<Matrix>& errors,
                                          const std::vector<Matrix>& sigmas) {
  if (errors.size() != sigmas.size())
    throw AlignmentError("uncertainty_diagnostics: stack lengths differ");
  if (errors.empty())
    throw ParameterError("uncertainty_diagnostics: empty stacks");

  CalibrationReport report;

  // per-patch Pearson
  std::vector<double> per_patch;
  for (std::size_t p = 0; p < errors.size(); ++p) {
    require_same_shape(errors[p], sigmas[p], "uncertainty_diagnostics");
    double r = 0;
    if (pearson(errors[p].data(), sigmas[p].data(),
                static_cast<std::size_t>(errors[p].size()), &r))
      per_patch.push_back(r);
    else
      ++report.excluded_patches;
  }
  if (!per_patch.empty()) {
    double s = 0;
    for (double r : per_patch) s += r;
    report.per_patch_pearson_mean = s / double(per_patch.size());
    double v = 0;
    for (double r : per_patch) {
      const double d = r - report.per_patch_pearson_mean;
      v += d * d;
    }
    report.per_patch_pearson_std = std::sqrt(v / double(per_patch.size()));
  }

  // flatten (patch-major, column-major within a patch: stable pixel order)
  std::vector<double> err, sig;
  for (std::size_t p = 0; p < errors.size(); ++p) {
    err.insert(err.end(), errors[p].data(),
               errors[p].data() + errors[p].size());
    sig.insert(sig.end(), sigmas[p].data(),
               sigmas[p].data() + sigmas[p].size());
  }
  const std::size_t n = err.size();

  if (!pearson(err.data(), sig.data(), n, &report.global_pearson)) {
    report.global_pearson = 0;
    report.degenerate = true;
  }
  const std::vector<double> err_ranks = average_ranks(err);
  const std::vector<double> sig_ranks = average_ranks(sig);
  if (!pearson(err_ranks.data(), sig_ranks.data(), n,
               &report.global_spearman)) {
    report.global_spearman = 0;
    report.degenerate = true;
  }

  // sigma deciles (ties broken by pixel index via stable sort)
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sig[a] < sig[b]; });
  std::size_t offset = 0;
  for (int bin = 0; bin < 10; ++bin) {
    const std::size_t size = n / 10 + (static_cast<std::size_t>(bin) < n % 10);
    double s = 0;
    for (std::size_t k = 0; k < size; ++k) s += err[order[offset + k]];
    report.decile_mae[static_cast<std::size_t>(bin)] =
        size > 0 ? s / double(size) : 0.0;
    offset += size;
  }

  // top-k% capture of total |error| by sigma ranking
  double total = 0;
  for (double e : err) total += e;
  if (total <= 0) report.degenerate = true;
  for (int k : {1, 5, 10, 20}) {
    const std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(double(k) / 100.0 *
                                                 double(n))));
    double s = 0;
    for (std::size_t i = 0; i < count; ++i)
      s += err[order[n - 1 - i]];  // descending sigma
    report.topk_capture[k] = total > 0 ? s / total : 0.0;
  }
  return report;
}

// ---- report writers ---------------------------------------------------------------

namespace {

void print_double(std::FILE* f, const char* key, double v) {
  if (std::isinf(v))
    std::fprintf(f, "%s = %sinf\n", key, v < 0 ? "-" : "");
  else
    std::fprintf(f, "%s = %.9g\n", key, v);
}

void csv_double(std::FILE* f, double v, char sep) {
  if (std::isinf(v))
    std::fprintf(f, "%sinf%c", v < 0 ? "-" : "", sep);
  else
    std::fprintf(f, "%.9g%c", v, sep);
}

}  // namespace

void write_keyvalue(const MetricsReport& r, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("metrics: cannot open " + path.string());
  std::fprintf(f, "method = %s\n", r.method.c_str());
  print_double(f, "psnr_db", r.psnr_db);
  print_double(f, "ssim", r.ssim);
  print_double(f, "mse", r.mse);
  print_double(f, "fid", r.fid);
  print_double(f, "spectral_fidelity", r.spectral_fidelity);
  print_double(f, "data_range", r.data_range);
  print_double(f, "f_cut_hz", r.f_cut_hz);
  print_double(f, "tol", r.tol);
  std::fprintf(f, "psd_segment = %lld\n",
               static_cast<long long>(r.psd_segment));
  std::fprintf(f, "spectral_included_bins = %lld\n",
               static_cast<long long>(r.spectral_included_bins));
  std::fprintf(f, "spectral_excluded_bins = %lld\n",
               static_cast<long long>(r.spectral_excluded_bins));
  if (r.has_calibration) {
    const auto& c = r.calibration;
    print_double(f, "pearson_per_patch_mean", c.per_patch_pearson_mean);
    print_double(f, "pearson_per_patch_std", c.per_patch_pearson_std);
    std::fprintf(f, "pearson_excluded_patches = %d\n", c.excluded_patches);
    print_double(f, "pearson_global", c.global_pearson);
    print_double(f, "spearman_global", c.global_spearman);
    std::fprintf(f, "calibration_degenerate = %d\n", c.degenerate ? 1 : 0);
    for (int i = 0; i < 10; ++i) {
      char key[32];
      std::snprintf(key, sizeof key, "decile_mae_%d", i);
      print_double(f, key, c.decile_mae[static_cast<std::size_t>(i)]);
    }
    for (const auto& [k, v] : c.topk_capture) {
      char key[32];
      std::snprintf(key, sizeof key, "topk_capture_%d", k);
      print_double(f, key, v);
    }
  }
  std::fclose(f);
}

void write_table_csv(const std::vector<MetricsReport>& rows,
                     const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("metrics: cannot open " + path.string());
  std::fputs("method,psnr_db,ssim,mse,fid,spectral_fidelity\n", f);
  for (const auto& r : rows) {
    std::fprintf(f, "%s,", r.method.c_str());
    csv_double(f, r.psnr_db, ',');
    csv_double(f, r.ssim, ',');
    csv_double(f, r.mse, ',');
    csv_double(f, r.fid, ',');
    csv_double(f, r.spectral_fidelity, '\n');
  }
  std::fclose(f);
}

}  // namespace cumolos
