#include "cumolos/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cumolos/baselines.hpp"
#include "cumolos/checkpoint.hpp"
#include "cumolos/config.hpp"
#include "cumolos/errors.hpp"
#include "cumolos/field_io.hpp"
#include "cumolos/inference.hpp"
#include "cumolos/metrics.hpp"
#include "cumolos/render.hpp"
#include "cumolos/synthetic.hpp"
#include "json_codec.hpp"

namespace fs = std::filesystem;

namespace cumolos::cli {

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::string run_name;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
};

PipelineConfig resolve_config(const GlobalOptions& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) {
    cfg.synthetic.spec.seed = *g.seed;
    cfg.training.seed = *g.seed;
    cfg.inference.base_seed = *g.seed;
  }
  return cfg;
}

fs::path make_run_dir(const PipelineConfig& cfg, const GlobalOptions& g,
                      const std::string& command) {
  fs::path base = cfg.paths.output_dir;
  if (!g.out_dir.empty()) base = g.out_dir;
  if (const char* env = std::getenv("CUMOLOS_OUT"); env && *env) base = env;

  std::string name = g.run_name;
  if (name.empty()) {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    name = command + "-" + stamp;
  }

  fs::path dir = base / name;
  for (int k = 2; fs::exists(dir); ++k)  // never mutate prior outputs
    dir = base / (name + "-" + std::to_string(k));
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string());
  os << text;
}

// ---- shared data loading -----------------------------------------------------

struct LoadedFile {
  std::string path;
  TimeHeightField field;  // preprocessed
  std::vector<PatchSample> patches;
};

struct LoadedSet {
  std::vector<LoadedFile> files;
  std::vector<const PatchSample*> all;  // concatenated view
};

LoadedSet load_set(const std::vector<std::string>& paths,
                   const FieldIoConfig& fio) {
  LoadedSet set;
  for (const auto& p : paths) {
    LoadedFile lf;
    lf.path = p;
    const TimeHeightField raw = load_field(p, fio.variables);
    lf.field = preprocess(raw, fio.snr_threshold, fio.clamp_lo, fio.clamp_hi);
    lf.patches = extract_patches(lf.field, fio.window_t, fio.window_g,
                                 fio.gate_limit);
    set.files.push_back(std::move(lf));
  }
  for (const auto& f : set.files)
    for (const auto& patch : f.patches) set.all.push_back(&patch);
  return set;
}

// ---- synth --------------------------------------------------------------------

int cmd_synth(const PipelineConfig& cfg, const GlobalOptions& g) {
  const fs::path dir = make_run_dir(cfg, g, "synth");
  const SynthConfig& sc = cfg.synthetic;

  SyntheticSpec clean = sc.spec;
  clean.noise_sigma = 0.0;
  clean.dropout_fraction = 0.0;

  std::vector<std::string> written;
  for (int i = 0; i < sc.count; ++i) {
    const std::uint64_t seed = sc.spec.seed + static_cast<std::uint64_t>(i);
    const TimeHeightField field = generate_synthetic(sc.spec, seed);
    char name[64];
    std::snprintf(name, sizeof name, "field_%03d", i);
    if (sc.format == "cmls" || sc.format == "both") {
      save_field_cmls(field, dir / (std::string(name) + ".cmls"));
      written.push_back(std::string(name) + ".cmls");
    }
    if (sc.format == "h5" || sc.format == "both") {
      save_field_hdf5(field, dir / (std::string(name) + ".h5"),
                      cfg.field_io.variables);
      written.push_back(std::string(name) + ".h5");
    }
    if (sc.with_truth) {
      const TimeHeightField truth = generate_synthetic(clean, seed);
      if (sc.format == "cmls" || sc.format == "both") {
        save_field_cmls(truth, dir / (std::string(name) + ".truth.cmls"));
        written.push_back(std::string(name) + ".truth.cmls");
      }
      if (sc.format == "h5" || sc.format == "both") {
        save_field_hdf5(truth, dir / (std::string(name) + ".truth.h5"),
                        cfg.field_io.variables);
        written.push_back(std::string(name) + ".truth.h5");
      }
    }
  }
  write_text(dir / "config.json", print_config(cfg));
  for (const auto& w : written) std::cout << (dir / w).string() << "\n";
  return 0;
}

// ---- train ----------------------------------------------------------------------

int cmd_train(const PipelineConfig& cfg, const GlobalOptions& g,
              const std::string& resume_path) {
  if (cfg.paths.train_files.empty())
    throw ConfigError("train: paths.train_files is empty");
  const fs::path dir = make_run_dir(cfg, g, "train");

  const LoadedSet set = load_set(cfg.paths.train_files, cfg.field_io);
  std::vector<PatchSample> dataset;
  dataset.reserve(set.all.size());
  for (const auto* p : set.all) dataset.push_back(*p);
  std::cout << "loaded " << dataset.size() << " patches from "
            << set.files.size() << " file(s)\n";

  ResumeState resume;
  const ResumeState* resume_ptr = nullptr;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (codec::to_json(ckpt.model) != codec::to_json(cfg.model))
      throw StateError("train: checkpoint model config differs from config");
    resume.params = std::move(ckpt.params);
    resume.adam_m = std::move(ckpt.adam_m);
    resume.adam_v = std::move(ckpt.adam_v);
    resume.adam_t = ckpt.adam_t;
    resume.epoch = ckpt.epoch;
    resume_ptr = &resume;
  }

  auto save = [&](const MaeParams& params, const std::vector<double>& m,
                  const std::vector<double>& v, std::int64_t t, int epoch,
                  const fs::path& path) {
    Checkpoint ckpt;
    ckpt.model = cfg.model;
    ckpt.curriculum = cfg.curriculum;
    ckpt.training = cfg.training;
    ckpt.norm_constant = kClampBound;
    ckpt.epoch = epoch;
    ckpt.params = params;
    ckpt.adam_m = m;
    ckpt.adam_v = v;
    ckpt.adam_t = t;
    save_checkpoint(ckpt, path);
  };

  EpochCallback on_epoch = [&](const TrainSnapshot& snap) {
    std::printf("epoch %d  mask_ratio %.4f  lr %.6g  loss %.6g\n",
                snap.entry.epoch, snap.entry.mask_ratio, snap.entry.lr,
                snap.entry.mean_loss);
    std::fflush(stdout);
    if (cfg.training.checkpoint_every > 0 &&
        snap.epochs_completed % cfg.training.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch_%04d.bin",
                    snap.entry.epoch);
      save(*snap.params, *snap.adam_m, *snap.adam_v, snap.adam_t,
           snap.epochs_completed, dir / name);
    }
  };

  const TrainResult result = train(dataset, cfg.model, cfg.training,
                                   cfg.curriculum, resume_ptr, on_epoch);

  save(result.params, result.adam_m, result.adam_v, result.adam_t,
       result.epochs_completed, dir / "checkpoint.bin");
  result.log.write_csv(dir / "train_log.csv");

  codec::json thresholds = codec::json::object();
  for (const auto& [thr, epoch] : result.log.threshold_epochs) {
    char key[32];
    std::snprintf(key, sizeof key, "%.6g", thr);
    thresholds[key] = epoch;
  }
  write_text(dir / "thresholds.json", thresholds.dump(2) + "\n");
  write_text(dir / "config.json", print_config(cfg));
  std::cout << "checkpoint: " << (dir / "checkpoint.bin").string() << "\n";
  std::cout << "log: " << (dir / "train_log.csv").string() << "\n";
  return 0;
}

// ---- infer ---------------------------------------------------------------------

int cmd_infer(const PipelineConfig& cfg, const GlobalOptions& g,
              const std::string& checkpoint_path) {
  if (checkpoint_path.empty())
    throw ConfigError("infer: --checkpoint is required");
  if (cfg.paths.test_files.empty())
    throw ConfigError("infer: paths.test_files is empty");

  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (codec::to_json(ckpt.model) != codec::to_json(cfg.model))
    throw StateError(
        "infer: checkpoint model config differs from the config file");

  const fs::path dir = make_run_dir(cfg, g, "infer");
  const LoadedSet set = load_set(cfg.paths.test_files, cfg.field_io);

  InferenceOptions options;
  options.composition = composition_from_string(cfg.inference.composition);
  options.clamp_outputs = cfg.inference.clamp_outputs;
  options.norm_constant = ckpt.norm_constant;
  options.mask_ratio = ckpt.curriculum.r_end;

  codec::json manifest;
  manifest["n_members"] = cfg.inference.n_members;
  manifest["base_seed"] = cfg.inference.base_seed;
  manifest["composition"] = cfg.inference.composition;
  manifest["clamp_outputs"] = cfg.inference.clamp_outputs;
  manifest["norm_constant"] = ckpt.norm_constant;
  manifest["mask_ratio"] = options.mask_ratio;
  manifest["patches"] = codec::json::array();

  std::size_t index = 0;
  for (const auto& file : set.files) {
    for (const auto& patch : file.patches) {
      const std::uint64_t patch_base =
          cfg.inference.base_seed +
          static_cast<std::uint64_t>(index) *
              static_cast<std::uint64_t>(cfg.inference.n_members);
      const EnsembleResult result = ensemble(
          patch, ckpt.params, cfg.inference.n_members, patch_base, options);

      char name[64];
      std::snprintf(name, sizeof name, "patch_%04zu.cmls", index);
      save_array_pair_cmls(result.mean, result.sigma, file.field.time_step_s,
                           file.field.gate_spacing_m, dir / name);

      codec::json entry;
      entry["index"] = index;
      entry["source"] = fs::path(file.path).filename().string();
      entry["t_origin"] = patch.t_origin;
      entry["g_origin"] = patch.g_origin;
      entry["seeds"] = result.member_seeds;
      manifest["patches"].push_back(entry);
      ++index;
    }
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "config.json", print_config(cfg));
  std::cout << "wrote " << index << " ensemble record(s) to " << dir.string()
            << "\n";
  return 0;
}

// ---- evaluate ------------------------------------------------------------------

struct Reconstruction {
  std::string method;
  std::vector<Matrix> patches;  // physical units
  std::vector<Matrix> sigmas;   // empty unless the method provides them
};

int cmd_evaluate(const PipelineConfig& cfg, const GlobalOptions& g,
                 const std::string& infer_dir, bool with_oracle) {
  if (cfg.paths.test_files.empty())
    throw ConfigError("evaluate: paths.test_files is empty");
  const fs::path dir = make_run_dir(cfg, g, "evaluate");

  const LoadedSet test = load_set(cfg.paths.test_files, cfg.field_io);
  const std::size_t n_patches = test.all.size();

  // truth patches in physical units; defaults to the preprocessed raw signal
  std::vector<Matrix> truth;
  std::optional<LoadedSet> truth_set;
  if (!cfg.paths.truth_files.empty()) {
    truth_set = load_set(cfg.paths.truth_files, cfg.field_io);
    if (truth_set->all.size() != n_patches)
      throw AlignmentError(
          "evaluate: truth patch count " +
          std::to_string(truth_set->all.size()) + " != test patch count " +
          std::to_string(n_patches));
    for (std::size_t i = 0; i < n_patches; ++i) {
      if (truth_set->all[i]->t_origin != test.all[i]->t_origin ||
          truth_set->all[i]->g_origin != test.all[i]->g_origin)
        throw AlignmentError("evaluate: truth/test origin mismatch at patch " +
                             std::to_string(i));
      truth.push_back(truth_set->all[i]->values * kClampBound);
    }
  } else {
    for (const auto* p : test.all) truth.push_back(p->values * kClampBound);
  }

  std::vector<Reconstruction> methods;

  if (!infer_dir.empty()) {
    Reconstruction rec;
    rec.method = "cumolos";
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < n_patches; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "patch_%04zu.cmls", i);
      const fs::path p = fs::path(infer_dir) / name;
      if (!fs::exists(p)) {
        missing.push_back(name);
        continue;
      }
      auto [mean, sigma] = load_array_pair_cmls(p);
      if (mean.rows() != test.all[i]->values.rows() ||
          mean.cols() != test.all[i]->values.cols())
        throw AlignmentError("evaluate: record shape mismatch at patch " +
                             std::to_string(i));
      rec.patches.push_back(std::move(mean));
      rec.sigmas.push_back(std::move(sigma));
    }
    if (!missing.empty()) {
      std::string msg = "evaluate: missing ensemble records:";
      for (const auto& m : missing) msg += " " + m;
      throw AlignmentError(msg);
    }
    methods.push_back(std::move(rec));
  }

  {
    Reconstruction rec;
    rec.method = "meanfilter8";
    for (const auto* p : test.all)
      rec.patches.push_back(mean_filter(*p) * kClampBound);
    methods.push_back(std::move(rec));
  }
  if (with_oracle) {
    Reconstruction rec;
    rec.method = "oracle";
    rec.patches = truth;
    methods.push_back(std::move(rec));
  }

  const FeatureExtractor extractor = make_rand_conv_extractor();
  WelchParams welch;
  welch.segment = cfg.metrics.psd_segment;
  welch.overlap = cfg.metrics.psd_overlap;

  std::vector<MetricsReport> reports;
  codec::json diagnostics;
  diagnostics["methods"] = codec::json::array();

  for (const auto& method : methods) {
    MetricsReport r;
    r.method = method.method;
    r.data_range = cfg.metrics.data_range;
    r.f_cut_hz = cfg.metrics.f_cut_hz;
    r.tol = cfg.metrics.tol;
    r.psd_segment = cfg.metrics.psd_segment;

    double psnr_sum = 0, ssim_sum = 0, mse_sum = 0;
    for (std::size_t i = 0; i < n_patches; ++i) {
      psnr_sum += psnr(truth[i], method.patches[i], cfg.metrics.data_range);
      ssim_sum += ssim(truth[i], method.patches[i], cfg.metrics.data_range,
                       cfg.metrics.ssim_window, cfg.metrics.ssim_sigma);
      mse_sum += mse(truth[i], method.patches[i]);
    }
    r.psnr_db = psnr_sum / double(n_patches);
    r.ssim = ssim_sum / double(n_patches);
    r.mse = mse_sum / double(n_patches);

    std::vector<Matrix> recon_norm, truth_norm;
    for (std::size_t i = 0; i < n_patches; ++i) {
      recon_norm.push_back(method.patches[i] / kClampBound);
      truth_norm.push_back(truth[i] / kClampBound);
    }
    r.fid = fid(recon_norm, truth_norm, extractor);

    // spectral fidelity pooled over gates and test files
    double pass = 0;
    Eigen::Index included = 0, excluded = 0;
    std::size_t offset = 0;
    std::vector<double> gate_fidelity;
    for (const auto& file : test.files) {
      const std::size_t count = file.patches.size();
      std::vector<Matrix> raw_arrays, den_arrays;
      for (std::size_t k = 0; k < count; ++k) {
        raw_arrays.push_back(file.patches[k].values * kClampBound);
        den_arrays.push_back(method.patches[offset + k]);
      }
      const Matrix raw_field = reassemble_patches(raw_arrays, file.patches);
      const Matrix den_field = reassemble_patches(den_arrays, file.patches);
      const SpectralResult sr =
          spectral_fidelity(raw_field, den_field, file.field.time_step_s,
                            cfg.metrics.f_cut_hz, cfg.metrics.tol, {}, welch);
      pass += sr.fidelity * double(sr.included_bins);
      included += sr.included_bins;
      excluded += sr.excluded_bins;
      if (gate_fidelity.empty()) gate_fidelity = sr.per_gate_fidelity;
      offset += count;
    }
    r.spectral_fidelity = included > 0 ? pass / double(included) : 0.0;
    r.spectral_included_bins = included;
    r.spectral_excluded_bins = excluded;

    codec::json mdiag;
    mdiag["method"] = method.method;
    mdiag["per_gate_fidelity_first_file"] = gate_fidelity;

    if (!method.sigmas.empty()) {
      std::vector<Matrix> errors;
      for (std::size_t i = 0; i < n_patches; ++i)
        errors.push_back((method.patches[i] - truth[i]).cwiseAbs());
      r.calibration = uncertainty_diagnostics(errors, method.sigmas);
      r.has_calibration = true;
      mdiag["pearson_per_patch_mean"] = r.calibration.per_patch_pearson_mean;
      mdiag["pearson_per_patch_std"] = r.calibration.per_patch_pearson_std;
      mdiag["pearson_excluded_patches"] = r.calibration.excluded_patches;
      mdiag["pearson_global"] = r.calibration.global_pearson;
      mdiag["spearman_global"] = r.calibration.global_spearman;
      mdiag["degenerate"] = r.calibration.degenerate;
      mdiag["decile_mae"] = r.calibration.decile_mae;
      codec::json topk = codec::json::object();
      for (const auto& [k, v] : r.calibration.topk_capture)
        topk[std::to_string(k)] = v;
      mdiag["topk_capture"] = topk;
    }
    diagnostics["methods"].push_back(mdiag);

    write_keyvalue(r, dir / ("metrics_" + method.method + ".txt"));
    reports.push_back(std::move(r));
  }

  write_table_csv(reports, dir / "table1.csv");
  write_text(dir / "diagnostics.json", diagnostics.dump(2) + "\n");

  // artifacts for the plot command: first test file, preferred method
  {
    const auto& file = test.files.front();
    const std::size_t count = file.patches.size();
    std::vector<Matrix> raw_arrays, truth_arrays;
    for (std::size_t k = 0; k < count; ++k) {
      raw_arrays.push_back(file.patches[k].values * kClampBound);
      truth_arrays.push_back(truth[k]);
    }
    const Matrix raw_field = reassemble_patches(raw_arrays, file.patches);
    const Matrix truth_field = reassemble_patches(truth_arrays, file.patches);
    save_array_pair_cmls(raw_field, truth_field, file.field.time_step_s,
                         file.field.gate_spacing_m,
                         dir / "field_original.cmls");

    for (const auto& method : methods) {
      std::vector<Matrix> den_arrays, sig_arrays;
      for (std::size_t k = 0; k < count; ++k) {
        den_arrays.push_back(method.patches[k]);
        sig_arrays.push_back(method.sigmas.empty()
                                 ? Matrix::Zero(den_arrays.back().rows(),
                                                den_arrays.back().cols())
                                 : method.sigmas[k]);
      }
      save_array_pair_cmls(reassemble_patches(den_arrays, file.patches),
                           reassemble_patches(sig_arrays, file.patches),
                           file.field.time_step_s, file.field.gate_spacing_m,
                           dir / ("field_recon_" + method.method + ".cmls"));
    }

    const auto& preferred = methods.front();
    std::vector<Matrix> den_arrays;
    for (std::size_t k = 0; k < count; ++k)
      den_arrays.push_back(preferred.patches[k]);
    const Matrix den_field = reassemble_patches(den_arrays, file.patches);
    for (int gate : cfg.metrics.psd_gates) {
      if (gate < 0 || gate >= raw_field.cols()) continue;
      std::vector<double> sr(static_cast<std::size_t>(raw_field.rows()));
      std::vector<double> sd(sr.size());
      for (Eigen::Index i = 0; i < raw_field.rows(); ++i) {
        sr[static_cast<std::size_t>(i)] = raw_field(i, gate);
        sd[static_cast<std::size_t>(i)] = den_field(i, gate);
      }
      const Psd praw = welch_psd(sr, file.field.time_step_s, welch);
      const Psd pden = welch_psd(sd, file.field.time_step_s, welch);
      char name[64];
      std::snprintf(name, sizeof name, "psd_gate_%02d.csv", gate);
      std::FILE* f = std::fopen((dir / name).string().c_str(), "wb");
      if (!f) throw IoError("evaluate: cannot open psd csv");
      std::fputs("freq_hz,p_raw,p_den\n", f);
      for (std::size_t k = 0; k < praw.freqs.size(); ++k)
        std::fprintf(f, "%.17g,%.17g,%.17g\n", praw.freqs[k], praw.power[k],
                     pden.power[k]);
      std::fclose(f);
    }
  }

  write_text(dir / "config.json", print_config(cfg));
  std::cout << "evaluation written to " << dir.string() << "\n";
  for (const auto& r : reports)
    std::printf("%-12s psnr %.4g  ssim %.4g  mse %.4g  fid %.4g  sf %.4g\n",
                r.method.c_str(), r.psnr_db, r.ssim, r.mse, r.fid,
                r.spectral_fidelity);
  return 0;
}

// ---- plot ----------------------------------------------------------------------

std::vector<std::array<unsigned char, 3>> palette() {
  return {{{31, 119, 180}},
          {{255, 127, 14}},
          {{44, 160, 44}},
          {{214, 39, 40}},
          {{148, 103, 189}},
          {{140, 86, 75}}};
}

int cmd_plot(const PipelineConfig& cfg, const GlobalOptions& g,
             const std::string& results_dir,
             const std::vector<std::string>& train_csvs) {
  const fs::path dir = make_run_dir(cfg, g, "plot");

  if (!results_dir.empty()) {
    const fs::path rdir = results_dir;
    std::vector<std::string> missing;
    const fs::path original = rdir / "field_original.cmls";
    if (!fs::exists(original)) missing.push_back(original.string());

    fs::path recon = rdir / "field_recon_cumolos.cmls";
    if (!fs::exists(recon)) recon = rdir / "field_recon_meanfilter8.cmls";
    if (!fs::exists(recon))
      missing.push_back((rdir / "field_recon_<method>.cmls").string());

    std::vector<fs::path> psd_files;
    if (fs::exists(rdir))
      for (const auto& entry : fs::directory_iterator(rdir)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("psd_gate_") && name.ends_with(".csv"))
          psd_files.push_back(entry.path());
      }
    std::sort(psd_files.begin(), psd_files.end());
    if (psd_files.empty())
      missing.push_back((rdir / "psd_gate_*.csv").string());

    if (!missing.empty()) {
      std::string msg = "plot: missing inputs:";
      for (const auto& m : missing) msg += "\n  " + m;
      throw IoError(msg);
    }

    auto [raw_field, truth_field] = load_array_pair_cmls(original);
    auto [mean_field, sigma_field] = load_array_pair_cmls(recon);

    write_png(render_heatmap(raw_field, -kClampBound, kClampBound),
              dir / "field_original.png");
    write_png(render_heatmap(mean_field, -kClampBound, kClampBound),
              dir / "field_reconstruction.png");
    const double smax = std::max(1e-12, sigma_field.maxCoeff());
    write_png(render_heatmap(sigma_field, 0.0, smax), dir / "field_sigma.png");

    std::vector<LineSeries> series;
    const auto colors = palette();
    std::size_t ci = 0;
    for (const auto& pf : psd_files) {
      std::ifstream is(pf);
      std::string line;
      std::getline(is, line);  // header
      LineSeries raw_s, den_s;
      const auto c = colors[ci++ % colors.size()];
      raw_s.r = c[0];
      raw_s.g = c[1];
      raw_s.b = c[2];
      den_s.r = static_cast<unsigned char>(c[0] / 2);
      den_s.g = static_cast<unsigned char>(c[1] / 2);
      den_s.b = static_cast<unsigned char>(c[2] / 2);
      while (std::getline(is, line)) {
        double fq, pr, pd;
        if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &fq, &pr, &pd) == 3) {
          raw_s.x.push_back(fq);
          raw_s.y.push_back(pr);
          den_s.x.push_back(fq);
          den_s.y.push_back(pd);
        }
      }
      series.push_back(std::move(raw_s));
      series.push_back(std::move(den_s));
    }
    write_png(render_lines(series, /*log_y=*/true), dir / "psd_overlay.png");
  }

  if (!train_csvs.empty()) {
    std::vector<LineSeries> series;
    const auto colors = palette();
    std::size_t ci = 0;
    for (const auto& path : train_csvs) {
      std::ifstream is(path);
      if (!is) throw IoError("plot: cannot open training csv " + path);
      std::string line;
      std::getline(is, line);
      LineSeries s;
      const auto c = colors[ci++ % colors.size()];
      s.r = c[0];
      s.g = c[1];
      s.b = c[2];
      while (std::getline(is, line)) {
        int epoch;
        double ratio, lr, loss;
        if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg", &epoch, &ratio, &lr,
                        &loss) == 4) {
          s.x.push_back(epoch);
          s.y.push_back(loss);
        }
      }
      series.push_back(std::move(s));
    }
    write_png(render_lines(series, /*log_y=*/false), dir / "loss_curves.png");
  }

  std::cout << "plots written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  GlobalOptions g;
  std::string resume_path, checkpoint_path, infer_dir, results_dir;
  std::vector<std::string> train_csvs;
  bool with_oracle = false;

  CLI::App app{"curriculum-masked autoencoder reconstruction pipeline",
               "cumolos"};
  app.add_option("--config", g.config_path, "pipeline config (JSON)");
  app.add_option("--seed", g.seed, "override seeds (synth/train/infer)");
  app.add_option("--out", g.out_dir, "output base directory");
  app.add_option("--run-name", g.run_name, "run directory name");
  app.add_flag("--print-config", g.print_config,
               "print the fully-resolved config and exit");

  auto* synth = app.add_subcommand("synth", "generate synthetic fields");
  auto* train_cmd = app.add_subcommand("train", "train the model");
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  auto* infer = app.add_subcommand("infer", "mask-ensemble inference");
  infer->add_option("--checkpoint", checkpoint_path, "trained checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "compute metrics");
  evaluate->add_option("--infer-dir", infer_dir,
                       "directory with ensemble records");
  evaluate->add_flag("--with-oracle", with_oracle,
                     "include the truth-vs-itself row");
  auto* plot = app.add_subcommand("plot", "render figure panels");
  plot->add_option("--results", results_dir, "evaluate run directory");
  plot->add_option("--train-csv", train_csvs,
                   "training log(s) for loss-curve overlay");

  app.require_subcommand(0, 1);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const PipelineConfig cfg = resolve_config(g);
    if (g.print_config) {
      std::cout << print_config(cfg);
      return 0;
    }
    if (synth->parsed()) return cmd_synth(cfg, g);
    if (train_cmd->parsed()) return cmd_train(cfg, g, resume_path);
    if (infer->parsed()) return cmd_infer(cfg, g, checkpoint_path);
    if (evaluate->parsed()) return cmd_evaluate(cfg, g, infer_dir, with_oracle);
    if (plot->parsed()) return cmd_plot(cfg, g, results_dir, train_csvs);
    std::cerr << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cumolos::cli
