#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cumolos/field_io.hpp"
#include "cumolos/model.hpp"
#include "cumolos/synthetic.hpp"
#include "cumolos/training.hpp"

namespace cumolos {

struct FieldIoConfig {
  VariableNames variables;
  double snr_threshold = 0.005;
  double clamp_lo = -5.0;
  double clamp_hi = 5.0;
  int window_t = 64;
  int window_g = 64;
  int gate_limit = 64;
};

struct SynthConfig {
  SyntheticSpec spec;
  int count = 10;                  // fields to generate
  std::string format = "cmls";     // cmls | h5 | both
  bool with_truth = true;          // also emit the clean companion field
};

struct InferenceCliConfig {
  int n_members = 50;
  std::uint64_t base_seed = 0;
  std::string composition = "paste-visible";
  bool clamp_outputs = true;
};

struct MetricsCliConfig {
  double data_range = 10.0;  // span of [-5, 5] m/s
  double f_cut_hz = 0.01;
  double tol = 0.5;
  int psd_segment = 256;
  double psd_overlap = 0.5;
  std::vector<int> psd_gates = {0, 21, 42, 63};  // emitted as per-gate CSVs
  int ssim_window = 7;
  double ssim_sigma = 1.5;
};

struct PathsConfig {
  std::vector<std::string> train_files;
  std::vector<std::string> test_files;
  std::vector<std::string> truth_files;  // optional clean references
  std::string output_dir = "runs";
};

/// One document drives every command; all defaults reproduce the
/// reference configuration.
struct PipelineConfig {
  FieldIoConfig field_io;
  SynthConfig synthetic;
  CurriculumSchedule curriculum;
  ModelConfig model;
  TrainConfig training;
  InferenceCliConfig inference;
  MetricsCliConfig metrics;
  PathsConfig paths;
};

/// Parses a JSON config; absent keys keep defaults. All validation failures
/// are collected and reported together in one ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text);

/// Fully-resolved canonical form (sorted keys, stable formatting).
std::string print_config(const PipelineConfig& config);

/// Collects semantic errors (beyond JSON syntax); empty means valid.
std::vector<std::string> validate_config(const PipelineConfig& config);

}  // namespace cumolos
