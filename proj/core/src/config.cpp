#include "cumolos/config.hpp"

#include <fstream>
#include <sstream>

#include "cumolos/errors.hpp"
#include "cumolos/patching.hpp"
#include "json_codec.hpp"

namespace cumolos {

namespace {

using codec::get;
using codec::json;

json to_json(const PipelineConfig& c) {
  json j;
  j["field_io"] = {{"velocity_var", c.field_io.variables.velocity},
                   {"intensity_var", c.field_io.variables.intensity},
                   {"time_var", c.field_io.variables.time},
                   {"snr_threshold", c.field_io.snr_threshold},
                   {"clamp_lo", c.field_io.clamp_lo},
                   {"clamp_hi", c.field_io.clamp_hi},
                   {"window_t", c.field_io.window_t},
                   {"window_g", c.field_io.window_g},
                   {"gate_limit", c.field_io.gate_limit}};
  j["synthetic"] = codec::to_json(c.synthetic.spec);
  j["synthetic"]["count"] = c.synthetic.count;
  j["synthetic"]["format"] = c.synthetic.format;
  j["synthetic"]["with_truth"] = c.synthetic.with_truth;
  j["curriculum"] = codec::to_json(c.curriculum);
  j["model"] = codec::to_json(c.model);
  j["training"] = codec::to_json(c.training);
  j["inference"] = {{"n_members", c.inference.n_members},
                    {"base_seed", c.inference.base_seed},
                    {"composition", c.inference.composition},
                    {"clamp_outputs", c.inference.clamp_outputs}};
  j["metrics"] = {{"data_range", c.metrics.data_range},
                  {"f_cut_hz", c.metrics.f_cut_hz},
                  {"tol", c.metrics.tol},
                  {"psd_segment", c.metrics.psd_segment},
                  {"psd_overlap", c.metrics.psd_overlap},
                  {"psd_gates", c.metrics.psd_gates},
                  {"ssim_window", c.metrics.ssim_window},
                  {"ssim_sigma", c.metrics.ssim_sigma}};
  j["paths"] = {{"train_files", c.paths.train_files},
                {"test_files", c.paths.test_files},
                {"truth_files", c.paths.truth_files},
                {"output_dir", c.paths.output_dir}};
  return j;
}

PipelineConfig from_json(const json& j) {
  PipelineConfig c;
  if (j.contains("field_io")) {
    const json& s = j.at("field_io");
    get(s, "velocity_var", c.field_io.variables.velocity);
    get(s, "intensity_var", c.field_io.variables.intensity);
    get(s, "time_var", c.field_io.variables.time);
    get(s, "snr_threshold", c.field_io.snr_threshold);
    get(s, "clamp_lo", c.field_io.clamp_lo);
    get(s, "clamp_hi", c.field_io.clamp_hi);
    get(s, "window_t", c.field_io.window_t);
    get(s, "window_g", c.field_io.window_g);
    get(s, "gate_limit", c.field_io.gate_limit);
  }
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    c.synthetic.spec = codec::synthetic_from_json(s);
    get(s, "count", c.synthetic.count);
    get(s, "format", c.synthetic.format);
    get(s, "with_truth", c.synthetic.with_truth);
  }
  if (j.contains("curriculum"))
    c.curriculum = codec::curriculum_from_json(j.at("curriculum"));
  if (j.contains("model")) c.model = codec::model_from_json(j.at("model"));
  if (j.contains("training"))
    c.training = codec::train_from_json(j.at("training"));
  if (j.contains("inference")) {
    const json& s = j.at("inference");
    get(s, "n_members", c.inference.n_members);
    get(s, "base_seed", c.inference.base_seed);
    get(s, "composition", c.inference.composition);
    get(s, "clamp_outputs", c.inference.clamp_outputs);
  }
  if (j.contains("metrics")) {
    const json& s = j.at("metrics");
    get(s, "data_range", c.metrics.data_range);
    get(s, "f_cut_hz", c.metrics.f_cut_hz);
    get(s, "tol", c.metrics.tol);
    get(s, "psd_segment", c.metrics.psd_segment);
    get(s, "psd_overlap", c.metrics.psd_overlap);
    get(s, "psd_gates", c.metrics.psd_gates);
    get(s, "ssim_window", c.metrics.ssim_window);
    get(s, "ssim_sigma", c.metrics.ssim_sigma);
  }
  if (j.contains("paths")) {
    const json& s = j.at("paths");
    get(s, "train_files", c.paths.train_files);
    get(s, "test_files", c.paths.test_files);
    get(s, "truth_files", c.paths.truth_files);
    get(s, "output_dir", c.paths.output_dir);
  }
  return c;
}

}  // namespace

std::vector<std::string> validate_config(const PipelineConfig& c) {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  check(c.field_io.snr_threshold >= 0, "field_io.snr_threshold must be >= 0");
  check(c.field_io.clamp_lo < c.field_io.clamp_hi,
        "field_io clamp interval is empty");
  check(c.field_io.window_t > 0 && c.field_io.window_g > 0,
        "field_io window dims must be positive");
  check(c.field_io.window_t % 2 == 0 && c.field_io.window_g % 2 == 0,
        "field_io window dims must be even (2x2 micro-patches)");
  check(c.field_io.gate_limit >= c.field_io.window_g,
        "field_io.gate_limit must be >= window_g");

  check(c.synthetic.count > 0, "synthetic.count must be positive");
  check(c.synthetic.format == "cmls" || c.synthetic.format == "h5" ||
            c.synthetic.format == "both",
        "synthetic.format must be cmls, h5, or both");

  try {
    validate(c.curriculum);
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }
  try {
    validate(c.model);
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }
  try {
    validate(c.training);
  } catch (const Error& e) {
    errors.emplace_back(e.what());
  }

  check(c.inference.n_members >= 1, "inference.n_members must be >= 1");
  check(c.inference.composition == "paste-visible" ||
            c.inference.composition == "full-decode",
        "inference.composition must be paste-visible or full-decode");

  check(c.metrics.data_range > 0, "metrics.data_range must be > 0");
  check(c.metrics.f_cut_hz > 0, "metrics.f_cut_hz must be > 0");
  check(c.metrics.tol > 0, "metrics.tol must be > 0");
  check(c.metrics.psd_segment >= 2, "metrics.psd_segment must be >= 2");
  check(c.metrics.psd_overlap >= 0 && c.metrics.psd_overlap < 1,
        "metrics.psd_overlap outside [0, 1)");
  check(c.metrics.ssim_window % 2 == 1 && c.metrics.ssim_window >= 3,
        "metrics.ssim_window must be odd and >= 3");
  return errors;
}

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto errors = validate_config(c);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "config: " << errors.size() << " validation error(s):";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string print_config(const PipelineConfig& config) {
  return to_json(config).dump(2) + "\n";
}

}  // namespace cumolos
