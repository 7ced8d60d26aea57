// Internal JSON bindings for config structs, shared by the checkpoint and
// pipeline-config codecs. Not installed.
#pragma once

#include <json.hpp>

#include "cumolos/model.hpp"
#include "cumolos/patching.hpp"
#include "cumolos/synthetic.hpp"
#include "cumolos/training.hpp"

namespace cumolos::codec {

using nlohmann::json;

// Reads key into out only when present, so struct defaults survive partial
// documents; `seen` collects consumed keys for unknown-key detection.
template <typename T>
void get(const json& j, const char* key, T& out,
         std::vector<std::string>* seen = nullptr) {
  if (seen) seen->push_back(key);
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline json to_json(const ModelConfig& c) {
  return json{{"encoder_layers", c.encoder_layers},
              {"decoder_layers", c.decoder_layers},
              {"encoder_dim", c.encoder_dim},
              {"decoder_dim", c.decoder_dim},
              {"encoder_heads", c.encoder_heads},
              {"decoder_heads", c.decoder_heads},
              {"mlp_ratio", c.mlp_ratio},
              {"token_dim", c.token_dim}};
}

inline ModelConfig model_from_json(const json& j,
                                   std::vector<std::string>* seen = nullptr) {
  ModelConfig c;
  get(j, "encoder_layers", c.encoder_layers, seen);
  get(j, "decoder_layers", c.decoder_layers, seen);
  get(j, "encoder_dim", c.encoder_dim, seen);
  get(j, "decoder_dim", c.decoder_dim, seen);
  get(j, "encoder_heads", c.encoder_heads, seen);
  get(j, "decoder_heads", c.decoder_heads, seen);
  get(j, "mlp_ratio", c.mlp_ratio, seen);
  get(j, "token_dim", c.token_dim, seen);
  return c;
}

inline json to_json(const CurriculumSchedule& s) {
  return json{{"enabled", s.enabled},
              {"r_start", s.r_start},
              {"r_end", s.r_end},
              {"hold_epochs", s.hold_epochs},
              {"ramp_end_epoch", s.ramp_end_epoch}};
}

inline CurriculumSchedule curriculum_from_json(
    const json& j, std::vector<std::string>* seen = nullptr) {
  CurriculumSchedule s;
  get(j, "enabled", s.enabled, seen);
  get(j, "r_start", s.r_start, seen);
  get(j, "r_end", s.r_end, seen);
  get(j, "hold_epochs", s.hold_epochs, seen);
  get(j, "ramp_end_epoch", s.ramp_end_epoch, seen);
  return s;
}

inline json to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"base_lr", c.base_lr},
              {"lr_scale_denominator", c.lr_scale_denominator},
              {"weight_decay", c.weight_decay},
              {"warmup_epochs", c.warmup_epochs},
              {"seed", c.seed},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"grad_clip", c.grad_clip},
              {"checkpoint_every", c.checkpoint_every},
              {"loss_thresholds", c.loss_thresholds}};
}

inline TrainConfig train_from_json(const json& j,
                                   std::vector<std::string>* seen = nullptr) {
  TrainConfig c;
  get(j, "epochs", c.epochs, seen);
  get(j, "batch_size", c.batch_size, seen);
  get(j, "base_lr", c.base_lr, seen);
  get(j, "lr_scale_denominator", c.lr_scale_denominator, seen);
  get(j, "weight_decay", c.weight_decay, seen);
  get(j, "warmup_epochs", c.warmup_epochs, seen);
  get(j, "seed", c.seed, seen);
  get(j, "beta1", c.beta1, seen);
  get(j, "beta2", c.beta2, seen);
  get(j, "grad_clip", c.grad_clip, seen);
  get(j, "checkpoint_every", c.checkpoint_every, seen);
  get(j, "loss_thresholds", c.loss_thresholds, seen);
  return c;
}

inline json to_json(const SyntheticSpec& s) {
  return json{{"time_count", s.time_count},
              {"gate_count", s.gate_count},
              {"time_step_s", s.time_step_s},
              {"gate_spacing_m", s.gate_spacing_m},
              {"background_amplitude", s.background_amplitude},
              {"blob_count", s.blob_count},
              {"blob_amplitude_min", s.blob_amplitude_min},
              {"blob_amplitude_max", s.blob_amplitude_max},
              {"blob_radius_t_min", s.blob_radius_t_min},
              {"blob_radius_t_max", s.blob_radius_t_max},
              {"blob_radius_g_min", s.blob_radius_g_min},
              {"blob_radius_g_max", s.blob_radius_g_max},
              {"shear_band_count", s.shear_band_count},
              {"shear_amplitude_min", s.shear_amplitude_min},
              {"shear_amplitude_max", s.shear_amplitude_max},
              {"noise_sigma", s.noise_sigma},
              {"dropout_fraction", s.dropout_fraction},
              {"seed", s.seed}};
}

inline SyntheticSpec synthetic_from_json(
    const json& j, std::vector<std::string>* seen = nullptr) {
  SyntheticSpec s;
  get(j, "time_count", s.time_count, seen);
  get(j, "gate_count", s.gate_count, seen);
  get(j, "time_step_s", s.time_step_s, seen);
  get(j, "gate_spacing_m", s.gate_spacing_m, seen);
  get(j, "background_amplitude", s.background_amplitude, seen);
  get(j, "blob_count", s.blob_count, seen);
  get(j, "blob_amplitude_min", s.blob_amplitude_min, seen);
  get(j, "blob_amplitude_max", s.blob_amplitude_max, seen);
  get(j, "blob_radius_t_min", s.blob_radius_t_min, seen);
  get(j, "blob_radius_t_max", s.blob_radius_t_max, seen);
  get(j, "blob_radius_g_min", s.blob_radius_g_min, seen);
  get(j, "blob_radius_g_max", s.blob_radius_g_max, seen);
  get(j, "shear_band_count", s.shear_band_count, seen);
  get(j, "shear_amplitude_min", s.shear_amplitude_min, seen);
  get(j, "shear_amplitude_max", s.shear_amplitude_max, seen);
  get(j, "noise_sigma", s.noise_sigma, seen);
  get(j, "dropout_fraction", s.dropout_fraction, seen);
  get(j, "seed", s.seed, seen);
  return s;
}

}  // namespace cumolos::codec
