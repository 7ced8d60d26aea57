#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "cumolos/model.hpp"

namespace cumolos {

/// Optimization recipe: decoupled-weight-decay Adam, linear warmup into a
/// cosine decay, effective LR scaled by batch size.
struct TrainConfig {
  int epochs = 500;
  int batch_size = 32;
  double base_lr = 1.5e-4;
  int lr_scale_denominator = 256;
  double weight_decay = 0.05;
  int warmup_epochs = 30;  // aligned with the mask-ratio ramp
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double grad_clip = 0.0;  // global max-norm, 0 disables
  int checkpoint_every = 0;  // epochs between checkpoints, 0 = final only
  std::vector<double> loss_thresholds = {0.20, 0.189};  // epoch markers
};

void validate(const TrainConfig& config);

inline double effective_lr(const TrainConfig& c) {
  return c.base_lr * static_cast<double>(c.batch_size) /
         static_cast<double>(c.lr_scale_denominator);
}

/// Linear warmup from 0 over [0, warmup_epochs], then cosine decay to 0 at
/// `epochs`. Accepts fractional epochs for per-step schedules.
double lr_at(const TrainConfig& config, double epoch);

struct EpochLogEntry {
  int epoch;
  double mask_ratio;
  double lr;
  double mean_loss;
};

struct TrainingLog {
  std::vector<EpochLogEntry> entries;
  /// threshold -> first epoch whose mean loss fell below it (absent if never)
  std::map<double, int> threshold_epochs;

  void write_csv(const std::filesystem::path& path) const;
};

/// Decoupled-weight-decay Adam over the flat parameter vector. Only tensors
/// flagged `decay` in parameter_refs are decayed.
class AdamW {
 public:
  AdamW(const MaeParams& params, double beta1, double beta2,
        double eps = 1e-8);

  void step(MaeParams& params, const MaeParams& grads, double lr,
            double weight_decay);

  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  std::int64_t& step_count() { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

struct TrainResult {
  MaeParams params;
  TrainingLog log;
  // optimizer state, serialized into checkpoints so resume is seamless
  std::vector<double> adam_m, adam_v;
  std::int64_t adam_t = 0;
  int epochs_completed = 0;
};

/// Resume point: parameters plus optimizer state and the epoch to continue
/// from. Produced by checkpoint loading.
struct ResumeState {
  MaeParams params;
  std::vector<double> adam_m, adam_v;
  std::int64_t adam_t = 0;
  int epoch = 0;
};

/// Per-epoch view of the live training state, rich enough to build a
/// resumable checkpoint.
struct TrainSnapshot {
  EpochLogEntry entry;
  const MaeParams* params;
  const std::vector<double>* adam_m;
  const std::vector<double>* adam_v;
  std::int64_t adam_t;
  int epochs_completed;  // entry.epoch + 1
};

using EpochCallback = std::function<void(const TrainSnapshot&)>;

/// Runs the full loop: per epoch, sets the scheduled mask ratio, shuffles,
/// draws one independent mask per sample, accumulates masked-MSE gradients
/// over each batch, and applies one AdamW update per batch at the
/// fractional-epoch learning rate. Deterministic given (configs, seed).
TrainResult train(const std::vector<PatchSample>& dataset,
                  const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const CurriculumSchedule& schedule,
                  const ResumeState* resume = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace cumolos
