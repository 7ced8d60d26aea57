#include "cumolos/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cumolos/errors.hpp"
#include "cumolos/rng.hpp"

namespace cumolos {

namespace {

// stream tags for deriving independent RNG streams from the run seed
enum Stream : std::uint64_t { kShuffle = 0x51, kMask = 0x52 };

void scale_params(MaeParams& p, double factor) {
  for (auto& ref : parameter_refs(p))
    for (Eigen::Index i = 0; i < ref.size; ++i) ref.data[i] *= factor;
}

void zero_params(MaeParams& p) {
  for (auto& ref : parameter_refs(p))
    std::fill(ref.data, ref.data + ref.size, 0.0);
}

double global_norm(const MaeParams& p) {
  double sq = 0.0;
  for (const auto& ref : parameter_refs(p))
    for (Eigen::Index i = 0; i < ref.size; ++i)
      sq += ref.data[i] * ref.data[i];
  return std::sqrt(sq);
}

std::string diagnostic_dump(int epoch, std::size_t batch, double lr, double r,
                            const MaeParams& params, const MaeParams& grads) {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << ", batch " << batch
     << " (lr=" << lr << ", mask_ratio=" << r << ")\n";
  os << "  |params| = " << global_norm(params)
     << ", |grads| = " << global_norm(grads) << "\n";
  for (const auto& ref : parameter_refs(const_cast<MaeParams&>(grads))) {
    bool finite = true;
    for (Eigen::Index i = 0; i < ref.size && finite; ++i)
      finite = std::isfinite(ref.data[i]);
    if (!finite) os << "  non-finite gradient tensor: " << ref.name << "\n";
  }
  return os.str();
}

}  // namespace

void validate(const TrainConfig& c) {
  if (c.epochs < 0) throw ParameterError("train: epochs must be >= 0");
  if (c.batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
  if (c.base_lr <= 0) throw ParameterError("train: base_lr must be > 0");
  if (c.lr_scale_denominator < 1)
    throw ParameterError("train: lr_scale_denominator must be >= 1");
  if (c.weight_decay < 0)
    throw ParameterError("train: weight_decay must be >= 0");
  if (c.warmup_epochs < 0 || c.warmup_epochs > c.epochs)
    throw ParameterError("train: need 0 <= warmup_epochs <= epochs");
  if (!(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1))
    throw ParameterError("train: moment coefficients outside [0, 1)");
  if (c.grad_clip < 0) throw ParameterError("train: grad_clip must be >= 0");
}

double lr_at(const TrainConfig& c, double epoch) {
  validate(c);
  if (epoch < 0 || epoch > c.epochs)
    throw ParameterError("lr_at: epoch outside [0, epochs]");
  const double peak = effective_lr(c);
  if (epoch < c.warmup_epochs)
    return peak * epoch / static_cast<double>(c.warmup_epochs);
  if (c.epochs == c.warmup_epochs) return peak;
  const double progress = (epoch - c.warmup_epochs) /
                          static_cast<double>(c.epochs - c.warmup_epochs);
  return peak * (1.0 + std::cos(std::numbers::pi * progress)) / 2.0;
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw IoError("training log: cannot open " + path.string());
  std::fputs("epoch,mask_ratio,lr,mean_loss\n", f);
  for (const auto& e : entries)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.mask_ratio, e.lr,
                 e.mean_loss);
  std::fclose(f);
}

AdamW::AdamW(const MaeParams& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  Eigen::Index total = 0;
  for (const auto& ref : parameter_refs(params)) total += ref.size;
  m_.assign(static_cast<std::size_t>(total), 0.0);
  v_.assign(static_cast<std::size_t>(total), 0.0);
}

void AdamW::step(MaeParams& params, const MaeParams& grads, double lr,
                 double weight_decay) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  auto prefs = parameter_refs(params);
  auto grefs = parameter_refs(grads);
  if (prefs.size() != grefs.size())
    throw ShapeError("adamw: parameter/gradient tensor counts differ");

  std::size_t off = 0;
  for (std::size_t k = 0; k < prefs.size(); ++k) {
    if (prefs[k].size != grefs[k].size)
      throw ShapeError("adamw: tensor size mismatch at " + prefs[k].name);
    double* p = prefs[k].data;
    const double* g = grefs[k].data;
    const bool decay = prefs[k].decay;
    for (Eigen::Index i = 0; i < prefs[k].size; ++i, ++off) {
      m_[off] = beta1_ * m_[off] + (1.0 - beta1_) * g[i];
      v_[off] = beta2_ * v_[off] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m_[off] / c1;
      const double vhat = v_[off] / c2;
      const double prev = p[i];
      p[i] = prev - lr * mhat / (std::sqrt(vhat) + eps_);
      if (decay) p[i] -= lr * weight_decay * prev;
    }
  }
}

TrainResult train(const std::vector<PatchSample>& dataset,
                  const ModelConfig& model_config,
                  const TrainConfig& train_config,
                  const CurriculumSchedule& schedule,
                  const ResumeState* resume, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw ParameterError("train: empty dataset");
  validate(model_config);
  validate(train_config);
  validate(schedule);

  const std::size_t n = dataset.size();
  std::vector<TokenGrid> grids(n);
  std::vector<std::vector<std::uint8_t>> valid_elems(n);
  for (std::size_t i = 0; i < n; ++i) {
    grids[i] = tokenize(dataset[i].values);
    valid_elems[i] = tokenize_mask(dataset[i].validity);
  }

  TrainResult result;
  result.params = resume ? resume->params
                         : init_params(model_config, train_config.seed);
  AdamW opt(result.params, train_config.beta1, train_config.beta2);
  int start_epoch = 0;
  if (resume) {
    if (resume->adam_m.size() == opt.first_moment().size()) {
      opt.first_moment() = resume->adam_m;
      opt.second_moment() = resume->adam_v;
      opt.step_count() = resume->adam_t;
    } else if (!resume->adam_m.empty()) {
      throw StateError("train: resume optimizer state size mismatch");
    }
    start_epoch = resume->epoch;
  }

  MaeParams grads = zeros_like(result.params);
  ForwardCache cache;
  const auto num_batches = static_cast<std::size_t>(
      (n + train_config.batch_size - 1) / train_config.batch_size);

  std::vector<std::size_t> order(n);
  for (int epoch = start_epoch; epoch < train_config.epochs; ++epoch) {
    const double ratio = mask_ratio_at(schedule, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(mix64(train_config.seed, kShuffle,
                          static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < num_batches; ++b) {
      const std::size_t batch_end =
          std::min(n, pos + static_cast<std::size_t>(train_config.batch_size));
      const auto batch_n = static_cast<double>(batch_end - pos);

      zero_params(grads);
      double batch_loss = 0.0;
      for (; pos < batch_end; ++pos) {
        const std::size_t idx = order[pos];
        const std::uint64_t mask_seed =
            mix64(mix64(train_config.seed, kMask,
                        static_cast<std::uint64_t>(epoch)),
                  static_cast<std::uint64_t>(pos));
        const MaskRealization mask =
            sample_mask(grids[idx].token_count(), ratio, mask_seed);
        const ReconstructionOutput out =
            forward(grids[idx], mask, result.params, &cache);
        Matrix dpred;
        batch_loss += masked_mse_with_grad(out.predicted_tokens,
                                           grids[idx].tokens, mask.visible,
                                           valid_elems[idx], dpred);
        dpred /= batch_n;  // batch-mean loss
        backward(mask, result.params, cache, dpred, grads);
      }
      batch_loss /= batch_n;
      epoch_loss += batch_loss * batch_n;

      const double lr = lr_at(train_config,
                              static_cast<double>(epoch) +
                                  static_cast<double>(b) /
                                      static_cast<double>(num_batches));
      if (!std::isfinite(batch_loss)) {
        const std::string dump = diagnostic_dump(epoch, b, lr, ratio,
                                                 result.params, grads);
        std::cerr << dump;
        throw NumericError("train: " + dump);
      }
      if (train_config.grad_clip > 0) {
        const double gnorm = global_norm(grads);
        if (gnorm > train_config.grad_clip)
          scale_params(grads, train_config.grad_clip / gnorm);
      }
      opt.step(result.params, grads, lr, train_config.weight_decay);
    }

    EpochLogEntry entry{epoch, ratio,
                        lr_at(train_config, static_cast<double>(epoch)),
                        epoch_loss / static_cast<double>(n)};
    result.log.entries.push_back(entry);
    for (double thr : train_config.loss_thresholds)
      if (entry.mean_loss < thr && !result.log.threshold_epochs.count(thr))
        result.log.threshold_epochs[thr] = epoch;
    if (on_epoch)
      on_epoch(TrainSnapshot{entry, &result.params, &opt.first_moment(),
                             &opt.second_moment(), opt.step_count(),
                             epoch + 1});
  }

  result.adam_m = opt.first_moment();
  result.adam_v = opt.second_moment();
  result.adam_t = opt.step_count();
  result.epochs_completed = train_config.epochs;
  return result;
}

}  // namespace cumolos
