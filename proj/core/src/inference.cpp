#include "cumolos/inference.hpp"

#include <algorithm>
#include <cmath>

#include "cumolos/errors.hpp"

namespace cumolos {

namespace {

// Canonical binary-tree reduction over [lo, hi): independent of how members
// were produced, and reproducible regardless of concurrency.
template <typename Fetch>
Matrix pairwise_sum(const Fetch& fetch, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return fetch(lo);
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(fetch, lo, mid) + pairwise_sum(fetch, mid, hi);
}

}  // namespace

CompositionPolicy composition_from_string(const std::string& name) {
  if (name == "paste-visible") return CompositionPolicy::kPasteVisible;
  if (name == "full-decode") return CompositionPolicy::kFullDecode;
  throw ParameterError("unknown composition policy: " + name);
}

std::string to_string(CompositionPolicy policy) {
  return policy == CompositionPolicy::kPasteVisible ? "paste-visible"
                                                    : "full-decode";
}

Matrix reconstruct_once(const PatchSample& patch, const MaeParams& params,
                        std::uint64_t mask_seed,
                        const InferenceOptions& options,
                        const MaskSource& mask_source) {
  if (params.enc_embed_w.size() == 0 ||
      params.encoder.size() !=
          static_cast<std::size_t>(params.config.encoder_layers))
    throw StateError("reconstruct_once: model parameters not initialized");
  if (options.norm_constant <= 0)
    throw ParameterError("reconstruct_once: norm_constant must be > 0");

  const TokenGrid grid = tokenize(patch.values);
  const MaskRealization mask =
      mask_source ? mask_source(grid.token_count(), options.mask_ratio,
                                mask_seed)
                  : sample_mask(grid.token_count(), options.mask_ratio,
                                mask_seed);

  const ReconstructionOutput out = forward(grid, mask, params);

  TokenGrid composed;
  composed.grid_h = grid.grid_h;
  composed.grid_w = grid.grid_w;
  composed.tokens = out.predicted_tokens;
  if (options.composition == CompositionPolicy::kPasteVisible) {
    for (Eigen::Index t = 0; t < grid.token_count(); ++t)
      if (mask.visible[static_cast<std::size_t>(t)])
        composed.tokens.row(t) = grid.tokens.row(t);
  }

  Matrix field = untokenize(composed) * options.norm_constant;
  if (options.clamp_outputs) {
    field = field.unaryExpr([&](double v) {
      return std::clamp(v, -options.norm_constant, options.norm_constant);
    });
  }
  return field;
}

EnsembleResult ensemble(const PatchSample& patch, const MaeParams& params,
                        int n, std::uint64_t base_seed,
                        const InferenceOptions& options,
                        const MaskSource& mask_source) {
  if (n < 1) throw ParameterError("ensemble: need n >= 1 members");

  std::vector<Matrix> members;
  std::vector<std::uint64_t> seeds;
  members.reserve(static_cast<std::size_t>(n));
  seeds.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    seeds.push_back(seed);
    members.push_back(
        reconstruct_once(patch, params, seed, options, mask_source));
  }
  return aggregate_members(members, seeds);
}

EnsembleResult aggregate_members(const std::vector<Matrix>& members,
                                 const std::vector<std::uint64_t>& seeds) {
  if (members.empty())
    throw ParameterError("aggregate_members: empty member stack");
  if (seeds.size() != members.size())
    throw ParameterError("aggregate_members: seed list length mismatch");
  const Eigen::Index rows = members.front().rows();
  const Eigen::Index cols = members.front().cols();
  for (const auto& m : members)
    if (m.rows() != rows || m.cols() != cols)
      throw ShapeError("aggregate_members: member shapes differ");

  const auto n = static_cast<double>(members.size());
  const Matrix mean =
      pairwise_sum([&](std::size_t i) -> Matrix { return members[i]; }, 0,
                   members.size()) /
      n;
  const Matrix sqsum = pairwise_sum(
      [&](std::size_t i) -> Matrix {
        return (members[i] - mean).array().square().matrix();
      },
      0, members.size());

  EnsembleResult result;
  result.mean = mean;
  result.sigma = (sqsum / n).array().sqrt().matrix();
  result.n_members = static_cast<int>(members.size());
  result.member_seeds = seeds;
  return result;
}

}  // namespace cumolos
