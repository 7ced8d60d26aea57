#pragma once

#include <functional>

#include "cumolos/model.hpp"

namespace cumolos {

/// How a full reconstruction is assembled from decoder outputs and the input.
/// PasteVisible (default) keeps input values at visible-token pixels, since
/// the loss never supervises decoder outputs there; FullDecode uses decoder
/// outputs everywhere.
enum class CompositionPolicy { kPasteVisible, kFullDecode };

CompositionPolicy composition_from_string(const std::string& name);
std::string to_string(CompositionPolicy policy);

struct InferenceOptions {
  CompositionPolicy composition = CompositionPolicy::kPasteVisible;
  bool clamp_outputs = true;  // clamp to +-norm_constant after denormalizing
  double norm_constant = kClampBound;
  double mask_ratio = 0.7;  // the curriculum's terminal ratio
};

/// Posterior mean, per-pixel standard deviation (population, 1/N), and the
/// member seeds that produced them.
struct EnsembleResult {
  Matrix mean;   // m/s
  Matrix sigma;  // m/s, >= 0 elementwise
  int n_members = 0;
  std::vector<std::uint64_t> member_seeds;
};

/// Test hook: substitutes the mask generator (default: sample_mask).
using MaskSource = std::function<MaskRealization(
    Eigen::Index token_count, double ratio, std::uint64_t seed)>;

/// One stochastic reconstruction in physical units:
/// tokenize -> mask -> forward -> untokenize -> compose -> denormalize.
Matrix reconstruct_once(const PatchSample& patch, const MaeParams& params,
                        std::uint64_t mask_seed,
                        const InferenceOptions& options = {},
                        const MaskSource& mask_source = {});

/// Runs members with seeds base_seed .. base_seed+n-1 and aggregates them.
EnsembleResult ensemble(const PatchSample& patch, const MaeParams& params,
                        int n, std::uint64_t base_seed,
                        const InferenceOptions& options = {},
                        const MaskSource& mask_source = {});

/// Mean and population standard deviation of a member stack, reduced with a
/// deterministic pairwise tree so results do not depend on evaluation order
/// or concurrency.
EnsembleResult aggregate_members(const std::vector<Matrix>& members,
                                 const std::vector<std::uint64_t>& seeds);

}  // namespace cumolos
