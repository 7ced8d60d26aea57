#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cumolos/patching.hpp"

namespace cumolos {

/// Micro-patch masked-autoencoder architecture. Layer depths follow the
/// reference configuration (12 encoder / 4 decoder); widths and head counts
/// are config-exposed since only the depths are fixed.
struct ModelConfig {
  int encoder_layers = 12;
  int decoder_layers = 4;
  int encoder_dim = 192;
  int decoder_dim = 96;
  int encoder_heads = 3;
  int decoder_heads = 3;
  double mlp_ratio = 4.0;
  int token_dim = 4;  // 2x2 pixels
};

/// Throws ParameterError on head/width mismatches.
void validate(const ModelConfig& config);

struct LayerNormParams {
  Vector gamma, beta;
};

struct AttentionParams {
  Matrix wq, wk, wv, wo;  // (in, out) so that y = x * W + b
  Vector bq, bk, bv, bo;
};

struct MlpParams {
  Matrix w1, w2;
  Vector b1, b2;
};

struct BlockParams {
  LayerNormParams ln1, ln2;
  AttentionParams attn;
  MlpParams mlp;
};

/// All trainable tensors. Shapes are a pure function of the config, which is
/// what makes the flat checkpoint layout below well-defined.
struct MaeParams {
  ModelConfig config;

  Matrix enc_embed_w;  // (token_dim, De)
  Vector enc_embed_b;
  std::vector<BlockParams> encoder;
  LayerNormParams enc_norm;

  Matrix dec_embed_w;  // (De, Dd)
  Vector dec_embed_b;
  Vector mask_token;  // (Dd)
  std::vector<BlockParams> decoder;
  LayerNormParams dec_norm;
  Matrix pred_w;  // (Dd, token_dim)
  Vector pred_b;
};

/// One trainable tensor viewed as a flat span, in canonical order.
struct ParamRef {
  std::string name;
  double* data;
  Eigen::Index size;
  bool decay;  // weight matrices decay; biases, norms, mask token do not
};

std::vector<ParamRef> parameter_refs(MaeParams& params);
std::vector<ParamRef> parameter_refs(const MaeParams& params);  // const_cast'd views, read-only use

/// Exact trainable-parameter count for a config.
std::int64_t count_parameters(const ModelConfig& config);

/// Seeded initialization: Xavier-uniform weights, zero biases, unit norms,
/// N(0, 0.02) mask token.
MaeParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Same shapes as `like`, all zeros. Gradient accumulator.
MaeParams zeros_like(const MaeParams& like);

/// Fixed 2D sine-cosine positional table for a grid, (grid_h*grid_w, dim).
/// dim must be divisible by 4. Row order matches TokenGrid token order.
Matrix sincos_pos_embed_2d(Eigen::Index grid_h, Eigen::Index grid_w, int dim);

struct ReconstructionOutput {
  Matrix predicted_tokens;  // (L, token_dim)
  MaskRealization mask;
};

/// Internal sequence lengths, exposed for instrumentation.
struct ForwardTrace {
  Eigen::Index encoder_tokens = 0;
  Eigen::Index decoder_tokens = 0;
};

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

struct AttentionCache {
  Matrix q, k, v;
  std::vector<Matrix> attn;  // per head, post-softmax
  Matrix concat;             // heads' outputs before the output projection
};

struct MlpCache {
  Matrix pre_act, act;
};

struct BlockCache {
  LayerNormCache ln1, ln2;
  Matrix attn_in, mlp_in;  // LN outputs feeding attention / MLP
  AttentionCache attn;
  MlpCache mlp;
};

struct ForwardCache {
  std::vector<Eigen::Index> visible, hidden;
  Matrix enc_in;  // gathered visible raw tokens
  std::vector<BlockCache> enc_blocks;
  LayerNormCache enc_norm;
  Matrix enc_out;
  Matrix dec_in;
  std::vector<BlockCache> dec_blocks;
  LayerNormCache dec_norm;
  Matrix dec_out;
};

/// Encoder over visible tokens only, decoder over all positions with a shared
/// mask token at hidden ones, linear head to pixel values. Pass `cache` to
/// enable backward(); `visible_order` overrides the default ascending feed
/// order of visible tokens (the output is equivariant to it).
ReconstructionOutput forward(const TokenGrid& grid,
                             const MaskRealization& mask,
                             const MaeParams& params,
                             ForwardCache* cache = nullptr,
                             ForwardTrace* trace = nullptr,
                             const std::vector<Eigen::Index>* visible_order =
                                 nullptr);

/// Mean squared error over pixel entries that belong to hidden tokens and are
/// marked valid; 0 when that set is empty. `valid_elements` has length
/// L * token_dim in token layout (see tokenize_mask).
double masked_mse(const Matrix& predicted_tokens, const Matrix& target_tokens,
                  const std::vector<std::uint8_t>& visible,
                  const std::vector<std::uint8_t>& valid_elements);

/// Same value; also writes d(loss)/d(predictions). The gradient is exactly
/// zero at visible-token positions.
double masked_mse_with_grad(const Matrix& predicted_tokens,
                            const Matrix& target_tokens,
                            const std::vector<std::uint8_t>& visible,
                            const std::vector<std::uint8_t>& valid_elements,
                            Matrix& dpred);

/// Reverse pass for forward(); accumulates parameter gradients into `grads`
/// (shapes must match `params`).
void backward(const MaskRealization& mask, const MaeParams& params,
              const ForwardCache& cache, const Matrix& dpred,
              MaeParams& grads);

}  // namespace cumolos
