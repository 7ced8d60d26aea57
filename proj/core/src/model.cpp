#include "cumolos/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "cumolos/errors.hpp"
#include "cumolos/rng.hpp"

namespace cumolos {

namespace {

constexpr double kLayerNormEps = 1e-6;

Eigen::Index mlp_hidden(int dim, double ratio) {
  return static_cast<Eigen::Index>(std::llround(ratio * dim));
}

double gelu(double u) { return 0.5 * u * std::erfc(-u / std::numbers::sqrt2); }

double gelu_grad(double u) {
  const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
  const double pdf =
      std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + u * pdf;
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix y = x * w;
  y.rowwise() += b.transpose();
  return y;
}

Vector colsum(const Matrix& m) { return m.colwise().sum().transpose(); }

Matrix layer_norm_forward(const Matrix& x, const LayerNormParams& p,
                          LayerNormCache& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  cache.xhat.resize(n, d);
  cache.inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.row(i).mean();
    const double var = (x.row(i).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std(i) = inv;
    cache.xhat.row(i) = ((x.row(i).array() - mu) * inv).matrix();
  }
  Matrix y =
      (cache.xhat.array().rowwise() * p.gamma.transpose().array()).matrix();
  y.rowwise() += p.beta.transpose();
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p,
                           const LayerNormCache& cache, LayerNormParams& g) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  g.gamma +=
      (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  g.beta += colsum(dy);
  Matrix dxhat =
      (dy.array().rowwise() * p.gamma.transpose().array()).matrix();
  Matrix dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m1 = dxhat.row(i).mean();
    const double m2 =
        (dxhat.row(i).array() * cache.xhat.row(i).array()).mean();
    dx.row(i) =
        (cache.inv_std(i) *
         (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2))
            .matrix();
  }
  return dx;
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double m = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - m).exp();
    s.row(i) /= s.row(i).sum();
  }
}

Matrix attention_forward(const Matrix& x, const AttentionParams& p, int heads,
                         AttentionCache& cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.q = affine(x, p.wq, p.bq);
  cache.k = affine(x, p.wk, p.bk);
  cache.v = affine(x, p.wv, p.bv);
  cache.attn.assign(static_cast<std::size_t>(heads), Matrix());
  cache.concat.resize(n, d);

  for (int h = 0; h < heads; ++h) {
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    Matrix s = qh * kh.transpose() * scale;
    softmax_rows(s);
    cache.concat.middleCols(h * dh, dh).noalias() = s * vh;
    cache.attn[static_cast<std::size_t>(h)] = std::move(s);
  }
  return affine(cache.concat, p.wo, p.bo);
}

Matrix attention_backward(const Matrix& dout, const Matrix& x,
                          const AttentionParams& p, int heads,
                          const AttentionCache& cache, AttentionParams& g) {
  const Eigen::Index n = x.rows(), d = x.cols();
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  g.wo.noalias() += cache.concat.transpose() * dout;
  g.bo += colsum(dout);
  Matrix dconcat = dout * p.wo.transpose();

  Matrix dq(n, d), dk(n, d), dv(n, d);
  for (int h = 0; h < heads; ++h) {
    const Matrix& a = cache.attn[static_cast<std::size_t>(h)];
    const auto qh = cache.q.middleCols(h * dh, dh);
    const auto kh = cache.k.middleCols(h * dh, dh);
    const auto vh = cache.v.middleCols(h * dh, dh);
    const auto dch = dconcat.middleCols(h * dh, dh);

    Matrix da = dch * vh.transpose();
    dv.middleCols(h * dh, dh).noalias() = a.transpose() * dch;

    const Vector row_dot =
        (da.array() * a.array()).rowwise().sum().matrix();
    Matrix ds =
        (a.array() * (da.array().colwise() - row_dot.array())).matrix();
    ds *= scale;
    dq.middleCols(h * dh, dh).noalias() = ds * kh;
    dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qh;
  }

  g.wq.noalias() += x.transpose() * dq;
  g.wk.noalias() += x.transpose() * dk;
  g.wv.noalias() += x.transpose() * dv;
  g.bq += colsum(dq);
  g.bk += colsum(dk);
  g.bv += colsum(dv);

  Matrix dx = dq * p.wq.transpose();
  dx.noalias() += dk * p.wk.transpose();
  dx.noalias() += dv * p.wv.transpose();
  return dx;
}

Matrix mlp_forward(const Matrix& x, const MlpParams& p, MlpCache& cache) {
  cache.pre_act = affine(x, p.w1, p.b1);
  cache.act = cache.pre_act.unaryExpr([](double u) { return gelu(u); });
  return affine(cache.act, p.w2, p.b2);
}

Matrix mlp_backward(const Matrix& dout, const Matrix& x, const MlpParams& p,
                    const MlpCache& cache, MlpParams& g) {
  g.w2.noalias() += cache.act.transpose() * dout;
  g.b2 += colsum(dout);
  Matrix dact = dout * p.w2.transpose();
  Matrix dpre =
      (dact.array() *
       cache.pre_act.unaryExpr([](double u) { return gelu_grad(u); }).array())
          .matrix();
  g.w1.noalias() += x.transpose() * dpre;
  g.b1 += colsum(dpre);
  return dpre * p.w1.transpose();
}

Matrix block_forward(const Matrix& x, const BlockParams& p, int heads,
                     BlockCache& cache) {
  cache.attn_in = layer_norm_forward(x, p.ln1, cache.ln1);
  Matrix x2 = x + attention_forward(cache.attn_in, p.attn, heads, cache.attn);
  cache.mlp_in = layer_norm_forward(x2, p.ln2, cache.ln2);
  Matrix out = x2 + mlp_forward(cache.mlp_in, p.mlp, cache.mlp);
  return out;
}

Matrix block_backward(const Matrix& dout, const BlockParams& p, int heads,
                      const BlockCache& cache, BlockParams& g) {
  Matrix d_mlp_in = mlp_backward(dout, cache.mlp_in, p.mlp, cache.mlp, g.mlp);
  Matrix dx2 = dout + layer_norm_backward(d_mlp_in, p.ln2, cache.ln2, g.ln2);
  Matrix d_attn_in =
      attention_backward(dx2, cache.attn_in, p.attn, heads, cache.attn, g.attn);
  return dx2 + layer_norm_backward(d_attn_in, p.ln1, cache.ln1, g.ln1);
}

Matrix sincos_axis(Eigen::Index positions, int dim) {
  // dim split into sin/cos halves
  Matrix emb(positions, dim);
  const int half = dim / 2;
  for (int k = 0; k < half; ++k) {
    const double omega =
        1.0 / std::pow(10000.0, static_cast<double>(k) / half);
    for (Eigen::Index p = 0; p < positions; ++p) {
      emb(p, k) = std::sin(static_cast<double>(p) * omega);
      emb(p, half + k) = std::cos(static_cast<double>(p) * omega);
    }
  }
  return emb;
}

const Matrix& pos_embed_cached(Eigen::Index grid_h, Eigen::Index grid_w,
                               int dim) {
  static std::mutex mu;
  static std::map<std::tuple<Eigen::Index, Eigen::Index, int>, Matrix> cache;
  std::scoped_lock lock(mu);
  auto key = std::make_tuple(grid_h, grid_w, dim);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  return cache.emplace(key, sincos_pos_embed_2d(grid_h, grid_w, dim))
      .first->second;
}

void init_linear(Matrix& w, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      w(i, j) = rng.next_uniform(-limit, limit);
}

void init_block(BlockParams& b, Eigen::Index dim, Eigen::Index hidden,
                Rng& rng) {
  b.ln1.gamma = Vector::Ones(dim);
  b.ln1.beta = Vector::Zero(dim);
  b.ln2.gamma = Vector::Ones(dim);
  b.ln2.beta = Vector::Zero(dim);
  for (Matrix* w : {&b.attn.wq, &b.attn.wk, &b.attn.wv, &b.attn.wo}) {
    w->resize(dim, dim);
    init_linear(*w, rng);
  }
  b.attn.bq = Vector::Zero(dim);
  b.attn.bk = Vector::Zero(dim);
  b.attn.bv = Vector::Zero(dim);
  b.attn.bo = Vector::Zero(dim);
  b.mlp.w1.resize(dim, hidden);
  init_linear(b.mlp.w1, rng);
  b.mlp.b1 = Vector::Zero(hidden);
  b.mlp.w2.resize(hidden, dim);
  init_linear(b.mlp.w2, rng);
  b.mlp.b2 = Vector::Zero(dim);
}

void block_refs(std::vector<ParamRef>& out, BlockParams& b,
                const std::string& prefix) {
  auto add = [&](const std::string& name, auto& tensor, bool decay) {
    out.push_back({prefix + name, tensor.data(), tensor.size(), decay});
  };
  add("ln1.gamma", b.ln1.gamma, false);
  add("ln1.beta", b.ln1.beta, false);
  add("attn.wq", b.attn.wq, true);
  add("attn.bq", b.attn.bq, false);
  add("attn.wk", b.attn.wk, true);
  add("attn.bk", b.attn.bk, false);
  add("attn.wv", b.attn.wv, true);
  add("attn.bv", b.attn.bv, false);
  add("attn.wo", b.attn.wo, true);
  add("attn.bo", b.attn.bo, false);
  add("ln2.gamma", b.ln2.gamma, false);
  add("ln2.beta", b.ln2.beta, false);
  add("mlp.w1", b.mlp.w1, true);
  add("mlp.b1", b.mlp.b1, false);
  add("mlp.w2", b.mlp.w2, true);
  add("mlp.b2", b.mlp.b2, false);
}

void zero_block_like(BlockParams& dst, const BlockParams& src) {
  dst.ln1.gamma = Vector::Zero(src.ln1.gamma.size());
  dst.ln1.beta = Vector::Zero(src.ln1.beta.size());
  dst.ln2.gamma = Vector::Zero(src.ln2.gamma.size());
  dst.ln2.beta = Vector::Zero(src.ln2.beta.size());
  dst.attn.wq = Matrix::Zero(src.attn.wq.rows(), src.attn.wq.cols());
  dst.attn.wk = Matrix::Zero(src.attn.wk.rows(), src.attn.wk.cols());
  dst.attn.wv = Matrix::Zero(src.attn.wv.rows(), src.attn.wv.cols());
  dst.attn.wo = Matrix::Zero(src.attn.wo.rows(), src.attn.wo.cols());
  dst.attn.bq = Vector::Zero(src.attn.bq.size());
  dst.attn.bk = Vector::Zero(src.attn.bk.size());
  dst.attn.bv = Vector::Zero(src.attn.bv.size());
  dst.attn.bo = Vector::Zero(src.attn.bo.size());
  dst.mlp.w1 = Matrix::Zero(src.mlp.w1.rows(), src.mlp.w1.cols());
  dst.mlp.w2 = Matrix::Zero(src.mlp.w2.rows(), src.mlp.w2.cols());
  dst.mlp.b1 = Vector::Zero(src.mlp.b1.size());
  dst.mlp.b2 = Vector::Zero(src.mlp.b2.size());
}

}  // namespace

void validate(const ModelConfig& c) {
  if (c.encoder_layers < 0 || c.decoder_layers < 0)
    throw ParameterError("model: layer counts must be >= 0");
  if (c.encoder_dim <= 0 || c.decoder_dim <= 0 || c.token_dim <= 0)
    throw ParameterError("model: dimensions must be positive");
  if (c.encoder_heads <= 0 || c.encoder_dim % c.encoder_heads != 0)
    throw ParameterError("model: encoder_dim must divide by encoder_heads");
  if (c.decoder_heads <= 0 || c.decoder_dim % c.decoder_heads != 0)
    throw ParameterError("model: decoder_dim must divide by decoder_heads");
  if (c.encoder_dim % 4 != 0 || c.decoder_dim % 4 != 0)
    throw ParameterError(
        "model: embedding dims must divide by 4 for 2D positional encodings");
  if (c.mlp_ratio <= 0) throw ParameterError("model: mlp_ratio must be > 0");
  if (mlp_hidden(c.encoder_dim, c.mlp_ratio) < 1 ||
      mlp_hidden(c.decoder_dim, c.mlp_ratio) < 1)
    throw ParameterError("model: MLP hidden width must be >= 1");
}

std::int64_t count_parameters(const ModelConfig& c) {
  validate(c);
  auto block = [&](std::int64_t d) {
    const std::int64_t h = mlp_hidden(static_cast<int>(d), c.mlp_ratio);
    const std::int64_t norms = 2 * 2 * d;
    const std::int64_t attn = 4 * (d * d + d);
    const std::int64_t mlp = d * h + h + h * d + d;
    return norms + attn + mlp;
  };
  const std::int64_t de = c.encoder_dim, dd = c.decoder_dim, td = c.token_dim;
  std::int64_t n = 0;
  n += td * de + de;                  // token embedding
  n += c.encoder_layers * block(de);  // encoder blocks
  n += 2 * de;                        // final encoder norm
  n += de * dd + dd;                  // decoder embedding
  n += dd;                            // mask token
  n += c.decoder_layers * block(dd);  // decoder blocks
  n += 2 * dd;                        // decoder norm
  n += dd * td + td;                  // prediction head
  return n;
}

MaeParams init_params(const ModelConfig& config, std::uint64_t seed) {
  validate(config);
  Rng rng(mix64(seed, 0xC0DEC0DEull));
  MaeParams p;
  p.config = config;

  const Eigen::Index de = config.encoder_dim, dd = config.decoder_dim;
  const Eigen::Index he = mlp_hidden(config.encoder_dim, config.mlp_ratio);
  const Eigen::Index hd = mlp_hidden(config.decoder_dim, config.mlp_ratio);

  p.enc_embed_w.resize(config.token_dim, de);
  init_linear(p.enc_embed_w, rng);
  p.enc_embed_b = Vector::Zero(de);
  p.encoder.resize(static_cast<std::size_t>(config.encoder_layers));
  for (auto& b : p.encoder) init_block(b, de, he, rng);
  p.enc_norm.gamma = Vector::Ones(de);
  p.enc_norm.beta = Vector::Zero(de);

  p.dec_embed_w.resize(de, dd);
  init_linear(p.dec_embed_w, rng);
  p.dec_embed_b = Vector::Zero(dd);
  p.mask_token.resize(dd);
  for (Eigen::Index i = 0; i < dd; ++i)
    p.mask_token(i) = 0.02 * rng.next_normal();
  p.decoder.resize(static_cast<std::size_t>(config.decoder_layers));
  for (auto& b : p.decoder) init_block(b, dd, hd, rng);
  p.dec_norm.gamma = Vector::Ones(dd);
  p.dec_norm.beta = Vector::Zero(dd);
  p.pred_w.resize(dd, config.token_dim);
  init_linear(p.pred_w, rng);
  p.pred_b = Vector::Zero(config.token_dim);
  return p;
}

MaeParams zeros_like(const MaeParams& like) {
  MaeParams z;
  z.config = like.config;
  z.enc_embed_w = Matrix::Zero(like.enc_embed_w.rows(), like.enc_embed_w.cols());
  z.enc_embed_b = Vector::Zero(like.enc_embed_b.size());
  z.encoder.resize(like.encoder.size());
  for (std::size_t i = 0; i < like.encoder.size(); ++i)
    zero_block_like(z.encoder[i], like.encoder[i]);
  z.enc_norm.gamma = Vector::Zero(like.enc_norm.gamma.size());
  z.enc_norm.beta = Vector::Zero(like.enc_norm.beta.size());
  z.dec_embed_w = Matrix::Zero(like.dec_embed_w.rows(), like.dec_embed_w.cols());
  z.dec_embed_b = Vector::Zero(like.dec_embed_b.size());
  z.mask_token = Vector::Zero(like.mask_token.size());
  z.decoder.resize(like.decoder.size());
  for (std::size_t i = 0; i < like.decoder.size(); ++i)
    zero_block_like(z.decoder[i], like.decoder[i]);
  z.dec_norm.gamma = Vector::Zero(like.dec_norm.gamma.size());
  z.dec_norm.beta = Vector::Zero(like.dec_norm.beta.size());
  z.pred_w = Matrix::Zero(like.pred_w.rows(), like.pred_w.cols());
  z.pred_b = Vector::Zero(like.pred_b.size());
  return z;
}

std::vector<ParamRef> parameter_refs(MaeParams& p) {
  std::vector<ParamRef> out;
  auto add = [&](const std::string& name, auto& tensor, bool decay) {
    out.push_back({name, tensor.data(), tensor.size(), decay});
  };
  add("enc_embed.w", p.enc_embed_w, true);
  add("enc_embed.b", p.enc_embed_b, false);
  for (std::size_t i = 0; i < p.encoder.size(); ++i)
    block_refs(out, p.encoder[i], "encoder." + std::to_string(i) + ".");
  add("enc_norm.gamma", p.enc_norm.gamma, false);
  add("enc_norm.beta", p.enc_norm.beta, false);
  add("dec_embed.w", p.dec_embed_w, true);
  add("dec_embed.b", p.dec_embed_b, false);
  add("mask_token", p.mask_token, false);
  for (std::size_t i = 0; i < p.decoder.size(); ++i)
    block_refs(out, p.decoder[i], "decoder." + std::to_string(i) + ".");
  add("dec_norm.gamma", p.dec_norm.gamma, false);
  add("dec_norm.beta", p.dec_norm.beta, false);
  add("pred.w", p.pred_w, true);
  add("pred.b", p.pred_b, false);
  return out;
}

std::vector<ParamRef> parameter_refs(const MaeParams& p) {
  return parameter_refs(const_cast<MaeParams&>(p));
}

Matrix sincos_pos_embed_2d(Eigen::Index grid_h, Eigen::Index grid_w, int dim) {
  if (dim % 4 != 0)
    throw ParameterError("pos_embed: dim must be divisible by 4");
  const Matrix emb_h = sincos_axis(grid_h, dim / 2);
  const Matrix emb_w = sincos_axis(grid_w, dim / 2);
  Matrix out(grid_h * grid_w, dim);
  for (Eigen::Index i = 0; i < grid_h; ++i)
    for (Eigen::Index j = 0; j < grid_w; ++j) {
      const Eigen::Index k = i * grid_w + j;
      out.row(k).head(dim / 2) = emb_h.row(i);
      out.row(k).tail(dim / 2) = emb_w.row(j);
    }
  return out;
}

ReconstructionOutput forward(const TokenGrid& grid,
                             const MaskRealization& mask,
                             const MaeParams& params, ForwardCache* cache,
                             ForwardTrace* trace,
                             const std::vector<Eigen::Index>* visible_order) {
  const ModelConfig& c = params.config;
  const Eigen::Index L = grid.token_count();
  if (grid.tokens.cols() != c.token_dim)
    throw ShapeError("forward: token width differs from config token_dim");
  if (static_cast<Eigen::Index>(mask.visible.size()) != L)
    throw ShapeError("forward: mask length differs from token count");

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;

  cc.visible.clear();
  cc.hidden.clear();
  for (Eigen::Index t = 0; t < L; ++t)
    (mask.visible[static_cast<std::size_t>(t)] ? cc.visible : cc.hidden)
        .push_back(t);
  if (visible_order) {
    if (visible_order->size() != cc.visible.size())
      throw ShapeError("forward: visible_order size mismatch");
    std::vector<Eigen::Index> sorted = *visible_order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != cc.visible)
      throw ParameterError("forward: visible_order is not the visible set");
    cc.visible = *visible_order;
  }
  const Eigen::Index n_vis = static_cast<Eigen::Index>(cc.visible.size());
  if (trace) {
    trace->encoder_tokens = n_vis;
    trace->decoder_tokens = L;
  }

  const Matrix& enc_pos = pos_embed_cached(grid.grid_h, grid.grid_w,
                                           c.encoder_dim);
  const Matrix& dec_pos = pos_embed_cached(grid.grid_h, grid.grid_w,
                                           c.decoder_dim);

  cc.enc_in.resize(n_vis, c.token_dim);
  for (Eigen::Index t = 0; t < n_vis; ++t)
    cc.enc_in.row(t) = grid.tokens.row(cc.visible[static_cast<std::size_t>(t)]);

  Matrix h = affine(cc.enc_in, params.enc_embed_w, params.enc_embed_b);
  for (Eigen::Index t = 0; t < n_vis; ++t)
    h.row(t) += enc_pos.row(cc.visible[static_cast<std::size_t>(t)]);

  cc.enc_blocks.resize(params.encoder.size());
  for (std::size_t i = 0; i < params.encoder.size(); ++i)
    h = block_forward(h, params.encoder[i], c.encoder_heads, cc.enc_blocks[i]);
  cc.enc_out = layer_norm_forward(h, params.enc_norm, cc.enc_norm);

  Matrix dec_vis = affine(cc.enc_out, params.dec_embed_w, params.dec_embed_b);
  Matrix d(L, c.decoder_dim);
  for (Eigen::Index t = 0; t < L; ++t) d.row(t) = params.mask_token.transpose();
  for (Eigen::Index t = 0; t < n_vis; ++t)
    d.row(cc.visible[static_cast<std::size_t>(t)]) = dec_vis.row(t);
  d += dec_pos;
  cc.dec_in = d;

  cc.dec_blocks.resize(params.decoder.size());
  for (std::size_t i = 0; i < params.decoder.size(); ++i)
    d = block_forward(d, params.decoder[i], c.decoder_heads, cc.dec_blocks[i]);
  cc.dec_out = layer_norm_forward(d, params.dec_norm, cc.dec_norm);

  ReconstructionOutput out;
  out.predicted_tokens = affine(cc.dec_out, params.pred_w, params.pred_b);
  out.mask = mask;
  return out;
}

double masked_mse(const Matrix& predicted_tokens, const Matrix& target_tokens,
                  const std::vector<std::uint8_t>& visible,
                  const std::vector<std::uint8_t>& valid_elements) {
  Matrix unused;
  return masked_mse_with_grad(predicted_tokens, target_tokens, visible,
                              valid_elements, unused);
}

double masked_mse_with_grad(const Matrix& predicted_tokens,
                            const Matrix& target_tokens,
                            const std::vector<std::uint8_t>& visible,
                            const std::vector<std::uint8_t>& valid_elements,
                            Matrix& dpred) {
  const Eigen::Index L = predicted_tokens.rows();
  const Eigen::Index w = predicted_tokens.cols();
  if (target_tokens.rows() != L || target_tokens.cols() != w)
    throw ShapeError("masked_mse: prediction/target shapes differ");
  if (static_cast<Eigen::Index>(visible.size()) != L)
    throw ShapeError("masked_mse: visibility length mismatch");
  if (static_cast<Eigen::Index>(valid_elements.size()) != L * w)
    throw ShapeError("masked_mse: validity length mismatch");

  dpred = Matrix::Zero(L, w);
  double sum = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index t = 0; t < L; ++t) {
    if (visible[static_cast<std::size_t>(t)]) continue;
    for (Eigen::Index cidx = 0; cidx < w; ++cidx) {
      if (!valid_elements[static_cast<std::size_t>(t * w + cidx)]) continue;
      const double diff = predicted_tokens(t, cidx) - target_tokens(t, cidx);
      sum += diff * diff;
      dpred(t, cidx) = diff;  // scaled by 2/count below
      ++count;
    }
  }
  if (count == 0) {
    dpred.setZero();
    return 0.0;
  }
  dpred *= 2.0 / static_cast<double>(count);
  return sum / static_cast<double>(count);
}

void backward(const MaskRealization& mask, const MaeParams& params,
              const ForwardCache& cache, const Matrix& dpred,
              MaeParams& grads) {
  const ModelConfig& c = params.config;
  const Eigen::Index L = dpred.rows();
  const Eigen::Index n_vis = static_cast<Eigen::Index>(cache.visible.size());
  if (static_cast<Eigen::Index>(mask.visible.size()) != L)
    throw ShapeError("backward: mask length differs from prediction rows");

  // prediction head
  grads.pred_w.noalias() += cache.dec_out.transpose() * dpred;
  grads.pred_b += dpred.colwise().sum().transpose();
  Matrix d = dpred * params.pred_w.transpose();

  d = layer_norm_backward(d, params.dec_norm, cache.dec_norm, grads.dec_norm);
  for (std::size_t i = params.decoder.size(); i-- > 0;)
    d = block_backward(d, params.decoder[i], c.decoder_heads,
                       cache.dec_blocks[i], grads.decoder[i]);

  // split decoder-input gradient into mask-token and projected-visible parts
  for (auto t : cache.hidden) grads.mask_token += d.row(t).transpose();
  Matrix d_dec_vis(n_vis, c.decoder_dim);
  for (Eigen::Index t = 0; t < n_vis; ++t)
    d_dec_vis.row(t) = d.row(cache.visible[static_cast<std::size_t>(t)]);

  grads.dec_embed_w.noalias() += cache.enc_out.transpose() * d_dec_vis;
  grads.dec_embed_b += d_dec_vis.colwise().sum().transpose();
  Matrix de = d_dec_vis * params.dec_embed_w.transpose();

  de = layer_norm_backward(de, params.enc_norm, cache.enc_norm, grads.enc_norm);
  for (std::size_t i = params.encoder.size(); i-- > 0;)
    de = block_backward(de, params.encoder[i], c.encoder_heads,
                        cache.enc_blocks[i], grads.encoder[i]);

  grads.enc_embed_w.noalias() += cache.enc_in.transpose() * de;
  grads.enc_embed_b += de.colwise().sum().transpose();
}

}  // namespace cumolos
