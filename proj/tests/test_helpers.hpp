#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cumolos/field.hpp"
#include "cumolos/model.hpp"
#include "cumolos/rng.hpp"
#include "cumolos/synthetic.hpp"

namespace testutil {

using namespace cumolos;

/// Unique scratch directory under the build tree, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path() / "cumolos_tests";
    std::filesystem::create_directories(base);
    for (int k = 0;; ++k) {
      auto candidate = base / (tag + "_" + std::to_string(k));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline ModelConfig tiny_model_config() {
  ModelConfig c;
  c.encoder_layers = 2;
  c.decoder_layers = 1;
  c.encoder_dim = 16;
  c.decoder_dim = 16;
  c.encoder_heads = 2;
  c.decoder_heads = 2;
  c.mlp_ratio = 2.0;
  return c;
}

/// The gradient-check configuration named in the contract: width 8, one
/// layer on each side, four tokens.
inline ModelConfig gradcheck_model_config() {
  ModelConfig c;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.encoder_dim = 8;
  c.decoder_dim = 8;
  c.encoder_heads = 2;
  c.decoder_heads = 2;
  c.mlp_ratio = 2.0;
  return c;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::uint64_t seed, double lo = -1.0,
                            double hi = 1.0) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.next_uniform(lo, hi);
  return m;
}

inline PatchSample random_patch(Eigen::Index h, Eigen::Index w,
                                std::uint64_t seed) {
  PatchSample p;
  p.values = random_matrix(h, w, seed);
  p.validity = BoolMatrix::Constant(h, w, 1);
  return p;
}

inline SyntheticSpec small_synth_spec() {
  SyntheticSpec spec;
  spec.time_count = 256;
  spec.gate_count = 64;
  spec.blob_count = 12;
  spec.shear_band_count = 2;
  return spec;
}

}  // namespace testutil
