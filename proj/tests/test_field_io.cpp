#include <doctest.h>

#include <cmath>
#include <fstream>

#include "cumolos/errors.hpp"
#include "cumolos/field_io.hpp"
#include "cumolos/patching.hpp"
#include "cumolos/synthetic.hpp"
#include "test_helpers.hpp"

using namespace cumolos;
using testutil::TempDir;

namespace {

// float32-exact values so container roundtrips compare bit-for-bit
Matrix f32_exact_matrix(Eigen::Index rows, Eigen::Index cols,
                        std::uint64_t seed) {
  Matrix m = testutil::random_matrix(rows, cols, seed, -8.0, 8.0);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = static_cast<double>(static_cast<float>(m(i, j)));
  return m;
}

TimeHeightField paper_shape_field() {
  TimeHeightField f;
  f.velocity = f32_exact_matrix(5760, 320, 1);
  f.intensity = f32_exact_matrix(5760, 320, 2).cwiseAbs();
  f.time_step_s = 1.25;
  f.gate_spacing_m = 30.0;
  return f;
}

}  // namespace

TEST_CASE("cmls roundtrip preserves a (5760, 320) field") {
  TempDir tmp("cmls_roundtrip");
  const TimeHeightField f = paper_shape_field();
  const auto path = tmp.path / "field.cmls";
  save_field_cmls(f, path);

  const TimeHeightField r = load_field(path);
  CHECK(r.time_count() == 5760);
  CHECK(r.gate_count() == 320);
  CHECK((r.velocity - f.velocity).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.intensity - f.intensity).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.time_step_s == doctest::Approx(1.25));
  CHECK(r.gate_spacing_m == doctest::Approx(30.0));
}

TEST_CASE("hdf5 roundtrip preserves data and metadata") {
  TempDir tmp("h5_roundtrip");
  TimeHeightField f;
  f.velocity = f32_exact_matrix(96, 40, 3);
  f.intensity = f32_exact_matrix(96, 40, 4).cwiseAbs();
  f.time_step_s = 2.0;
  f.gate_spacing_m = 30.0;
  f.start_time = 1234.5;
  const auto path = tmp.path / "field.h5";
  save_field_hdf5(f, path);

  const TimeHeightField r = load_field(path);
  CHECK(r.time_count() == 96);
  CHECK(r.gate_count() == 40);
  CHECK((r.velocity - f.velocity).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.time_step_s == doctest::Approx(2.0));
  CHECK(r.gate_spacing_m == doctest::Approx(30.0));
  CHECK(r.start_time == doctest::Approx(1234.5));
}

TEST_CASE("load_field: missing variable raises a named-variable error") {
  TempDir tmp("h5_missing_var");
  TimeHeightField f;
  f.velocity = Matrix::Zero(8, 4);
  f.intensity = Matrix::Zero(8, 4);
  const auto path = tmp.path / "field.h5";
  save_field_hdf5(f, path);

  VariableNames wrong;
  wrong.intensity = "does_not_exist";
  CHECK_THROWS_AS(load_field(path, wrong), NamedVariableError);
}

TEST_CASE("load_field: 1-D variable raises a shape error") {
  TempDir tmp("h5_bad_rank");
  TimeHeightField f;
  f.velocity = Matrix::Zero(8, 4);
  f.intensity = Matrix::Zero(8, 4);
  const auto path = tmp.path / "field.h5";
  save_field_hdf5(f, path);

  // the 1-D time coordinate exists; pointing velocity at it must fail
  VariableNames names;
  names.velocity = "time";
  CHECK_THROWS_AS(load_field(path, names), ShapeError);
}

TEST_CASE("load_field: unreadable or unrecognized files raise IoError") {
  TempDir tmp("bad_files");
  CHECK_THROWS_AS(load_field(tmp.path / "missing.cmls"), IoError);

  const auto garbage = tmp.path / "garbage.bin";
  std::ofstream(garbage, std::ios::binary) << "not a field file at all";
  CHECK_THROWS_AS(load_field(garbage), IoError);
}

TEST_CASE("preprocess: clamp, threshold, and boundary inclusivity") {
  TimeHeightField f;
  f.velocity.resize(1, 3);
  f.intensity.resize(1, 3);
  f.velocity << 7.2, 1.0, -5.0;
  f.intensity << 0.01, 0.004, 0.005;

  const TimeHeightField p = preprocess(f);
  CHECK(p.velocity(0, 0) == 5.0);  // clamped upper bound
  CHECK(p.valid(0, 0) == 1);
  CHECK(p.valid(0, 1) == 0);  // below threshold
  CHECK(p.velocity(0, 1) == 0.0);
  CHECK(p.valid(0, 2) == 1);  // threshold is inclusive
  CHECK(p.velocity(0, 2) == -5.0);
}

TEST_CASE("preprocess: NaN velocity behaves like an intensity-0 pixel") {
  TimeHeightField f;
  f.velocity = Matrix::Constant(2, 2, 1.0);
  f.intensity = Matrix::Constant(2, 2, 1.0);
  f.velocity(0, 1) = std::nan("");
  const TimeHeightField p = preprocess(f);
  CHECK(p.valid(0, 1) == 0);
  CHECK(p.velocity(0, 1) == 0.0);
  CHECK(p.valid(0, 0) == 1);
}

TEST_CASE("preprocess is idempotent") {
  const TimeHeightField f =
      generate_synthetic(testutil::small_synth_spec(), 9);
  const TimeHeightField once = preprocess(f);
  const TimeHeightField twice = preprocess(once);
  CHECK((once.velocity - twice.velocity).cwiseAbs().maxCoeff() == 0.0);
  CHECK((once.valid == twice.valid));
}

TEST_CASE("preprocess rejects a negative threshold") {
  TimeHeightField f;
  f.velocity = Matrix::Zero(1, 1);
  f.intensity = Matrix::Zero(1, 1);
  CHECK_THROWS_AS(preprocess(f, -0.1), ParameterError);
}

TEST_CASE("extract_patches: counts, remainder, and normalization") {
  TimeHeightField f;
  f.velocity = Matrix::Constant(5760, 320, 5.0);
  f.intensity = Matrix::Constant(5760, 320, 1.0);
  const TimeHeightField p = preprocess(f);

  const auto patches = extract_patches(p, 64, 64, 64);
  CHECK(patches.size() == 90);  // floor(5760/64) * floor(64/64)
  for (const auto& patch : patches) {
    CHECK(patch.values.rows() == 64);
    CHECK(patch.values.cols() == 64);
    CHECK(patch.g_origin + 64 <= 64);
    CHECK((patch.values.array() == 1.0).all());  // 5 / 5
    CHECK((patch.validity.array() == 1).all());
  }
}

TEST_CASE("extract_patches: window larger than field is a shape error") {
  TimeHeightField f;
  f.velocity = Matrix::Zero(63, 64);
  f.intensity = Matrix::Ones(63, 64);
  const TimeHeightField p = preprocess(f);
  CHECK_THROWS_AS(extract_patches(p, 64, 64, 64), ShapeError);
}

TEST_CASE("extract_patches: tiling partitions the retained sub-field") {
  const TimeHeightField f =
      preprocess(generate_synthetic(testutil::small_synth_spec(), 21));
  const auto patches = extract_patches(f, 64, 64, 64);
  REQUIRE(patches.size() == 4);  // 256/64 x 64/64

  // each retained pixel appears in exactly one patch
  BoolMatrix covered = BoolMatrix::Zero(256, 64);
  for (const auto& p : patches)
    for (Eigen::Index i = 0; i < 64; ++i)
      for (Eigen::Index j = 0; j < 64; ++j) {
        CHECK(covered(p.t_origin + i, p.g_origin + j) == 0);
        covered(p.t_origin + i, p.g_origin + j) = 1;
      }
  CHECK((covered.cast<int>().sum()) == 256 * 64);

  // inverse tiling reproduces the preprocessed sub-field exactly
  std::vector<Matrix> arrays;
  for (const auto& p : patches) arrays.push_back(p.values * 5.0);
  const Matrix back = reassemble_patches(arrays, patches);
  CHECK((back - f.velocity.topLeftCorner(256, 64)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("extract_patches: no NaN escapes even from raw fields") {
  TimeHeightField f;
  f.velocity = Matrix::Constant(64, 64, 1.0);
  f.intensity = Matrix::Constant(64, 64, 1.0);
  f.velocity(3, 7) = std::nan("");
  f.velocity(10, 2) = std::numeric_limits<double>::infinity();
  const auto patches = extract_patches(f, 64, 64, 64);  // not preprocessed
  REQUIRE(patches.size() == 1);
  CHECK(patches[0].values.allFinite());
  CHECK(patches[0].validity(3, 7) == 0);
  CHECK(patches[0].values(3, 7) == 0.0);
  CHECK(patches[0].validity(10, 2) == 0);
}

TEST_CASE("normalization roundtrip is exact on the clamp interval") {
  for (double v : {-5.0, -1.25, 0.0, 0.3, 4.999, 5.0})
    CHECK(denormalize_velocity(normalize_velocity(v)) == v);
}

TEST_CASE("generate_synthetic is deterministic and seed-sensitive") {
  const SyntheticSpec spec = testutil::small_synth_spec();
  const TimeHeightField a = generate_synthetic(spec, 5);
  const TimeHeightField b = generate_synthetic(spec, 5);
  CHECK((a.velocity - b.velocity).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.intensity - b.intensity).cwiseAbs().maxCoeff() == 0.0);
  const TimeHeightField c = generate_synthetic(spec, 6);
  CHECK((a.velocity - c.velocity).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generate_synthetic: corruption-free spec reproduces the template") {
  SyntheticSpec clean = testutil::small_synth_spec();
  clean.noise_sigma = 0.0;
  clean.dropout_fraction = 0.0;
  const TimeHeightField t1 = generate_synthetic(clean, 13);
  const TimeHeightField t2 = generate_synthetic(clean, 13);
  CHECK((t1.velocity - t2.velocity).cwiseAbs().maxCoeff() == 0.0);

  // the corrupted field differs from the template only by noise and dropout
  SyntheticSpec noisy = clean;
  noisy.noise_sigma = 0.3;
  const TimeHeightField n = generate_synthetic(noisy, 13);
  const Matrix diff = n.velocity - t1.velocity;
  CHECK(diff.cwiseAbs().maxCoeff() > 0.0);
  CHECK(diff.cwiseAbs().maxCoeff() < 0.3 * 6.0);  // bounded gaussian tails
  CHECK(std::abs(diff.mean()) < 0.02);
  const double sd = std::sqrt((diff.array() - diff.mean()).square().mean());
  CHECK(sd == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("generate_synthetic: dropout fraction is honored") {
  SyntheticSpec spec = testutil::small_synth_spec();
  spec.dropout_fraction = 0.2;
  const TimeHeightField f = generate_synthetic(spec, 17);
  Eigen::Index low = 0;
  for (Eigen::Index j = 0; j < f.gate_count(); ++j)
    for (Eigen::Index i = 0; i < f.time_count(); ++i)
      if (f.intensity(i, j) < 0.005) ++low;
  const double frac = double(low) / double(f.intensity.size());
  CHECK(frac >= 0.18);
  CHECK(frac <= 0.22);
}

TEST_CASE("generate_synthetic rejects bad specs") {
  SyntheticSpec spec;
  spec.time_count = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ParameterError);
  spec = SyntheticSpec{};
  spec.dropout_fraction = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), ParameterError);
}

TEST_CASE("array-pair container roundtrip") {
  TempDir tmp("pair_io");
  const Matrix a = f32_exact_matrix(16, 8, 5);
  const Matrix b = f32_exact_matrix(16, 8, 6);
  const auto path = tmp.path / "pair.cmls";
  save_array_pair_cmls(a, b, 1.0, 30.0, path);
  const auto [ra, rb] = load_array_pair_cmls(path);
  CHECK((ra - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((rb - b).cwiseAbs().maxCoeff() == 0.0);
}
