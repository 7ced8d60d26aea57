#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "cumolos/errors.hpp"
#include "cumolos/patching.hpp"
#include "test_helpers.hpp"

using namespace cumolos;

TEST_CASE("tokenize: 64x64 patch yields a 32x32 grid of 1024 tokens") {
  const Matrix patch = testutil::random_matrix(64, 64, 11);
  const TokenGrid grid = tokenize(patch);
  CHECK(grid.token_count() == 1024);
  CHECK(grid.grid_h == 32);
  CHECK(grid.grid_w == 32);
  CHECK(grid.tokens.cols() == 4);
}

TEST_CASE("tokenize: 4x4 patch of 0..15 puts (0,1,4,5) in token 0") {
  Matrix patch(4, 4);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) patch(i, j) = double(4 * i + j);
  const TokenGrid grid = tokenize(patch);
  REQUIRE(grid.token_count() == 4);
  CHECK(grid.tokens(0, 0) == 0.0);
  CHECK(grid.tokens(0, 1) == 1.0);
  CHECK(grid.tokens(0, 2) == 4.0);
  CHECK(grid.tokens(0, 3) == 5.0);
  // row-major micro-patch order: token 1 covers columns 2..3 of rows 0..1
  CHECK(grid.tokens(1, 0) == 2.0);
  CHECK(grid.tokens(3, 3) == 15.0);
}

TEST_CASE("tokenize/untokenize roundtrip is the identity") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix patch = testutil::random_matrix(16, 24, seed);
    const Matrix back = untokenize(tokenize(patch));
    CHECK((back - patch).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("tokenize rejects odd dimensions") {
  CHECK_THROWS_AS(tokenize(Matrix::Zero(63, 64)), ShapeError);
  CHECK_THROWS_AS(tokenize(Matrix::Zero(64, 7)), ShapeError);
}

TEST_CASE("untokenize: zero grid and single-token placement") {
  TokenGrid grid;
  grid.grid_h = 3;
  grid.grid_w = 2;
  grid.tokens = Matrix::Zero(6, 4);
  CHECK(untokenize(grid).isZero(0));

  grid.tokens(0, 0) = 1;
  grid.tokens(0, 1) = 2;
  grid.tokens(0, 2) = 3;
  grid.tokens(0, 3) = 4;
  const Matrix out = untokenize(grid);
  CHECK(out(0, 0) == 1);
  CHECK(out(0, 1) == 2);
  CHECK(out(1, 0) == 3);
  CHECK(out(1, 1) == 4);
  CHECK(out.cwiseAbs().sum() == 10);

  grid.grid_h = 4;  // now inconsistent with 6 tokens
  CHECK_THROWS_AS(untokenize(grid), ShapeError);
}

TEST_CASE("tokenize_mask matches tokenize's pixel layout") {
  BoolMatrix mask = BoolMatrix::Zero(4, 4);
  mask(0, 1) = 1;
  mask(1, 0) = 1;
  const auto flat = tokenize_mask(mask);
  REQUIRE(flat.size() == 16);
  CHECK(flat[0] == 0);
  CHECK(flat[1] == 1);
  CHECK(flat[2] == 1);
  CHECK(flat[3] == 0);
  for (std::size_t k = 4; k < 16; ++k) CHECK(flat[k] == 0);
}

TEST_CASE("sample_mask hides exactly round(ratio*L) tokens") {
  const MaskRealization m = sample_mask(1024, 0.7, 42);
  CHECK(m.hidden_count() == 717);
  CHECK(m.visible_count() == 307);

  // exactness over a grid of lengths and ratios
  for (Eigen::Index len : {1, 7, 16, 100, 1024, 4096}) {
    for (double ratio : {0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 0.999}) {
      const auto mask = sample_mask(len, ratio, 7);
      CHECK(mask.hidden_count() == std::llround(ratio * double(len)));
    }
  }
}

TEST_CASE("sample_mask: ratio 0 leaves everything visible") {
  const MaskRealization m = sample_mask(64, 0.0, 5);
  CHECK(m.hidden_count() == 0);
}

TEST_CASE("sample_mask determinism and seed sensitivity") {
  const auto a = sample_mask(512, 0.7, 123);
  const auto b = sample_mask(512, 0.7, 123);
  CHECK(a.visible == b.visible);
  const auto c = sample_mask(512, 0.7, 124);
  CHECK(a.visible != c.visible);
}

TEST_CASE("sample_mask rejects bad arguments") {
  CHECK_THROWS_AS(sample_mask(0, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(sample_mask(16, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(sample_mask(16, -0.1, 1), ParameterError);
}

TEST_CASE("sample_mask uniformity smoke: per-token hidden frequency") {
  const Eigen::Index L = 16;
  const int draws = 10000;
  std::vector<int> hidden_counts(static_cast<std::size_t>(L), 0);
  for (int d = 0; d < draws; ++d) {
    const auto m = sample_mask(L, 0.5, static_cast<std::uint64_t>(d));
    for (Eigen::Index t = 0; t < L; ++t)
      if (!m.visible[static_cast<std::size_t>(t)])
        ++hidden_counts[static_cast<std::size_t>(t)];
  }
  for (int c : hidden_counts) {
    const double freq = double(c) / draws;
    CHECK(freq == doctest::Approx(0.5).epsilon(0.04));  // 0.5 +- 0.02
    CHECK(std::abs(freq - 0.5) <= 0.02);
  }
}

TEST_CASE("mask_ratio_at: holds, ramp values, and terminal hold") {
  const CurriculumSchedule s;
  CHECK(mask_ratio_at(s, 0) == 0.5);
  CHECK(mask_ratio_at(s, 4) == 0.5);
  CHECK(mask_ratio_at(s, 5) == 0.5);  // ramp starts at its left endpoint
  CHECK(mask_ratio_at(s, 30) == 0.7);
  CHECK(mask_ratio_at(s, 499) == 0.7);

  // frozen half-cosine values, independently evaluated from the stated form
  CHECK(mask_ratio_at(s, 17) == doctest::Approx(0.5937209480470687).epsilon(1e-12));
  CHECK(mask_ratio_at(s, 18) == doctest::Approx(0.6062790519529313).epsilon(1e-12));
  CHECK(mask_ratio_at(s, 17) + mask_ratio_at(s, 18) ==
        doctest::Approx(1.2).epsilon(1e-12));

  for (int e = 5; e < 30; ++e) {
    const double direct =
        0.5 + 0.2 * (1.0 - std::cos(std::numbers::pi * (e - 5) / 25.0)) / 2.0;
    CHECK(mask_ratio_at(s, e) == doctest::Approx(direct).epsilon(1e-15));
  }
}

TEST_CASE("mask_ratio_at is monotone non-decreasing") {
  const CurriculumSchedule s;
  double prev = mask_ratio_at(s, 0);
  for (int e = 1; e <= 500; ++e) {
    const double cur = mask_ratio_at(s, e);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("mask_ratio_at: disabled schedule is fixed at r_end") {
  CurriculumSchedule s;
  s.enabled = false;
  for (int e : {0, 3, 17, 100}) CHECK(mask_ratio_at(s, e) == 0.7);
}

TEST_CASE("mask_ratio_at rejects invalid input") {
  const CurriculumSchedule s;
  CHECK_THROWS_AS(mask_ratio_at(s, -1), ParameterError);
  CurriculumSchedule bad = s;
  bad.r_end = 1.0;
  CHECK_THROWS_AS(mask_ratio_at(bad, 0), ParameterError);
  bad = s;
  bad.hold_epochs = 30;
  CHECK_THROWS_AS(mask_ratio_at(bad, 0), ParameterError);
}
