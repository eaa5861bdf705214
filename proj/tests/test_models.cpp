#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "support/test_util.hpp"
#include "tdopt/models.hpp"

using namespace tdopt;

namespace {

ModelSpec cp_spec(std::size_t i, std::size_t j, std::size_t k, std::size_t r) {
  return ModelSpec{Family::Cp, {i, j, k}, r, 0};
}

ModelSpec dedicom_spec(std::size_t i, std::size_t k, std::size_t r) {
  return ModelSpec{Family::Dedicom, {i, i, k}, r, 0};
}

ModelSpec paratuck2_spec(std::size_t i, std::size_t j, std::size_t k, std::size_t p,
                         std::size_t q) {
  return ModelSpec{Family::Paratuck2, {i, j, k}, p, q};
}

Factors random_factors(const ModelSpec& spec, testutil::Rng& rng) {
  const auto i = static_cast<Eigen::Index>(spec.dims[0]);
  const auto j = static_cast<Eigen::Index>(spec.dims[1]);
  const auto k = static_cast<Eigen::Index>(spec.dims[2]);
  const auto r = static_cast<Eigen::Index>(spec.rank);
  switch (spec.family) {
    case Family::Cp:
      return CpFactors{rng.matrix(i, r), rng.matrix(j, r), rng.matrix(k, r)};
    case Family::Dedicom:
      return DedicomFactors{rng.matrix(i, r), rng.matrix(r, r), rng.matrix(r, k)};
    case Family::Paratuck2: {
      const auto q = static_cast<Eigen::Index>(spec.rank_q);
      return Paratuck2Factors{rng.matrix(i, r), rng.matrix(r, k), rng.matrix(r, q),
                              rng.matrix(q, k), rng.matrix(j, q)};
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("param_count per family") {
  CHECK(param_count(cp_spec(2, 3, 4, 2)) == 18);
  CHECK(param_count(dedicom_spec(3, 2, 2)) == 3 * 2 + 4 + 2 * 2);
  CHECK(param_count(paratuck2_spec(2, 3, 4, 2, 3)) == 4 + 8 + 6 + 12 + 9);
  ModelSpec bad{Family::Dedicom, {3, 4, 2}, 2, 0};
  CHECK_THROWS_AS(param_count(bad), std::invalid_argument);
}

TEST_CASE("cp reconstruct with one component is the outer product") {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 1, 2;
  b << 1, 1;
  c << 1, 0;
  CpFactors f{a, b, c};
  DenseTensor got = reconstruct(f);
  DenseTensor expect = rank_one({a, b, c});
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(got.data()[i] == expect.data()[i]);
}

TEST_CASE("dedicom identity factors give identity slices") {
  const std::size_t n = 3, k = 2;
  DedicomFactors f{Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n),
                   Eigen::MatrixXd::Ones(n, k)};
  DenseTensor t = reconstruct(f);
  for (std::size_t s = 0; s < k; ++s)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(t(i, j, s) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("paratuck2 with identity wings reproduces the core") {
  Eigen::MatrixXd h(2, 2);
  h << 1, 2, 3, 4;
  Paratuck2Factors f{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Ones(2, 3), h,
                     Eigen::MatrixXd::Ones(2, 3), Eigen::MatrixXd::Identity(2, 2)};
  DenseTensor t = reconstruct(f);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        CHECK(t(i, j, s) == h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

TEST_CASE("loss basics") {
  testutil::Rng rng(3);
  ModelSpec spec = cp_spec(2, 2, 2, 2);
  Factors f = random_factors(spec, rng);
  ParamVector x = pack(spec, f);
  DenseTensor exact = reconstruct(x);
  CHECK(loss(x, exact) == 0.0);

  ParamVector zero{spec, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count(spec)))};
  CHECK(loss(zero, exact) == doctest::Approx(frobenius_norm(exact)).epsilon(1e-14));

  // Single unit component against an all-ones target leaves seven unit residuals.
  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  ParamVector unit = pack(cp_spec(2, 2, 2, 1), CpFactors{e1, e1, e1});
  DenseTensor ones({2, 2, 2}, std::vector<double>(8, 1.0));
  CHECK(loss(unit, ones) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-14));

  DenseTensor wrong({2, 2, 3});
  CHECK_THROWS_AS(loss(unit, wrong), std::invalid_argument);
}

TEST_CASE("pack layouts") {
  Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1);
  a << 2;
  b << 3;
  c << 4;
  ParamVector x = pack(cp_spec(1, 1, 1, 1), CpFactors{a, b, c});
  REQUIRE(x.values.size() == 3);
  CHECK(x.values[0] == 2);
  CHECK(x.values[1] == 3);
  CHECK(x.values[2] == 4);

  Eigen::MatrixXd da(1, 1), dh(1, 1), dd(1, 2);
  da << 5;
  dh << 6;
  dd << 7, 8;
  ParamVector y = pack(dedicom_spec(1, 2, 1), DedicomFactors{da, dh, dd});
  REQUIRE(y.values.size() == 4);
  CHECK(y.values[0] == 5);
  CHECK(y.values[1] == 6);
  CHECK(y.values[2] == 7);
  CHECK(y.values[3] == 8);
}

TEST_CASE("pack/unpack round trips are exact") {
  const std::vector<ModelSpec> specs{cp_spec(3, 4, 2, 2), dedicom_spec(3, 4, 2),
                                     paratuck2_spec(3, 4, 2, 2, 3)};
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    testutil::Rng rng(seed);
    for (const auto& spec : specs) {
      Factors f = random_factors(spec, rng);
      ParamVector x = pack(spec, f);
      REQUIRE(static_cast<std::size_t>(x.values.size()) == param_count(spec));
      ParamVector x2 = pack(spec, unpack(x));
      REQUIRE(x2.values.size() == x.values.size());
      for (Eigen::Index i = 0; i < x.values.size(); ++i) REQUIRE(x2.values[i] == x.values[i]);

      DenseTensor t1 = reconstruct(x);
      DenseTensor t2 = reconstruct(x2);
      for (std::size_t i = 0; i < t1.size(); ++i) REQUIRE(t1.data()[i] == t2.data()[i]);
    }
  }
}

TEST_CASE("init_random is deterministic, seed-sensitive, in range") {
  ModelSpec spec = paratuck2_spec(3, 4, 2, 2, 3);
  ParamVector a = init_random(spec, 42);
  ParamVector b = init_random(spec, 42);
  ParamVector c = init_random(spec, 43);
  REQUIRE(static_cast<std::size_t>(a.values.size()) == param_count(spec));
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  for (Eigen::Index i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] >= 0.0);
    CHECK(a.values[i] < 1.0);
  }
}

TEST_CASE("cp scale indeterminacy") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testutil::Rng rng(seed);
    ModelSpec spec = cp_spec(3, 4, 2, 3);
    CpFactors f = std::get<CpFactors>(random_factors(spec, rng));
    DenseTensor base = reconstruct(f);
    const double c = 3.75;
    f.a.col(1) *= c;
    f.b.col(1) /= c;
    DenseTensor scaled = reconstruct(f);
    double ref = frobenius_norm(base);
    for (std::size_t i = 0; i < base.size(); ++i)
      REQUIRE(std::abs(base.data()[i] - scaled.data()[i]) <= 1e-10 * (1.0 + ref));
  }
}

TEST_CASE("dedicom slices are symmetric when the core is symmetric") {
  testutil::Rng rng(11);
  ModelSpec spec = dedicom_spec(4, 3, 2);
  DedicomFactors f = std::get<DedicomFactors>(random_factors(spec, rng));
  f.h = (f.h + f.h.transpose()).eval();
  DenseTensor t = reconstruct(f);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        CHECK(t(i, j, k) == doctest::Approx(t(j, i, k)).epsilon(1e-12));
}

TEST_CASE("loss objective closures agree with the reference loss") {
  const std::vector<ModelSpec> specs{cp_spec(4, 3, 5, 2), dedicom_spec(4, 3, 2),
                                     paratuck2_spec(4, 3, 5, 2, 3)};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testutil::Rng rng(seed);
    for (const auto& spec : specs) {
      std::size_t total = spec.dims[0] * spec.dims[1] * spec.dims[2];
      std::vector<double> data(total);
      for (auto& v : data) v = rng.uniform_signed();
      DenseTensor target({spec.dims[0], spec.dims[1], spec.dims[2]}, data);

      ParamVector x = init_random(spec, seed * 1000);
      double ref = loss(x, target);

      Objective f = make_objective(spec, target);
      REQUIRE(static_cast<std::size_t>(f.dim) == param_count(spec));
      CHECK(f.eval(x.values) == doctest::Approx(ref).epsilon(1e-12));

      SumObjective parts = make_slice_squared_objectives(spec, target);
      REQUIRE(parts.parts.size() == spec.dims[2]);
      double acc = 0.0;
      for (const auto& part : parts.parts) acc += part.eval(x.values);
      CHECK(std::sqrt(acc) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}
