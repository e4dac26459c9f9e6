#include <cmath>
#include <set>

#include "doctest.h"
#include "qualbound/error.hpp"
#include "qualbound/linalg.hpp"
#include "qualbound/rng.hpp"
#include "support.hpp"

using namespace qualbound;
using qbtest::max_abs;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidParameter;
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  using C = PhiloxCounter;
  CHECK(philox4x32_10(C{0, 0, 0, 0}, {0, 0}) ==
        C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                      {0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                      {0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    seen.insert(x);
    seen.insert(c());
    seen.insert(d());
  }
  CHECK(seen.size() == 3000);
}

TEST_CASE("uniform, normal and chi-square moments") {
  RngStream rng(1, 0);
  const int n = 1'000'000;
  double su = 0, sz = 0, szz = 0, sc = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double z = rng.normal();
    sz += z;
    szz += z * z;
    sc += rng.chi_squared(3.5);
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.003));
  CHECK(std::abs(sz / n) < 5.0 / std::sqrt(n));
  CHECK(szz / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sc / n == doctest::Approx(3.5).epsilon(0.01));
}

TEST_CASE("below is uniform over its range") {
  RngStream rng(5, 5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (const int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("cholesky examples") {
  CHECK(max_abs(cholesky_lower(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) == 0.0);
  Matrix s(2, 2);
  s << 4, 2, 2, 3;
  Matrix expected(2, 2);
  expected << 2, 0, 1, std::sqrt(2.0);
  const Matrix l = cholesky_lower(s);
  CHECK(max_abs(l - expected) < 1e-15);
  CHECK(max_abs(l * l.transpose() - s) < 1e-14);

  Matrix bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK(code_of([&] { cholesky_lower(bad); }) == ErrorCode::NotPositiveDefinite);
  Matrix asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK(code_of([&] { cholesky_lower(asym); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("cholesky round trip on random matrices up to dim 100") {
  RngStream rng(11, 0);
  for (const int p : {1, 2, 5, 17, 50, 100}) {
    const Matrix s = qbtest::random_spd(p, rng);
    const Matrix l = cholesky_lower(s);
    CHECK(max_abs(Matrix(l.triangularView<Eigen::StrictlyUpper>())) == 0.0);
    CHECK(max_abs(l * l.transpose() - s) <= 1e-10 * max_abs(s));
  }
}

TEST_CASE("solve_psd") {
  Vector b(2);
  b << 3, -1;
  CHECK(max_abs(solve_psd(Matrix::Identity(2, 2), b) - b) == 0.0);
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2, 4;
  Vector rhs(2);
  rhs << 2, 8;
  Vector want(2);
  want << 1, 2;
  CHECK(max_abs(solve_psd(d, rhs) - want) < 1e-15);

  RngStream rng(3, 0);
  const Matrix s = qbtest::random_spd(5, rng);
  const Matrix m = qbtest::gaussian_matrix(5, 3, rng);
  CHECK(max_abs(s * solve_psd(s, m) - m) <= 1e-8);
  CHECK(code_of([&] { solve_psd(s, Vector(Vector::Ones(4))); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("sample moments use the n-1 denominator") {
  Matrix x(3, 2);
  x << 1, 2, 3, 6, 5, 4;
  const SampleMoments m = sample_moments(x);
  CHECK(m.mean[0] == doctest::Approx(3.0));
  CHECK(m.mean[1] == doctest::Approx(4.0));
  CHECK(m.covariance(0, 0) == doctest::Approx(4.0));
  CHECK(m.covariance(1, 1) == doctest::Approx(4.0));
  CHECK(m.covariance(0, 1) == doctest::Approx(2.0));
  CHECK(code_of([&] { sample_moments(Matrix::Ones(1, 2)); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("mvn_draw moments") {
  RngStream rng(9, 0);
  Matrix sigma(3, 3);
  sigma << 2.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 0.7;
  const Matrix l = cholesky_lower(sigma);
  Vector mean(3);
  mean << 1.0, -2.0, 0.5;
  const int n = 1'000'000;
  Vector sum = Vector::Zero(3);
  Matrix cross = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Vector x = mvn_draw(mean, l, rng);
    sum += x;
    cross += (x - mean) * (x - mean).transpose();
  }
  const Vector avg = sum / n;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(avg[i] - mean[i]) <= 5.0 * std::sqrt(sigma(i, i)) / 1000.0);
  }
  const Matrix cov = cross / n;
  CHECK(max_abs(cov - sigma) <= 0.01 * max_abs(sigma));

  RngStream r2(9, 1);
  CHECK(max_abs(mvn_draw(mean, Matrix::Zero(3, 3), r2) - mean) == 0.0);

  RngStream a(4, 4), b(4, 4);
  for (int i = 0; i < 10; ++i) CHECK(mvn_draw(mean, l, a) == mvn_draw(mean, l, b));
}

TEST_CASE("wishart draws") {
  SUBCASE("one dimensional chi-square mean") {
    RngStream rng(21, 0);
    const Matrix one = Matrix::Identity(1, 1);
    for (const double df : {3.0, 4.5}) {
      double sum = 0;
      for (int i = 0; i < 100000; ++i) sum += wishart_draw(df, one, rng)(0, 0);
      CHECK(sum / 100000 == doctest::Approx(df).epsilon(0.02));
    }
  }
  SUBCASE("mean is df times scale for both methods") {
    Matrix scale(3, 3);
    scale << 1.0, 0.3, 0.1, 0.3, 2.0, -0.4, 0.1, -0.4, 1.5;
    const Matrix l = cholesky_lower(scale);
    for (const auto method : {WishartMethod::outer_product, WishartMethod::bartlett}) {
      RngStream rng(22, static_cast<std::uint64_t>(method));
      Matrix sum = Matrix::Zero(3, 3);
      for (int i = 0; i < 100000; ++i) {
        const Matrix w = wishart_draw(6.0, l, rng, method);
        CHECK_NOTHROW(cholesky_lower(w));
        sum += w;
      }
      CHECK(max_abs(sum / 100000 - 6.0 * scale) <= 0.02 * 6.0 * max_abs(scale));
    }
  }
  SUBCASE("fractional df uses Bartlett") {
    RngStream rng(23, 0);
    const Matrix l = Matrix::Identity(2, 2);
    Matrix sum = Matrix::Zero(2, 2);
    for (int i = 0; i < 100000; ++i) sum += wishart_draw(2.5, l, rng);
    CHECK(max_abs(sum / 100000 - 2.5 * Matrix::Identity(2, 2)) <= 0.05);
  }
  SUBCASE("too few degrees of freedom") {
    RngStream rng(24, 0);
    CHECK(code_of([&] { wishart_draw(2.0, Matrix::Identity(3, 3), rng); }) ==
          ErrorCode::DegenerateWishart);
  }
}
