#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "itm/errors.hpp"
#include "itm/problems.hpp"
#include "itm/random.hpp"

using namespace itm;

namespace {

std::shared_ptr<const Dataset> tiny_dataset() {
  std::istringstream in("1 1:1 2:2\n-1 1:-1 2:0.5\n1 1:0.3 2:-1\n");
  return std::make_shared<const Dataset>(parse_libsvm(in, "tiny"));
}

}  // namespace

TEST_CASE("logistic loss identities") {
  auto data = std::make_shared<const Dataset>(generate_classification(6, 20, 5));
  LogisticOracle f(data, 0.0);
  CHECK(f.value(Vector::Zero(6)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  std::istringstream one("1 1:1\n");
  LogisticOracle s(std::make_shared<const Dataset>(parse_libsvm(one, "one")), 0.0);
  for (double t : {-3.0, -0.5, 0.0, 2.0, 40.0}) {
    const Vector x = Vector::Constant(1, t);
    CHECK(s.value(x) == doctest::Approx(std::log1p(std::exp(-t))).epsilon(1e-14));
    CHECK(s.gradient(x)[0] == doctest::Approx(-1.0 / (1.0 + std::exp(t))).epsilon(1e-14));
  }
}

TEST_CASE("logistic values match the reference computation") {
  LogisticOracle f(tiny_dataset(), 0.1);
  const Vector x = (Vector(2) << 0.5, -0.25).finished();
  const Vector h = (Vector(2) << 1, 1).finished();
  CHECK(f.value(x) == doctest::Approx(0.5605793704121389).epsilon(1e-14));
  const Vector g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(-0.27301294576673674).epsilon(1e-13));
  CHECK(g[1] == doctest::Approx(-0.16645503081515972).epsilon(1e-13));
  const Vector hv = f.hessian_vec(x, h);
  CHECK(hv[0] == doctest::Approx(0.37103036528841304).epsilon(1e-13));
  CHECK(hv[1] == doctest::Approx(0.6371365319278635).epsilon(1e-13));
}

TEST_CASE("log-sum-exp values match the reference computation") {
  Matrix a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  const Vector b = (Vector(3) << 0.1, -0.2, 0.3).finished();
  LogSumExpOracle f(a, b, 0.5, NormOperator::identity(2), {});
  const Vector x = (Vector(2) << 0.2, -0.1).finished();
  const Vector h = (Vector(2) << 1, 1).finished();
  CHECK(f.value(x) == doctest::Approx(0.5678136127428705).epsilon(1e-14));
  CHECK(f.gradient(x)[0] == doctest::Approx(0.6076602971208698).epsilon(1e-13));
  CHECK(f.hessian_vec(x, h)[1] == doctest::Approx(0.16895763593712387).epsilon(1e-12));
}

TEST_CASE("log-sum-exp special cases") {
  LogSumExpOracle zero(Matrix::Zero(1, 1), Vector::Zero(1), 1.0, NormOperator::identity(1), {});
  CHECK(zero.value(Vector::Constant(1, 3.0)) == doctest::Approx(0.0));
  CHECK(zero.gradient(Vector::Constant(1, 3.0))[0] == doctest::Approx(0.0));

  Matrix a(2, 1);
  a << 0, 1;
  LogSumExpOracle two(a, Vector::Zero(2), 1.0, NormOperator::identity(1), {});
  for (double t : {-5.0, 0.0, 1.5, 30.0}) {
    CHECK(two.value(Vector::Constant(1, t)) == doctest::Approx(std::log1p(std::exp(t))).epsilon(1e-14));
  }
  // no overflow at large arguments
  CHECK(std::isfinite(two.value(Vector::Constant(1, 1e4))));
}

TEST_CASE("log-sum-exp constants and the Hessian bound") {
  auto inst = generate_shifted_logsumexp(5, 30, 1.0, 2);
  CHECK(inst.smooth->lipschitz(1).value() == doctest::Approx(1.0));
  CHECK(inst.smooth->lipschitz(2).value() == doctest::Approx(2.0));
  CHECK(inst.smooth->lipschitz(3).value() == doctest::Approx(4.0));
  auto scaled = generate_shifted_logsumexp(5, 30, 0.5, 2);
  CHECK(scaled.smooth->lipschitz(2).value() == doctest::Approx(8.0));
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Vector x = rng.uniform_vector(5, -2, 2);
    const Vector h = rng.uniform_vector(5, -1, 1);
    const double n2 = std::pow(inst.norm().primal_norm(h), 2);
    CHECK(inst.smooth->hessian_vec(x, h).dot(h) <= n2 * (1 + 1e-8));
  }
}

TEST_CASE("shifted generator puts the minimizer at the origin") {
  for (std::uint64_t seed : {1u, 2u, 3u, 17u}) {
    auto inst = generate_shifted_logsumexp(4, 24, 0.05, seed);
    REQUIRE(inst.optimum.has_value());
    CHECK(inst.optimum->x.isZero(0.0));
    CHECK(inst.norm().dual_norm(inst.smooth->gradient(Vector::Zero(4))) <= 1e-12);
    CHECK(inst.optimum->value == doctest::Approx(inst.objective(Vector::Zero(4))));
  }
  auto big = generate_shifted_logsumexp(2, 12, 1.0, 4);
  CHECK(big.dimension() == 2);
}

TEST_CASE("powered chain values") {
  auto inst = powered_chain_instance(4, 3.0, 2.0);
  const Vector x = (Vector(4) << 1, -1, 0.5, 2).finished();
  CHECK(inst.smooth->value(x) == doctest::Approx(44.625));
  const Vector g = inst.smooth->gradient(x);
  CHECK(g[0] == doctest::Approx(57.0));
  CHECK(g[1] == doctest::Approx(-64.5));
  CHECK(g[2] == doctest::Approx(12.75));
  CHECK(g[3] == doctest::Approx(3.0));
  CHECK(inst.smooth->value(Vector::Zero(4)) == 0.0);
  CHECK(inst.smooth->gradient(Vector::Zero(4)).norm() == 0.0);

  for (Eigen::Index n : {3, 10, 20}) {
    auto chain = powered_chain_instance(n, 3.0, 2.0);
    Vector x1(n);
    for (Eigen::Index i = 0; i < n; ++i) x1[i] = std::pow(2.0, static_cast<double>(i + 1)) - 1.0;
    CHECK(chain.smooth->value(Vector::Ones(n)) == doctest::Approx(static_cast<double>(n)));
    CHECK(chain.smooth->value(x1) == doctest::Approx(static_cast<double>(n)));
  }
  auto twenty = powered_chain_instance(20, 3.0, 2.0);
  Vector x1(20);
  for (int i = 0; i < 20; ++i) x1[i] = std::pow(2.0, i + 1) - 1.0;
  CHECK(twenty.norm().primal_norm(Vector::Ones(20)) == doctest::Approx(std::sqrt(20.0)));
  CHECK(twenty.norm().primal_norm(x1) >= std::pow(2.0, 19));
}

TEST_CASE("chain cubic gain matches an independent multistart maximization") {
  CHECK(chain_cubic_gain(20, 2.0) == doctest::Approx(13.587192004016961).epsilon(1e-8));
  CHECK(chain_cubic_gain(5, 1.0) == doctest::Approx(3.870102455399259).epsilon(1e-8));
  auto chain = powered_chain_instance(20, 3.0, 2.0);
  CHECK(chain.smooth->lipschitz(2).value() == doctest::Approx(6.0 * 13.587192004016961).epsilon(1e-8));
  auto quad = powered_chain_instance(6, 2.0, 1.0);
  CHECK(quad.smooth->lipschitz(2).value() == 0.0);
}

TEST_CASE("libsvm parsing") {
  std::istringstream in("1 3:0.5 7:1\n-1\n\n+1 1:2\n");
  const Dataset d = parse_libsvm(in, "mem");
  CHECK(d.examples() == 3);
  CHECK(d.dimension() == 7);
  CHECK(d.labels[0] == 1.0);
  CHECK(d.labels[1] == -1.0);
  CHECK(d.features.coeff(0, 2) == 0.5);
  CHECK(d.features.coeff(0, 6) == 1.0);
  CHECK(d.features.row(1).nonZeros() == 0);

  std::istringstream zero_one("0 1:1\n1 2:1\n");
  const Dataset z = parse_libsvm(zero_one, "mem");
  CHECK(z.labels[0] == -1.0);
  CHECK(z.labels[1] == 1.0);

  auto expect_line = [](const std::string& text, std::size_t line) {
    std::istringstream s(text);
    try {
      parse_libsvm(s, "mem");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == line);
    }
  };
  expect_line("1 1:1\n1 3:1 2:1\n", 2);
  expect_line("1 1:1\n-1 x:1\n", 2);
  expect_line("1 0:1\n", 1);
  expect_line("1 1:1\n2 1:1\n3 1:1\n", 3);
  CHECK_THROWS_AS(parse_libsvm("/nonexistent/file.svm"), IoError);
}

TEST_CASE("derivative checks pass for every oracle") {
  auto data = std::make_shared<const Dataset>(generate_classification(8, 40, 3));
  CHECK(check_derivatives(LogisticOracle(data, 1e-2), 10, 1).passed());
  auto lse = generate_shifted_logsumexp(6, 36, 0.5, 3);
  CHECK(check_derivatives(*lse.smooth, 10, 2).passed());
  auto chain = powered_chain_instance(8, 3.0, 2.0);
  CHECK(check_derivatives(*chain.smooth, 10, 3).passed());
  QuadraticOracle q(Matrix::Identity(3, 3), Vector::Zero(3), 0.0, NormOperator::identity(3));
  const auto rep = check_derivatives(q, 5, 4);
  CHECK(rep.max_gradient_error < 1e-9);
  CHECK(rep.max_hessian_vec_error < 1e-9);
}

TEST_CASE("composite parts") {
  const auto norm = NormOperator::identity(3);
  const auto part = CompositePart::power_norm(2.0, 3.0, Vector::Zero(3), norm);
  CHECK(part.value(Vector::Zero(3)) == 0.0);
  CHECK(part.uniform_convexity(2) == doctest::Approx(1.0));
  CHECK(CompositePart::quadratic(3.0, Vector::Zero(3), norm).uniform_convexity(1) == doctest::Approx(3.0));
  CHECK(CompositePart::quadratic(3.0, Vector::Zero(3), norm).uniform_convexity(2, 2.0) ==
        doctest::Approx(3.0 * 3.0 / (4.0 * 2.0)));
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Vector x = rng.uniform_vector(3, -2, 2);
    const Vector y = rng.uniform_vector(3, -2, 2);
    CHECK(part.value(x) >= 0.0);
    const double gap = part.value(y) - part.value(x) - part.gradient(x).dot(y - x);
    CHECK(gap >= 1.0 / 3.0 * std::pow((y - x).norm(), 3) - 1e-12);
  }
  const Vector x = rng.uniform_vector(3, -1, 1);
  const Vector h = rng.uniform_vector(3, -1, 1);
  const Vector fd = fd_directional([&](const Vector& z) { return part.gradient(z); }, x, h);
  CHECK(relative_error(part.hessian_vec(x, h), fd) < 1e-6);
}

TEST_CASE("counting oracle tallies calls") {
  auto counters = std::make_shared<OracleCounters>();
  auto inst = powered_chain_instance(4, 3.0, 2.0);
  CountingOracle c(inst.smooth, counters);
  c.value(Vector::Ones(4));
  c.gradient(Vector::Ones(4));
  c.hessian_vec(Vector::Ones(4), Vector::Ones(4));
  c.hessian(Vector::Ones(4));
  CHECK(counters->value == 1);
  CHECK(counters->gradient == 1);
  CHECK(counters->hessian_vec == 5);
}
