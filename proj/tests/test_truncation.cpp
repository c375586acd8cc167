#include <doctest.h>

#include <cmath>

#include "permloss/regularity.hpp"
#include "permloss/truncation.hpp"

using namespace permloss;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("closed truncation of cross entropy") {
  const auto t = truncate(template_cross_entropy(4));
  CHECK(t.k() == 3);
  const auto ce3 = template_cross_entropy(3);
  for (double a : {-2.0, 0.0, 1.5}) {
    for (double b : {-1.0, 0.5, 3.0}) CHECK(t(vec({a, b})) == doctest::Approx(ce3(vec({a, b}))));
  }
  CHECK(symmetry_check(t, 50, 4, 1).passed);
  CHECK_THROWS_AS(truncate(template_cross_entropy(2)), InvalidArity);
}

TEST_CASE("numeric truncation agrees with the closed form") {
  const auto ce = template_cross_entropy(3);
  const auto num = truncate_numeric(ce);
  const auto closed = truncate(ce);
  for (double w : {-3.0, 0.0, 3.0}) {
    CHECK(std::abs(num(vec({w})) - closed(vec({w}))) <= 1e-6);
    CHECK(std::abs(num.grad(vec({w}))(0) - closed.grad(vec({w}))(0)) <= 1e-6);
  }
}

TEST_CASE("iterated truncation") {
  const auto ce5 = template_cross_entropy(5);
  CHECK(iterated_truncate(ce5, 0).k() == 5);
  const auto bin = iterated_truncate(ce5, 3);
  CHECK(bin.k() == 2);
  for (double w : {-3.0, 0.0, 3.0}) {
    CHECK(std::abs(bin(vec({w})) - std::log1p(std::exp(-w))) <= 1e-6);
  }
  const auto e = iterated_truncate(template_exponential(4), 2);
  for (double w : {-1.0, 0.0, 2.0}) CHECK(std::abs(e(vec({w})) - std::exp(-w)) <= 1e-9);
  CHECK_THROWS(iterated_truncate(ce5, 4));
  CHECK_THROWS(iterated_truncate(ce5, -1));
}

TEST_CASE("shifted limit") {
  auto r = shifted_limit_check(template_cross_entropy(3), vec({5, 1}));
  CHECK(r.passed);
  CHECK(r.limit == doctest::Approx(std::log1p(std::exp(-1.0))).epsilon(1e-6));
  r = shifted_limit_check(template_exponential(3), vec({0, 2}));
  CHECK(r.passed);
  CHECK(r.limit == doctest::Approx(std::exp(-2.0)).epsilon(1e-6));
}

TEST_CASE("schedule limit") {
  const auto t = schedule_limit([](double l) { return 1.0 + 1.0 / l; });
  CHECK(t.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.last_lambda >= std::ldexp(1.0, 20));
  CHECK_THROWS_AS(schedule_limit([](double l) { return l; }), DivergenceError);
}

TEST_CASE("prepend") { CHECK(prepend(7, vec({1, 2})).isApprox(vec({7, 1, 2}))); }

TEST_CASE("truncation of composite templates") {
  const auto sum = add(scale(template_cross_entropy(4), 0.5), scale(template_exponential(4), 0.5));
  const auto closed = truncate(sum);
  const auto num = truncate_numeric(sum);
  for (double a : {-1.0, 0.5}) {
    for (double b : {0.0, 2.0}) {
      CHECK(std::abs(closed(vec({a, b})) - num(vec({a, b}))) <= 1e-6);
    }
  }
}
