#include <doctest.h>

#include <cmath>
#include <random>

#include "permloss/calculus.hpp"

using namespace permloss;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_vec(int n, std::mt19937_64& rng, double box) {
  std::uniform_real_distribution<double> u(-box, box);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

ProbVector random_interior(int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0);
  Vec p(k);
  for (int i = 0; i < k; ++i) p(i) = g(rng) + 1e-2;
  return ProbVector(p / p.sum());
}

}  // namespace

TEST_CASE("reduced gradient of cross entropy at the origin") {
  const auto ce = template_cross_entropy(3);
  CHECK(reduced_grad(ce, 1, vec({0, 0})).isApprox(vec({2.0 / 3, -1.0 / 3})));
  CHECK(reduced_grad(ce, 3, vec({0.4, -1})).isApprox(ce.grad(vec({0.4, -1}))));
  CHECK_THROWS_AS(reduced_grad(template_ww_hinge(3), 1, vec({0, 0})), UnsupportedOperation);
}

TEST_CASE("reduced gradient matches finite differences") {
  std::mt19937_64 rng(4);
  for (int k = 2; k <= 5; ++k) {
    const auto code = LabelCode::build(k);
    for (const auto& psi : {template_cross_entropy(k), template_exponential(k)}) {
      for (int y = 1; y <= k; ++y) {
        for (int t = 0; t < 25; ++t) {
          CHECK(reduced_grad_relative_error(psi, code, y, random_vec(k - 1, rng, 3)) <= 1e-5);
        }
      }
    }
  }
}

TEST_CASE("A(z) is an M-matrix for regular templates") {
  std::mt19937_64 rng(8);
  for (int k = 3; k <= 6; ++k) {
    for (const auto& psi : {template_cross_entropy(k), template_exponential(k)}) {
      for (int t = 0; t < 200; ++t) {
        const auto a = A_matrix(psi, random_vec(k - 1, rng, 5));
        CHECK(a.report.all());
      }
    }
  }
}

TEST_CASE("mmatrix_report flags violations") {
  Mat bad(2, 2);
  bad << 1, 0.5, -0.2, 1;
  CHECK_FALSE(mmatrix_report(bad).is_Z);
  Mat weak(2, 2);
  weak << 1, -1, -1, 1;
  const auto r = mmatrix_report(weak);
  CHECK(r.is_Z);
  CHECK_FALSE(r.is_strictly_diag_dominant);
}

TEST_CASE("conditional risk") {
  const auto ce = template_cross_entropy(3);
  const Vec z = vec({0.3, -0.8});
  CHECK(conditional_risk(ce, ProbVector(vec({0, 0, 1})), z) == doctest::Approx(ce(z)));
  CHECK(conditional_risk(ce, ProbVector::uniform(3), vec({0, 0})) ==
        doctest::Approx(std::log(3.0)));
  CHECK(risk_grad(ce, ProbVector(vec({0, 0, 1})), z).isApprox(ce.grad(z)));
  CHECK(risk_grad(ce, ProbVector::uniform(3), vec({0, 0})).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(conditional_risk(ce, ProbVector::uniform(4), z), ShapeError);
}

TEST_CASE("risk derivatives match finite differences") {
  std::mt19937_64 rng(17);
  for (int k = 3; k <= 5; ++k) {
    const auto psi = template_cross_entropy(k);
    for (int t = 0; t < 20; ++t) {
      const auto p = random_interior(k, rng);
      const Vec z = random_vec(k - 1, rng, 2);
      const auto f = [&](const Vec& x) { return conditional_risk(psi, p, x); };
      const auto g = [&](const Vec& x) { return risk_grad(psi, p, x); };
      const Vec fd = fd_gradient(f, z, default_fd_step(z));
      CHECK((risk_grad(psi, p, z) - fd).cwiseAbs().maxCoeff() <= 1e-6);
      const Mat fh = fd_jacobian(g, z, 1e-5);
      CHECK((risk_hessian(psi, p, z) - fh).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("finite differences on simple functions") {
  const Vec a = vec({1.5, -2, 0.25});
  const auto lin = [&](const Vec& x) { return a.dot(x); };
  const Vec z = vec({0.2, 3, -1});
  CHECK((fd_gradient(lin, z, default_fd_step(z)) - a).cwiseAbs().maxCoeff() < 1e-10);

  Mat q(3, 3);
  q << 2, 0.5, 0, 0.5, 1, -0.3, 0, -0.3, 4;
  const auto quad = [&](const Vec& x) { return 0.5 * x.dot(q * x); };
  CHECK((fd_gradient(quad, z, default_fd_step(z)) - q * z).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fd_hessian(quad, z, 1e-4) - q).cwiseAbs().maxCoeff() < 1e-5);

  const auto bad = [](const Vec&) { return std::nan(""); };
  CHECK_THROWS_AS(fd_gradient(bad, z, 1e-5), NumericError);
}

TEST_CASE("probability vectors") {
  CHECK(ProbVector::parse("0.2,0.3,0.5").interior());
  CHECK_FALSE(ProbVector(vec({0, 0.5, 0.5})).interior());
  CHECK_THROWS(ProbVector(vec({0.2, 0.2, 0.2})));
  CHECK_THROWS(ProbVector(vec({-0.1, 0.6, 0.5})));
}
