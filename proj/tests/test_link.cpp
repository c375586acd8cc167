#include <doctest.h>

#include <cmath>
#include <random>

#include "permloss/link.hpp"

using namespace permloss;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ProbVector random_interior(int k, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0);
  for (;;) {
    Vec p(k);
    for (int i = 0; i < k; ++i) p(i) = g(rng);
    p /= p.sum();
    if (p.minCoeff() >= 1e-3) return ProbVector(p);
  }
}

}  // namespace

TEST_CASE("link of cross entropy") {
  const auto ce = template_cross_entropy(3);
  CHECK(link(ce, ProbVector::uniform(3)).z.cwiseAbs().maxCoeff() <= 1e-8);
  const auto r = link(ce, ProbVector(vec({0.2, 0.3, 0.5})));
  CHECK(r.z(0) == doctest::Approx(std::log(0.5 / 0.2)).epsilon(1e-8));
  CHECK(r.z(1) == doctest::Approx(std::log(0.5 / 0.3)).epsilon(1e-8));
  CHECK(r.residual <= 1e-10);
  // Values along the iterates never increase.
  for (std::size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i] <= r.values[i - 1] + 1e-15);
}

TEST_CASE("link on the boundary has no minimizer") {
  CHECK_THROWS_AS(link(template_cross_entropy(3), ProbVector(vec({0, 0.5, 0.5}))), NoMinimizer);
}

TEST_CASE("exponential link satisfies the KKT system") {
  std::mt19937_64 rng(2);
  for (int k = 2; k <= 5; ++k) {
    const auto psi = template_exponential(k);
    for (int t = 0; t < 20; ++t) {
      const auto p = random_interior(k, rng);
      const auto r = link(psi, p);
      CHECK(kkt_residual(psi, p, r.z) <= 1e-8);
    }
  }
}

TEST_CASE("inverse link") {
  const auto ce = template_cross_entropy(3);
  const auto u = inverse_link(ce, vec({0, 0}));
  CHECK((u.values().array() - 1.0 / 3).abs().maxCoeff() < 1e-12);
  const auto p = inverse_link(ce, vec({0.9163, 0.5108}));
  CHECK((p.values() - vec({0.2, 0.3, 0.5})).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("link round trip") {
  std::mt19937_64 rng(6);
  for (int k = 2; k <= 5; ++k) {
    for (const auto& psi : {template_cross_entropy(k), template_exponential(k)}) {
      for (int t = 0; t < 20; ++t) {
        const auto p = random_interior(k, rng);
        const Vec back = inverse_link(psi, link(psi, p).z).values();
        CHECK((back - p.values()).cwiseAbs().maxCoeff() <= 1e-6);
      }
    }
  }
}

TEST_CASE("kkt residual") {
  const auto ce = template_cross_entropy(3);
  CHECK(kkt_residual(ce, ProbVector::uniform(3), vec({0, 0})) <= 1e-12);
  const ProbVector p(vec({0.2, 0.3, 0.5}));
  const Vec z = link(ce, p).z;
  CHECK(kkt_residual(ce, p, z) <= 1e-8);
  CHECK(kkt_residual(ce, p, z + vec({0.1, 0})) > 1e-3);
}

TEST_CASE("newton minimizer on a quadratic") {
  Mat q(2, 2);
  q << 3, 1, 1, 2;
  const Vec b = vec({1, -1});
  NewtonProblem prob{[&](const Vec& z) { return 0.5 * z.dot(q * z) - b.dot(z); },
                     [&](const Vec& z) -> Vec { return q * z - b; },
                     [&](const Vec&) -> Mat { return q; }};
  const auto r = minimize_newton(prob, Vec::Zero(2), SolverConfig{});
  CHECK((q * r.z - b).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(r.iterations <= 2);
}

TEST_CASE("newton stall reporting") {
  // Unbounded below: no stationary point.
  NewtonProblem prob{[](const Vec& z) { return -z(0); },
                     [](const Vec&) -> Vec { return vec({-1}); },
                     [](const Vec&) -> Mat { return Mat(); }};
  SolverConfig cfg;
  cfg.max_iter = 5;
  cfg.fallback_steps = 5;
  CHECK_THROWS_AS(minimize_newton(prob, Vec::Zero(1), cfg), SolverError);
  cfg.throw_on_stall = false;
  CHECK(minimize_newton(prob, Vec::Zero(1), cfg).residual > 0.5);
}
