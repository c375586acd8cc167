#include <doctest.h>

#include <cmath>

#include "permloss/regularity.hpp"

using namespace permloss;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Template linear_template(int k) {
  Template::Parts parts;
  parts.k = k;
  parts.kind = "linear";
  parts.eval = [](const Vec& z) { return -z.sum(); };
  parts.grad = [](const Vec& z) -> Vec { return -Vec::Ones(z.size()); };
  parts.hessian = [](const Vec& z) -> Mat { return Mat::Zero(z.size(), z.size()); };
  return Template(parts);
}

}  // namespace

TEST_CASE("regularity of cross entropy and exponential") {
  for (int k = 2; k <= 6; ++k) {
    ProbeOptions opts;
    opts.samples = 300;
    opts.seed = static_cast<std::uint64_t>(k);
    const auto ce = regularity_probe(template_cross_entropy(k), opts);
    CHECK_MESSAGE(ce.passed(), "cross entropy k = " << k);
    CHECK(ce.nonneg.passed);
    CHECK(ce.grad_negative.passed);
    CHECK(ce.hessian_pd.passed);
  }
  ProbeOptions opts;
  opts.samples = 300;
  opts.box = 5;
  CHECK(regularity_probe(template_exponential(4), opts).passed());
}

TEST_CASE("non-smooth templates are rejected") {
  CHECK_THROWS_AS(regularity_probe(template_ww_hinge(3)), UnsupportedOperation);
}

TEST_CASE("linear template fails the probe") {
  ProbeOptions opts;
  opts.samples = 200;
  const auto r = regularity_probe(linear_template(3), opts);
  CHECK_FALSE(r.passed());
  CHECK_FALSE(r.hessian_pd.passed);
  CHECK(r.hessian_pd.witness.has_value());
}

TEST_CASE("semi-coercivity") {
  const auto bin = semi_coercivity_probe(template_cross_entropy(2), std::log(2.0), 2000, 1);
  CHECK(bin.passed);
  CHECK(bin.b_hat >= 0.0);
  const auto ce3 = semi_coercivity_probe(template_cross_entropy(3), 1.0, 2000, 2);
  CHECK(ce3.passed);
  CHECK(std::isfinite(ce3.b_hat));
  const auto lin = semi_coercivity_probe(linear_template(3), 0.0, 2000, 3);
  CHECK(lin.unbounded_below);
  CHECK_FALSE(lin.passed);
  const auto none = semi_coercivity_probe(template_cross_entropy(3), -1.0, 200, 4);
  CHECK(none.inconclusive);
}

TEST_CASE("gamma-phi sufficient conditions") {
  // log(1 + t) is concave, so cross entropy misses the convexity condition on gamma
  // even though the template itself is totally regular.
  const auto ce = gamma_phi_regular_check(gamma_phi_cross_entropy());
  CHECK_FALSE(ce.gamma_convex);
  CHECK(ce.gamma_nonneg);
  CHECK(ce.gamma_increasing);
  CHECK(ce.phi_decreasing);
  CHECK(ce.phi_strictly_convex);
  CHECK(ce.phi_vanishes);
  CHECK(gamma_phi_regular_check(gamma_phi_exponential()).passed());
  const GammaPhiSpec hinge{gamma_identity(), phi_hinge(), 0.0};
  const auto h = gamma_phi_regular_check(hinge);
  CHECK_FALSE(h.passed());
  CHECK_FALSE(h.phi_strictly_convex);
  CHECK_FALSE(h.phi_decreasing);
}

TEST_CASE("totally regular") {
  ProbeOptions opts;
  opts.samples = 200;
  opts.box = 5;
  for (const auto& psi :
       {template_cross_entropy(4), template_exponential(4),
        add(scale(template_cross_entropy(3), 0.5), scale(template_exponential(3), 0.5))}) {
    const auto reports = totally_regular_probe(psi, opts);
    CHECK(static_cast<int>(reports.size()) == psi.k() - 1);
    for (const auto& r : reports) CHECK_MESSAGE(r.passed(), psi.kind() << " arity " << r.k);
  }
}

TEST_CASE("scale and add") {
  const auto ce = template_cross_entropy(3);
  const auto ex = template_exponential(3);
  const Vec z = vec({0.4, -0.3});
  CHECK(scale(ce, 1.0)(z) == ce(z));
  const auto half = add(scale(ce, 0.5), scale(ex, 0.5));
  CHECK(half(vec({0, 0})) == doctest::Approx(0.5 * (std::log(3.0) + 2.0)));
  CHECK(half.grad(z).isApprox(0.5 * (ce.grad(z) + ex.grad(z))));
  CHECK_THROWS(scale(ce, 0.0));
  CHECK_THROWS(add(ce, template_cross_entropy(4)));
}
