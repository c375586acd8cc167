#include <doctest.h>

#include <random>

#include "permloss/label_code.hpp"

using namespace permloss;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_vec(int n, std::mt19937_64& rng, double box = 5.0) {
  std::uniform_real_distribution<double> u(-box, box);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

TEST_CASE("apply_D on small inputs") {
  const auto code = LabelCode::build(3);
  CHECK(apply_D(code, vec({1, 4, 2})).isApprox(vec({1, -2})));
  CHECK(apply_D(code, vec({7, 7, 7})).isZero(0.0));
  CHECK_THROWS_AS(apply_D(code, vec({1, 2})), ShapeError);
}

TEST_CASE("relative margin") {
  const auto code = LabelCode::build(3);
  const Vec v = vec({1, 4, 2});
  CHECK(relative_margin(code, 2, v).isApprox(vec({3, 2})));
  CHECK(relative_margin(code, 3, v).isApprox(apply_D(code, v)));
  CHECK_THROWS_AS(relative_margin(code, 4, v), ShapeError);
}

TEST_CASE("both relative margin formulas agree") {
  std::mt19937_64 rng(11);
  for (int k = 2; k <= 7; ++k) {
    const auto code = LabelCode::build(k);
    for (int t = 0; t < 1000 / 6; ++t) {
      const Vec v = random_vec(k, rng);
      // Integer scores make both paths exact.
      const Vec vi = (v * 1000).array().round().matrix();
      for (int y = 1; y <= k; ++y) {
        CHECK((relative_margin(code, y, vi) - relative_margin_explicit(code, y, vi))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        const Vec a = relative_margin(code, y, v);
        const Vec b = relative_margin_explicit(code, y, v);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
        // Same multiset as the omitted-index form.
        Vec c = relative_margin_omitted(code, y, v);
        Vec s = a;
        std::sort(s.data(), s.data() + s.size());
        std::sort(c.data(), c.data() + c.size());
        CHECK((s - c).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("apply_rho matches the dense matrix") {
  std::mt19937_64 rng(3);
  for (int k = 2; k <= 6; ++k) {
    const auto code = LabelCode::build(k);
    for (int y = 1; y <= k; ++y) {
      const Vec z = random_vec(k - 1, rng);
      const Mat rho = code.rho(y).cast<double>();
      CHECK((apply_rho(code, y, z) - rho * z).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((apply_rho_transpose(code, y, z) - rho.transpose() * z).cwiseAbs().maxCoeff() <
            1e-14);
    }
  }
}

TEST_CASE("D^T and the pseudo-inverse") {
  const auto code = LabelCode::build(5);
  const Mat d = code.D().cast<double>();
  CHECK((d * code.D_pinv() - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  const Vec w = vec({1, -2, 3, 0.5});
  CHECK((apply_D_transpose(code, w) - d.transpose() * w).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("M_sigma special cases") {
  const auto code = LabelCode::build(3);
  CHECK((M_sigma(code, Permutation::identity(3)) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <
        1e-12);
  const Mat m = M_sigma(code, Permutation::transposition(3, 1, 3));
  CHECK((m - code.rho(1).cast<double>()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("permutations compose and act") {
  const Permutation s({2, 3, 1});
  const Permutation t = Permutation::transposition(3, 1, 2);
  const Permutation st = s.compose(t);
  CHECK(st(1) == s(t(1)));
  CHECK(st(3) == s(t(3)));
  CHECK(s.apply(vec({10, 20, 30})).isApprox(vec({20, 30, 10})));
  CHECK((s.matrix().cast<double>() * vec({10, 20, 30})).isApprox(s.apply(vec({10, 20, 30}))));
  CHECK_THROWS(Permutation({1, 1, 2}));
}

TEST_CASE("identity suite") {
  for (int k = 2; k <= 8; ++k) {
    const auto report = verify_identities(LabelCode::build(k), 100, 7);
    CHECK_MESSAGE(report.all_passed(), "k = " << k);
    for (const auto& c : report.checks) CHECK_MESSAGE(c.passed, c.name << " k = " << k);
  }
}
