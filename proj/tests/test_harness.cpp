#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "permloss/harness.hpp"
#include "permloss/regularity.hpp"

using namespace permloss;

TEST_CASE("mixture validation") {
  auto spec = triangle_mixture();
  CHECK(spec.k() == 3);
  CHECK(spec.d() == 2);
  CHECK((spec.means.row(0) - spec.means.row(1)).norm() == doctest::Approx(2.0));
  CHECK((spec.means.row(1) - spec.means.row(2)).norm() == doctest::Approx(2.0));
  spec.covariance = Mat::Zero(2, 2);
  CHECK_THROWS_AS(MixtureSampler{spec}, NumericError);
  auto bad = triangle_mixture();
  bad.weights(0) = -1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("sampling is seed deterministic") {
  const auto a = generate_mixture(triangle_mixture(), 500, 42);
  const auto b = generate_mixture(triangle_mixture(), 500, 42);
  const auto c = generate_mixture(triangle_mixture(), 500, 43);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
  for (int y : a.labels) CHECK((y >= 1 && y <= 3));
}

TEST_CASE("Bayes risk by Monte Carlo") {
  auto far = triangle_mixture(20.0);
  CHECK(bayes_risk_mc(far, 20000, 1).risk <= 1e-3);

  auto same = triangle_mixture();
  same.means.setZero();
  same.weights << 0.5, 0.3, 0.2;
  const auto r = bayes_risk_mc(same, 20000, 2);
  CHECK(std::abs(r.risk - 0.5) <= 3 * r.std_error + 1e-12);

  const auto t = triangle_mixture();
  const auto r1 = bayes_risk_mc(t, 100000, 3);
  const auto r2 = bayes_risk_mc(t, 100000, 4);
  const double se = std::sqrt(r1.std_error * r1.std_error + r2.std_error * r2.std_error);
  CHECK(std::abs(r1.risk - r2.risk) <= 2 * se);
  CHECK(r1.risk > 0.2);
  CHECK(r1.risk < 0.4);
}

TEST_CASE("split and subset") {
  const auto data = generate_mixture(triangle_mixture(), 101, 5);
  const auto [train, test] = split_parity(data, 6);
  CHECK(train.n() == 51);
  CHECK(test.n() == 50);
  CHECK(train.k == 3);
}

TEST_CASE("csv round trip") {
  const auto data = generate_mixture(triangle_mixture(), 50, 7);
  const auto path = (std::filesystem::temp_directory_path() / "permloss_roundtrip.csv").string();
  write_csv(data, path);
  const auto back = read_csv(path);
  std::remove(path.c_str());
  CHECK(back.labels == data.labels);
  CHECK((back.features - data.features).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS(read_csv("/nonexistent/permloss.csv"));
}

TEST_CASE("training reaches the Bayes risk") {
  const auto data = generate_mixture(triangle_mixture(), 2000, 8);
  const auto [train, test] = split_parity(data, 9);
  const auto bayes = bayes_risk_mc(triangle_mixture(), 50000, 10);
  TrainConfig cfg;
  cfg.epochs = 100;
  const auto r = train_erm(train, test, PermLoss(template_cross_entropy(3)), cfg, bayes);
  CHECK(r.report.test_01 <= bayes.risk + 0.05);
  for (std::size_t i = 1; i < r.report.trajectory.size(); ++i) {
    CHECK(r.report.trajectory[i] <= r.report.trajectory[i - 1] + 1e-12);
  }
}

TEST_CASE("scores shifted by a constant train identically") {
  const auto data = generate_mixture(triangle_mixture(), 600, 11);
  const auto [train, test] = split_parity(data, 12);
  const PermLoss loss(template_exponential(3));
  TrainConfig cfg;
  cfg.epochs = 40;
  auto init = LinearModel::zeros(2, 3);
  init.b.setConstant(2.5);
  const auto a = train_erm(train, test, loss, cfg);
  const auto b = train_erm(train, test, loss, cfg, std::nullopt, init);
  CHECK(a.report.test_01 == b.report.test_01);
  CHECK(a.report.train_risk == doctest::Approx(b.report.train_risk).epsilon(1e-9));
}

TEST_CASE("threaded risk matches the serial sum") {
  const auto data = generate_mixture(triangle_mixture(), 1000, 13);
  const PermLoss loss(template_cross_entropy(3));
  auto model = LinearModel::zeros(2, 3);
  model.W(0, 1) = 0.7;
  model.b(2) = -0.3;
  const double serial = empirical_risk(data, loss, model, 1);
  CHECK(empirical_risk(data, loss, model, 4) == serial);
  CHECK(zero_one_risk(data, model) >= 0.0);
}
