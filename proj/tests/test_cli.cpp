#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "permloss/cli.hpp"

using namespace permloss;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "permloss");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::string kCE3 = R"({"kind":"cross_entropy","k":3})";

}  // namespace

TEST_CASE("verify-identities") {
  const auto r = run({"verify-identities", "--k", "4", "--trials", "100"});
  CHECK(r.code == 0);
  CHECK(r.json()["schema_version"] == kSchemaVersion);
}

TEST_CASE("eval") {
  const auto r = run({"eval", "--loss", kCE3, "--y", "3", "--v", "0,0,0"});
  CHECK(r.code == 0);
  CHECK(r.json()["value"].get<double>() == doctest::Approx(std::log(3.0)));
  const auto missing = run({"eval", "--y", "3", "--v", "0,0,0"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--loss") != std::string::npos);
  CHECK(run({"eval", "--loss", kCE3, "--y", "3", "--v", "0,0", "--bogus"}).code == 1);
  CHECK(run({"eval", "--loss", kCE3, "--y", "3", "--v", "0,0"}).code == 1);
}

TEST_CASE("link and inverse link") {
  const auto r = run({"link", "--loss", kCE3, "--p", "0.2,0.3,0.5"});
  CHECK(r.code == 0);
  const auto z = r.json()["z"].get<std::vector<double>>();
  CHECK(z[0] == doctest::Approx(std::log(2.5)));
  const auto back = run({"inverse-link", "--loss", kCE3, "--z",
                         std::to_string(z[0]) + "," + std::to_string(z[1])});
  CHECK(back.code == 0);
  CHECK(back.json()["p"][0].get<double>() == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(run({"link", "--loss", kCE3, "--p", "0,0.5,0.5"}).code == 1);
}

TEST_CASE("truncate and fy-eval") {
  const auto t = run({"truncate", "--loss", R"({"kind":"cross_entropy","k":5})", "--times", "3",
                      "--w", "0"});
  CHECK(t.code == 0);
  CHECK(t.json()["value"].get<double>() == doctest::Approx(std::log(2.0)));
  const auto fy = run({"fy-eval", "--k", "3", "--negentropy", "sq_shannon", "--z", "0,0"});
  CHECK(fy.code == 0);
  CHECK(fy.json()["value"].get<double>() == doctest::Approx(std::log(3.0) * std::log(3.0)));
}

TEST_CASE("probes") {
  CHECK(run({"probe", "--loss", kCE3, "--kind", "totally-regular", "--samples", "200"}).code == 0);
  CHECK(run({"probe", "--loss", R"({"kind":"ww_hinge","k":3})"}).code != 0);
  CHECK(run({"mmatrix-probe", "--loss", kCE3, "--samples", "100"}).code == 0);
  CHECK(run({"grad-check", "--loss", kCE3, "--z", "0.3,-0.2"}).code == 0);
  const auto cal = run({"calibration-probe", "--loss", kCE3, "--p", "0.2,0.3,0.5"});
  CHECK(cal.code == 0);
  CHECK(cal.json()["gap"].get<double>() > 1e-6);
}

TEST_CASE("train-demo is deterministic") {
  const std::vector<std::string> args = {"train-demo", "--loss", kCE3, "--n", "400",
                                         "--epochs", "30", "--bayes-draws", "2000",
                                         "--tolerance", "0.2", "--seed", "3"};
  const auto a = run(args);
  const auto b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

#ifdef PERMLOSS_CLI_PATH
TEST_CASE("installed binary exit codes") {
  const std::string bin = PERMLOSS_CLI_PATH;
  CHECK(std::system((bin + " verify-identities --k 3 --trials 10 > /dev/null").c_str()) == 0);
  CHECK(std::system((bin + " eval --y 1 --v 0,0 > /dev/null 2>&1").c_str()) != 0);
}
#endif
