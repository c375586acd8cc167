#pragma once

// Synthetic Gaussian mixtures, Monte-Carlo Bayes risk, and a full-batch linear
// ERM trainer for PERM losses.

#include <optional>
#include <string>
#include <vector>

#include "permloss/loss_zoo.hpp"

namespace permloss {

struct MixtureSpec {
  Mat means;       // k x d, row y is the mean of class y
  Mat covariance;  // d x d, shared
  Vec weights;     // k mixing weights

  int k() const { return static_cast<int>(means.rows()); }
  int d() const { return static_cast<int>(means.cols()); }
  void validate() const;
};

/// Three classes in the plane at the vertices of an equilateral triangle with
/// the given side, unit covariance, equal weights.
MixtureSpec triangle_mixture(double side = 2.0);

struct Dataset {
  Mat features;             // n x d
  std::vector<int> labels;  // 1-based
  int k = 0;
  std::optional<MixtureSpec> generator;

  int n() const { return static_cast<int>(features.rows()); }
  int d() const { return static_cast<int>(features.cols()); }
  void validate() const;
  Dataset subset(const std::vector<int>& rows) const;
};

class MixtureSampler {
 public:
  explicit MixtureSampler(MixtureSpec spec);

  const MixtureSpec& spec() const { return spec_; }
  Dataset sample(int n, std::uint64_t seed) const;
  /// argmax_y log pi_y - 1/2 (x - m_y)^T Sigma^{-1} (x - m_y), lowest index on ties.
  int bayes_predict(const Vec& x) const;

 private:
  MixtureSpec spec_;
  Mat chol_;       // lower Cholesky factor of the covariance
  Mat precision_;
};

Dataset generate_mixture(const MixtureSpec& spec, int n, std::uint64_t seed);

struct MonteCarloRisk {
  double risk = 0.0;
  double std_error = 0.0;
  long draws = 0;
};

MonteCarloRisk bayes_risk_mc(const MixtureSpec& spec, long draws, std::uint64_t seed);

/// Seeded shuffle, then even positions to train and odd positions to test.
std::pair<Dataset, Dataset> split_parity(const Dataset& data, std::uint64_t seed);

struct LinearModel {
  Mat W;  // d x k
  Vec b;  // k

  static LinearModel zeros(int d, int k);
  Vec scores(const Vec& x) const { return W.transpose() * x + b; }
  int predict(const Vec& x) const;
};

struct TrainConfig {
  int epochs = 300;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  double grad_tol = 1e-8;
  int threads = 0;  // 0: PERMLOSS_THREADS or hardware concurrency
};

struct RiskReport {
  std::vector<double> trajectory;  // empirical L-risk per accepted step
  double train_risk = 0.0;
  double train_01 = 0.0;
  double test_01 = 0.0;
  std::optional<MonteCarloRisk> bayes;
  double gap = 0.0;  // test_01 - bayes
  int iterations = 0;
  double grad_norm = 0.0;
};

struct TrainResult {
  LinearModel model;
  RiskReport report;
};

/// Full-batch gradient descent with backtracking on the empirical L-risk.
TrainResult train_erm(const Dataset& train, const Dataset& test, const PermLoss& loss,
                      const TrainConfig& cfg = {}, std::optional<MonteCarloRisk> bayes = {},
                      std::optional<LinearModel> init = {});

double empirical_risk(const Dataset& data, const PermLoss& loss, const LinearModel& model,
                      int threads = 0);
double zero_one_risk(const Dataset& data, const LinearModel& model);

/// Number of worker threads honoring PERMLOSS_THREADS.
int worker_threads(int requested = 0);

/// Header x1,...,xd,label; labels 1-based.
void write_csv(const Dataset& data, const std::string& path);
Dataset read_csv(const std::string& path);

}  // namespace permloss
