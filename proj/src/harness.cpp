#include "permloss/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "permloss/calculus.hpp"

namespace permloss {

void MixtureSpec::validate() const {
  if (k() < 1 || d() < 1) throw InvalidArgument("mixture: need k, d >= 1");
  require_size(covariance.rows(), d(), "mixture covariance rows");
  require_size(covariance.cols(), d(), "mixture covariance cols");
  require_size(weights.size(), k(), "mixture weights");
  if (!means.allFinite() || !covariance.allFinite() || !weights.allFinite()) {
    throw NumericError("mixture: non-finite parameters");
  }
  if (weights.minCoeff() < 0 || !(weights.sum() > 0)) {
    throw InvalidArgument("mixture: weights must be nonnegative with positive sum");
  }
}

MixtureSpec triangle_mixture(double side) {
  MixtureSpec s;
  s.means.resize(3, 2);
  s.means << 0.0, 0.0, side, 0.0, 0.5 * side, 0.5 * std::sqrt(3.0) * side;
  s.covariance = Mat::Identity(2, 2);
  s.weights = Vec::Constant(3, 1.0 / 3.0);
  return s;
}

void Dataset::validate() const {
  if (static_cast<int>(labels.size()) != n()) throw ShapeError("dataset: labels and rows differ");
  if (k < 2) throw InvalidArity("dataset: k must be >= 2");
  for (int y : labels) {
    if (y < 1 || y > k) throw ShapeError("dataset: label " + std::to_string(y) + " out of range");
  }
  if (!features.allFinite()) throw NumericError("dataset: non-finite features");
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  out.k = k;
  out.generator = generator;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), d());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

MixtureSampler::MixtureSampler(MixtureSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Eigen::LLT<Mat> llt(spec_.covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericError("mixture: covariance is not positive definite");
  }
  chol_ = llt.matrixL();
  precision_ = llt.solve(Mat::Identity(spec_.d(), spec_.d()));
}

Dataset MixtureSampler::sample(int n, std::uint64_t seed) const {
  if (n < 1) throw InvalidArgument("mixture sample: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> label(spec_.weights.data(),
                                        spec_.weights.data() + spec_.weights.size());
  std::normal_distribution<double> normal;
  Dataset data;
  data.k = spec_.k();
  data.generator = spec_;
  data.features.resize(n, spec_.d());
  data.labels.resize(n);
  Vec e(spec_.d());
  for (int i = 0; i < n; ++i) {
    const int y = label(rng);
    for (int j = 0; j < spec_.d(); ++j) e(j) = normal(rng);
    data.features.row(i) = spec_.means.row(y) + (chol_ * e).transpose();
    data.labels[i] = y + 1;
  }
  return data;
}

int MixtureSampler::bayes_predict(const Vec& x) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < spec_.k(); ++y) {
    const double w = spec_.weights(y);
    if (w <= 0) continue;
    const Vec diff = x - spec_.means.row(y).transpose();
    const double score = std::log(w) - 0.5 * diff.dot(precision_ * diff);
    if (score > best_score) {
      best_score = score;
      best = y;
    }
  }
  return best + 1;
}

Dataset generate_mixture(const MixtureSpec& spec, int n, std::uint64_t seed) {
  return MixtureSampler(spec).sample(n, seed);
}

MonteCarloRisk bayes_risk_mc(const MixtureSpec& spec, long draws, std::uint64_t seed) {
  if (draws < 1) throw InvalidArgument("bayes_risk_mc: draws must be >= 1");
  const MixtureSampler sampler(spec);
  const Dataset data = sampler.sample(static_cast<int>(draws), seed);
  long errors = 0;
  for (int i = 0; i < data.n(); ++i) {
    if (sampler.bayes_predict(data.features.row(i).transpose()) != data.labels[i]) ++errors;
  }
  MonteCarloRisk r;
  r.draws = draws;
  r.risk = static_cast<double>(errors) / draws;
  r.std_error = std::sqrt(r.risk * (1.0 - r.risk) / draws);
  return r;
}

std::pair<Dataset, Dataset> split_parity(const Dataset& data, std::uint64_t seed) {
  std::vector<int> order(data.n());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) (i % 2 == 0 ? train : test).push_back(order[i]);
  return {data.subset(train), data.subset(test)};
}

LinearModel LinearModel::zeros(int d, int k) { return {Mat::Zero(d, k), Vec::Zero(k)}; }

int LinearModel::predict(const Vec& x) const {
  const Vec v = scores(x);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<int>(best) + 1;
}

int worker_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("PERMLOSS_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

namespace {

constexpr int kChunk = 128;

struct Partial {
  double risk = 0.0;
  Mat gW;
  Vec gb;
};

// Pairwise tree sum in a fixed order, independent of the thread count.
Partial tree_sum(std::vector<Partial>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return std::move(parts[lo]);
  const std::size_t mid = lo + (hi - lo) / 2;
  Partial a = tree_sum(parts, lo, mid);
  Partial b = tree_sum(parts, mid, hi);
  a.risk += b.risk;
  if (a.gW.size() != 0) {
    a.gW += b.gW;
    a.gb += b.gb;
  }
  return a;
}

Partial evaluate(const Dataset& data, const PermLoss& loss, const LinearModel& model,
                 bool with_grad, int threads) {
  const int n = data.n();
  const int chunks = (n + kChunk - 1) / kChunk;
  std::vector<Partial> parts(chunks);
  const Template& psi = loss.psi();
  const LabelCode& code = loss.code();
  auto work = [&](int c) {
    Partial& part = parts[c];
    if (with_grad) {
      part.gW = Mat::Zero(model.W.rows(), model.W.cols());
      part.gb = Vec::Zero(model.b.size());
    }
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i) {
      const Vec x = data.features.row(i).transpose();
      const int y = data.labels[i];
      const Vec z = apply_D(code, model.scores(x));
      part.risk += psi(apply_rho(code, y, z));
      if (with_grad) {
        const Vec gv = apply_D_transpose(code, reduced_grad(psi, code, y, z));
        part.gW.noalias() += x * gv.transpose();
        part.gb += gv;
      }
    }
  };
  const int t = std::max(1, std::min(worker_threads(threads), chunks));
  if (t == 1) {
    for (int c = 0; c < chunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    for (int w = 0; w < t; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int c = w; c < chunks; c += t) work(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  Partial total = tree_sum(parts, 0, parts.size());
  total.risk /= n;
  if (with_grad) {
    total.gW /= n;
    total.gb /= n;
  }
  return total;
}

double safe_risk(const Dataset& data, const PermLoss& loss, const LinearModel& model,
                 int threads) {
  try {
    const double r = evaluate(data, loss, model, false, threads).risk;
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

double empirical_risk(const Dataset& data, const PermLoss& loss, const LinearModel& model,
                      int threads) {
  return evaluate(data, loss, model, false, threads).risk;
}

double zero_one_risk(const Dataset& data, const LinearModel& model) {
  long errors = 0;
  for (int i = 0; i < data.n(); ++i) {
    if (model.predict(data.features.row(i).transpose()) != data.labels[i]) ++errors;
  }
  return static_cast<double>(errors) / data.n();
}

TrainResult train_erm(const Dataset& train, const Dataset& test, const PermLoss& loss,
                      const TrainConfig& cfg, std::optional<MonteCarloRisk> bayes,
                      std::optional<LinearModel> init) {
  train.validate();
  test.validate();
  if (train.n() == 0) throw InvalidArgument("train_erm: empty training set");
  if (train.k != loss.k() || test.k != loss.k()) throw InvalidArity("train_erm: k mismatch");
  if (!loss.psi().smooth()) throw UnsupportedOperation("train_erm requires a smooth loss");

  TrainResult out;
  LinearModel model = init ? *init : LinearModel::zeros(train.d(), train.k);
  Partial cur = evaluate(train, loss, model, true, cfg.threads);
  if (!std::isfinite(cur.risk)) throw DivergenceError("train_erm: initial risk is not finite");
  out.report.trajectory.push_back(cur.risk);
  double step = cfg.initial_step;
  int it = 0;
  auto grad_sq = [](const Partial& p) { return p.gW.squaredNorm() + p.gb.squaredNorm(); };
  for (; it < cfg.epochs; ++it) {
    const double g2 = grad_sq(cur);
    if (std::sqrt(g2) <= cfg.grad_tol) break;
    bool accepted = false;
    LinearModel trial;
    for (int tries = 0; tries < 60; ++tries) {
      trial.W = model.W - step * cur.gW;
      trial.b = model.b - step * cur.gb;
      const double r = safe_risk(train, loss, trial, cfg.threads);
      if (r <= cur.risk - cfg.armijo * step * g2) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) break;
    model = std::move(trial);
    const Partial next = evaluate(train, loss, model, true, cfg.threads);
    if (next.risk > cur.risk) {
      throw DivergenceError("train_erm: empirical risk increased after an accepted step");
    }
    cur = next;
    out.report.trajectory.push_back(cur.risk);
    step *= 2.0;
  }

  out.report.iterations = it;
  out.report.grad_norm = std::sqrt(grad_sq(cur));
  out.report.train_risk = cur.risk;
  out.report.train_01 = zero_one_risk(train, model);
  out.report.test_01 = zero_one_risk(test, model);
  out.report.bayes = bayes;
  if (bayes) out.report.gap = out.report.test_01 - bayes->risk;
  out.model = std::move(model);
  return out;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("write_csv: cannot open " + path);
  for (int j = 1; j <= data.d(); ++j) f << 'x' << j << ',';
  f << "label\n";
  f.precision(17);
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) f << data.features(i, j) << ',';
    f << data.labels[i] << '\n';
  }
}

Dataset read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw InvalidArgument("read_csv: empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1 || header.back() != "label") {
    throw InvalidArgument("read_csv: header must be x1,...,xd,label");
  }
  for (int j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw InvalidArgument("read_csv: unexpected column '" + header[j] + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col < d) {
        row.push_back(std::stod(cell));
      } else {
        labels.push_back(std::stoi(cell));
      }
      ++col;
    }
    if (col != d + 1) throw ShapeError("read_csv: row with " + std::to_string(col) + " cells");
    rows.push_back(std::move(row));
  }
  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) data.features(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  data.labels = std::move(labels);
  data.k = data.labels.empty() ? 0 : *std::max_element(data.labels.begin(), data.labels.end());
  return data;
}

}  // namespace permloss
