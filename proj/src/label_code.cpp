#include "permloss/label_code.hpp"

#include <algorithm>
#include <numeric>

namespace permloss {

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
  std::vector<bool> seen(images_.size(), false);
  for (int v : images_) {
    if (v < 1 || v > size() || seen[v - 1]) {
      throw InvalidArgument("Permutation: index array is not a permutation of 1..k");
    }
    seen[v - 1] = true;
  }
}

Permutation Permutation::identity(int k) {
  std::vector<int> img(k);
  std::iota(img.begin(), img.end(), 1);
  return Permutation(std::move(img));
}

Permutation Permutation::transposition(int k, int i, int j) {
  std::vector<int> img(k);
  std::iota(img.begin(), img.end(), 1);
  std::swap(img.at(i - 1), img.at(j - 1));
  return Permutation(std::move(img));
}

Permutation Permutation::random(int k, std::mt19937_64& rng) {
  std::vector<int> img(k);
  std::iota(img.begin(), img.end(), 1);
  std::shuffle(img.begin(), img.end(), rng);
  return Permutation(std::move(img));
}

Permutation Permutation::compose(const Permutation& other) const {
  require_size(other.size(), size(), "Permutation::compose");
  std::vector<int> img(images_.size());
  for (int y = 1; y <= size(); ++y) img[y - 1] = (*this)(other(y));
  return Permutation(std::move(img));
}

IMat Permutation::matrix() const {
  IMat s = IMat::Zero(size(), size());
  for (int j = 0; j < size(); ++j) s(j, images_[j] - 1) = 1;
  return s;
}

IMat transposition_matrix(int n, int i, int j) {
  return Permutation::transposition(n, i, j).matrix();
}

LabelCode LabelCode::build(int k) {
  if (k < 2) throw InvalidArity("LabelCode::build: k must be >= 2, got " + std::to_string(k));
  LabelCode code;
  code.k_ = k;
  const int n = k - 1;
  code.rho_.reserve(k);
  for (int y = 1; y <= k; ++y) {
    IMat r = IMat::Identity(n, n);
    if (y < k) r.col(y - 1).setConstant(-1);
    code.rho_.push_back(std::move(r));
  }
  code.d_.resize(n, k);
  code.d_ << -IMat::Identity(n, n), IMat::Ones(n, 1);

  // D^dagger = D^T (D D^T)^{-1}; D D^T = I + 1 1^T.
  const Mat d = code.d_.cast<double>();
  const Mat gram = d * d.transpose();
  code.d_pinv_ = d.transpose() * gram.partialPivLu().solve(Mat::Identity(n, n));
  return code;
}

void LabelCode::check_class(int y) const {
  if (y < 1 || y > k_) {
    throw ShapeError("class index " + std::to_string(y) + " outside [1, " +
                     std::to_string(k_) + "]");
  }
}

const IMat& LabelCode::rho(int y) const {
  check_class(y);
  return rho_[y - 1];
}

IMat LabelCode::T(int y) const {
  check_class(y);
  return transposition_matrix(k_, y, k_);
}

Mat M_sigma(const LabelCode& code, const Permutation& sigma) {
  require_size(sigma.size(), code.k(), "M_sigma");
  return code.D().cast<double>() * sigma.matrix().cast<double>() * code.D_pinv();
}

bool IdentityReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const IdentityCheck& c) { return c.passed; });
}

namespace {

constexpr double kPinvTol = 1e-12;

void record_exact(IdentityCheck& check, const IMat& lhs, const IMat& rhs) {
  const double dev = (lhs - rhs).cwiseAbs().maxCoeff();
  check.max_abs_deviation = std::max(check.max_abs_deviation, dev);
  check.passed = check.passed && dev == 0.0;
  ++check.cases;
}

void record_float(IdentityCheck& check, const Mat& lhs, const Mat& rhs) {
  const double dev = (lhs - rhs).cwiseAbs().maxCoeff();
  check.max_abs_deviation = std::max(check.max_abs_deviation, dev);
  check.passed = check.passed && dev <= kPinvTol;
  check.exact = false;
  ++check.cases;
}

IMat unit(int n, int i) {
  IMat e = IMat::Zero(n, 1);
  e(i - 1) = 1;
  return e;
}

}  // namespace

IdentityReport verify_identities(const LabelCode& code, int trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("verify_identities: trials must be >= 1");
  const int k = code.k();
  const int n = k - 1;
  const IMat eye = IMat::Identity(n, n);
  const IMat ones = IMat::Ones(n, 1);
  const IMat d = code.D();

  IdentityReport report;
  report.k = k;
  report.trials = trials;

  IdentityCheck involution{"rho_squared_is_identity"};
  IdentityCheck intertwine{"D_T_y_equals_rho_y_D"};
  IdentityCheck projective{"projective_transposition"};
  IdentityCheck sub_main{"subtraction_rho_y_minus_T_rho_j"};
  IdentityCheck sub_yk{"subtraction_y_equals_k"};
  IdentityCheck sub_jk{"subtraction_j_equals_k"};
  IdentityCheck s_hom{"S_sigma_order_reversing"};
  IdentityCheck apply_match{"apply_rho_matches_matrix"};
  IdentityCheck pinv{"D_D_pinv_is_identity"};
  IdentityCheck m_tau{"M_tau_y_equals_rho_y"};
  IdentityCheck m_hom{"M_sigma_order_reversing"};

  for (int y = 1; y <= k; ++y) {
    const IMat& r = code.rho(y);
    record_exact(involution, r * r, eye);
    record_exact(intertwine, d * code.T(y), r * d);
    record_float(m_tau, M_sigma(code, Permutation::transposition(k, y, k)), r.cast<double>());
  }

  for (int y1 = 1; y1 <= n; ++y1) {
    for (int y2 = 1; y2 <= n; ++y2) {
      if (y1 == y2) continue;
      const IMat& r1 = code.rho(y1);
      const IMat& r2 = code.rho(y2);
      record_exact(projective, transposition_matrix(n, y1, y2), r1 * r2 * r1);
      // rho_y - T_(y,j) rho_j = (1 + e_j)(e_j - e_y)^T, with y = y1, j = y2.
      record_exact(sub_main, r1 - transposition_matrix(n, y1, y2) * r2,
                   (ones + unit(n, y2)) * (unit(n, y2) - unit(n, y1)).transpose());
    }
  }
  for (int j = 1; j <= n; ++j) {
    record_exact(sub_yk, code.rho(k) - code.rho(j),
                 (ones + unit(n, j)) * unit(n, j).transpose());
    record_exact(sub_jk, code.rho(j) - code.rho(k),
                 -(ones + unit(n, j)) * unit(n, j).transpose());
  }

  record_float(pinv, d.cast<double>() * code.D_pinv(), Mat::Identity(n, n));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(-50, 50);
  for (int t = 0; t < trials; ++t) {
    const Permutation a = Permutation::random(k, rng);
    const Permutation b = Permutation::random(k, rng);
    record_exact(s_hom, a.compose(b).matrix(), b.matrix() * a.matrix());
    record_float(m_hom, M_sigma(code, a.compose(b)), M_sigma(code, b) * M_sigma(code, a));

    IVec z(n);
    for (int j = 0; j < n; ++j) z(j) = coord(rng);
    for (int y = 1; y <= k; ++y) {
      record_exact(apply_match, apply_rho(code, y, z), code.rho(y) * z);
    }
  }

  report.checks = {involution, intertwine, projective, sub_main, sub_yk, sub_jk,
                   s_hom,      apply_match, pinv,      m_tau,    m_hom};
  // k = 2 has no distinct pairs in [k-1]; those checks pass vacuously.
  return report;
}

}  // namespace permloss
