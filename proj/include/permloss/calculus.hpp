#pragma once

// Derivatives of the reduced form Lbar_y(z) = psi(rho_y z), the matrix A(z) and
// its M-matrix predicates, and the conditional risk C_p(z) = <p, Lbar(z)>.

#include "permloss/finite_diff.hpp"
#include "permloss/label_code.hpp"
#include "permloss/loss_zoo.hpp"

namespace permloss {

/// A point of the probability simplex.
class ProbVector {
 public:
  static constexpr double kSumTol = 1e-12;
  static constexpr double kInteriorEps = 1e-8;

  explicit ProbVector(Vec p, double interior_eps = kInteriorEps);
  static ProbVector uniform(int k);
  /// Parses "0.2,0.3,0.5".
  static ProbVector parse(const std::string& csv);

  int k() const { return static_cast<int>(p_.size()); }
  const Vec& values() const { return p_; }
  double operator()(int y) const { return p_(y - 1); }
  bool interior() const { return interior_; }

 private:
  Vec p_;
  bool interior_ = false;
};

/// Strict predicates use a 1e-12 margin; anything inside the margin is indeterminate.
struct MMatrixReport {
  static constexpr double kMargin = 1e-12;

  bool is_Z = false;
  bool diag_positive = false;
  bool is_strictly_diag_dominant = false;
  bool indeterminate = false;
  /// min over columns y of A_yy - sum_{l != y} |A_ly|.
  double min_dominance_gap = 0.0;

  bool all() const { return is_Z && diag_positive && is_strictly_diag_dominant; }
};

/// Z-pattern, positive diagonal, strict column diagonal dominance.
template <class Derived>
MMatrixReport mmatrix_report(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  MMatrixReport r;
  r.is_Z = true;
  r.diag_positive = true;
  r.is_strictly_diag_dominant = true;
  r.min_dominance_gap = std::numeric_limits<double>::infinity();
  const double m = MMatrixReport::kMargin;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    Scalar off = 0;
    for (Eigen::Index l = 0; l < a.rows(); ++l) {
      if (l == c) continue;
      if (a(l, c) > 0) r.is_Z = false;
      off += std::abs(a(l, c));
    }
    const double diag = static_cast<double>(a(c, c));
    if (diag <= 0) r.diag_positive = false;
    if (diag > 0 && diag <= m) r.indeterminate = true;
    const double gap = diag - static_cast<double>(off);
    r.min_dominance_gap = std::min(r.min_dominance_gap, gap);
    if (gap <= 0) r.is_strictly_diag_dominant = false;
    if (gap > 0 && gap <= m) r.indeterminate = true;
  }
  if (r.indeterminate) {
    r.diag_positive = r.diag_positive && a.diagonal().minCoeff() > m;
    r.is_strictly_diag_dominant = r.is_strictly_diag_dominant && r.min_dominance_gap > m;
  }
  return r;
}

/// Reduced loss vector Lbar(z) = (psi(rho_1 z), ..., psi(rho_k z)).
Vec reduced_loss(const Template& psi, const LabelCode& code, const Vec& z);

/// grad Lbar_y(z) = rho_y^T grad psi(rho_y z), in O(k).
Vec reduced_grad(const Template& psi, const LabelCode& code, int y, const Vec& z);
Vec reduced_grad(const Template& psi, int y, const Vec& z);

struct AMatrix {
  Mat A;
  MMatrixReport report;
};

/// Columns grad Lbar_1(z), ..., grad Lbar_{k-1}(z).
AMatrix A_matrix(const Template& psi, const Vec& z);

double conditional_risk(const Template& psi, const ProbVector& p, const Vec& z);
/// p_k grad psi(z) + A(z) (p_1, ..., p_{k-1}).
Vec risk_grad(const Template& psi, const ProbVector& p, const Vec& z);
/// sum_y p_y rho_y^T H(rho_y z) rho_y.
Mat risk_hessian(const Template& psi, const ProbVector& p, const Vec& z);

/// Largest relative error between grad psi and central differences of psi,
/// err = |g - g_fd|_inf / max(1, |g_fd|_inf).
double grad_relative_error(const Template& psi, const Vec& z);
/// Same for z -> psi(rho_y z) against reduced_grad.
double reduced_grad_relative_error(const Template& psi, const LabelCode& code, int y,
                                   const Vec& z);

}  // namespace permloss
