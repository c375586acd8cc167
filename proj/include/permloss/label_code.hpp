#pragma once

// Matrix label code {rho_y}, the relative-margin map D, its pseudo-inverse,
// and permutation matrices. Classes are 1-indexed: y in [1, k].

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "permloss/types.hpp"

namespace permloss {

/// A bijection on [k], stored as sigma[j-1] = sigma(j).
class Permutation {
 public:
  explicit Permutation(std::vector<int> images);

  static Permutation identity(int k);
  /// Swaps i and j (1-based).
  static Permutation transposition(int k, int i, int j);
  static Permutation random(int k, std::mt19937_64& rng);

  int size() const { return static_cast<int>(images_.size()); }
  int operator()(int j) const { return images_[j - 1]; }
  const std::vector<int>& images() const { return images_; }

  /// (this * other)(y) = this(other(y)).
  Permutation compose(const Permutation& other) const;

  /// S_sigma with [S_sigma v]_j = v_{sigma(j)}.
  IMat matrix() const;

  template <class Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply(
      const Eigen::MatrixBase<Derived>& v) const {
    require_size(v.size(), size(), "Permutation::apply");
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(v.size());
    for (int j = 0; j < size(); ++j) out(j) = v(images_[j] - 1);
    return out;
  }

 private:
  std::vector<int> images_;
};

/// Integer permutation matrix of the transposition (i j) on [n].
IMat transposition_matrix(int n, int i, int j);

class LabelCode {
 public:
  static LabelCode build(int k);

  int k() const { return k_; }
  const IMat& rho(int y) const;
  const IMat& D() const { return d_; }
  const Mat& D_pinv() const { return d_pinv_; }
  /// T_y: the k x k matrix of the transposition swapping y and k.
  IMat T(int y) const;

  void check_class(int y) const;

 private:
  LabelCode() = default;
  int k_ = 0;
  std::vector<IMat> rho_;
  IMat d_;
  Mat d_pinv_;
};

/// rho_y z in O(k): z_j - z_y for j != y and -z_y at j = y (y < k); z for y = k.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_rho(
    const LabelCode& code, int y, const Eigen::MatrixBase<Derived>& z) {
  code.check_class(y);
  require_size(z.size(), code.k() - 1, "apply_rho");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out = z;
  if (y == code.k()) return out;
  const auto zy = z(y - 1);
  for (Eigen::Index j = 0; j < out.size(); ++j) out(j) -= zy;
  out(y - 1) = -zy;
  return out;
}

/// rho_y^T w in O(k): w_j for j != y and -sum(w) at j = y.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_rho_transpose(
    const LabelCode& code, int y, const Eigen::MatrixBase<Derived>& w) {
  code.check_class(y);
  require_size(w.size(), code.k() - 1, "apply_rho_transpose");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out = w;
  if (y < code.k()) out(y - 1) = -w.sum();
  return out;
}

/// D v = (v_k - v_1, ..., v_k - v_{k-1}).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_D(
    const LabelCode& code, const Eigen::MatrixBase<Derived>& v) {
  require_size(v.size(), code.k(), "apply_D");
  const Eigen::Index n = code.k() - 1;
  return (Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>::Constant(n, v(n)) -
          v.head(n))
      .eval();
}

/// D^T w = (-w_1, ..., -w_{k-1}, sum w); pulls a reduced gradient back to scores.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply_D_transpose(
    const LabelCode& code, const Eigen::MatrixBase<Derived>& w) {
  require_size(w.size(), code.k() - 1, "apply_D_transpose");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(code.k());
  out.head(code.k() - 1) = -w;
  out(code.k() - 1) = w.sum();
  return out;
}

/// rho_y D v, computed through apply_rho after apply_D.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> relative_margin(
    const LabelCode& code, int y, const Eigen::MatrixBase<Derived>& v) {
  return apply_rho(code, y, apply_D(code, v));
}

/// rho_y D v from the component formula: entry j is v_y - v_j for j != y and
/// v_y - v_k at j = y.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> relative_margin_explicit(
    const LabelCode& code, int y, const Eigen::MatrixBase<Derived>& v) {
  code.check_class(y);
  require_size(v.size(), code.k(), "relative_margin_explicit");
  const int k = code.k();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(k - 1);
  for (int j = 1; j < k; ++j) out(j - 1) = v(y - 1) - v(j == y ? k - 1 : j - 1);
  return out;
}

/// (v_y - v_j) for j != y in increasing j. A permutation of rho_y D v.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> relative_margin_omitted(
    const LabelCode& code, int y, const Eigen::MatrixBase<Derived>& v) {
  code.check_class(y);
  require_size(v.size(), code.k(), "relative_margin_omitted");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(code.k() - 1);
  Eigen::Index pos = 0;
  for (int j = 1; j <= code.k(); ++j) {
    if (j != y) out(pos++) = v(y - 1) - v(j - 1);
  }
  return out;
}

/// M_sigma = D S_sigma D^dagger.
Mat M_sigma(const LabelCode& code, const Permutation& sigma);

struct IdentityCheck {
  std::string name;
  bool passed = true;
  double max_abs_deviation = 0.0;
  long cases = 0;
  bool exact = true;  // integer identity (tolerance 0) vs pseudo-inverse (1e-12)
};

struct IdentityReport {
  int k = 0;
  int trials = 0;
  std::vector<IdentityCheck> checks;
  bool all_passed() const;
};

/// Runs the label-code identity suite. Integer identities are checked exactly for
/// every applicable y, (y1, y2) and (y, j); permutation identities on `trials`
/// random pairs drawn from `seed`.
IdentityReport verify_identities(const LabelCode& code, int trials, std::uint64_t seed = 0);

}  // namespace permloss
