#pragma once

// Central finite differences. Used as oracles against hand-coded derivatives and
// as the Hessian fallback for templates that only provide a gradient.

#include <cmath>
#include <limits>

#include "permloss/types.hpp"

namespace permloss {

/// h = cbrt(eps) * max(1, ||z||_inf).
template <class Scalar>
Scalar default_fd_step(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z) {
  using std::cbrt;
  const Scalar scale = z.size() == 0 ? Scalar(1) : std::max(Scalar(1), z.cwiseAbs().maxCoeff());
  return cbrt(std::numeric_limits<Scalar>::epsilon()) * scale;
}

namespace detail {
template <class Scalar>
Scalar checked(Scalar value) {
  if (!std::isfinite(value)) throw NumericError("finite difference: non-finite evaluation");
  return value;
}
}  // namespace detail

template <class Scalar, class F>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fd_gradient(
    F&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, Scalar h) {
  if (!(h > 0)) throw InvalidArgument("fd_gradient: step must be positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(z.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    x(i) = z(i) + h;
    const Scalar up = detail::checked<Scalar>(f(x));
    x(i) = z(i) - h;
    const Scalar down = detail::checked<Scalar>(f(x));
    x(i) = z(i);
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

/// Jacobian of a vector map, column j = d g / d z_j.
template <class Scalar, class G>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fd_jacobian(
    G&& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, Scalar h) {
  if (!(h > 0)) throw InvalidArgument("fd_jacobian: step must be positive");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = z;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> jac;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    x(j) = z(j) + h;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> up = g(x);
    x(j) = z(j) - h;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> down = g(x);
    x(j) = z(j);
    if (j == 0) jac.resize(up.size(), z.size());
    jac.col(j) = (up - down) / (2 * h);
  }
  if (!jac.allFinite()) throw NumericError("fd_jacobian: non-finite evaluation");
  return jac;
}

/// Second differences; the result is symmetrized.
template <class Scalar, class F>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fd_hessian(
    F&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z, Scalar h) {
  if (!(h > 0)) throw InvalidArgument("fd_hessian: step must be positive");
  const Eigen::Index n = z.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hess(n, n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = z;
  const Scalar center = detail::checked<Scalar>(f(z));
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = z(i) + h;
    const Scalar up = detail::checked<Scalar>(f(x));
    x(i) = z(i) - h;
    const Scalar down = detail::checked<Scalar>(f(x));
    x(i) = z(i);
    hess(i, i) = (up - 2 * center + down) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      Scalar acc = 0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          x(i) = z(i) + si * h;
          x(j) = z(j) + sj * h;
          acc += si * sj * detail::checked<Scalar>(f(x));
        }
      }
      x(i) = z(i);
      x(j) = z(j);
      hess(i, j) = hess(j, i) = acc / (4 * h * h);
    }
  }
  return (Scalar(0.5) * (hess + hess.transpose())).eval();
}

}  // namespace permloss
