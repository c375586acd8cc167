#pragma once

// trunc[psi](w) = lim_{lambda -> inf} psi(lambda, w), closed form where the
// template carries one, otherwise evaluated along a doubling schedule.

#include <functional>
#include <vector>

#include "permloss/loss_zoo.hpp"

namespace permloss {

struct TruncationSchedule {
  int max_exponent = 40;       // lambda = 2^0, ..., 2^max_exponent
  int min_stop_exponent = 20;  // never stop before lambda >= 2^20
  double tol = 1e-10;          // on successive differences
};

struct LimitTrace {
  double value = 0.0;
  double last_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> values;
};

/// lim_{lambda -> inf} h(lambda) along the schedule. Throws DivergenceError.
LimitTrace schedule_limit(const std::function<double(double)>& h,
                          const TruncationSchedule& schedule = {});

/// Closed form when available, otherwise the numeric schedule.
Template truncate(const Template& psi, const TruncationSchedule& schedule = {});
/// Always the numeric schedule; the gradient is the limit of the trailing
/// gradient components.
Template truncate_numeric(const Template& psi, const TruncationSchedule& schedule = {});
/// psi^(n) with n = k - m.
Template iterated_truncate(const Template& psi, int m, const TruncationSchedule& schedule = {});

/// (lambda, w): lambda in the first slot.
Vec prepend(double lambda, const Vec& w);

struct ShiftedLimitResult {
  bool passed = false;
  double limit = 0.0;     // lim psi(z + lambda e_1)
  double expected = 0.0;  // trunc[psi](z_2, ..., z_{k-1})
  double deviation = 0.0;
};

/// lim psi(z + lambda e_1) = trunc[psi](drop-first(z)) within tol.
ShiftedLimitResult shifted_limit_check(const Template& psi, const Vec& z, double tol = 1e-5,
                                       const TruncationSchedule& schedule = {});

}  // namespace permloss
