#include "permloss/truncation.hpp"

#include <cmath>

namespace permloss {

Vec prepend(double lambda, const Vec& w) {
  Vec z(w.size() + 1);
  z(0) = lambda;
  z.tail(w.size()) = w;
  return z;
}

LimitTrace schedule_limit(const std::function<double(double)>& h,
                          const TruncationSchedule& schedule) {
  if (!(schedule.tol > 0) || schedule.max_exponent < schedule.min_stop_exponent) {
    throw InvalidArgument("truncation schedule: invalid tolerance or exponents");
  }
  LimitTrace trace;
  for (int e = 0; e <= schedule.max_exponent; ++e) {
    const double lambda = std::ldexp(1.0, e);
    const double value = h(lambda);
    if (!std::isfinite(value)) {
      throw DivergenceError("truncation: non-finite value at lambda = 2^" + std::to_string(e));
    }
    trace.lambdas.push_back(lambda);
    trace.values.push_back(value);
    const auto n = trace.values.size();
    if (e >= schedule.min_stop_exponent && n >= 2 &&
        std::abs(trace.values[n - 1] - trace.values[n - 2]) <= schedule.tol) {
      trace.value = value;
      trace.last_lambda = lambda;
      return trace;
    }
  }
  throw DivergenceError("truncation: schedule did not converge by lambda = 2^" +
                        std::to_string(schedule.max_exponent));
}

namespace {
void check_truncatable(const Template& psi) {
  if (psi.k() < 3) {
    throw InvalidArity("truncation needs k >= 3, got k = " + std::to_string(psi.k()));
  }
}
}  // namespace

Template truncate_numeric(const Template& psi, const TruncationSchedule& schedule) {
  check_truncatable(psi);
  Template::Parts parts;
  parts.k = psi.k() - 1;
  parts.kind = "truncated_numeric";
  parts.eval = [psi, schedule](const Vec& w) {
    return schedule_limit([&](double lambda) { return psi(prepend(lambda, w)); }, schedule).value;
  };
  if (psi.smooth()) {
    parts.grad = [psi, schedule](const Vec& w) -> Vec {
      const double lambda =
          schedule_limit([&](double l) { return psi(prepend(l, w)); }, schedule).last_lambda;
      return psi.grad(prepend(lambda, w)).tail(w.size());
    };
  }
  return Template(std::move(parts));
}

Template truncate(const Template& psi, const TruncationSchedule& schedule) {
  check_truncatable(psi);
  if (psi.has_closed_truncation()) return psi.closed_truncation();
  return truncate_numeric(psi, schedule);
}

Template iterated_truncate(const Template& psi, int m, const TruncationSchedule& schedule) {
  if (m < 0 || m > psi.k() - 2) {
    throw InvalidArgument("iterated_truncate: m must lie in [0, k-2] = [0, " +
                          std::to_string(psi.k() - 2) + "]");
  }
  Template out = psi;
  for (int i = 0; i < m; ++i) out = truncate(out, schedule);
  return out;
}

ShiftedLimitResult shifted_limit_check(const Template& psi, const Vec& z, double tol,
                                       const TruncationSchedule& schedule) {
  check_truncatable(psi);
  require_size(z.size(), psi.dim(), "shifted_limit_check");
  ShiftedLimitResult r;
  r.limit = schedule_limit(
                [&](double lambda) {
                  Vec x = z;
                  x(0) += lambda;
                  return psi(x);
                },
                schedule)
                .value;
  r.expected = truncate(psi, schedule)(z.tail(z.size() - 1));
  r.deviation = std::abs(r.limit - r.expected);
  r.passed = r.deviation <= tol;
  return r;
}

}  // namespace permloss
