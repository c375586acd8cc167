#pragma once

// Link function p -> argmin_z C_p(z) and its closed-form inverse through the
// KKT system -p_k grad psi(z) = A(z) (p_1, ..., p_{k-1}).

#include <vector>

#include "permloss/calculus.hpp"

namespace permloss {

struct SolverConfig {
  double grad_tol = 1e-10;       // on ||grad C_p||_inf
  int max_iter = 200;            // Newton iterations
  double backtrack = 0.5;
  double armijo = 1e-4;
  int fallback_steps = 2000;     // gradient-descent steps after Newton gives up
  double hessian_jitter = 1e-12;
  double interior_eps = 1e-8;
  bool throw_on_stall = true;    // otherwise return the last iterate and its residual
};

struct LinkResult {
  Vec z;
  double residual = 0.0;  // ||grad C_p(z)||_inf
  int iterations = 0;
  bool used_fallback = false;
  double hessian_jitter = 0.0;
  std::vector<double> values;  // C_p along the iterates from z = 0; the last entry is at z
};

/// Minimizes C_p from z = 0 by damped Newton with a gradient-descent fallback.
/// Throws NoMinimizer when min(p) < cfg.interior_eps and SolverError on stall.
LinkResult link(const Template& psi, const ProbVector& p, const SolverConfig& cfg = {});

/// Solves A(z) v = -grad psi(z); p_k = 1 / (1 + sum v), p_y = v_y p_k.
ProbVector inverse_link(const Template& psi, const Vec& z);

/// ||p_k grad psi(z) + A(z) p~||_inf.
double kkt_residual(const Template& psi, const ProbVector& p, const Vec& z);

/// Generic damped Newton used by the link and the calibration probe. `hess` may
/// return an empty matrix to request a plain gradient step.
struct NewtonProblem {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
};

LinkResult minimize_newton(const NewtonProblem& problem, Vec z0, const SolverConfig& cfg);

}  // namespace permloss
