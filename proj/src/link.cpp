#include "permloss/link.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace permloss {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Value changes this small relative to |f| are indistinguishable from rounding.
bool within_roundoff(double delta, double f) {
  return std::abs(delta) <= 64 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
}

double safe_value(const NewtonProblem& problem, const Vec& z) {
  try {
    const double v = problem.value(z);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Backtracking along d. Returns the accepted step or 0 when none was found.
double line_search(const NewtonProblem& problem, const Vec& z, double f, const Vec& g,
                   const Vec& d, const SolverConfig& cfg, double* f_new) {
  const double slope = g.dot(d);
  double t = 1.0;
  for (int i = 0; i < 80; ++i) {
    const Vec trial = z + t * d;
    const double ft = safe_value(problem, trial);
    if (ft <= f + cfg.armijo * t * slope) {
      *f_new = ft;
      return t;
    }
    // Near the optimum the Armijo test is lost in rounding; fall back to
    // requiring a smaller gradient.
    if (std::isfinite(ft) && within_roundoff(ft - f, f) && within_roundoff(t * slope, f) &&
        inf_norm(problem.grad(trial)) < inf_norm(g)) {
      *f_new = std::min(ft, f);
      return t;
    }
    t *= cfg.backtrack;
  }
  return 0.0;
}

}  // namespace

LinkResult minimize_newton(const NewtonProblem& problem, Vec z0, const SolverConfig& cfg) {
  LinkResult out;
  out.hessian_jitter = cfg.hessian_jitter;
  Vec z = std::move(z0);
  double f = problem.value(z);
  out.values.push_back(f);
  Vec g = problem.grad(z);
  // The iterate with the smallest gradient is returned: once ||g|| reaches its
  // rounding floor, further steps only add noise.
  Vec best_z = z;
  double best_f = f;
  double best_res = inf_norm(g);
  const auto keep_best = [&] {
    const double res = inf_norm(g);
    if (res < best_res) {
      best_res = res;
      best_z = z;
      best_f = f;
    }
  };

  int it = 0;
  for (; it < cfg.max_iter && inf_norm(g) > cfg.grad_tol; ++it) {
    Vec d = -g;
    const Mat h = problem.hess ? problem.hess(z) : Mat();
    if (h.size() != 0) {
      Mat reg = h;
      reg.diagonal().array() += cfg.hessian_jitter;
      Eigen::LDLT<Mat> ldlt(reg);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Vec nd = ldlt.solve(-g);
        if (nd.allFinite() && g.dot(nd) < 0) d = nd;
      }
    }
    double f_new = f;
    double t = line_search(problem, z, f, g, d, cfg, &f_new);
    if (t == 0.0 && d != -g) {
      d = -g;
      t = line_search(problem, z, f, g, d, cfg, &f_new);
    }
    if (t == 0.0) break;
    z += t * d;
    f = f_new;
    g = problem.grad(z);
    out.values.push_back(f);
    keep_best();
  }

  for (int s = 0; s < cfg.fallback_steps && inf_norm(g) > cfg.grad_tol; ++s) {
    out.used_fallback = true;
    double f_new = f;
    const double t = line_search(problem, z, f, g, -g, cfg, &f_new);
    if (t == 0.0) break;
    z -= t * g;
    f = f_new;
    g = problem.grad(z);
    out.values.push_back(f);
    keep_best();
    ++it;
  }

  if (best_res < inf_norm(g)) out.values.push_back(best_f);
  out.z = std::move(best_z);
  out.residual = best_res;
  out.iterations = it;
  if (cfg.throw_on_stall && !(out.residual <= cfg.grad_tol)) {
    std::ostringstream msg;
    msg << "Newton solve did not reach gradient tolerance; residual " << out.residual;
    throw SolverError(msg.str(), out.residual);
  }
  return out;
}

LinkResult link(const Template& psi, const ProbVector& p, const SolverConfig& cfg) {
  require_size(p.k(), psi.k(), "link: p");
  if (!psi.smooth()) throw UnsupportedOperation("link requires a smooth template");
  if (p.values().minCoeff() < cfg.interior_eps) {
    std::ostringstream msg;
    msg << "link: p is on (or within " << cfg.interior_eps
        << " of) the simplex boundary; C_p has no minimizer";
    throw NoMinimizer(msg.str());
  }
  NewtonProblem problem;
  problem.value = [&](const Vec& z) { return conditional_risk(psi, p, z); };
  problem.grad = [&](const Vec& z) { return risk_grad(psi, p, z); };
  problem.hess = [&](const Vec& z) { return risk_hessian(psi, p, z); };
  return minimize_newton(problem, Vec::Zero(psi.dim()), cfg);
}

ProbVector inverse_link(const Template& psi, const Vec& z) {
  const AMatrix a = A_matrix(psi, z);
  Eigen::PartialPivLU<Mat> lu(a.A);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw DegenerateTemplate("inverse_link: A(z) is singular (rcond " + std::to_string(rcond) +
                             ")");
  }
  const Vec v = lu.solve(-psi.grad(z));
  if (!v.allFinite() || v.minCoeff() <= 0.0) {
    throw RegularityViolation("inverse_link: A(z)^{-1}(-grad psi) is not entrywise positive");
  }
  const double pk = 1.0 / (1.0 + v.sum());
  Vec p(psi.k());
  p.head(psi.dim()) = v * pk;
  p(psi.dim()) = pk;
  p /= p.sum();
  return ProbVector(std::move(p));
}

double kkt_residual(const Template& psi, const ProbVector& p, const Vec& z) {
  return inf_norm(risk_grad(psi, p, z));
}

}  // namespace permloss
