#include "permloss/calibration.hpp"

#include <cmath>
#include <future>
#include <random>

namespace permloss {

int underline_argmax(const Vec& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return static_cast<int>(best) + 1;
}

ArgmaxSignResult argmax_sign_equiv(const LabelCode& code, const Vec& v) {
  require_size(v.size(), code.k(), "argmax_sign_equiv");
  ArgmaxSignResult r;
  const int k = code.k();
  const double tau = 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff());
  r.tolerance = tau;
  const double vmax = v.maxCoeff();
  const Vec z = apply_D(code, v);
  Vec vprime(k);
  vprime.head(k - 1) = -z;
  vprime(k - 1) = 0.0;
  const double vpmax = vprime.maxCoeff();

  r.consistent = true;
  for (int y = 1; y <= k; ++y) {
    const bool in_argmax = v(y - 1) >= vmax - tau;
    const bool nonneg = apply_rho(code, y, z).minCoeff() >= -tau;
    const bool in_rec = vprime(y - 1) >= vpmax - tau;
    if (in_argmax) r.argmax.push_back(y);
    if (in_rec) r.reconstructed_argmax.push_back(y);
    r.margin_nonneg.push_back(nonneg);
    r.consistent = r.consistent && in_argmax == nonneg && in_argmax == in_rec;
  }
  return r;
}

PositiveNormalResult positive_normal(const Template& psi, const Vec& z, int samples,
                                     std::uint64_t seed, double box) {
  require_size(z.size(), psi.dim(), "positive_normal");
  PositiveNormalResult r;
  const ProbVector p = inverse_link(psi, z);
  r.p = p.values();
  const LabelCode code = LabelCode::build(psi.k());
  const Vec lz = reduced_loss(psi, code, z);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-box, box);
  for (int s = 0; s < samples; ++s) {
    Vec w = z;
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) += shift(rng);
    const double inner = (reduced_loss(psi, code, w) - lz).dot(r.p);
    ++r.checked;
    r.min_inner = std::min(r.min_inner, inner);
    if (inner < -1e-10) {
      if (r.violations == 0) r.witness = w;
      ++r.violations;
    }
  }
  r.roundtrip_error = (link(psi, p).z - z).cwiseAbs().maxCoeff();
  r.passed = r.violations == 0;
  return r;
}

namespace {

struct StartOutcome {
  double value = std::numeric_limits<double>::infinity();
  Vec z;
  double residual = std::numeric_limits<double>::infinity();
};

// C_p(z) + w sum_j min(0, (rho_y z)_j)^2 along the increasing weight schedule.
StartOutcome penalized_solve(const Template& psi, const ProbVector& p, const LabelCode& code,
                             int y, Vec z, const CalibrationConfig& cfg) {
  const Mat rho = code.rho(y).cast<double>();
  StartOutcome out;
  for (double w : cfg.penalty_weights) {
    NewtonProblem problem;
    problem.value = [&](const Vec& x) {
      const Vec m = apply_rho(code, y, x).cwiseMin(0.0);
      return conditional_risk(psi, p, x) + w * m.squaredNorm();
    };
    problem.grad = [&](const Vec& x) -> Vec {
      const Vec m = apply_rho(code, y, x).cwiseMin(0.0);
      return risk_grad(psi, p, x) + 2.0 * w * (rho.transpose() * m);
    };
    problem.hess = [&](const Vec& x) -> Mat {
      const Vec m = apply_rho(code, y, x);
      Vec active(m.size());
      // Constraints just inside the boundary count as active; otherwise Newton
      // steps from the feasible side overshoot the kink and stall.
      const double band = 1e-8 * std::max(1.0, x.cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < m.size(); ++j) active(j) = m(j) < band ? 1.0 : 0.0;
      return risk_hessian(psi, p, x) + 2.0 * w * rho.transpose() * active.asDiagonal() * rho;
    };
    const LinkResult res = minimize_newton(problem, z, cfg.solver);
    z = res.z;
    out.value = res.values.back();
    out.residual = res.residual;
  }
  out.z = std::move(z);
  return out;
}

// Lowers every score above v'_y to v'_y, so y attains the maximum of v'.
Vec repair(const LabelCode& code, int y, const Vec& z) {
  const int k = code.k();
  Vec v(k);
  v.head(k - 1) = -z;
  v(k - 1) = 0.0;
  const double cap = v(y - 1);
  v = v.cwiseMin(cap);
  return apply_D(code, v);
}

}  // namespace

CalibrationReport cc_inequality_probe(const Template& psi, const ProbVector& p,
                                      const CalibrationConfig& cfg) {
  require_size(p.k(), psi.k(), "cc_inequality_probe: p");
  if (!psi.smooth()) {
    throw UnsupportedOperation("cc_inequality_probe requires a smooth template; smooth '" +
                               psi.kind() + "' first");
  }
  if (!p.interior()) throw NoMinimizer("cc_inequality_probe: p must be interior");
  CalibrationReport r;
  r.p = p.values();
  r.margin = cfg.margin;
  r.theta = underline_argmax(r.p);
  const LabelCode code = LabelCode::build(psi.k());

  SolverConfig link_cfg;
  const LinkResult star = link(psi, p, link_cfg);
  r.z_star = star.z;
  r.global_inf = conditional_risk(psi, p, star.z);

  const double pmax = r.p.maxCoeff();
  std::vector<int> wrong;
  for (int y = 1; y <= psi.k(); ++y) {
    if (r.p(y - 1) < pmax) wrong.push_back(y);
  }
  if (wrong.empty()) {
    r.vacuous = true;
    r.passed = true;
    r.note = "every label attains max p; the wrong-argmax region is empty";
    return r;
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coord(-cfg.start_box, cfg.start_box);
  std::vector<Vec> starts{star.z};
  for (int s = 0; s < cfg.restarts; ++s) {
    Vec z(psi.dim());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = coord(rng);
    starts.push_back(std::move(z));
  }
  r.starts = static_cast<int>(starts.size());

  for (int y : wrong) {
    std::vector<std::future<StartOutcome>> jobs;
    for (const Vec& z0 : starts) {
      jobs.push_back(std::async(std::launch::async, [&, z0] {
        try {
          return penalized_solve(psi, p, code, y, z0, cfg);
        } catch (const Error&) {
          return StartOutcome{};
        }
      }));
    }
    WrongLabelBound b;
    b.label = y;
    b.lower = std::numeric_limits<double>::infinity();
    b.upper = std::numeric_limits<double>::infinity();
    for (auto& job : jobs) {
      const StartOutcome o = job.get();
      if (!std::isfinite(o.value)) continue;
      if (o.value < b.lower) {
        b.lower = o.value;
        b.z_lower = o.z;
        b.residual = o.residual;
      }
      const Vec zr = repair(code, y, o.z);
      const double up = conditional_risk(psi, p, zr);
      if (up < b.upper) {
        b.upper = up;
        b.z_upper = zr;
      }
    }
    b.converged = std::isfinite(b.lower) && b.residual <= cfg.residual_tol;
    if (!b.converged) r.inconclusive = true;
    if (b.lower < r.inner_lower) {
      r.inner_lower = b.lower;
      r.worst_label = y;
    }
    r.inner_upper = std::min(r.inner_upper, b.upper);
    r.per_label.push_back(std::move(b));
  }
  r.gap = r.inner_lower - r.global_inf;
  r.gap_upper = r.inner_upper - r.global_inf;
  r.passed = !r.inconclusive && r.gap > cfg.margin;
  if (psi.kind() == "smoothed_hinge") {
    r.note = "smoothed surrogate of a non-smooth template; suggestive only";
  }
  return r;
}

}  // namespace permloss
