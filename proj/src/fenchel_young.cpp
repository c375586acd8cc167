#include "permloss/fenchel_young.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace permloss {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double log_sum_exp(const Vec& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

Vec uniform_point(int k) { return Vec::Constant(k, 1.0 / k); }

Vec dirichlet_one(int k, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Vec p(k);
  for (int i = 0; i < k; ++i) p(i) = e(rng);
  return p / p.sum();
}

Vec pad_front(const Vec& q, double value) {
  Vec out(q.size() + 1);
  out(0) = value;
  out.tail(q.size()) = q;
  return out;
}

}  // namespace

Vec safe_log(const Vec& p) {
  Vec out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    out(i) = p(i) > 0 ? std::log(p(i)) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

Vec complete_simplex(const Vec& pt) {
  Vec p(pt.size() + 1);
  p.head(pt.size()) = pt;
  p(pt.size()) = 1.0 - pt.sum();
  return p;
}

Negentropy::Negentropy(Parts parts) : parts_(std::move(parts)) {
  if (parts_.k < 2) {
    throw InvalidArity("negentropy: k must be >= 2, got " + std::to_string(parts_.k));
  }
  if (!parts_.eval) throw InvalidArgument("negentropy: eval is required");
}

double Negentropy::eval(const Vec& p) const { return eval(p, safe_log(p)); }

double Negentropy::eval(const Vec& p, const Vec& logp) const {
  require_size(p.size(), k(), "negentropy eval");
  return parts_.eval(p, logp);
}

Vec Negentropy::grad(const Vec& p) const { return grad(p, safe_log(p)); }

Vec Negentropy::grad(const Vec& p, const Vec& logp) const {
  if (!has_grad()) throw UnsupportedOperation("negentropy '" + kind() + "' has no gradient");
  require_size(p.size(), k(), "negentropy grad");
  return parts_.grad(p, logp);
}

Mat Negentropy::hessian(const Vec& p) const { return hessian(p, safe_log(p)); }

Mat Negentropy::hessian(const Vec& p, const Vec& logp) const {
  if (!has_hessian()) throw UnsupportedOperation("negentropy '" + kind() + "' has no Hessian");
  require_size(p.size(), k(), "negentropy hessian");
  return parts_.hessian(p, logp);
}

double Negentropy::reduced_eval(const Vec& pt) const {
  require_size(pt.size(), k() - 1, "reduced negentropy");
  return eval(complete_simplex(pt));
}

Vec Negentropy::reduced_grad(const Vec& pt) const {
  require_size(pt.size(), k() - 1, "reduced negentropy grad");
  const Vec g = grad(complete_simplex(pt));
  return g.head(k() - 1).array() - g(k() - 1);
}

Mat Negentropy::reduced_hessian(const Vec& pt) const {
  require_size(pt.size(), k() - 1, "reduced negentropy hessian");
  const Mat h = hessian(complete_simplex(pt));
  const int n = k() - 1;
  // J^T H J with J = [I; -1^T].
  Mat r = h.topLeftCorner(n, n);
  const Vec col = h.topRightCorner(n, 1);
  r.colwise() -= col;
  r.rowwise() -= col.transpose();
  r.array() += h(n, n);
  return 0.5 * (r + r.transpose());
}

Negentropy negentropy_shannon(int k) {
  Negentropy::Parts parts;
  parts.k = k;
  parts.kind = "shannon";
  parts.eval = [](const Vec& p, const Vec& logp) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) > 0) s += p(i) * logp(i);
    }
    return s;
  };
  parts.grad = [](const Vec&, const Vec& logp) -> Vec { return logp.array() + 1.0; };
  parts.hessian = [](const Vec& p, const Vec&) -> Mat {
    return p.cwiseInverse().asDiagonal();
  };
  return Negentropy(std::move(parts));
}

Negentropy negentropy_transformed(const Negentropy& base, const ScalarFunction& g) {
  const double omega_u = base.eval(uniform_point(base.k()));
  const double range = -omega_u;
  constexpr int kGrid = 201;
  for (int i = 0; i + 1 < kGrid; ++i) {
    const double x0 = range * i / (kGrid - 1);
    const double x1 = range * (i + 1) / (kGrid - 1);
    if (!(g.f(x1) > g.f(x0))) {
      throw InvalidTransform("negentropy_transformed: g is not increasing on [0, " +
                             std::to_string(range) + "]");
    }
    if (!(g.d2(x0) >= 0.0)) {
      throw InvalidTransform("negentropy_transformed: g is not convex on [0, " +
                             std::to_string(range) + "]");
    }
  }
  const double shift = g.f(range);
  Negentropy::Parts parts;
  parts.k = base.k();
  parts.kind = "transformed";
  parts.eval = [base, g, omega_u, shift](const Vec& p, const Vec& logp) {
    return g.f(base.eval(p, logp) - omega_u) - shift;
  };
  if (base.has_grad()) {
    parts.grad = [base, g, omega_u](const Vec& p, const Vec& logp) -> Vec {
      return g.d1(base.eval(p, logp) - omega_u) * base.grad(p, logp);
    };
  }
  if (base.has_grad() && base.has_hessian()) {
    parts.hessian = [base, g, omega_u](const Vec& p, const Vec& logp) -> Mat {
      const double s = base.eval(p, logp) - omega_u;
      const Vec gr = base.grad(p, logp);
      return g.d2(s) * gr * gr.transpose() + g.d1(s) * base.hessian(p, logp);
    };
  }
  return Negentropy(std::move(parts));
}

Negentropy negentropy_squared_shannon(int k) {
  return negentropy_transformed(negentropy_shannon(k), transform_square());
}

Negentropy negentropy_truncate(const Negentropy& omega) {
  if (omega.k() < 3) {
    throw InvalidArity("negentropy truncation needs k >= 3, got k = " + std::to_string(omega.k()));
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Negentropy::Parts parts;
  parts.k = omega.k() - 1;
  parts.kind = "truncated";
  parts.eval = [omega](const Vec& q, const Vec& logq) {
    return omega.eval(pad_front(q, 0.0), pad_front(logq, kNegInf));
  };
  if (omega.has_grad()) {
    parts.grad = [omega](const Vec& q, const Vec& logq) -> Vec {
      return omega.grad(pad_front(q, 0.0), pad_front(logq, kNegInf)).tail(q.size());
    };
  }
  if (omega.has_hessian()) {
    parts.hessian = [omega](const Vec& q, const Vec& logq) -> Mat {
      const auto n = q.size();
      return omega.hessian(pad_front(q, 0.0), pad_front(logq, kNegInf)).bottomRightCorner(n, n);
    };
  }
  return Negentropy(std::move(parts));
}

Negentropy negentropy_iterated_truncate(const Negentropy& omega, int m) {
  if (m < 0 || m > omega.k() - 2) {
    throw InvalidArgument("negentropy_iterated_truncate: m must lie in [0, " +
                          std::to_string(omega.k() - 2) + "]");
  }
  Negentropy out = omega;
  for (int i = 0; i < m; ++i) out = negentropy_truncate(out);
  return out;
}

Negentropy negentropy_custom(int k, Negentropy::EvalFn eval, Negentropy::GradFn grad,
                             Negentropy::HessFn hessian) {
  Negentropy::Parts parts;
  parts.k = k;
  parts.kind = "custom";
  parts.eval = std::move(eval);
  parts.grad = std::move(grad);
  parts.hessian = std::move(hessian);
  return Negentropy(std::move(parts));
}

Vec FYSpec::cost(int y) const {
  if (y < 1 || y > k()) throw ShapeError("FYSpec::cost: class out of range");
  Vec c = Vec::Constant(k(), mu);
  c(y - 1) = 0.0;
  return c;
}

namespace {

struct Iterate {
  Vec p;
  Vec logp;
  double f = 0.0;
};

double objective(const Negentropy& omega, const Vec& a, const Vec& p, const Vec& logp) {
  return -omega.eval(p, logp) + a.dot(p);
}

// Frank-Wolfe gap max_i G_i - <G, p> for G = a - grad Omega, less the rounding
// carried by each coordinate of G.
double fw_gap(const Vec& a, const Vec& grad_omega, const Vec& p) {
  const Vec g = a - grad_omega;
  const Vec r = 32 * kEps * (a.cwiseAbs() + grad_omega.cwiseAbs());
  const double best = (g - r).maxCoeff();
  const double avg = p.dot(g) + p.dot(r);
  return std::max(0.0, best - avg);
}

}  // namespace

namespace {

// Coordinates this small carry no weight in the objective; they are moved by a
// one-dimensional solve instead of the mirror step.
constexpr double kNegligible = 1e-30;

// Sets log p_i for negligible coordinates so that G_i matches the weighted mean
// of G over the supported ones. Leaves p unchanged in floating point.
void equalize_negligible(const Negentropy& omega, const Vec& a, Iterate& it, Vec& grad_omega) {
  const Eigen::Index k = it.p.size();
  const double log_floor = std::log(kNegligible);
  double wsum = 0.0;
  double c = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (it.p(i) >= kNegligible) {
      wsum += it.p(i);
      c += it.p(i) * (a(i) - grad_omega(i));
    }
  }
  if (wsum <= 0) return;
  c /= wsum;
  bool changed = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (it.p(i) >= kNegligible) continue;
    for (int round = 0; round < 3; ++round) {
      const double t0 = it.logp(i);
      const double phi0 = a(i) - grad_omega(i) - c;
      const double delta = 1e-6 * std::max(1.0, std::abs(t0));
      it.logp(i) = t0 + delta;
      const double phi1 = a(i) - omega.grad(it.p, it.logp)(i) - c;
      const double slope = (phi1 - phi0) / delta;
      if (!(slope < 0) || !std::isfinite(phi0)) {
        it.logp(i) = t0;
        break;
      }
      it.logp(i) = std::min(t0 - phi0 / slope, log_floor);
      it.p(i) = std::exp(it.logp(i));
      grad_omega = omega.grad(it.p, it.logp);
      changed = true;
      if (std::abs(a(i) - grad_omega(i) - c) <= 32 * kEps * (std::abs(a(i)) + std::abs(grad_omega(i)))) break;
    }
  }
  if (changed) {
    it.f = objective(omega, a, it.p, it.logp);
    grad_omega = omega.grad(it.p, it.logp);
  }
}

// One Newton step in logit coordinates on the supported set, driving every G_i
// to a common value. Returns false when the linear system is unusable.
bool newton_step(const Negentropy& omega, const Vec& a, const Iterate& cur,
                 const Vec& grad_omega, Iterate& next) {
  const Eigen::Index k = cur.p.size();
  std::vector<Eigen::Index> sup;
  Eigen::Index ref = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (cur.p(i) >= kNegligible) sup.push_back(i);
    if (cur.p(i) > cur.p(ref)) ref = i;
  }
  const auto m = static_cast<Eigen::Index>(sup.size());
  if (m < 2) return false;
  const Mat h = omega.hessian(cur.p, cur.logp);
  Mat hs(m, m);
  Vec ps(m);
  Vec gs(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    ps(r) = cur.p(sup[r]);
    gs(r) = a(sup[r]) - grad_omega(sup[r]);
    for (Eigen::Index c = 0; c < m; ++c) hs(r, c) = h(sup[r], sup[c]);
  }
  const Mat jac = Mat(ps.asDiagonal()) - ps * ps.transpose();
  const Mat hj = hs * jac;
  Mat sys(m, m);
  Eigen::Index col = 0;
  for (Eigen::Index c = 0; c < m; ++c) {
    if (sup[c] == ref) continue;
    sys.col(col++) = -hj.col(c);
  }
  sys.col(m - 1) = -Vec::Ones(m);
  const Eigen::FullPivLU<Mat> lu(sys);
  if (!lu.isInvertible()) return false;
  const Vec sol = lu.solve(-gs);
  if (!sol.allFinite()) return false;
  next.logp = cur.logp;
  col = 0;
  for (Eigen::Index c = 0; c < m; ++c) {
    if (sup[c] == ref) continue;
    next.logp(sup[c]) += sol(col++);
  }
  next.logp.array() -= log_sum_exp(next.logp);
  next.p = next.logp.array().exp();
  next.f = objective(omega, a, next.p, next.logp);
  return std::isfinite(next.f);
}

}  // namespace

FYResult maximize_on_simplex(const Negentropy& omega, const Vec& a, const FYSolverConfig& cfg) {
  require_size(a.size(), omega.k(), "maximize_on_simplex");
  if (!a.allFinite()) throw NumericError("maximize_on_simplex: non-finite linear term");
  FYResult out;
  const double lse = log_sum_exp(a);
  Iterate cur;
  cur.logp = a.array() - lse;
  cur.p = cur.logp.array().exp();

  if (cfg.closed_form && omega.kind() == "shannon") {
    out.value = lse;
    out.p = cur.p;
    out.gap = fw_gap(a, omega.grad(cur.p, cur.logp), cur.p);
    out.closed_form = true;
    return out;
  }
  if (!omega.has_grad()) {
    throw UnsupportedOperation("maximize_on_simplex: negentropy '" + omega.kind() +
                               "' has no gradient");
  }

  cur.f = objective(omega, a, cur.p, cur.logp);
  double eta = cfg.initial_step;
  Vec grad_omega = omega.grad(cur.p, cur.logp);
  equalize_negligible(omega, a, cur, grad_omega);
  double gap = fw_gap(a, grad_omega, cur.p);
  int it = 0;
  bool try_newton = omega.has_hessian();
  for (; it < cfg.max_iter && gap > cfg.target_gap; ++it) {
    // Near the optimum the value test loses resolution; Newton on the
    // stationarity condition finishes the job when the Hessian is available.
    if (try_newton && gap < 1e-4) {
      Iterate trial;
      if (newton_step(omega, a, cur, grad_omega, trial)) {
        Vec trial_grad = omega.grad(trial.p, trial.logp);
        equalize_negligible(omega, a, trial, trial_grad);
        const double trial_gap = fw_gap(a, trial_grad, trial.p);
        if (trial_gap < gap) {
          cur = std::move(trial);
          grad_omega = std::move(trial_grad);
          gap = trial_gap;
          continue;
        }
      }
      try_newton = false;
    }
    Vec g = a - grad_omega;
    double gmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (cur.p(i) >= kNegligible) gmax = std::max(gmax, g(i));
    }
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cur.p(i) >= kNegligible ? g(i) - gmax : 0.0;
    bool accepted = false;
    bool grow = true;
    Iterate next;
    Vec next_grad;
    double next_gap = gap;
    for (int tries = 0; tries < 60; ++tries) {
      next.logp = cur.logp + eta * g;
      next.logp.array() -= log_sum_exp(next.logp);
      next.p = next.logp.array().exp();
      next.f = objective(omega, a, next.p, next.logp);
      double kl = 0.0;
      for (Eigen::Index i = 0; i < next.p.size(); ++i) {
        if (next.p(i) > 0) kl += next.p(i) * (next.logp(i) - cur.logp(i));
      }
      const double model = cur.f + g.dot(next.p - cur.p) - kl / eta;
      if (std::isfinite(next.f)) {
        if (next.f >= model) {
          accepted = true;
        } else if (next.f >= model - 64 * kEps * (1.0 + std::abs(cur.f))) {
          // Inside rounding the value test cannot tell; require a smaller gap.
          next_grad = omega.grad(next.p, next.logp);
          next_gap = fw_gap(a, next_grad, next.p);
          accepted = next_gap < gap;
          grow = false;
        }
        if (accepted) break;
      }
      eta *= 0.5;
    }
    if (!accepted) break;
    cur = std::move(next);
    grad_omega = grow ? omega.grad(cur.p, cur.logp) : std::move(next_grad);
    equalize_negligible(omega, a, cur, grad_omega);
    gap = fw_gap(a, grad_omega, cur.p);
    if (grow) eta *= 2.0;
    try_newton = omega.has_hessian();
  }

  out.value = cur.f;
  out.p = cur.p;
  out.gap = gap;
  out.iterations = it;
  if (!(gap <= cfg.gap_tol)) {
    std::ostringstream msg;
    msg << "mirror ascent: duality gap " << gap << " above " << cfg.gap_tol << " after " << it
        << " iterations";
    throw SolverError(msg.str(), gap);
  }
  return out;
}

FYResult fy_template_eval(const FYSpec& spec, const Vec& z, const FYSolverConfig& cfg) {
  require_size(z.size(), spec.k() - 1, "fy_template_eval");
  if (!z.allFinite()) throw NumericError("fy_template_eval: non-finite z");
  Vec a(spec.k());
  a.head(spec.k() - 1) = spec.mu - z.array();
  a(spec.k() - 1) = 0.0;
  return maximize_on_simplex(spec.omega, a, cfg);
}

Template fy_template(const FYSpec& spec, const FYSolverConfig& cfg) {
  Template::Parts parts;
  parts.k = spec.k();
  parts.kind = "fenchel_young";
  const int n = spec.k() - 1;
  parts.eval = [spec, cfg](const Vec& z) { return fy_template_eval(spec, z, cfg).value; };
  parts.grad = [spec, cfg, n](const Vec& z) -> Vec {
    return -fy_template_eval(spec, z, cfg).p.head(n);
  };
  if (spec.omega.has_hessian()) {
    parts.hessian = [spec, cfg, n](const Vec& z) -> Mat {
      const FYResult r = fy_template_eval(spec, z, cfg);
      const Vec pt = r.p.head(n);
      if (r.closed_form) return Mat(pt.asDiagonal()) - pt * pt.transpose();
      const Mat h = spec.omega.reduced_hessian(pt);
      Eigen::LDLT<Mat> ldlt(h);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          ldlt.vectorD().minCoeff() <= 0.0) {
        throw NumericError("fy_template: reduced Hessian of the negentropy is singular here");
      }
      return ldlt.solve(Mat::Identity(n, n));
    };
  }
  if (spec.k() >= 3) {
    parts.closed_truncation = [spec, cfg] {
      return fy_template(FYSpec{negentropy_truncate(spec.omega), spec.mu}, cfg);
    };
  }
  return Template(std::move(parts));
}

double fy_loss_eval(const FYSpec& spec, int y, const Vec& v, const FYSolverConfig& cfg) {
  const LabelCode code = LabelCode::build(spec.k());
  return fy_template_eval(spec, relative_margin(code, y, v), cfg).value;
}

double fy_loss_direct(const FYSpec& spec, int y, const Vec& v, const FYSolverConfig& cfg) {
  require_size(v.size(), spec.k(), "fy_loss_direct");
  const Vec c = spec.cost(y);
  const Vec a = v + c;
  Vec ey = Vec::Zero(spec.k());
  ey(y - 1) = 1.0;
  return maximize_on_simplex(spec.omega, a, cfg).value - a.dot(ey) + spec.omega.eval(ey);
}

NegentropyCheck negentropy_check(const Negentropy& omega, int samples, std::uint64_t seed) {
  NegentropyCheck r;
  const int k = omega.k();
  std::mt19937_64 rng(seed);
  constexpr double kTol = 1e-12;

  for (int i = 0; i < k; ++i) {
    Vec e = Vec::Zero(k);
    e(i) = 1.0;
    r.vertex_max_abs = std::max(r.vertex_max_abs, std::abs(omega.eval(e)));
  }
  r.vertex_zero = r.vertex_max_abs <= kTol;

  for (int s = 0; s < samples; ++s) {
    const Vec p = dirichlet_one(k, rng);
    const Vec q = dirichlet_one(k, rng);
    const Permutation sigma = Permutation::random(k, rng);
    const double op = omega.eval(p);
    const double oq = omega.eval(q);

    const double dev = std::abs(omega.eval(sigma.apply(p)) - op) / std::max(1.0, std::abs(op));
    if (dev > r.symmetry_deviation) r.symmetry_deviation = dev;
    if (dev > kTol && r.symmetric) {
      r.symmetric = false;
      r.symmetry_witness = p;
    }

    if (op > r.max_value) r.max_value = op;
    if (op > kTol && r.nonpositive) {
      r.nonpositive = false;
      r.nonpositive_witness = p;
    }

    const double slack = 0.5 * (op + oq) - omega.eval(0.5 * (p + q));
    if (slack < r.min_convexity_slack) r.min_convexity_slack = slack;
    if (slack < -kTol * (1.0 + std::abs(op) + std::abs(oq)) && r.midpoint_convex) {
      r.midpoint_convex = false;
      r.convexity_witness = std::make_pair(p, q);
    }
  }

  if (omega.has_grad()) {
    const Vec u = uniform_point(k);
    Vec e1 = Vec::Zero(k);
    e1(0) = 1.0;
    for (int j = 1; j <= 6; ++j) {
      const double t = 1.0 - std::pow(10.0, -j);
      const Vec p = (1.0 - t) * u + t * e1;
      r.legendre_t.push_back(t);
      r.legendre_norms.push_back(omega.reduced_grad(p.head(k - 1)).norm());
    }
    bool increasing = true;
    for (std::size_t i = 1; i < r.legendre_norms.size(); ++i) {
      increasing = increasing && r.legendre_norms[i] > r.legendre_norms[i - 1];
    }
    r.legendre_growth = increasing && r.legendre_norms.back() >= 2.0 * r.legendre_norms.front();
  }
  return r;
}

std::vector<Vec> sample_box(int dim, int samples, double box, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-box, box);
  std::vector<Vec> out;
  out.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    Vec w(dim);
    for (int j = 0; j < dim; ++j) w(j) = coord(rng);
    out.push_back(std::move(w));
  }
  return out;
}

CommuteResult fy_truncation_commute_check(const FYSpec& spec, const std::vector<Vec>& w,
                                          const FYSolverConfig& cfg,
                                          const TruncationSchedule& schedule) {
  if (spec.k() < 3) throw InvalidArity("fy_truncation_commute_check needs k >= 3");
  const Template lhs = truncate_numeric(fy_template(spec, cfg), schedule);
  const Template rhs = fy_template(FYSpec{negentropy_truncate(spec.omega), spec.mu}, cfg);
  CommuteResult r;
  for (const Vec& x : w) {
    const double a = lhs(x);
    const double b = rhs(x);
    r.w.push_back(x);
    r.lhs.push_back(a);
    r.rhs.push_back(b);
    const double dev = std::abs(a - b);
    if (dev >= r.max_deviation) {
      r.max_deviation = dev;
      r.worst_w = x;
    }
  }
  return r;
}

}  // namespace permloss
