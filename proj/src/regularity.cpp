#include "permloss/regularity.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace permloss {

bool RegularityReport::passed() const {
  bool ok = nonneg.passed && grad_negative.passed && hessian_pd.passed;
  for (const auto& s : semi_coercive) ok = ok && (s.passed || s.inconclusive);
  return ok;
}

bool GammaPhiCheck::passed() const {
  return gamma_nonneg && gamma_increasing && gamma_convex && phi_decreasing &&
         phi_strictly_convex && phi_vanishes && smooth;
}

namespace {

std::vector<Vec> probe_points(int n, const ProbeOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> coord(-opts.box, opts.box);
  std::vector<Vec> pts;
  pts.reserve(opts.samples + (n <= 12 ? (1u << n) : 0u));
  for (int s = 0; s < opts.samples; ++s) {
    Vec z(n);
    for (int j = 0; j < n; ++j) z(j) = coord(rng);
    pts.push_back(std::move(z));
  }
  if (n <= 12) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      Vec z(n);
      for (int j = 0; j < n; ++j) z(j) = (mask >> j) & 1u ? opts.box : -opts.box;
      pts.push_back(std::move(z));
    }
  }
  return pts;
}

void note_violation(PredicateResult& r, const Vec& z) {
  if (r.passed) r.witness = z;
  r.passed = false;
}

}  // namespace

SemiCoercivityResult semi_coercivity_probe(const Template& psi, double level, int samples,
                                           std::uint64_t seed) {
  SemiCoercivityResult r;
  r.level = level;
  const int n = psi.dim();
  const double half = 5.0 * (1.0 + std::abs(level));
  std::mt19937_64 rng(seed);

  auto sweep = [&](double half_side, long* accepted) {
    std::uniform_real_distribution<double> coord(-half_side, half_side);
    double b = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      Vec z(n);
      for (int j = 0; j < n; ++j) z(j) = coord(rng);
      double value;
      try {
        value = psi(z);
      } catch (const NumericError&) {
        continue;  // overflow: far outside any finite sublevel set
      }
      if (value <= level) {
        ++*accepted;
        b = std::min(b, z.minCoeff());
      }
    }
    return b;
  };

  long acc_small = 0;
  long acc_wide = 0;
  const double b_small = sweep(half, &acc_small);
  const double b_wide = sweep(4.0 * half, &acc_wide);
  r.accepted = acc_small;
  if (acc_small == 0) {
    r.inconclusive = true;
    return r;
  }
  r.b_hat = b_small;
  // For a semi-coercive template the wider box keeps b_hat near its value on the
  // smaller one; an unbounded coordinate pushes it out towards -4 * half.
  r.unbounded_below = acc_wide > 0 && b_wide < b_small - half;
  r.passed = std::isfinite(r.b_hat) && !r.unbounded_below;
  return r;
}

RegularityReport regularity_probe(const Template& psi, const ProbeOptions& opts) {
  if (!psi.smooth()) {
    throw UnsupportedOperation("regularity_probe: template '" + psi.kind() +
                               "' is not twice differentiable");
  }
  RegularityReport rep;
  rep.k = psi.k();
  rep.box = opts.box;
  const int n = psi.dim();
  rep.nonneg.worst = std::numeric_limits<double>::infinity();
  rep.grad_negative.worst = -std::numeric_limits<double>::infinity();
  rep.hessian_pd.worst = std::numeric_limits<double>::infinity();

  for (const Vec& z : probe_points(n, opts)) {
    ++rep.samples;
    const double value = psi(z);
    rep.nonneg.worst = std::min(rep.nonneg.worst, value);
    ++rep.nonneg.checked;
    if (!(value >= 0.0)) note_violation(rep.nonneg, z);

    const Vec g = psi.grad(z);
    rep.grad_negative.worst = std::max(rep.grad_negative.worst, g.maxCoeff());
    ++rep.grad_negative.checked;
    if (!(g.maxCoeff() < -opts.margin)) note_violation(rep.grad_negative, z);

    const Mat h = psi.hessian(z);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(h, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    rep.hessian_pd.worst = std::min(rep.hessian_pd.worst, min_eig);
    ++rep.hessian_pd.checked;
    if (!(min_eig > opts.margin)) note_violation(rep.hessian_pd, z);
  }

  const double base = psi(Vec::Zero(n));
  int salt = 0;
  for (double level : {base, base + 1.0}) {
    rep.semi_coercive.push_back(
        semi_coercivity_probe(psi, level, opts.samples, opts.seed + 7919u * ++salt));
  }
  return rep;
}

GammaPhiCheck gamma_phi_regular_check(const GammaPhiSpec& spec, const GammaPhiGrid& grid) {
  GammaPhiCheck c;
  c.smooth = spec.gamma.smooth && spec.phi.smooth;
  c.gamma_nonneg = c.gamma_increasing = c.gamma_convex = true;
  c.phi_decreasing = c.phi_strictly_convex = true;
  for (int i = 0; i < grid.points; ++i) {
    const double frac = static_cast<double>(i) / (grid.points - 1);
    const double t = grid.gamma_hi * frac;
    c.gamma_nonneg = c.gamma_nonneg && spec.gamma.f(t) >= 0.0;
    c.gamma_increasing = c.gamma_increasing && spec.gamma.d1(t) > 0.0;
    c.gamma_convex = c.gamma_convex && spec.gamma.d2(t) >= 0.0;
    const double s = grid.phi_lo + (grid.phi_hi - grid.phi_lo) * frac;
    c.phi_decreasing = c.phi_decreasing && spec.phi.d1(s) < 0.0;
    c.phi_strictly_convex = c.phi_strictly_convex && spec.phi.d2(s) > 0.0;
  }
  // phi(2^j) for j = 0..30 decreases towards zero.
  double prev = spec.phi.f(1.0);
  c.phi_vanishes = true;
  for (int j = 1; j <= 30; ++j) {
    const double cur = spec.phi.f(std::ldexp(1.0, j));
    c.phi_vanishes = c.phi_vanishes && cur <= prev;
    prev = cur;
  }
  c.phi_vanishes = c.phi_vanishes && std::abs(prev - spec.phi_limit) <= 1e-12 &&
                   spec.phi_limit == 0.0;
  return c;
}

std::vector<RegularityReport> totally_regular_probe(const Template& psi, const ProbeOptions& opts,
                                                    const TruncationSchedule& schedule) {
  std::vector<RegularityReport> out;
  Template current = psi;
  while (true) {
    out.push_back(regularity_probe(current, opts));
    if (current.k() <= 2) break;
    current = truncate(current, schedule);
  }
  return out;
}

Template scale(const Template& psi, double lambda) {
  if (!(lambda > 0)) throw InvalidArgument("scale: lambda must be positive");
  Template::Parts parts;
  parts.k = psi.k();
  parts.kind = "scaled";
  parts.eval = [psi, lambda](const Vec& z) { return lambda * psi(z); };
  if (psi.smooth()) {
    parts.grad = [psi, lambda](const Vec& z) -> Vec { return lambda * psi.grad(z); };
    parts.hessian = [psi, lambda](const Vec& z) -> Mat { return lambda * psi.hessian(z); };
  }
  if (psi.has_closed_truncation()) {
    parts.closed_truncation = [psi, lambda] { return scale(psi.closed_truncation(), lambda); };
  }
  return Template(std::move(parts));
}

Template add(const Template& a, const Template& b) {
  if (a.k() != b.k()) {
    throw InvalidArity("add: arity mismatch " + std::to_string(a.k()) + " vs " +
                       std::to_string(b.k()));
  }
  Template::Parts parts;
  parts.k = a.k();
  parts.kind = "sum";
  parts.eval = [a, b](const Vec& z) { return a(z) + b(z); };
  if (a.smooth() && b.smooth()) {
    parts.grad = [a, b](const Vec& z) -> Vec { return a.grad(z) + b.grad(z); };
    parts.hessian = [a, b](const Vec& z) -> Mat { return a.hessian(z) + b.hessian(z); };
  }
  if (a.has_closed_truncation() && b.has_closed_truncation()) {
    parts.closed_truncation = [a, b] { return add(a.closed_truncation(), b.closed_truncation()); };
  }
  return Template(std::move(parts));
}

}  // namespace permloss
