#include "permloss/loss_zoo.hpp"

#include <algorithm>
#include <cmath>

#include "permloss/finite_diff.hpp"

namespace permloss {

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_k(int k, const char* who) {
  if (k < 2) throw InvalidArity(std::string(who) + ": k must be >= 2, got " + std::to_string(k));
}

}  // namespace

ScalarFunction gamma_identity() {
  return {"identity", [](double t) { return t; }, [](double) { return 1.0; },
          [](double) { return 0.0; }, true};
}

ScalarFunction gamma_log1p() {
  return {"log1p", [](double t) { return std::log1p(t); },
          [](double t) { return 1.0 / (1.0 + t); },
          [](double t) { return -1.0 / ((1.0 + t) * (1.0 + t)); }, true};
}

ScalarFunction phi_exp() {
  return {"exp", [](double t) { return std::exp(-t); }, [](double t) { return -std::exp(-t); },
          [](double t) { return std::exp(-t); }, true};
}

ScalarFunction phi_hinge() {
  return {"hinge", [](double t) { return std::max(0.0, 1.0 - t); },
          [](double t) { return t < 1.0 ? -1.0 : 0.0; }, [](double) { return 0.0; }, false};
}

ScalarFunction phi_smoothed_hinge(double temperature) {
  if (!(temperature > 0)) throw InvalidArgument("smoothed hinge: temperature must be positive");
  const double T = temperature;
  return {"smoothed_hinge",
          [T](double t) { return T * softplus((1.0 - t) / T); },
          [T](double t) { return -sigmoid((1.0 - t) / T); },
          [T](double t) {
            const double s = sigmoid((1.0 - t) / T);
            return s * (1.0 - s) / T;
          },
          true};
}

ScalarFunction transform_square() {
  return {"square", [](double x) { return x * x; }, [](double x) { return 2.0 * x; },
          [](double) { return 2.0; }, true};
}

GammaPhiSpec gamma_phi_cross_entropy() { return {gamma_log1p(), phi_exp(), 0.0}; }
GammaPhiSpec gamma_phi_exponential() { return {gamma_identity(), phi_exp(), 0.0}; }

Template::Template(Parts parts) : parts_(std::move(parts)) {
  check_k(parts_.k, "Template");
  if (!parts_.eval) throw InvalidArgument("Template: eval is required");
}

double Template::eval(const Vec& z) const {
  require_size(z.size(), dim(), "template eval");
  return parts_.eval(z);
}

Vec Template::grad(const Vec& z) const {
  if (!smooth()) throw UnsupportedOperation("template '" + kind() + "' has no gradient");
  require_size(z.size(), dim(), "template grad");
  return parts_.grad(z);
}

Mat Template::hessian(const Vec& z) const {
  if (!smooth()) throw UnsupportedOperation("template '" + kind() + "' has no Hessian");
  require_size(z.size(), dim(), "template hessian");
  if (parts_.hessian) return parts_.hessian(z);
  const Mat jac = fd_jacobian([this](const Vec& x) { return parts_.grad(x); }, z,
                              default_fd_step(z));
  return 0.5 * (jac + jac.transpose());
}

Template Template::closed_truncation() const {
  if (!has_closed_truncation()) {
    throw UnsupportedOperation("template '" + kind() + "' has no closed-form truncation");
  }
  return parts_.closed_truncation();
}

Template template_cross_entropy(int k) {
  check_k(k, "template_cross_entropy");
  Template::Parts parts;
  parts.k = k;
  parts.kind = "cross_entropy";
  // log(1 + sum exp(-z_j)) with the largest exponent factored out.
  parts.eval = [](const Vec& z) {
    const double m = std::max(0.0, -z.minCoeff());
    return m + std::log(std::exp(-m) + (-z.array() - m).exp().sum());
  };
  auto weights = [](const Vec& z) -> Vec {
    const double m = std::max(0.0, -z.minCoeff());
    const Vec e = (-z.array() - m).exp().matrix();
    return e / (std::exp(-m) + e.sum());
  };
  parts.grad = [weights](const Vec& z) -> Vec { return -weights(z); };
  parts.hessian = [weights](const Vec& z) -> Mat {
    const Vec s = weights(z);
    Mat h = -s * s.transpose();
    h.diagonal() += s;
    return h;
  };
  if (k >= 3) parts.closed_truncation = [k] { return template_cross_entropy(k - 1); };
  parts.gamma_phi = gamma_phi_cross_entropy();
  return Template(std::move(parts));
}

Template template_gamma_phi(const GammaPhiSpec& spec, int k, std::string kind) {
  check_k(k, "template_gamma_phi");
  Template::Parts parts;
  parts.k = k;
  parts.kind = std::move(kind);
  parts.gamma_phi = spec;
  parts.eval = [spec](const Vec& z) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) s += spec.phi.f(z(j));
    return spec.gamma.f(s);
  };
  if (spec.gamma.smooth && spec.phi.smooth) {
    parts.grad = [spec](const Vec& z) -> Vec {
      double s = 0.0;
      Vec g(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        s += spec.phi.f(z(j));
        g(j) = spec.phi.d1(z(j));
      }
      return spec.gamma.d1(s) * g;
    };
    parts.hessian = [spec](const Vec& z) -> Mat {
      double s = 0.0;
      Vec d1(z.size());
      Vec d2(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        s += spec.phi.f(z(j));
        d1(j) = spec.phi.d1(z(j));
        d2(j) = spec.phi.d2(z(j));
      }
      Mat h = spec.gamma.d2(s) * d1 * d1.transpose();
      h.diagonal() += spec.gamma.d1(s) * d2;
      return h;
    };
  }
  if (k >= 3) {
    const std::string tag = parts.kind;
    parts.closed_truncation = [spec, k, tag] {
      if (spec.phi_limit == 0.0) return template_gamma_phi(spec, k - 1, tag);
      // lim psi(lambda, w) = gamma(phi(+inf) + sum phi(w_j)).
      GammaPhiSpec shifted = spec;
      const double c = spec.phi_limit;
      const ScalarFunction g = spec.gamma;
      shifted.gamma = {g.name + "_shifted", [g, c](double t) { return g.f(t + c); },
                       [g, c](double t) { return g.d1(t + c); },
                       [g, c](double t) { return g.d2(t + c); }, g.smooth};
      return template_gamma_phi(shifted, k - 1, tag);
    };
  }
  return Template(std::move(parts));
}

Template template_exponential(int k) {
  check_k(k, "template_exponential");
  Template base = template_gamma_phi(gamma_phi_exponential(), k, "exponential");
  Template::Parts parts = base.parts();
  auto guard = [](const Vec& z) {
    if (z.minCoeff() < -700.0) {
      throw NumericError("exponential template: input below -700 overflows");
    }
  };
  parts.eval = [guard, f = parts.eval](const Vec& z) { guard(z); return f(z); };
  parts.grad = [guard, f = parts.grad](const Vec& z) { guard(z); return f(z); };
  parts.hessian = [guard, f = parts.hessian](const Vec& z) { guard(z); return f(z); };
  if (k >= 3) parts.closed_truncation = [k] { return template_exponential(k - 1); };
  return Template(std::move(parts));
}

Template template_ww_hinge(int k) {
  return template_gamma_phi({gamma_identity(), phi_hinge(), 0.0}, k, "ww_hinge");
}

Template template_smoothed_hinge(int k, double temperature) {
  return template_gamma_phi({gamma_identity(), phi_smoothed_hinge(temperature), 0.0}, k,
                            "smoothed_hinge");
}

Template template_crammer_singer(int k) {
  check_k(k, "template_crammer_singer");
  Template::Parts parts;
  parts.k = k;
  parts.kind = "crammer_singer";
  parts.eval = [](const Vec& z) { return std::max(0.0, 1.0 - z.minCoeff()); };
  return Template(std::move(parts));
}

SymmetryResult symmetry_check(const Template& psi, int samples, double box, std::uint64_t seed,
                              double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-box, box);
  SymmetryResult result;
  const int n = psi.dim();
  for (int s = 0; s < samples; ++s) {
    Vec z(n);
    for (int j = 0; j < n; ++j) z(j) = coord(rng);
    const Permutation sigma = Permutation::random(n, rng);
    const double a = psi(z);
    const double b = psi(sigma.apply(z));
    const double dev = std::abs(a - b) / std::max(1.0, std::abs(a));
    if (dev >= result.max_deviation) {
      result.max_deviation = dev;
      result.witness = z;
    }
  }
  result.passed = result.max_deviation <= tol;
  return result;
}

PermLoss::PermLoss(Template psi) : psi_(std::move(psi)), code_(LabelCode::build(psi_.k())) {}

double loss_eval(const PermLoss& loss, int y, const Vec& v) {
  require_size(v.size(), loss.k(), "loss_eval");
  return loss.psi()(relative_margin(loss.code(), y, v));
}

Vec loss_vector(const PermLoss& loss, const Vec& v) {
  Vec out(loss.k());
  for (int y = 1; y <= loss.k(); ++y) out(y - 1) = loss_eval(loss, y, v);
  return out;
}

bool equivariance_check(const PermLoss& loss, const Vec& v, const Permutation& sigma,
                        double tol) {
  const Vec lhs = loss_vector(loss, sigma.apply(v));
  const Vec rhs = sigma.apply(loss_vector(loss, v));
  return (lhs - rhs).cwiseAbs().maxCoeff() <= tol * std::max(1.0, rhs.cwiseAbs().maxCoeff());
}

bool well_incentivized_check(const PermLoss& loss, const Vec& v, bool strict) {
  const Vec l = loss_vector(loss, v);
  const double slack = 1e-12 * std::max(1.0, l.cwiseAbs().maxCoeff());
  for (int y = 0; y < loss.k(); ++y) {
    for (int j = 0; j < loss.k(); ++j) {
      if (j == y) continue;
      if (strict) {
        if (v(j) < v(y) && !(l(j) > l(y))) return false;
      } else if (v(j) <= v(y) && l(j) < l(y) - slack) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace permloss
