#pragma once

// Templates psi : R^{k-1} -> R and the PERM losses L_y(v) = psi(rho_y D v) they
// generate.

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "permloss/label_code.hpp"
#include "permloss/types.hpp"

namespace permloss {

/// A named scalar function with first and second derivatives. `smooth` is false
/// for piecewise-linear functions whose derivatives are only one-sided.
struct ScalarFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  bool smooth = true;
};

ScalarFunction gamma_identity();
ScalarFunction gamma_log1p();
ScalarFunction phi_exp();
ScalarFunction phi_hinge();
/// T * log(1 + exp((1 - t) / T)), a softplus smoothing of max(0, 1 - t).
ScalarFunction phi_smoothed_hinge(double temperature);
/// g(x) = x^2, the transform used for the squared-Shannon negentropy.
ScalarFunction transform_square();

struct GammaPhiSpec {
  ScalarFunction gamma;
  ScalarFunction phi;
  /// lim_{t -> +inf} phi(t).
  double phi_limit = 0.0;
};

class Template {
 public:
  using EvalFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;
  using TruncFn = std::function<Template()>;

  struct Parts {
    int k = 0;
    std::string kind;
    EvalFn eval;
    GradFn grad;                    // empty for non-smooth templates
    HessFn hessian;                 // optional; falls back to differencing grad
    TruncFn closed_truncation;      // optional closed form of trunc[psi]
    std::optional<GammaPhiSpec> gamma_phi;
  };

  explicit Template(Parts parts);

  /// Number of classes; the template acts on R^{k-1}.
  int k() const { return parts_.k; }
  int dim() const { return parts_.k - 1; }
  const std::string& kind() const { return parts_.kind; }

  bool smooth() const { return static_cast<bool>(parts_.grad); }
  bool has_analytic_hessian() const { return static_cast<bool>(parts_.hessian); }
  bool has_closed_truncation() const { return static_cast<bool>(parts_.closed_truncation); }
  const GammaPhiSpec* gamma_phi() const {
    return parts_.gamma_phi ? &*parts_.gamma_phi : nullptr;
  }

  double operator()(const Vec& z) const { return eval(z); }
  double eval(const Vec& z) const;
  Vec grad(const Vec& z) const;
  Mat hessian(const Vec& z) const;
  Template closed_truncation() const;

  const Parts& parts() const { return parts_; }

 private:
  Parts parts_;
};

Template template_cross_entropy(int k);
Template template_gamma_phi(const GammaPhiSpec& spec, int k, std::string kind = "gamma_phi");
/// Gamma-Phi with gamma = id, phi = exp(-t). Inputs below -700 are rejected.
Template template_exponential(int k);
/// Gamma-Phi with gamma = id, phi = max(0, 1 - t). Non-smooth.
Template template_ww_hinge(int k);
Template template_smoothed_hinge(int k, double temperature);
/// max_j max(0, 1 - z_j). Non-smooth.
Template template_crammer_singer(int k);

GammaPhiSpec gamma_phi_cross_entropy();
GammaPhiSpec gamma_phi_exponential();

struct SymmetryResult {
  bool passed = true;
  double max_deviation = 0.0;
  Vec witness;  // z with the largest |psi(z) - psi(S z)|
};

/// psi(S_sigma z) = psi(z) at `samples` random (z, sigma) with z uniform in the box.
SymmetryResult symmetry_check(const Template& psi, int samples, double box, std::uint64_t seed,
                              double tol = 1e-12);

class PermLoss {
 public:
  explicit PermLoss(Template psi);

  const Template& psi() const { return psi_; }
  const LabelCode& code() const { return code_; }
  int k() const { return code_.k(); }

 private:
  Template psi_;
  LabelCode code_;
};

/// psi(rho_y D v).
double loss_eval(const PermLoss& loss, int y, const Vec& v);
/// (L_1(v), ..., L_k(v)).
Vec loss_vector(const PermLoss& loss, const Vec& v);
/// L(S_sigma v) = S_sigma L(v) within tol.
bool equivariance_check(const PermLoss& loss, const Vec& v, const Permutation& sigma,
                        double tol = 1e-10);
/// v_j <= v_y  =>  L_j(v) >= L_y(v) for every ordered pair; strict variant uses <.
bool well_incentivized_check(const PermLoss& loss, const Vec& v, bool strict = false);

}  // namespace permloss
