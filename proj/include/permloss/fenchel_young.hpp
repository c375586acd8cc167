#pragma once

// Negentropies on the probability simplex and the Fenchel-Young templates
//   psi(z) = max_{p~} -Omega~(p~) + mu 1^T p~ - <p~, z>
// evaluated by entropic mirror ascent with a Frank-Wolfe gap certificate.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "permloss/loss_zoo.hpp"
#include "permloss/truncation.hpp"

namespace permloss {

/// Omega : Delta^k -> R. Callbacks receive p together with log p so that points
/// on (or numerically at) the boundary stay representable; log p_i = -inf for
/// p_i = 0.
class Negentropy {
 public:
  using EvalFn = std::function<double(const Vec& p, const Vec& logp)>;
  using GradFn = std::function<Vec(const Vec& p, const Vec& logp)>;
  using HessFn = std::function<Mat(const Vec& p, const Vec& logp)>;

  struct Parts {
    int k = 0;
    std::string kind;  // shannon | transformed | truncated | custom
    EvalFn eval;
    GradFn grad;       // gradient of the natural extension to the open orthant
    HessFn hessian;
  };

  explicit Negentropy(Parts parts);

  int k() const { return parts_.k; }
  const std::string& kind() const { return parts_.kind; }
  bool has_grad() const { return static_cast<bool>(parts_.grad); }
  bool has_hessian() const { return static_cast<bool>(parts_.hessian); }

  double operator()(const Vec& p) const { return eval(p); }
  double eval(const Vec& p) const;
  double eval(const Vec& p, const Vec& logp) const;
  Vec grad(const Vec& p) const;
  Vec grad(const Vec& p, const Vec& logp) const;
  Mat hessian(const Vec& p) const;
  Mat hessian(const Vec& p, const Vec& logp) const;

  /// Omega~(p~) = Omega(p~, 1 - 1^T p~) and its derivatives.
  double reduced_eval(const Vec& pt) const;
  Vec reduced_grad(const Vec& pt) const;
  Mat reduced_hessian(const Vec& pt) const;

  const Parts& parts() const { return parts_; }

 private:
  Parts parts_;
};

/// Elementwise log with log 0 = -inf.
Vec safe_log(const Vec& p);
/// (p~, 1 - 1^T p~).
Vec complete_simplex(const Vec& pt);

/// sum p log p with 0 log 0 = 0.
Negentropy negentropy_shannon(int k);
/// Theta(p) = g(Omega(p) - Omega(u)) - g(-Omega(u)). Throws InvalidTransform if g
/// is not increasing and convex on [0, -Omega(u)].
Negentropy negentropy_transformed(const Negentropy& base, const ScalarFunction& g);
/// Theta built from Shannon and g(x) = x^2.
Negentropy negentropy_squared_shannon(int k);
/// Omega((0, q)). Needs k >= 3.
Negentropy negentropy_truncate(const Negentropy& omega);
/// Omega^(n) for n = k - m.
Negentropy negentropy_iterated_truncate(const Negentropy& omega, int m);
Negentropy negentropy_custom(int k, Negentropy::EvalFn eval, Negentropy::GradFn grad = {},
                             Negentropy::HessFn hessian = {});

struct FYSpec {
  Negentropy omega;
  double mu = 0.0;

  int k() const { return omega.k(); }
  /// c_y = mu (1 - e_y).
  Vec cost(int y) const;
};

struct FYSolverConfig {
  int max_iter = 500;
  double gap_tol = 1e-8;       // certificate required at return
  double target_gap = 1e-13;   // iterate until here when possible
  double initial_step = 1.0;
  bool closed_form = true;     // Shannon dispatches to the cross-entropy template
};

struct FYResult {
  double value = 0.0;
  Vec p;          // maximizer on Delta^k
  double gap = 0.0;
  int iterations = 0;
  bool closed_form = false;
};

/// max_{p in Delta^k} -Omega(p) + <a, p>.
FYResult maximize_on_simplex(const Negentropy& omega, const Vec& a,
                             const FYSolverConfig& cfg = {});

/// Template value at z with maximizer p~ = p.head(k-1).
FYResult fy_template_eval(const FYSpec& spec, const Vec& z, const FYSolverConfig& cfg = {});
/// Wraps fy_template_eval: grad = -p~, Hessian = inverse reduced Hessian of
/// Omega at the maximizer, closed truncation = FY template of trunc[Omega].
Template fy_template(const FYSpec& spec, const FYSolverConfig& cfg = {});

/// psi(rho_y D v).
double fy_loss_eval(const FYSpec& spec, int y, const Vec& v, const FYSolverConfig& cfg = {});
/// max_p -Omega(p) + <c_y + v, p - e_y> over Delta^k, without the template.
double fy_loss_direct(const FYSpec& spec, int y, const Vec& v, const FYSolverConfig& cfg = {});

struct NegentropyCheck {
  bool symmetric = true;
  double symmetry_deviation = 0.0;
  std::optional<Vec> symmetry_witness;
  bool vertex_zero = true;
  double vertex_max_abs = 0.0;
  bool nonpositive = true;
  double max_value = -std::numeric_limits<double>::infinity();
  std::optional<Vec> nonpositive_witness;
  bool midpoint_convex = true;
  double min_convexity_slack = std::numeric_limits<double>::infinity();
  std::optional<std::pair<Vec, Vec>> convexity_witness;
  /// Reduced gradient norms along (1 - t) u + t e_1, t = 1 - 10^{-j}.
  std::vector<double> legendre_t;
  std::vector<double> legendre_norms;
  bool legendre_growth = false;
  static constexpr const char* kEvidence = "sampled, not proven";

  bool passed() const {
    return symmetric && vertex_zero && nonpositive && midpoint_convex && legendre_growth;
  }
};

NegentropyCheck negentropy_check(const Negentropy& omega, int samples = 200,
                                 std::uint64_t seed = 0);

struct CommuteResult {
  double max_deviation = 0.0;
  Vec worst_w;
  std::vector<Vec> w;
  std::vector<double> lhs;  // numeric truncation of the FY template
  std::vector<double> rhs;  // FY template of the truncated negentropy
};

CommuteResult fy_truncation_commute_check(const FYSpec& spec, const std::vector<Vec>& w,
                                          const FYSolverConfig& cfg = {},
                                          const TruncationSchedule& schedule = {});
/// Uniform w in [-box, box]^{k-2}.
std::vector<Vec> sample_box(int dim, int samples, double box, std::uint64_t seed);

}  // namespace permloss
