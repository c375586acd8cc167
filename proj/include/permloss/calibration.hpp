#pragma once

// Numeric evidence around classification-calibration: argmax/sign equivalence of
// relative margins, positive normals at range points, and a sampled version of
// the calibration inequality inf_{wrong argmax} C_p > inf C_p.

#include <optional>
#include <string>
#include <vector>

#include "permloss/link.hpp"

namespace permloss {

/// Lowest index attaining the maximum (1-based).
int underline_argmax(const Vec& v);

struct ArgmaxSignResult {
  std::vector<int> argmax;                // 1-based, tolerance-aware
  std::vector<bool> margin_nonneg;        // per y: rho_y D v >= 0
  std::vector<int> reconstructed_argmax;  // argmax of v' = (-D v, 0)
  double tolerance = 0.0;
  bool consistent = false;
};

/// y in argmax v  <=>  rho_y D v >= 0, entries compared against
/// -1e-12 max(1, |v|_inf); exact ties produce exact zeros.
ArgmaxSignResult argmax_sign_equiv(const LabelCode& code, const Vec& v);

struct PositiveNormalResult {
  Vec p;
  long checked = 0;
  long violations = 0;
  double min_inner = std::numeric_limits<double>::infinity();
  std::optional<Vec> witness;
  double roundtrip_error = 0.0;  // |link(p) - z|_inf
  bool passed = false;
};

/// p = inverse_link(z), then <Lbar(w) - Lbar(z), p> >= -1e-10 at `samples` points
/// w uniform in z + [-box, box]^{k-1}.
PositiveNormalResult positive_normal(const Template& psi, const Vec& z, int samples,
                                     std::uint64_t seed = 0, double box = 5.0);

struct CalibrationConfig {
  std::vector<double> penalty_weights = {1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
  int restarts = 8;            // random starts besides the link start
  double start_box = 3.0;
  std::uint64_t seed = 0;
  double margin = 1e-6;        // pass iff inner - global > margin
  double residual_tol = 1e-7;  // penalized solves above this are inconclusive
  SolverConfig solver{1e-10, 100, 0.5, 1e-4, 500, 1e-12, 1e-8, false};
};

struct WrongLabelBound {
  int label = 0;
  double lower = 0.0;  // attained penalized minimum
  double upper = 0.0;  // C_p at the repaired feasible point
  Vec z_lower;
  Vec z_upper;
  double residual = 0.0;
  bool converged = false;
};

struct CalibrationReport {
  Vec p;
  int theta = 0;  // underline argmax of p
  double global_inf = 0.0;
  Vec z_star;
  double inner_lower = std::numeric_limits<double>::infinity();
  double inner_upper = std::numeric_limits<double>::infinity();
  int worst_label = 0;
  double gap = 0.0;        // inner_lower - global_inf
  double gap_upper = 0.0;  // inner_upper - global_inf
  double margin = 0.0;
  bool vacuous = false;     // every label attains max p
  bool inconclusive = false;
  bool passed = false;
  int starts = 0;
  std::vector<WrongLabelBound> per_label;
  std::string note;
  static constexpr const char* kEvidence = "sampled, not proven";
};

/// Quadratic-penalty multistart estimate of min { C_p(z) : rho_{y*} z >= 0 } for
/// every y* outside argmax p. The penalty minimum bounds the constrained minimum
/// from below, the repaired point from above; the pass decision uses the lower
/// bound.
CalibrationReport cc_inequality_probe(const Template& psi, const ProbVector& p,
                                      const CalibrationConfig& cfg = {});

}  // namespace permloss
