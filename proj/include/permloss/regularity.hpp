#pragma once

// Sampled evidence for regularity of a template: nonnegativity, negative
// gradient, positive-definite Hessian, semi-coercivity. Reports corroborate or
// refute; they never prove.

#include <optional>
#include <string>
#include <vector>

#include "permloss/loss_zoo.hpp"
#include "permloss/truncation.hpp"

namespace permloss {

struct PredicateResult {
  bool passed = true;
  long checked = 0;
  /// Worst observed value of the predicate's slack (min psi, max grad entry,
  /// min eigenvalue).
  double worst = 0.0;
  std::optional<Vec> witness;  // first violating z, if any
};

struct SemiCoercivityResult {
  double level = 0.0;
  double b_hat = 0.0;  // min over accepted samples of min_j z_j
  long accepted = 0;
  bool inconclusive = false;      // nothing accepted
  bool unbounded_below = false;   // b_hat tracks the sampling box as it grows
  bool passed = false;
};

struct RegularityReport {
  int k = 0;
  long samples = 0;
  double box = 0.0;
  PredicateResult nonneg;
  PredicateResult grad_negative;
  PredicateResult hessian_pd;
  std::vector<SemiCoercivityResult> semi_coercive;
  static constexpr const char* kEvidence = "sampled, not proven";

  bool passed() const;
};

struct ProbeOptions {
  int samples = 1000;
  double box = 10.0;
  std::uint64_t seed = 0;
  double margin = 1e-12;  // strict predicates need slack beyond this
};

/// Uniform draws in [-box, box]^{k-1} plus the 2^{k-1} corners.
RegularityReport regularity_probe(const Template& psi, const ProbeOptions& opts = {});

/// Rejection-samples {psi <= c} from a box of side 10(1 + |c|), then from a box
/// four times wider; flags an unbounded coordinate when b_hat follows the box.
SemiCoercivityResult semi_coercivity_probe(const Template& psi, double level, int samples,
                                           std::uint64_t seed);

struct GammaPhiGrid {
  double phi_lo = -10.0;
  double phi_hi = 10.0;
  double gamma_hi = 50.0;  // gamma is checked on [0, gamma_hi], the range of sum phi
  int points = 2001;
};

struct GammaPhiCheck {
  bool gamma_nonneg = false;
  bool gamma_increasing = false;
  bool gamma_convex = false;
  bool phi_decreasing = false;
  bool phi_strictly_convex = false;
  bool phi_vanishes = false;
  bool smooth = false;
  bool passed() const;
};

GammaPhiCheck gamma_phi_regular_check(const GammaPhiSpec& spec, const GammaPhiGrid& grid = {});

/// regularity_probe on psi^(n) for n = k, k-1, ..., 2.
std::vector<RegularityReport> totally_regular_probe(const Template& psi,
                                                    const ProbeOptions& opts = {},
                                                    const TruncationSchedule& schedule = {});

Template scale(const Template& psi, double lambda);
Template add(const Template& a, const Template& b);

}  // namespace permloss
