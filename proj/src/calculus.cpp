#include "permloss/calculus.hpp"

#include <sstream>

namespace permloss {

ProbVector::ProbVector(Vec p, double interior_eps) : p_(std::move(p)) {
  if (p_.size() < 2) throw InvalidArity("ProbVector: need at least 2 entries");
  if (!p_.allFinite() || p_.minCoeff() < 0.0) {
    throw InvalidArgument("ProbVector: entries must be finite and nonnegative");
  }
  if (std::abs(p_.sum() - 1.0) > kSumTol) {
    throw InvalidArgument("ProbVector: entries must sum to 1");
  }
  interior_ = p_.minCoeff() >= interior_eps;
}

ProbVector ProbVector::uniform(int k) { return ProbVector(Vec::Constant(k, 1.0 / k)); }

ProbVector ProbVector::parse(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  return ProbVector(Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
}

Vec reduced_loss(const Template& psi, const LabelCode& code, const Vec& z) {
  Vec out(code.k());
  for (int y = 1; y <= code.k(); ++y) out(y - 1) = psi(apply_rho(code, y, z));
  return out;
}

Vec reduced_grad(const Template& psi, const LabelCode& code, int y, const Vec& z) {
  return apply_rho_transpose(code, y, psi.grad(apply_rho(code, y, z)));
}

Vec reduced_grad(const Template& psi, int y, const Vec& z) {
  return reduced_grad(psi, LabelCode::build(psi.k()), y, z);
}

AMatrix A_matrix(const Template& psi, const Vec& z) {
  const LabelCode code = LabelCode::build(psi.k());
  const int n = psi.dim();
  AMatrix out;
  out.A.resize(n, n);
  for (int y = 1; y <= n; ++y) out.A.col(y - 1) = reduced_grad(psi, code, y, z);
  out.report = mmatrix_report(out.A);
  return out;
}

namespace {
void check_risk_args(const Template& psi, const ProbVector& p, const Vec& z) {
  require_size(p.k(), psi.k(), "conditional risk: p");
  require_size(z.size(), psi.dim(), "conditional risk: z");
}
}  // namespace

double conditional_risk(const Template& psi, const ProbVector& p, const Vec& z) {
  check_risk_args(psi, p, z);
  const LabelCode code = LabelCode::build(psi.k());
  double acc = 0.0;
  for (int y = 1; y <= psi.k(); ++y) {
    if (p(y) != 0.0) acc += p(y) * psi(apply_rho(code, y, z));
  }
  return acc;
}

Vec risk_grad(const Template& psi, const ProbVector& p, const Vec& z) {
  check_risk_args(psi, p, z);
  const LabelCode code = LabelCode::build(psi.k());
  Vec g = p(psi.k()) * psi.grad(z);
  for (int y = 1; y < psi.k(); ++y) {
    if (p(y) != 0.0) g += p(y) * reduced_grad(psi, code, y, z);
  }
  return g;
}

Mat risk_hessian(const Template& psi, const ProbVector& p, const Vec& z) {
  check_risk_args(psi, p, z);
  const LabelCode code = LabelCode::build(psi.k());
  const int n = psi.dim();
  Mat h = Mat::Zero(n, n);
  for (int y = 1; y <= psi.k(); ++y) {
    if (p(y) == 0.0) continue;
    const Mat r = code.rho(y).cast<double>();
    h += p(y) * r.transpose() * psi.hessian(apply_rho(code, y, z)) * r;
  }
  return 0.5 * (h + h.transpose());
}

namespace {
double rel_err(const Vec& g, const Vec& g_fd) {
  return (g - g_fd).cwiseAbs().maxCoeff() / std::max(1.0, g_fd.cwiseAbs().maxCoeff());
}
}  // namespace

double grad_relative_error(const Template& psi, const Vec& z) {
  const Vec fd = fd_gradient([&psi](const Vec& x) { return psi(x); }, z, default_fd_step(z));
  return rel_err(psi.grad(z), fd);
}

double reduced_grad_relative_error(const Template& psi, const LabelCode& code, int y,
                                   const Vec& z) {
  const Vec fd = fd_gradient([&](const Vec& x) { return psi(apply_rho(code, y, x)); }, z,
                             default_fd_step(z));
  return rel_err(reduced_grad(psi, code, y, z), fd);
}

}  // namespace permloss
