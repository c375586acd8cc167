#include "permloss/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <sstream>

#include "permloss/calibration.hpp"
#include "permloss/harness.hpp"
#include "permloss/loss_spec.hpp"
#include "permloss/regularity.hpp"

namespace permloss {

namespace {

using json = nlohmann::json;

json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? to_json(*v) : json(nullptr);
}

Vec parse_vec(const std::string& csv) {
  std::vector<double> xs;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("cannot parse number '" + cell + "' in \"" + csv + "\"");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) {
      throw InvalidArgument("cannot parse number '" + cell + "' in \"" + csv + "\"");
    }
    xs.push_back(x);
  }
  if (xs.empty()) throw InvalidArgument("empty vector \"" + csv + "\"");
  return Eigen::Map<Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json mmatrix_json(const MMatrixReport& r) {
  return {{"is_Z", r.is_Z},
          {"diag_positive", r.diag_positive},
          {"is_strictly_diag_dominant", r.is_strictly_diag_dominant},
          {"indeterminate", r.indeterminate},
          {"min_dominance_gap", r.min_dominance_gap}};
}

json predicate_json(const PredicateResult& r) {
  return {{"passed", r.passed}, {"checked", r.checked}, {"worst", r.worst},
          {"witness", opt_json(r.witness)}};
}

json regularity_json(const RegularityReport& r) {
  json sc = json::array();
  for (const auto& s : r.semi_coercive) {
    sc.push_back({{"level", s.level},
                  {"b_hat", s.b_hat},
                  {"accepted", s.accepted},
                  {"inconclusive", s.inconclusive},
                  {"unbounded_below", s.unbounded_below},
                  {"passed", s.passed}});
  }
  return {{"k", r.k},
          {"samples", r.samples},
          {"box", r.box},
          {"nonneg", predicate_json(r.nonneg)},
          {"grad_negative", predicate_json(r.grad_negative)},
          {"hessian_pd", predicate_json(r.hessian_pd)},
          {"semi_coercive", sc},
          {"passed", r.passed()},
          {"evidence", RegularityReport::kEvidence}};
}

json calibration_json(const CalibrationReport& r) {
  json labels = json::array();
  for (const auto& b : r.per_label) {
    labels.push_back({{"label", b.label},
                      {"lower", b.lower},
                      {"upper", b.upper},
                      {"z_lower", to_json(b.z_lower)},
                      {"z_upper", to_json(b.z_upper)},
                      {"residual", b.residual},
                      {"converged", b.converged}});
  }
  return {{"p", to_json(r.p)},
          {"theta", r.theta},
          {"global_inf", r.global_inf},
          {"z_star", to_json(r.z_star)},
          {"inner_lower", r.vacuous ? json(nullptr) : json(r.inner_lower)},
          {"inner_upper", r.vacuous ? json(nullptr) : json(r.inner_upper)},
          {"worst_label", r.worst_label},
          {"gap", r.gap},
          {"gap_upper", r.gap_upper},
          {"margin", r.margin},
          {"vacuous", r.vacuous},
          {"inconclusive", r.inconclusive},
          {"passed", r.passed},
          {"starts", r.starts},
          {"per_label", labels},
          {"note", r.note},
          {"evidence", CalibrationReport::kEvidence}};
}

struct Emitter {
  std::ostream& out;
  std::string path;

  void operator()(const std::string& command, json body) const {
    json doc = {{"schema_version", kSchemaVersion}, {"command", command}};
    doc.update(body);
    const std::string text = doc.dump(2) + "\n";
    if (path.empty()) {
      out << text;
    } else {
      std::ofstream f(path);
      if (!f) throw InvalidArgument("cannot write " + path);
      f << text;
    }
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"PERM loss toolkit: label codes, templates, links, truncations and probes",
               "permloss"};
  app.require_subcommand(1);
  std::string out_path;
  app.add_option("--out", out_path, "Write the JSON report to this file instead of stdout");

  std::string loss_src;
  std::uint64_t seed = 0;
  int k = 4, trials = 100, y = 0, samples = 1000, times = 1;
  std::string v_str, z_str, p_str, w_str;
  double box = 5.0;

  auto* verify = app.add_subcommand("verify-identities", "Label-code identity suite");
  verify->add_option("--k", k, "Number of classes")->check(CLI::Range(2, 64));
  verify->add_option("--trials", trials, "Random permutation pairs");
  verify->add_option("--seed", seed, "RNG seed");

  auto* eval = app.add_subcommand("eval", "Evaluate L_y(v)");
  eval->add_option("--loss", loss_src, "Loss spec (file or inline JSON)")->required();
  eval->add_option("--y", y, "Class label (1-based)")->required();
  eval->add_option("--v", v_str, "Class scores, comma separated")->required();

  auto* grad = app.add_subcommand("grad-check", "Analytic vs finite-difference gradients");
  grad->add_option("--loss", loss_src, "Loss spec")->required();
  grad->add_option("--z", z_str, "Relative margin point")->required();
  grad->add_option("--y", y, "Check only this label's reduced gradient");

  auto* mm = app.add_subcommand("mmatrix-probe", "M-matrix predicates of A(z)");
  mm->add_option("--loss", loss_src, "Loss spec")->required();
  mm->add_option("--z", z_str, "Single point instead of sampling");
  mm->add_option("--samples", samples, "Random points");
  mm->add_option("--box", box, "Half-width of the sampling box");
  mm->add_option("--seed", seed, "RNG seed");

  auto* lk = app.add_subcommand("link", "argmin_z C_p(z)");
  lk->add_option("--loss", loss_src, "Loss spec")->required();
  lk->add_option("--p", p_str, "Interior probability vector")->required();

  auto* ilk = app.add_subcommand("inverse-link", "p from the KKT system at z");
  ilk->add_option("--loss", loss_src, "Loss spec")->required();
  ilk->add_option("--z", z_str, "Relative margin point")->required();

  bool numeric = false;
  auto* tr = app.add_subcommand("truncate", "Evaluate the m-fold truncated template");
  tr->add_option("--loss", loss_src, "Loss spec")->required();
  tr->add_option("--w", w_str, "Point in R^{k-1-m}")->required();
  tr->add_option("--times", times, "Number of truncations m");
  tr->add_flag("--numeric", numeric, "Force the numeric limit schedule");

  std::string probe_kind = "regular";
  auto* probe = app.add_subcommand("probe", "Sampled regularity evidence");
  probe->add_option("--loss", loss_src, "Loss spec")->required();
  probe->add_option("--kind", probe_kind, "regular | totally-regular | gamma-phi")
      ->check(CLI::IsMember({"regular", "totally-regular", "gamma-phi"}));
  probe->add_option("--seed", seed, "RNG seed");
  probe->add_option("--samples", samples, "Uniform draws per arity");
  double probe_box = 10.0;
  probe->add_option("--box", probe_box, "Half-width of the sampling box");

  std::string negentropy = "shannon";
  double mu = 0.0;
  bool force_solver = false;
  auto* fy = app.add_subcommand("fy-eval", "Fenchel-Young template value and maximizer");
  fy->add_option("--negentropy", negentropy, "shannon | sq_shannon")
      ->check(CLI::IsMember({"shannon", "sq_shannon"}));
  fy->add_option("--mu", mu, "Cost scale mu >= 0")->check(CLI::NonNegativeNumber);
  fy->add_option("--k", k, "Number of classes")->required()->check(CLI::Range(2, 64));
  fy->add_option("--z", z_str, "Relative margin point")->required();
  fy->add_flag("--solver", force_solver, "Use mirror ascent even for Shannon");

  auto* cal = app.add_subcommand("calibration-probe", "Sampled calibration inequality");
  cal->add_option("--loss", loss_src, "Loss spec")->required();
  cal->add_option("--p", p_str, "Interior probability vector")->required();
  cal->add_option("--seed", seed, "RNG seed");

  int n = 4000, epochs = 300, threads = 0;
  long bayes_draws = 100000;
  double side = 2.0, tolerance = 0.03;
  std::string data_path, save_path;
  auto* train = app.add_subcommand("train-demo", "Linear ERM on a Gaussian mixture");
  train->add_option("--loss", loss_src, "Loss spec")->required();
  train->add_option("--seed", seed, "RNG seed");
  train->add_option("--n", n, "Examples before the 50/50 split");
  train->add_option("--epochs", epochs, "Gradient steps");
  train->add_option("--bayes-draws", bayes_draws, "Monte-Carlo draws for the Bayes risk");
  train->add_option("--side", side, "Side of the triangle of class means");
  train->add_option("--tolerance", tolerance, "Allowed excess over the Bayes risk");
  train->add_option("--threads", threads, "Worker threads (capped by PERMLOSS_THREADS)");
  train->add_option("--data", data_path, "CSV dataset (x1,...,xd,label) instead of the mixture");
  train->add_option("--save-data", save_path, "Write the generated dataset as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 1;
  }

  const Emitter emit{out, out_path};
  auto load_template = [&] { return template_from_json(load_json_source(loss_src)); };

  try {
    if (*verify) {
      const IdentityReport rep = verify_identities(LabelCode::build(k), trials, seed);
      json checks = json::array();
      for (const auto& c : rep.checks) {
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"max_abs_deviation", c.max_abs_deviation},
                          {"cases", c.cases},
                          {"exact", c.exact}});
      }
      emit("verify-identities",
           {{"k", k}, {"trials", trials}, {"checks", checks}, {"passed", rep.all_passed()}});
      return rep.all_passed() ? 0 : 2;
    }
    if (*eval) {
      const PermLoss loss(load_template());
      const Vec v = parse_vec(v_str);
      emit("eval", {{"k", loss.k()},
                    {"y", y},
                    {"v", to_json(v)},
                    {"value", loss_eval(loss, y, v)},
                    {"loss_vector", to_json(loss_vector(loss, v))}});
      return 0;
    }
    if (*grad) {
      const Template psi = load_template();
      const LabelCode code = LabelCode::build(psi.k());
      const Vec z = parse_vec(z_str);
      constexpr double kTol = 1e-5;
      json per_y = json::array();
      bool ok = true;
      const int lo = y > 0 ? y : 1;
      const int hi = y > 0 ? y : psi.k();
      for (int c = lo; c <= hi; ++c) {
        const double e = reduced_grad_relative_error(psi, code, c, z);
        ok = ok && e <= kTol;
        per_y.push_back({{"y", c},
                         {"reduced_grad", to_json(reduced_grad(psi, code, c, z))},
                         {"relative_error", e}});
      }
      const double et = grad_relative_error(psi, z);
      ok = ok && et <= kTol;
      emit("grad-check", {{"z", to_json(z)},
                          {"template_grad", to_json(psi.grad(z))},
                          {"template_relative_error", et},
                          {"reduced", per_y},
                          {"tolerance", kTol},
                          {"passed", ok}});
      return ok ? 0 : 2;
    }
    if (*mm) {
      const Template psi = load_template();
      std::vector<Vec> points;
      if (!z_str.empty()) {
        points.push_back(parse_vec(z_str));
      } else {
        points = sample_box(psi.dim(), samples, box, seed);
      }
      long failures = 0, indeterminate = 0;
      double min_gap = std::numeric_limits<double>::infinity();
      json first_failure = nullptr;
      json single;
      for (const Vec& z : points) {
        const AMatrix a = A_matrix(psi, z);
        if (a.report.indeterminate) ++indeterminate;
        min_gap = std::min(min_gap, a.report.min_dominance_gap);
        if (!a.report.all()) {
          if (failures == 0) first_failure = {{"z", to_json(z)}, {"A", to_json(a.A)}};
          ++failures;
        }
        if (points.size() == 1) single = {{"A", to_json(a.A)}, {"report", mmatrix_json(a.report)}};
      }
      json body = {{"points", points.size()},
                   {"failures", failures},
                   {"indeterminate", indeterminate},
                   {"min_dominance_gap", min_gap},
                   {"first_failure", first_failure},
                   {"passed", failures == 0}};
      if (!single.is_null()) body.update(single);
      emit("mmatrix-probe", body);
      return failures == 0 ? 0 : 2;
    }
    if (*lk) {
      const Template psi = load_template();
      const ProbVector p = ProbVector::parse(p_str);
      const LinkResult r = link(psi, p);
      emit("link", {{"p", to_json(p.values())},
                    {"z", to_json(r.z)},
                    {"residual", r.residual},
                    {"iterations", r.iterations},
                    {"used_fallback", r.used_fallback},
                    {"hessian_jitter", r.hessian_jitter},
                    {"conditional_risk", r.values.back()}});
      return 0;
    }
    if (*ilk) {
      const Template psi = load_template();
      const Vec z = parse_vec(z_str);
      const AMatrix a = A_matrix(psi, z);
      const ProbVector p = inverse_link(psi, z);
      emit("inverse-link", {{"z", to_json(z)},
                            {"p", to_json(p.values())},
                            {"A", to_json(a.A)},
                            {"mmatrix", mmatrix_json(a.report)},
                            {"kkt_residual", kkt_residual(psi, p, z)}});
      return 0;
    }
    if (*tr) {
      const Template psi = load_template();
      const Vec w = parse_vec(w_str);
      Template t = psi;
      if (numeric) {
        if (times < 0 || times > psi.k() - 2) throw InvalidArgument("--times out of range");
        for (int i = 0; i < times; ++i) t = truncate_numeric(t);
      } else {
        t = iterated_truncate(psi, times);
      }
      emit("truncate", {{"k", psi.k()},
                        {"times", times},
                        {"arity", t.k()},
                        {"kind", t.kind()},
                        {"w", to_json(w)},
                        {"value", t(w)}});
      return 0;
    }
    if (*probe) {
      const Template psi = load_template();
      ProbeOptions opts;
      opts.samples = samples;
      opts.box = probe_box;
      opts.seed = seed;
      if (probe_kind == "regular") {
        const RegularityReport rep = regularity_probe(psi, opts);
        emit("probe", {{"kind", probe_kind}, {"report", regularity_json(rep)},
                       {"passed", rep.passed()}});
        return rep.passed() ? 0 : 2;
      }
      if (probe_kind == "totally-regular") {
        const auto reps = totally_regular_probe(psi, opts);
        json arr = json::array();
        bool ok = true;
        for (const auto& r : reps) {
          arr.push_back(regularity_json(r));
          ok = ok && r.passed();
        }
        emit("probe", {{"kind", probe_kind}, {"arities", arr}, {"passed", ok}});
        return ok ? 0 : 2;
      }
      const GammaPhiSpec* gp = psi.gamma_phi();
      if (!gp) throw UnsupportedOperation("template '" + psi.kind() + "' is not Gamma-Phi");
      const GammaPhiCheck c = gamma_phi_regular_check(*gp);
      emit("probe", {{"kind", probe_kind},
                     {"gamma", gp->gamma.name},
                     {"phi", gp->phi.name},
                     {"gamma_nonneg", c.gamma_nonneg},
                     {"gamma_increasing", c.gamma_increasing},
                     {"gamma_convex", c.gamma_convex},
                     {"phi_decreasing", c.phi_decreasing},
                     {"phi_strictly_convex", c.phi_strictly_convex},
                     {"phi_vanishes", c.phi_vanishes},
                     {"smooth", c.smooth},
                     {"passed", c.passed()}});
      return c.passed() ? 0 : 2;
    }
    if (*fy) {
      const FYSpec spec{negentropy_by_name(negentropy, k), mu};
      FYSolverConfig cfg;
      cfg.closed_form = !force_solver;
      const Vec z = parse_vec(z_str);
      const FYResult r = fy_template_eval(spec, z, cfg);
      emit("fy-eval", {{"negentropy", negentropy},
                       {"mu", mu},
                       {"k", k},
                       {"z", to_json(z)},
                       {"value", r.value},
                       {"maximizer", to_json(Vec(r.p.head(k - 1)))},
                       {"maximizer_full", to_json(r.p)},
                       {"duality_gap", r.gap},
                       {"iterations", r.iterations},
                       {"closed_form", r.closed_form}});
      return 0;
    }
    if (*cal) {
      const Template psi = load_template();
      CalibrationConfig cfg;
      cfg.seed = seed;
      const CalibrationReport r = cc_inequality_probe(psi, ProbVector::parse(p_str), cfg);
      emit("calibration-probe", calibration_json(r));
      return r.passed ? 0 : 2;
    }
    if (*train) {
      const PermLoss loss(load_template());
      Dataset data;
      std::optional<MonteCarloRisk> bayes;
      if (!data_path.empty()) {
        data = read_csv(data_path);
        data.k = loss.k();
        data.validate();
      } else {
        const MixtureSpec mix = triangle_mixture(side);
        if (mix.k() != loss.k()) throw InvalidArity("train-demo mixture has k = 3");
        data = generate_mixture(mix, n, seed);
        bayes = bayes_risk_mc(mix, bayes_draws, seed + 1);
      }
      if (!save_path.empty()) write_csv(data, save_path);
      const auto [tr_set, te_set] = split_parity(data, seed + 2);
      TrainConfig tc;
      tc.epochs = epochs;
      tc.threads = threads;
      const TrainResult res = train_erm(tr_set, te_set, loss, tc, bayes);
      const bool ok = !bayes || res.report.test_01 <= bayes->risk + tolerance;
      json bayes_json = nullptr;
      if (bayes) {
        bayes_json = {{"risk", bayes->risk}, {"std_error", bayes->std_error},
                      {"draws", bayes->draws}};
      }
      emit("train-demo", {{"n_train", tr_set.n()},
                          {"n_test", te_set.n()},
                          {"trajectory", res.report.trajectory},
                          {"iterations", res.report.iterations},
                          {"grad_norm", res.report.grad_norm},
                          {"train_risk", res.report.train_risk},
                          {"train_01", res.report.train_01},
                          {"test_01", res.report.test_01},
                          {"bayes", bayes_json},
                          {"gap", bayes ? json(res.report.gap) : json(nullptr)},
                          {"tolerance", tolerance},
                          {"W", to_json(res.model.W)},
                          {"b", to_json(res.model.b)},
                          {"passed", ok}});
      return ok ? 0 : 2;
    }
  } catch (const Error& e) {
    err << "error (" << e.kind() << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace permloss
