#include "permloss/loss_spec.hpp"

#include <filesystem>
#include <fstream>

#include "permloss/regularity.hpp"

namespace permloss {

namespace {

ScalarFunction gamma_by_name(const std::string& name) {
  if (name == "identity") return gamma_identity();
  if (name == "log1p") return gamma_log1p();
  throw InvalidArgument("loss spec: unknown gamma '" + name + "'");
}

ScalarFunction phi_by_name(const std::string& name, double temperature) {
  if (name == "exp") return phi_exp();
  if (name == "hinge") return phi_hinge();
  if (name == "smoothed_hinge") return phi_smoothed_hinge(temperature);
  throw InvalidArgument("loss spec: unknown phi '" + name + "'");
}

}  // namespace

Negentropy negentropy_by_name(const std::string& name, int k) {
  if (name == "shannon") return negentropy_shannon(k);
  if (name == "sq_shannon") return negentropy_squared_shannon(k);
  throw InvalidArgument("unknown negentropy '" + name + "' (expected shannon or sq_shannon)");
}

Template template_from_json(const nlohmann::json& spec, int k) {
  if (!spec.is_object()) throw InvalidArgument("loss spec must be a JSON object");
  if (!spec.contains("kind")) throw InvalidArgument("loss spec: missing \"kind\"");
  const std::string kind = spec.at("kind").get<std::string>();
  if (spec.contains("k")) k = spec.at("k").get<int>();
  if (k == 0) throw InvalidArgument("loss spec: missing \"k\"");
  const double temperature = spec.value("temperature", 1e-2);

  try {
    if (kind == "cross_entropy") return template_cross_entropy(k);
    if (kind == "exponential") return template_exponential(k);
    if (kind == "ww_hinge") return template_ww_hinge(k);
    if (kind == "crammer_singer") return template_crammer_singer(k);
    if (kind == "smoothed_hinge") return template_smoothed_hinge(k, temperature);
    if (kind == "gamma_phi") {
      GammaPhiSpec gp{gamma_by_name(spec.value("gamma", "log1p")),
                      phi_by_name(spec.value("phi", "exp"), temperature), 0.0};
      return template_gamma_phi(gp, k);
    }
    if (kind == "fenchel_young") {
      const double mu = spec.value("mu", 0.0);
      if (!(mu >= 0)) throw InvalidArgument("loss spec: mu must be >= 0");
      FYSolverConfig cfg;
      cfg.closed_form = spec.value("closed_form", true);
      return fy_template(FYSpec{negentropy_by_name(spec.value("negentropy", "shannon"), k), mu},
                         cfg);
    }
    if (kind == "sum") {
      const auto& terms = spec.at("terms");
      if (!terms.is_array() || terms.empty()) {
        throw InvalidArgument("loss spec: \"terms\" must be a non-empty array");
      }
      std::vector<double> weights(terms.size(), 1.0);
      if (spec.contains("weights")) {
        weights = spec.at("weights").get<std::vector<double>>();
        if (weights.size() != terms.size()) {
          throw InvalidArgument("loss spec: \"weights\" and \"terms\" differ in length");
        }
      }
      Template out = scale(template_from_json(terms[0], k), weights[0]);
      for (std::size_t i = 1; i < terms.size(); ++i) {
        out = add(out, scale(template_from_json(terms[i], k), weights[i]));
      }
      return out;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("loss spec: ") + e.what());
  }
  throw InvalidArgument("loss spec: unknown kind '" + kind + "'");
}

nlohmann::json load_json_source(const std::string& source) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(source, ec)) {
    std::ifstream f(source);
    if (!f) throw InvalidArgument("cannot open " + source);
    try {
      return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(source + ": " + e.what());
    }
  }
  try {
    return nlohmann::json::parse(source);
  } catch (const nlohmann::json::exception&) {
    throw InvalidArgument("'" + source + "' is neither a file nor valid JSON");
  }
}

}  // namespace permloss
