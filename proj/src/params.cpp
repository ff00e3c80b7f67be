#include "hyperqubit/params.hpp"

#include <cmath>
#include <set>
#include <string>

namespace hyperqubit {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool finite(double x) { return std::isfinite(x); }

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& object) {
  if (!j.is_object()) throw std::invalid_argument(object + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw std::invalid_argument(object + "." + key + ": unknown key");
  }
}

double number_field(const nlohmann::json& j, const std::string& object, const char* key,
                    double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw std::invalid_argument(object + "." + key + ": expected a number");
  return v.get<double>();
}

}  // namespace

void PhysParams::validate() const {
  require(finite(tau_ps) && tau_ps > 0.0, "physics.tau_ps: must be > 0");
  require(finite(fss_uev) && fss_uev >= 0.0, "physics.fss_uev: must be >= 0");
  require(finite(gamma_hv) && gamma_hv >= 0.0, "physics.gamma_hv_per_ps: must be >= 0");
  require(finite(gamma_star) && gamma_star >= 0.0, "physics.gamma_star_per_ps: must be >= 0");
  require(finite(gamma_star_hv) && gamma_star_hv >= 0.0,
          "physics.gamma_star_hv_per_ps: must be >= 0");
  require(finite(eta_h) && eta_h > 0.0 && eta_h <= 1.0, "physics.eta_h: must be in (0, 1]");
  require(finite(eta_v) && eta_v > 0.0 && eta_v <= 1.0, "physics.eta_v: must be in (0, 1]");
}

void PumpConfig::validate() const {
  require(finite(theta) && theta >= 0.0 && theta <= kPi / 2.0, "pump.theta_rad: must be in [0, pi/2]");
  require(finite(phi) && phi >= -kPi && phi < kPi, "pump.phi_rad: must be in [-pi, pi)");
  require(finite(p_qd) && p_qd >= 0.0 && p_qd <= 1.0, "pump.p_qd: must be in [0, 1]");
  require(finite(lambda) && lambda >= 0.0 && lambda <= 1.0, "pump.lambda: must be in [0, 1]");
}

PhysParams paper_default_physics() { return PhysParams{}; }

double wrap_phase(double phi) {
  double w = std::fmod(phi + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  return w >= kPi ? w - 2.0 * kPi : w;
}

void to_json(nlohmann::json& j, const PhysParams& p) {
  j = nlohmann::json{{"tau_ps", p.tau_ps},
                     {"fss_uev", p.fss_uev},
                     {"gamma_hv_per_ps", p.gamma_hv},
                     {"gamma_star_per_ps", p.gamma_star},
                     {"gamma_star_hv_per_ps", p.gamma_star_hv},
                     {"eta_h", p.eta_h},
                     {"eta_v", p.eta_v}};
}

void from_json(const nlohmann::json& j, PhysParams& p) {
  const std::string obj = "physics";
  reject_unknown_keys(j,
                      {"tau_ps", "fss_uev", "gamma_hv_per_ps", "gamma_vh_per_ps", "gamma_star_per_ps",
                       "gamma_star_hv_per_ps", "eta_h", "eta_v"},
                      obj);
  PhysParams out = p;
  out.tau_ps = number_field(j, obj, "tau_ps", p.tau_ps);
  out.fss_uev = number_field(j, obj, "fss_uev", p.fss_uev);
  out.gamma_hv = number_field(j, obj, "gamma_hv_per_ps", p.gamma_hv);
  if (j.contains("gamma_vh_per_ps")) {
    const double gvh = number_field(j, obj, "gamma_vh_per_ps", out.gamma_hv);
    if (gvh != out.gamma_hv) {
      throw std::invalid_argument(
          "physics.gamma_vh_per_ps: must equal gamma_hv_per_ps (only symmetric exchange is modeled)");
    }
  }
  out.gamma_star = number_field(j, obj, "gamma_star_per_ps", p.gamma_star);
  out.gamma_star_hv = number_field(j, obj, "gamma_star_hv_per_ps", p.gamma_star_hv);
  out.eta_h = number_field(j, obj, "eta_h", p.eta_h);
  out.eta_v = number_field(j, obj, "eta_v", p.eta_v);
  out.validate();
  p = out;
}

void to_json(nlohmann::json& j, const PumpConfig& p) {
  j = nlohmann::json{{"theta_rad", p.theta}, {"phi_rad", p.phi}, {"p_qd", p.p_qd}, {"lambda", p.lambda}};
}

void from_json(const nlohmann::json& j, PumpConfig& p) {
  const std::string obj = "pump";
  reject_unknown_keys(j, {"theta_rad", "phi_rad", "p_qd", "lambda"}, obj);
  PumpConfig out = p;
  out.theta = number_field(j, obj, "theta_rad", p.theta);
  out.phi = number_field(j, obj, "phi_rad", p.phi);
  out.p_qd = number_field(j, obj, "p_qd", p.p_qd);
  out.lambda = number_field(j, obj, "lambda", p.lambda);
  out.validate();
  p = out;
}

}  // namespace hyperqubit
