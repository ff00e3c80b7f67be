#include "hyperqubit/config.hpp"

#include <cmath>
#include <set>

#include <openssl/evp.h>

#include "hyperqubit/tomography.hpp"
#include "hyperqubit/trace_io.hpp"

namespace hyperqubit {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& obj) {
  if (!j.is_object()) throw ConfigError(obj + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key)) throw ConfigError(obj + "." + key + ": unknown key");
}

double get_number(const json& j, const std::string& obj, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(obj + "." + key + ": expected a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& obj, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(obj + "." + key + ": expected an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const std::string& obj, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(obj + "." + key + ": expected true or false");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& obj, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(obj + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

const char* target_name(FidelityTarget t) {
  switch (t) {
    case FidelityTarget::PhiPlus: return "phi_plus";
    case FidelityTarget::Pump: return "pump";
    case FidelityTarget::None: return "none";
  }
  return "none";
}

template <class F>
auto rethrow_as_config(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  rethrow_as_config([&] {
    physics.validate();
    pump.validate();
    try {
      grid.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
    return 0;
  });
  if (!(std::isfinite(noise.jitter_fwhm_ps) && noise.jitter_fwhm_ps >= 0.0))
    throw ConfigError("noise.jitter_fwhm_ps: must be >= 0");
  if (!(std::isfinite(noise.counts_per_basis) && noise.counts_per_basis > 0.0))
    throw ConfigError("noise.counts_per_basis: must be > 0");
  if (!(std::isfinite(noise.background_per_bin) && noise.background_per_bin >= 0.0))
    throw ConfigError("noise.background_per_bin: must be >= 0");
  if (source.kind == SourceKind::Rho && !source.rho) throw ConfigError("source.rho: required when source.kind is \"rho\"");
  if (tomo.n_seeds < 1) throw ConfigError("tomo.n_seeds: must be >= 1");
  if (tomo.n_bootstrap < 0) throw ConfigError("tomo.n_bootstrap: must be >= 0");
  if (tomo.m_omega && !(*tomo.m_omega >= 0.0 && *tomo.m_omega < 1.0))
    throw ConfigError("tomo.m_omega: must be in [0, 1)");
  if (!std::isfinite(tomo.frame_rotation_rad)) throw ConfigError("tomo.frame_rotation_rad: must be finite");
  if (metrics.homscan_points < 1) throw ConfigError("metrics.homscan_points: must be >= 1");
  try {
    brightness.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("brightness.") + e.what());
  }
}

RunConfig paper_defaults_profile() {
  RunConfig c;
  c.physics = paper_default_physics();
  return c;
}

RunConfig profile(const std::string& name) {
  if (name == "paper-defaults") return paper_defaults_profile();
  throw ConfigError("--profile: unknown profile '" + name + "' (available: paper-defaults)");
}

RunConfig apply_config_json(RunConfig c, const json& j) {
  reject_unknown(j, {"physics", "pump", "grid", "noise", "source", "tomo", "metrics", "brightness", "output_dir"},
                 "config");
  rethrow_as_config([&] {
    if (j.contains("physics")) from_json(j.at("physics"), c.physics);
    if (j.contains("pump")) from_json(j.at("pump"), c.pump);
    return 0;
  });
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown(g, {"t_start_ps", "bin_width_ps", "n_bins"}, "grid");
    c.grid.t_start = get_number(g, "grid", "t_start_ps", c.grid.t_start);
    c.grid.bin_width = get_number(g, "grid", "bin_width_ps", c.grid.bin_width);
    c.grid.n_bins = get_int(g, "grid", "n_bins", c.grid.n_bins);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    reject_unknown(n, {"jitter_fwhm_ps", "counts_per_basis", "seed", "mode", "background_per_bin"}, "noise");
    c.noise.jitter_fwhm_ps = get_number(n, "noise", "jitter_fwhm_ps", c.noise.jitter_fwhm_ps);
    c.noise.counts_per_basis = get_number(n, "noise", "counts_per_basis", c.noise.counts_per_basis);
    if (n.contains("seed")) {
      const auto& s = n.at("seed");
      if (!(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0)))
        throw ConfigError("noise.seed: expected a nonnegative integer");
      c.noise.seed = n.at("seed").get<std::uint64_t>();
    }
    if (n.contains("mode")) {
      const auto m = parse_mode(get_string(n, "noise", "mode", ""));
      if (!m) throw ConfigError("noise.mode: expected \"sampled-counts\" or \"expected-intensity\"");
      c.noise.mode = *m;
    }
    c.noise.background_per_bin = get_number(n, "noise", "background_per_bin", c.noise.background_per_bin);
  }
  if (j.contains("source")) {
    const auto& s = j.at("source");
    reject_unknown(s, {"kind", "rho"}, "source");
    const auto kind = get_string(s, "source", "kind", c.source.kind == SourceKind::Pump ? "pump" : "rho");
    if (kind == "pump") {
      c.source.kind = SourceKind::Pump;
    } else if (kind == "rho") {
      c.source.kind = SourceKind::Rho;
    } else {
      throw ConfigError("source.kind: expected \"pump\" or \"rho\"");
    }
    if (s.contains("rho")) {
      c.source.rho = rethrow_as_config([&] {
        try {
          return density_from_json(s.at("rho")).matrix();
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("source.") + e.what());
        }
      });
    }
  }
  if (j.contains("tomo")) {
    const auto& t = j.at("tomo");
    reject_unknown(t, {"n_seeds", "n_bootstrap", "nuisance", "target", "m_omega", "frame_rotation_rad"}, "tomo");
    c.tomo.n_seeds = get_int(t, "tomo", "n_seeds", c.tomo.n_seeds);
    c.tomo.n_bootstrap = get_int(t, "tomo", "n_bootstrap", c.tomo.n_bootstrap);
    c.tomo.nuisance = get_bool(t, "tomo", "nuisance", c.tomo.nuisance);
    if (t.contains("target")) {
      const auto name = get_string(t, "tomo", "target", "");
      if (name == "phi_plus") {
        c.tomo.target = FidelityTarget::PhiPlus;
      } else if (name == "pump") {
        c.tomo.target = FidelityTarget::Pump;
      } else if (name == "none") {
        c.tomo.target = FidelityTarget::None;
      } else {
        throw ConfigError("tomo.target: expected \"phi_plus\", \"pump\" or \"none\"");
      }
    }
    if (t.contains("m_omega")) {
      if (t.at("m_omega").is_null()) {
        c.tomo.m_omega.reset();
      } else {
        c.tomo.m_omega = get_number(t, "tomo", "m_omega", 0.0);
      }
    }
    c.tomo.frame_rotation_rad = get_number(t, "tomo", "frame_rotation_rad", c.tomo.frame_rotation_rad);
  }
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    reject_unknown(m, {"homscan_points", "mixing_convention"}, "metrics");
    c.metrics.homscan_points = get_int(m, "metrics", "homscan_points", c.metrics.homscan_points);
    if (m.contains("mixing_convention")) {
      const auto name = get_string(m, "metrics", "mixing_convention", "");
      if (name == "half_rate") {
        c.metrics.mixing = MixingConvention::HalfRate;
      } else if (name == "full_rate") {
        c.metrics.mixing = MixingConvention::FullRate;
      } else {
        throw ConfigError("metrics.mixing_convention: expected \"half_rate\" or \"full_rate\"");
      }
    }
  }
  if (j.contains("brightness")) {
    const auto& b = j.at("brightness");
    reject_unknown(b, {"r_det_mhz", "r_laser_mhz", "t_setup", "t_tom", "eta_det"}, "brightness");
    c.brightness.r_det_mhz = get_number(b, "brightness", "r_det_mhz", c.brightness.r_det_mhz);
    c.brightness.r_laser_mhz = get_number(b, "brightness", "r_laser_mhz", c.brightness.r_laser_mhz);
    c.brightness.t_setup = get_number(b, "brightness", "t_setup", c.brightness.t_setup);
    c.brightness.t_tom = get_number(b, "brightness", "t_tom", c.brightness.t_tom);
    c.brightness.eta_det = get_number(b, "brightness", "eta_det", c.brightness.eta_det);
  }
  c.output_dir = get_string(j, "config", "output_dir", c.output_dir);
  c.validate();
  return c;
}

json read_config_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  json j;
  j["physics"] = c.physics;
  j["pump"] = c.pump;
  j["grid"] = {{"t_start_ps", c.grid.t_start}, {"bin_width_ps", c.grid.bin_width}, {"n_bins", c.grid.n_bins}};
  j["noise"] = {{"jitter_fwhm_ps", c.noise.jitter_fwhm_ps},
                {"counts_per_basis", c.noise.counts_per_basis},
                {"seed", c.noise.seed},
                {"mode", std::string(mode_name(c.noise.mode))},
                {"background_per_bin", c.noise.background_per_bin}};
  j["source"] = {{"kind", c.source.kind == SourceKind::Pump ? "pump" : "rho"}};
  if (c.source.rho) j["source"]["rho"] = matrix_to_json(*c.source.rho);
  j["tomo"] = {{"n_seeds", c.tomo.n_seeds},
               {"n_bootstrap", c.tomo.n_bootstrap},
               {"nuisance", c.tomo.nuisance},
               {"target", target_name(c.tomo.target)},
               {"m_omega", c.tomo.m_omega ? json(*c.tomo.m_omega) : json(nullptr)},
               {"frame_rotation_rad", c.tomo.frame_rotation_rad}};
  j["metrics"] = {{"homscan_points", c.metrics.homscan_points},
                  {"mixing_convention", c.metrics.mixing == MixingConvention::HalfRate ? "half_rate" : "full_rate"}};
  j["brightness"] = {{"r_det_mhz", c.brightness.r_det_mhz},
                     {"r_laser_mhz", c.brightness.r_laser_mhz},
                     {"t_setup", c.brightness.t_setup},
                     {"t_tom", c.brightness.t_tom},
                     {"eta_det", c.brightness.eta_det}};
  j["output_dir"] = c.output_dir;
  return j;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string config_hash(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

}  // namespace hyperqubit
