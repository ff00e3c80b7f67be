#pragma once

#include <json.hpp>

#include "hyperqubit/core.hpp"

namespace hyperqubit {

/// Raw generator rates of the three-level exciton model, all in 1/ps (angular frequency in rad/ps).
/// Kept separate from PhysParams so degenerate limits (e.g. no radiative decay) can be built directly.
struct Rates {
  double gamma = 0.0;          // radiative decay, identical for both dipoles
  double gamma_hv = 0.0;       // population exchange e_H <-> e_V (symmetric)
  double gamma_star = 0.0;     // pure dephasing between ground and excited manifold
  double gamma_star_hv = 0.0;  // dephasing of e_H/e_V superpositions
  double delta_omega = 0.0;    // omega_H - omega_V
};

/// Emitter constants. Time in ps, energy in µeV, rates in 1/ps.
struct PhysParams {
  double tau_ps = 133.0;
  double fss_uev = 7.35;
  double gamma_hv = 0.0;
  double gamma_star = 0.0;
  double gamma_star_hv = 0.0;
  double eta_h = 1.0;
  double eta_v = 1.0;

  double gamma() const { return 1.0 / tau_ps; }
  double delta_omega() const { return fss_uev / kHbarUeVps; }
  /// Spectral FWHM of emission from either dipole.
  double gamma_s() const { return gamma() + 2.0 * gamma_star + gamma_hv + 0.5 * gamma_star_hv; }
  /// Depolarization rate during emission.
  double gamma_p() const { return gamma_hv + gamma_star_hv; }
  double eta(Pol p) const { return p == Pol::H ? eta_h : eta_v; }
  Rates rates() const { return {gamma(), gamma_hv, gamma_star, gamma_star_hv, delta_omega()}; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Excitation-pulse preparation of the exciton.
struct PumpConfig {
  double theta = kPi / 4.0;  // [0, pi/2]
  double phi = 0.0;          // [-pi, pi)
  double p_qd = 1.0;
  double lambda = 1.0;       // preparation purity

  bool is_pure() const { return p_qd == 1.0 && lambda == 1.0; }
  void validate() const;
};

/// tau = 133 ps, FSS = 7.35 µeV, no dissipation, unit efficiencies.
PhysParams paper_default_physics();

/// Wraps phi into [-pi, pi).
double wrap_phase(double phi);

void to_json(nlohmann::json& j, const PhysParams& p);
void from_json(const nlohmann::json& j, PhysParams& p);
void to_json(nlohmann::json& j, const PumpConfig& p);
void from_json(const nlohmann::json& j, PumpConfig& p);

}  // namespace hyperqubit
