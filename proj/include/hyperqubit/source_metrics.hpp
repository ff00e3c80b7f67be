#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hyperqubit/core.hpp"
#include "hyperqubit/params.hpp"

namespace hyperqubit {

struct OverlapComponents {
  double m_hh = 0.0;
  double m_hv = 0.0;  // equals M_VH
  double m_vv = 0.0;
};

/// Closed-form M_kl. A component whose polarization mode is never populated is reported as 0.
OverlapComponents mean_overlap_components(const PumpConfig& pump, const PhysParams& params);

/// (p_H^2 M_HH + 2 p_H p_V M_HV + p_V^2 M_VV) / (p_H + p_V)^2.
double mean_overlap_unfiltered(const PumpConfig& pump, const PhysParams& params);

struct SpectralOverlap {
  /// The closed form with the (Gamma_s - i dw) denominator; twice the s >= 0 half of the double integral.
  Complex amplitude = 0.0;
  /// Full double integral of xi_H xi_V^*, equal to Re(amplitude); in the ideal limit |c1|^2.
  double m_omega = 0.0;
  double squared_magnitude = 0.0;
};

/// Throws std::invalid_argument when p_H p_V = 0.
SpectralOverlap spectral_mode_overlap(const PumpConfig& pump, const PhysParams& params);

struct BrightnessInputs {
  double r_det_mhz = 0.0;
  double r_laser_mhz = 0.0;
  double t_setup = 0.0;
  double t_tom = 0.0;
  double eta_det = 0.0;
  void validate() const;
};

struct Brightness {
  double b_fl = 0.0;
  double b_fib = 0.0;
};

Brightness first_lens_brightness(const BrightnessInputs& in);

struct TransmissionElement {
  std::string label;
  double transmission = 1.0;
  std::optional<double> uncertainty;
};

struct TransmissionTotal {
  double total = 1.0;
  /// Absolute uncertainty from the root-sum-square of relative element uncertainties, when all are given.
  std::optional<double> uncertainty;
};

TransmissionTotal transmission_chain(const std::vector<TransmissionElement>& elements);
std::vector<TransmissionElement> setup_transmission_table();
std::vector<TransmissionElement> tomography_transmission_table();

struct HomPoint {
  double theta = 0.0;
  double m_unfiltered = 0.0;
  double m_hh = 0.0;
  double m_hv = 0.0;
  double m_vv = 0.0;
};

/// M(theta) at fixed phi, p_qd, lambda taken from `base`.
std::vector<HomPoint> homscan(const std::vector<double>& thetas, const PumpConfig& base, const PhysParams& params);
std::vector<HomPoint> homscan_serial(const std::vector<double>& thetas, const PumpConfig& base,
                                     const PhysParams& params);
std::vector<double> theta_grid(int n_points);

enum class MixingConvention { HalfRate, FullRate };

/// HalfRate: timescale = 1/(2 gamma_HV), the decay time of the cos(2 theta) term. FullRate: 1/gamma_HV.
double gamma_hv_from_mixing_timescale(double timescale_ps, MixingConvention convention);

/// Returns params with gamma_star chosen so that mean_overlap_unfiltered(pump, params) = target.
PhysParams calibrate_gamma_star(PhysParams params, const PumpConfig& pump, double target_m);

struct OverlapCalibration {
  PhysParams params;
  PumpConfig pump;  // theta = 0 reference
};

/// Dipole imbalance eta_V = 0.88 eta_H, preparation purity 0.949, 12 ns mixing, gamma* tuned to M(0) = 0.922.
OverlapCalibration hom_calibration(MixingConvention convention = MixingConvention::HalfRate);

}  // namespace hyperqubit
