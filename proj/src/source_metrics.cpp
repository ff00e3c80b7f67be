#include "hyperqubit/source_metrics.hpp"

#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>

#include "hyperqubit/exciton.hpp"

namespace hyperqubit {

OverlapComponents mean_overlap_components(const PumpConfig& pump, const PhysParams& params) {
  const auto q = emission_probabilities(pump, params);
  const double g = params.gamma();
  const double gs = params.gamma_s();
  const double c = std::cos(2.0 * pump.theta);
  const double ghv = params.gamma_hv;
  OverlapComponents m;
  auto diag = [&](double eta, double qk, double sign) {
    if (qk <= 0.0) return 0.0;
    return g * g * eta * eta / (4.0 * qk * qk * gs) *
           (1.0 / g + sign * 2.0 * c / (g + ghv) + c * c / (g + 2.0 * ghv));
  };
  m.m_hh = diag(params.eta_h, q.p_h, 1.0);
  m.m_vv = diag(params.eta_v, q.p_v, -1.0);
  if (q.p_h > 0.0 && q.p_v > 0.0) {
    const double cs = std::cos(pump.theta) * std::sin(pump.theta);
    m.m_hv = g * g * params.eta_h * params.eta_v * pump.lambda * pump.lambda * cs * cs /
             (q.p_h * q.p_v * gs * (g + params.gamma_p()));
  }
  return m;
}

double mean_overlap_unfiltered(const PumpConfig& pump, const PhysParams& params) {
  const auto q = emission_probabilities(pump, params);
  const auto m = mean_overlap_components(pump, params);
  const double total = q.p_h + q.p_v;
  return (q.p_h * q.p_h * m.m_hh + 2.0 * q.p_h * q.p_v * m.m_hv + q.p_v * q.p_v * m.m_vv) / (total * total);
}

SpectralOverlap spectral_mode_overlap(const PumpConfig& pump, const PhysParams& params) {
  const auto q = emission_probabilities(pump, params);
  if (!(q.p_h * q.p_v > 0.0)) throw std::invalid_argument("spectral_mode_overlap: p_H p_V = 0");
  const double g = params.gamma();
  const double ghv = params.gamma_hv;
  const double num = g * params.eta_h * params.eta_v * (g + 4.0 * ghv - g * std::cos(4.0 * pump.theta));
  const Complex den = 8.0 * q.p_h * q.p_v * (g + 2.0 * ghv) * (params.gamma_s() - kI * params.delta_omega());
  SpectralOverlap out;
  out.amplitude = num / den;
  out.m_omega = out.amplitude.real();
  out.squared_magnitude = std::norm(out.amplitude);
  return out;
}

void BrightnessInputs::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + ": must be in (0, 1]");
  };
  if (!(r_det_mhz >= 0.0)) throw std::invalid_argument("r_det: must be >= 0");
  if (!(r_laser_mhz > 0.0)) throw std::invalid_argument("r_laser: must be > 0");
  unit(t_setup, "t_setup");
  unit(t_tom, "t_tom");
  unit(eta_det, "eta_det");
  if (r_det_mhz > r_laser_mhz) throw std::invalid_argument("r_det: must not exceed r_laser");
}

Brightness first_lens_brightness(const BrightnessInputs& in) {
  const double den = in.r_laser_mhz * in.t_setup * in.t_tom * in.eta_det;
  if (!(den > 0.0)) throw std::invalid_argument("first_lens_brightness: zero denominator");
  in.validate();
  Brightness b;
  b.b_fl = in.r_det_mhz / den;
  b.b_fib = b.b_fl * in.t_setup;
  return b;
}

TransmissionTotal transmission_chain(const std::vector<TransmissionElement>& elements) {
  if (elements.empty()) throw std::invalid_argument("transmission_chain: empty element list");
  TransmissionTotal out;
  double rel2 = 0.0;
  bool all_unc = true;
  for (const auto& e : elements) {
    if (!(e.transmission > 0.0 && e.transmission <= 1.0))
      throw std::invalid_argument("transmission_chain: " + e.label + " must be in (0, 1]");
    out.total *= e.transmission;
    if (e.uncertainty) {
      const double r = *e.uncertainty / e.transmission;
      rel2 += r * r;
    } else {
      all_unc = false;
    }
  }
  if (all_unc) out.uncertainty = out.total * std::sqrt(rel2);
  return out;
}

std::vector<TransmissionElement> setup_transmission_table() {
  return {{"Lens + Cryostat Window", 0.90, 0.01}, {"QWP + HWP", 0.98, 0.01},
          {"Free-space to fiber coupling", 0.65, 0.03}, {"Fiber transmission", 0.92, 0.01},
          {"BP filters x3", 0.82, 0.01}, {"Free-space to fiber coupling", 0.83, 0.01},
          {"Fiber transmission", 0.90, 0.01}};
}

std::vector<TransmissionElement> tomography_transmission_table() {
  return {{"QWP x2 + HWP x2", 0.96, 0.01}, {"Wollaston prism", 0.97, 0.01},
          {"Free-space to fiber coupling", 0.88, 0.01}, {"Fiber transmission", 0.95, 0.01}};
}

namespace {

HomPoint hom_point(double theta, const PumpConfig& base, const PhysParams& params) {
  PumpConfig p = base;
  p.theta = theta;
  const auto m = mean_overlap_components(p, params);
  return {theta, mean_overlap_unfiltered(p, params), m.m_hh, m.m_hv, m.m_vv};
}

}  // namespace

std::vector<HomPoint> homscan(const std::vector<double>& thetas, const PumpConfig& base, const PhysParams& params) {
  params.validate();
  for (double t : thetas) {
    PumpConfig p = base;
    p.theta = t;
    p.validate();
  }
  std::vector<HomPoint> out(thetas.size());
  const long n = static_cast<long>(thetas.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[static_cast<size_t>(i)] = hom_point(thetas[static_cast<size_t>(i)], base, params);
  return out;
}

std::vector<HomPoint> homscan_serial(const std::vector<double>& thetas, const PumpConfig& base,
                                     const PhysParams& params) {
  std::vector<HomPoint> out;
  out.reserve(thetas.size());
  for (double t : thetas) out.push_back(hom_point(t, base, params));
  return out;
}

std::vector<double> theta_grid(int n_points) {
  if (n_points < 1) throw std::invalid_argument("theta grid: need at least one point");
  if (n_points == 1) return {kPi / 4.0};
  std::vector<double> out(static_cast<size_t>(n_points));
  for (int i = 0; i < n_points; ++i) out[static_cast<size_t>(i)] = 0.5 * kPi * i / (n_points - 1);
  return out;
}

double gamma_hv_from_mixing_timescale(double timescale_ps, MixingConvention convention) {
  if (!(timescale_ps > 0.0)) throw std::invalid_argument("mixing timescale: must be > 0");
  return convention == MixingConvention::HalfRate ? 0.5 / timescale_ps : 1.0 / timescale_ps;
}

PhysParams calibrate_gamma_star(PhysParams params, const PumpConfig& pump, double target_m) {
  auto m_at = [&](double gs) {
    PhysParams p = params;
    p.gamma_star = gs;
    return mean_overlap_unfiltered(pump, p) - target_m;
  };
  if (m_at(0.0) < 0.0) throw std::invalid_argument("calibrate_gamma_star: target exceeds the dephasing-free overlap");
  double hi = params.gamma();
  for (int i = 0; i < 60 && m_at(hi) > 0.0; ++i) hi *= 2.0;
  if (m_at(hi) > 0.0) throw NumericalError("calibrate_gamma_star: could not bracket the target");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(m_at, 0.0, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  params.gamma_star = 0.5 * (r.first + r.second);
  return params;
}

OverlapCalibration hom_calibration(MixingConvention convention) {
  PhysParams p = paper_default_physics();
  p.gamma_hv = gamma_hv_from_mixing_timescale(12000.0, convention);
  p.eta_h = 1.0;
  p.eta_v = 0.88;
  PumpConfig pump;
  pump.theta = 0.0;
  pump.phi = 0.0;
  pump.p_qd = 1.0;
  pump.lambda = 0.949;
  return {calibrate_gamma_star(p, pump, 0.922), pump};
}

}  // namespace hyperqubit
