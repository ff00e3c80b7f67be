#include "hyperqubit/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "hyperqubit/exciton.hpp"
#include "hyperqubit/kernels.hpp"
#include "hyperqubit/rng.hpp"

namespace hyperqubit {

std::string_view basis_name(PolBasis b) {
  static constexpr std::array<std::string_view, 6> names{"H", "V", "D", "A", "R", "L"};
  return names[basis_index(b)];
}

std::optional<PolBasis> parse_basis(std::string_view name) {
  for (PolBasis b : kAllBases)
    if (basis_name(b) == name) return b;
  return std::nullopt;
}

PolBasis conjugate(PolBasis b) {
  switch (b) {
    case PolBasis::H: return PolBasis::V;
    case PolBasis::V: return PolBasis::H;
    case PolBasis::D: return PolBasis::A;
    case PolBasis::A: return PolBasis::D;
    case PolBasis::R: return PolBasis::L;
    case PolBasis::L: return PolBasis::R;
  }
  return b;
}

Vector2c polarization_vector(PolBasis b) {
  const double r = 1.0 / std::sqrt(2.0);
  switch (b) {
    case PolBasis::H: return {1.0, 0.0};
    case PolBasis::V: return {0.0, 1.0};
    case PolBasis::D: return {r, r};
    case PolBasis::A: return {r, -r};
    case PolBasis::R: return {r, kI * r};
    case PolBasis::L: return {r, -kI * r};
  }
  return {0.0, 0.0};
}

Vector4c basis_ket(PolBasis b, double t, double delta_omega) {
  const Vector2c p = polarization_vector(b);
  const Complex up = std::exp(kI * (0.5 * delta_omega * t));
  const Complex down = std::conj(up);
  return {p(0) * up, p(0) * down, p(1) * up, p(1) * down};
}

Matrix4c projector_matrix(PolBasis b, double t, double delta_omega) {
  const Vector4c k = basis_ket(b, t, delta_omega);
  return k * k.adjoint();
}

void TimeGrid::validate() const {
  if (!(std::isfinite(t_start) && t_start >= 0.0)) throw std::invalid_argument("grid.t_start_ps: must be >= 0");
  if (!(std::isfinite(bin_width) && bin_width > 0.0))
    throw std::invalid_argument("grid.bin_width_ps: must be > 0");
  if (n_bins < 2) throw std::invalid_argument("grid.n_bins: must be >= 2");
}

double expected_intensity_raw(const Matrix4c& m, PolBasis b, double t, double tau_ps, double delta_omega) {
  const Vector4c k = basis_ket(b, t, delta_omega);
  return std::exp(-t / tau_ps) / tau_ps * (k.adjoint() * m * k)(0, 0).real();
}

IntensityValue expected_intensity(const DensityMatrix4& rho, PolBasis b, double t, const PhysParams& params) {
  if (!(t >= 0.0)) throw std::invalid_argument("expected_intensity: t must be >= 0");
  const double v = expected_intensity_raw(rho.matrix(), b, t, params.tau_ps, params.delta_omega());
  return {std::max(v, 0.0), v < -1e-9};
}

double intensity_pure(const PumpConfig& pump, const PhysParams& params, PolBasis b, double t) {
  pump.validate();
  if (!pump.is_pure()) throw std::invalid_argument("intensity_pure: requires p_qd = 1 and lambda = 1");
  if (!(t >= 0.0)) throw std::invalid_argument("intensity_pure: t must be >= 0");
  const double pre = std::exp(-t / params.tau_ps) / params.tau_ps;
  const double c = std::cos(pump.theta);
  const double s = std::sin(pump.theta);
  const double s2 = std::sin(2.0 * pump.theta);
  const double x = params.delta_omega() * t + pump.phi;
  switch (b) {
    case PolBasis::H: return pre * c * c;
    case PolBasis::V: return pre * s * s;
    case PolBasis::D: return pre * 0.5 * (1.0 + s2 * std::cos(x));
    case PolBasis::A: return pre * 0.5 * (1.0 - s2 * std::cos(x));
    case PolBasis::R: return pre * 0.5 * (1.0 + s2 * std::sin(x));
    case PolBasis::L: return pre * 0.5 * (1.0 - s2 * std::sin(x));
  }
  return 0.0;
}

double emitter_intensity(const PumpConfig& pump, const PhysParams& params, PolBasis b, double t) {
  if (t < 0.0) return 0.0;
  const auto q = emission_probabilities(pump, params);
  const double norm = pump.p_qd * q.total();
  if (norm <= 0.0) return 0.0;
  const double g = params.gamma();
  const double c2 = std::cos(2.0 * pump.theta);
  const double mix = c2 * std::exp(-2.0 * params.gamma_hv * t);
  const double decay = std::exp(-g * t);
  const double p_h = 0.5 * pump.p_qd * (1.0 + mix) * decay;
  const double p_v = 0.5 * pump.p_qd * (1.0 - mix) * decay;
  const Complex rho_hv = pump.p_qd * pump.lambda * std::cos(pump.theta) * std::sin(pump.theta) *
                         std::exp(-kI * (pump.phi + params.delta_omega() * t)) *
                         std::exp(-(g + params.gamma_p()) * t);
  Matrix2c pi;
  pi << params.eta_h * p_h, std::sqrt(params.eta_h * params.eta_v) * rho_hv,
      std::sqrt(params.eta_h * params.eta_v) * std::conj(rho_hv), params.eta_v * p_v;
  const Vector2c v = polarization_vector(b);
  return g * (v.adjoint() * pi * v)(0, 0).real() / norm;
}

std::string_view mode_name(TraceMode m) {
  return m == TraceMode::SampledCounts ? "sampled-counts" : "expected-intensity";
}

std::optional<TraceMode> parse_mode(std::string_view s) {
  if (s == "sampled-counts") return TraceMode::SampledCounts;
  if (s == "expected-intensity") return TraceMode::ExpectedIntensity;
  return std::nullopt;
}

const std::vector<double>& TraceSet::at(PolBasis b) const {
  const auto& d = data[basis_index(b)];
  if (!d) throw std::invalid_argument("missing basis " + std::string(basis_name(b)));
  return *d;
}

void TraceSet::require_all_bases() const {
  for (PolBasis b : kAllBases) at(b);
}

void TraceSet::validate() const {
  grid.validate();
  for (PolBasis b : kAllBases) {
    if (!has(b)) continue;
    const auto& v = at(b);
    const std::string name(basis_name(b));
    if (static_cast<int>(v.size()) != grid.n_bins)
      throw std::invalid_argument("basis " + name + ": length differs from grid.n_bins");
    for (size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]) || v[i] < 0.0)
        throw std::invalid_argument("basis " + name + ": negative or non-finite entry at bin " + std::to_string(i));
      if (mode == TraceMode::SampledCounts && v[i] != std::floor(v[i]))
        throw std::invalid_argument("basis " + name + ": non-integer count at bin " + std::to_string(i));
    }
  }
}

InstrumentResponse::InstrumentResponse(const TimeGrid& grid, double jitter_fwhm_ps, double t0_ps)
    : grid_(grid), sigma_(jitter_fwhm_ps / kFwhmToSigma), t0_(t0_ps) {
  grid.validate();
  if (!(std::isfinite(jitter_fwhm_ps) && jitter_fwhm_ps >= 0.0))
    throw std::invalid_argument("jitter_fwhm_ps: must be >= 0");
  if (sigma_ == 0.0) {
    pad_ = 0;
    taps_ = {1.0};
    return;
  }
  const int half = static_cast<int>(std::floor(4.0 * sigma_ / grid.bin_width));
  pad_ = half + 1;
  taps_.resize(static_cast<size_t>(2 * half + 1));
  const double scale = grid.bin_width / (std::sqrt(2.0) * sigma_);
  double sum = 0.0;
  for (int k = -half; k <= half; ++k) {
    const double w = 0.5 * (std::erf((k + 0.5) * scale) - std::erf((k - 0.5) * scale));
    taps_[static_cast<size_t>(k + half)] = w;
    sum += w;
  }
  for (double& w : taps_) w /= sum;
}

std::vector<double> InstrumentResponse::finish(const std::vector<double>& padded_bins,
                                               const std::vector<double>& conv, double* edge_loss) const {
  std::vector<double> out(conv.begin() + pad_, conv.begin() + pad_ + grid_.n_bins);
  if (edge_loss) {
    double before = 0.0;
    for (int i = 0; i < grid_.n_bins; ++i) before += padded_bins[static_cast<size_t>(i + pad_)];
    double after = 0.0;
    for (double v : out) after += v;
    *edge_loss = before > 0.0 ? (before - after) / before : 0.0;
  }
  return out;
}

std::vector<double> InstrumentResponse::apply(const std::function<double(double)>& f, double* edge_loss) const {
  std::vector<double> bins(static_cast<size_t>(grid_.n_bins + 2 * pad_));
  const double t0 = t0_;
  auto shifted = [&f, t0](double t) { return f(t - t0); };
  kernels::omp::bin_integrate(shifted, grid_.t_start - pad_ * grid_.bin_width, grid_.bin_width, t0, bins);
  std::vector<double> conv;
  kernels::omp::convolve(bins, taps_, conv);
  return finish(bins, conv, edge_loss);
}

std::vector<double> InstrumentResponse::apply_serial(const std::function<double(double)>& f,
                                                     double* edge_loss) const {
  std::vector<double> bins(static_cast<size_t>(grid_.n_bins + 2 * pad_));
  const double t0 = t0_;
  auto shifted = [&f, t0](double t) { return f(t - t0); };
  kernels::serial::bin_integrate(shifted, grid_.t_start - pad_ * grid_.bin_width, grid_.bin_width, t0, bins);
  std::vector<double> conv;
  kernels::serial::convolve(bins, taps_, conv);
  return finish(bins, conv, edge_loss);
}

namespace {

std::string describe(const TraceSource& source) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* pump = std::get_if<PumpConfig>(&source)) {
    os << "pump theta_rad=" << pump->theta << " phi_rad=" << pump->phi << " p_qd=" << pump->p_qd
       << " lambda=" << pump->lambda;
  } else {
    os << "density_matrix";
  }
  return os.str();
}

}  // namespace

TraceSet synthesize_traces(const TraceSource& source, const PhysParams& params, const TimeGrid& grid,
                           const SynthesisOptions& options) {
  params.validate();
  grid.validate();
  if (!(options.counts_per_basis > 0.0)) throw std::invalid_argument("counts_per_basis: must be > 0");
  if (!(options.background_per_bin >= 0.0)) throw std::invalid_argument("background_per_bin: must be >= 0");
  if (const auto* pump = std::get_if<PumpConfig>(&source)) pump->validate();

  TraceSet out;
  out.grid = grid;
  out.mode = options.mode;
  out.meta.jitter_fwhm_ps = options.jitter_fwhm_ps;
  out.meta.counts_per_basis = options.counts_per_basis;
  out.meta.seed = options.seed;
  out.meta.background_per_bin = options.background_per_bin;
  out.meta.source = describe(source);

  const double dw = params.delta_omega();
  if (dw > 0.0 && grid.bin_width > kPi / (4.0 * dw))
    out.meta.warnings.push_back("bin width too coarse to resolve the fine-structure beat");

  const InstrumentResponse response(grid, options.jitter_fwhm_ps);
  const double scale = 2.0 * options.counts_per_basis;
  double raw_total = 0.0;
  double kept_total = 0.0;
  for (PolBasis b : kAllBases) {
    std::function<double(double)> f;
    if (const auto* rho = std::get_if<DensityMatrix4>(&source)) {
      const Matrix4c m = rho->matrix();
      f = [m, b, &params, dw](double t) { return expected_intensity_raw(m, b, t, params.tau_ps, dw); };
    } else {
      const PumpConfig pump = std::get<PumpConfig>(source);
      f = [pump, b, &params](double t) { return emitter_intensity(pump, params, b, t); };
    }
    double loss = 0.0;
    std::vector<double> mu = response.apply(f, &loss);
    double kept = 0.0;
    for (double v : mu) kept += v;
    kept_total += kept;
    raw_total += loss < 1.0 ? kept / (1.0 - loss) : 0.0;
    for (size_t i = 0; i < mu.size(); ++i) {
      double m = std::max(mu[i], 0.0) * scale + options.background_per_bin;
      if (options.mode == TraceMode::SampledCounts) {
        CounterRng rng(options.seed, static_cast<std::uint64_t>(basis_index(b)) * grid.n_bins + i);
        std::poisson_distribution<long long> dist(m);
        m = m > 0.0 ? static_cast<double>(dist(rng)) : 0.0;
      }
      mu[i] = m;
    }
    out.set(b, std::move(mu));
  }
  out.meta.edge_loss_fraction = raw_total > 0.0 ? 1.0 - kept_total / raw_total : 0.0;
  return out;
}

TraceSet synthesize_traces(const TraceSource& source, const PhysParams& params, const TimeGrid& grid,
                           double jitter_fwhm_ps, double counts_per_basis, std::uint64_t seed) {
  SynthesisOptions o;
  o.jitter_fwhm_ps = jitter_fwhm_ps;
  o.counts_per_basis = counts_per_basis;
  o.seed = seed;
  return synthesize_traces(source, params, grid, o);
}

double StokesPoint::norm() const { return std::sqrt(s_hv * s_hv + s_da * s_da + s_rl * s_rl); }

std::vector<StokesPoint> stokes_trajectory(const TraceSet& traces, const StokesOptions& options) {
  traces.require_all_bases();
  traces.validate();
  const int n = traces.grid.n_bins;
  const double bg = traces.meta.background_per_bin;
  auto val = [&](PolBasis b, int i) { return std::max(traces.at(b)[static_cast<size_t>(i)] - bg, 0.0); };
  double peak = 0.0;
  for (int i = 0; i < n; ++i) peak = std::max(peak, val(PolBasis::H, i) + val(PolBasis::V, i));
  std::vector<StokesPoint> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    StokesPoint& p = out[static_cast<size_t>(i)];
    p.time_ps = traces.grid.bin_start(i);
    const double h = val(PolBasis::H, i), v = val(PolBasis::V, i);
    const double d = val(PolBasis::D, i), a = val(PolBasis::A, i);
    const double r = val(PolBasis::R, i), l = val(PolBasis::L, i);
    p.intensity = h + v;
    p.valid = peak > 0.0 && p.intensity >= options.relative_floor * peak && d + a > 0.0 && r + l > 0.0;
    if (!p.valid) continue;
    p.s_hv = (h - v) / (h + v);
    p.s_da = (d - a) / (d + a);
    p.s_rl = (r - l) / (r + l);
  }
  return out;
}

PolarizationSummary dlp_and_purity(const TraceSet& traces, const StokesOptions& options) {
  const auto traj = stokes_trajectory(traces, options);
  const double bg = traces.meta.background_per_bin;
  double sum_h = 0.0, sum_v = 0.0;
  for (int i = 0; i < traces.grid.n_bins; ++i) {
    sum_h += std::max(traces.at(PolBasis::H)[static_cast<size_t>(i)] - bg, 0.0);
    sum_v += std::max(traces.at(PolBasis::V)[static_cast<size_t>(i)] - bg, 0.0);
  }
  PolarizationSummary out;
  out.dlp = sum_h + sum_v > 0.0 ? (sum_h - sum_v) / (sum_h + sum_v) : 0.0;
  double weight = 0.0, acc = 0.0;
  out.purity_vs_t.reserve(traj.size());
  for (const auto& p : traj) {
    if (!p.valid) {
      out.purity_vs_t.emplace_back(std::nullopt);
      continue;
    }
    out.purity_vs_t.emplace_back(p.norm());
    acc += p.intensity * p.norm();
    weight += p.intensity;
  }
  out.integrated_purity = weight > 0.0 ? acc / weight : 0.0;
  return out;
}

namespace {

// Pure-state model per basis: (1/tau) e^{-t/tau} (u0 + n . u(t)) with n the Bloch vector.
struct BlochDesign {
  std::array<std::array<std::vector<double>, 4>, 6> cols;
};

BlochDesign bloch_design(const TimeGrid& grid, const PhysParams& params, double jitter) {
  const InstrumentResponse response(grid, jitter);
  const double tau = params.tau_ps;
  const double dw = params.delta_omega();
  BlochDesign d;
  for (PolBasis b : kAllBases) {
    for (int c = 0; c < 4; ++c) {
      auto f = [b, c, tau, dw](double t) {
        const double pre = 0.5 * std::exp(-t / tau) / tau;
        const double co = std::cos(dw * t), si = std::sin(dw * t);
        double coef = 0.0;
        switch (b) {
          case PolBasis::H: coef = c == 0 ? 1.0 : (c == 3 ? 1.0 : 0.0); break;
          case PolBasis::V: coef = c == 0 ? 1.0 : (c == 3 ? -1.0 : 0.0); break;
          case PolBasis::D: coef = c == 0 ? 1.0 : (c == 1 ? co : (c == 2 ? -si : 0.0)); break;
          case PolBasis::A: coef = c == 0 ? 1.0 : (c == 1 ? -co : (c == 2 ? si : 0.0)); break;
          case PolBasis::R: coef = c == 0 ? 1.0 : (c == 1 ? si : (c == 2 ? co : 0.0)); break;
          case PolBasis::L: coef = c == 0 ? 1.0 : (c == 1 ? -si : (c == 2 ? -co : 0.0)); break;
        }
        return pre * coef;
      };
      d.cols[basis_index(b)][c] = response.apply(f);
    }
  }
  return d;
}

struct BlochProblem {
  const BlochDesign* design;
  std::array<std::vector<double>, 6> data;
  std::array<std::vector<double>, 6> weight;
  int n_bins;
  double data_norm = 0.0;

  bool exact(double cost) const { return cost <= 1e-14 * data_norm; }

  static Eigen::Vector3d direction(double alpha, double phi) {
    return {std::sin(alpha) * std::cos(phi), std::sin(alpha) * std::sin(phi), std::cos(alpha)};
  }

  // Weighted residual sum of squares with the pair amplitudes profiled out.
  double cost(double alpha, double phi, std::array<double, 3>* amps = nullptr) const {
    const Eigen::Vector3d n = direction(alpha, phi);
    double total = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
      double num = 0.0, den = 0.0, dd = 0.0;
      for (int side = 0; side < 2; ++side) {
        const int b = 2 * pair + side;
        const auto& c = design->cols[static_cast<size_t>(b)];
        for (int i = 0; i < n_bins; ++i) {
          const size_t k = static_cast<size_t>(i);
          const double m = c[0][k] + n(0) * c[1][k] + n(1) * c[2][k] + n(2) * c[3][k];
          const double w = weight[static_cast<size_t>(b)][k];
          const double y = data[static_cast<size_t>(b)][k];
          num += w * m * y;
          den += w * m * m;
          dd += w * y * y;
        }
      }
      const double a = den > 0.0 ? num / den : 0.0;
      if (amps) (*amps)[static_cast<size_t>(pair)] = a;
      total += std::max(dd - a * num, 0.0);
    }
    return total;
  }
};

double bloch_cost(const gsl_vector* x, void* p) {
  const auto* prob = static_cast<const BlochProblem*>(p);
  return prob->cost(gsl_vector_get(x, 0), gsl_vector_get(x, 1));
}

// Near theta = 0 or pi/2 the azimuth is unobservable; only alpha is refined.
struct BlochPole {
  const BlochProblem* prob;
  double phi;
};

double bloch_pole_cost(const gsl_vector* x, void* p) {
  const auto* pole = static_cast<const BlochPole*>(p);
  return pole->prob->cost(gsl_vector_get(x, 0), pole->phi);
}

}  // namespace

BlochEstimate estimate_bloch_angles(const TraceSet& traces, const PhysParams& params) {
  traces.require_all_bases();
  traces.validate();
  params.validate();
  const BlochDesign design = bloch_design(traces.grid, params, traces.meta.jitter_fwhm_ps);
  BlochProblem prob{&design, {}, {}, traces.grid.n_bins};
  const double scale = traces.meta.counts_per_basis > 0.0 ? 2.0 * traces.meta.counts_per_basis : 1.0;
  double peak = 0.0;
  for (PolBasis b : kAllBases)
    for (double v : traces.at(b)) peak = std::max(peak, v);
  const double floor = traces.mode == TraceMode::SampledCounts ? 1.0 : std::max(peak * 1e-9, 1e-300);
  for (PolBasis b : kAllBases) {
    const auto& v = traces.at(b);
    auto& d = prob.data[static_cast<size_t>(basis_index(b))];
    auto& w = prob.weight[static_cast<size_t>(basis_index(b))];
    d.resize(v.size());
    w.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      d[i] = (v[i] - traces.meta.background_per_bin) / scale;
      w[i] = scale / std::max(v[i], floor);
      prob.data_norm += w[i] * d[i] * d[i];
    }
  }

  double best_a = 0.0, best_p = 0.0, best_c = std::numeric_limits<double>::infinity();
  constexpr int kAlphaSteps = 25, kPhiSteps = 48;
  for (int i = 0; i <= kAlphaSteps; ++i) {
    const double alpha = kPi * i / kAlphaSteps;
    for (int j = 0; j < kPhiSteps; ++j) {
      const double phi = -kPi + 2.0 * kPi * j / kPhiSteps;
      const double c = prob.cost(alpha, phi);
      if (c < best_c) {
        best_c = c;
        best_a = alpha;
        best_p = phi;
      }
    }
  }

  gsl_set_error_handler_off();
  gsl_multimin_function fn{&bloch_cost, 2, &prob};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  bool converged = false;
  for (int restart = 0; restart < 4 && !converged; ++restart) {
    gsl_vector_set(x, 0, best_a);
    gsl_vector_set(x, 1, best_p);
    gsl_vector_set_all(step, restart == 0 ? 0.05 : 0.01);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    const double start = best_c;
    for (int it = 0; it < 5000; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-11) == GSL_SUCCESS || prob.exact(s->fval)) {
        converged = true;
        break;
      }
    }
    if (s->fval <= best_c) {
      best_c = s->fval;
      best_a = gsl_vector_get(s->x, 0);
      best_p = gsl_vector_get(s->x, 1);
    }
    gsl_multimin_fminimizer_free(s);
    if (converged && restart > 0 && start - best_c > 1e-12 * std::max(1.0, best_c)) converged = false;
  }
  gsl_vector_free(x);
  gsl_vector_free(step);

  if (!converged && std::abs(std::sin(best_a)) < 1e-3) {
    BlochPole pole{&prob, best_p};
    gsl_multimin_function fn1{&bloch_pole_cost, 1, &pole};
    gsl_vector* x1 = gsl_vector_alloc(1);
    gsl_vector* s1 = gsl_vector_alloc(1);
    gsl_vector_set(x1, 0, best_a);
    gsl_vector_set(s1, 0, 0.01);
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 1);
    gsl_multimin_fminimizer_set(m, &fn1, x1, s1);
    for (int it = 0; it < 2000; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-11) == GSL_SUCCESS || prob.exact(m->fval)) {
        converged = true;
        break;
      }
    }
    if (m->fval <= best_c) {
      best_c = m->fval;
      best_a = gsl_vector_get(m->x, 0);
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(x1);
    gsl_vector_free(s1);
  }

  BlochEstimate est;
  const Eigen::Vector3d n = BlochProblem::direction(best_a, best_p);
  prob.cost(best_a, best_p, &est.pair_amplitudes);
  est.theta = 0.5 * std::acos(std::clamp(n(2), -1.0, 1.0));
  const double transverse = std::hypot(n(0), n(1));
  est.degenerate = transverse < 1e-6;
  est.phi = est.degenerate ? 0.0 : wrap_phase(std::atan2(n(1), n(0)));
  long count = 0;
  for (const auto& d : prob.data) count += static_cast<long>(d.size());
  est.fit_rms = std::sqrt(best_c / static_cast<double>(count));
  if (!converged) throw FitError("estimate_bloch_angles: simplex did not converge", est);
  return est;
}

}  // namespace hyperqubit
