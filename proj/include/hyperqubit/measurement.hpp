#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hyperqubit/core.hpp"
#include "hyperqubit/density.hpp"
#include "hyperqubit/params.hpp"

namespace hyperqubit {

enum class PolBasis { H = 0, V, D, A, R, L };

inline constexpr std::array<PolBasis, 6> kAllBases{PolBasis::H, PolBasis::V, PolBasis::D,
                                                    PolBasis::A, PolBasis::R, PolBasis::L};
inline constexpr int kNumBases = 6;

inline int basis_index(PolBasis b) { return static_cast<int>(b); }
std::string_view basis_name(PolBasis b);
std::optional<PolBasis> parse_basis(std::string_view name);
PolBasis conjugate(PolBasis b);

/// Jones vector (H, V components) of the analyzer.
Vector2c polarization_vector(PolBasis b);

/// |b_t> in the 4-mode basis, including the e^{+-i dw t/2} pulse-mode phases.
Vector4c basis_ket(PolBasis b, double t, double delta_omega);

/// A_b(t) = |b_t><b_t|.
Matrix4c projector_matrix(PolBasis b, double t, double delta_omega);

struct TimeGrid {
  double t_start = 0.0;
  double bin_width = 2.0;
  int n_bins = 600;

  void validate() const;
  double bin_start(int i) const { return t_start + bin_width * i; }
  double bin_center(int i) const { return bin_start(i) + 0.5 * bin_width; }
  double t_end() const { return bin_start(n_bins); }
  bool operator==(const TimeGrid&) const = default;
};

struct IntensityValue {
  double value = 0.0;
  bool unphysical = false;  // value < -1e-9 before clipping
};

/// (1/tau) e^{-t/tau} Tr(rho A_b(t)), clipped at 0 with a diagnostic flag.
IntensityValue expected_intensity(const DensityMatrix4& rho, PolBasis b, double t, const PhysParams& params);

/// Unclipped real part of the same expression for an arbitrary matrix.
double expected_intensity_raw(const Matrix4c& m, PolBasis b, double t, double tau_ps, double delta_omega);

/// Closed-form pure-state intensity. Throws for mixed preparations.
double intensity_pure(const PumpConfig& pump, const PhysParams& params, PolBasis b, double t);

/// Polarization-resolved emission rate of the dissipative three-level emitter, normalized so that
/// the H and V rates integrate to 1 over t >= 0.
double emitter_intensity(const PumpConfig& pump, const PhysParams& params, PolBasis b, double t);

enum class TraceMode { ExpectedIntensity, SampledCounts };
std::string_view mode_name(TraceMode m);
std::optional<TraceMode> parse_mode(std::string_view s);

struct TraceMetadata {
  double jitter_fwhm_ps = 30.0;
  double counts_per_basis = 0.0;
  std::uint64_t seed = 0;
  double background_per_bin = 0.0;
  std::string source;
  std::vector<std::string> warnings;
  double edge_loss_fraction = 0.0;
  std::string config_hash;
};

struct TraceSet {
  TimeGrid grid;
  TraceMode mode = TraceMode::ExpectedIntensity;
  std::array<std::optional<std::vector<double>>, kNumBases> data;
  TraceMetadata meta;

  bool has(PolBasis b) const { return data[basis_index(b)].has_value(); }
  /// Throws std::invalid_argument naming the basis if absent.
  const std::vector<double>& at(PolBasis b) const;
  void set(PolBasis b, std::vector<double> values) { data[basis_index(b)] = std::move(values); }
  /// Lengths, nonnegativity and integrality in sampled mode; throws std::invalid_argument.
  void validate() const;
  void require_all_bases() const;
};

/// Bins a continuous rate onto a grid, convolving with a Gaussian instrument response.
class InstrumentResponse {
 public:
  InstrumentResponse(const TimeGrid& grid, double jitter_fwhm_ps, double t0_ps = 0.0);

  /// Counts per bin of a rate f(t_emit) defined for t_emit >= 0 (zero before), shifted by t0.
  std::vector<double> apply(const std::function<double(double)>& f, double* edge_loss = nullptr) const;
  std::vector<double> apply_serial(const std::function<double(double)>& f, double* edge_loss = nullptr) const;

  const std::vector<double>& taps() const { return taps_; }
  int padding() const { return pad_; }
  double sigma() const { return sigma_; }

 private:
  std::vector<double> finish(const std::vector<double>& padded_bins, const std::vector<double>& conv,
                             double* edge_loss) const;
  TimeGrid grid_;
  double sigma_;
  double t0_;
  int pad_;
  std::vector<double> taps_;
};

inline constexpr double kFwhmToSigma = 2.354820045030949;

struct SynthesisOptions {
  double jitter_fwhm_ps = 30.0;
  double counts_per_basis = 1e6;
  std::uint64_t seed = 0;
  TraceMode mode = TraceMode::SampledCounts;
  double background_per_bin = 0.0;
};

using TraceSource = std::variant<DensityMatrix4, PumpConfig>;

/// Expected counts in a bin are 2 N times the binned intensity (N = counts_per_basis), so a conjugate
/// pair shares 2 N counts before window losses.
TraceSet synthesize_traces(const TraceSource& source, const PhysParams& params, const TimeGrid& grid,
                           const SynthesisOptions& options);
TraceSet synthesize_traces(const TraceSource& source, const PhysParams& params, const TimeGrid& grid,
                           double jitter_fwhm_ps, double counts_per_basis, std::uint64_t seed);

struct StokesPoint {
  double time_ps = 0.0;
  double s_hv = 0.0;
  double s_da = 0.0;
  double s_rl = 0.0;
  double intensity = 0.0;
  bool valid = false;
  double norm() const;
};

struct StokesOptions {
  double relative_floor = 1e-3;
};

std::vector<StokesPoint> stokes_trajectory(const TraceSet& traces, const StokesOptions& options = {});

struct PolarizationSummary {
  double dlp = 0.0;
  double integrated_purity = 0.0;
  std::vector<std::optional<double>> purity_vs_t;
};

PolarizationSummary dlp_and_purity(const TraceSet& traces, const StokesOptions& options = {});

struct BlochEstimate {
  double theta = 0.0;
  double phi = 0.0;
  double fit_rms = 0.0;
  bool degenerate = false;
  std::array<double, 3> pair_amplitudes{1.0, 1.0, 1.0};
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, BlochEstimate best) : NumericalError(what), best(best) {}
  BlochEstimate best;
};

/// Least-squares fit of the pure-state model over (theta, phi) with one amplitude per basis pair.
BlochEstimate estimate_bloch_angles(const TraceSet& traces, const PhysParams& params);

}  // namespace hyperqubit
