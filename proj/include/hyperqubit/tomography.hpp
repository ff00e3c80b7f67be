#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "hyperqubit/density.hpp"
#include "hyperqubit/kernels.hpp"
#include "hyperqubit/measurement.hpp"
#include "hyperqubit/optimizer.hpp"

namespace hyperqubit {

/// The 16 reals of the lower-triangular T with rho = T^dagger T / Tr.
struct TParams {
  std::array<double, 16> t{};

  Matrix4c t_matrix() const;
  /// Flips rows of T with a negative diagonal so that t1..t4 >= 0; rho is unchanged.
  TParams canonical() const;
  Eigen::VectorXd as_vector() const;
  static TParams from_vector(const Eigen::VectorXd& v);
};

/// Throws std::invalid_argument if every parameter is zero or any is non-finite.
DensityMatrix4 rho_from_t(const TParams& t);
Matrix4c rho_matrix_from_t(const TParams& t);

/// Cholesky factor of rho + 1e-9 I in the T layout. Throws for non-Hermitian or indefinite input.
TParams t_from_rho(const DensityMatrix4& rho);
TParams t_from_rho(const Matrix4c& rho);

/// Real coordinates r of a 4x4 Hermitian matrix: the four diagonals, then (Re, Im) of the upper
/// triangle in row order 12, 13, 14, 23, 24, 34.
Eigen::Matrix<double, 16, 1> rho_coordinates(const Matrix4c& m);
Matrix4c rho_from_coordinates(const Eigen::Matrix<double, 16, 1>& r);

/// Linear map from rho coordinates to binned, jitter-convolved intensities for all six bases.
class TraceModel {
 public:
  TraceModel(const TimeGrid& grid, const PhysParams& params, double jitter_fwhm_ps, double t0_ps = 0.0);

  const TimeGrid& grid() const { return grid_; }
  /// Rows are basis-major (basis * n_bins + bin); 16 columns.
  const kernels::RowMatrix& design() const { return design_; }
  double edge_loss_fraction() const { return edge_loss_; }
  /// Binned intensities (before count scaling) per basis.
  std::array<std::vector<double>, 6> intensities(const Matrix4c& rho) const;

 private:
  TimeGrid grid_;
  kernels::RowMatrix design_;
  double edge_loss_ = 0.0;
};

enum class LikelihoodKind { Poisson, Gaussian };

struct NuisanceConfig {
  bool enabled = false;  // adds t0 and one log-amplitude per basis pair
};

/// Negative log-likelihood of a TraceSet as a function of TParams (and nuisance parameters).
class Likelihood {
 public:
  Likelihood(const TraceSet& traces, const PhysParams& params, NuisanceConfig nuisance = {});
  /// Uses a prebuilt model; throws std::invalid_argument when the grids differ.
  Likelihood(const TraceSet& traces, const PhysParams& params, const TraceModel& model,
             NuisanceConfig nuisance = {});

  LikelihoodKind kind() const { return kind_; }
  int dimension() const { return nuisance_.enabled ? 20 : 16; }
  double count_scale() const { return scale_; }

  /// Raw NLL: Poisson sum(mu - n log mu) or Gaussian 0.5 sum w (n - mu)^2.
  double nll(const Eigen::VectorXd& x) const;
  double nll_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const;
  /// Value of the NLL at mu = n (Poisson) or 0 (Gaussian).
  double analytic_minimum() const { return minimum_; }
  Eigen::VectorXd model_counts(const Eigen::VectorXd& x) const;
  const Eigen::VectorXd& data() const { return counts_; }
  const TraceModel& model() const { return *model_; }

 private:
  void init(const TraceSet& traces);
  const kernels::RowMatrix& knot(long k) const;
  /// Design at offset t0, cubic in t0 between knots; `dd` receives its t0 derivative.
  void design_at(double t0, kernels::RowMatrix& d, kernels::RowMatrix* dd) const;
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* g) const;

  PhysParams params_;
  NuisanceConfig nuisance_;
  std::shared_ptr<const TraceModel> model_;
  mutable std::map<long, std::shared_ptr<const kernels::RowMatrix>> knots_;
  double jitter_ = 0.0;
  LikelihoodKind kind_ = LikelihoodKind::Poisson;
  Eigen::VectorXd counts_;
  Eigen::VectorXd weights_;
  double background_ = 0.0;
  double scale_ = 1.0;
  double minimum_ = 0.0;
  int n_bins_ = 0;
};

double negative_log_likelihood(const TParams& t, const TraceSet& traces, const PhysParams& params);
double negative_log_likelihood(const TParams& t, const TraceSet& traces, const PhysParams& params,
                               const TraceModel& model);

enum class SeedKind { Neutral, DataDriven, Random };
const char* seed_kind_name(SeedKind k);

struct SeedReport {
  int seed_id = 0;
  SeedKind kind = SeedKind::Random;
  double nll = 0.0;
  long n_evaluations = 0;
  bool converged = false;
  std::optional<double> fidelity_to_target;
  Matrix4c rho = Matrix4c::Zero();
  std::vector<double> nll_trace;
};

struct EntryEnvelope {
  Matrix4c min = Matrix4c::Zero();  // elementwise over real and imaginary parts
  Matrix4c max = Matrix4c::Zero();
};

struct TomoResult {
  DensityMatrix4 rho_hat = DensityMatrix4::maximally_mixed();
  double nll = 0.0;
  long n_evaluations = 0;
  bool converged = false;
  int seed_id = 0;
  std::optional<double> fidelity_to_target;
  std::vector<SeedReport> seeds;
  EntryEnvelope envelope;
  std::optional<double> fidelity_seed_spread;
  std::optional<double> fidelity_bootstrap_std;
  std::array<double, 3> pair_amplitudes{1.0, 1.0, 1.0};
  double t0_ps = 0.0;
};

struct FitOptions {
  int n_seeds = 4;
  std::uint64_t seed = 1;
  OptimizerConfig optimizer;
  NuisanceConfig nuisance;
  int n_bootstrap = 0;
};

/// Throws NumericalError when no seed converges.
TomoResult fit_mle(const TraceSet& traces, const PhysParams& params, const FitOptions& options,
                   const std::optional<Vector4c>& target = std::nullopt);
TomoResult fit_mle(const TraceSet& traces, const PhysParams& params, int n_seeds,
                   const std::optional<Vector4c>& target = std::nullopt);

/// Least-squares estimate of rho from the identifiable subspace, clipped to PSD and unit trace.
DensityMatrix4 linear_inversion(const TraceSet& traces, const PhysParams& params, const TraceModel& model);

/// <phi|rho|phi>. Throws for an unnormalized target; `flagged` set when clipping exceeded 1e-9.
double fidelity(const DensityMatrix4& rho, const Vector4c& target, bool* flagged = nullptr);
/// (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double uhlmann_fidelity(const DensityMatrix4& rho, const DensityMatrix4& sigma);

/// Conjugation by diag(e^{-i a/2}, e^{i a/2}) on polarization, identity on frequency.
DensityMatrix4 rotate_frame(const DensityMatrix4& rho, double angle);

/// Root-mean-square Pearson residual per basis for a fitted state.
std::array<double, 6> per_basis_residuals(const TraceSet& traces, const PhysParams& params, const Matrix4c& rho);

nlohmann::json matrix_to_json(const Matrix4c& m);
Matrix4c matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TomoResult& r);

}  // namespace hyperqubit
