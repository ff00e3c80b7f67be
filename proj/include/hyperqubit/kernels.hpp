#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

// Hot loops of the trace model and likelihood. Each kernel exists as a serial reference and an
// OpenMP version with identical semantics; tests and the benchmark compare the two.
namespace hyperqubit::kernels {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Floor applied to model counts before taking logarithms.
inline constexpr double kMuFloor = 1e-12;

namespace serial {

/// out[j] = integral of f over [t_first + j w, t_first + (j+1) w], with f taken as 0 below `kink`.
/// Three-point Gauss-Legendre per bin, split at the kink.
void bin_integrate(const std::function<double(double)>& f, double t_first, double width, double kink,
                   std::vector<double>& out);

/// Centered discrete convolution; taps.size() must be odd. Out-of-range input counts as 0.
void convolve(const std::vector<double>& in, const std::vector<double>& taps, std::vector<double>& out);

/// out = scale * A x + offset.
void design_gemv(const RowMatrix& a, const Eigen::VectorXd& x, double scale, double offset,
                 Eigen::VectorXd& out);

/// sum(mu - n log mu) with mu floored.
double poisson_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n);

/// 0.5 sum w (n - mu)^2.
double gaussian_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd& w);

/// g = scale * A^T dL/dmu for the Poisson (w empty) or Gaussian likelihood.
void nll_gradient(const RowMatrix& a, const Eigen::VectorXd& mu, const Eigen::VectorXd& n,
                  const Eigen::VectorXd* w, double scale, Eigen::VectorXd& g);

}  // namespace serial

namespace omp {

void bin_integrate(const std::function<double(double)>& f, double t_first, double width, double kink,
                   std::vector<double>& out);
void convolve(const std::vector<double>& in, const std::vector<double>& taps, std::vector<double>& out);
void design_gemv(const RowMatrix& a, const Eigen::VectorXd& x, double scale, double offset,
                 Eigen::VectorXd& out);
double poisson_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n);
double gaussian_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd& w);
void nll_gradient(const RowMatrix& a, const Eigen::VectorXd& mu, const Eigen::VectorXd& n,
                  const Eigen::VectorXd* w, double scale, Eigen::VectorXd& g);

}  // namespace omp

}  // namespace hyperqubit::kernels
