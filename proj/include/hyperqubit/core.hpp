#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hyperqubit {

using Complex = std::complex<double>;
using Vector2c = Eigen::Vector2cd;
using Matrix2c = Eigen::Matrix2cd;
using Matrix3c = Eigen::Matrix3cd;
using Vector4c = Eigen::Vector4cd;
using Matrix4c = Eigen::Matrix4cd;

/// Reduced Planck constant in the toolkit's unit system (energies in µeV, times in ps).
inline constexpr double kHbarUeVps = 658.2119569;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Polarization of an emitter dipole (and of the matching field mode).
enum class Pol { H, V };

/// A computation that failed numerically (non-finite propagator, optimizer that never converged, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperqubit
