#pragma once

#include <utility>

#include "hyperqubit/core.hpp"
#include "hyperqubit/params.hpp"

namespace hyperqubit {

using Matrix9c = Eigen::Matrix<Complex, 9, 9>;
using Vector9c = Eigen::Matrix<Complex, 9, 1>;

/// Three-level exciton state over {|g>, |e_H>, |e_V>}.
struct ExcitonState {
  Matrix3c rho3 = Matrix3c::Zero();

  /// Builds a state and checks Hermiticity, unit trace and positivity; throws std::invalid_argument.
  static ExcitonState checked(const Matrix3c& rho);
  double purity() const { return (rho3 * rho3).trace().real(); }
};

namespace level {
inline constexpr int g = 0;
inline constexpr int eH = 1;
inline constexpr int eV = 2;
inline int excited(Pol p) { return p == Pol::H ? eH : eV; }
}  // namespace level

ExcitonState initial_state(const PumpConfig& pump);

/// 9x9 generator acting on column-stacked vec(rho).
Matrix9c liouvillian(const Rates& rates);

Vector9c vectorize(const Matrix3c& rho);
Matrix3c unvectorize(const Vector9c& v);

/// exp(tL) for a fixed generator; safe to share between threads.
class Propagator {
 public:
  explicit Propagator(const Rates& rates);
  explicit Propagator(const PhysParams& params) : Propagator(params.rates()) {}

  /// Throws NumericalError when the exponential is not finite. t must be >= 0.
  Matrix9c superoperator(double t) const;
  Matrix3c apply(const Matrix3c& rho, double t) const;
  const Matrix9c& generator() const { return generator_; }

 private:
  Matrix9c generator_;
};

ExcitonState liouvillian_propagate(const ExcitonState& state, double t, const PhysParams& params);
ExcitonState liouvillian_propagate(const ExcitonState& state, double t, const Rates& rates);

/// Unnormalized (e_H, e_V) amplitudes of the pure trajectory. Throws for mixed preparations.
std::pair<Complex, Complex> pure_state_amplitudes(const PumpConfig& pump, const PhysParams& params,
                                                  double t);

struct EmissionProbabilities {
  double p_h = 0.0;
  double p_v = 0.0;
  double total() const { return p_h + p_v; }
  double of(Pol p) const { return p == Pol::H ? p_h : p_v; }
};

/// Probabilities of an H or V photon given that the dot was excited; multiply by p_qd for the
/// per-pulse value.
EmissionProbabilities emission_probabilities(const PumpConfig& pump, const PhysParams& params);

/// xi_kl(t, t+s). Negative s is handled by xi_kl(t, t+s) = xi_lk(t+s, -s)*; zero for t < 0 or t+s < 0
/// and for modes with zero emission probability.
Complex joint_amplitude(Pol k, Pol l, double t, double s, const PumpConfig& pump,
                        const PhysParams& params);

/// c1 = <omega_H|omega_V> = 1/(1 - i dw tau).
Complex pulse_mode_overlap(const PhysParams& params);

}  // namespace hyperqubit
