#pragma once

#include "hyperqubit/core.hpp"
#include "hyperqubit/params.hpp"

namespace hyperqubit {

/// Index of |pol, omega_freq> in the ordered basis (H wH, H wV, V wH, V wV).
inline int mode_index(Pol pol, Pol freq) { return 2 * (pol == Pol::V) + (freq == Pol::V); }

/// Validated 4x4 density matrix over (|H,wH>, |H,wV>, |V,wH>, |V,wV>).
class DensityMatrix4 {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kEigenFloor = -1e-9;

  /// Throws std::invalid_argument if the invariants do not hold.
  explicit DensityMatrix4(const Matrix4c& rho);

  static DensityMatrix4 from_pure(const Vector4c& psi);
  static DensityMatrix4 maximally_mixed();

  const Matrix4c& matrix() const { return rho_; }
  Complex operator()(int i, int j) const { return rho_(i, j); }
  double purity() const { return (rho_ * rho_).trace().real(); }

 private:
  Matrix4c rho_;
};

/// (|H,wH> + |V,wV>)/sqrt(2).
Vector4c phi_plus();

/// cos(theta)|H,wH> + sin(theta) e^{i phi}|V,wV>.
Vector4c pure_photon_state(double theta, double phi);

/// Hermitian, finite, nonnegative spectrum within tolerance; trace is not checked.
bool is_hermitian_psd(const Matrix4c& m, double herm_tol = 1e-10, double eig_floor = -1e-9);

}  // namespace hyperqubit
