#include "hyperqubit/density.hpp"

#include <cmath>

namespace hyperqubit {

bool is_hermitian_psd(const Matrix4c& m, double herm_tol, double eig_floor) {
  if (!m.allFinite()) return false;
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > herm_tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= eig_floor;
}

DensityMatrix4::DensityMatrix4(const Matrix4c& rho) : rho_(rho) {
  if (!rho.allFinite()) throw std::invalid_argument("DensityMatrix4: non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
    throw std::invalid_argument("DensityMatrix4: not Hermitian");
  if (std::abs(rho.trace() - 1.0) > kTraceTol)
    throw std::invalid_argument("DensityMatrix4: trace differs from 1");
  if (!is_hermitian_psd(rho, kHermitianTol, kEigenFloor))
    throw std::invalid_argument("DensityMatrix4: negative eigenvalue");
}

DensityMatrix4 DensityMatrix4::from_pure(const Vector4c& psi) {
  const double n = psi.norm();
  if (!(n > 0.0)) throw std::invalid_argument("DensityMatrix4::from_pure: zero vector");
  const Vector4c u = psi / n;
  return DensityMatrix4(u * u.adjoint());
}

DensityMatrix4 DensityMatrix4::maximally_mixed() { return DensityMatrix4(Matrix4c::Identity() / 4.0); }

Vector4c phi_plus() {
  Vector4c v = Vector4c::Zero();
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return v;
}

Vector4c pure_photon_state(double theta, double phi) {
  Vector4c v = Vector4c::Zero();
  v(0) = std::cos(theta);
  v(3) = std::sin(theta) * std::exp(kI * phi);
  return v;
}

}  // namespace hyperqubit
