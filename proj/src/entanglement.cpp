#include "hyperqubit/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hyperqubit/exciton.hpp"

namespace hyperqubit {

OverlapSpec OverlapSpec::from_m_omega(double m_omega) {
  if (!(m_omega >= 0.0 && m_omega <= 1.0)) throw std::invalid_argument("overlap: M_omega must be in [0, 1]");
  return {std::sqrt(m_omega), Source::Measured};
}

OverlapSpec OverlapSpec::from_params(const PhysParams& params) { return {pulse_mode_overlap(params), Source::Model}; }

double OverlapSpec::c2() const { return std::sqrt(std::max(0.0, 1.0 - std::norm(c1))); }

Matrix4c frequency_change_of_basis(const OverlapSpec& overlap) {
  if (!(std::abs(overlap.c1) < 1.0)) throw std::invalid_argument("orthogonalize: |c1| must be < 1");
  Matrix2c b;
  b << 1.0, overlap.c1, 0.0, overlap.c2();
  Matrix4c out = Matrix4c::Zero();
  out.block<2, 2>(0, 0) = b;
  out.block<2, 2>(2, 2) = b;
  return out;
}

DensityMatrix4 OrthogonalizedState::normalized() const {
  Matrix4c m = rho / trace;
  return DensityMatrix4(0.5 * (m + m.adjoint()));
}

OrthogonalizedState orthogonalize(const DensityMatrix4& rho, const OverlapSpec& overlap) {
  const Matrix4c b = frequency_change_of_basis(overlap);
  Matrix4c out = b * rho.matrix() * b.adjoint();
  out = (0.5 * (out + out.adjoint())).eval();
  return {out, out.trace().real()};
}

double concurrence(const Matrix4c& rho) {
  if (!is_hermitian_psd(rho, 1e-10, -1e-9)) throw std::invalid_argument("concurrence: input must be Hermitian PSD");
  if (!(rho.trace().real() > 0.0)) throw std::invalid_argument("concurrence: input must have positive trace");
  Matrix4c yy = Matrix4c::Zero();
  yy(0, 3) = yy(3, 0) = -1.0;
  yy(1, 2) = yy(2, 1) = 1.0;
  // The square roots of the eigenvalues of rho (yy rho* yy) are the singular values of V^T yy V,
  // with V the eigenvectors of rho scaled by the square roots of its eigenvalues.
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho);
  const Matrix4c v = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal();
  const Matrix4c tau = v.transpose() * yy * v;
  Eigen::JacobiSVD<Matrix4c> svd(tau);
  std::array<double, 4> lam{};
  for (int i = 0; i < 4; ++i) lam[static_cast<size_t>(i)] = svd.singularValues()(i);
  std::sort(lam.begin(), lam.end(), std::greater<>());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

double concurrence(const DensityMatrix4& rho) { return concurrence(rho.matrix()); }

double pure_state_concurrence(const Vector4c& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-9) throw std::invalid_argument("pure_state_concurrence: state not normalized");
  return 2.0 * std::abs(psi(0) * psi(3) - psi(1) * psi(2));
}

double concurrence_upper_bound(const PhysParams& params) {
  return std::sqrt(std::max(0.0, 1.0 - std::norm(pulse_mode_overlap(params))));
}

nlohmann::json to_json(const EntanglementReport& r) {
  return {{"overlap_m_omega", r.overlap_m_omega},
          {"c1", {r.c1.real(), r.c1.imag()}},
          {"bound", r.bound},
          {"concurrence", r.concurrence},
          {"basis", "orthogonalized"}};
}

}  // namespace hyperqubit
