#pragma once

#include <json.hpp>

#include "hyperqubit/density.hpp"
#include "hyperqubit/params.hpp"

namespace hyperqubit {

struct OverlapSpec {
  enum class Source { Model, Measured };
  Complex c1 = 0.0;
  Source source = Source::Model;

  /// c1 = sqrt(M_omega) with zero phase.
  static OverlapSpec from_m_omega(double m_omega);
  static OverlapSpec from_params(const PhysParams& params);
  double c2() const;
};

/// rho expressed in the orthonormal frequency basis (w~H, w~V). The matrix is the congruence
/// B rho B^dagger with B = I2 (x) [[1, c1], [0, c2]]; its trace is Tr(G rho) for the Gram matrix G of the
/// pulse modes, which is 1 whenever rho carries no wH/wV coherence within a polarization.
struct OrthogonalizedState {
  Matrix4c rho = Matrix4c::Zero();
  double trace = 1.0;
  DensityMatrix4 normalized() const;
};

/// Throws std::invalid_argument for |c1| >= 1.
OrthogonalizedState orthogonalize(const DensityMatrix4& rho, const OverlapSpec& overlap);
Matrix4c frequency_change_of_basis(const OverlapSpec& overlap);

/// Wootters concurrence of a Hermitian PSD matrix of positive trace, evaluated without renormalizing.
/// Throws std::invalid_argument when the input is not Hermitian PSD.
double concurrence(const Matrix4c& rho);
double concurrence(const DensityMatrix4& rho);

/// 2|ad - bc| for a normalized pure state (a, b, c, d).
double pure_state_concurrence(const Vector4c& psi);

/// sqrt(1 - |c1|^2) with c1 the pulse-mode overlap.
double concurrence_upper_bound(const PhysParams& params);

struct EntanglementReport {
  double overlap_m_omega = 0.0;
  Complex c1 = 0.0;
  double bound = 0.0;
  double concurrence = 0.0;
};

nlohmann::json to_json(const EntanglementReport& r);

}  // namespace hyperqubit
