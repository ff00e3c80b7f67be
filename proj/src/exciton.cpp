#include "hyperqubit/exciton.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace hyperqubit {
namespace {

Matrix3c ket_bra(int a, int b) {
  Matrix3c m = Matrix3c::Zero();
  m(a, b) = 1.0;
  return m;
}

Matrix9c kron(const Matrix3c& a, const Matrix3c& b) {
  Matrix9c out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return out;
}

Matrix9c dissipator(const Matrix3c& a) {
  const Matrix3c id = Matrix3c::Identity();
  const Matrix3c ada = a.adjoint() * a;
  return kron(a.conjugate(), a) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id);
}

}  // namespace

ExcitonState ExcitonState::checked(const Matrix3c& rho) {
  if (!rho.allFinite()) throw std::invalid_argument("ExcitonState: non-finite entries");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("ExcitonState: not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-12) throw std::invalid_argument("ExcitonState: trace != 1");
  Eigen::SelfAdjointEigenSolver<Matrix3c> es(rho);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("ExcitonState: negative eigenvalue");
  return ExcitonState{rho};
}

ExcitonState initial_state(const PumpConfig& pump) {
  pump.validate();
  const double c = std::cos(pump.theta);
  const double s = std::sin(pump.theta);
  Matrix3c rho = Matrix3c::Zero();
  rho(level::g, level::g) = 1.0 - pump.p_qd;
  rho(level::eH, level::eH) = pump.p_qd * c * c;
  rho(level::eV, level::eV) = pump.p_qd * s * s;
  const Complex coh = pump.p_qd * pump.lambda * c * s * std::exp(kI * pump.phi);
  rho(level::eV, level::eH) = coh;
  rho(level::eH, level::eV) = std::conj(coh);
  return ExcitonState{rho};
}

Matrix9c liouvillian(const Rates& r) {
  Matrix3c h = Matrix3c::Zero();
  h(level::eH, level::eH) = 0.5 * r.delta_omega;
  h(level::eV, level::eV) = -0.5 * r.delta_omega;
  const Matrix3c id = Matrix3c::Identity();
  Matrix9c l = -kI * (kron(id, h) - kron(h.transpose(), id));
  l += r.gamma * dissipator(ket_bra(level::g, level::eH));
  l += r.gamma * dissipator(ket_bra(level::g, level::eV));
  l += r.gamma_hv * dissipator(ket_bra(level::eH, level::eV));
  l += r.gamma_hv * dissipator(ket_bra(level::eV, level::eH));
  l += 2.0 * r.gamma_star * dissipator(ket_bra(level::g, level::g));
  Matrix3c z = Matrix3c::Zero();
  z(level::eH, level::eH) = -1.0;
  z(level::eV, level::eV) = 1.0;
  l += 0.5 * r.gamma_star_hv * dissipator(z);
  return l;
}

Vector9c vectorize(const Matrix3c& rho) { return Eigen::Map<const Vector9c>(rho.data()); }

Matrix3c unvectorize(const Vector9c& v) { return Eigen::Map<const Matrix3c>(v.data()); }

Propagator::Propagator(const Rates& rates) : generator_(liouvillian(rates)) {
  if (!generator_.allFinite()) throw std::invalid_argument("Propagator: non-finite rates");
}

Matrix9c Propagator::superoperator(double t) const {
  if (!(t >= 0.0)) throw std::invalid_argument("Propagator: t must be >= 0");
  if (t == 0.0) return Matrix9c::Identity();
  Matrix9c out = (t * generator_).exp();
  if (!out.allFinite()) throw NumericalError("matrix exponential of the Liouvillian is not finite");
  return out;
}

Matrix3c Propagator::apply(const Matrix3c& rho, double t) const {
  return unvectorize(superoperator(t) * vectorize(rho));
}

ExcitonState liouvillian_propagate(const ExcitonState& state, double t, const Rates& rates) {
  return ExcitonState{Propagator(rates).apply(state.rho3, t)};
}

ExcitonState liouvillian_propagate(const ExcitonState& state, double t, const PhysParams& params) {
  params.validate();
  return liouvillian_propagate(state, t, params.rates());
}

std::pair<Complex, Complex> pure_state_amplitudes(const PumpConfig& pump, const PhysParams& params,
                                                  double t) {
  pump.validate();
  if (!pump.is_pure())
    throw std::invalid_argument("pure_state_amplitudes: requires p_qd = 1 and lambda = 1");
  if (!(t >= 0.0)) throw std::invalid_argument("pure_state_amplitudes: t must be >= 0");
  const double dw = params.delta_omega();
  const double decay = std::exp(-0.5 * t / params.tau_ps);
  const Complex a_h = std::cos(pump.theta) * std::exp(-kI * (0.5 * dw * t)) * decay;
  const Complex a_v = std::sin(pump.theta) * std::exp(-kI * (-0.5 * dw * t - pump.phi)) * decay;
  return {a_h, a_v};
}

EmissionProbabilities emission_probabilities(const PumpConfig& pump, const PhysParams& params) {
  pump.validate();
  params.validate();
  const double g = params.gamma();
  const double bias = g / (g + 2.0 * params.gamma_hv) * std::cos(2.0 * pump.theta);
  return {0.5 * params.eta_h * (1.0 + bias), 0.5 * params.eta_v * (1.0 - bias)};
}

namespace {

Complex xi_forward(Pol k, Pol l, double t, double s, const PumpConfig& pump, const PhysParams& p) {
  const auto q = emission_probabilities(pump, p);
  const double g = p.gamma();
  const double dw = p.delta_omega();
  const double gs = p.gamma_s();
  const double c2 = std::cos(2.0 * pump.theta);
  if (k == l) {
    const double qk = q.of(k);
    if (qk <= 0.0) return 0.0;
    const double sign = k == Pol::H ? 1.0 : -1.0;
    const double pop = 1.0 + sign * c2 * std::exp(-2.0 * p.gamma_hv * t);
    return g * p.eta(k) / (2.0 * qk) * pop * std::exp(-g * t - 0.5 * gs * s) *
           std::exp(kI * (sign * 0.5 * dw * s));
  }
  if (q.p_h <= 0.0 || q.p_v <= 0.0) return 0.0;
  const double cs = std::cos(pump.theta) * std::sin(pump.theta);
  const Complex hv = g * std::sqrt(p.eta_h * p.eta_v / (q.p_h * q.p_v)) * pump.lambda * cs *
                     std::exp(-(g + p.gamma_p()) * t - 0.5 * gs * s) *
                     std::exp(-kI * (dw * (0.5 * s + t) + pump.phi));
  return k == Pol::H ? hv : std::conj(hv);
}

}  // namespace

Complex joint_amplitude(Pol k, Pol l, double t, double s, const PumpConfig& pump,
                        const PhysParams& params) {
  if (t < 0.0 || t + s < 0.0) return 0.0;
  if (s >= 0.0) return xi_forward(k, l, t, s, pump, params);
  return std::conj(xi_forward(l, k, t + s, -s, pump, params));
}

Complex pulse_mode_overlap(const PhysParams& params) {
  params.validate();
  return 1.0 / (1.0 - kI * params.delta_omega() * params.tau_ps);
}

}  // namespace hyperqubit
