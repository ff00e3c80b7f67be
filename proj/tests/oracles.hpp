#pragma once

#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hyperqubit/exciton.hpp"
#include "hyperqubit/params.hpp"

namespace oracle {

using namespace hyperqubit;

inline Matrix3c ket_bra(int a, int b) {
  Matrix3c m = Matrix3c::Zero();
  m(a, b) = 1.0;
  return m;
}

inline Matrix3c lindblad_term(const Matrix3c& a, const Matrix3c& rho) {
  const Matrix3c ada = a.adjoint() * a;
  return a * rho * a.adjoint() - 0.5 * (ada * rho + rho * ada);
}

/// Right-hand side of the master equation in operator form.
inline Matrix3c master_rhs(const Rates& r, const Matrix3c& rho) {
  Matrix3c h = Matrix3c::Zero();
  h(1, 1) = 0.5 * r.delta_omega;
  h(2, 2) = -0.5 * r.delta_omega;
  Matrix3c z = Matrix3c::Zero();
  z(1, 1) = -1.0;
  z(2, 2) = 1.0;
  Matrix3c out = -kI * (h * rho - rho * h);
  out += r.gamma * (lindblad_term(ket_bra(0, 1), rho) + lindblad_term(ket_bra(0, 2), rho));
  out += r.gamma_hv * (lindblad_term(ket_bra(1, 2), rho) + lindblad_term(ket_bra(2, 1), rho));
  out += 2.0 * r.gamma_star * lindblad_term(ket_bra(0, 0), rho);
  out += 0.5 * r.gamma_star_hv * lindblad_term(z, rho);
  return out;
}

inline Matrix3c rk4(const Rates& r, Matrix3c rho, double t, int steps = 4000) {
  if (t <= 0.0) return rho;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Matrix3c k1 = master_rhs(r, rho);
    const Matrix3c k2 = master_rhs(r, rho + 0.5 * h * k1);
    const Matrix3c k3 = master_rhs(r, rho + 0.5 * h * k2);
    const Matrix3c k4 = master_rhs(r, rho + h * k3);
    rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

/// xi_kl(t, t+s), s >= 0, from the quantum regression theorem on the numerical propagator.
inline Complex regression_xi(Pol k, Pol l, double t, double s, const PumpConfig& pump, const PhysParams& p) {
  const Propagator prop(p);
  const Matrix3c rho_t = prop.apply(initial_state(pump).rho3, t);
  const Matrix3c sk = ket_bra(level::g, level::excited(k));
  const Matrix3c evolved = prop.apply(sk * rho_t, s);
  const auto q = emission_probabilities(pump, p);
  const double norm = p.gamma() * std::sqrt(p.eta(k) * p.eta(l) / (q.of(k) * q.of(l))) / pump.p_qd;
  return norm * evolved(level::g, level::excited(l));
}

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline PhysParams random_physics(std::mt19937_64& rng) {
  PhysParams p;
  p.tau_ps = uniform(rng, 60.0, 400.0);
  p.fss_uev = uniform(rng, 0.0, 40.0);
  const double g = p.gamma();
  p.gamma_hv = uniform(rng, 0.0, 0.3) * g;
  p.gamma_star = uniform(rng, 0.0, 0.3) * g;
  p.gamma_star_hv = uniform(rng, 0.0, 0.3) * g;
  p.eta_h = uniform(rng, 0.5, 1.0);
  p.eta_v = uniform(rng, 0.5, 1.0);
  return p;
}

inline PumpConfig random_pump(std::mt19937_64& rng) {
  PumpConfig q;
  q.theta = uniform(rng, 0.1, kPi / 2.0 - 0.1);
  q.phi = uniform(rng, -kPi, kPi);
  q.p_qd = uniform(rng, 0.3, 1.0);
  q.lambda = uniform(rng, 0.5, 1.0);
  return q;
}

/// Integral of f over [0, inf).
template <class F>
double half_line(F f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

template <class F>
double segment(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 8, 1e-12);
}

/// Integral of f(t1, t2) over the positive quadrant, split along the diagonal.
template <class F>
double quadrant(F f) {
  return half_line([&](double t1) {
    const double lower = t1 > 0.0 ? segment([&](double t2) { return f(t1, t2); }, 0.0, t1) : 0.0;
    const double upper = half_line([&](double u) { return f(t1, t1 + u); });
    return lower + upper;
  });
}

/// Integral of f(t, t + s) over t, s >= 0 with t + s <= L.
template <class F>
double upper_triangle(F f, double length, double tol = 1e-10) {
  auto seg = [tol](auto g, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(g, a, b, 12, tol);
  };
  return seg([&](double t) { return seg([&](double s) { return f(t, t + s); }, 0.0, length - t); }, 0.0, length);
}

/// Integral of f(t1, t2) over [0, L]^2, split along the diagonal.
template <class F>
double square(F f, double length, double tol = 1e-10) {
  return upper_triangle([&](double t, double u) { return f(t, u) + f(u, t); }, length, tol);
}

}  // namespace oracle
