#include <doctest.h>

#include <random>

#include "hyperqubit/exciton.hpp"
#include "oracles.hpp"

using namespace hyperqubit;

TEST_SUITE("exciton") {

TEST_CASE("initial state populations and coherence") {
  PumpConfig pump;
  pump.theta = 0.4;
  pump.phi = 1.1;
  pump.p_qd = 0.8;
  pump.lambda = 0.9;
  const auto s = initial_state(pump);
  CHECK(s.rho3(0, 0).real() == doctest::Approx(0.2));
  CHECK(s.rho3(1, 1).real() == doctest::Approx(0.8 * std::cos(0.4) * std::cos(0.4)));
  CHECK(s.rho3(2, 2).real() == doctest::Approx(0.8 * std::sin(0.4) * std::sin(0.4)));
  const Complex coh = 0.8 * 0.9 * std::cos(0.4) * std::sin(0.4) * std::exp(kI * 1.1);
  CHECK(std::abs(s.rho3(2, 1) - coh) < 1e-15);
  CHECK(std::abs(s.rho3(1, 2) - std::conj(coh)) < 1e-15);
  CHECK_NOTHROW(ExcitonState::checked(s.rho3));
}

TEST_CASE("propagator matches an RK4 integration of the master equation") {
  std::mt19937_64 rng(11);
  for (int draw = 0; draw < 12; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    const double t = oracle::uniform(rng, 1.0, 3.0 * p.tau_ps);
    const Matrix3c expm = Propagator(p).apply(initial_state(pump).rho3, t);
    const Matrix3c ref = oracle::rk4(p.rates(), initial_state(pump).rho3, t);
    CHECK((expm - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("propagation preserves trace, Hermiticity and positivity") {
  std::mt19937_64 rng(12);
  for (int draw = 0; draw < 50; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    const double t = oracle::uniform(rng, 0.0, 5.0 * p.tau_ps);
    const auto s = liouvillian_propagate(initial_state(pump), t, p);
    CHECK(std::abs(s.rho3.trace() - 1.0) < 1e-12);
    CHECK((s.rho3 - s.rho3.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(s.rho3);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("ground state is stationary and excitations decay") {
  const PhysParams p = paper_default_physics();
  ExcitonState g{oracle::ket_bra(0, 0)};
  CHECK((liouvillian_propagate(g, 500.0, p).rho3 - g.rho3).cwiseAbs().maxCoeff() < 1e-14);
  const auto late = liouvillian_propagate(initial_state(PumpConfig{}), 40.0 * p.tau_ps, p);
  CHECK(late.rho3(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure amplitudes agree with the propagated coherence") {
  PhysParams p = paper_default_physics();
  PumpConfig pump;
  pump.theta = 0.6;
  pump.phi = -0.7;
  const Propagator prop(p);
  for (double t : {0.0, 37.0, 281.3, 900.0}) {
    const auto [ah, av] = pure_state_amplitudes(pump, p, t);
    const Matrix3c r = prop.apply(initial_state(pump).rho3, t);
    CHECK(std::abs(r(1, 1) - std::norm(ah)) < 1e-12);
    CHECK(std::abs(r(2, 2) - std::norm(av)) < 1e-12);
    CHECK(std::abs(r(2, 1) - av * std::conj(ah)) < 1e-12);
  }
  pump.lambda = 0.9;
  CHECK_THROWS_AS(pure_state_amplitudes(pump, p, 1.0), std::invalid_argument);
}

TEST_CASE("emission probabilities equal the integrated radiative flux") {
  std::mt19937_64 rng(13);
  for (int draw = 0; draw < 6; ++draw) {
    const auto p = oracle::random_physics(rng);
    auto pump = oracle::random_pump(rng);
    const Propagator prop(p);
    const Matrix3c rho0 = initial_state(pump).rho3;
    auto flux = [&](int lvl, double eta) {
      return oracle::half_line([&](double t) { return p.gamma() * eta * prop.apply(rho0, t)(lvl, lvl).real(); });
    };
    const auto q = emission_probabilities(pump, p);
    CHECK(q.p_h * pump.p_qd == doctest::Approx(flux(1, p.eta_h)).epsilon(1e-8));
    CHECK(q.p_v * pump.p_qd == doctest::Approx(flux(2, p.eta_v)).epsilon(1e-8));
  }
}

TEST_CASE("joint amplitude matches the regression theorem") {
  std::mt19937_64 rng(14);
  for (int draw = 0; draw < 20; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    const double t = oracle::uniform(rng, 0.0, 2.0 * p.tau_ps);
    const double s = oracle::uniform(rng, 0.0, 2.0 * p.tau_ps);
    for (Pol k : {Pol::H, Pol::V})
      for (Pol l : {Pol::H, Pol::V}) {
        const Complex ref = oracle::regression_xi(k, l, t, s, pump, p);
        CHECK(std::abs(joint_amplitude(k, l, t, s, pump, p) - ref) < 1e-10 * p.gamma() * 100.0);
      }
  }
}

TEST_CASE("joint amplitude symmetry for negative delays") {
  std::mt19937_64 rng(15);
  const auto p = oracle::random_physics(rng);
  const auto pump = oracle::random_pump(rng);
  for (int i = 0; i < 20; ++i) {
    const double t = oracle::uniform(rng, 50.0, 400.0);
    const double s = -oracle::uniform(rng, 0.0, 50.0);
    for (Pol k : {Pol::H, Pol::V})
      for (Pol l : {Pol::H, Pol::V})
        CHECK(std::abs(joint_amplitude(k, l, t, s, pump, p) - std::conj(joint_amplitude(l, k, t + s, -s, pump, p))) <
              1e-15);
  }
  CHECK(joint_amplitude(Pol::H, Pol::H, -1.0, 2.0, pump, p) == Complex(0.0));
  CHECK(joint_amplitude(Pol::H, Pol::H, 1.0, -2.0, pump, p) == Complex(0.0));
}

TEST_CASE("xi_HH on the diagonal integrates to one") {
  std::mt19937_64 rng(16);
  const auto p = oracle::random_physics(rng);
  const auto pump = oracle::random_pump(rng);
  for (Pol k : {Pol::H, Pol::V}) {
    const double total = oracle::half_line([&](double t) { return joint_amplitude(k, k, t, 0.0, pump, p).real(); });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("pulse mode overlap") {
  PhysParams p = paper_default_physics();
  const Complex c1 = pulse_mode_overlap(p);
  const double x = p.delta_omega() * p.tau_ps;
  CHECK(std::norm(c1) == doctest::Approx(1.0 / (1.0 + x * x)));
  p.fss_uev = 0.0;
  CHECK(std::abs(pulse_mode_overlap(p) - 1.0) < 1e-15);
}

TEST_CASE("invalid parameters are rejected with the field name") {
  PhysParams p;
  p.tau_ps = -1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("tau_ps"), std::invalid_argument);
  PumpConfig pump;
  pump.theta = 2.0;
  CHECK_THROWS_WITH_AS(initial_state(pump), doctest::Contains("theta"), std::invalid_argument);
  CHECK_THROWS_AS(Propagator(paper_default_physics()).superoperator(-1.0), std::invalid_argument);
}

TEST_CASE("a distinct gamma_VH is rejected at parse time") {
  nlohmann::json j = {{"gamma_hv_per_ps", 1e-4}, {"gamma_vh_per_ps", 2e-4}};
  PhysParams p;
  CHECK_THROWS_WITH_AS(from_json(j, p), doctest::Contains("gamma_vh_per_ps"), std::invalid_argument);
  j["gamma_vh_per_ps"] = 1e-4;
  CHECK_NOTHROW(from_json(j, p));
  CHECK(p.gamma_hv == 1e-4);
  CHECK_THROWS_WITH_AS(from_json(nlohmann::json{{"tau", 1.0}}, p), doctest::Contains("physics.tau"), std::invalid_argument);
}

TEST_CASE("JSON round trip of parameters") {
  std::mt19937_64 rng(17);
  const auto p = oracle::random_physics(rng);
  const auto pump = oracle::random_pump(rng);
  nlohmann::json jp = p, jq = pump;
  PhysParams p2;
  PumpConfig q2;
  from_json(jp, p2);
  from_json(jq, q2);
  CHECK(p2.tau_ps == p.tau_ps);
  CHECK(p2.gamma_star_hv == p.gamma_star_hv);
  CHECK(q2.phi == pump.phi);
  CHECK(q2.lambda == pump.lambda);
}

TEST_CASE("wrap_phase lands in [-pi, pi)") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 200; ++i) {
    const double x = oracle::uniform(rng, -50.0, 50.0);
    const double w = wrap_phase(x);
    CHECK(w >= -kPi);
    CHECK(w < kPi);
    CHECK(std::abs(std::remainder(w - x, 2.0 * kPi)) < 1e-9);
  }
  CHECK(wrap_phase(kPi) == doctest::Approx(-kPi));
}

}
