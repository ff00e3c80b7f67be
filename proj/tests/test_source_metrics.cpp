#include <doctest.h>

#include <random>

#include "hyperqubit/exciton.hpp"
#include "hyperqubit/source_metrics.hpp"
#include "oracles.hpp"

using namespace hyperqubit;

namespace {

double xi_abs2(Pol k, Pol l, double t1, double t2, const PumpConfig& pump, const PhysParams& p) {
  return std::norm(joint_amplitude(k, l, t1, t2 - t1, pump, p));
}

PhysParams ideal_physics() {
  PhysParams p = paper_default_physics();
  p.gamma_hv = p.gamma_star = p.gamma_star_hv = 0.0;
  p.eta_h = p.eta_v = 1.0;
  return p;
}

}  // namespace

TEST_SUITE("source_metrics") {

TEST_CASE("overlap components match the double integral of |xi_kl|^2") {
  std::mt19937_64 rng(51);
  for (int draw = 0; draw < 4; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    const auto m = mean_overlap_components(pump, p);
    auto integral = [&](Pol k, Pol l) {
      return oracle::square([&](double t1, double t2) { return xi_abs2(k, l, t1, t2, pump, p); }, 20.0 * p.tau_ps);
    };
    CHECK(m.m_hh == doctest::Approx(integral(Pol::H, Pol::H)).epsilon(1e-6));
    CHECK(m.m_vv == doctest::Approx(integral(Pol::V, Pol::V)).epsilon(1e-6));
    CHECK(m.m_hv == doctest::Approx(integral(Pol::H, Pol::V)).epsilon(1e-6));
    CHECK(m.m_hv == doctest::Approx(integral(Pol::V, Pol::H)).epsilon(1e-6));
  }
}

TEST_CASE("spectral overlap matches the double integral of xi_H xi_V*") {
  std::mt19937_64 rng(52);
  for (int draw = 0; draw < 4; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    auto cross = [&](double t1, double t2) {
      return joint_amplitude(Pol::H, Pol::H, t1, t2 - t1, pump, p) *
             std::conj(joint_amplitude(Pol::V, Pol::V, t1, t2 - t1, pump, p));
    };
    const double length = 20.0 * p.tau_ps;
    const double full = oracle::square([&](double a, double b) { return cross(a, b).real(); }, length);
    auto half = [&](auto part) {
      return oracle::upper_triangle([&](double t, double u) { return part(cross(t, u)); }, length);
    };
    const auto s = spectral_mode_overlap(pump, p);
    CHECK(s.m_omega == doctest::Approx(full).epsilon(1e-6));
    CHECK(s.amplitude.real() == doctest::Approx(2.0 * half([](Complex z) { return z.real(); })).epsilon(1e-6));
    CHECK(s.amplitude.imag() == doctest::Approx(2.0 * half([](Complex z) { return z.imag(); })).epsilon(1e-6));
    CHECK(s.squared_magnitude == doctest::Approx(std::norm(s.amplitude)));
  }
}

TEST_CASE("ideal source limits") {
  const PhysParams p = ideal_physics();
  PumpConfig pump;
  pump.theta = 0.0;
  const auto m0 = mean_overlap_components(pump, p);
  CHECK(m0.m_hh == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m0.m_hv == 0.0);
  CHECK(m0.m_vv == 0.0);
  pump.theta = kPi / 4.0;
  CHECK(mean_overlap_unfiltered(pump, p) == doctest::Approx(1.0).epsilon(1e-12));
  const auto s = spectral_mode_overlap(pump, p);
  CHECK(s.m_omega == doctest::Approx(std::norm(pulse_mode_overlap(p))).epsilon(1e-12));
  CHECK(std::sqrt(s.squared_magnitude) == doctest::Approx(std::abs(pulse_mode_overlap(p))).epsilon(1e-12));
  pump.theta = 0.0;
  CHECK_THROWS_AS(spectral_mode_overlap(pump, p), std::invalid_argument);
}

TEST_CASE("spectral overlap at the default splitting") {
  PumpConfig pump;
  pump.theta = kPi / 4.0;
  const auto s = spectral_mode_overlap(pump, ideal_physics());
  CHECK(s.squared_magnitude == doctest::Approx(0.312).epsilon(0.001 / 0.312));
}

TEST_CASE("unfiltered overlap does not depend on the fine structure splitting") {
  std::mt19937_64 rng(53);
  for (int draw = 0; draw < 20; ++draw) {
    auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    p.fss_uev = 0.0;
    const double ref = mean_overlap_unfiltered(pump, p);
    for (double fss : {1.0, 7.35, 50.0, 200.0}) {
      p.fss_uev = fss;
      CHECK(std::abs(mean_overlap_unfiltered(pump, p) - ref) < 1e-12);
    }
  }
}

TEST_CASE("overlaps stay in [0, 1] and the scan is dipole-swap symmetric") {
  std::mt19937_64 rng(54);
  for (int draw = 0; draw < 200; ++draw) {
    const auto p = oracle::random_physics(rng);
    const auto pump = oracle::random_pump(rng);
    const auto m = mean_overlap_components(pump, p);
    for (double v : {m.m_hh, m.m_hv, m.m_vv, mean_overlap_unfiltered(pump, p)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
  auto p = oracle::random_physics(rng);
  p.eta_v = p.eta_h;
  PumpConfig base;
  base.lambda = 0.93;
  const auto thetas = theta_grid(31);
  const auto scan = homscan(thetas, base, p);
  for (size_t i = 0; i < scan.size(); ++i) {
    const auto& mirror = scan[scan.size() - 1 - i];
    CHECK(scan[i].m_unfiltered == doctest::Approx(mirror.m_unfiltered).epsilon(1e-12));
    if (i > 0 && i + 1 < scan.size()) CHECK(scan[i].m_hh == doctest::Approx(mirror.m_vv).epsilon(1e-12));
  }
}

TEST_CASE("homscan threads agree with the serial reference") {
  const auto cal = hom_calibration();
  const auto thetas = theta_grid(91);
  const auto a = homscan(thetas, cal.pump, cal.params);
  const auto b = homscan_serial(thetas, cal.pump, cal.params);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].theta == b[i].theta);
    CHECK(a[i].m_unfiltered == b[i].m_unfiltered);
    CHECK(a[i].m_hh == b[i].m_hh);
    CHECK(a[i].m_hv == b[i].m_hv);
    CHECK(a[i].m_vv == b[i].m_vv);
  }
  CHECK(thetas.front() == 0.0);
  CHECK(thetas.back() == doctest::Approx(kPi / 2.0));
  CHECK(theta_grid(1) == std::vector<double>{kPi / 4.0});
  CHECK_THROWS_AS(theta_grid(0), std::invalid_argument);
  PumpConfig bad;
  CHECK_THROWS_AS(homscan({2.0}, bad, cal.params), std::invalid_argument);
}

TEST_CASE("single-point scan of an ideal source") {
  PumpConfig base;
  const auto scan = homscan(theta_grid(1), base, ideal_physics());
  REQUIRE(scan.size() == 1);
  CHECK(scan[0].m_unfiltered == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("overlap calibration") {
  const auto cal = hom_calibration();
  CHECK(mean_overlap_unfiltered(cal.pump, cal.params) == doctest::Approx(0.922).epsilon(1e-9));
  CHECK(cal.params.gamma_hv == doctest::Approx(1.0 / 24000.0));
  CHECK(cal.params.eta_v == doctest::Approx(0.88 * cal.params.eta_h));
  CHECK(cal.pump.lambda == 0.949);
  CHECK(cal.params.gamma_star > 0.0);
  CHECK(gamma_hv_from_mixing_timescale(12000.0, MixingConvention::FullRate) == doctest::Approx(1.0 / 12000.0));
  CHECK_THROWS_AS(gamma_hv_from_mixing_timescale(0.0, MixingConvention::HalfRate), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_gamma_star(cal.params, cal.pump, 1.5), std::invalid_argument);
}

TEST_CASE("first-lens brightness") {
  BrightnessInputs in{4.7, 82.0, 0.32, 0.78, 0.80};
  auto b = first_lens_brightness(in);
  CHECK(b.b_fl == doctest::Approx(0.287).epsilon(0.02 / 0.287));
  CHECK(b.b_fib == doctest::Approx(0.092).epsilon(0.01 / 0.092));
  CHECK(b.b_fl == doctest::Approx(4.7 / (82.0 * 0.32 * 0.78 * 0.80)));
  in.r_det_mhz = 3.4;
  CHECK(first_lens_brightness(in).b_fl == doctest::Approx(0.208).epsilon(0.02 / 0.208));
  in.r_det_mhz = 82.0 * 0.32 * 0.78 * 0.80;
  CHECK(first_lens_brightness(in).b_fl == doctest::Approx(1.0));
  in.t_tom = 0.0;
  CHECK_THROWS_AS(first_lens_brightness(in), std::invalid_argument);
  in = {90.0, 82.0, 0.32, 0.78, 0.80};
  CHECK_THROWS_WITH_AS(first_lens_brightness(in), doctest::Contains("r_det"), std::invalid_argument);
}

TEST_CASE("transmission chains") {
  const auto s1 = transmission_chain(setup_transmission_table());
  CHECK(s1.total == doctest::Approx(0.32).epsilon(0.005 / 0.32));
  REQUIRE(s1.uncertainty);
  CHECK(*s1.uncertainty == doctest::Approx(0.02).epsilon(0.5));
  const auto s2 = transmission_chain(tomography_transmission_table());
  CHECK(s2.total == doctest::Approx(0.78).epsilon(0.005 / 0.78));
  CHECK(transmission_chain({{"x", 0.37, std::nullopt}}).total == 0.37);
  CHECK_FALSE(transmission_chain({{"x", 0.37, std::nullopt}}).uncertainty);
  CHECK_THROWS_AS(transmission_chain({}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(transmission_chain({{"lens", 1.2, std::nullopt}}), doctest::Contains("lens"), std::invalid_argument);
}

}
