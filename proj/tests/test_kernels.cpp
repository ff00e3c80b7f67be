#include <doctest.h>

#include <cmath>
#include <random>

#include "hyperqubit/kernels.hpp"
#include "hyperqubit/optimizer.hpp"

using namespace hyperqubit;
namespace k = hyperqubit::kernels;

TEST_SUITE("kernels") {

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int rows = 3600, cols = 16;
  k::RowMatrix a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = u(rng) - 0.3;
  Eigen::VectorXd x(cols), n(rows), w(rows);
  for (int j = 0; j < cols; ++j) x(j) = u(rng);
  for (int i = 0; i < rows; ++i) {
    n(i) = std::floor(50.0 * u(rng));
    w(i) = 1.0 / std::max(n(i), 1.0);
  }
  Eigen::VectorXd mu_s, mu_o;
  k::serial::design_gemv(a, x, 100.0, 0.5, mu_s);
  k::omp::design_gemv(a, x, 100.0, 0.5, mu_o);
  CHECK(mu_s == mu_o);
  mu_s(0) = -1.0;
  mu_o(0) = -1.0;
  CHECK(k::serial::poisson_nll(mu_s, n) == k::omp::poisson_nll(mu_o, n));
  CHECK(k::serial::gaussian_nll(mu_s, n, w) == k::omp::gaussian_nll(mu_o, n, w));
  Eigen::VectorXd g_s, g_o;
  k::serial::nll_gradient(a, mu_s, n, nullptr, 100.0, g_s);
  k::omp::nll_gradient(a, mu_o, n, nullptr, 100.0, g_o);
  CHECK(g_s == g_o);
  k::serial::nll_gradient(a, mu_s, n, &w, 100.0, g_s);
  k::omp::nll_gradient(a, mu_o, n, &w, 100.0, g_o);
  CHECK(g_s == g_o);

  std::vector<double> in(1000), taps{0.1, 0.2, 0.4, 0.2, 0.1}, c_s, c_o;
  for (double& v : in) v = u(rng);
  k::serial::convolve(in, taps, c_s);
  k::omp::convolve(in, taps, c_o);
  CHECK(c_s == c_o);
  CHECK_THROWS_AS(k::serial::convolve(in, {0.5, 0.5}, c_s), std::invalid_argument);

  auto f = [](double t) { return std::exp(-t / 100.0) * (1.0 + std::cos(0.01 * t)); };
  std::vector<double> b_s(500), b_o(500);
  k::serial::bin_integrate(f, -10.0, 2.0, 0.0, b_s);
  k::omp::bin_integrate(f, -10.0, 2.0, 0.0, b_o);
  CHECK(b_s == b_o);
}

TEST_CASE("bin integration is exact for quintic polynomials and respects the kink") {
  auto f = [](double t) { return 1.0 + t - 2.0 * t * t * t + 0.5 * std::pow(t, 5); };
  auto F = [](double t) { return t + 0.5 * t * t - 0.5 * std::pow(t, 4) + std::pow(t, 6) / 12.0; };
  std::vector<double> out(4);
  k::serial::bin_integrate(f, -1.0, 0.5, -1e9, out);
  for (int j = 0; j < 4; ++j) {
    const double a = -1.0 + 0.5 * j;
    CHECK(out[static_cast<size_t>(j)] == doctest::Approx(F(a + 0.5) - F(a)).epsilon(1e-13));
  }
  k::serial::bin_integrate(f, -1.0, 0.5, 0.2, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == doctest::Approx(F(0.5) - F(0.2)).epsilon(1e-13));
}

TEST_CASE("Poisson NLL floors the mean and ignores empty bins") {
  Eigen::VectorXd mu(3), n(3);
  mu << 0.0, 2.0, 5.0;
  n << 0.0, 1.0, 3.0;
  CHECK(k::serial::poisson_nll(mu, n) == doctest::Approx(k::kMuFloor + 2.0 - std::log(2.0) + 5.0 - 3.0 * std::log(5.0)));
}

}

TEST_SUITE("optimizer") {

TEST_CASE("Rosenbrock converges with and without a gradient") {
  const Objective f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  const ObjectiveWithGradient fdf = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g(0) = -400.0 * x(0) * (x(1) - x(0) * x(0)) - 2.0 * (1.0 - x(0));
    g(1) = 200.0 * (x(1) - x(0) * x(0));
    return f(x);
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  for (const ObjectiveWithGradient* g : {&fdf, static_cast<const ObjectiveWithGradient*>(nullptr)}) {
    const auto r = minimize(f, g, x0);
    CHECK(r.converged);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-5));
    for (size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
    CHECK(r.f == doctest::Approx(r.trace.back()));
  }
}

TEST_CASE("simplex-only mode minimizes a shifted quadratic") {
  const Objective f = [](const Eigen::VectorXd& x) { return (x.array() - 2.0).square().sum() + 3.0; };
  OptimizerConfig c;
  c.quasi_newton = false;
  const auto r = minimize(f, nullptr, Eigen::VectorXd::Zero(5), c);
  CHECK(r.f == doctest::Approx(3.0).epsilon(1e-9));
  CHECK((r.x.array() - 2.0).abs().maxCoeff() < 1e-3);
  CHECK(r.n_evaluations > 0);
}

}
