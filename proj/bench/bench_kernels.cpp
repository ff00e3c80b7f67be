#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "hyperqubit/kernels.hpp"
#include "hyperqubit/source_metrics.hpp"

using namespace hyperqubit;
using kernels::RowMatrix;

namespace {

struct Problem {
  RowMatrix a;
  Eigen::VectorXd x, mu, n;

  explicit Problem(Eigen::Index rows) : a(rows, 16), x(16), mu(rows), n(rows) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < 16; ++i) x(i) = u(rng);
    for (Eigen::Index i = 0; i < rows; ++i) {
      mu(i) = 1.0 + 100.0 * u(rng);
      n(i) = std::round(mu(i));
    }
  }
};

template <auto Gemv>
void BM_design_gemv(benchmark::State& state) {
  Problem p(state.range(0));
  Eigen::VectorXd out;
  for (auto _ : state) {
    Gemv(p.a, p.x, 2.0, 0.5, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Nll>
void BM_poisson_nll(benchmark::State& state) {
  Problem p(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Nll(p.mu, p.n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Grad>
void BM_nll_gradient(benchmark::State& state) {
  Problem p(state.range(0));
  Eigen::VectorXd g;
  for (auto _ : state) {
    Grad(p.a, p.mu, p.n, nullptr, 1.0, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Conv>
void BM_convolve(benchmark::State& state) {
  std::vector<double> in(static_cast<size_t>(state.range(0)));
  for (size_t i = 0; i < in.size(); ++i) in[i] = std::exp(-0.01 * static_cast<double>(i));
  std::vector<double> taps(61);
  for (size_t i = 0; i < taps.size(); ++i) taps[i] = std::exp(-0.5 * std::pow((static_cast<double>(i) - 30.0) / 10.0, 2));
  std::vector<double> out;
  for (auto _ : state) {
    Conv(in, taps, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_homscan_omp(benchmark::State& state) {
  const auto cal = hom_calibration();
  const auto thetas = theta_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(homscan(thetas, cal.pump, cal.params));
}

void BM_homscan_serial(benchmark::State& state) {
  const auto cal = hom_calibration();
  const auto thetas = theta_grid(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(homscan_serial(thetas, cal.pump, cal.params));
}

}  // namespace

BENCHMARK(BM_design_gemv<kernels::serial::design_gemv>)->Name("design_gemv/serial")->Arg(3600)->Arg(36000);
BENCHMARK(BM_design_gemv<kernels::omp::design_gemv>)->Name("design_gemv/omp")->Arg(3600)->Arg(36000);
BENCHMARK(BM_poisson_nll<kernels::serial::poisson_nll>)->Name("poisson_nll/serial")->Arg(3600)->Arg(36000);
BENCHMARK(BM_poisson_nll<kernels::omp::poisson_nll>)->Name("poisson_nll/omp")->Arg(3600)->Arg(36000);
BENCHMARK(BM_nll_gradient<kernels::serial::nll_gradient>)->Name("nll_gradient/serial")->Arg(3600)->Arg(36000);
BENCHMARK(BM_nll_gradient<kernels::omp::nll_gradient>)->Name("nll_gradient/omp")->Arg(3600)->Arg(36000);
BENCHMARK(BM_convolve<kernels::serial::convolve>)->Name("convolve/serial")->Arg(600)->Arg(120000);
BENCHMARK(BM_convolve<kernels::omp::convolve>)->Name("convolve/omp")->Arg(600)->Arg(120000);
BENCHMARK(BM_homscan_serial)->Arg(91)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_homscan_omp)->Arg(91)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
