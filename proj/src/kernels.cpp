#include "hyperqubit/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace hyperqubit::kernels {
namespace {

constexpr std::array<double, 3> kGlNodes{-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGlWeights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

double gl3(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) acc += kGlWeights[k] * f(mid + half * kGlNodes[k]);
  return half * acc;
}

double bin_value(const std::function<double(double)>& f, double a, double b, double kink) {
  return gl3(f, std::max(a, kink), b);
}

double convolve_at(const std::vector<double>& in, const std::vector<double>& taps, long i) {
  const long h = static_cast<long>(taps.size() / 2);
  const long n = static_cast<long>(in.size());
  double acc = 0.0;
  for (long k = -h; k <= h; ++k) {
    const long j = i - k;
    if (j >= 0 && j < n) acc += taps[static_cast<size_t>(k + h)] * in[static_cast<size_t>(j)];
  }
  return acc;
}

void check_taps(const std::vector<double>& taps) {
  if (taps.size() % 2 != 1) throw std::invalid_argument("convolve: taps must have odd length");
}

double poisson_term(double mu, double n) {
  const double m = std::max(mu, kMuFloor);
  return n > 0.0 ? m - n * std::log(m) : m;
}

double poisson_dmu(double mu, double n) {
  if (mu < kMuFloor) return 0.0;
  return 1.0 - n / mu;
}

constexpr Eigen::Index kGradientBlock = 512;

Eigen::Index gradient_blocks(Eigen::Index rows) { return std::max<Eigen::Index>(1, (rows + kGradientBlock - 1) / kGradientBlock); }

/// Adds the rows of block b to out; blocks are summed in index order so every build gives the same bits.
void gradient_block(const RowMatrix& a, const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd* w,
                    Eigen::Index b, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index end = std::min(a.rows(), (b + 1) * kGradientBlock);
  for (Eigen::Index i = b * kGradientBlock; i < end; ++i) {
    const double d = w ? (*w)(i) * (mu(i) - n(i)) : poisson_dmu(mu(i), n(i));
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(j) += d * a(i, j);
  }
}

// Sequential sum in index order.
double ordered_sum(const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += v(i);
  return acc;
}

}  // namespace

namespace serial {

void bin_integrate(const std::function<double(double)>& f, double t_first, double width, double kink,
                   std::vector<double>& out) {
  for (size_t j = 0; j < out.size(); ++j) {
    const double a = t_first + static_cast<double>(j) * width;
    out[j] = bin_value(f, a, a + width, kink);
  }
}

void convolve(const std::vector<double>& in, const std::vector<double>& taps, std::vector<double>& out) {
  check_taps(taps);
  out.assign(in.size(), 0.0);
  for (size_t i = 0; i < in.size(); ++i) out[i] = convolve_at(in, taps, static_cast<long>(i));
}

void design_gemv(const RowMatrix& a, const Eigen::VectorXd& x, double scale, double offset,
                 Eigen::VectorXd& out) {
  out.resize(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(i, j) * x(j);
    out(i) = scale * acc + offset;
  }
}

double poisson_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) acc += poisson_term(mu(i), n(i));
  return acc;
}

double gaussian_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double r = n(i) - mu(i);
    acc += 0.5 * w(i) * r * r;
  }
  return acc;
}

void nll_gradient(const RowMatrix& a, const Eigen::VectorXd& mu, const Eigen::VectorXd& n,
                  const Eigen::VectorXd* w, double scale, Eigen::VectorXd& g) {
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(a.cols(), gradient_blocks(a.rows()));
  for (Eigen::Index b = 0; b < partial.cols(); ++b) gradient_block(a, mu, n, w, b, partial.col(b));
  g = scale * partial.rowwise().sum();
}

}  // namespace serial

namespace omp {

void bin_integrate(const std::function<double(double)>& f, double t_first, double width, double kink,
                   std::vector<double>& out) {
  const long n = static_cast<long>(out.size());
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j) {
    const double a = t_first + static_cast<double>(j) * width;
    out[static_cast<size_t>(j)] = bin_value(f, a, a + width, kink);
  }
}

void convolve(const std::vector<double>& in, const std::vector<double>& taps, std::vector<double>& out) {
  check_taps(taps);
  out.assign(in.size(), 0.0);
  const long n = static_cast<long>(in.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) out[static_cast<size_t>(i)] = convolve_at(in, taps, i);
}

void design_gemv(const RowMatrix& a, const Eigen::VectorXd& x, double scale, double offset,
                 Eigen::VectorXd& out) {
  out.resize(a.rows());
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) acc += a(i, j) * x(j);
    out(i) = scale * acc + offset;
  }
}

double poisson_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n) {
  const Eigen::Index m = mu.size();
  Eigen::VectorXd terms(m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < m; ++i) terms(i) = poisson_term(mu(i), n(i));
  return ordered_sum(terms);
}

double gaussian_nll(const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd& w) {
  const Eigen::Index m = mu.size();
  Eigen::VectorXd terms(m);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = n(i) - mu(i);
    terms(i) = 0.5 * w(i) * r * r;
  }
  return ordered_sum(terms);
}

void nll_gradient(const RowMatrix& a, const Eigen::VectorXd& mu, const Eigen::VectorXd& n,
                  const Eigen::VectorXd* w, double scale, Eigen::VectorXd& g) {
  Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(a.cols(), gradient_blocks(a.rows()));
  const Eigen::Index blocks = partial.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) gradient_block(a, mu, n, w, b, partial.col(b));
  g = scale * partial.rowwise().sum();
}

}  // namespace omp

}  // namespace hyperqubit::kernels
