#include "hyperqubit/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hyperqubit/rng.hpp"

namespace hyperqubit {
namespace {

using Vec16 = Eigen::Matrix<double, 16, 1>;

// Position in T of the complex parameter pairs (t5,t6), (t7,t8), ...
constexpr std::array<std::pair<int, int>, 6> kOffDiag{{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};
// Upper-triangle order used by the real coordinates.
constexpr std::array<std::pair<int, int>, 6> kUpper{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

constexpr double kT0Knot = 0.5;

}  // namespace

Matrix4c TParams::t_matrix() const {
  Matrix4c m = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = t[static_cast<size_t>(i)];
  for (size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, c] = kOffDiag[k];
    m(r, c) = Complex(t[4 + 2 * k], t[5 + 2 * k]);
  }
  return m;
}

TParams TParams::canonical() const {
  TParams out = *this;
  for (int row = 0; row < 4; ++row) {
    if (t[static_cast<size_t>(row)] >= 0.0) continue;
    out.t[static_cast<size_t>(row)] = -t[static_cast<size_t>(row)];
    for (size_t k = 0; k < kOffDiag.size(); ++k) {
      if (kOffDiag[k].first != row) continue;
      out.t[4 + 2 * k] = -t[4 + 2 * k];
      out.t[5 + 2 * k] = -t[5 + 2 * k];
    }
  }
  return out;
}

Eigen::VectorXd TParams::as_vector() const {
  Eigen::VectorXd v(16);
  for (int i = 0; i < 16; ++i) v(i) = t[static_cast<size_t>(i)];
  return v;
}

TParams TParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() < 16) throw std::invalid_argument("TParams: need 16 values");
  TParams p;
  for (int i = 0; i < 16; ++i) p.t[static_cast<size_t>(i)] = v(i);
  return p;
}

Matrix4c rho_matrix_from_t(const TParams& t) {
  for (double v : t.t)
    if (!std::isfinite(v)) throw std::invalid_argument("rho_from_t: non-finite parameter");
  const Matrix4c tm = t.t_matrix();
  const Matrix4c m = tm.adjoint() * tm;
  const double tr = m.trace().real();
  if (!(tr > 0.0)) throw std::invalid_argument("rho_from_t: all parameters are zero");
  Matrix4c rho = m / tr;
  return 0.5 * (rho + rho.adjoint());
}

DensityMatrix4 rho_from_t(const TParams& t) { return DensityMatrix4(rho_matrix_from_t(t)); }

TParams t_from_rho(const Matrix4c& rho) {
  if (!rho.allFinite() || (rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("t_from_rho: matrix is not Hermitian");
  Matrix4c reg = 0.5 * (rho + rho.adjoint()) + 1e-9 * Matrix4c::Identity();
  // rho = U U^dagger with U upper triangular, obtained from the Cholesky factor of the reversed matrix.
  const Matrix4c rev = reg.colwise().reverse().rowwise().reverse();
  Eigen::LLT<Matrix4c> llt(rev);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("t_from_rho: matrix is not positive semidefinite");
  const Matrix4c c = llt.matrixL();
  const Matrix4c u = c.colwise().reverse().rowwise().reverse();
  const Matrix4c tm = u.adjoint();
  TParams out;
  for (int i = 0; i < 4; ++i) out.t[static_cast<size_t>(i)] = tm(i, i).real();
  for (size_t k = 0; k < kOffDiag.size(); ++k) {
    const auto [r, col] = kOffDiag[k];
    out.t[4 + 2 * k] = tm(r, col).real();
    out.t[5 + 2 * k] = tm(r, col).imag();
  }
  return out.canonical();
}

TParams t_from_rho(const DensityMatrix4& rho) { return t_from_rho(rho.matrix()); }

Vec16 rho_coordinates(const Matrix4c& m) {
  Vec16 r;
  for (int i = 0; i < 4; ++i) r(i) = m(i, i).real();
  for (size_t k = 0; k < kUpper.size(); ++k) {
    const auto [i, j] = kUpper[k];
    r(static_cast<Eigen::Index>(4 + 2 * k)) = m(i, j).real();
    r(static_cast<Eigen::Index>(5 + 2 * k)) = m(i, j).imag();
  }
  return r;
}

Matrix4c rho_from_coordinates(const Vec16& r) {
  Matrix4c m = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = r(i);
  for (size_t k = 0; k < kUpper.size(); ++k) {
    const auto [i, j] = kUpper[k];
    const Complex v(r(static_cast<Eigen::Index>(4 + 2 * k)), r(static_cast<Eigen::Index>(5 + 2 * k)));
    m(i, j) = v;
    m(j, i) = std::conj(v);
  }
  return m;
}

TraceModel::TraceModel(const TimeGrid& grid, const PhysParams& params, double jitter_fwhm_ps, double t0_ps)
    : grid_(grid) {
  params.validate();
  const InstrumentResponse response(grid, jitter_fwhm_ps, t0_ps);
  const int n = grid.n_bins;
  design_.resize(6 * n, 16);
  const double tau = params.tau_ps;
  const double dw = params.delta_omega();
  double loss_num = 0.0, loss_den = 0.0;
  for (PolBasis b : kAllBases) {
    for (int col = 0; col < 16; ++col) {
      auto f = [b, col, tau, dw](double t) {
        const Matrix4c a = projector_matrix(b, t, dw);
        double coef;
        if (col < 4) {
          coef = a(col, col).real();
        } else {
          const auto [i, j] = kUpper[static_cast<size_t>((col - 4) / 2)];
          coef = (col % 2 == 0) ? 2.0 * a(j, i).real() : -2.0 * a(j, i).imag();
        }
        return std::exp(-t / tau) / tau * coef;
      };
      double loss = 0.0;
      const auto v = response.apply(f, col < 4 ? &loss : nullptr);
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        design_(basis_index(b) * n + i, col) = v[static_cast<size_t>(i)];
        sum += v[static_cast<size_t>(i)];
      }
      if (col < 4 && loss < 1.0) {
        loss_num += sum / (1.0 - loss) - sum;
        loss_den += sum / (1.0 - loss);
      }
    }
  }
  edge_loss_ = loss_den > 0.0 ? loss_num / loss_den : 0.0;
}

std::array<std::vector<double>, 6> TraceModel::intensities(const Matrix4c& rho) const {
  const Eigen::VectorXd r = rho_coordinates(rho);
  Eigen::VectorXd mu;
  kernels::omp::design_gemv(design_, r, 1.0, 0.0, mu);
  std::array<std::vector<double>, 6> out;
  const int n = grid_.n_bins;
  for (int b = 0; b < 6; ++b) out[static_cast<size_t>(b)].assign(mu.data() + b * n, mu.data() + (b + 1) * n);
  return out;
}

Likelihood::Likelihood(const TraceSet& traces, const PhysParams& params, NuisanceConfig nuisance)
    : params_(params), nuisance_(nuisance) {
  traces.require_all_bases();
  traces.validate();
  model_ = std::make_shared<const TraceModel>(traces.grid, params, traces.meta.jitter_fwhm_ps);
  init(traces);
}

Likelihood::Likelihood(const TraceSet& traces, const PhysParams& params, const TraceModel& model,
                       NuisanceConfig nuisance)
    : params_(params), nuisance_(nuisance) {
  traces.require_all_bases();
  traces.validate();
  if (!(model.grid() == traces.grid)) throw std::invalid_argument("likelihood: model grid differs from trace grid");
  model_ = std::make_shared<const TraceModel>(model);
  init(traces);
}

void Likelihood::init(const TraceSet& traces) {
  n_bins_ = traces.grid.n_bins;
  jitter_ = traces.meta.jitter_fwhm_ps;
  if (!(traces.meta.counts_per_basis > 0.0)) throw std::invalid_argument("likelihood: counts_per_basis must be > 0");
  scale_ = 2.0 * traces.meta.counts_per_basis;
  background_ = traces.meta.background_per_bin;
  kind_ = traces.mode == TraceMode::SampledCounts ? LikelihoodKind::Poisson : LikelihoodKind::Gaussian;
  counts_.resize(6 * n_bins_);
  for (PolBasis b : kAllBases) {
    const auto& v = traces.at(b);
    for (int i = 0; i < n_bins_; ++i) counts_(basis_index(b) * n_bins_ + i) = v[static_cast<size_t>(i)];
  }
  weights_ = counts_.unaryExpr([](double n) { return 1.0 / std::max(n, 1.0); });
  minimum_ = 0.0;
  if (kind_ == LikelihoodKind::Poisson) {
    for (Eigen::Index i = 0; i < counts_.size(); ++i) {
      const double n = counts_(i);
      minimum_ += n > 0.0 ? n - n * std::log(n) : kernels::kMuFloor;
    }
  }
}

const kernels::RowMatrix& Likelihood::knot(long k) const {
  auto it = knots_.find(k);
  if (it == knots_.end()) {
    auto d = k == 0 ? std::make_shared<const kernels::RowMatrix>(model_->design())
                    : std::make_shared<const kernels::RowMatrix>(
                          TraceModel(model_->grid(), params_, jitter_, kT0Knot * static_cast<double>(k)).design());
    it = knots_.emplace(k, std::move(d)).first;
  }
  return *it->second;
}

void Likelihood::design_at(double t0, kernels::RowMatrix& d, kernels::RowMatrix* dd) const {
  const double s = t0 / kT0Knot;
  const long k = static_cast<long>(std::floor(s));
  const double u = s - static_cast<double>(k);
  // Catmull-Rom weights on knots k-1 .. k+2.
  const std::array<double, 4> w{0.5 * (-u + 2.0 * u * u - u * u * u), 0.5 * (2.0 - 5.0 * u * u + 3.0 * u * u * u),
                                0.5 * (u + 4.0 * u * u - 3.0 * u * u * u), 0.5 * (-u * u + u * u * u)};
  const std::array<double, 4> dw{0.5 * (-1.0 + 4.0 * u - 3.0 * u * u), 0.5 * (-10.0 * u + 9.0 * u * u),
                                 0.5 * (1.0 + 8.0 * u - 9.0 * u * u), 0.5 * (-2.0 * u + 3.0 * u * u)};
  d.setZero(6 * n_bins_, 16);
  if (dd) dd->setZero(6 * n_bins_, 16);
  for (int j = 0; j < 4; ++j) {
    if (w[static_cast<size_t>(j)] == 0.0 && (!dd || dw[static_cast<size_t>(j)] == 0.0)) continue;
    const kernels::RowMatrix& m = knot(k - 1 + j);
    d += w[static_cast<size_t>(j)] * m;
    if (dd) *dd += (dw[static_cast<size_t>(j)] / kT0Knot) * m;
  }
}

Eigen::VectorXd Likelihood::model_counts(const Eigen::VectorXd& x) const {
  const TParams tp = TParams::from_vector(x);
  const Eigen::VectorXd r = rho_coordinates(rho_matrix_from_t(tp));
  Eigen::VectorXd mu;
  if (!nuisance_.enabled) {
    kernels::omp::design_gemv(model_->design(), r, scale_, 0.0, mu);
  } else {
    kernels::RowMatrix d;
    design_at(x(16), d, nullptr);
    kernels::omp::design_gemv(d, r, scale_, 0.0, mu);
    for (int p = 0; p < 3; ++p) mu.segment(2 * p * n_bins_, 2 * n_bins_) *= std::exp(x(17 + p));
  }
  mu.array() += background_;
  return mu;
}

namespace {

double data_term(LikelihoodKind kind, const Eigen::VectorXd& mu, const Eigen::VectorXd& n, const Eigen::VectorXd& w) {
  return kind == LikelihoodKind::Poisson ? kernels::omp::poisson_nll(mu, n) : kernels::omp::gaussian_nll(mu, n, w);
}

}  // namespace

double Likelihood::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* g) const {
  if (x.size() != dimension()) throw std::invalid_argument("likelihood: wrong parameter count");
  const TParams tp = TParams::from_vector(x);
  const Matrix4c tm = tp.t_matrix();
  const Matrix4c m = tm.adjoint() * tm;
  const double tr = m.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    if (g) g->setZero(x.size());
    return std::numeric_limits<double>::infinity();
  }
  const Matrix4c rho = m / tr;
  const Eigen::VectorXd mu = model_counts(x);
  const double value = data_term(kind_, mu, counts_, weights_);
  if (!g) return value;

  g->setZero(x.size());
  Eigen::VectorXd g_r;
  const Eigen::VectorXd* w = kind_ == LikelihoodKind::Gaussian ? &weights_ : nullptr;
  kernels::RowMatrix dd;
  if (!nuisance_.enabled) {
    kernels::omp::nll_gradient(model_->design(), mu, counts_, w, scale_, g_r);
  } else {
    kernels::RowMatrix scaled;
    design_at(x(16), scaled, &dd);
    for (int p = 0; p < 3; ++p) {
      scaled.middleRows(2 * p * n_bins_, 2 * n_bins_) *= std::exp(x(17 + p));
      dd.middleRows(2 * p * n_bins_, 2 * n_bins_) *= std::exp(x(17 + p));
    }
    kernels::omp::nll_gradient(scaled, mu, counts_, w, scale_, g_r);
  }
  for (int i = 0; i < 16; ++i) {
    Matrix4c dt = Matrix4c::Zero();
    if (i < 4) {
      dt(i, i) = 1.0;
    } else {
      const auto [r, c] = kOffDiag[static_cast<size_t>((i - 4) / 2)];
      dt(r, c) = (i % 2 == 0) ? Complex(1.0, 0.0) : kI;
    }
    const Matrix4c dm = dt.adjoint() * tm + tm.adjoint() * dt;
    const Matrix4c drho = (dm - rho * dm.trace().real()) / tr;
    (*g)(i) = g_r.dot(rho_coordinates(drho));
  }
  if (nuisance_.enabled) {
    for (int p = 0; p < 3; ++p) {
      double acc = 0.0;
      for (int k = 2 * p * n_bins_; k < 2 * (p + 1) * n_bins_; ++k) {
        const double d = kind_ == LikelihoodKind::Poisson
                             ? (mu(k) < kernels::kMuFloor ? 0.0 : 1.0 - counts_(k) / mu(k))
                             : weights_(k) * (mu(k) - counts_(k));
        acc += d * (mu(k) - background_);
      }
      (*g)(17 + p) = acc;
    }
    Eigen::VectorXd g_t0;
    kernels::omp::nll_gradient(dd, mu, counts_, w, scale_, g_t0);
    (*g)(16) = g_t0.dot(rho_coordinates(rho));
  }
  return value;
}

double Likelihood::nll(const Eigen::VectorXd& x) const { return evaluate(x, nullptr); }

double Likelihood::nll_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const { return evaluate(x, &g); }

double negative_log_likelihood(const TParams& t, const TraceSet& traces, const PhysParams& params) {
  return Likelihood(traces, params).nll(t.as_vector());
}

double negative_log_likelihood(const TParams& t, const TraceSet& traces, const PhysParams& params,
                               const TraceModel& model) {
  return Likelihood(traces, params, model).nll(t.as_vector());
}

const char* seed_kind_name(SeedKind k) {
  switch (k) {
    case SeedKind::Neutral: return "neutral";
    case SeedKind::DataDriven: return "data-driven";
    case SeedKind::Random: return "random";
  }
  return "unknown";
}

namespace {

Matrix4c clip_to_density(const Matrix4c& m) {
  const Matrix4c h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  if (!(ev.sum() > 0.0)) return Matrix4c::Identity() / 4.0;
  ev /= ev.sum();
  Matrix4c out = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint());
}

Matrix4c sqrt_psd(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (m + m.adjoint()));
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

Eigen::VectorXd random_seed(std::uint64_t base, int seed_id) {
  std::mt19937_64 gen(CounterRng::mix(base ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(seed_id + 1))));
  std::normal_distribution<double> nd(0.0, 0.5);
  TParams p;
  for (double& v : p.t) v = nd(gen);
  for (int i = 0; i < 4; ++i) p.t[static_cast<size_t>(i)] = std::abs(p.t[static_cast<size_t>(i)]) + 0.05;
  return p.canonical().as_vector();
}

struct SeedFit {
  SeedReport report;
  Eigen::VectorXd x;
};

SeedFit run_seed(const Likelihood& base, SeedKind kind, int seed_id, const Eigen::VectorXd& t0,
                 const OptimizerConfig& cfg, const std::optional<Vector4c>& target) {
  const Likelihood lik = base;
  const double offset = lik.analytic_minimum();
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lik.dimension());
  x0.head(16) = t0;
  Objective f = [&lik, offset](const Eigen::VectorXd& x) { return lik.nll(x) - offset; };
  ObjectiveWithGradient fdf = [&lik, offset](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return lik.nll_and_gradient(x, g) - offset;
  };
  OptimizerConfig c = cfg;
  c.f_abs_tol = std::max(c.f_abs_tol, 1e-10);
  const OptimizerResult opt = minimize(f, &fdf, x0, c);
  SeedFit out;
  out.x = opt.x;
  const TParams tp = TParams::from_vector(opt.x).canonical();
  out.x.head(16) = tp.as_vector();
  out.report.seed_id = seed_id;
  out.report.kind = kind;
  out.report.nll = opt.f + offset;
  out.report.n_evaluations = opt.n_evaluations;
  out.report.converged = opt.converged && std::isfinite(opt.f);
  out.report.rho = rho_matrix_from_t(tp);
  out.report.nll_trace.reserve(opt.trace.size());
  for (double v : opt.trace) out.report.nll_trace.push_back(v + offset);
  if (target) out.report.fidelity_to_target = fidelity(DensityMatrix4(out.report.rho), *target);
  return out;
}

}  // namespace

DensityMatrix4 linear_inversion(const TraceSet& traces, const PhysParams& params, const TraceModel& model) {
  traces.require_all_bases();
  const int n = traces.grid.n_bins;
  if (!(model.grid() == traces.grid)) throw std::invalid_argument("linear_inversion: model grid differs from trace grid");
  const double scale = 2.0 * std::max(traces.meta.counts_per_basis, 1e-300);
  Eigen::MatrixXd a = model.design() * scale;
  Eigen::VectorXd y(6 * n);
  for (PolBasis b : kAllBases)
    for (int i = 0; i < n; ++i) {
      const double v = traces.at(b)[static_cast<size_t>(i)];
      const double w = 1.0 / std::sqrt(std::max(v, 1.0));
      y(basis_index(b) * n + i) = (v - traces.meta.background_per_bin) * w;
      a.row(basis_index(b) * n + i) *= w;
    }
  (void)params;
  // Off-diagonal coordinates scaled so that Euclidean distance equals the Frobenius distance.
  Eigen::VectorXd s = Eigen::VectorXd::Constant(16, std::sqrt(2.0));
  s.head(4).setOnes();
  a = a * s.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-9);
  const Eigen::VectorXd u_ls = svd.solve(y);
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(16 - svd.rank());
  auto to_rho = [&s](const Eigen::VectorXd& u) { return rho_from_coordinates(Vec16(u.cwiseQuotient(s))); };
  // Alternating projections between the least-squares solution set and the positive cone.
  Eigen::VectorXd u = u_ls;
  for (int it = 0; it < 2000; ++it) {
    const Matrix4c h = to_rho(u);
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (h + h.adjoint()));
    const Matrix4c p = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cast<Complex>().asDiagonal() *
                       es.eigenvectors().adjoint();
    const Eigen::VectorXd v = rho_coordinates(p).cwiseProduct(s);
    const Eigen::VectorXd next = u_ls + null_basis * (null_basis.transpose() * (v - u_ls));
    const double step = (next - u).norm();
    u = next;
    if (step < 1e-13) break;
  }
  return DensityMatrix4(clip_to_density(to_rho(u)));
}

TomoResult fit_mle(const TraceSet& traces, const PhysParams& params, const FitOptions& options,
                   const std::optional<Vector4c>& target) {
  if (options.n_seeds < 1) throw std::invalid_argument("fit_mle: n_seeds must be >= 1");
  if (target && std::abs(target->norm() - 1.0) > 1e-9) throw std::invalid_argument("fit_mle: target not normalized");
  const Likelihood lik(traces, params, options.nuisance);

  std::vector<Eigen::VectorXd> starts(static_cast<size_t>(options.n_seeds));
  std::vector<SeedKind> kinds(static_cast<size_t>(options.n_seeds), SeedKind::Random);
  for (int s = 0; s < options.n_seeds; ++s) {
    if (s == 0) {
      TParams p;
      p.t[0] = p.t[1] = p.t[2] = p.t[3] = 1.0;
      starts[0] = p.as_vector();
      kinds[0] = SeedKind::Neutral;
    } else if (s == 1) {
      starts[1] = t_from_rho(linear_inversion(traces, params, lik.model())).as_vector();
      kinds[1] = SeedKind::DataDriven;
    } else {
      starts[static_cast<size_t>(s)] = random_seed(options.seed, s);
    }
  }

  std::vector<SeedFit> fits(static_cast<size_t>(options.n_seeds));
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < options.n_seeds; ++s) {
    fits[static_cast<size_t>(s)] =
        run_seed(lik, kinds[static_cast<size_t>(s)], s, starts[static_cast<size_t>(s)], options.optimizer, target);
  }

  std::vector<const SeedFit*> ok;
  for (const auto& f : fits)
    if (f.report.converged) ok.push_back(&f);
  if (ok.empty()) {
    std::ostringstream os;
    os << "fit_mle: no seed converged (nll per seed:";
    for (const auto& f : fits) os << ' ' << f.report.nll;
    os << ')';
    throw NumericalError(os.str());
  }
  std::sort(ok.begin(), ok.end(), [](const SeedFit* a, const SeedFit* b) {
    if (a->report.nll != b->report.nll) return a->report.nll < b->report.nll;
    return a->report.seed_id < b->report.seed_id;
  });
  const SeedFit& best = *ok.front();

  TomoResult res;
  res.rho_hat = DensityMatrix4(best.report.rho);
  res.nll = best.report.nll;
  res.converged = true;
  res.seed_id = best.report.seed_id;
  for (const auto& f : fits) {
    res.n_evaluations += f.report.n_evaluations;
    res.seeds.push_back(f.report);
  }
  if (options.nuisance.enabled) {
    res.t0_ps = best.x(16);
    for (int p = 0; p < 3; ++p) res.pair_amplitudes[static_cast<size_t>(p)] = std::exp(best.x(17 + p));
  }
  if (target) res.fidelity_to_target = fidelity(res.rho_hat, *target);

  res.envelope.min = res.envelope.max = best.report.rho;
  double f_lo = 1.0, f_hi = 0.0;
  for (const SeedFit* f : ok) {
    const Matrix4c& m = f->report.rho;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        Complex& lo = res.envelope.min(i, j);
        Complex& hi = res.envelope.max(i, j);
        lo = Complex(std::min(lo.real(), m(i, j).real()), std::min(lo.imag(), m(i, j).imag()));
        hi = Complex(std::max(hi.real(), m(i, j).real()), std::max(hi.imag(), m(i, j).imag()));
      }
    if (f->report.fidelity_to_target) {
      f_lo = std::min(f_lo, *f->report.fidelity_to_target);
      f_hi = std::max(f_hi, *f->report.fidelity_to_target);
    }
  }
  if (target) res.fidelity_seed_spread = f_hi - f_lo;

  if (options.n_bootstrap > 0 && target) {
    std::vector<double> fids(static_cast<size_t>(options.n_bootstrap), 0.0);
    const Eigen::VectorXd start = best.x.head(16);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < options.n_bootstrap; ++k) {
      TraceSet resampled = traces;
      resampled.mode = TraceMode::SampledCounts;
      for (PolBasis b : kAllBases) {
        std::vector<double> v = traces.at(b);
        for (size_t i = 0; i < v.size(); ++i) {
          CounterRng rng(options.seed ^ (0xb0075ULL + static_cast<std::uint64_t>(k) * 0x100000001b3ULL),
                         static_cast<std::uint64_t>(basis_index(b)) * v.size() + i);
          std::poisson_distribution<long long> d(std::max(v[i], 1e-12));
          v[i] = static_cast<double>(d(rng));
        }
        resampled.set(b, std::move(v));
      }
      const Likelihood blik(resampled, params, lik.model(), options.nuisance);
      const SeedFit f = run_seed(blik, SeedKind::Neutral, 0, start, options.optimizer, target);
      fids[static_cast<size_t>(k)] = f.report.fidelity_to_target.value_or(0.0);
    }
    double mean = 0.0;
    for (double f : fids) mean += f;
    mean /= static_cast<double>(fids.size());
    double var = 0.0;
    for (double f : fids) var += (f - mean) * (f - mean);
    res.fidelity_bootstrap_std = fids.size() > 1 ? std::sqrt(var / static_cast<double>(fids.size() - 1)) : 0.0;
  }
  return res;
}

TomoResult fit_mle(const TraceSet& traces, const PhysParams& params, int n_seeds,
                   const std::optional<Vector4c>& target) {
  FitOptions o;
  o.n_seeds = n_seeds;
  return fit_mle(traces, params, o, target);
}

double fidelity(const DensityMatrix4& rho, const Vector4c& target, bool* flagged) {
  if (std::abs(target.norm() - 1.0) > 1e-9) throw std::invalid_argument("fidelity: target state is not normalized");
  const double f = (target.adjoint() * rho.matrix() * target)(0, 0).real();
  if (flagged) *flagged = f < -1e-9 || f > 1.0 + 1e-9;
  return std::clamp(f, 0.0, 1.0);
}

double uhlmann_fidelity(const DensityMatrix4& rho, const DensityMatrix4& sigma) {
  const Matrix4c s = sqrt_psd(rho.matrix());
  const Matrix4c inner = s * sigma.matrix() * s;
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  double tr = 0.0;
  for (int i = 0; i < 4; ++i) tr += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
  return std::clamp(tr * tr, 0.0, 1.0);
}

DensityMatrix4 rotate_frame(const DensityMatrix4& rho, double angle) {
  const Complex a = std::exp(-kI * (0.5 * angle));
  Vector4c d;
  d << a, a, std::conj(a), std::conj(a);
  const Matrix4c u = d.asDiagonal();
  Matrix4c out = u * rho.matrix() * u.adjoint();
  return DensityMatrix4(0.5 * (out + out.adjoint()));
}

std::array<double, 6> per_basis_residuals(const TraceSet& traces, const PhysParams& params, const Matrix4c& rho) {
  const TraceModel model(traces.grid, params, traces.meta.jitter_fwhm_ps);
  const auto inten = model.intensities(rho);
  const double scale = 2.0 * traces.meta.counts_per_basis;
  std::array<double, 6> out{};
  for (PolBasis b : kAllBases) {
    const auto& d = traces.at(b);
    double acc = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
      const double mu = scale * inten[static_cast<size_t>(basis_index(b))][i] + traces.meta.background_per_bin;
      const double r = (d[i] - mu) / std::sqrt(std::max(mu, 1.0));
      acc += r * r;
    }
    out[static_cast<size_t>(basis_index(b))] = std::sqrt(acc / static_cast<double>(d.size()));
  }
  return out;
}

nlohmann::json matrix_to_json(const Matrix4c& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < 4; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

Matrix4c matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("rho: expected 4 rows");
  Matrix4c m;
  for (int i = 0; i < 4; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    if (!row.is_array() || row.size() != 4) throw std::invalid_argument("rho: expected 4 columns in row " + std::to_string(i));
    for (int k = 0; k < 4; ++k) {
      const auto& e = row[static_cast<size_t>(k)];
      if (e.is_number()) {
        m(i, k) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(i, k) = Complex(e[0].get<double>(), e[1].get<double>());
      } else {
        throw std::invalid_argument("rho: entry (" + std::to_string(i) + "," + std::to_string(k) +
                                    ") must be a number or [re, im]");
      }
    }
  }
  return m;
}

nlohmann::json to_json(const TomoResult& r) {
  nlohmann::json j;
  j["rho"] = matrix_to_json(r.rho_hat.matrix());
  j["nll"] = r.nll;
  j["n_evaluations"] = r.n_evaluations;
  j["converged"] = r.converged;
  j["seed_id"] = r.seed_id;
  j["fidelity"] = r.fidelity_to_target ? nlohmann::json(*r.fidelity_to_target) : nlohmann::json(nullptr);
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"seed_id", s.seed_id},
                     {"kind", seed_kind_name(s.kind)},
                     {"nll", s.nll},
                     {"converged", s.converged},
                     {"n_evaluations", s.n_evaluations},
                     {"fidelity", s.fidelity_to_target ? nlohmann::json(*s.fidelity_to_target) : nlohmann::json(nullptr)}});
  }
  j["seeds"] = seeds;
  j["envelope"] = {{"min", matrix_to_json(r.envelope.min)}, {"max", matrix_to_json(r.envelope.max)}};
  j["fidelity_seed_spread"] = r.fidelity_seed_spread ? nlohmann::json(*r.fidelity_seed_spread) : nlohmann::json(nullptr);
  j["fidelity_bootstrap_std"] =
      r.fidelity_bootstrap_std ? nlohmann::json(*r.fidelity_bootstrap_std) : nlohmann::json(nullptr);
  j["pair_amplitudes"] = r.pair_amplitudes;
  j["t0_ps"] = r.t0_ps;
  return j;
}

}  // namespace hyperqubit
