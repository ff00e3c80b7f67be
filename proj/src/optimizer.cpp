#include "hyperqubit/optimizer.hpp"

#include <cmath>
#include <limits>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace hyperqubit {
namespace {

struct Context {
  const Objective* f;
  const ObjectiveWithGradient* fdf;
  long evaluations = 0;
  Eigen::VectorXd scratch;
  Eigen::VectorXd grad;

  double value(const gsl_vector* x) {
    for (Eigen::Index i = 0; i < scratch.size(); ++i) scratch(i) = gsl_vector_get(x, static_cast<size_t>(i));
    ++evaluations;
    const double v = (*f)(scratch);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  }

  double value_and_gradient(const gsl_vector* x, gsl_vector* g) {
    for (Eigen::Index i = 0; i < scratch.size(); ++i) scratch(i) = gsl_vector_get(x, static_cast<size_t>(i));
    double v;
    if (fdf) {
      ++evaluations;
      v = (*fdf)(scratch, grad);
    } else {
      ++evaluations;
      v = (*f)(scratch);
      grad.resize(scratch.size());
      for (Eigen::Index i = 0; i < scratch.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(scratch(i)));
        Eigen::VectorXd xp = scratch, xm = scratch;
        xp(i) += h;
        xm(i) -= h;
        evaluations += 2;
        grad(i) = ((*f)(xp) - (*f)(xm)) / (2.0 * h);
      }
    }
    if (g)
      for (Eigen::Index i = 0; i < grad.size(); ++i) gsl_vector_set(g, static_cast<size_t>(i), grad(i));
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  }
};

double f_cb(const gsl_vector* x, void* p) { return static_cast<Context*>(p)->value(x); }
void df_cb(const gsl_vector* x, void* p, gsl_vector* g) { static_cast<Context*>(p)->value_and_gradient(x, g); }
void fdf_cb(const gsl_vector* x, void* p, double* f, gsl_vector* g) {
  *f = static_cast<Context*>(p)->value_and_gradient(x, g);
}

void to_gsl(const Eigen::VectorXd& v, gsl_vector* g) {
  for (Eigen::Index i = 0; i < v.size(); ++i) gsl_vector_set(g, static_cast<size_t>(i), v(i));
}

Eigen::VectorXd from_gsl(const gsl_vector* g) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g->size));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gsl_vector_get(g, static_cast<size_t>(i));
  return v;
}

}  // namespace

OptimizerResult minimize(const Objective& f, const ObjectiveWithGradient* fdf, const Eigen::VectorXd& x0,
                         const OptimizerConfig& config) {
  gsl_set_error_handler_off();
  const size_t n = static_cast<size_t>(x0.size());
  Context ctx{&f, fdf, 0, x0, Eigen::VectorXd::Zero(x0.size())};

  OptimizerResult res;
  res.x = x0;
  res.f = f(x0);
  ++ctx.evaluations;
  res.trace.push_back(res.f);
  auto accept = [&res](const Eigen::VectorXd& x, double v) {
    if (!(v < res.f)) return false;
    res.x = x;
    res.f = v;
    res.trace.push_back(v);
    return true;
  };

  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  gsl_multimin_function fn{&f_cb, n, &ctx};
  gsl_multimin_function_fdf fn_fdf{&f_cb, &df_cb, &fdf_cb, n, &ctx};

  for (int cycle = 0; cycle < config.max_cycles; ++cycle) {
    const double f_start = res.f;
    const Eigen::VectorXd x_start = res.x;

    to_gsl(res.x, x);
    gsl_vector_set_all(step, cycle == 0 ? config.initial_step : config.initial_step * 0.1);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    const int max_it = config.simplex_iterations_per_dim * static_cast<int>(n);
    for (int it = 0; it < max_it; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      accept(from_gsl(s->x), s->fval);
      if (gsl_multimin_fminimizer_size(s) < config.step_tol) break;
    }
    gsl_multimin_fminimizer_free(s);

    if (config.quasi_newton) {
      to_gsl(res.x, x);
      gsl_multimin_fdfminimizer* q = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n);
      gsl_multimin_fdfminimizer_set(q, &fn_fdf, x, 0.01 * std::max(1.0, res.x.norm()), 0.1);
      for (int it = 0; it < config.quasi_newton_iterations; ++it) {
        const int status = gsl_multimin_fdfminimizer_iterate(q);
        if (status != GSL_SUCCESS) break;
        accept(from_gsl(q->x), q->f);
        if (gsl_multimin_test_gradient(q->gradient, config.gradient_tol) == GSL_SUCCESS) break;
      }
      gsl_multimin_fdfminimizer_free(q);
    }

    if (res.f <= config.f_abs_tol) {
      res.converged = true;
      break;
    }
    const double change = std::abs(f_start - res.f) / std::max(1.0, std::abs(res.f));
    const double moved = (res.x - x_start).norm();
    if (change < config.rel_tol && moved < config.step_tol) {
      res.converged = true;
      break;
    }
  }
  gsl_vector_free(x);
  gsl_vector_free(step);
  res.n_evaluations = ctx.evaluations;
  return res;
}

}  // namespace hyperqubit
