#include "umesh/lbfgs.hpp"

#include <cmath>
#include <deque>

namespace umesh {

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::GradTol: return "grad_tol";
    case Termination::MaxIters: return "max_iterations";
    case Termination::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

using Eigen::VectorXd;

void validate(const LbfgsConfig& cfg) {
  if (cfg.history_size < 1) throw InvalidParameter("LbfgsConfig: history_size must be >= 1");
  if (!(cfg.wolfe_c1 > 0.0 && cfg.wolfe_c1 < cfg.wolfe_c2 && cfg.wolfe_c2 < 1.0)) {
    throw InvalidParameter("LbfgsConfig: need 0 < c1 < c2 < 1");
  }
  if (cfg.grad_tol < 0.0) throw InvalidParameter("LbfgsConfig: grad_tol must be >= 0");
  if (cfg.max_iterations < 0) throw InvalidParameter("LbfgsConfig: max_iterations must be >= 0");
  if (cfg.max_line_search_steps < 1) {
    throw InvalidParameter("LbfgsConfig: max_line_search_steps must be >= 1");
  }
  if (cfg.history_stride < 1) throw InvalidParameter("LbfgsConfig: history_stride must be >= 1");
}

struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;  // phi'(alpha) = g(x + alpha d)^T d
};

class LineObjective {
public:
  LineObjective(const ObjectiveFn& fg, const VectorXd& x, const VectorXd& d, long iteration)
      : fg_(fg), x_(x), d_(d), iteration_(iteration), xt_(x.size()), gt_(x.size()) {}

  Probe eval(double alpha) {
    xt_ = x_ + alpha * d_;
    const double f = fg_(xt_, gt_);
    ++evals_;
    if (!std::isfinite(f) || !gt_.allFinite()) {
      throw NumericFailure("objective returned a non-finite value during line search at iteration " +
                               std::to_string(iteration_),
                           xt_, iteration_);
    }
    return {alpha, f, gt_.dot(d_)};
  }

  int evals() const { return evals_; }
  const VectorXd& last_point() const { return xt_; }
  const VectorXd& last_gradient() const { return gt_; }

private:
  const ObjectiveFn& fg_;
  const VectorXd& x_;
  const VectorXd& d_;
  long iteration_;
  VectorXd xt_, gt_;
  int evals_ = 0;
};

// Minimizer of the cubic interpolant through two (alpha, f, f') probes;
// falls back to bisection when the interpolation is undefined or lands
// outside the safeguarded interior.
double cubic_step(const Probe& a, const Probe& b) {
  const double d1 = a.df + b.df - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.df * b.df;
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  double alpha = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.df - a.df + 2.0 * d2;
    if (denom != 0.0) {
      const double cand = b.alpha - (b.alpha - a.alpha) * (b.df + d2 - d1) / denom;
      const double margin = 0.1 * (hi - lo);
      if (std::isfinite(cand) && cand > lo + margin && cand < hi - margin) alpha = cand;
    }
  }
  return alpha;
}

struct LineSearchOutcome {
  bool ok = false;
  Probe accepted;
};

// Strong-Wolfe search (bracket then zoom). The budget caps the total number
// of objective evaluations spent in the search.
LineSearchOutcome line_search(LineObjective& line, double f0, double df0, double c1, double c2,
                              int budget) {
  LineSearchOutcome out;
  if (df0 >= 0.0) return out;  // not a descent direction

  const double alpha_max = 1e20;
  Probe prev{0.0, f0, df0};
  Probe lo, hi;
  bool bracketed = false;

  double alpha = 1.0;
  for (int i = 0; line.evals() < budget; ++i) {
    Probe cur = line.eval(alpha);
    if (cur.f > f0 + c1 * cur.alpha * df0 || (i > 0 && cur.f >= prev.f)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (std::abs(cur.df) <= -c2 * df0) {
      out.ok = true;
      out.accepted = cur;
      return out;
    }
    if (cur.df >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = cur;
    alpha *= 2.0;
    if (alpha > alpha_max) return out;
  }
  if (!bracketed) return out;

  // zoom: lo always satisfies the sufficient-decrease condition with the
  // lowest value seen; the minimizer is bracketed between lo and hi.
  while (line.evals() < budget) {
    const double width = std::abs(hi.alpha - lo.alpha);
    const double scale = std::max(1.0, std::max(std::abs(lo.alpha), std::abs(hi.alpha)));
    if (width <= 1e-16 * scale) return out;  // interval collapsed

    Probe cur = line.eval(cubic_step(lo, hi));
    if (cur.f > f0 + c1 * cur.alpha * df0 || cur.f >= lo.f) {
      hi = cur;
    } else {
      if (std::abs(cur.df) <= -c2 * df0) {
        out.ok = true;
        out.accepted = cur;
        return out;
      }
      if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
  }
  return out;
}

}  // namespace

OptimResult minimize(const ObjectiveFn& fg, const Eigen::VectorXd& p0, const LbfgsConfig& cfg) {
  validate(cfg);
  const Eigen::Index dim = p0.size();
  if (dim < 1) throw InvalidParameter("minimize: empty parameter vector");

  OptimResult result;
  VectorXd x = p0;
  VectorXd g(dim);
  double f = fg(x, g);
  result.n_objective_evals = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NumericFailure("objective returned a non-finite value at the initial point", x, 0);
  }
  result.trace.push_back(f);
  if (cfg.record_param_history) result.param_history.push_back(x);

  std::deque<VectorXd> s_mem, y_mem;
  std::deque<double> rho_mem;
  VectorXd q(dim), d(dim);
  std::vector<double> alpha_buf;

  Termination term = Termination::MaxIters;
  long iter = 0;
  while (iter < cfg.max_iterations) {
    if (g.lpNorm<Eigen::Infinity>() <= cfg.grad_tol) {
      term = Termination::GradTol;
      break;
    }

    // Two-loop recursion with gamma = s^T y / y^T y scaling.
    q = g;
    const std::size_t mem = s_mem.size();
    alpha_buf.assign(mem, 0.0);
    for (std::size_t i = mem; i-- > 0;) {
      alpha_buf[i] = rho_mem[i] * s_mem[i].dot(q);
      q -= alpha_buf[i] * y_mem[i];
    }
    if (mem > 0) {
      const double gamma = s_mem.back().dot(y_mem.back()) / y_mem.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < mem; ++i) {
      const double beta = rho_mem[i] * y_mem[i].dot(q);
      q += (alpha_buf[i] - beta) * s_mem[i];
    }
    d = -q;

    double df0 = d.dot(g);
    if (!(df0 < 0.0)) {
      // Stale curvature produced an ascent direction; fall back to steepest
      // descent with a fresh memory.
      s_mem.clear();
      y_mem.clear();
      rho_mem.clear();
      d = -g;
      df0 = -g.squaredNorm();
      if (!(df0 < 0.0)) {
        term = Termination::GradTol;
        break;
      }
    }

    LineObjective line(fg, x, d, iter);
    LineSearchOutcome ls = line_search(line, f, df0, cfg.wolfe_c1, cfg.wolfe_c2,
                                       cfg.max_line_search_steps);
    result.n_objective_evals += line.evals();
    if (!ls.ok) {
      term = Termination::LineSearchFailure;
      break;
    }

    // The accepted probe is always the most recently evaluated point.
    VectorXd x_new = line.last_point();
    VectorXd g_new = line.last_gradient();

    VectorXd s = x_new - x;
    VectorXd y_vec = g_new - g;
    const double sy = s.dot(y_vec);
    if (sy > 1e-14 * s.norm() * y_vec.norm()) {
      s_mem.push_back(std::move(s));
      y_mem.push_back(std::move(y_vec));
      rho_mem.push_back(1.0 / sy);
      if (static_cast<int>(s_mem.size()) > cfg.history_size) {
        s_mem.pop_front();
        y_mem.pop_front();
        rho_mem.pop_front();
      }
    }

    x = std::move(x_new);
    g = std::move(g_new);
    f = ls.accepted.f;
    ++iter;
    result.trace.push_back(f);
    if (cfg.record_param_history && iter % cfg.history_stride == 0) {
      result.param_history.push_back(x);
    }
  }

  if (cfg.record_param_history && iter % cfg.history_stride != 0) {
    result.param_history.push_back(x);  // always include the final iterate
  }
  result.final_params = std::move(x);
  result.final_loss = f;
  result.termination = term;
  result.n_iterations = iter;
  return result;
}

}  // namespace umesh
