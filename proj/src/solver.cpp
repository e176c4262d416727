#include "coxbound/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "coxbound/operators.hpp"

namespace coxbound {

namespace {

inline int idx(int z, int k, int N) { return z * N + k; }

Eigen::MatrixXd unstack(const Eigen::VectorXd& v, int L, int N) {
  Eigen::MatrixXd m(L, N);
  for (int z = 0; z < L; ++z)
    for (int k = 0; k < N; ++k) m(z, k) = v[idx(z, k, N)];
  return m;
}

// Hager/Higham style 1-norm condition estimate from the factorization
double condition_estimate_1norm(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                                const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  double est = 0.0;
  for (int iter = 0; iter < 5; ++iter) {
    const Eigen::VectorXd y = lu.solve(x);
    est = std::max(est, y.lpNorm<1>());
    Eigen::VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    const Eigen::VectorXd z = lu.transpose().solve(xi);
    int j = 0;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x) * (1.0 + 1e-12) + 1e-300) break;
    x.setZero();
    x[j] = 1.0;
  }
  const double a_norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  return est * a_norm1;
}

// tail-route left-hand side applied matrix-free
Eigen::MatrixXd apply_tail_lhs(const ObservedTables& t, const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd ku = apply_tail_operator(t, u);
  const Eigen::VectorXd kmean = cond_mean_given_failure(t, ku);
  const Eigen::VectorXd epi = cond_mean_given_failure(t, t.pi_fail, 1.0);
  Eigen::MatrixXd out = u - ku;
  for (int z = 0; z < t.num_levels(); ++z)
    for (int k = 0; k < t.num_cells(); ++k)
      if (t.in_support[k]) out(z, k) += t.pi_fail(z, k) / epi[k] * kmean[k];
  return out;
}

}  // namespace

double equation_residual(const ObservedTables& t, const GridFunction& u,
                         const Eigen::MatrixXd& rhs_stacked, SolveRoute route) {
  const int L = t.num_levels(), N = t.num_cells();
  double sup = 0.0;
  for (int i = 0; i < u.dim(); ++i) {
    const Eigen::MatrixXd lhs = route == SolveRoute::Equation
                                    ? (u[i] + apply_equation_operator(t, u[i])).eval()
                                    : apply_tail_lhs(t, u[i]);
    for (int z = 0; z < L; ++z)
      for (int k = 0; k < N; ++k)
        if (t.in_support[k])
          sup = std::max(sup, std::abs(lhs(z, k) - rhs_stacked(idx(z, k, N), i)));
  }
  return sup;
}

EfficientScoreSolution solve_ustar(const ObservedTables& t, const LinearSystem& sys,
                                   const SolveOptions& opts) {
  const int L = sys.levels, N = sys.cells;
  EfficientScoreSolution sol;
  sol.levels = L;
  sol.cells = N;
  sol.variant = sys.variant;
  sol.route = sys.route;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.matrix);
  sol.condition_estimate = condition_estimate_1norm(lu, sys.matrix);
  if (!(sol.condition_estimate < opts.condition_ceiling))
    throw NumericError("solver: condition estimate " + std::to_string(sol.condition_estimate) +
                       " exceeds ceiling " + std::to_string(opts.condition_ceiling));

  Eigen::MatrixXd x = lu.solve(sys.rhs);
  x += lu.solve(sys.rhs - sys.matrix * x);  // one refinement step

  const int d = static_cast<int>(sys.rhs.cols());
  sol.u_star.comp.resize(d);
  for (int i = 0; i < d; ++i) sol.u_star[i] = unstack(x.col(i), L, N);

  sol.residual_norm = equation_residual(t, sol.u_star, sys.rhs, sys.route);
  if (!(sol.residual_norm <= 1e-8))
    throw NumericError("solver: residual " + std::to_string(sol.residual_norm) +
                       " exceeds the 1e-8 contract");

  // centering constraint: E[u* | Y, Delta = 1] must vanish on the support
  for (int i = 0; i < d; ++i) {
    const Eigen::VectorXd mean = cond_mean_given_failure(t, sol.u_star[i]);
    for (int k : t.support)
      sol.centering_violation = std::max(sol.centering_violation, std::abs(mean[k]));
  }

  // centering function via the tail operator
  const Eigen::VectorXd epi = cond_mean_given_failure(t, t.pi_fail, 1.0);
  sol.f_star.setZero(d, N);
  for (int i = 0; i < d; ++i) {
    const Eigen::MatrixXd ku = apply_tail_operator(t, sol.u_star[i]);
    const Eigen::VectorXd kmean = cond_mean_given_failure(t, ku);
    Eigen::MatrixXd c(L, N), cpi(L, N);
    for (int z = 0; z < L; ++z) {
      const double ci = t.model.coef_covariate(z)[i];
      c.row(z).setConstant(ci);
      cpi.row(z) = t.pi_fail.row(z) * ci;
    }
    const Eigen::VectorXd cmean = cond_mean_given_failure(t, c);
    const Eigen::VectorXd cpimean = cond_mean_given_failure(t, cpi);
    for (int k : t.support)
      sol.f_star(i, k) = -kmean[k] / epi[k] - (cpimean[k] / epi[k] - cmean[k]);
  }
  return sol;
}

Eigen::MatrixXd fulldata_information(const ObservedTables& t) {
  const int L = t.num_levels(), d = t.model.coef_dim();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (int k : t.support) {
    const double y = t.grid.nodes[k];
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    double den = 0.0;
    for (int z = 0; z < L; ++z) {
      const double w = t.w1_density(y, z) * t.model.h[z];
      mean += w * t.model.coef_covariate(z);
      den += w;
    }
    mean /= den;
    for (int z = 0; z < L; ++z) {
      const Eigen::VectorXd r = t.model.coef_covariate(z) - mean;
      info += t.q1(z, k) * t.model.h[z] * r * r.transpose();
    }
  }
  return info;
}

ScoreEvaluator::ScoreEvaluator(const ObservedTables& t, const GridFunction& u_star) : t_(&t) {
  const int d = u_star.dim();
  const int L = t.num_levels();

  for (int k : t.support) xs_.push_back(t.grid.nodes[k]);
  ys_.resize(d);
  for (int i = 0; i < d; ++i) {
    ys_[i].resize(L);
    for (int z = 0; z < L; ++z) {
      Eigen::VectorXd v(xs_.size());
      for (std::size_t j = 0; j < t.support.size(); ++j) v[j] = u_star[i](z, t.support[j]);
      ys_[i][z] = std::move(v);
    }
  }

  // compensator knots: 0, support representatives, hazard breaks, tau
  knots_.push_back(0.0);
  for (double x : xs_) knots_.push_back(x);
  for (double b : t.model.baseline.breaks)
    if (b < t.model.tau) knots_.push_back(b);
  knots_.push_back(t.model.tau);
  std::sort(knots_.begin(), knots_.end());
  knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());

  cum_.resize(d);
  for (int i = 0; i < d; ++i) {
    cum_[i].resize(L);
    for (int z = 0; z < L; ++z) {
      Eigen::VectorXd c(knots_.size());
      c[0] = 0.0;
      const double risk = t.model.risk(z);
      for (std::size_t j = 1; j < knots_.size(); ++j) {
        const double a = knots_[j - 1], b = knots_[j];
        const double rate = t.model.baseline.rate_right(a);
        const double ua = u_value(i, z, a), ub = u_value(i, z, b);
        c[j] = c[j - 1] + risk * rate * 0.5 * (ua + ub) * (b - a);
      }
      cum_[i][z] = std::move(c);
    }
  }

  if (t.design.scope == Phase1Scope::DeltaV) {
    pooled_.assign(d, Eigen::MatrixXd::Zero(2, t.groups.size()));
    for (std::size_t g = 0; g < t.groups.size(); ++g)
      for (int delta = 0; delta < 2; ++delta) {
        Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
        double den = 0.0;
        for (int z : t.groups[g])
          for (int k = 0; k < t.num_cells(); ++k) {
            const double mass =
                (delta == 1 ? t.q1(z, k) : t.q2(z, k)) * t.model.h[z];
            if (mass == 0.0) continue;
            num += mass * field_value(t.grid.nodes[k], delta, z);
            den += mass;
          }
        if (den > 0.0)
          for (int i = 0; i < d; ++i) pooled_[i](delta, g) = num[i] / den;
      }
  }
}

double ScoreEvaluator::u_value(int comp, int level, double y) const {
  const auto& v = ys_[comp][level];
  if (xs_.empty()) return 0.0;
  if (y <= xs_.front()) return v[0];
  if (y >= xs_.back()) return v[v.size() - 1];
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), y);
  const std::size_t j = static_cast<std::size_t>(it - xs_.begin());
  const double x0 = xs_[j - 1], x1 = xs_[j];
  const double w = (y - x0) / (x1 - x0);
  return (1.0 - w) * v[j - 1] + w * v[j];
}

double ScoreEvaluator::compensator(int comp, int level, double y) const {
  const auto& c = cum_[comp][level];
  if (y <= 0.0) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
  std::size_t j = static_cast<std::size_t>(it - knots_.begin());
  if (j >= knots_.size()) j = knots_.size() - 1;
  const double a = knots_[j - 1];
  if (y <= a) return c[j - 1];
  const double rate = t_->model.baseline.rate_right(a);
  const double risk = t_->model.risk(level);
  const double ua = u_value(comp, level, a), uy = u_value(comp, level, y);
  return c[j - 1] + risk * rate * 0.5 * (ua + uy) * (y - a);
}

Eigen::VectorXd ScoreEvaluator::field_value(double y, int delta, int level) const {
  Eigen::VectorXd out(dim());
  for (int i = 0; i < dim(); ++i)
    out[i] = (delta == 1 ? u_value(i, level, y) : 0.0) - compensator(i, level, y);
  return out;
}

Eigen::VectorXd ScoreEvaluator::phase1_mean(double y, int delta, int group) const {
  const auto& t = *t_;
  if (t.design.scope == Phase1Scope::DeltaV) {
    Eigen::VectorXd out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = pooled_[i](delta, group);
    return out;
  }
  const auto& members = t.groups[group];
  Eigen::VectorXd num = Eigen::VectorXd::Zero(dim());
  double den = 0.0;
  if (delta == 1) {
    for (int z : members) {
      const double w = t.w1_density(y, z) * t.model.h[z];
      if (w == 0.0) continue;
      num += w * field_value(y, 1, z);
      den += w;
    }
  } else {
    // atoms dominate the conditional at an atom time
    double atom_total = 0.0;
    for (int z : members) atom_total += t.w2_atom(y, z);
    for (int z : members) {
      const double w = (atom_total > 0.0 ? t.w2_atom(y, z) : t.w2_density(y, z)) * t.model.h[z];
      if (w == 0.0) continue;
      num += w * field_value(y, 0, z);
      den += w;
    }
  }
  if (den <= 0.0) return Eigen::VectorXd::Zero(dim());
  return num / den;
}

Eigen::VectorXd ScoreEvaluator::score(double y, int delta, int r, int level, int group) const {
  if (!(y > 0.0) || y > t_->model.tau || group < 0 ||
      group >= static_cast<int>(t_->groups.size()))
    throw ValidationError("efficient score: observation outside the model support");
  const double pi = t_->design.pi(y, delta, group);
  if (r == 0) return phase1_mean(y, delta, group);
  if (level < 0 || level >= t_->num_levels())
    throw ValidationError("efficient score: sampled observation without a covariate level");
  const Eigen::VectorXd zeta = field_value(y, delta, level);
  if (pi == 1.0) return zeta;
  return zeta / pi - ((1.0 - pi) / pi) * phase1_mean(y, delta, group);
}

Eigen::MatrixXd information_bound(EfficientScoreSolution& sol, const ObservedTables& t) {
  const ScoreEvaluator eval(t, sol.u_star);
  const int d = sol.u_star.dim(), L = t.num_levels(), N = t.num_cells();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d, d);
  for (int z = 0; z < L; ++z) {
    const int g = t.level_group[z];
    for (int k = 0; k < N; ++k) {
      const double y = t.grid.nodes[k];
      for (int delta = 0; delta < 2; ++delta) {
        const double mass = (delta == 1 ? t.q1(z, k) : t.q2(z, k)) * t.model.h[z];
        if (mass == 0.0) continue;
        const double pi = t.design.pi(y, delta, g);
        const Eigen::VectorXd zeta = eval.field_value(y, delta, z);
        if (pi == 1.0) {
          info += mass * zeta * zeta.transpose();
        } else {
          const Eigen::VectorXd e = eval.phase1_mean(y, delta, g);
          const Eigen::VectorXd obs = zeta / pi - ((1.0 - pi) / pi) * e;
          info += mass * (pi * obs * obs.transpose() + (1.0 - pi) * e * e.transpose());
        }
      }
    }
  }
  sol.I_star = info;
  sol.has_information = true;
  return info;
}

BoundResult solve_bound(const FullDataModel& model, const MissingnessDesign& design,
                        const DesignVariant& variant, const GridOptions& grid_opts,
                        SolveRoute route, const SolveOptions& opts) {
  BoundResult res;
  Eigen::MatrixXd prev_istar;
  int n = grid_opts.initial_intervals;
  while (true) {
    ObservedTables tables = build_observed_tables(model, design, n);
    LinearSystem sys = assemble_system(tables, variant, route);
    EfficientScoreSolution sol = solve_ustar(tables, sys, opts);
    information_bound(sol, tables);
    const Eigen::MatrixXd ifull = fulldata_information(tables);

    res.trail.push_back({n, sol.I_star, ifull, sol.residual_norm, sol.condition_estimate});
    const bool have_prev = prev_istar.size() > 0;
    double rel = 0.0;
    if (have_prev)
      rel = (sol.I_star - prev_istar).cwiseAbs().maxCoeff() /
            std::max(sol.I_star.cwiseAbs().maxCoeff(), 1e-300);

    const bool done = !grid_opts.refine || (have_prev && rel < grid_opts.rel_tol) ||
                      2 * n > grid_opts.max_intervals;
    if (done) {
      res.solution = std::move(sol);
      res.tables = std::move(tables);
      res.I_full = ifull;
      res.converged = !grid_opts.refine || (have_prev && rel < grid_opts.rel_tol);
      if (res.trail.size() >= 2) {
        const auto& fine = res.trail.back();
        const auto& coarse = res.trail[res.trail.size() - 2];
        res.I_star_extrapolated = fine.I_star + (fine.I_star - coarse.I_star) / 3.0;
        res.I_full_extrapolated = fine.I_full + (fine.I_full - coarse.I_full) / 3.0;
      } else {
        res.I_star_extrapolated = res.solution.I_star;
        res.I_full_extrapolated = ifull;
      }
      return res;
    }
    prev_istar = sol.I_star;
    n *= 2;
  }
}

}  // namespace coxbound
