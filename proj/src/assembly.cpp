#include "coxbound/assembly.hpp"

#include <vector>

#include "coxbound/operators.hpp"

namespace coxbound {

namespace {

inline int idx(int z, int k, int N) { return z * N + k; }

// Dense matrices of the martingale integral acting on stacked unknowns:
// rows/cols indexed by (level, cell).  fail = I - C, cens = -C with
// C[(z,m),(z,k)] = discrete failure hazard at (z,k) for k <= m.
void build_martingale_blocks(const ObservedTables& t, Eigen::MatrixXd& fail,
                             Eigen::MatrixXd& cens) {
  const int L = t.num_levels(), N = t.num_cells();
  fail.setZero(L * N, L * N);
  cens.setZero(L * N, L * N);
  for (int z = 0; z < L; ++z)
    for (int m = 0; m < N; ++m) {
      const int r = idx(z, m, N);
      for (int k = 0; k <= m; ++k) {
        const double d = t.dlam(z, k);
        if (d != 0.0) {
          fail(r, idx(z, k, N)) -= d;
          cens(r, idx(z, k, N)) -= d;
        }
      }
      fail(r, r) += 1.0;
    }
}

// Replace each phase-1 block of rows by (row - weighted block mean) and scale
// by (1 - pi)/pi; this is the matrix of the inverse-odds residual acting on
// the row space of the given branch.
void phase1_center_and_weight(const ObservedTables& t, int delta, Eigen::MatrixXd& rows) {
  const int N = t.num_cells();
  const Eigen::MatrixXd& q = delta == 1 ? t.q1 : t.q2;
  const Eigen::MatrixXd& pi = delta == 1 ? t.pi_fail : t.pi_cens;
  Eigen::RowVectorXd mean(rows.cols());
  if (t.design.scope == Phase1Scope::YDeltaV) {
    for (const auto& members : t.groups)
      for (int k = 0; k < N; ++k) {
        double den = 0.0;
        mean.setZero();
        for (int z : members) {
          const double w = q(z, k) * t.model.h[z];
          den += w;
          if (w != 0.0) mean += w * rows.row(idx(z, k, N));
        }
        if (den > 0.0) {
          mean /= den;
          for (int z : members) rows.row(idx(z, k, N)) -= mean;
        }
      }
  } else {
    for (const auto& members : t.groups) {
      double den = 0.0;
      mean.setZero();
      for (int z : members)
        for (int k = 0; k < N; ++k) {
          const double w = q(z, k) * t.model.h[z];
          den += w;
          if (w != 0.0) mean += w * rows.row(idx(z, k, N));
        }
      if (den > 0.0) {
        mean /= den;
        for (int z : members)
          for (int k = 0; k < N; ++k) rows.row(idx(z, k, N)) -= mean;
      }
    }
  }
  for (int z = 0; z < t.num_levels(); ++z)
    for (int k = 0; k < N; ++k)
      rows.row(idx(z, k, N)) *= (1.0 - pi(z, k)) / pi(z, k);
}

// Apply the failure-residual map to a pair of row blocks: out row (z,k) =
// fail row minus the survivor-normalized tail of later rows on both branches.
Eigen::MatrixXd failure_residual_rows(const ObservedTables& t, const Eigen::MatrixXd& fail,
                                      const Eigen::MatrixXd& cens) {
  const int L = t.num_levels(), N = t.num_cells();
  Eigen::MatrixXd out(L * N, fail.cols());
  Eigen::RowVectorXd tail(fail.cols());
  for (int z = 0; z < L; ++z) {
    tail.setZero();
    for (int k = N - 1; k >= 0; --k) {
      const int r = idx(z, k, N);
      if (t.s_after(z, k) > 0.0)
        out.row(r) = fail.row(r) - tail / t.s_after(z, k);
      else
        out.row(r) = fail.row(r);
      tail += t.q1(z, k) * fail.row(r) + t.q2(z, k) * cens.row(r);
    }
  }
  return out;
}

// Center rows at each supported cell against the failure posterior over
// levels; zero the rows of unsupported cells.
void center_rows_at_failures(const ObservedTables& t, Eigen::MatrixXd& rows) {
  const int L = t.num_levels(), N = t.num_cells();
  Eigen::RowVectorXd mean(rows.cols());
  for (int k = 0; k < N; ++k) {
    if (!t.in_support[k]) {
      for (int z = 0; z < L; ++z) rows.row(idx(z, k, N)).setZero();
      continue;
    }
    mean.setZero();
    for (int z = 0; z < L; ++z) {
      const double w = t.q1(z, k) * t.model.h[z];
      if (w != 0.0) mean += w * rows.row(idx(z, k, N));
    }
    mean /= t.marg_fail[k];
    for (int z = 0; z < L; ++z) rows.row(idx(z, k, N)) -= mean;
  }
}

Eigen::MatrixXd coefficient_rhs_equation(const ObservedTables& t) {
  const int L = t.num_levels(), N = t.num_cells();
  const int d = t.model.coef_dim();
  Eigen::MatrixXd rhs(L * N, d);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd c(L, N);
    for (int z = 0; z < L; ++z) c.row(z).setConstant(t.model.coef_covariate(z)[i]);
    const Eigen::MatrixXd centered = center_at_failures(t, c);
    for (int z = 0; z < L; ++z)
      for (int k = 0; k < N; ++k) rhs(idx(z, k, N), i) = centered(z, k);
  }
  return rhs;
}

LinearSystem assemble_equation_route(const ObservedTables& t) {
  const int L = t.num_levels(), N = t.num_cells();
  LinearSystem sys;
  sys.levels = L;
  sys.cells = N;
  sys.route = SolveRoute::Equation;

  Eigen::MatrixXd fail, cens;
  build_martingale_blocks(t, fail, cens);
  phase1_center_and_weight(t, 1, fail);
  phase1_center_and_weight(t, 0, cens);
  Eigen::MatrixXd composed = failure_residual_rows(t, fail, cens);
  center_rows_at_failures(t, composed);

  sys.matrix = std::move(composed);
  sys.matrix += Eigen::MatrixXd::Identity(L * N, L * N);
  sys.rhs = coefficient_rhs_equation(t);
  return sys;
}

LinearSystem assemble_tail_route(const ObservedTables& t) {
  const int L = t.num_levels(), N = t.num_cells();
  const int n = L * N;
  LinearSystem sys;
  sys.levels = L;
  sys.cells = N;
  sys.route = SolveRoute::Tail;

  // tail operator column by column through the matrix-free map
  Eigen::MatrixXd kmat(n, n);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(L, N);
  for (int z = 0; z < L; ++z)
    for (int k = 0; k < N; ++k) {
      basis(z, k) = 1.0;
      const Eigen::MatrixXd col = apply_tail_operator(t, basis);
      basis(z, k) = 0.0;
      for (int zz = 0; zz < L; ++zz)
        for (int kk = 0; kk < N; ++kk) kmat(idx(zz, kk, N), idx(z, k, N)) = col(zz, kk);
    }

  const Eigen::VectorXd epi = cond_mean_given_failure(t, t.pi_fail, 1.0);

  sys.matrix = Eigen::MatrixXd::Identity(n, n);
  Eigen::RowVectorXd kmean(n);
  for (int k = 0; k < N; ++k) {
    if (!t.in_support[k]) continue;  // unsupported cells keep identity rows
    kmean.setZero();
    for (int z = 0; z < L; ++z) kmean += t.q1(z, k) * t.model.h[z] * kmat.row(idx(z, k, N));
    kmean /= t.marg_fail[k];
    for (int z = 0; z < L; ++z) {
      const int r = idx(z, k, N);
      sys.matrix.row(r) -= kmat.row(r);
      sys.matrix.row(r) += (t.pi_fail(z, k) / epi[k]) * kmean;
    }
  }

  // pi(Y,1,V) { c(z) - E[c | Y, observed failure] }
  const int d = t.model.coef_dim();
  sys.rhs.setZero(n, d);
  const Eigen::VectorXd epi_all = cond_mean_given_failure(t, t.pi_fail, 1.0);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd c(L, N), cpi(L, N);
    for (int z = 0; z < L; ++z) {
      const double ci = t.model.coef_covariate(z)[i];
      c.row(z).setConstant(ci);
      cpi.row(z) = t.pi_fail.row(z) * ci;
    }
    const Eigen::VectorXd num = cond_mean_given_failure(t, cpi);
    for (int z = 0; z < L; ++z)
      for (int k = 0; k < N; ++k)
        if (t.in_support[k])
          sys.rhs(idx(z, k, N), i) =
              t.pi_fail(z, k) * (c(z, k) - num[k] / epi_all[k]);
  }
  return sys;
}

}  // namespace

LinearSystem assemble_system(const ObservedTables& t, const DesignVariant& variant,
                             SolveRoute route) {
  variant.check_consistent(t.model, t.design);
  // dense collocation; beyond this the direct solve is not practical anyway
  if (static_cast<long long>(t.num_levels()) * t.num_cells() > 8000)
    throw NumericError(
        "system exceeds the dense-assembly envelope (levels * cells > 8000); "
        "raise the refinement tolerance or lower the interval ceiling");
  LinearSystem sys = route == SolveRoute::Equation ? assemble_equation_route(t)
                                                   : assemble_tail_route(t);
  sys.variant = variant;
  return sys;
}

}  // namespace coxbound
