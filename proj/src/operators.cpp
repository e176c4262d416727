#include "coxbound/operators.hpp"

#include <cmath>

namespace coxbound {

namespace {

// cumulative compensator integral: out(z, m) = sum_{k <= m} u(z, k) dlam(z, k)
Eigen::MatrixXd compensator_cumsum(const ObservedTables& t, const Eigen::MatrixXd& u,
                                   const Eigen::MatrixXd& dhaz) {
  const int L = t.num_levels(), N = t.num_cells();
  Eigen::MatrixXd acc(L, N);
  for (int z = 0; z < L; ++z) {
    double run = 0.0;
    for (int k = 0; k < N; ++k) {
      run += u(z, k) * dhaz(z, k);
      acc(z, k) = run;
    }
  }
  return acc;
}

}  // namespace

ScorePlane martingale_integral(const ObservedTables& t, const Eigen::MatrixXd& u) {
  Eigen::MatrixXd acc = compensator_cumsum(t, u, t.dlam);
  return {u - acc, -acc};
}

Eigen::MatrixXd failure_residual(const ObservedTables& t, const ScorePlane& b) {
  return b.fail - cond_mean_future(t, b.fail, b.cens);
}

Eigen::MatrixXd censoring_residual(const ObservedTables& t, const ScorePlane& b) {
  return b.cens - cond_mean_future(t, b.fail, b.cens);
}

Eigen::MatrixXd center_at_failures(const ObservedTables& t, const Eigen::MatrixXd& s) {
  const Eigen::VectorXd mean = cond_mean_given_failure(t, s);
  Eigen::MatrixXd out = s.rowwise() - mean.transpose();
  for (int k = 0; k < t.num_cells(); ++k)
    if (!t.in_support[k]) out.col(k).setZero();
  return out;
}

ScorePlane centered_martingale_integral(const ObservedTables& t, const Eigen::MatrixXd& s) {
  return martingale_integral(t, center_at_failures(t, s));
}

ScorePlane missingness_residual(const ObservedTables& t, const Eigen::MatrixXd& u) {
  const ScorePlane du = martingale_integral(t, u);
  const Eigen::MatrixXd e1 = cond_mean_phase1(t, du.fail, du.cens, 1);
  const Eigen::MatrixXd e0 = cond_mean_phase1(t, du.fail, du.cens, 0);
  ScorePlane out;
  out.fail = ((1.0 - t.pi_fail.array()) / t.pi_fail.array()) * (du.fail - e1).array();
  out.cens = ((1.0 - t.pi_cens.array()) / t.pi_cens.array()) * (du.cens - e0).array();
  return out;
}

Eigen::MatrixXd apply_equation_operator(const ObservedTables& t, const Eigen::MatrixXd& u) {
  return center_at_failures(t, failure_residual(t, missingness_residual(t, u)));
}

Eigen::MatrixXd apply_tail_operator(const ObservedTables& t, const Eigen::MatrixXd& u) {
  const ScorePlane du = martingale_integral(t, u);

  // future mean of the raw martingale integral
  const Eigen::MatrixXd m_plain = cond_mean_future(t, du.fail, du.cens);

  // future mean of the inverse-probability-weighted integral
  const Eigen::MatrixXd m_ipw =
      cond_mean_future(t, du.fail.cwiseQuotient(t.pi_fail), du.cens.cwiseQuotient(t.pi_cens));

  // phase-1 conditional means on both branches
  const Eigen::MatrixXd e1 = cond_mean_phase1(t, du.fail, du.cens, 1);
  const Eigen::MatrixXd e0 = cond_mean_phase1(t, du.fail, du.cens, 0);

  // future mean of ((1 - pi)/pi) times the phase-1 conditional mean
  const Eigen::MatrixXd wf = ((1.0 - t.pi_fail.array()) / t.pi_fail.array()) * e1.array();
  const Eigen::MatrixXd wc = ((1.0 - t.pi_cens.array()) / t.pi_cens.array()) * e0.array();
  const Eigen::MatrixXd m_wcond = cond_mean_future(t, wf, wc);

  return (-m_plain.array() + t.pi_fail.array() * m_ipw.array() +
          (1.0 - t.pi_fail.array()) * e1.array() - t.pi_fail.array() * m_wcond.array())
      .matrix();
}

ScorePlane apply_observed_gram(const ObservedTables& t, const ScorePlane& a) {
  const Eigen::MatrixXd e1 = cond_mean_phase1(t, a.fail, a.cens, 1);
  const Eigen::MatrixXd e0 = cond_mean_phase1(t, a.fail, a.cens, 0);
  ScorePlane out;
  out.fail = t.pi_fail.array() * a.fail.array() + (1.0 - t.pi_fail.array()) * e1.array();
  out.cens = t.pi_cens.array() * a.cens.array() + (1.0 - t.pi_cens.array()) * e0.array();
  return out;
}

ScorePlane apply_observed_gram_inverse(const ObservedTables& t, const ScorePlane& a) {
  const Eigen::MatrixXd e1 = cond_mean_phase1(t, a.fail, a.cens, 1);
  const Eigen::MatrixXd e0 = cond_mean_phase1(t, a.fail, a.cens, 0);
  ScorePlane out;
  out.fail = a.fail.array() / t.pi_fail.array() -
             ((1.0 - t.pi_fail.array()) / t.pi_fail.array()) * e1.array();
  out.cens = a.cens.array() / t.pi_cens.array() -
             ((1.0 - t.pi_cens.array()) / t.pi_cens.array()) * e0.array();
  return out;
}

double decomposition_residual(const ObservedTables& t, const ScorePlane& b) {
  const int L = t.num_levels(), N = t.num_cells();
  const Eigen::MatrixXd r1 = failure_residual(t, b);
  const Eigen::MatrixXd r2 = censoring_residual(t, b);
  const ScorePlane part1 = martingale_integral(t, r1);
  const Eigen::MatrixXd accG = compensator_cumsum(t, r2, t.dlamG);

  Eigen::VectorXd mean_given_level(L);
  for (int z = 0; z < L; ++z) {
    double s = 0.0;
    for (int k = 0; k < N; ++k) s += b.fail(z, k) * t.q1(z, k) + b.cens(z, k) * t.q2(z, k);
    mean_given_level[z] = s / t.total_mass(z);
  }

  double sup = 0.0;
  for (int z = 0; z < L; ++z)
    for (int k = 0; k < N; ++k) {
      if (t.q1(z, k) > 0.0) {
        const double recon = part1.fail(z, k) - accG(z, k) + mean_given_level[z];
        sup = std::max(sup, std::abs(b.fail(z, k) - recon));
      }
      if (t.q2(z, k) > 0.0) {
        const double recon = part1.cens(z, k) + r2(z, k) - accG(z, k) + mean_given_level[z];
        sup = std::max(sup, std::abs(b.cens(z, k) - recon));
      }
    }
  return sup;
}

ScorePlane nuisance_score_plane(const ObservedTables& t, const NuisanceDirection& dir) {
  const int L = t.num_levels(), N = t.num_cells();
  switch (dir.kind) {
    case NuisanceDirection::Kind::Lambda: {
      Eigen::MatrixXd a(L, N);
      for (int z = 0; z < L; ++z)
        for (int k = 0; k < N; ++k) a(z, k) = dir.a(t.grid.nodes[k]);
      const ScorePlane s = martingale_integral(t, a);
      return s;
    }
    case NuisanceDirection::Kind::LambdaG: {
      Eigen::MatrixXd bmat(L, N);
      for (int z = 0; z < L; ++z)
        for (int k = 0; k < N; ++k) bmat(z, k) = dir.b(t.grid.nodes[k], z);
      const Eigen::MatrixXd acc = compensator_cumsum(t, bmat, t.dlamG);
      return {-acc, bmat - acc};
    }
    case NuisanceDirection::Kind::Pmf: {
      ScorePlane out;
      out.fail.resize(L, N);
      out.cens.resize(L, N);
      for (int z = 0; z < L; ++z) {
        out.fail.row(z).setConstant(dir.c[z]);
        out.cens.row(z).setConstant(dir.c[z]);
      }
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

double plane_mean(const ObservedTables& t, const ScorePlane& b) {
  double s = 0.0;
  for (int z = 0; z < t.num_levels(); ++z)
    for (int k = 0; k < t.num_cells(); ++k)
      s += t.model.h[z] * (b.fail(z, k) * t.q1(z, k) + b.cens(z, k) * t.q2(z, k));
  return s;
}

double plane_inner(const ObservedTables& t, const ScorePlane& a, const ScorePlane& b) {
  double s = 0.0;
  for (int z = 0; z < t.num_levels(); ++z)
    for (int k = 0; k < t.num_cells(); ++k)
      s += t.model.h[z] * (a.fail(z, k) * b.fail(z, k) * t.q1(z, k) +
                           a.cens(z, k) * b.cens(z, k) * t.q2(z, k));
  return s;
}

double failure_inner(const ObservedTables& t, const Eigen::MatrixXd& u, const Eigen::MatrixXd& w) {
  double s = 0.0;
  for (int z = 0; z < t.num_levels(); ++z)
    for (int k = 0; k < t.num_cells(); ++k)
      s += t.model.h[z] * u(z, k) * w(z, k) * t.q1(z, k);
  return s;
}

}  // namespace coxbound
