#include "coxbound/tables.hpp"

#include <cmath>
#include <map>

namespace coxbound {

namespace {

std::vector<int> group_levels_by_v(const FullDataModel& model,
                                   std::vector<std::vector<int>>& groups) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> level_group(model.levels.size());
  for (std::size_t i = 0; i < model.levels.size(); ++i) {
    std::vector<double> key(model.levels[i].v.data(),
                            model.levels[i].v.data() + model.levels[i].v.size());
    auto [it, inserted] = seen.try_emplace(key, static_cast<int>(groups.size()));
    if (inserted) groups.emplace_back();
    level_group[i] = it->second;
    groups[it->second].push_back(static_cast<int>(i));
  }
  return level_group;
}

}  // namespace

double ObservedTables::w1_density(double t, int level, bool from_left) const {
  const auto& law = model.censoring[level];
  // failures at t beat a censoring atom at t, so the censoring survivor enters
  // with its left limit
  return model.failure_density(t, level, from_left) * law.survivor_left(t);
}

double ObservedTables::w2_density(double t, int level, bool from_left) const {
  const auto& law = model.censoring[level];
  const double g = from_left ? law.hazard.rate_left(t) : law.hazard.rate_right(t);
  return g * law.survivor_left(t) * model.failure_survivor(t, level);
}

double ObservedTables::w2_atom(double t, int level) const {
  for (const auto& a : model.censoring[level].atoms)
    if (a.time == t) return model.failure_survivor(t, level) * a.mass;
  return 0.0;
}

double ObservedTables::survivor(double t, int level) const {
  return model.failure_survivor(t, level) * model.censoring[level].survivor(t);
}

double ObservedTables::w1_cum(double t, int level) const {
  double acc = 0.0;
  for (int k = 0; k < num_cells(); ++k) {
    if (grid.is_atom[k]) continue;
    if (grid.cell_hi[k] <= t) {
      acc += q1(level, k);
      continue;
    }
    if (grid.cell_lo[k] < t) {
      const double a = grid.cell_lo[k], h = t - a;
      const double rho = model.risk(level) * model.baseline.rate_right(a);
      const double g = model.censoring[level].hazard.rate_right(a);
      const double s_start = model.failure_survivor(a, level) * model.censoring[level].survivor(a);
      acc += s_start * rho * h * one_minus_exp_over((rho + g) * h);
    }
  }
  return acc;
}

ObservedTables build_observed_tables(const FullDataModel& model, const MissingnessDesign& design,
                                     const TimeGrid& grid) {
  model.validate();
  design.validate();

  ObservedTables t;
  t.model = model;
  t.design = design;
  t.grid = grid;

  const int L = t.num_levels();
  const int N = grid.num_cells();
  t.q1.setZero(L, N);
  t.q2.setZero(L, N);

  for (int z = 0; z < L; ++z) {
    const auto& law = model.censoring[z];
    const double risk = model.risk(z);
    for (int k = 0; k < N; ++k) {
      if (grid.is_atom[k]) {
        // failures are absolutely continuous; only censoring mass sits on atoms
        t.q2(z, k) = t.w2_atom(grid.nodes[k], z);
        continue;
      }
      const double a = grid.cell_lo[k], h = grid.cell_hi[k] - grid.cell_lo[k];
      const double rho = risk * model.baseline.rate_right(a);
      const double g = law.hazard.rate_right(a);
      const double s_start = model.failure_survivor(a, z) * law.survivor(a);
      const double shape = h * one_minus_exp_over((rho + g) * h);
      t.q1(z, k) = s_start * rho * shape;
      t.q2(z, k) = s_start * g * shape;
    }
  }

  if ((t.q1.array() < 0.0).any() || (t.q2.array() < 0.0).any())
    throw ValidationError("observed tables: negative subdistribution mass");

  // survivors by backward accumulation so the law is exhausted exactly
  t.s_after.setZero(L, N);
  t.total_mass_.resize(L);
  for (int z = 0; z < L; ++z) {
    double acc = 0.0;
    for (int k = N - 1; k >= 0; --k) {
      t.s_after(z, k) = acc;
      acc += t.q1(z, k) + t.q2(z, k);
    }
    t.total_mass_[z] = acc;
    if (std::abs(acc - 1.0) > 1e-10)
      throw ValidationError("observed tables: conditional mass differs from 1 by " +
                            std::to_string(acc - 1.0));
  }

  // survivor product identity at cell boundaries
  for (int z = 0; z < L; ++z) {
    for (int k = 0; k < N; ++k) {
      const double boundary = grid.cell_hi[k];
      const bool atom_follows = k + 1 < N && grid.is_atom[k + 1];
      const double analytic =
          (grid.is_atom[k] || !atom_follows)
              ? t.survivor(boundary, z)
              : model.failure_survivor(boundary, z) * model.censoring[z].survivor_left(boundary);
      if (std::abs(t.s_after(z, k) - analytic) > 1e-12)
        throw ValidationError("observed tables: survivor identity violated at a cell boundary");
    }
  }

  t.dlam.setZero(L, N);
  t.dlamG.setZero(L, N);
  for (int z = 0; z < L; ++z)
    for (int k = 0; k < N; ++k) {
      const double sb = t.s_before(z, k);
      if (sb > 0.0) {
        t.dlam(z, k) = t.q1(z, k) / sb;
        t.dlamG(z, k) = t.q2(z, k) / sb;
      }
    }

  t.marg_fail = t.q1.transpose() * model.h;
  t.in_support.assign(N, 0);
  for (int k = 0; k < N; ++k)
    if (t.marg_fail[k] > 0.0) {
      t.support.push_back(k);
      t.in_support[k] = 1;
    }

  t.level_group = group_levels_by_v(model, t.groups);
  if (design.num_groups() != static_cast<int>(t.groups.size()))
    throw StructuralError("design group count does not match the model's distinct v values");

  t.pi_fail.resize(L, N);
  t.pi_cens.resize(L, N);
  for (int z = 0; z < L; ++z)
    for (int k = 0; k < N; ++k) {
      t.pi_fail(z, k) = design.pi(grid.nodes[k], 1, t.level_group[z]);
      t.pi_cens(z, k) = design.pi(grid.nodes[k], 0, t.level_group[z]);
    }

  return t;
}

ObservedTables build_observed_tables(const FullDataModel& model, const MissingnessDesign& design,
                                     int n_intervals) {
  return build_observed_tables(model, design, make_grid(model, design, n_intervals));
}

Eigen::VectorXd cond_mean_given_failure(const ObservedTables& t, const Eigen::MatrixXd& g,
                                        double fill_value) {
  const int N = t.num_cells();
  Eigen::VectorXd out(N);
  for (int k = 0; k < N; ++k) {
    if (!t.in_support[k]) {
      out[k] = fill_value;
      continue;
    }
    double num = 0.0;
    for (int z = 0; z < t.num_levels(); ++z) num += g(z, k) * t.q1(z, k) * t.model.h[z];
    out[k] = num / t.marg_fail[k];
  }
  return out;
}

Eigen::MatrixXd cond_mean_future(const ObservedTables& t, const Eigen::MatrixXd& g_fail,
                                 const Eigen::MatrixXd& g_cens) {
  const int L = t.num_levels(), N = t.num_cells();
  Eigen::MatrixXd out(L, N);
  for (int z = 0; z < L; ++z) {
    double tail = 0.0;
    for (int k = N - 1; k >= 0; --k) {
      out(z, k) = t.s_after(z, k) > 0.0 ? tail / t.s_after(z, k) : 0.0;
      tail += g_fail(z, k) * t.q1(z, k) + g_cens(z, k) * t.q2(z, k);
    }
  }
  return out;
}

Eigen::MatrixXd cond_mean_phase1(const ObservedTables& t, const Eigen::MatrixXd& g_fail,
                                 const Eigen::MatrixXd& g_cens, int delta) {
  const int L = t.num_levels(), N = t.num_cells();
  const Eigen::MatrixXd& g = delta == 1 ? g_fail : g_cens;
  const Eigen::MatrixXd& q = delta == 1 ? t.q1 : t.q2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(L, N);
  if (t.design.scope == Phase1Scope::YDeltaV) {
    for (const auto& members : t.groups) {
      for (int k = 0; k < N; ++k) {
        double num = 0.0, den = 0.0;
        for (int z : members) {
          num += g(z, k) * q(z, k) * t.model.h[z];
          den += q(z, k) * t.model.h[z];
        }
        const double value = den > 0.0 ? num / den : 0.0;
        for (int z : members) out(z, k) = value;
      }
    }
  } else {
    for (const auto& members : t.groups) {
      double num = 0.0, den = 0.0;
      for (int z : members)
        for (int k = 0; k < N; ++k) {
          num += g(z, k) * q(z, k) * t.model.h[z];
          den += q(z, k) * t.model.h[z];
        }
      const double value = den > 0.0 ? num / den : 0.0;
      for (int z : members) out.row(z).setConstant(value);
    }
  }
  return out;
}

}  // namespace coxbound
