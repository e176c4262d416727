#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "coxbound/grid.hpp"
#include "coxbound/model.hpp"

namespace coxbound {

// Observed-data law (Y, Delta, Z) discretized onto the cells of a TimeGrid.
//
// Cell masses are exact integrals of the continuous subdistributions, so the
// grid law is the continuous law grouped by cell: survivors at cell
// boundaries are exact and the total mass per level is 1 up to roundoff.
// Conditional expectations computed from these tables are exact expectations
// under the grouped law; operator identities built on them hold to machine
// precision, while grouped quantities approach their continuous counterparts
// at second order in the cell width.
//
// Matrix layout: rows = covariate levels, cols = cells.
struct ObservedTables {
  FullDataModel model;
  MissingnessDesign design;
  TimeGrid grid;

  Eigen::MatrixXd q1;       // P(Y in cell, Delta = 1 | level), exact
  Eigen::MatrixXd q2;       // P(Y in cell, Delta = 0 | level), exact
  Eigen::MatrixXd s_after;  // P(Y in later cell | level): survivor past the cell
  Eigen::MatrixXd dlam;     // discrete failure hazard  q1 / s_before
  Eigen::MatrixXd dlamG;    // discrete censoring hazard q2 / s_before
  Eigen::VectorXd marg_fail;             // sum_z q1(z,k) h(z)
  std::vector<int> support;              // cells with positive marginal failure mass
  std::vector<char> in_support;          // indicator per cell

  // phase-1 v-grouping of the covariate levels
  std::vector<int> level_group;              // level -> group
  std::vector<std::vector<int>> groups;      // group -> members
  Eigen::MatrixXd pi_fail, pi_cens;          // pi at (cell, level), via the level's group

  int num_levels() const { return static_cast<int>(model.levels.size()); }
  int num_cells() const { return grid.num_cells(); }
  double s_before(int level, int cell) const {
    return cell == 0 ? total_mass_[level] : s_after(level, cell - 1);
  }
  double total_mass(int level) const { return total_mass_[level]; }

  // ---- analytic (continuous-law) evaluators --------------------------------

  // failure subdensity w1(t | level) = f(t|z) P(C >= t | z)
  double w1_density(double t, int level, bool from_left = true) const;
  // censoring subdensity w2(t | level) (absolutely continuous part)
  double w2_density(double t, int level, bool from_left = true) const;
  // censored atom contribution P(Y = t, Delta = 0 | level) at an atom time
  double w2_atom(double t, int level) const;
  // P(Y > t | level) = (1 - F)(1 - G), right-continuous
  double survivor(double t, int level) const;
  // P(Y <= t, Delta = 1 | level): exact cumulative failure subdistribution
  double w1_cum(double t, int level) const;

  Eigen::VectorXd total_mass_;  // per level; equals 1 up to roundoff
};

ObservedTables build_observed_tables(const FullDataModel& model, const MissingnessDesign& design,
                                     const TimeGrid& grid);

// convenience: uniform grid with n_intervals interval cells
ObservedTables build_observed_tables(const FullDataModel& model, const MissingnessDesign& design,
                                     int n_intervals);

// ---- conditional-expectation kernels (grouped law, exact) -----------------

// E[g(Y, Z) | Y = cell, Delta = 1] for g given per (level, cell).
// Cells outside the failure support get fill_value.
Eigen::VectorXd cond_mean_given_failure(const ObservedTables& t, const Eigen::MatrixXd& g,
                                        double fill_value = 0.0);

// E[g(Y', Delta, Z) | Y' > cell, Z = level] for a field given as
// (values at failure, values at censoring); returns levels x cells.
// The empty future past the last support point yields 0.
Eigen::MatrixXd cond_mean_future(const ObservedTables& t, const Eigen::MatrixXd& g_fail,
                                 const Eigen::MatrixXd& g_cens);

// E[g(Y, Delta, Z) | phase-1 statistic] for a field given per (level, cell)
// and delta branch.  Returns the conditional mean mapped back onto
// (level, cell) for the requested delta branch, so entries are constant
// across levels in the same group (and across cells when Y is not observed
// at phase 1).  Zero-probability conditioning events yield 0.
Eigen::MatrixXd cond_mean_phase1(const ObservedTables& t, const Eigen::MatrixXd& g_fail,
                                 const Eigen::MatrixXd& g_cens, int delta);

}  // namespace coxbound
