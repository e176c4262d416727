#pragma once

#include <vector>

#include "coxbound/assembly.hpp"
#include "coxbound/fields.hpp"
#include "coxbound/tables.hpp"

namespace coxbound {

struct SolveOptions {
  double condition_ceiling = 1e12;
};

// Solved efficient-score problem on one grid.  The information matrix is
// filled by information_bound.
struct EfficientScoreSolution {
  GridFunction u_star;        // per component: levels x cells, zero off support
  Eigen::MatrixXd f_star;     // centering function, components x cells
  Eigen::MatrixXd I_star;     // filled by information_bound
  double residual_norm = 0.0;           // matrix-free residual of the solved equation
  double condition_estimate = 0.0;      // 1-norm estimate of cond(matrix)
  double centering_violation = 0.0;     // max |E[u* | Y, Delta = 1]| over support
  int levels = 0, cells = 0;
  DesignVariant variant;
  SolveRoute route = SolveRoute::Equation;
  bool has_information = false;
};

// Dense partial-pivot solve with one step of iterative refinement.  Throws
// NumericError when the estimated condition number exceeds the ceiling.
EfficientScoreSolution solve_ustar(const ObservedTables& t, const LinearSystem& sys,
                                   const SolveOptions& opts = {});

// E[Delta (c - E[c|Y, Delta=1])^2] with the failure posterior evaluated from
// the continuous densities at cell representatives and exact cell masses.
Eigen::MatrixXd fulldata_information(const ObservedTables& t);

// Continuum-faithful evaluation of the efficient score attached to a solved
// u*: the grid values are interpolated piecewise-linearly, the compensator
// integral is the exact integral of the interpolant, and conditional means
// use the continuous densities.  This is the evaluator used for the
// information integrand and for Monte Carlo observations.
class ScoreEvaluator {
 public:
  ScoreEvaluator(const ObservedTables& t, const GridFunction& u_star);

  int dim() const { return static_cast<int>(ys_.size()); }
  const ObservedTables& tables() const { return *t_; }

  double u_value(int comp, int level, double y) const;
  double compensator(int comp, int level, double y) const;  // int_0^y u lambda e^eta
  // martingale-integral value at (y, delta, level)
  Eigen::VectorXd field_value(double y, int delta, int level) const;
  // conditional mean of the field given the phase-1 statistic
  Eigen::VectorXd phase1_mean(double y, int delta, int group) const;
  // efficient score at an observation; level is ignored when r = 0
  Eigen::VectorXd score(double y, int delta, int r, int level, int group) const;

 private:
  const ObservedTables* t_;
  std::vector<double> xs_;                          // support representatives
  std::vector<std::vector<Eigen::VectorXd>> ys_;    // [comp][level] values at xs_
  std::vector<double> knots_;                       // 0, xs_, hazard breaks, tau
  std::vector<std::vector<Eigen::VectorXd>> cum_;   // [comp][level] compensator at knots_
  std::vector<Eigen::MatrixXd> pooled_;             // [comp] (delta x group) means, DeltaV scope
};

// Fills sol.I_star with E[ pi (zeta/pi - ((1-pi)/pi) e)^{x2} + (1-pi) e^{x2} ],
// integrated with exact cell masses and continuum-faithful field values.
Eigen::MatrixXd information_bound(EfficientScoreSolution& sol, const ObservedTables& t);

struct GridOptions {
  int initial_intervals = 400;
  bool refine = true;
  double rel_tol = 1e-4;     // stop when the relative change of I* drops below
  int max_intervals = 6400;
};

struct BoundTrailEntry {
  int n_intervals = 0;
  Eigen::MatrixXd I_star, I_full;
  double residual = 0.0;
  double condition = 0.0;
};

struct BoundResult {
  EfficientScoreSolution solution;  // on the finest grid
  ObservedTables tables;            // finest grid tables
  Eigen::MatrixXd I_full;
  std::vector<BoundTrailEntry> trail;
  bool converged = false;
  // second-order Richardson extrapolation from the last two trail entries
  Eigen::MatrixXd I_star_extrapolated, I_full_extrapolated;

  double are_scalar() const { return solution.I_star(0, 0) / I_full(0, 0); }
  double are_scalar_extrapolated() const {
    return I_star_extrapolated(0, 0) / I_full_extrapolated(0, 0);
  }
};

// Solve with grid refinement (doubling) until the information settles or the
// interval ceiling is reached.
BoundResult solve_bound(const FullDataModel& model, const MissingnessDesign& design,
                        const DesignVariant& variant, const GridOptions& grid_opts = {},
                        SolveRoute route = SolveRoute::Equation, const SolveOptions& opts = {});

// matrix-free residual of a solution against its route's equation
double equation_residual(const ObservedTables& t, const GridFunction& u,
                         const Eigen::MatrixXd& rhs_stacked, SolveRoute route);

}  // namespace coxbound
