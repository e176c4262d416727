#pragma once

#include "coxbound/fields.hpp"
#include "coxbound/tables.hpp"

namespace coxbound {

// Operator calculus on the grouped observed law.  All maps below are exact
// finite-law computations, so the structural identities (the failure residual
// inverting the martingale integral, idempotence of the failure centering,
// the three-part decomposition, and the gram/gram-inverse pair) hold to
// machine precision on any ObservedTables.
//
// Single-plane versions; vector-valued inputs are handled componentwise by
// the solver.

// integral of u against the failure martingale:
//   delta * u(Y, Z) - sum of u * discrete failure hazard over cells up to Y
ScorePlane martingale_integral(const ObservedTables& t, const Eigen::MatrixXd& u);

// failure-branch value minus the conditional mean over the strict future
Eigen::MatrixXd failure_residual(const ObservedTables& t, const ScorePlane& b);

// censoring-branch value minus the conditional mean over the strict future
Eigen::MatrixXd censoring_residual(const ObservedTables& t, const ScorePlane& b);

// s minus its conditional mean given (failure time, failure); zero outside
// the failure support
Eigen::MatrixXd center_at_failures(const ObservedTables& t, const Eigen::MatrixXd& s);

// martingale integral of the failure-centered function (the full-data
// orthogonal score attached to s)
ScorePlane centered_martingale_integral(const ObservedTables& t, const Eigen::MatrixXd& s);

// inverse-odds residual of the martingale integral:
//   ((1 - pi)/pi) * (Du - E[Du | phase-1 statistic])  on both branches
ScorePlane missingness_residual(const ObservedTables& t, const Eigen::MatrixXd& u);

// composition: center_at_failures . failure_residual . missingness_residual
Eigen::MatrixXd apply_equation_operator(const ObservedTables& t, const Eigen::MatrixXd& u);

// tail form of the same information operator (four conditional-mean terms)
Eigen::MatrixXd apply_tail_operator(const ObservedTables& t, const Eigen::MatrixXd& u);

// observed-data gram operator of the coarsening score map and its inverse:
//   gram(a)     = pi a + (1 - pi) E[a | phase 1]
//   gram_inv(a) = a / pi - ((1 - pi)/pi) E[a | phase 1]
ScorePlane apply_observed_gram(const ObservedTables& t, const ScorePlane& a);
ScorePlane apply_observed_gram_inverse(const ObservedTables& t, const ScorePlane& a);

// sup-norm (over mass-carrying points) of
//   b - [ D(failure residual) + censoring-martingale integral of the
//         censoring residual + E[b | Z] ]
double decomposition_residual(const ObservedTables& t, const ScorePlane& b);

// score of a nuisance direction on the grouped law (both branches); uses the
// grouped hazards, so martingale means vanish exactly
ScorePlane nuisance_score_plane(const ObservedTables& t, const NuisanceDirection& dir);

// expectation of a plane under the grouped observed law
double plane_mean(const ObservedTables& t, const ScorePlane& b);

// inner product of two planes under the grouped observed law
double plane_inner(const ObservedTables& t, const ScorePlane& a, const ScorePlane& b);

// inner product of two grid functions in L2 of the failure subdistribution
double failure_inner(const ObservedTables& t, const Eigen::MatrixXd& u, const Eigen::MatrixXd& w);

}  // namespace coxbound
