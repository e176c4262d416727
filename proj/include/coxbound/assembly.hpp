#pragma once

#include <Eigen/Core>

#include "coxbound/tables.hpp"

namespace coxbound {

enum class SolveRoute { Equation, Tail };

// Dense collocation system for the efficient-score equation, one shared
// matrix for all coefficient components.  Unknowns are stacked level-major:
// index(z, k) = z * num_cells + k.  Cells outside the failure support carry
// identity rows with zero right-hand side.
struct LinearSystem {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd rhs;           // one column per coefficient component
  double condition_estimate = 0.0;  // filled by the solver
  int levels = 0, cells = 0;
  SolveRoute route = SolveRoute::Equation;
  DesignVariant variant;
};

// Assemble the system for the requested route.
//  - Equation: identity plus the centered missing-information operator, with
//    the centered coefficient covariate on the right.
//  - Tail: the equivalent backward form built from the tail operator, with
//    the sampled-failure-centered covariate on the right.
// The two routes are algebraically equivalent on the grouped law and act as
// mutual oracles.
LinearSystem assemble_system(const ObservedTables& t, const DesignVariant& variant,
                             SolveRoute route);

}  // namespace coxbound
