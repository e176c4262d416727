#pragma once

#include <vector>

#include "coxbound/model.hpp"

namespace coxbound {

// Partition of (0, tau] into open interval cells and singleton atom cells.
// Interval cells are represented by their midpoint, atoms by their time.
// Every model atom, hazard breakpoint, and sampling-probability breakpoint
// lands exactly on a cell boundary.
//
// nodes/weights give the quadrature view of the cells: interval cells carry
// their width, atoms carry weight zero (their masses are handled exactly).
struct TimeGrid {
  std::vector<double> edges;    // 0 = e_0 < e_1 < ... < e_M = tau
  std::vector<double> nodes;    // cell representatives, strictly increasing
  std::vector<double> weights;  // interval width, or 0 for atom cells
  std::vector<bool> is_atom;    // per cell
  std::vector<double> cell_lo, cell_hi;  // interval bounds (lo = hi for atoms)
  std::vector<double> atom_times;
  double tau = 1.0;

  int num_cells() const { return static_cast<int>(nodes.size()); }

  // cell containing time t in (0, tau]; atoms match exactly
  int locate(double t) const;

  void validate() const;
};

// Uniform grid with n_intervals interval cells plus exact cells for every
// atom/breakpoint of the model and design.
TimeGrid make_grid(const FullDataModel& model, const MissingnessDesign& design, int n_intervals);

// Grid from explicit boundary edges (0 and tau are added when absent).
// Throws StructuralError when a model atom is not among the edges.
TimeGrid make_grid_from_edges(const FullDataModel& model, const MissingnessDesign& design,
                              std::vector<double> interior_edges);

}  // namespace coxbound
