#include "coxbound/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace coxbound {

namespace {

// merge tolerance for coincident edges
double edge_tol(double tau) { return 1e-12 * std::max(1.0, tau); }

std::vector<double> required_edges(const FullDataModel& model, const MissingnessDesign& design) {
  std::vector<double> req;
  for (const auto& law : model.censoring) {
    for (const auto& a : law.atoms) req.push_back(a.time);
    for (double b : law.hazard.breaks)
      if (b < model.tau) req.push_back(b);
  }
  for (double b : model.baseline.breaks)
    if (b < model.tau) req.push_back(b);
  for (double b : design.time_breaks)
    if (b > 0.0 && b < model.tau) req.push_back(b);
  return req;
}

std::vector<double> atom_times_of(const FullDataModel& model) {
  std::set<double> times;
  for (const auto& law : model.censoring)
    for (const auto& a : law.atoms) times.insert(a.time);
  return {times.begin(), times.end()};
}

TimeGrid from_edge_set(const FullDataModel& model, std::vector<double> edges,
                       const std::vector<double>& atoms) {
  const double tol = edge_tol(model.tau);
  edges.push_back(0.0);
  edges.push_back(model.tau);
  std::sort(edges.begin(), edges.end());
  std::vector<double> uniq;
  for (double e : edges) {
    if (e < -tol || e > model.tau + tol) throw StructuralError("grid edge outside [0, tau]");
    if (uniq.empty() || e - uniq.back() > tol) uniq.push_back(e);
  }
  uniq.front() = 0.0;
  uniq.back() = model.tau;

  // snap edges onto atom times so atoms are represented exactly
  for (double a : atoms) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), a - tol);
    if (it == uniq.end() || std::abs(*it - a) > tol)
      throw StructuralError("grid is missing the model atom at t = " + std::to_string(a));
    *it = a;
  }

  TimeGrid g;
  g.tau = model.tau;
  g.edges = uniq;
  g.atom_times = atoms;
  std::set<double> atom_set(atoms.begin(), atoms.end());
  for (std::size_t j = 1; j < uniq.size(); ++j) {
    const double lo = uniq[j - 1], hi = uniq[j];
    g.nodes.push_back(0.5 * (lo + hi));
    g.weights.push_back(hi - lo);
    g.is_atom.push_back(false);
    g.cell_lo.push_back(lo);
    g.cell_hi.push_back(hi);
    if (atom_set.count(hi)) {
      g.nodes.push_back(hi);
      g.weights.push_back(0.0);
      g.is_atom.push_back(true);
      g.cell_lo.push_back(hi);
      g.cell_hi.push_back(hi);
    }
  }
  g.validate();
  return g;
}

}  // namespace

int TimeGrid::locate(double t) const {
  // atoms take precedence at their exact time; otherwise the interval (lo, hi]
  for (int k = 0; k < num_cells(); ++k) {
    if (is_atom[k]) {
      if (t == nodes[k]) return k;
    } else if (t > cell_lo[k] && t <= cell_hi[k]) {
      // an atom cell at cell_hi follows this interval and claims its endpoint
      if (k + 1 < num_cells() && is_atom[k + 1] && t == cell_hi[k]) return k + 1;
      return k;
    }
  }
  throw StructuralError("time outside (0, tau]");
}

void TimeGrid::validate() const {
  if (nodes.empty()) throw StructuralError("grid: no cells");
  for (std::size_t k = 1; k < nodes.size(); ++k)
    if (nodes[k] <= nodes[k - 1]) throw StructuralError("grid: nodes not strictly increasing");
  if (nodes.front() <= 0.0 || nodes.back() > tau) throw StructuralError("grid: nodes outside (0, tau]");
  double len = 0.0;
  for (double w : weights) len += w;
  if (std::abs(len - tau) > 1e-12 * std::max(1.0, tau))
    throw StructuralError("grid: interval weights do not cover (0, tau]");
}

TimeGrid make_grid(const FullDataModel& model, const MissingnessDesign& design, int n_intervals) {
  if (n_intervals < 2) throw ValidationError("grid: need at least 2 interval cells");
  std::vector<double> edges = required_edges(model, design);
  for (int j = 1; j < n_intervals; ++j)
    edges.push_back(model.tau * static_cast<double>(j) / n_intervals);
  return from_edge_set(model, std::move(edges), atom_times_of(model));
}

TimeGrid make_grid_from_edges(const FullDataModel& model, const MissingnessDesign& design,
                              std::vector<double> interior_edges) {
  // required hazard/pi breakpoints are inserted, but atoms must be supplied
  const double tol = edge_tol(model.tau);
  const auto atoms = atom_times_of(model);
  for (double a : atoms) {
    bool found = std::abs(model.tau - a) <= tol;
    for (double e : interior_edges) found = found || std::abs(e - a) <= tol;
    if (!found) throw StructuralError("grid is missing the model atom at t = " + std::to_string(a));
  }
  auto req = required_edges(model, design);
  interior_edges.insert(interior_edges.end(), req.begin(), req.end());
  return from_edge_set(model, std::move(interior_edges), atoms);
}

}  // namespace coxbound
