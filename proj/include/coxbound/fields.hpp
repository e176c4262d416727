#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace coxbound {

// Real function on the failure support of the grid: one value per
// (covariate level, cell).  Vector-valued functions hold one plane per
// coefficient component; every operator acts componentwise.
struct GridFunction {
  std::vector<Eigen::MatrixXd> comp;

  GridFunction() = default;
  explicit GridFunction(Eigen::MatrixXd plane) { comp.push_back(std::move(plane)); }

  int dim() const { return static_cast<int>(comp.size()); }
  Eigen::MatrixXd& operator[](int i) { return comp[i]; }
  const Eigen::MatrixXd& operator[](int i) const { return comp[i]; }
};

// One component of a score-type function of (Y, Delta, Z): its values on the
// failure branch (delta = 1) and the censoring branch (delta = 0), both
// indexed by (level, cell).  Entries at zero-mass points are carried but
// never weighted.
struct ScorePlane {
  Eigen::MatrixXd fail, cens;

  ScorePlane() = default;
  ScorePlane(Eigen::MatrixXd f, Eigen::MatrixXd c) : fail(std::move(f)), cens(std::move(c)) {}
};

struct ScoreField {
  std::vector<ScorePlane> comp;

  ScoreField() = default;
  explicit ScoreField(ScorePlane plane) { comp.push_back(std::move(plane)); }

  int dim() const { return static_cast<int>(comp.size()); }
  ScorePlane& operator[](int i) { return comp[i]; }
  const ScorePlane& operator[](int i) const { return comp[i]; }
};

// One-dimensional nuisance perturbation of the full-data model: a direction
// for the baseline hazard, the censoring hazard, or the covariate pmf.
struct NuisanceDirection {
  enum class Kind { Lambda, LambdaG, Pmf };
  Kind kind = Kind::Lambda;
  std::string name;
  std::function<double(double)> a;              // Lambda: t -> a(t)
  std::function<double(double, int)> b;         // LambdaG: (t, level) -> b(t, z)
  std::vector<double> c;                        // Pmf: per level, mean zero under h

  static NuisanceDirection baseline(std::string name, std::function<double(double)> a) {
    NuisanceDirection d;
    d.kind = Kind::Lambda;
    d.name = std::move(name);
    d.a = std::move(a);
    return d;
  }
  static NuisanceDirection censoring(std::string name, std::function<double(double, int)> b) {
    NuisanceDirection d;
    d.kind = Kind::LambdaG;
    d.name = std::move(name);
    d.b = std::move(b);
    return d;
  }
  static NuisanceDirection pmf(std::string name, std::vector<double> c) {
    NuisanceDirection d;
    d.kind = Kind::Pmf;
    d.name = std::move(name);
    d.c = std::move(c);
    return d;
  }
};

}  // namespace coxbound
