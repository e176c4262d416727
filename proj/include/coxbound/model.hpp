#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "coxbound/errors.hpp"
#include "coxbound/piecewise.hpp"

namespace coxbound {

// One point of the finite covariate support.  x holds the expensive exposure
// components (withheld when unsampled), v the always-observed surrogate
// components (possibly empty).
struct CovariateLevel {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  int index = -1;
};

// Does the regression coefficient multiply the full covariate (x, v) or only
// the exposure x?
enum class CoefficientScope { FullZ, XOnly };

// Which statistic is observed at phase 1 (and may drive the sampling
// probability): the full (Y, Delta, V) or only (Delta, V).
enum class Phase1Scope { YDeltaV, DeltaV };

// Complete-data proportional hazards law on (0, tau]: failure hazard
// exp(theta' c(z)) * baseline(t) with c(z) the coefficient covariate, censoring
// per level as atoms + piecewise-constant hazard, covariate pmf h.
// Failure and censoring times are conditionally independent given the level.
struct FullDataModel {
  std::vector<CovariateLevel> levels;
  Eigen::VectorXd h;         // pmf over levels
  Eigen::VectorXd theta;     // regression coefficient, dim = coefficient covariate dim
  CoefficientScope scope = CoefficientScope::FullZ;
  PiecewiseRate baseline;    // failure hazard at covariate zero
  std::vector<CensoringLaw> censoring;  // one law per level
  double tau = 1.0;

  int num_levels() const { return static_cast<int>(levels.size()); }
  int coef_dim() const { return static_cast<int>(theta.size()); }

  // covariate vector the coefficient multiplies (also the score covariate)
  Eigen::VectorXd coef_covariate(int level) const {
    const auto& lv = levels[level];
    if (scope == CoefficientScope::XOnly) return lv.x;
    Eigen::VectorXd z(lv.x.size() + lv.v.size());
    z << lv.x, lv.v;
    return z;
  }

  double log_risk(int level) const { return theta.dot(coef_covariate(level)); }
  double risk(int level) const { return std::exp(log_risk(level)); }

  // conditional failure survivor P(T > t | level)
  double failure_survivor(double t, int level) const {
    return std::exp(-risk(level) * baseline.cum(t));
  }
  // conditional failure density f(t | level)
  double failure_density(double t, int level, bool from_left = true) const {
    const double rate = from_left ? baseline.rate_left(t) : baseline.rate_right(t);
    return risk(level) * rate * failure_survivor(t, level);
  }

  void validate() const {
    if (levels.empty()) throw ValidationError("model: empty covariate support");
    if (h.size() != num_levels()) throw ValidationError("model: pmf size != number of levels");
    if (std::abs(h.sum() - 1.0) > 1e-12) throw ValidationError("model: covariate pmf must sum to 1");
    for (int i = 0; i < h.size(); ++i)
      if (!(h[i] >= 0.0)) throw ValidationError("model: negative covariate mass");
    if (!(tau > 0.0)) throw ValidationError("model: tau must be positive");
    baseline.validate();
    if (static_cast<int>(censoring.size()) != num_levels())
      throw ValidationError("model: need one censoring law per level");
    for (const auto& law : censoring) law.validate(tau);
    const Eigen::Index dx = levels[0].x.size(), dv = levels[0].v.size();
    for (const auto& lv : levels)
      if (lv.x.size() != dx || lv.v.size() != dv)
        throw ValidationError("model: inconsistent covariate dimensions across levels");
    const Eigen::Index want = scope == CoefficientScope::XOnly ? dx : dx + dv;
    if (theta.size() != want)
      throw ValidationError("model: theta dimension does not match coefficient scope");
  }
};

// Phase-2 sampling probabilities pi(t, delta, v-group), piecewise constant in
// t, bounded below by the positive floor sigma.  The v-group is the index of
// the level's v value among the distinct v values of a model (computed by the
// caller; see ObservedTables).  Under Phase1Scope::DeltaV the probability may
// not depend on t.
struct MissingnessDesign {
  Phase1Scope scope = Phase1Scope::YDeltaV;
  double sigma = 1e-6;
  std::vector<double> time_breaks;  // interior breakpoints of the time buckets
  // prob[delta][group][bucket], bucket count = time_breaks.size() + 1
  std::vector<std::vector<std::vector<double>>> prob;

  int num_groups() const { return prob.empty() ? 0 : static_cast<int>(prob[0].size()); }
  int num_buckets() const { return static_cast<int>(time_breaks.size()) + 1; }

  // constant-in-time design: probability by (delta, group)
  static MissingnessDesign by_delta_group(const std::vector<std::vector<double>>& p_by_delta_group,
                                          Phase1Scope scope = Phase1Scope::YDeltaV,
                                          double sigma = 1e-6) {
    MissingnessDesign d;
    d.scope = scope;
    d.sigma = sigma;
    d.prob.resize(2);
    for (int delta = 0; delta < 2; ++delta) {
      d.prob[delta].resize(p_by_delta_group[delta].size());
      for (std::size_t g = 0; g < p_by_delta_group[delta].size(); ++g)
        d.prob[delta][g] = {p_by_delta_group[delta][g]};
    }
    d.validate();
    return d;
  }

  int bucket(double t) const {
    int k = 0;
    while (k < static_cast<int>(time_breaks.size()) && t > time_breaks[k]) ++k;
    return k;
  }

  double pi(double t, int delta, int group) const {
    return prob[delta][group][bucket(t)];
  }

  void validate() const {
    if (!(sigma > 0.0)) throw ValidationError("design: sigma floor must be positive");
    if (prob.size() != 2) throw ValidationError("design: need probabilities for delta = 0 and 1");
    if (prob[0].size() != prob[1].size())
      throw ValidationError("design: group counts differ between delta = 0 and 1");
    for (const auto& by_group : prob)
      for (const auto& row : by_group) {
        if (static_cast<int>(row.size()) != num_buckets())
          throw ValidationError("design: probability row does not match time buckets");
        for (double p : row) {
          if (!(p >= sigma))
            throw ValidationError("design: sampling probability below the floor sigma");
          if (p > 1.0) throw ValidationError("design: sampling probability above 1");
        }
      }
    if (scope == Phase1Scope::DeltaV && !time_breaks.empty())
      throw StructuralError("design: time-dependent pi is not allowed when phase 1 observes only (Delta, V)");
  }

  bool is_full_sampling() const {
    for (const auto& by_group : prob)
      for (const auto& row : by_group)
        for (double p : row)
          if (p != 1.0) return false;
    return true;
  }
};

// The four solvable configurations: coefficient on Z or X, with Y observed or
// not at phase 1.
struct DesignVariant {
  CoefficientScope coefficient = CoefficientScope::FullZ;
  Phase1Scope phase1 = Phase1Scope::YDeltaV;

  std::string name() const {
    std::string s = phase1 == Phase1Scope::YDeltaV ? "y-observed" : "y-missing";
    s += coefficient == CoefficientScope::FullZ ? "/z-coefficient" : "/x-coefficient";
    return s;
  }

  void check_consistent(const FullDataModel& model, const MissingnessDesign& design) const {
    if (model.scope != coefficient)
      throw StructuralError("variant/coefficient scope mismatch with model");
    if (design.scope != phase1)
      throw StructuralError("variant/phase-1 scope mismatch with design");
  }
};

}  // namespace coxbound
