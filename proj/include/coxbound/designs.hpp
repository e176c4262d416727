#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coxbound/model.hpp"
#include "coxbound/solver.hpp"

namespace coxbound {

// baseline hazard rate reproducing P(T <= 1 | baseline) = p0
inline double rate_from_baseline_prob(double p0) { return -std::log1p(-p0); }

// Case-cohort study: exponential failure, single binary covariate, everyone
// censored at t = 1, all failures sampled, nonfailures sampled at pi0.
struct CaseCohortSpec {
  double p0 = 0.1;     // P(T <= 1 | Z = 0)
  double theta = 0.0;  // log relative risk
  double h1 = 0.5;     // P(Z = 1)
  double pi0 = 0.1;    // nonfailure sampling fraction

  double lambda() const { return rate_from_baseline_prob(p0); }
  void validate() const;
};

// Exposure-stratified case-cohort study: binary exposure X with binary
// surrogate V (sensitivity 1 - alpha, specificity 1 - beta), coefficient on X
// only, nonfailures sampled at pi0 / pi1 by V stratum.
struct StratifiedSpec {
  double lambda = 0.01;  // exponential failure rate at X = 0
  double theta = 0.0;
  double px0 = 0.9;  // P(X = 0)
  double alpha = 0.1, beta = 0.1;
  double pi0 = 0.1, pi1 = 0.1;

  static StratifiedSpec with_p0(double p0, double theta, double px0, double alpha, double beta,
                                double pi0, double pi1) {
    StratifiedSpec s{rate_from_baseline_prob(p0), theta, px0, alpha, beta, pi0, pi1};
    return s;
  }
  void validate() const;
  // joint pmf over levels ordered (x=0,v=0), (0,1), (1,0), (1,1)
  Eigen::Vector4d joint_pmf() const;
  double prob_fail() const;                 // P(Delta = 1)
  Eigen::Vector2d nonfailure_by_v() const;  // P(Delta = 0, V = v)
};

struct BuiltDesign {
  FullDataModel model;
  MissingnessDesign design;
  DesignVariant variant;
};

BuiltDesign case_cohort_model(const CaseCohortSpec& spec,
                              Phase1Scope phase1 = Phase1Scope::YDeltaV);
BuiltDesign stratified_model(const StratifiedSpec& spec);

// Asymptotic variance of the subcohort pseudo-likelihood estimator for the
// case-cohort design (independent Bernoulli subcohort), evaluated by
// high-accuracy quadrature of its influence function.
double sp_asymptotic_variance(const CaseCohortSpec& spec);

enum class AllocationRule { Proportional, EqualExpectedCounts, SubcohortEqualsExpectedCases };

AllocationRule allocation_rule_from_string(const std::string& s);
std::string to_string(AllocationRule r);

// Split sampling effort across the two nonfailure strata.
//  - Proportional: both fractions equal the total fraction.
//  - EqualExpectedCounts: equal expected sampled counts per stratum at the
//    given total fraction of nonfailures, capped at 1 with redistribution.
//  - SubcohortEqualsExpectedCases: total sampled-nonfailure mass set to
//    P(Delta = 1) (one control per expected case), then equal counts.
// strata_probs = (P(Delta=0, V=0), P(Delta=0, V=1)); prob_fail = P(Delta=1).
std::pair<double, double> allocate_stratified(double total_nonfailure_fraction,
                                              const Eigen::Vector2d& strata_probs,
                                              double prob_fail, AllocationRule rule);

// ---- sweeps ----------------------------------------------------------------

struct SweepRow {
  std::vector<double> params;  // aligned with AREReport::param_names
  double I_star = 0.0, I_full = 0.0, are_ib = 0.0;
  std::optional<double> sp_var, sp_ratio;
  double residual = 0.0;
  bool converged = false;
  bool solved = false;
  std::string error;
};

struct AREReport {
  std::vector<std::string> param_names;
  std::vector<SweepRow> rows;
};

struct CaseCohortSweep {
  std::vector<double> p0{0.1};
  std::vector<double> theta{std::log(2.0)};
  std::vector<double> pi0{0.1};
  double h1 = 0.5;
  bool with_sp = true;
};

struct StratifiedSweep {
  std::vector<double> p0{0.1};
  std::vector<double> sens{0.5, 0.7, 0.9};  // 1 - alpha
  std::vector<double> spec{0.5, 0.7, 0.9};  // 1 - beta
  double theta = std::log(2.0);
  double px0 = 0.9;
  double total_fraction = 0.1;
  AllocationRule allocation = AllocationRule::Proportional;
};

AREReport run_sweep(const CaseCohortSweep& sweep, const GridOptions& grid, int threads);
AREReport run_sweep(const StratifiedSweep& sweep, const GridOptions& grid, int threads);

// Stratified-design comparison table: ARE of the information bound over a
// sensitivity/specificity grid, with published pseudo-likelihood AREs pinned
// as constants and the ratio column recomputed.
struct ComparisonTableOptions {
  std::vector<double> theta_set{0.0, std::log(1.5), std::log(2.0), std::log(3.0), std::log(5.0)};
  double lambda = 0.01;
  std::vector<double> px1{0.05, 0.50};
  std::vector<double> levels{0.5, 0.7, 0.9};  // sensitivity = specificity grid values
  AllocationRule allocation = AllocationRule::SubcohortEqualsExpectedCases;
};

struct ComparisonCell {
  double px1, sens, spec, theta;
  double are_ib = 0.0;           // percent
  std::optional<double> are_pl;  // percent, published constant
  std::optional<double> ratio;   // 100 * are_pl / are_ib
  bool converged = false;
};

// published pseudo-likelihood AREs (percent) for the comparison table;
// returns nullopt for cells without a published value
std::optional<double> published_pl_are(double px1, double sens, double spec);

std::vector<ComparisonCell> run_comparison_table(const ComparisonTableOptions& opts,
                                                 const GridOptions& grid, int threads);

// deterministic parallel loop over [0, n) with a fixed work assignment
void parallel_for(int n, int threads, const std::function<void(int)>& body);

}  // namespace coxbound
