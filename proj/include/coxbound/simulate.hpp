#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "coxbound/designs.hpp"
#include "coxbound/fields.hpp"
#include "coxbound/rng.hpp"
#include "coxbound/solver.hpp"
#include "coxbound/tables.hpp"

namespace coxbound {

// One observed record.  level is the covariate support index when the
// exposure was sampled and -1 otherwise; group (always observed) identifies
// the phase-1 surrogate value.
struct Observation {
  double y = 0.0;
  int delta = 0;
  int r = 1;
  int level = -1;
  int group = 0;
};

// Draw n observations from the observed-data law; bit-deterministic given
// the seed (one stream, fixed draw order).
std::vector<Observation> simulate(const ObservedTables& t, int n, SeedSpec seed);

// sample a censoring time by inverting the mixed atom + hazard law
double sample_censoring(const CensoringLaw& law, double u_open);

struct MomentReport {
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd cov;
  Eigen::VectorXd var_se;  // standard error of each diagonal covariance entry
  int n = 0;
};

MomentReport empirical_moments(const std::function<Eigen::VectorXd(const Observation&)>& eval,
                               const std::vector<Observation>& data, int dim);

// Scores of nuisance directions mapped to the observed data (coarsening by
// the phase-1 statistic), for orthogonality checks against the efficient
// score.
class NuisanceScoreEvaluator {
 public:
  NuisanceScoreEvaluator(const ObservedTables& t, const NuisanceDirection& dir);
  // full-data score at (y, delta, level)
  double fulldata(double y, int delta, int level) const;
  // conditional mean of the full-data score given the phase-1 statistic
  double phase1_mean(double y, int delta, int group) const;
  // observed-data score at an observation
  double observed(const Observation& o) const;

 private:
  const ObservedTables* t_;
  NuisanceDirection dir_;
  // prefix tables of int a(t) lambda(t) dt (baseline) or per-level censoring
  std::vector<double> knots_;
  std::vector<Eigen::VectorXd> prefix_;  // per level (single row for baseline kind)
  std::vector<std::vector<std::pair<double, double>>> atom_haz_;  // per level (time, hazard)
  Eigen::MatrixXd pooled_;  // (delta x group) means for the DeltaV scope
};

struct CheckRow {
  std::string name;
  double null_value = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  bool pass = false;
};

// sample covariance of the efficient score with each direction's observed
// score, with a 4-standard-error pass band
std::vector<CheckRow> orthogonality_check(const ScoreEvaluator& score,
                                          const std::vector<NuisanceDirection>& directions,
                                          const std::vector<Observation>& data);

// Empirical variance of sqrt(n) (theta_hat - theta) for the subcohort
// pseudo-likelihood estimator over simulated cohorts.
struct SpMcResult {
  double variance = 0.0;
  double se = 0.0;
  int used = 0;
  int flagged = 0;  // replicates without a pseudo-score root
};

SpMcResult sp_estimator_variance_mc(const CaseCohortSpec& spec, int cohort_size, int replications,
                                    SeedSpec seed, int threads);

// Kolmogorov-Smirnov distance of the empirical conditional failure-time law
// against the analytic one, per level: sqrt(n_z) * sup-distance.
std::vector<CheckRow> ks_failure_checks(const ObservedTables& t,
                                        const std::vector<Observation>& data);

}  // namespace coxbound
