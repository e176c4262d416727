#include "coxbound/designs.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "coxbound/quadrature.hpp"

namespace coxbound {

void CaseCohortSpec::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ValidationError("case-cohort: p0 must lie in (0, 1)");
  if (!(h1 > 0.0 && h1 < 1.0)) throw ValidationError("case-cohort: h1 must lie in (0, 1)");
  if (!(pi0 > 0.0 && pi0 <= 1.0)) throw ValidationError("case-cohort: pi0 must lie in (0, 1]");
  if (!std::isfinite(theta)) throw ValidationError("case-cohort: theta must be finite");
}

void StratifiedSpec::validate() const {
  if (!(lambda > 0.0)) throw ValidationError("stratified: lambda must be positive");
  if (!(px0 > 0.0 && px0 < 1.0)) throw ValidationError("stratified: P(X=0) must lie in (0, 1)");
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0))
    throw ValidationError("stratified: alpha and beta must lie in [0, 1]");
  if (!(pi0 > 0.0 && pi0 <= 1.0 && pi1 > 0.0 && pi1 <= 1.0))
    throw ValidationError("stratified: sampling fractions must lie in (0, 1]");
  if (!std::isfinite(theta)) throw ValidationError("stratified: theta must be finite");
}

Eigen::Vector4d StratifiedSpec::joint_pmf() const {
  // order: (x=0,v=0), (0,1), (1,0), (1,1)
  Eigen::Vector4d h;
  h << px0 * (1.0 - beta), px0 * beta, (1.0 - px0) * alpha, (1.0 - px0) * (1.0 - alpha);
  return h;
}

double StratifiedSpec::prob_fail() const {
  const double f0 = 1.0 - std::exp(-lambda);
  const double f1 = 1.0 - std::exp(-lambda * std::exp(theta));
  return px0 * f0 + (1.0 - px0) * f1;
}

Eigen::Vector2d StratifiedSpec::nonfailure_by_v() const {
  const Eigen::Vector4d h = joint_pmf();
  const double s0 = std::exp(-lambda);
  const double s1 = std::exp(-lambda * std::exp(theta));
  Eigen::Vector2d out;
  out[0] = s0 * h[0] + s1 * h[2];
  out[1] = s0 * h[1] + s1 * h[3];
  return out;
}

BuiltDesign case_cohort_model(const CaseCohortSpec& spec, Phase1Scope phase1) {
  spec.validate();
  BuiltDesign out;
  FullDataModel& m = out.model;
  m.levels.resize(2);
  for (int z = 0; z < 2; ++z) {
    m.levels[z].x = Eigen::VectorXd::Constant(1, static_cast<double>(z));
    m.levels[z].v = Eigen::VectorXd();
    m.levels[z].index = z;
  }
  m.h = Eigen::Vector2d(1.0 - spec.h1, spec.h1);
  m.theta = Eigen::VectorXd::Constant(1, spec.theta);
  m.scope = CoefficientScope::FullZ;
  m.baseline = PiecewiseRate::constant(spec.lambda());
  m.censoring = {CensoringLaw::point_mass(1.0), CensoringLaw::point_mass(1.0)};
  m.tau = 1.0;
  m.validate();

  out.design = MissingnessDesign::by_delta_group({{spec.pi0}, {1.0}}, phase1);
  out.variant = DesignVariant{CoefficientScope::FullZ, phase1};
  return out;
}

BuiltDesign stratified_model(const StratifiedSpec& spec) {
  spec.validate();
  BuiltDesign out;
  FullDataModel& m = out.model;
  m.levels.resize(4);
  int idx = 0;
  for (int x = 0; x < 2; ++x)
    for (int v = 0; v < 2; ++v) {
      m.levels[idx].x = Eigen::VectorXd::Constant(1, static_cast<double>(x));
      m.levels[idx].v = Eigen::VectorXd::Constant(1, static_cast<double>(v));
      m.levels[idx].index = idx;
      ++idx;
    }
  m.h = spec.joint_pmf();
  m.theta = Eigen::VectorXd::Constant(1, spec.theta);
  m.scope = CoefficientScope::XOnly;
  m.baseline = PiecewiseRate::constant(spec.lambda);
  m.censoring.assign(4, CensoringLaw::point_mass(1.0));
  m.tau = 1.0;
  m.validate();

  // groups ordered by first appearance of v: v=0 first, then v=1
  out.design = MissingnessDesign::by_delta_group({{spec.pi0, spec.pi1}, {1.0, 1.0}});
  out.variant = DesignVariant{CoefficientScope::XOnly, Phase1Scope::YDeltaV};
  return out;
}

double sp_asymptotic_variance(const CaseCohortSpec& spec) {
  spec.validate();
  const double lam = spec.lambda();
  const double theta = spec.theta;
  const double h1 = spec.h1, h0 = 1.0 - h1;
  const double rho0 = lam, rho1 = lam * std::exp(theta);

  const auto surv = [&](double t, int z) { return std::exp(-(z == 0 ? rho0 : rho1) * t); };
  const auto w1 = [&](double t, int z) { return (z == 0 ? rho0 : rho1) * surv(t, z); };
  // at-risk weighted mean of Z
  const auto risk_mean = [&](double t) {
    const double a0 = h0 * surv(t, 0), a1 = h1 * std::exp(theta) * surv(t, 1);
    return a1 / (a0 + a1);
  };

  const double qtol = 1e-13;
  const double info_full = integrate(
      [&](double t) {
        const double mt = risk_mean(t);
        return (0.0 - mt) * (0.0 - mt) * w1(t, 0) * h0 + (1.0 - mt) * (1.0 - mt) * w1(t, 1) * h1;
      },
      0.0, 1.0, qtol);

  // influence of the subcohort at-risk averages: c_z(y) = e^{theta z}
  // (z Lambda(y) - int_0^y mean dLambda)
  const auto cum_mean = [&](double y) { return integrate(risk_mean, 0.0, y, qtol); };
  const auto c_term = [&](double y, int z) {
    return std::exp(theta * z) * lam * (z * y - cum_mean(y));
  };
  double second = 0.0;
  for (int z = 0; z < 2; ++z) {
    const double hz = z == 0 ? h0 : h1;
    second += hz * integrate(
                       [&](double y) {
                         const double c = c_term(y, z);
                         return c * c * w1(y, z);
                       },
                       0.0, 1.0, 1e-11);
    const double c1 = c_term(1.0, z);
    second += hz * c1 * c1 * surv(1.0, z);  // censored-at-1 mass
  }

  return 1.0 / info_full +
         (1.0 - spec.pi0) / spec.pi0 * second / (info_full * info_full);
}

AllocationRule allocation_rule_from_string(const std::string& s) {
  if (s == "proportional") return AllocationRule::Proportional;
  if (s == "equal_expected_counts") return AllocationRule::EqualExpectedCounts;
  if (s == "subcohort_equals_expected_cases") return AllocationRule::SubcohortEqualsExpectedCases;
  throw ValidationError("unknown allocation rule: " + s);
}

std::string to_string(AllocationRule r) {
  switch (r) {
    case AllocationRule::Proportional: return "proportional";
    case AllocationRule::EqualExpectedCounts: return "equal_expected_counts";
    case AllocationRule::SubcohortEqualsExpectedCases: return "subcohort_equals_expected_cases";
  }
  return "?";
}

std::pair<double, double> allocate_stratified(double total_nonfailure_fraction,
                                              const Eigen::Vector2d& strata_probs,
                                              double prob_fail, AllocationRule rule) {
  const double p_nonfail = strata_probs.sum();
  if (!(p_nonfail > 0.0)) throw ValidationError("allocation: no nonfailure mass");
  if (rule == AllocationRule::Proportional) {
    if (!(total_nonfailure_fraction > 0.0 && total_nonfailure_fraction <= 1.0))
      throw ValidationError("allocation: total fraction must lie in (0, 1]");
    return {total_nonfailure_fraction, total_nonfailure_fraction};
  }

  // target total sampled-nonfailure mass
  const double target = rule == AllocationRule::SubcohortEqualsExpectedCases
                            ? prob_fail
                            : total_nonfailure_fraction * p_nonfail;
  if (!(target > 0.0)) throw ValidationError("allocation: empty sampling target");
  if (target > p_nonfail + 1e-12)
    throw ValidationError("allocation: sampling target exceeds available nonfailure mass");

  // equal expected counts per stratum, capped at full sampling
  double pi0 = target / (2.0 * strata_probs[0]);
  double pi1 = target / (2.0 * strata_probs[1]);
  if (pi0 > 1.0 && pi1 > 1.0) throw ValidationError("allocation: infeasible target");
  if (pi0 > 1.0) {
    pi0 = 1.0;
    pi1 = (target - strata_probs[0]) / strata_probs[1];
  } else if (pi1 > 1.0) {
    pi1 = 1.0;
    pi0 = (target - strata_probs[1]) / strata_probs[0];
  }
  if (pi0 > 1.0 + 1e-12 || pi1 > 1.0 + 1e-12 || pi0 <= 0.0 || pi1 <= 0.0)
    throw ValidationError("allocation: infeasible target after redistribution");
  return {std::min(pi0, 1.0), std::min(pi1, 1.0)};
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

namespace {

// Reported informations use the refinement pair's second-order extrapolation
// when available (equal to the finest-grid values otherwise).
void solve_point_into(SweepRow& row, const std::function<BuiltDesign()>& make,
                      const GridOptions& grid) {
  try {
    const BuiltDesign built = make();
    const BoundResult res = solve_bound(built.model, built.design, built.variant, grid);
    row.I_star = res.I_star_extrapolated(0, 0);
    row.I_full = res.I_full_extrapolated(0, 0);
    row.are_ib = row.I_star / row.I_full;
    row.residual = res.solution.residual_norm;
    row.converged = res.converged;
    row.solved = true;
  } catch (const std::exception& e) {
    row.solved = false;
    row.error = e.what();
  }
}

}  // namespace

AREReport run_sweep(const CaseCohortSweep& sweep, const GridOptions& grid, int threads) {
  AREReport report;
  report.param_names = {"p0", "theta", "pi0"};
  std::vector<CaseCohortSpec> specs;
  for (double p0 : sweep.p0)
    for (double theta : sweep.theta)
      for (double pi0 : sweep.pi0) {
        CaseCohortSpec s;
        s.p0 = p0;
        s.theta = theta;
        s.h1 = sweep.h1;
        s.pi0 = pi0;
        specs.push_back(s);
      }
  report.rows.resize(specs.size());
  parallel_for(static_cast<int>(specs.size()), threads, [&](int i) {
    SweepRow& row = report.rows[i];
    row.params = {specs[i].p0, specs[i].theta, specs[i].pi0};
    solve_point_into(row, [&] { return case_cohort_model(specs[i]); }, grid);
    if (row.solved && sweep.with_sp) {
      try {
        row.sp_var = sp_asymptotic_variance(specs[i]);
        row.sp_ratio = *row.sp_var * row.I_star;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  });
  return report;
}

AREReport run_sweep(const StratifiedSweep& sweep, const GridOptions& grid, int threads) {
  AREReport report;
  report.param_names = {"p0", "sens", "spec", "pi0", "pi1"};
  struct Point {
    double p0, sens, spec;
  };
  std::vector<Point> points;
  for (double p0 : sweep.p0)
    for (double sens : sweep.sens)
      for (double spec : sweep.spec) points.push_back({p0, sens, spec});
  report.rows.resize(points.size());
  parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
    SweepRow& row = report.rows[i];
    const Point& p = points[i];
    row.params = {p.p0, p.sens, p.spec, 0.0, 0.0};
    solve_point_into(row,
                     [&]() -> BuiltDesign {
                       StratifiedSpec s = StratifiedSpec::with_p0(
                           p.p0, sweep.theta, sweep.px0, 1.0 - p.sens, 1.0 - p.spec, 0.1, 0.1);
                       const auto [pi0, pi1] =
                           allocate_stratified(sweep.total_fraction, s.nonfailure_by_v(),
                                               s.prob_fail(), sweep.allocation);
                       s.pi0 = pi0;
                       s.pi1 = pi1;
                       row.params[3] = pi0;
                       row.params[4] = pi1;
                       return stratified_model(s);
                     },
                     grid);
  });
  return report;
}

std::optional<double> published_pl_are(double px1, double sens, double spec) {
  const auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };
  static const double grid_low[3][3] = {{35.5, 36.5, 40.8},   // P(X=1) = 0.05
                                        {36.5, 39.6, 47.3},
                                        {40.8, 47.3, 60.5}};
  static const double grid_high[3][3] = {{52.9, 54.0, 58.4},  // P(X=1) = 0.50
                                         {54.0, 57.3, 64.7},
                                         {58.4, 64.7, 75.8}};
  static const double marks[3] = {0.5, 0.7, 0.9};
  int i = -1, j = -1;
  for (int k = 0; k < 3; ++k) {
    if (near(sens, marks[k])) i = k;
    if (near(spec, marks[k])) j = k;
  }
  if (i < 0 || j < 0) return std::nullopt;
  if (near(px1, 0.05)) return grid_low[i][j];
  if (near(px1, 0.50)) return grid_high[i][j];
  return std::nullopt;
}

std::vector<ComparisonCell> run_comparison_table(const ComparisonTableOptions& opts,
                                                 const GridOptions& grid, int threads) {
  std::vector<ComparisonCell> cells;
  for (double px1 : opts.px1)
    for (double sens : opts.levels)
      for (double spec : opts.levels)
        for (double theta : opts.theta_set) {
          ComparisonCell c;
          c.px1 = px1;
          c.sens = sens;
          c.spec = spec;
          c.theta = theta;
          cells.push_back(c);
        }
  parallel_for(static_cast<int>(cells.size()), threads, [&](int i) {
    ComparisonCell& c = cells[i];
    try {
      StratifiedSpec s;
      s.lambda = opts.lambda;
      s.theta = c.theta;
      s.px0 = 1.0 - c.px1;
      s.alpha = 1.0 - c.sens;
      s.beta = 1.0 - c.spec;
      const auto [pi0, pi1] =
          allocate_stratified(0.0, s.nonfailure_by_v(), s.prob_fail(), opts.allocation);
      s.pi0 = pi0;
      s.pi1 = pi1;
      const BuiltDesign built = stratified_model(s);
      const BoundResult res = solve_bound(built.model, built.design, built.variant, grid);
      c.are_ib = 100.0 * res.I_star_extrapolated(0, 0) / res.I_full_extrapolated(0, 0);
      c.converged = res.converged;
      c.are_pl = published_pl_are(c.px1, c.sens, c.spec);
      if (c.are_pl) c.ratio = 100.0 * *c.are_pl / c.are_ib;
    } catch (const std::exception&) {
      c.converged = false;
    }
  });
  return cells;
}

}  // namespace coxbound
