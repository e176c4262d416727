// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Runs the full-strength settings; expect a few minutes total.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "coxbound/assembly.hpp"
#include "coxbound/runner.hpp"
#include "coxbound/simulate.hpp"
#include "test_support.hpp"

using namespace coxbound;
using namespace coxbound::test;

namespace {

int g_failures = 0;

void report(int criterion, const char* what, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---- criterion 1: operator identity suite ---------------------------------

void criterion1() {
  const BuiltDesign b = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(b.model, b.design, 400);
  Rng rng(SeedSpec{20260810, 1});

  double inv = 0.0, idem = 0.0, adj = 0.0, iso = 0.0, dec = 0.0, gram = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::MatrixXd u = random_plane(t, rng);
    const ScorePlane b_field{random_plane(t, rng), random_plane(t, rng)};

    // inversion of the martingale integral on the grouped law
    const Eigen::MatrixXd back = failure_residual(t, martingale_integral(t, u));
    for (int k : t.support)
      for (int z = 0; z < 2; ++z) inv = std::max(inv, std::abs(back(z, k) - u(z, k)));

    // idempotent centering
    const Eigen::MatrixXd c1 = center_at_failures(t, u);
    idem = std::max(idem, (center_at_failures(t, c1) - c1).cwiseAbs().maxCoeff());

    // gram round trip
    const ScorePlane round =
        apply_observed_gram(t, apply_observed_gram_inverse(t, b_field));
    gram = std::max(gram, (round.fail - b_field.fail).cwiseAbs().maxCoeff());
    gram = std::max(gram, (round.cens - b_field.cens).cwiseAbs().maxCoeff());

    // decomposition residual
    dec = std::max(dec, decomposition_residual(t, b_field));

    // continuum isometry / adjointness via the analytic law
    const ScoreEvaluator du(t, GridFunction(u));
    double lhs = 0.0, rhs = 0.0;
    const SupportInterp bfi(t, b_field.fail), bci(t, b_field.cens);
    const ContinuumTail tail(t, b_field.fail, b_field.cens);
    double inner_q = 0.0, inner_w1 = 0.0;
    for (int z = 0; z < 2; ++z) {
      const double h = t.model.h[z];
      for (const auto& [a, c] : smooth_pieces(t.grid)) {
        lhs += h * simpson_piece(
                       [&](double s) {
                         const double v = du.field_value(s, 1, z)[0];
                         return v * v * oracle_w1(t.model, s, z);
                       },
                       a, c);
        lhs += h * simpson_piece(
                       [&](double s) {
                         const double v = du.field_value(s, 0, z)[0];
                         return v * v * oracle_w2(t.model, s, z);
                       },
                       a, c);
        rhs += h * simpson_piece(
                       [&](double s) {
                         const double v = du.u_value(0, z, s);
                         return v * v * oracle_w1(t.model, s, z);
                       },
                       a, c);
        inner_q += h * simpson_piece(
                           [&](double s) {
                             return du.field_value(s, 1, z)[0] * bfi(z, s) *
                                    oracle_w1(t.model, s, z);
                           },
                           a, c);
        inner_q += h * simpson_piece(
                           [&](double s) {
                             return du.field_value(s, 0, z)[0] * bci(z, s) *
                                    oracle_w2(t.model, s, z);
                           },
                           a, c);
        inner_w1 += h * simpson_piece(
                            [&](double s) {
                              const double r1b = bfi(z, s) - tail.mean(z, s);
                              return du.u_value(0, z, s) * r1b * oracle_w1(t.model, s, z);
                            },
                            a, c);
      }
      for (const auto& atom : t.model.censoring[z].atoms) {
        const double v = du.field_value(atom.time, 0, z)[0];
        const double mass = oracle_w2_atom(t.model, atom.time, z);
        lhs += h * v * v * mass;
        inner_q += h * v * bci(z, atom.time) * mass;
      }
    }
    iso = std::max(iso, std::abs(lhs - rhs));
    adj = std::max(adj, std::abs(inner_q - inner_w1));
  }

  const bool pass = inv < 1e-12 && idem < 1e-12 && gram < 1e-12 && dec < 1e-8 && iso < 1e-8 &&
                    adj < 1e-8;
  report(1, "operator identity suite (100 random fields)", pass,
         "inversion " + fmt(inv) + ", idempotence " + fmt(idem) + ", gram " + fmt(gram) +
             ", decomposition " + fmt(dec) + ", isometry " + fmt(iso) + ", adjointness " +
             fmt(adj));
}

// ---- criterion 2: full-sampling degeneracy ---------------------------------

void criterion2() {
  const BuiltDesign b = canonical_case_cohort(1.0);
  double dev400 = 0.0, dev800 = 0.0, udiff = 0.0;
  for (int n : {400, 800}) {
    const ObservedTables t = build_observed_tables(b.model, b.design, n);
    EfficientScoreSolution sol =
        solve_ustar(t, assemble_system(t, b.variant, SolveRoute::Equation));
    information_bound(sol, t);
    Eigen::MatrixXd zcov(2, t.num_cells());
    for (int z = 0; z < 2; ++z) zcov.row(z).setConstant(static_cast<double>(z));
    const double du = (sol.u_star[0] - center_at_failures(t, zcov)).cwiseAbs().maxCoeff();
    const double dev = std::abs(sol.I_star(0, 0) / fulldata_information(t)(0, 0) - 1.0);
    if (n == 400) {
      dev400 = dev;
      udiff = du;
    } else {
      dev800 = dev;
    }
  }
  const bool pass = udiff == 0.0 && dev400 <= 1e-3 && dev800 <= 1e-4;
  report(2, "full-sampling degeneracy", pass,
         "u* deviation " + fmt(udiff) + ", |I*/Ifull-1| " + fmt(dev400) + " @400, " +
             fmt(dev800) + " @800");
}

// ---- criterion 3: route and variant equivalence ----------------------------

void criterion3() {
  const BuiltDesign a = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(a.model, a.design, 400);
  EfficientScoreSolution ua = solve_ustar(t, assemble_system(t, a.variant, SolveRoute::Equation));
  EfficientScoreSolution ub = solve_ustar(t, assemble_system(t, a.variant, SolveRoute::Tail));
  const double sup = (ua.u_star[0] - ub.u_star[0]).cwiseAbs().maxCoeff();

  CaseCohortSpec spec;
  spec.theta = std::log(2.0);
  const BuiltDesign c = case_cohort_model(spec, Phase1Scope::DeltaV);
  const ObservedTables tc = build_observed_tables(c.model, c.design, 400);
  EfficientScoreSolution uc = solve_ustar(tc, assemble_system(tc, c.variant, SolveRoute::Equation));
  information_bound(ua, t);
  information_bound(uc, tc);
  const double rel = std::abs(ua.I_star(0, 0) - uc.I_star(0, 0)) / ua.I_star(0, 0);

  const bool pass = sup <= 1e-8 && rel <= 1e-8;
  report(3, "route and variant equivalence", pass,
         "route sup-diff " + fmt(sup) + ", variant relative gap " + fmt(rel));
}

// ---- criterion 4: closed-form anchor ---------------------------------------

void criterion4() {
  const BuiltDesign b = canonical_case_cohort(0.1, 0.0);
  const ObservedTables t = build_observed_tables(b.model, b.design, 400);
  const double lam = CaseCohortSpec{}.lambda();
  const double closed = (1.0 - std::exp(-lam)) * 0.25;
  const double got = fulldata_information(t)(0, 0);
  const double rel = std::abs(got / closed - 1.0);
  report(4, "closed-form information anchor at theta = 0", rel <= 1e-6,
         "relative deviation " + fmt(rel));
}

// ---- criterion 5: Monte Carlo bound validation ------------------------------

void criterion5() {
  const BuiltDesign b = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(b.model, b.design, 400);
  EfficientScoreSolution sol = solve_ustar(t, assemble_system(t, b.variant, SolveRoute::Equation));
  information_bound(sol, t);
  const ScoreEvaluator eval(t, sol.u_star);
  const auto data = simulate(t, 1000000, SeedSpec{20260810, 5});

  const MomentReport mom = empirical_moments(
      [&](const Observation& o) { return eval.score(o.y, o.delta, o.r, o.level, o.group); }, data,
      1);
  const bool mean_ok = std::abs(mom.mean[0]) <= 4.0 * mom.mean_se[0];
  const bool var_ok = std::abs(mom.cov(0, 0) - sol.I_star(0, 0)) <= 4.0 * mom.var_se[0];

  std::vector<NuisanceDirection> dirs;
  dirs.push_back(NuisanceDirection::baseline("a=1", [](double) { return 1.0; }));
  dirs.push_back(NuisanceDirection::baseline("a=t", [](double s) { return s; }));
  dirs.push_back(NuisanceDirection::baseline("a=t2", [](double s) { return s * s; }));
  dirs.push_back(NuisanceDirection::censoring("b=1", [](double, int) { return 1.0; }));
  dirs.push_back(NuisanceDirection::censoring("b=tz", [&](double s, int z) {
    return s * b.model.coef_covariate(z)[0];
  }));
  dirs.push_back(NuisanceDirection::pmf("c=z-Ez", {-0.5, 0.5}));
  bool orth_ok = true;
  std::string worst;
  for (const auto& row : orthogonality_check(eval, dirs, data)) {
    if (!row.pass) {
      orth_ok = false;
      worst = row.name;
    }
  }

  report(5, "Monte Carlo bound validation (n = 1e6)", mean_ok && var_ok && orth_ok,
         "mean " + fmt(mom.mean[0]) + " (se " + fmt(mom.mean_se[0]) + "), var-I* " +
             fmt(mom.cov(0, 0) - sol.I_star(0, 0)) + " (se " + fmt(mom.var_se[0]) + ")" +
             (orth_ok ? ", orthogonality ok" : ", orthogonality FAILED at " + worst));
}

// ---- criterion 6: pseudo-likelihood comparison ------------------------------

void criterion6() {
  bool mc_ok = true;
  std::string detail;
  std::uint64_t stream = 100;
  for (double p0 : {0.01, 0.1})
    for (double theta : {0.0, std::log(2.0)}) {
      CaseCohortSpec s;
      s.p0 = p0;
      s.theta = theta;
      s.pi0 = 0.1;
      const double analytic = sp_asymptotic_variance(s);
      const SpMcResult mc =
          sp_estimator_variance_mc(s, 5000, 2000, SeedSpec{20260810, stream}, 2);
      stream += 4096;
      const bool ok = std::abs(mc.variance - analytic) <= 4.0 * mc.se;
      mc_ok = mc_ok && ok;
      detail += fmt((mc.variance - analytic) / mc.se) + "se ";
    }

  // bound ratio over the published-figure sweep grid (second-order
  // extrapolated informations; 1e-9 numerical slack on the inequality)
  bool ratio_ok = true;
  GridOptions sweep_grid;
  sweep_grid.initial_intervals = 100;
  sweep_grid.max_intervals = 400;
  for (double p0 : {0.01, 0.05, 0.1, 0.25, 0.5})
    for (double pi0 : {0.05, 0.1, 0.2, 0.4, 0.7, 1.0}) {
      CaseCohortSpec s;
      s.p0 = p0;
      s.theta = std::log(2.0);
      s.pi0 = pi0;
      const double spv = sp_asymptotic_variance(s);
      const BuiltDesign b = case_cohort_model(s);
      const BoundResult r = solve_bound(b.model, b.design, b.variant, sweep_grid);
      ratio_ok = ratio_ok && spv * r.I_star_extrapolated(0, 0) >= 1.0 - 1e-9;
    }

  // both ratios approach one at full sampling
  CaseCohortSpec s;
  s.p0 = 0.1;
  s.theta = std::log(2.0);
  s.pi0 = 1.0;
  const double spv = sp_asymptotic_variance(s);
  const BuiltDesign b = case_cohort_model(s);
  GridOptions g;
  g.initial_intervals = 400;
  g.rel_tol = 1e-6;
  g.max_intervals = 1600;
  const BoundResult r = solve_bound(b.model, b.design, b.variant, g);
  const double ratio_sp = spv * r.I_star_extrapolated(0, 0);
  const double ratio_are = r.are_scalar_extrapolated();
  const bool endpoint_ok = std::abs(ratio_sp - 1.0) <= 1e-6 && std::abs(ratio_are - 1.0) <= 1e-6;

  report(6, "pseudo-likelihood comparison machinery", mc_ok && ratio_ok && endpoint_ok,
         "mc gaps " + detail + (ratio_ok ? "; ratio >= 1 on grid" : "; ratio < 1 somewhere") +
             "; endpoint gaps " + fmt(ratio_sp - 1.0) + ", " + fmt(ratio_are - 1.0));
}

// ---- criterion 7: stratified structure --------------------------------------

void criterion7() {
  const double theta = std::log(2.0), px0 = 0.9, total = 0.1, p0 = 0.1;

  // uninformative surrogate reproduces the classical design
  StratifiedSpec s55 = StratifiedSpec::with_p0(p0, theta, px0, 0.5, 0.5, total, total);
  const BuiltDesign b55 = stratified_model(s55);
  const BoundResult r55 = solve_bound(b55.model, b55.design, b55.variant, GridOptions{400, false});
  CaseCohortSpec cc;
  cc.p0 = p0;
  cc.theta = theta;
  cc.h1 = 1.0 - px0;
  cc.pi0 = total;
  const BuiltDesign bcc = case_cohort_model(cc);
  const BoundResult rcc = solve_bound(bcc.model, bcc.design, bcc.variant, GridOptions{400, false});
  const double rel = std::abs(r55.solution.I_star(0, 0) / rcc.solution.I_star(0, 0) - 1.0);

  // efficiency rises with sensitivity and specificity (proportional sampling)
  double are[3][3];
  const double marks[3] = {0.5, 0.7, 0.9};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      StratifiedSpec s =
          StratifiedSpec::with_p0(p0, theta, px0, 1.0 - marks[i], 1.0 - marks[j], total, total);
      const BuiltDesign bb = stratified_model(s);
      const BoundResult rr = solve_bound(bb.model, bb.design, bb.variant, GridOptions{400, false});
      are[i][j] = rr.are_scalar();
    }
  bool monotone = true;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j + 1 < 3; ++j) {
      monotone = monotone && are[i][j] < are[i][j + 1];  // specificity direction
      monotone = monotone && are[j][i] < are[j + 1][i];  // sensitivity direction
    }

  // stratified allocation never hurts for an informative surrogate
  bool alloc_ok = true;
  double worst_gap = 0.0;
  for (double sens : {0.7, 0.9})
    for (double spec : {0.7, 0.9}) {
      StratifiedSpec base =
          StratifiedSpec::with_p0(p0, theta, px0, 1.0 - sens, 1.0 - spec, total, total);
      const auto [e0, e1] = allocate_stratified(total, base.nonfailure_by_v(), base.prob_fail(),
                                                AllocationRule::EqualExpectedCounts);
      StratifiedSpec strat = base;
      strat.pi0 = e0;
      strat.pi1 = e1;
      const BuiltDesign bp = stratified_model(base);
      const BuiltDesign bs = stratified_model(strat);
      const BoundResult rp = solve_bound(bp.model, bp.design, bp.variant, GridOptions{400, false});
      const BoundResult rs = solve_bound(bs.model, bs.design, bs.variant, GridOptions{400, false});
      const double gap = rs.are_scalar() - rp.are_scalar();
      worst_gap = std::min(worst_gap, gap);
      alloc_ok = alloc_ok && gap >= -1e-9;
    }

  const bool pass = rel <= 1e-6 && monotone && alloc_ok;
  report(7, "stratified design structure", pass,
         "classical-equivalence rel " + fmt(rel) + (monotone ? ", monotone" : ", NOT monotone") +
             ", allocation worst gap " + fmt(worst_gap));
}

// ---- criterion 8: comparison-table reproduction -----------------------------

void criterion8() {
  const double marks[2] = {0.5, 0.9};
  const double published[2] = {36.0, 70.3};  // ARE(IB) % at (.5,.5) and (.9,.9), P(X=1)=0.05
  double best_worst = 1e9;
  double best_theta = 0.0;
  for (double theta : {0.0, std::log(1.5), std::log(2.0), std::log(3.0), std::log(5.0)}) {
    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
      StratifiedSpec s;
      s.lambda = 0.01;
      s.theta = theta;
      s.px0 = 0.95;
      s.alpha = 1.0 - marks[i];
      s.beta = 1.0 - marks[i];
      const auto [pi0, pi1] = allocate_stratified(0.0, s.nonfailure_by_v(), s.prob_fail(),
                                                  AllocationRule::SubcohortEqualsExpectedCases);
      s.pi0 = pi0;
      s.pi1 = pi1;
      const BuiltDesign b = stratified_model(s);
      const BoundResult r = solve_bound(b.model, b.design, b.variant, GridOptions{400, false});
      worst = std::max(worst, std::abs(100.0 * r.are_scalar() - published[i]));
    }
    if (worst < best_worst) {
      best_worst = worst;
      best_theta = theta;
    }
  }
  report(8, "comparison-table reproduction (conditional)", best_worst <= 1.5,
         "best theta " + fmt(best_theta) + " with worst cell gap " + fmt(best_worst) + " pp");
}

// ---- criterion 9: determinism ------------------------------------------------

void criterion9() {
  const char* sweep_cfg = R"({
    "schema_version": 1, "command": "sweep",
    "sweep": {"kind": "case_cohort", "p0": [0.05, 0.1], "theta": [0.6931471805599453],
              "pi0": [0.3, 1.0], "h1": 0.5, "with_sp": true},
    "grid": {"initial_nodes": 100, "refine": false}, "threads": 2, "seed": 3
  })";
  const char* validate_cfg = R"({
    "schema_version": 1, "command": "validate",
    "model": {"type": "case_cohort", "p0": 0.1, "theta": 0.6931471805599453, "h1": 0.5, "pi0": 0.1},
    "grid": {"initial_nodes": 100, "refine": false},
    "validate": {"n": 100000}, "threads": 2, "seed": 3
  })";
  bool pass = true;
  std::string detail;
  for (auto [name, text] : {std::pair{"sweep", sweep_cfg}, {"validate", validate_cfg}}) {
    const std::string path = std::string("acceptance_") + name + ".json";
    {
      std::ofstream f(path, std::ios::binary);
      f << text;
    }
    const std::string cmd = std::string(COXBOUND_CLI_PATH) + " --config " + path;
    std::string outs[2];
    for (int run = 0; run < 2; ++run) {
      FILE* pipe = popen(cmd.c_str(), "r");
      if (!pipe) {
        pass = false;
        continue;
      }
      char buf[4096];
      std::size_t got;
      while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) outs[run].append(buf, got);
      pclose(pipe);
    }
    const bool same = !outs[0].empty() && outs[0] == outs[1];
    pass = pass && same;
    detail += std::string(name) + (same ? " identical; " : " DIFFERS; ");
    std::remove(path.c_str());
  }
  report(9, "byte-identical reruns of sweep and validate", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
  // run a subset when criteria numbers are passed as arguments
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  const auto want = [&](int k) {
    return which.empty() || std::find(which.begin(), which.end(), k) != which.end();
  };

  if (want(1)) criterion1();
  if (want(2)) criterion2();
  if (want(3)) criterion3();
  if (want(4)) criterion4();
  if (want(5)) criterion5();
  if (want(6)) criterion6();
  if (want(7)) criterion7();
  if (want(8)) criterion8();
  if (want(9)) criterion9();

  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
