#include <Eigen/Dense>
#include <doctest.h>

#include "coxbound/assembly.hpp"
#include "coxbound/simulate.hpp"
#include "test_support.hpp"

using namespace coxbound;
using namespace coxbound::test;

TEST_CASE("full sampling: identity system, exact centered-covariate solution") {
  const BuiltDesign b = canonical_case_cohort(1.0);
  const ObservedTables t = build_observed_tables(b.model, b.design, 120);
  const LinearSystem sys = assemble_system(t, b.variant, SolveRoute::Equation);
  CHECK((sys.matrix - Eigen::MatrixXd::Identity(sys.matrix.rows(), sys.matrix.cols()))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  EfficientScoreSolution sol = solve_ustar(t, sys);
  Eigen::MatrixXd zcov(2, t.num_cells());
  for (int z = 0; z < 2; ++z) zcov.row(z).setConstant(static_cast<double>(z));
  const Eigen::MatrixXd expected = center_at_failures(t, zcov);
  CHECK((sol.u_star[0] - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.residual_norm < 1e-14);
  CHECK(sol.centering_violation < 1e-14);
  // centering function vanishes when nothing is missing
  CHECK(sol.f_star.cwiseAbs().maxCoeff() < 1e-13);

  information_bound(sol, t);
  const Eigen::MatrixXd ifull = fulldata_information(t);
  CHECK(std::abs(sol.I_star(0, 0) / ifull(0, 0) - 1.0) < 1e-6);
}

TEST_CASE("canonical solve: residual, centering, condition, information ordering") {
  const BuiltDesign b = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(b.model, b.design, 400);
  const LinearSystem sys = assemble_system(t, b.variant, SolveRoute::Equation);
  EfficientScoreSolution sol = solve_ustar(t, sys);
  CHECK(sol.residual_norm < 1e-10);
  CHECK(sol.centering_violation < 1e-12);
  CHECK(sol.condition_estimate > 1.0);
  CHECK(sol.condition_estimate < 1e4);
  information_bound(sol, t);
  const Eigen::MatrixXd ifull = fulldata_information(t);
  CHECK(sol.I_star(0, 0) <= ifull(0, 0) + 1e-9);
  CHECK(sol.I_star(0, 0) > 0.0);
}

TEST_CASE("condition ceiling raises a numeric error") {
  const BuiltDesign b = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(b.model, b.design, 40);
  const LinearSystem sys = assemble_system(t, b.variant, SolveRoute::Equation);
  SolveOptions opts;
  opts.condition_ceiling = 1.0;
  CHECK_THROWS_AS(solve_ustar(t, sys, opts), NumericError);
}

TEST_CASE("equation and tail routes agree on the grouped law") {
  for (auto built : {canonical_case_cohort(), ac_censoring_model(),
                     stratified_model(StratifiedSpec::with_p0(0.15, std::log(2.0), 0.85, 0.2,
                                                              0.3, 0.15, 0.4))}) {
    const ObservedTables t = build_observed_tables(built.model, built.design, 90);
    const LinearSystem sa = assemble_system(t, built.variant, SolveRoute::Equation);
    const LinearSystem sb = assemble_system(t, built.variant, SolveRoute::Tail);
    EfficientScoreSolution ua = solve_ustar(t, sa);
    EfficientScoreSolution ub = solve_ustar(t, sb);
    for (int i = 0; i < ua.u_star.dim(); ++i)
      CHECK((ua.u_star[i] - ub.u_star[i]).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(ub.residual_norm < 1e-10);
    information_bound(ua, t);
    information_bound(ub, t);
    CHECK(std::abs(ua.I_star(0, 0) - ub.I_star(0, 0)) < 1e-12);
  }
}

TEST_CASE("treating the end-of-study time as unobserved changes nothing for the case-cohort design") {
  const BuiltDesign a = canonical_case_cohort(0.1, std::log(2.0));
  CaseCohortSpec spec;
  spec.theta = std::log(2.0);
  const BuiltDesign b = case_cohort_model(spec, Phase1Scope::DeltaV);
  const ObservedTables ta = build_observed_tables(a.model, a.design, 150);
  const ObservedTables tb = build_observed_tables(b.model, b.design, 150);
  EfficientScoreSolution sa = solve_ustar(ta, assemble_system(ta, a.variant, SolveRoute::Equation));
  EfficientScoreSolution sb = solve_ustar(tb, assemble_system(tb, b.variant, SolveRoute::Equation));
  information_bound(sa, ta);
  information_bound(sb, tb);
  CHECK(std::abs(sa.I_star(0, 0) - sb.I_star(0, 0)) / sa.I_star(0, 0) < 1e-12);
}

TEST_CASE("grid refinement: information settles at second order") {
  const BuiltDesign b = canonical_case_cohort();
  std::vector<double> istar;
  for (int n : {50, 100, 200}) {
    const ObservedTables t = build_observed_tables(b.model, b.design, n);
    EfficientScoreSolution sol =
        solve_ustar(t, assemble_system(t, b.variant, SolveRoute::Equation));
    information_bound(sol, t);
    istar.push_back(sol.I_star(0, 0));
  }
  const double d1 = std::abs(istar[1] - istar[0]);
  const double d2 = std::abs(istar[2] - istar[1]);
  CHECK(d2 < d1);
  const double ratio = d1 / d2;
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.5);
}

TEST_CASE("solve_bound refinement driver reports a trail and convergence") {
  const BuiltDesign b = canonical_case_cohort();
  GridOptions g;
  g.initial_intervals = 100;
  g.rel_tol = 1e-4;
  g.max_intervals = 800;
  const BoundResult res = solve_bound(b.model, b.design, b.variant, g);
  CHECK(res.converged);
  CHECK(res.trail.size() >= 2);
  CHECK(res.trail.front().n_intervals == 100);
  CHECK(res.solution.has_information);
  CHECK(res.are_scalar() > 0.0);
  CHECK(res.are_scalar() <= 1.0);
}

TEST_CASE("full-data information: closed form at theta = 0 and mean-zero score") {
  const BuiltDesign b = canonical_case_cohort(0.1, 0.0);
  const ObservedTables t = build_observed_tables(b.model, b.design, 200);
  const Eigen::MatrixXd ifull = fulldata_information(t);
  const double lam = CaseCohortSpec{}.lambda();
  const double closed = (1.0 - std::exp(-lam)) * 0.5 * 0.5;
  CHECK(std::abs(ifull(0, 0) / closed - 1.0) < 1e-9);

  // the orthogonal covariate score has exact mean zero on the grouped law
  Eigen::MatrixXd zcov(2, t.num_cells());
  for (int z = 0; z < 2; ++z) zcov.row(z).setConstant(static_cast<double>(z));
  CHECK(std::abs(plane_mean(t, centered_martingale_integral(t, zcov))) < 1e-14);
}

TEST_CASE("efficient score evaluation") {
  const BuiltDesign b = canonical_case_cohort();
  const ObservedTables t = build_observed_tables(b.model, b.design, 150);
  EfficientScoreSolution sol = solve_ustar(t, assemble_system(t, b.variant, SolveRoute::Equation));
  const ScoreEvaluator eval(t, sol.u_star);

  SUBCASE("unsampled records return the phase-1 conditional mean") {
    for (double y : {0.123, 0.5, 1.0}) {
      const int delta = y == 1.0 ? 0 : 1;
      const Eigen::VectorXd s = eval.score(y, delta, 0, -1, 0);
      const Eigen::VectorXd e = eval.phase1_mean(y, delta, 0);
      CHECK(s[0] == e[0]);
    }
  }

  SUBCASE("full sampling reduces to the martingale field") {
    const BuiltDesign bf = canonical_case_cohort(1.0);
    const ObservedTables tf = build_observed_tables(bf.model, bf.design, 150);
    EfficientScoreSolution sf =
        solve_ustar(tf, assemble_system(tf, bf.variant, SolveRoute::Equation));
    const ScoreEvaluator ef(tf, sf.u_star);
    for (double y : {0.123, 0.77}) {
      CHECK(ef.score(y, 1, 1, 1, 0)[0] == ef.field_value(y, 1, 1)[0]);
    }
  }

  SUBCASE("quadrature mean of the efficient score vanishes on the grouped law") {
    // integrate the sampling-averaged score pointwise; the algebra is not
    // collapsed, so this exercises the full expression
    const ScorePlane zeta = martingale_integral(t, sol.u_star[0]);
    const Eigen::MatrixXd e1 = cond_mean_phase1(t, zeta.fail, zeta.cens, 1);
    const Eigen::MatrixXd e0 = cond_mean_phase1(t, zeta.fail, zeta.cens, 0);
    double mean = 0.0;
    for (int z = 0; z < t.num_levels(); ++z)
      for (int k = 0; k < t.num_cells(); ++k) {
        const double pf = t.pi_fail(z, k), pc = t.pi_cens(z, k);
        const double r1f = zeta.fail(z, k) / pf - (1.0 - pf) / pf * e1(z, k);
        const double r1c = zeta.cens(z, k) / pc - (1.0 - pc) / pc * e0(z, k);
        mean += t.model.h[z] * (t.q1(z, k) * (pf * r1f + (1.0 - pf) * e1(z, k)) +
                                t.q2(z, k) * (pc * r1c + (1.0 - pc) * e0(z, k)));
      }
    CHECK(std::abs(mean) < 1e-14);
  }

  SUBCASE("quadrature orthogonality of the efficient score to observed nuisance scores") {
    std::vector<NuisanceDirection> dirs;
    dirs.push_back(NuisanceDirection::baseline("a1", [](double) { return 1.0; }));
    dirs.push_back(NuisanceDirection::baseline("at", [](double s) { return s; }));
    dirs.push_back(NuisanceDirection::pmf("cz", {-0.5, 0.5}));
    for (const auto& dir : dirs) {
      const NuisanceScoreEvaluator nse(t, dir);
      double inner = 0.0;
      for (int z = 0; z < t.num_levels(); ++z) {
        const int g = t.level_group[z];
        const double h = t.model.h[z];
        for (const auto& [a, b] : smooth_pieces(t.grid))
          inner += h * simpson_piece(
                           [&](double s) {
                             const double pi = t.design.pi(s, 1, g);
                             const double k1 = eval.score(s, 1, 1, z, g)[0];
                             const double e = eval.phase1_mean(s, 1, g)[0];
                             const double sc = nse.fulldata(s, 1, z);
                             const double ec = nse.phase1_mean(s, 1, g);
                             return (pi * k1 * sc + (1.0 - pi) * e * ec) *
                                    oracle_w1(t.model, s, z);
                           },
                           a, b);
        for (const auto& atom : t.model.censoring[z].atoms) {
          const double pi = t.design.pi(atom.time, 0, g);
          const double k1 = eval.score(atom.time, 0, 1, z, g)[0];
          const double e = eval.phase1_mean(atom.time, 0, g)[0];
          const double sc = nse.fulldata(atom.time, 0, z);
          const double ec = nse.phase1_mean(atom.time, 0, g);
          inner += h * (pi * k1 * sc + (1.0 - pi) * e * ec) *
                   oracle_w2_atom(t.model, atom.time, z);
        }
      }
      CHECK(std::abs(inner) < 1e-8);
    }
  }
}

TEST_CASE("information ordering holds across designs") {
  for (auto built : {canonical_case_cohort(0.35), ac_censoring_model(0.5),
                     stratified_model(StratifiedSpec::with_p0(0.3, -0.4, 0.7, 0.2, 0.25, 0.2,
                                                              0.6))}) {
    const ObservedTables t = build_observed_tables(built.model, built.design, 100);
    EfficientScoreSolution sol =
        solve_ustar(t, assemble_system(t, built.variant, SolveRoute::Equation));
    information_bound(sol, t);
    const Eigen::MatrixXd ifull = fulldata_information(t);
    CHECK(sol.I_star(0, 0) <= ifull(0, 0) + 1e-9);
    CHECK(sol.I_star(0, 0) > 0.0);
  }
}

TEST_CASE("two-component coefficient is solved componentwise with a shared matrix") {
  // stratified support with the coefficient on the full (x, v) pair
  StratifiedSpec s = StratifiedSpec::with_p0(0.15, 0.3, 0.8, 0.2, 0.3, 0.25, 0.5);
  BuiltDesign b = stratified_model(s);
  b.model.scope = CoefficientScope::FullZ;
  b.model.theta = Eigen::Vector2d(0.3, -0.2);
  b.model.validate();
  b.variant.coefficient = CoefficientScope::FullZ;
  const ObservedTables t = build_observed_tables(b.model, b.design, 60);
  const LinearSystem sys = assemble_system(t, b.variant, SolveRoute::Equation);
  CHECK(sys.rhs.cols() == 2);
  EfficientScoreSolution sol = solve_ustar(t, sys);
  CHECK(sol.residual_norm < 1e-10);
  information_bound(sol, t);
  const Eigen::MatrixXd ifull = fulldata_information(t);
  // symmetry and ordering in the matrix sense
  CHECK(std::abs(sol.I_star(0, 1) - sol.I_star(1, 0)) < 1e-12);
  const Eigen::MatrixXd gap = ifull - sol.I_star;
  CHECK(gap(0, 0) >= -1e-9);
  CHECK(gap.determinant() >= -1e-12);
  // tail route agrees componentwise
  EfficientScoreSolution sol2 = solve_ustar(t, assemble_system(t, b.variant, SolveRoute::Tail));
  for (int i = 0; i < 2; ++i)
    CHECK((sol.u_star[i] - sol2.u_star[i]).cwiseAbs().maxCoeff() < 1e-11);
}
