#include "coxbound/runner.hpp"

#include <cmath>

#include "coxbound/operators.hpp"
#include "coxbound/report.hpp"
#include "coxbound/simulate.hpp"

namespace coxbound {

namespace {

using jsonw::arr;
using jsonw::boolean;
using jsonw::integer;
using jsonw::matrix;
using jsonw::num;
using jsonw::obj;
using jsonw::str;

std::string trail_json(const std::vector<BoundTrailEntry>& trail) {
  std::vector<std::string> entries;
  for (const auto& e : trail)
    entries.push_back(obj({{"intervals", integer(e.n_intervals)},
                           {"i_star", matrix(e.I_star)},
                           {"i_full", matrix(e.I_full)},
                           {"residual", num(e.residual)},
                           {"condition", num(e.condition)}}));
  return arr(entries);
}

double max_abs(const GridFunction& u) {
  double m = 0.0;
  for (const auto& plane : u.comp) m = std::max(m, plane.cwiseAbs().maxCoeff());
  return m;
}

SolveRoute route_from_string(const std::string& r) {
  return r == "K" ? SolveRoute::Tail : SolveRoute::Equation;
}

}  // namespace

std::string cmd_bound(const RunConfig& cfg) {
  const BuiltDesign built = cfg.build();
  const SolveRoute primary = route_from_string(cfg.route == "both" ? "T" : cfg.route);
  const BoundResult res =
      solve_bound(built.model, built.design, built.variant, cfg.grid, primary, cfg.solver);
  const int d = res.solution.u_star.dim();

  std::vector<std::pair<std::string, std::string>> kvs;
  kvs.emplace_back("schema_version", integer(1));
  kvs.emplace_back("command", str("bound"));
  kvs.emplace_back("variant", str(built.variant.name()));
  kvs.emplace_back("route", str(cfg.route));
  kvs.emplace_back("i_star", matrix(res.solution.I_star));
  kvs.emplace_back("i_full", matrix(res.I_full));
  if (d == 1) kvs.emplace_back("are_ib", num(res.are_scalar()));
  kvs.emplace_back("i_star_extrapolated", matrix(res.I_star_extrapolated));
  kvs.emplace_back("i_full_extrapolated", matrix(res.I_full_extrapolated));
  if (d == 1) kvs.emplace_back("are_ib_extrapolated", num(res.are_scalar_extrapolated()));
  kvs.emplace_back("residual", num(res.solution.residual_norm));
  kvs.emplace_back("condition", num(res.solution.condition_estimate));
  kvs.emplace_back("centering", num(res.solution.centering_violation));
  kvs.emplace_back("u_star_max_abs", num(max_abs(res.solution.u_star)));
  kvs.emplace_back(
      "grid", obj({{"intervals", integer(res.trail.back().n_intervals)},
                   {"converged", boolean(res.converged)},
                   {"trail", trail_json(res.trail)}}));

  if (cfg.route == "both") {
    // independent tail-form solve on the final grid
    LinearSystem tail_sys = assemble_system(res.tables, built.variant, SolveRoute::Tail);
    EfficientScoreSolution tail_sol = solve_ustar(res.tables, tail_sys, cfg.solver);
    information_bound(tail_sol, res.tables);
    double sup = 0.0;
    for (int i = 0; i < d; ++i)
      sup = std::max(sup,
                     (tail_sol.u_star[i] - res.solution.u_star[i]).cwiseAbs().maxCoeff());
    kvs.emplace_back("route_check", obj({{"i_star", matrix(tail_sol.I_star)},
                                         {"u_star_sup_diff", num(sup)},
                                         {"residual", num(tail_sol.residual_norm)}}));
  }
  return obj(kvs) + "\n";
}

std::string cmd_sweep(const RunConfig& cfg) {
  AREReport report;
  bool with_sp = false;
  if (cfg.case_cohort_sweep) {
    report = run_sweep(*cfg.case_cohort_sweep, cfg.grid, cfg.threads);
    with_sp = cfg.case_cohort_sweep->with_sp;
  } else {
    report = run_sweep(*cfg.stratified_sweep, cfg.grid, cfg.threads);
  }

  std::vector<std::string> header = report.param_names;
  header.insert(header.end(), {"i_star", "i_full", "are_ib"});
  if (with_sp) header.insert(header.end(), {"sp_var", "sp_ratio"});
  header.insert(header.end(), {"residual", "converged"});

  std::string out = csv_line(header);
  int failed = 0;
  for (const auto& row : report.rows) {
    std::vector<std::string> fields;
    for (double p : row.params) fields.push_back(fmt17(p));
    if (row.solved) {
      fields.push_back(fmt17(row.I_star));
      fields.push_back(fmt17(row.I_full));
      fields.push_back(fmt17(row.are_ib));
      if (with_sp) {
        fields.push_back(row.sp_var ? fmt17(*row.sp_var) : "");
        fields.push_back(row.sp_ratio ? fmt17(*row.sp_ratio) : "");
      }
      fields.push_back(fmt17(row.residual));
      fields.push_back(row.converged ? "1" : "0");
    } else {
      ++failed;
      for (int i = 0; i < 3 + (with_sp ? 2 : 0) + 1; ++i) fields.push_back("");
      fields.push_back("0");
    }
    out += csv_line(fields);
  }
  if (!report.rows.empty() && failed == static_cast<int>(report.rows.size()))
    throw NumericError("sweep: every point failed");
  return out;
}

std::string cmd_table1(const RunConfig& cfg) {
  const auto cells = run_comparison_table(cfg.table1, cfg.grid, cfg.threads);
  std::string out =
      csv_line({"px1", "sens", "spec", "theta", "are_ib_pct", "are_pl_pct", "ratio_pct",
                "converged"});
  for (const auto& c : cells) {
    std::vector<std::string> fields{fmt17(c.px1),   fmt17(c.sens), fmt17(c.spec),
                                    fmt17(c.theta), fmt17(c.are_ib)};
    fields.push_back(c.are_pl ? fmt17(*c.are_pl) : "");
    fields.push_back(c.ratio ? fmt17(*c.ratio) : "");
    fields.push_back(c.converged ? "1" : "0");
    out += csv_line(fields);
  }
  return out;
}

namespace {

// uniform pass rule: |estimate - null| <= 4 * se * scale (+ tiny epsilon);
// deterministic checks encode tolerance as se = tol / 4
CheckRow make_check(const std::string& name, double null_value, double estimate, double se,
                    double scale) {
  CheckRow row;
  row.name = name;
  row.null_value = null_value;
  row.estimate = estimate;
  row.se = se;
  row.pass = std::abs(estimate - null_value) <= 4.0 * se * scale + 1e-14;
  return row;
}

void operator_checks(const ObservedTables& tables, double scale, std::uint64_t seed,
                     std::vector<CheckRow>& rows) {
  Rng rng(SeedSpec{seed, 0xC0FFEE});
  const int L = tables.num_levels(), N = tables.num_cells();
  const auto random_plane = [&] {
    Eigen::MatrixXd m(L, N);
    for (int z = 0; z < L; ++z)
      for (int k = 0; k < N; ++k) m(z, k) = 2.0 * rng.uniform() - 1.0;
    return m;
  };
  double inv = 0.0, idem = 0.0, gram = 0.0, decomp = 0.0;
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::MatrixXd u = random_plane();
    const Eigen::MatrixXd back = failure_residual(tables, martingale_integral(tables, u));
    for (int k : tables.support)
      for (int z = 0; z < L; ++z) inv = std::max(inv, std::abs(back(z, k) - u(z, k)));

    const Eigen::MatrixXd c1 = center_at_failures(tables, u);
    idem = std::max(idem, (center_at_failures(tables, c1) - c1).cwiseAbs().maxCoeff());

    const ScorePlane b{random_plane(), random_plane()};
    const ScorePlane round =
        apply_observed_gram(tables, apply_observed_gram_inverse(tables, b));
    gram = std::max(gram, (round.fail - b.fail).cwiseAbs().maxCoeff());
    gram = std::max(gram, (round.cens - b.cens).cwiseAbs().maxCoeff());

    decomp = std::max(decomp, decomposition_residual(tables, b));
  }
  rows.push_back(make_check("operators/residual_inverts_integral", 0.0, inv, 1e-10 / 4, scale));
  rows.push_back(make_check("operators/centering_idempotent", 0.0, idem, 1e-12 / 4, scale));
  rows.push_back(make_check("operators/gram_roundtrip", 0.0, gram, 1e-12 / 4, scale));
  rows.push_back(make_check("operators/decomposition", 0.0, decomp, 1e-8 / 4, scale));
}

}  // namespace

RunOutcome cmd_validate(const RunConfig& cfg) {
  const double scale = cfg.validate.tolerance_scale;
  const BuiltDesign built = cfg.build();
  std::vector<CheckRow> rows;

  ObservedTables tables = build_observed_tables(built.model, built.design,
                                                cfg.grid.initial_intervals);
  operator_checks(tables, scale, cfg.seed, rows);

  // solve both routes on the same grid
  LinearSystem sys = assemble_system(tables, built.variant, SolveRoute::Equation);
  EfficientScoreSolution sol = solve_ustar(tables, sys, cfg.solver);
  information_bound(sol, tables);
  rows.push_back(make_check("solver/residual", 0.0, sol.residual_norm, 1e-8 / 4, scale));
  rows.push_back(make_check("solver/centering", 0.0, sol.centering_violation, 1e-8 / 4, scale));

  LinearSystem tail_sys = assemble_system(tables, built.variant, SolveRoute::Tail);
  EfficientScoreSolution tail_sol = solve_ustar(tables, tail_sys, cfg.solver);
  double sup = 0.0;
  for (int i = 0; i < sol.u_star.dim(); ++i)
    sup = std::max(sup, (tail_sol.u_star[i] - sol.u_star[i]).cwiseAbs().maxCoeff());
  rows.push_back(make_check("solver/route_agreement", 0.0, sup, 1e-8 / 4, scale));

  // Monte Carlo block
  const int n = static_cast<int>(cfg.validate.n);
  const auto data = simulate(tables, n, SeedSpec{cfg.seed, 1});

  double p_fail_exact = 0.0, p_sampled_exact = 0.0;
  for (int z = 0; z < tables.num_levels(); ++z)
    for (int k = 0; k < tables.num_cells(); ++k) {
      p_fail_exact += tables.model.h[z] * tables.q1(z, k);
      p_sampled_exact += tables.model.h[z] * (tables.q1(z, k) * tables.pi_fail(z, k) +
                                              tables.q2(z, k) * tables.pi_cens(z, k));
    }
  double fail_count = 0.0, sampled_count = 0.0;
  for (const auto& o : data) {
    fail_count += o.delta;
    sampled_count += o.r;
  }
  const double p_fail_hat = fail_count / n, p_samp_hat = sampled_count / n;
  rows.push_back(make_check("mc/prob_failure", p_fail_exact, p_fail_hat,
                            std::sqrt(p_fail_exact * (1 - p_fail_exact) / n), scale));
  rows.push_back(make_check("mc/prob_sampled", p_sampled_exact, p_samp_hat,
                            std::sqrt(p_sampled_exact * (1 - p_sampled_exact) / n), scale));

  const ScoreEvaluator eval(tables, sol.u_star);
  const int d = sol.u_star.dim();
  const MomentReport mom = empirical_moments(
      [&](const Observation& o) { return eval.score(o.y, o.delta, o.r, o.level, o.group); }, data,
      d);
  for (int i = 0; i < d; ++i) {
    const std::string suffix = d > 1 ? "/comp" + std::to_string(i) : "";
    rows.push_back(make_check("mc/mean_kstar" + suffix, 0.0, mom.mean[i], mom.mean_se[i], scale));
    rows.push_back(make_check("mc/var_kstar_matches_bound" + suffix, sol.I_star(i, i),
                              mom.cov(i, i), mom.var_se[i], scale));
  }

  // orthogonality against canonical nuisance directions
  std::vector<NuisanceDirection> dirs;
  dirs.push_back(NuisanceDirection::baseline("lambda_const", [](double) { return 1.0; }));
  dirs.push_back(NuisanceDirection::baseline("lambda_t", [](double s) { return s; }));
  dirs.push_back(NuisanceDirection::baseline("lambda_t2", [](double s) { return s * s; }));
  dirs.push_back(NuisanceDirection::censoring("lambdaG_const", [](double, int) { return 1.0; }));
  {
    const FullDataModel& m = tables.model;
    dirs.push_back(NuisanceDirection::censoring("lambdaG_tz", [&m](double s, int z) {
      return s * m.coef_covariate(z)[0];
    }));
    std::vector<double> c(m.levels.size());
    double cz = 0.0;
    for (std::size_t z = 0; z < m.levels.size(); ++z) cz += m.h[z] * m.coef_covariate(z)[0];
    for (std::size_t z = 0; z < m.levels.size(); ++z) c[z] = m.coef_covariate(z)[0] - cz;
    dirs.push_back(NuisanceDirection::pmf("pmf_centered_z", c));
  }
  for (auto row : orthogonality_check(eval, dirs, data)) {
    row.pass = std::abs(row.estimate - row.null_value) <= 4.0 * row.se * scale + 1e-14;
    rows.push_back(row);
  }
  for (auto row : ks_failure_checks(tables, data)) {
    if (row.se > 0.0) row.pass = row.estimate <= 2.2 * scale;
    rows.push_back(row);
  }

  // optional pseudo-likelihood comparison block
  if (cfg.validate.sp_enabled && cfg.case_cohort) {
    int stream = 1000;
    for (double p0 : cfg.validate.sp_p0)
      for (double theta : cfg.validate.sp_theta) {
        CaseCohortSpec s;
        s.p0 = p0;
        s.theta = theta;
        s.h1 = cfg.case_cohort->h1;
        s.pi0 = cfg.validate.sp_pi0;
        const double analytic = sp_asymptotic_variance(s);
        const SpMcResult mc =
            sp_estimator_variance_mc(s, cfg.validate.sp_cohort, cfg.validate.sp_replications,
                                     SeedSpec{cfg.seed, static_cast<std::uint64_t>(stream)},
                                     cfg.threads);
        stream += cfg.validate.sp_replications + 16;
        const std::string tag =
            "sp/p0_" + fmt17(p0) + "_theta_" + fmt17(theta);
        rows.push_back(make_check(tag + "/variance", analytic, mc.variance, mc.se, scale));
      }
  }

  bool all_pass = true;
  std::vector<std::string> row_json;
  for (const auto& row : rows) {
    all_pass = all_pass && row.pass;
    row_json.push_back(obj({{"name", str(row.name)},
                            {"null", num(row.null_value)},
                            {"estimate", num(row.estimate)},
                            {"se", num(row.se)},
                            {"pass", boolean(row.pass)}}));
  }

  RunOutcome out;
  out.exit_code = all_pass ? 0 : 1;
  out.output = obj({{"schema_version", integer(1)},
                    {"command", str("validate")},
                    {"seed", integer(static_cast<long long>(cfg.seed))},
                    {"n", integer(cfg.validate.n)},
                    {"checks", arr(row_json)},
                    {"all_pass", boolean(all_pass)}}) +
               "\n";
  return out;
}

RunOutcome run_command(const RunConfig& cfg) {
  RunOutcome out;
  if (cfg.command == "bound") {
    out.output = cmd_bound(cfg);
  } else if (cfg.command == "sweep") {
    out.output = cmd_sweep(cfg);
  } else if (cfg.command == "table1") {
    out.output = cmd_table1(cfg);
  } else if (cfg.command == "validate") {
    return cmd_validate(cfg);
  } else {
    throw ValidationError("unknown command: " + cfg.command);
  }
  return out;
}

}  // namespace coxbound
