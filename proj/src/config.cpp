#include "coxbound/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace coxbound {

namespace {

using nlohmann::json;

template <typename T>
void get_if(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

Phase1Scope parse_phase1(const std::string& s) {
  if (s == "y_delta_v") return Phase1Scope::YDeltaV;
  if (s == "delta_v") return Phase1Scope::DeltaV;
  throw ValidationError("config: unknown phase1 scope '" + s + "'");
}

PiecewiseRate parse_rate(const json& j) {
  PiecewiseRate r;
  if (j.contains("breaks")) r.breaks = j.at("breaks").get<std::vector<double>>();
  r.rates = j.at("rates").get<std::vector<double>>();
  r.validate();
  return r;
}

BuiltDesign parse_raw_model(const json& j) {
  BuiltDesign out;
  FullDataModel& m = out.model;
  m.tau = j.at("tau").get<double>();
  m.baseline = parse_rate(j.at("baseline"));
  const std::string scope = j.value("coefficient", "z");
  if (scope != "z" && scope != "x") throw ValidationError("config: coefficient must be 'z' or 'x'");
  m.scope = scope == "x" ? CoefficientScope::XOnly : CoefficientScope::FullZ;
  const auto theta = j.at("theta").get<std::vector<double>>();
  m.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());

  const auto& levels = j.at("levels");
  std::vector<double> h;
  int index = 0;
  for (const auto& lv : levels) {
    CovariateLevel level;
    const auto x = lv.at("x").get<std::vector<double>>();
    const auto v = lv.value("v", std::vector<double>{});
    level.x = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    level.v = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    level.index = index++;
    m.levels.push_back(level);
    h.push_back(lv.at("h").get<double>());

    CensoringLaw law;
    const auto& cj = lv.at("censoring");
    if (cj.contains("hazard")) law.hazard = parse_rate(cj.at("hazard"));
    bool remainder_at_tau = cj.value("remainder_at_tau", false);
    if (cj.contains("atoms"))
      for (const auto& aj : cj.at("atoms"))
        law.atoms.push_back({aj.at("time").get<double>(), aj.at("mass").get<double>()});
    if (remainder_at_tau) {
      double leftover = 1.0;
      // mass not yet claimed by atoms or the continuous part up to tau
      CensoringLaw probe = law;
      leftover = probe.survivor(m.tau);
      if (leftover > 0.0) law.atoms.push_back({m.tau, leftover});
    }
    m.censoring.push_back(law);
  }
  m.h = Eigen::Map<const Eigen::VectorXd>(h.data(), h.size());
  m.validate();

  const auto& dj = j.at("design");
  MissingnessDesign& d = out.design;
  d.scope = parse_phase1(dj.value("phase1", "y_delta_v"));
  get_if(dj, "sigma", d.sigma);
  if (dj.contains("time_breaks")) d.time_breaks = dj.at("time_breaks").get<std::vector<double>>();
  d.prob.resize(2);
  d.prob[0] = dj.at("pi_censored").get<std::vector<std::vector<double>>>();
  d.prob[1] = dj.at("pi_failure").get<std::vector<std::vector<double>>>();
  d.validate();

  out.variant = DesignVariant{m.scope, d.scope};
  return out;
}

}  // namespace

BuiltDesign RunConfig::build() const {
  if (case_cohort) return case_cohort_model(*case_cohort, case_cohort_phase1);
  if (stratified) return stratified_model(*stratified);
  if (raw_model) return *raw_model;
  throw ValidationError("config: no model block");
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    get_if(j, "schema_version", cfg.schema_version);
    if (cfg.schema_version != 1) throw ValidationError("config: unsupported schema_version");
    cfg.command = j.at("command").get<std::string>();
    if (cfg.command != "bound" && cfg.command != "sweep" && cfg.command != "table1" &&
        cfg.command != "validate")
      throw ValidationError("config: unknown command '" + cfg.command + "'");

    if (j.contains("model")) {
      const auto& mj = j.at("model");
      const std::string type = mj.at("type").get<std::string>();
      if (type == "case_cohort") {
        CaseCohortSpec s;
        get_if(mj, "p0", s.p0);
        get_if(mj, "theta", s.theta);
        get_if(mj, "h1", s.h1);
        get_if(mj, "pi0", s.pi0);
        s.validate();
        cfg.case_cohort = s;
        if (mj.contains("phase1"))
          cfg.case_cohort_phase1 = parse_phase1(mj.at("phase1").get<std::string>());
      } else if (type == "stratified") {
        StratifiedSpec s;
        if (mj.contains("p0"))
          s.lambda = rate_from_baseline_prob(mj.at("p0").get<double>());
        get_if(mj, "lambda", s.lambda);
        get_if(mj, "theta", s.theta);
        get_if(mj, "px0", s.px0);
        get_if(mj, "alpha", s.alpha);
        get_if(mj, "beta", s.beta);
        get_if(mj, "pi0", s.pi0);
        get_if(mj, "pi1", s.pi1);
        s.validate();
        cfg.stratified = s;
      } else if (type == "raw") {
        cfg.raw_model = parse_raw_model(mj);
      } else {
        throw ValidationError("config: unknown model type '" + type + "'");
      }
    }

    if (j.contains("grid")) {
      const auto& gj = j.at("grid");
      get_if(gj, "initial_nodes", cfg.grid.initial_intervals);
      get_if(gj, "refine", cfg.grid.refine);
      get_if(gj, "rel_tol", cfg.grid.rel_tol);
      get_if(gj, "max_nodes", cfg.grid.max_intervals);
      if (cfg.grid.initial_intervals < 2 || cfg.grid.max_intervals < cfg.grid.initial_intervals)
        throw ValidationError("config: invalid grid controls");
    }
    if (j.contains("solver")) {
      const auto& sj = j.at("solver");
      get_if(sj, "condition_ceiling", cfg.solver.condition_ceiling);
      if (sj.contains("route")) cfg.route = sj.at("route").get<std::string>();
    }
    get_if(j, "route", cfg.route);
    if (cfg.route != "T" && cfg.route != "K" && cfg.route != "both")
      throw ValidationError("config: route must be T, K, or both");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    get_if(j, "threads", cfg.threads);
    if (cfg.threads < 1) throw ValidationError("config: threads must be >= 1");
    get_if(j, "out", cfg.out_path);

    if (j.contains("sweep")) {
      const auto& sj = j.at("sweep");
      const std::string kind = sj.at("kind").get<std::string>();
      if (kind == "case_cohort") {
        CaseCohortSweep s;
        get_if(sj, "p0", s.p0);
        get_if(sj, "theta", s.theta);
        get_if(sj, "pi0", s.pi0);
        get_if(sj, "h1", s.h1);
        get_if(sj, "with_sp", s.with_sp);
        cfg.case_cohort_sweep = s;
      } else if (kind == "stratified") {
        StratifiedSweep s;
        get_if(sj, "p0", s.p0);
        get_if(sj, "sens", s.sens);
        get_if(sj, "spec", s.spec);
        get_if(sj, "theta", s.theta);
        get_if(sj, "px0", s.px0);
        get_if(sj, "total_fraction", s.total_fraction);
        if (sj.contains("allocation"))
          s.allocation = allocation_rule_from_string(sj.at("allocation").get<std::string>());
        cfg.stratified_sweep = s;
      } else {
        throw ValidationError("config: unknown sweep kind '" + kind + "'");
      }
    }

    if (j.contains("table1")) {
      const auto& tj = j.at("table1");
      get_if(tj, "theta_set", cfg.table1.theta_set);
      get_if(tj, "lambda", cfg.table1.lambda);
      get_if(tj, "px1", cfg.table1.px1);
      get_if(tj, "levels", cfg.table1.levels);
      if (tj.contains("allocation"))
        cfg.table1.allocation = allocation_rule_from_string(tj.at("allocation").get<std::string>());
    }

    if (j.contains("validate")) {
      const auto& vj = j.at("validate");
      get_if(vj, "n", cfg.validate.n);
      get_if(vj, "tolerance_scale", cfg.validate.tolerance_scale);
      get_if(vj, "sp_enabled", cfg.validate.sp_enabled);
      get_if(vj, "sp_cohort", cfg.validate.sp_cohort);
      get_if(vj, "sp_replications", cfg.validate.sp_replications);
      get_if(vj, "sp_p0", cfg.validate.sp_p0);
      get_if(vj, "sp_theta", cfg.validate.sp_theta);
      get_if(vj, "sp_pi0", cfg.validate.sp_pi0);
      if (cfg.validate.n < 1) throw ValidationError("config: validate.n must be positive");
      if (!(cfg.validate.tolerance_scale >= 0.0))
        throw ValidationError("config: tolerance_scale must be nonnegative");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const StructuralError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  // command-specific requirements
  if (cfg.command == "bound" || cfg.command == "validate") {
    if (!cfg.case_cohort && !cfg.stratified && !cfg.raw_model)
      throw ValidationError("config: command '" + cfg.command + "' requires a model block");
  }
  if (cfg.command == "sweep" && !cfg.case_cohort_sweep && !cfg.stratified_sweep)
    throw ValidationError("config: command 'sweep' requires a sweep block");
  int blocks = 0;
  blocks += cfg.case_cohort.has_value();
  blocks += cfg.stratified.has_value();
  blocks += cfg.raw_model.has_value();
  if (blocks > 1) throw ValidationError("config: more than one model block");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace coxbound
