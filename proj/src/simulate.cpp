#include "coxbound/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "coxbound/quadrature.hpp"

namespace coxbound {

double sample_censoring(const CensoringLaw& law, double u_open) {
  // invert the right-continuous survivor at target = 1 - u
  const double target = 1.0 - u_open;
  double t0 = 0.0, s0 = 1.0;
  const auto haz = law.discrete_hazards();
  for (const auto& [time, d] : haz) {
    const double s_mid = s0 * std::exp(-(law.hazard.cum(time) - law.hazard.cum(t0)));
    if (target > s_mid) {
      return law.hazard.inverse_cum(law.hazard.cum(t0) + std::log(s0 / target));
    }
    const double s_post = s_mid * (1.0 - d);
    if (target > s_post) return time;
    t0 = time;
    s0 = s_post;
  }
  return law.hazard.inverse_cum(law.hazard.cum(t0) + std::log(s0 / target));
}

std::vector<Observation> simulate(const ObservedTables& t, int n, SeedSpec seed) {
  // single stream, generated in order: identical seeds give identical data
  std::vector<Observation> out;
  out.reserve(n);
  Rng rng(seed);
  const int L = t.num_levels();
  std::vector<double> cdf(L);
  double acc = 0.0;
  for (int z = 0; z < L; ++z) cdf[z] = (acc += t.model.h[z]);

  for (int i = 0; i < n; ++i) {
    const double uz = rng.uniform();
    int z = 0;
    while (z + 1 < L && uz >= cdf[z]) ++z;

    const double failure_time = t.model.baseline.inverse_cum(rng.exponential() / t.model.risk(z));
    const double censor_time = sample_censoring(t.model.censoring[z], rng.uniform_open());

    Observation o;
    o.delta = failure_time <= censor_time ? 1 : 0;
    o.y = o.delta ? failure_time : censor_time;
    o.group = t.level_group[z];
    const double pi = t.design.pi(o.y, o.delta, o.group);
    o.r = rng.bernoulli(pi) ? 1 : 0;
    o.level = o.r ? z : -1;
    out.push_back(o);
  }
  return out;
}

MomentReport empirical_moments(const std::function<Eigen::VectorXd(const Observation&)>& eval,
                               const std::vector<Observation>& data, int dim) {
  if (data.empty()) throw ValidationError("empirical moments: empty dataset");
  const int n = static_cast<int>(data.size());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd values(dim, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd v = eval(data[i]);
    values.col(i) = v;
    sum += v;
    sum2 += v * v.transpose();
  }
  MomentReport rep;
  rep.n = n;
  rep.mean = sum / n;
  rep.cov = sum2 / n - rep.mean * rep.mean.transpose();
  rep.mean_se.resize(dim);
  rep.var_se.resize(dim);
  for (int j = 0; j < dim; ++j) {
    rep.mean_se[j] = std::sqrt(rep.cov(j, j) / n);
    double m4 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = values(j, i) - rep.mean[j];
      m4 += c * c * c * c;
    }
    m4 /= n;
    rep.var_se[j] = std::sqrt(std::max(m4 - rep.cov(j, j) * rep.cov(j, j), 0.0) / n);
  }
  return rep;
}

NuisanceScoreEvaluator::NuisanceScoreEvaluator(const ObservedTables& t,
                                               const NuisanceDirection& dir)
    : t_(&t), dir_(dir) {
  const int L = t.num_levels();
  const double tau = t.model.tau;

  if (dir_.kind == NuisanceDirection::Kind::Pmf) {
    if (static_cast<int>(dir_.c.size()) != L)
      throw ValidationError("pmf direction: size must match the covariate support");
    double mean = 0.0;
    for (int z = 0; z < L; ++z) mean += dir_.c[z] * t.model.h[z];
    if (std::abs(mean) > 1e-10)
      throw ValidationError("pmf direction: payload must have mean zero under h");
  }

  // prefix integrals of the direction against the relevant hazard on a knot
  // grid (model breakpoints plus a uniform refinement)
  knots_.push_back(0.0);
  const int refine = 512;
  for (int j = 1; j <= refine; ++j) knots_.push_back(tau * j / refine);
  for (double b : t.model.baseline.breaks)
    if (b < tau) knots_.push_back(b);
  for (const auto& law : t.model.censoring)
    for (double b : law.hazard.breaks)
      if (b < tau) knots_.push_back(b);
  std::sort(knots_.begin(), knots_.end());
  knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());

  if (dir_.kind == NuisanceDirection::Kind::Lambda) {
    Eigen::VectorXd pre(knots_.size());
    pre[0] = 0.0;
    for (std::size_t j = 1; j < knots_.size(); ++j)
      pre[j] = pre[j - 1] + integrate(
                                [&](double s) { return dir_.a(s) * t.model.baseline.rate_left(s); },
                                knots_[j - 1], knots_[j], 1e-13);
    prefix_.assign(1, std::move(pre));
  } else if (dir_.kind == NuisanceDirection::Kind::LambdaG) {
    prefix_.resize(L);
    atom_haz_.resize(L);
    for (int z = 0; z < L; ++z) {
      Eigen::VectorXd pre(knots_.size());
      pre[0] = 0.0;
      const auto& law = t.model.censoring[z];
      for (std::size_t j = 1; j < knots_.size(); ++j)
        pre[j] = pre[j - 1] + integrate(
                                  [&](double s) { return dir_.b(s, z) * law.hazard.rate_left(s); },
                                  knots_[j - 1], knots_[j], 1e-13);
      prefix_[z] = std::move(pre);
      atom_haz_[z] = law.discrete_hazards();
    }
  }

  if (t.design.scope == Phase1Scope::DeltaV) {
    pooled_.setZero(2, static_cast<int>(t.groups.size()));
    for (std::size_t g = 0; g < t.groups.size(); ++g)
      for (int delta = 0; delta < 2; ++delta) {
        double num = 0.0, den = 0.0;
        for (int z : t.groups[g])
          for (int k = 0; k < t.num_cells(); ++k) {
            const double mass = (delta == 1 ? t.q1(z, k) : t.q2(z, k)) * t.model.h[z];
            if (mass == 0.0) continue;
            num += mass * fulldata(t.grid.nodes[k], delta, z);
            den += mass;
          }
        if (den > 0.0) pooled_(delta, g) = num / den;
      }
  }
}

double NuisanceScoreEvaluator::fulldata(double y, int delta, int level) const {
  const auto prefix_at = [&](const Eigen::VectorXd& pre,
                             const std::function<double(double)>& f) {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
    std::size_t j = static_cast<std::size_t>(it - knots_.begin());
    if (j >= knots_.size()) j = knots_.size() - 1;
    const double a = knots_[j - 1];
    return pre[j - 1] + (y > a ? integrate(f, a, y, 1e-13) : 0.0);
  };
  switch (dir_.kind) {
    case NuisanceDirection::Kind::Lambda: {
      const double cum = prefix_at(prefix_[0], [&](double s) {
        return dir_.a(s) * t_->model.baseline.rate_left(s);
      });
      return delta * dir_.a(y) - t_->model.risk(level) * cum;
    }
    case NuisanceDirection::Kind::LambdaG: {
      const auto& law = t_->model.censoring[level];
      double cum = prefix_at(prefix_[level],
                             [&](double s) { return dir_.b(s, level) * law.hazard.rate_left(s); });
      // a failure at an atom time is a null event; the failure branch uses the
      // left limit so it pairs with density integration
      for (const auto& [time, d] : atom_haz_[level])
        if (delta == 1 ? time < y : time <= y) cum += dir_.b(time, level) * d;
      return (1 - delta) * dir_.b(y, level) - cum;
    }
    case NuisanceDirection::Kind::Pmf:
      return dir_.c[level];
  }
  return 0.0;
}

double NuisanceScoreEvaluator::phase1_mean(double y, int delta, int group) const {
  const auto& t = *t_;
  if (t.design.scope == Phase1Scope::DeltaV) return pooled_(delta, group);
  double num = 0.0, den = 0.0;
  const auto& members = t.groups[group];
  if (delta == 1) {
    for (int z : members) {
      const double w = t.w1_density(y, z) * t.model.h[z];
      if (w == 0.0) continue;
      num += w * fulldata(y, 1, z);
      den += w;
    }
  } else {
    double atom_total = 0.0;
    for (int z : members) atom_total += t.w2_atom(y, z);
    for (int z : members) {
      const double w = (atom_total > 0.0 ? t.w2_atom(y, z) : t.w2_density(y, z)) * t.model.h[z];
      if (w == 0.0) continue;
      num += w * fulldata(y, 0, z);
      den += w;
    }
  }
  return den > 0.0 ? num / den : 0.0;
}

double NuisanceScoreEvaluator::observed(const Observation& o) const {
  if (o.r == 1) return fulldata(o.y, o.delta, o.level);
  return phase1_mean(o.y, o.delta, o.group);
}

std::vector<CheckRow> orthogonality_check(const ScoreEvaluator& score,
                                          const std::vector<NuisanceDirection>& directions,
                                          const std::vector<Observation>& data) {
  std::vector<CheckRow> rows;
  const int n = static_cast<int>(data.size());
  const int d = score.dim();
  std::vector<Eigen::VectorXd> kstar(n);
  for (int i = 0; i < n; ++i) {
    const auto& o = data[i];
    kstar[i] = score.score(o.y, o.delta, o.r, o.level, o.group);
  }
  for (const auto& dir : directions) {
    const NuisanceScoreEvaluator nse(score.tables(), dir);
    for (int c = 0; c < d; ++c) {
      double sk = 0.0, ss = 0.0, sw = 0.0, sw2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double s = nse.observed(data[i]);
        const double w = kstar[i][c] * s;
        sk += kstar[i][c];
        ss += s;
        sw += w;
        sw2 += w * w;
      }
      const double mean_w = sw / n;
      CheckRow row;
      row.name = "orthogonality/" + dir.name + (d > 1 ? "/comp" + std::to_string(c) : "");
      row.null_value = 0.0;
      row.estimate = mean_w - (sk / n) * (ss / n);
      row.se = std::sqrt(std::max(sw2 / n - mean_w * mean_w, 0.0) / n);
      row.pass = std::abs(row.estimate) <= 4.0 * row.se + 1e-14;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

// at-risk subcohort counts by covariate value at each failure time
struct SpReplicate {
  bool ok = false;
  double theta_hat = 0.0;
};

SpReplicate sp_one_replicate(const CaseCohortSpec& spec, int n, Rng& rng) {
  const double lam = spec.lambda();
  const double rate1 = lam * std::exp(spec.theta);
  std::vector<std::pair<double, int>> failures;        // (y, z)
  std::vector<std::pair<double, int>> subcohort;       // (y, z)
  failures.reserve(static_cast<std::size_t>(n * spec.p0 * 2.5) + 16);
  for (int i = 0; i < n; ++i) {
    const int z = rng.bernoulli(spec.h1) ? 1 : 0;
    const double failure_time = rng.exponential() / (z ? rate1 : lam);
    const double y = std::min(failure_time, 1.0);
    const int delta = failure_time <= 1.0 ? 1 : 0;
    const bool in_subcohort = rng.bernoulli(spec.pi0);
    if (delta) failures.emplace_back(y, z);
    if (in_subcohort) subcohort.emplace_back(y, z);
  }
  SpReplicate rep;
  if (failures.empty() || subcohort.empty()) return rep;

  std::sort(failures.begin(), failures.end());
  std::sort(subcohort.begin(), subcohort.end());

  // per failure time, counts of subcohort members still at risk
  const int nf = static_cast<int>(failures.size());
  std::vector<double> n0(nf), n1(nf);
  long c0 = 0, c1 = 0;
  for (const auto& [y, z] : subcohort) (z ? c1 : c0)++;
  std::size_t ptr = 0;
  for (int i = 0; i < nf; ++i) {
    while (ptr < subcohort.size() && subcohort[ptr].first < failures[i].first) {
      (subcohort[ptr].second ? c1 : c0)--;
      ++ptr;
    }
    n0[i] = static_cast<double>(c0);
    n1[i] = static_cast<double>(c1);
  }

  const auto pseudo_score = [&](double theta) {
    const double e = std::exp(theta);
    double s = 0.0;
    for (int i = 0; i < nf; ++i) {
      const double den = n0[i] + n1[i] * e;
      s += failures[i].second - (den > 0.0 ? n1[i] * e / den : 0.0);
    }
    return s;
  };

  double lo = spec.theta - 6.0, hi = spec.theta + 6.0;
  double flo = pseudo_score(lo), fhi = pseudo_score(hi);
  for (int tries = 0; tries < 4 && flo < 0.0; ++tries) flo = pseudo_score(lo -= 12.0);
  for (int tries = 0; tries < 4 && fhi > 0.0; ++tries) fhi = pseudo_score(hi += 12.0);
  if (!(flo >= 0.0 && fhi <= 0.0)) return rep;  // no root: flagged

  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (pseudo_score(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  rep.ok = true;
  rep.theta_hat = 0.5 * (lo + hi);
  return rep;
}

}  // namespace

SpMcResult sp_estimator_variance_mc(const CaseCohortSpec& spec, int cohort_size, int replications,
                                    SeedSpec seed, int threads) {
  std::vector<SpReplicate> reps(replications);
  parallel_for(replications, threads, [&](int r) {
    Rng rng(SeedSpec{seed.root, seed.stream + static_cast<std::uint64_t>(r)});
    reps[r] = sp_one_replicate(spec, cohort_size, rng);
  });
  SpMcResult res;
  std::vector<double> w;
  w.reserve(replications);
  const double root_n = std::sqrt(static_cast<double>(cohort_size));
  for (const auto& rep : reps) {
    if (rep.ok)
      w.push_back(root_n * (rep.theta_hat - spec.theta));
    else
      res.flagged++;
  }
  res.used = static_cast<int>(w.size());
  if (res.used < 2) throw NumericError("pseudo-likelihood simulation: too few usable replicates");
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= res.used;
  double m2 = 0.0, m4 = 0.0;
  for (double x : w) {
    const double c = x - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  m2 /= res.used;
  m4 /= res.used;
  res.variance = m2;
  res.se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / res.used);
  return res;
}

std::vector<CheckRow> ks_failure_checks(const ObservedTables& t,
                                        const std::vector<Observation>& data) {
  std::vector<CheckRow> rows;
  for (int z = 0; z < t.num_levels(); ++z) {
    std::vector<double> ys;
    for (const auto& o : data)
      if (o.r == 1 && o.delta == 1 && o.level == z) ys.push_back(o.y);
    CheckRow row;
    row.name = "ks_failure_cdf/level" + std::to_string(z);
    if (ys.size() < 8) {
      row.pass = true;  // not enough data to test
      rows.push_back(row);
      continue;
    }
    std::sort(ys.begin(), ys.end());
    const double total = t.w1_cum(t.model.tau, z);
    double dmax = 0.0;
    const double n = static_cast<double>(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const double f = t.w1_cum(ys[i], z) / total;
      dmax = std::max(dmax, std::abs(f - static_cast<double>(i) / n));
      dmax = std::max(dmax, std::abs(static_cast<double>(i + 1) / n - f));
    }
    row.estimate = std::sqrt(n) * dmax;
    row.se = 1.0;
    // sqrt(n)-scaled sup distance; 2.2 bounds the Kolmogorov law tail at the
    // same false-alarm level as the 4-standard-error convention
    row.pass = row.estimate <= 2.2;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace coxbound
