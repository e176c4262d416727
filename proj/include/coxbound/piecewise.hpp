#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "coxbound/errors.hpp"

namespace coxbound {

// (1 - exp(-x)) / x, stable near x = 0.
inline double one_minus_exp_over(double x) {
  if (std::abs(x) < 1e-5) {
    return 1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0;
  }
  return -std::expm1(-x) / x;
}

// Nonnegative rate that is constant between consecutive breakpoints.
// rate(t) = rates[k] on (breaks[k-1], breaks[k]] with breaks[-1] = 0;
// the last rate extends beyond the last breakpoint.
struct PiecewiseRate {
  std::vector<double> breaks;  // strictly increasing, all > 0; may be empty
  std::vector<double> rates;   // size breaks.size() + 1, all >= 0

  static PiecewiseRate constant(double r) { return PiecewiseRate{{}, {r}}; }

  void validate() const {
    if (rates.size() != breaks.size() + 1)
      throw ValidationError("piecewise rate: rates must have one more entry than breaks");
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (breaks[i] <= 0.0 || (i > 0 && breaks[i] <= breaks[i - 1]))
        throw ValidationError("piecewise rate: breakpoints must be strictly increasing and positive");
    }
    for (double r : rates)
      if (!(r >= 0.0)) throw ValidationError("piecewise rate: negative or NaN rate");
  }

  // segment containing t when approached from the left (segment of (t-eps, t])
  std::size_t segment_left(double t) const {
    std::size_t k = 0;
    while (k < breaks.size() && t > breaks[k]) ++k;
    return k;
  }

  // segment that starts at t (value on (t, t+eps))
  std::size_t segment_right(double t) const {
    std::size_t k = 0;
    while (k < breaks.size() && t >= breaks[k]) ++k;
    return k;
  }

  double rate_left(double t) const { return rates[segment_left(t)]; }
  double rate_right(double t) const { return rates[segment_right(t)]; }

  // cumulative integral over (0, t]
  double cum(double t) const {
    double acc = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < breaks.size(); ++k) {
      if (t <= breaks[k]) return acc + rates[k] * (t - prev);
      acc += rates[k] * (breaks[k] - prev);
      prev = breaks[k];
    }
    return acc + rates.back() * (t - prev);
  }

  // smallest t with cum(t) = target; +inf when the total never reaches it
  double inverse_cum(double target) const {
    if (target <= 0.0) return 0.0;
    double acc = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < breaks.size(); ++k) {
      const double seg = rates[k] * (breaks[k] - prev);
      if (rates[k] > 0.0 && acc + seg >= target) return prev + (target - acc) / rates[k];
      acc += seg;
      prev = breaks[k];
    }
    if (rates.back() <= 0.0) return std::numeric_limits<double>::infinity();
    return prev + (target - acc) / rates.back();
  }
};

// Censoring time distribution for one covariate level: point masses plus an
// absolutely continuous part driven by a piecewise-constant hazard.  The law
// must place all of its mass in (0, tau]; with a piecewise-constant hazard
// this forces a positive atom at the largest support point.
//
// Atoms carry unconditional masses P(C = t); discrete hazards are derived
// against the running censoring survivor when needed.
struct CensoringLaw {
  struct Atom {
    double time;
    double mass;  // unconditional P(C = time)
  };
  std::vector<Atom> atoms;                         // strictly increasing times
  PiecewiseRate hazard = PiecewiseRate::constant(0.0);  // AC hazard part

  // all mass at a single time (end-of-study censoring)
  static CensoringLaw point_mass(double t) {
    CensoringLaw law;
    law.atoms.push_back({t, 1.0});
    return law;
  }

  // constant censoring hazard on (0, tau) with the leftover mass at tau
  static CensoringLaw exponential_capped(double rate, double tau) {
    CensoringLaw law;
    law.hazard = PiecewiseRate::constant(rate);
    law.atoms.push_back({tau, std::exp(-rate * tau)});
    return law;
  }

  void validate(double tau) const {
    hazard.validate();
    double prev = 0.0;
    for (const auto& a : atoms) {
      if (a.time <= prev || a.time > tau)
        throw ValidationError("censoring atoms must be strictly increasing in (0, tau]");
      if (!(a.mass > 0.0) || a.mass > 1.0)
        throw ValidationError("censoring atom mass must lie in (0, 1]");
      prev = a.time;
    }
    const double leftover = survivor(tau);
    if (std::abs(leftover) > 1e-10)
      throw ValidationError("censoring law leaves mass " + std::to_string(leftover) +
                            " beyond tau; atom masses plus continuous mass must sum to 1");
  }

  // P(C > t); right-continuous, counts atoms at times <= t
  double survivor(double t) const {
    double atom_part = 1.0;
    for (const auto& a : atoms) {
      if (a.time > t) break;
      atom_part *= 1.0 - discrete_hazard(a, std::exp(-hazard.cum(a.time)) * atom_part);
    }
    return std::exp(-hazard.cum(t)) * atom_part;
  }

  // P(C >= t): survivor just before t, excludes an atom at t itself
  double survivor_left(double t) const {
    double atom_part = 1.0;
    for (const auto& a : atoms) {
      if (a.time >= t) break;
      atom_part *= 1.0 - discrete_hazard(a, std::exp(-hazard.cum(a.time)) * atom_part);
    }
    return std::exp(-hazard.cum(t)) * atom_part;
  }

  // (time, discrete hazard) pairs: mass over survivor-left at each atom
  std::vector<std::pair<double, double>> discrete_hazards() const {
    std::vector<std::pair<double, double>> out;
    double atom_part = 1.0;
    for (const auto& a : atoms) {
      const double d = discrete_hazard(a, std::exp(-hazard.cum(a.time)) * atom_part);
      out.emplace_back(a.time, d);
      atom_part *= 1.0 - d;
    }
    return out;
  }

 private:
  static double discrete_hazard(const Atom& a, double s_left) {
    if (s_left <= 0.0) {
      if (a.mass > 1e-14) throw ValidationError("censoring atom after survivor reached zero");
      return 0.0;
    }
    const double d = a.mass / s_left;
    if (d > 1.0 + 1e-9)
      throw ValidationError("censoring atom mass exceeds remaining survivor mass");
    return std::min(d, 1.0);
  }
};

}  // namespace coxbound
