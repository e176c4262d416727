#include <doctest.h>

#include "coxbound/piecewise.hpp"
#include "coxbound/quadrature.hpp"

using namespace coxbound;

TEST_CASE("piecewise rate: cumulative and inverse agree") {
  PiecewiseRate r{{0.3, 0.7}, {0.5, 2.0, 0.1}};
  r.validate();
  CHECK(r.cum(0.3) == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(r.cum(0.7) == doctest::Approx(0.15 + 0.8).epsilon(1e-15));
  CHECK(r.cum(1.0) == doctest::Approx(0.15 + 0.8 + 0.03).epsilon(1e-15));
  for (double target : {0.01, 0.1, 0.5, 0.95}) {
    const double t = r.inverse_cum(target);
    CHECK(r.cum(t) == doctest::Approx(target).epsilon(1e-12));
  }
  CHECK(r.cum(0.5) == doctest::Approx(integrate([&](double s) { return r.rate_left(s); }, 0.0, 0.3,
                                                1e-14) +
                                      integrate([&](double s) { return r.rate_left(s); }, 0.3, 0.5,
                                                1e-14))
                          .epsilon(1e-12));
}

TEST_CASE("piecewise rate: validation failures") {
  CHECK_THROWS_AS(PiecewiseRate({}, {-1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(PiecewiseRate({0.5, 0.4}, {1.0, 1.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(PiecewiseRate({0.5}, {1.0}).validate(), ValidationError);
}

TEST_CASE("censoring law: point mass") {
  const CensoringLaw law = CensoringLaw::point_mass(1.0);
  law.validate(1.0);
  CHECK(law.survivor(0.999) == 1.0);
  CHECK(law.survivor(1.0) == 0.0);
  CHECK(law.survivor_left(1.0) == 1.0);
}

TEST_CASE("censoring law: hazard plus terminal atom is proper") {
  const CensoringLaw law = CensoringLaw::exponential_capped(0.7, 1.0);
  law.validate(1.0);
  CHECK(law.survivor(0.5) == doctest::Approx(std::exp(-0.35)).epsilon(1e-15));
  CHECK(law.survivor(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(law.survivor_left(1.0) == doctest::Approx(std::exp(-0.7)).epsilon(1e-15));
  const auto haz = law.discrete_hazards();
  REQUIRE(haz.size() == 1);
  CHECK(haz[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("censoring law: interior atom") {
  CensoringLaw law;
  law.hazard = PiecewiseRate::constant(0.2);
  law.atoms.push_back({0.4, 0.3});
  law.atoms.push_back({1.0, std::exp(-0.2) * (1.0 - 0.3 / std::exp(-0.08))});
  law.validate(1.0);
  // mass balance: AC mass + atoms = 1
  const double ac = integrate([&](double s) { return 0.2 * law.survivor_left(s); }, 0.0, 0.4,
                              1e-13) +
                    integrate([&](double s) { return 0.2 * law.survivor_left(s); }, 0.4, 1.0,
                              1e-13);
  double atoms = 0.0;
  for (const auto& a : law.atoms) atoms += a.mass;
  CHECK(ac + atoms == doctest::Approx(1.0).epsilon(1e-10));
  // excess atom mass is rejected
  CensoringLaw bad;
  bad.atoms.push_back({0.5, 0.9});
  bad.atoms.push_back({0.6, 0.2});
  CHECK_THROWS_AS(bad.validate(1.0), ValidationError);
}

TEST_CASE("adaptive integration reproduces closed forms") {
  CHECK(integrate([](double x) { return std::exp(-2.0 * x); }, 0.0, 1.0, 1e-13) ==
        doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-12));
  CHECK(integrate_piecewise([](double x) { return x < 0.5 ? 1.0 : 2.0; }, {0.0, 0.5, 1.0}) ==
        doctest::Approx(1.5).epsilon(1e-12));
}
