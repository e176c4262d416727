#include "coxbound/quadrature.hpp"

#include <cmath>

namespace coxbound {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adsimp(const std::function<double(double)>& f, double a, double b, double fa, double fm,
              double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adsimp(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adsimp(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  return adsimp(f, a, b, fa, fm, fb, simpson(fa, fm, fb, b - a), tol, max_depth);
}

double integrate_piecewise(const std::function<double(double)>& f, const std::vector<double>& cuts,
                           double tol) {
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i)
    total += integrate(f, cuts[i - 1], cuts[i], tol / static_cast<double>(cuts.size()));
  return total;
}

}  // namespace coxbound
