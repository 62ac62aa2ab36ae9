#include "fraclab/special.hpp"

#include <cmath>
#include <limits>

#include "fraclab/errors.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

double gamma_fn(double x) { return std::tgamma(x); }

double bessel_k(double nu, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InputError("bessel_k: x must be positive");
  nu = std::abs(nu);
  // Scaled integrand e^{-x (cosh u - 1)} cosh(nu u); the factor e^{-x} goes back at the end.
  auto f = [&](double u) { return std::exp(-x * (std::cosh(u) - 1.0)) * std::cosh(nu * u); };
  double U = 1.0;
  while (f(U) > 1e-18 * f(0.0)) {
    U *= 2.0;
    if (U > 1e3) throw NumericalError("bessel_k: cutoff did not converge", U);
  }
  auto trap = [&](int n) {
    const double h = U / n;
    double s = 0.5 * (f(0.0) + f(U));
    for (int i = 1; i < n; ++i) s += f(i * h);
    return s * h;
  };
  int n = 16;
  double prev = trap(n), diff = 0.0;
  for (int it = 0; it < 16; ++it) {
    n *= 2;
    const double cur = trap(n);
    diff = std::abs(cur - prev) / std::abs(cur);
    // Trapezoid error decays double-exponentially here; what is left is rounding.
    if (diff <= 1e-14) return std::exp(-x) * cur;
    prev = cur;
  }
  throw NumericalError("bessel_k: trapezoid did not converge", diff);
}

double bessel_k_moment(double nu, double beta, double gamma) {
  if (!(beta > 0.0 && gamma > 0.0)) throw InputError("bessel_k_moment: beta and gamma must be positive");
  // The integrand peaks near t* = sqrt(beta/gamma); panels double outward from it.
  const double ts = std::sqrt(beta / gamma);
  const GaussRule& g = gauss_legendre(30);
  auto f = [&](double t) { return std::pow(t, nu - 1.0) * std::exp(-beta / t - gamma * t); };
  double acc = 0.0;
  double hi = ts;
  for (int k = 0; k < 200; ++k) {
    const double lo = 0.5 * hi;
    const double part = integrate(g, lo, hi, f);
    acc += part;
    hi = lo;
    if (beta / hi > 800.0) break;
  }
  double lo = ts;
  for (int k = 0; k < 200; ++k) {
    const double up = 2.0 * lo;
    // Long panels lose accuracy once gamma * t is large; split them.
    const int pieces = std::max(1, static_cast<int>(std::ceil(gamma * (up - lo) / 4.0)));
    const double step = (up - lo) / pieces;
    for (int m = 0; m < pieces; ++m) acc += integrate(g, lo + m * step, lo + (m + 1) * step, f);
    lo = up;
    if (gamma * lo > 800.0) break;
  }
  return acc;
}

double neumann_constant(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
  const double a = 1.0 - 2.0 * s;
  return std::pow(2.0, -a) * std::tgamma((1.0 - a) / 2.0) / std::tgamma((1.0 + a) / 2.0);
}

}  // namespace fraclab
