#pragma once

#include <complex>
#include <string>
#include <vector>

namespace fraclab {

using cplx = std::complex<double>;

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

const GaussRule& gauss_legendre(int order);

// Integrates f over [lo, hi] with a Gauss-Legendre rule.
template <class F>
auto integrate(const GaussRule& g, double lo, double hi, F&& f) {
  const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  decltype(f(c)) s{};
  for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(c + h * g.x[i]);
  return s * h;
}

// e^z - 1 without cancellation for small |z|.
cplx expm1(cplx z);

// Quadrature for int_0^inf tau^{-s-1} (e^{-w tau} - 1) dtau, done in x = |w| tau:
// Taylor series on (0, x0], Gauss-Legendre on dyadic panels [x0 2^k, x0 2^{k+1}], and an
// integration-by-parts expansion beyond x0 2^panels.
struct QuadratureScheme {
  double x0 = 1.0 / 128;
  int panels = 13;
  int order = 20;
  int series_order = 4;
  double max_width = 1.0;

  void validate() const;
  double x_max() const;
  QuadratureScheme refined() const;
  // Series truncation plus smallest retained tail term, relative to |w|^s.
  double declared_error_bound(double s) const;
  std::string digest() const;
};

cplx balakrishnan_integral(double s, cplx w, const QuadratureScheme& q = {});

// -s/Gamma(1-s) times the integral above; equals w^s on the principal branch.
cplx balakrishnan_symbol(double s, cplx w, const QuadratureScheme& q = {});

// int_0^inf x^{-p} e^{-1/(4x)} e^{-zeta x} dx for Re zeta >= 0. Finite for zeta = 0 only when p > 1.
cplx kernel_integral(double p, cplx zeta);

}  // namespace fraclab
