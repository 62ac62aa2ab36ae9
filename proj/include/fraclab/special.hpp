#pragma once

namespace fraclab {

double gamma_fn(double x);

// K_nu(x) for real nu and x > 0 from int_0^inf e^{-x cosh u} cosh(nu u) du.
double bessel_k(double nu, double x);

// int_0^inf t^{nu-1} e^{-beta/t - gamma t} dt by dyadic Gauss-Legendre panels in t.
double bessel_k_moment(double nu, double beta, double gamma);

// c_a = 2^{-a} Gamma((1-a)/2) / Gamma((1+a)/2), a = 1 - 2s.
double neumann_constant(double s);

}  // namespace fraclab
