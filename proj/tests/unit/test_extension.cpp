#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "fraclab/extension.hpp"
#include "fraclab/special.hpp"

using namespace fraclab;

namespace {

// Chain with a lambda = 1 mode: 6 nodes, spacing 1 gives 2 - 2 cos(pi/3) = 1 at k = 1.
SpectralDecomposition chain6() { return spectral_decompose(assemble(euclidean(1, 6, 6.0))); }

}  // namespace

TEST_CASE("modified Bessel K against Boost") {
  for (double nu : {0.0, 0.3, 0.5, 1.2, 2.5})
    for (double x : {0.05, 0.5, 1.0, 5.0, 30.0})
      CHECK(bessel_k(nu, x) == doctest::Approx(boost::math::cyl_bessel_k(nu, x)).epsilon(1e-12));
  CHECK(bessel_k(0.5, 1.0) == doctest::Approx(std::sqrt(std::numbers::pi / 2) * std::exp(-1.0)).epsilon(1e-13));
  for (double x : {0.5, 1.0, 5.0}) CHECK(std::abs(bessel_k(0.3, x) - bessel_k(-0.3, x)) <= 1e-10);
}

TEST_CASE("Bessel moment formula") {
  // int t^{nu-1} e^{-beta/t - gamma t} dt = 2 (beta/gamma)^{nu/2} K_nu(2 sqrt(beta gamma)).
  for (double nu : {0.25, 0.5, 0.75})
    for (auto [b, g] : {std::pair{1.0, 1.0}, std::pair{0.2, 3.0}, std::pair{4.0, 0.5}}) {
      const double closed = 2 * std::pow(b / g, nu / 2) * boost::math::cyl_bessel_k(nu, 2 * std::sqrt(b * g));
      CHECK(bessel_k_moment(nu, b, g) == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("Neumann constant") {
  CHECK(neumann_constant(0.5) == 1.0);
  for (double s : {0.25, 0.75}) {
    const double a = 1 - 2 * s;
    const double oracle = std::pow(2.0, -a) * boost::math::tgamma((1 - a) / 2) / boost::math::tgamma((1 + a) / 2);
    CHECK(neumann_constant(s) == doctest::Approx(oracle).epsilon(1e-14));
  }
}

TEST_CASE("Poisson mode") {
  for (double s : {0.25, 0.5, 0.75})
    for (double z : {1e-3, 0.5, 2.0}) {
      CHECK(poisson_mode(s, z, 0.0) == cplx(1.0));
      CHECK(std::abs(poisson_mode_quadrature(s, z, 0.0) - 1.0) <= 1e-10);
    }
  for (double z : {0.01, 0.3, 1.0, 3.0}) CHECK(std::abs(poisson_mode(0.5, z, 1.0) - std::exp(-z)) <= 1e-10);
  // General s, sigma = 0: 2^{1-s}/Gamma(s) (z sqrt(lambda))^s K_s(z sqrt(lambda)).
  for (double s : {0.25, 0.75}) {
    const double lam = 2.5, z = 0.7, x = z * std::sqrt(lam);
    const double closed = std::pow(2.0, 1 - s) / boost::math::tgamma(s) * std::pow(x, s) * boost::math::cyl_bessel_k(s, x);
    CHECK(std::abs(poisson_mode(s, z, lam) - closed) <= 1e-10);
  }
  const cplx w(1.0, 3.0);
  CHECK(std::abs(poisson_mode(0.3, 0.4, std::conj(w)) - std::conj(poisson_mode(0.3, 0.4, w))) <= 1e-15);
  CHECK(std::abs(poisson_mode(0.0, 0.4, 1.0, 0.5) - poisson_mode(0.5, 0.4, cplx(1.0, std::numbers::pi))) <= 1e-15);
  // Neumann mode at s = 1/2, lambda = 1: d/dz e^{-z} = -e^{-z}.
  CHECK(std::abs(neumann_mode(0.5, 0.2, 1.0) + std::exp(-0.2)) <= 1e-10);
}

TEST_CASE("extensions of constants and stationary data") {
  const auto dec = spectral_decompose(assemble(euclidean(2, 6)));
  const auto zg = ZGrid::geometric();
  TimeCircle c{2.0, 8, 0.0};
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(36);
  const auto V = extend_parabolic(dec, 0.4, SpaceTimeField::broadcast(one, c), zg);
  for (std::size_t l = 0; l < zg.size(); ++l) CHECK((V.values(dec, l).array() - 1.0).abs().maxCoeff() <= 1e-12);
  const auto tr = trace_rate(dec, V);
  for (double e : tr.error) CHECK(e <= 1e-12);

  const Eigen::VectorXd v = smooth_random_field(dec, 4, 0.2);
  const auto P = extend_parabolic(dec, 0.4, SpaceTimeField::broadcast(v, c), zg);
  const auto E = extend_elliptic(dec, 0.4, v, zg);
  for (std::size_t l = 0; l < zg.size(); l += 5) {
    const Eigen::MatrixXd pv = P.values(dec, l);
    const Eigen::VectorXd ev = dec.synthesize(E.level(l).coefficients().col(0).real());
    for (int i = 0; i < c.samples; ++i) CHECK((pv.col(i) - ev).norm() <= 1e-12 * v.norm());
    CHECK(ev.norm() <= v.norm() * (1 + 1e-12));
  }
}

TEST_CASE("single mode at s = 1/2") {
  const auto dec = chain6();
  REQUIRE(dec.eigenvalues()[1] == doctest::Approx(1.0).epsilon(1e-12));
  const Eigen::VectorXd phi = dec.eigenvectors().col(1);
  const auto zg = ZGrid::geometric();
  const auto V = extend_elliptic(dec, 0.5, phi, zg);
  const Eigen::VectorXd c = dec.coefficients(phi);
  for (std::size_t l = 0; l < zg.size(); ++l) {
    const double z = zg.levels()[l];
    CHECK(std::abs(V.level(l).coefficients()(1, 0) - std::exp(-z) * c[1]) <= 1e-10);
  }
  const auto tr = trace_rate(dec, V);
  CHECK(tr.slope >= 0.9);
  CHECK(tr.slope <= 1.2);
  const auto nr = neumann_limit(dec, V);
  CHECK(nr.c_a == 1.0);
  CHECK(std::abs(nr.limit(1, 0) / c[1] + 1.0) <= 1e-3);

  // Three-point residual of e^{-z} is second order: halving the cells quarters it.
  const auto coarse = pde_residual_strong(dec, V);
  const auto fine = pde_residual_strong(dec, extend_elliptic(dec, 0.5, phi, zg.refined()));
  const std::size_t l = coarse.z.size() - 2;
  std::size_t m = 0;
  while (m < fine.z.size() && fine.z[m] < coarse.z[l] * (1 - 1e-12)) ++m;
  REQUIRE(m < fine.z.size());
  CHECK(fine.z[m] == doctest::Approx(coarse.z[l]));
  CHECK(fine.residual[m] / coarse.residual[l] == doctest::Approx(0.25).epsilon(0.3));
}

TEST_CASE("trace rate on random data at s = 1/4") {
  const auto dec = spectral_decompose(assemble(euclidean(1, 32)));
  TimeCircle c{2 * std::numbers::pi, 16, 0.0};
  const auto u = smooth_random_spacetime(dec, c, 21, 0.5);
  const auto V = extend_parabolic(dec, 0.25, u, ZGrid::geometric());
  const auto tr = trace_rate(dec, V);
  CHECK(tr.slope >= 0.4);
  CHECK(tr.prefactor <= tr.bound * (1 + 1e-6));
  const auto nr = neumann_limit(dec, V);
  CHECK(nr.defect <= 1e-3);
}

TEST_CASE("weak formulation") {
  const auto f = euclidean(1, 32);
  const auto dec = spectral_decompose(assemble(f));
  const double T = 2 * std::numbers::pi;
  TimeCircle c{T, 16, 0.0};
  const auto zg = ZGrid::geometric();
  const auto family = default_test_family(f, 16, 1.0, zg.extent(), 0.5 * T, 0.25 * T);
  WeakFormOptions wo;
  wo.t1 = 0.25 * T;
  wo.t2 = 0.75 * T;

  const auto one = extend_parabolic(dec, 0.5, SpaceTimeField::broadcast(Eigen::VectorXd::Ones(32), c), zg);
  const BoundaryDatum zero = [](double) { return Eigen::VectorXd::Zero(32); };
  CHECK(weak_form_residual(dec, f, one, zero, family, wo) <= 1e-10);

  const auto u = smooth_random_spacetime(dec, c, 5, 0.5);
  for (double s : {0.25, 0.5, 0.75}) {
    const auto V = extend_parabolic(dec, s, u, zg);
    CHECK(weak_form_residual(dec, f, V, neumann_datum(dec, s, V.source()), family, wo) <= 1e-3);
  }

  // A datum off by +1 shifts the defect by int phi(x, 0, t) dx dt of the worst bump.
  const auto V = extend_parabolic(dec, 0.5, u, zg);
  const auto psi = neumann_datum(dec, 0.5, V.source());
  const BoundaryDatum shifted = [&](double t) { Eigen::VectorXd p = psi(t); return (p.array() + 1.0).matrix(); };
  const double d = weak_form_residual(dec, f, V, shifted, family, wo);
  CHECK(d > 0.1);
  std::vector<TestBump> single{family.front()};
  const double d1 = weak_form_residual(dec, f, V, shifted, single, wo);
  const double d2 = weak_form_residual(dec, f, V, [&](double t) { Eigen::VectorXd p = psi(t); return (p.array() + 2.0).matrix(); }, single, wo);
  CHECK(d2 == doctest::Approx(2 * d1).epsilon(1e-6));
}

TEST_CASE("even reflection") {
  const auto f = euclidean(1, 32);
  const auto dec = spectral_decompose(assemble(f));
  const auto zg = ZGrid::geometric();
  TimeCircle c{2 * std::numbers::pi, 8, 0.0};
  const auto one = extend_parabolic(dec, 0.5, SpaceTimeField::broadcast(Eigen::VectorXd::Ones(32), c), zg);
  const auto R = one.reflect_even(true);
  CHECK(R.reflected());
  const auto sl = R.signed_levels();
  const std::size_t L = zg.size();
  REQUIRE(sl.size() == 2 * L);
  for (std::size_t i = 0; i < L; ++i) {
    CHECK(sl[i] == -sl[2 * L - 1 - i]);
    CHECK((R.at_signed(i).coefficients() - R.at_signed(2 * L - 1 - i).coefficients()).norm() == 0.0);
  }
  CHECK(energy_norm(dec, R) == doctest::Approx(std::sqrt(2.0) * energy_norm(dec, one)).epsilon(1e-12));

  const auto family = default_test_family(f, 16, 1.0, zg.extent(), 3.0, 1.5);
  WeakFormOptions wo;
  wo.t1 = 1.5;
  wo.t2 = 4.5;
  const BoundaryDatum zero = [](double) { return Eigen::VectorXd::Zero(32); };
  CHECK(weak_form_residual(dec, f, R, zero, family, wo) <= 1e-3);
}

TEST_CASE("energy") {
  const auto dec = spectral_decompose(assemble(euclidean(1, 16)));
  TimeCircle c{2.0, 8, 0.0};
  const auto zg = ZGrid::geometric();
  const auto zero = extend_parabolic(dec, 0.5, SpaceTimeField::broadcast(Eigen::VectorXd::Zero(16), c), zg);
  CHECK(energy_norm(dec, zero) == 0.0);

  // Constant u = 2: gradients vanish, energy^2 = u^2 |grid| T int_0^M z^a dz.
  const double s = 0.3, a = 1 - 2 * s, M = zg.extent();
  const auto two = extend_parabolic(dec, s, SpaceTimeField::broadcast(Eigen::VectorXd::Constant(16, 2.0), c), zg);
  const double length = 2 * std::numbers::pi;
  const double expect = std::sqrt(4.0 * length * c.period * std::pow(M, 1 + a) / (1 + a));
  CHECK(energy_norm(dec, two) == doctest::Approx(expect).epsilon(1e-10));

  std::vector<SpaceTimeField> battery;
  for (std::uint64_t k = 0; k < 20; ++k) battery.push_back(smooth_random_spacetime(dec, c, k, 0.5));
  const auto ratios = energy_ratios(dec, s, battery, zg);
  REQUIRE(ratios.size() == 20);
  for (double r : ratios) CHECK(std::isfinite(r));
  const auto V = extend_parabolic(dec, s, battery[3], zg);
  CHECK(energy_ratio(dec, V) == doctest::Approx(ratios[3]).epsilon(1e-8));
}

TEST_CASE("Bessel energy integral") {
  CHECK(std::isinf(bessel_energy_integral(0.5, 1.0)));
  CHECK(std::isinf(bessel_energy_integral(0.75, 1.0)));
  const double v = bessel_energy_integral(0.25, 1.0);
  CHECK(std::isfinite(v));
  CHECK(v > 0.0);
}

TEST_CASE("identity battery passes and tightening exposes quadrature error") {
  const std::vector<double> s{0.25, 0.5, 0.75};
  for (const auto& row : special_identities_check(s)) {
    INFO(row.identity << " " << row.parameters << " defect " << row.defect);
    CHECK(row.pass());
  }
  int failing = 0;
  for (const auto& row : special_identities_check(s, 1e-15)) failing += row.pass() ? 0 : 1;
  CHECK(failing > 0);
}
