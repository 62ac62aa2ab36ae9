#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/errors.hpp"
#include "fraclab/fractional.hpp"

using namespace fraclab;

namespace {

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("principal power symbol") {
  const cplx w(1.0, 2 * std::numbers::pi);
  CHECK(std::abs(power_symbol(w, 0.5) - std::sqrt(w)) <= 1e-15);
  CHECK(power_symbol(0.0, 0.3) == cplx(0.0));
}

TEST_CASE("Balakrishnan symbol against the principal branch") {
  for (double s : {0.25, 0.5, 0.75})
    for (cplx w : {cplx(1.0, 0.0), cplx(1.0, 2 * std::numbers::pi), cplx(40.0, -3.0), cplx(1e-3, 0.5)})
      CHECK(std::abs(balakrishnan_symbol(s, w) - std::pow(w, s)) <= 1e-6 * std::abs(std::pow(w, s)));
}

TEST_CASE("gamma integral self-test") {
  // int_0^inf tau^{-s-1} (1 - e^{-tau}) dtau = Gamma(1-s)/s.
  boost::math::quadrature::exp_sinh<double> es;
  for (double s : {0.25, 0.5, 0.75}) {
    const double quad = es.integrate([s](double t) { return -std::pow(t, -s - 1) * std::expm1(-t); });
    const double closed = boost::math::tgamma(1.0 - s) / s;
    CHECK(quad == doctest::Approx(closed).epsilon(1e-9));
    CHECK(-balakrishnan_integral(s, 1.0).real() == doctest::Approx(closed).epsilon(1e-8));
  }
  CHECK(boost::math::tgamma(0.5) / 0.5 == doctest::Approx(2 * std::sqrt(std::numbers::pi)));
}

TEST_CASE("fractional powers of the chain") {
  const auto dec = spectral_decompose(assemble(euclidean(1, 8, 8.0)));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(8);
  CHECK(frac_L_spectral(dec, 0.4, one).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(frac_L_balakrishnan(dec, 0.4, one).cwiseAbs().maxCoeff() <= 1e-14);
  // lambda = 4 at the Nyquist mode.
  const Eigen::VectorXd phi = dec.eigenvectors().col(7);
  REQUIRE(dec.eigenvalues()[7] == doctest::Approx(4.0));
  CHECK((frac_L_spectral(dec, 0.5, phi) - 2.0 * phi).norm() <= 1e-12);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  Eigen::VectorXd u(8);
  for (auto& v : u) v = nd(rng);
  const Eigen::VectorXd twice = frac_L_spectral(dec, 0.7, frac_L_spectral(dec, 0.3, u));
  const Eigen::VectorXd once = Eigen::MatrixXd(assemble(euclidean(1, 8, 8.0)).matrix) * u;
  CHECK((twice - once).norm() <= 1e-10 * once.norm());
}

TEST_CASE("Balakrishnan paths match the spectral oracle") {
  const auto dec = spectral_decompose(assemble(euclidean(2, 8)));
  const Eigen::VectorXd u = smooth_random_field(dec, 11, 0.0);
  TimeCircle c{1.0, 16, 0.0};
  const auto U = smooth_random_spacetime(dec, c, 12, 0.0);
  for (double s : {0.25, 0.5, 0.75}) {
    CHECK(rel(frac_L_balakrishnan(dec, s, u), frac_L_spectral(dec, s, u)) <= 1e-6);
    CHECK(rel(frac_H_balakrishnan(dec, s, U).values(), frac_H_spectral(dec, s, U).values()) <= 1e-6);
  }
}

TEST_CASE("parabolic operator reductions") {
  const auto dec = spectral_decompose(assemble(grushin(6)));
  TimeCircle c{2.0, 8, 0.0};
  const auto one = SpaceTimeField::broadcast(Eigen::VectorXd::Ones(36), c);
  CHECK(frac_H_spectral(dec, 0.5, one).values().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(frac_H_balakrishnan(dec, 0.5, one).values().cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::VectorXd v = smooth_random_field(dec, 3, 0.0);
  const auto H = frac_H_spectral(dec, 0.3, SpaceTimeField::broadcast(v, c));
  const Eigen::VectorXd Lv = frac_L_spectral(dec, 0.3, v);
  for (int i = 0; i < 8; ++i) CHECK((H.values().col(i) - Lv).norm() <= 1e-12 * Lv.norm());
}

TEST_CASE("fractional Sobolev norms") {
  const auto dec = spectral_decompose(assemble(euclidean(1, 16)));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
  CHECK(norm_w2s(dec, 0.5, zero) == 0.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(16, 0.25);
  CHECK(norm_w2s(dec, 0.5, one) == doctest::Approx(1.0).epsilon(1e-14));
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::VectorXd u = smooth_random_field(dec, seed, 0.0);
    const double direct = u.squaredNorm() + frac_L_spectral(dec, 0.6, u).squaredNorm();
    const double ratio = direct / std::pow(norm_w2s(dec, 0.6, u), 2);
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
  }
}

TEST_CASE("elliptic Dirichlet problem") {
  const auto f = euclidean(2, 8);
  const auto dec = spectral_decompose(assemble(f));
  std::vector<std::size_t> region;
  const auto m = control_distance(f, 36);
  for (std::size_t n : ball(m, 1.0).nodes) region.push_back(n);

  const auto ones = dirichlet_solve_elliptic(dec, 0.5, region, Eigen::VectorXd::Ones(64));
  CHECK((ones.u.array() - 1.0).abs().maxCoeff() <= 1e-10);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(64);
  g[0] = 1.0;
  const auto r = dirichlet_solve_elliptic(dec, 0.5, region, g);
  for (auto n : region) CHECK(r.u[static_cast<Eigen::Index>(n)] > 0.0);
  CHECK(r.residual <= 1e-8);

  for (double s : {0.25, 0.5, 0.75}) {
    Eigen::MatrixXd A = frac_L_matrix(dec, s);
    A.diagonal().setZero();
    CHECK(A.maxCoeff() <= 1e-12);
  }
  std::vector<std::size_t> everything(64);
  for (std::size_t i = 0; i < 64; ++i) everything[i] = i;
  CHECK_THROWS_AS(dirichlet_solve_elliptic(dec, 0.5, everything, g), InputError);
}

TEST_CASE("parabolic Dirichlet problem") {
  const auto f = euclidean(1, 16);
  const auto dec = spectral_decompose(assemble(f));
  TimeCircle c{4.0, 16, -3.75};
  std::vector<std::size_t> region;
  for (std::size_t n = 6; n <= 10; ++n)
    for (int i = 8; i < 16; ++i) region.push_back(n * 16 + static_cast<std::size_t>(i));

  const auto ones = dirichlet_solve_parabolic(dec, 0.5, c, region, Eigen::MatrixXd::Ones(16, 16));
  CHECK((ones.u.array() - 1.0).abs().maxCoeff() <= 1e-10);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  Eigen::MatrixXd g(16, 16);
  for (auto& v : g.reshaped()) v = ud(rng);
  const auto r = dirichlet_solve_parabolic(dec, 0.5, c, region, g);
  CHECK(r.min_value >= -1e-10);
  CHECK(r.residual <= 1e-8);

  Eigen::MatrixXd A = frac_H_matrix(dec, 0.5, c, TimeSymbol::Causal);
  A.diagonal().setZero();
  CHECK(A.maxCoeff() <= 1e-12);
}
