#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/generator.hpp"
#include "fraclab/spacetime.hpp"

using namespace fraclab;

TEST_CASE("periodic three-point stencil") {
  const auto L = assemble(euclidean(1, 8, 8.0));
  const Eigen::MatrixXd A = L.matrix;
  for (int i = 0; i < 8; ++i) {
    CHECK(A(i, i) == 2.0);
    CHECK(A(i, (i + 1) % 8) == -1.0);
    CHECK(A.row(i).sum() == 0.0);
  }
}

TEST_CASE("generators are symmetric M-matrices") {
  for (const auto& f : {grushin(8), heisenberg(6), euclidean(2, 8)}) {
    const Eigen::MatrixXd A = assemble(f).matrix;
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(A.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * A.diagonal().maxCoeff());
    Eigen::MatrixXd off = A;
    off.diagonal().setZero();
    CHECK(off.maxCoeff() <= 0.0);
  }
}

TEST_CASE("preset coefficients") {
  const auto g = grushin(8);
  for (std::size_t n = 0; n < g.grid().size(); ++n) {
    CHECK(g.coeff(1, 1, n) == g.grid().coordinate(n, 0));
    CHECK(g.coeff(0, 0, n) == 1.0);
  }
  const auto e = euclidean(2, 8);
  CHECK(e.fields() == 2);
  std::vector<double> x1(e.grid().size());
  for (std::size_t n = 0; n < x1.size(); ++n) x1[n] = e.grid().coordinate(n, 0);
  const auto gx = carre_du_champ(e, x1);
  for (std::size_t n = 0; n < x1.size(); ++n) {
    const int i = e.grid().axis_index(n, 0);
    if (i > 0 && i < 7) CHECK(gx[n] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("heisenberg bracket points along t") {
  // [X1, X2] = d/dt; checked on u = sin t away from the x, y seams.
  const auto f = heisenberg(16);
  const Grid& g = f.grid();
  std::vector<double> u(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) u[n] = std::sin(g.coordinate(n, 2));
  const auto x1u = f.apply(0, u), x2u = f.apply(1, u);
  const auto x1x2u = f.apply(0, x2u), x2x1u = f.apply(1, x1u);
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(n, 0), y = g.coordinate(n, 1);
    if (std::abs(x) > 1.5 || std::abs(y) > 1.5) continue;
    worst = std::max(worst, std::abs(x1x2u[n] - x2x1u[n] - std::cos(g.coordinate(n, 2))));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("spectrum of the periodic chain") {
  const auto dec = spectral_decompose(assemble(euclidean(1, 8, 8.0)));
  std::vector<double> expect;
  for (int k = 0; k < 8; ++k) expect.push_back(2.0 - 2.0 * std::cos(2 * std::numbers::pi * k / 8));
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < 8; ++k) CHECK(dec.eigenvalues()[k] == doctest::Approx(expect[k]).epsilon(1e-12));
  CHECK(dec.eigenvalues()[0] == 0.0);
  CHECK(dec.zero_multiplicity() == 1);
  const Eigen::VectorXd phi0 = dec.eigenvectors().col(0);
  CHECK((phi0.array() - phi0[0]).abs().maxCoeff() <= 1e-12);
  CHECK(dec.reconstruction_residual <= 1e-10);
}

TEST_CASE("spectral cap refuses large problems") {
  const auto L = assemble(euclidean(2, 16));
  CHECK_THROWS_AS(spectral_decompose(L, 100), CapacityError);
}

TEST_CASE("heat semigroup") {
  const auto dec = spectral_decompose(assemble(grushin(8)));
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(64);
  const Eigen::VectorXd u = smooth_random_field(dec, 5, 0.0);
  for (double t : {0.1, 1.0, 10.0}) {
    CHECK((heat_apply(dec, t, one) - one).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(heat_apply(dec, t, u).norm() <= u.norm() * (1 + 1e-14));
  }
  CHECK((heat_apply(dec, 0.0, u) - u).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd two = heat_apply(dec, 0.3, heat_apply(dec, 0.2, u));
  CHECK((two - heat_apply(dec, 0.5, u)).norm() <= 1e-10 * u.norm());

  const auto r = semigroup_axioms_check(dec, 9);
  CHECK(r.identity_defect == 0.0);
  CHECK(r.symmetry_defect <= 1e-12);
  CHECK(r.stochastic_defect <= 1e-12);
  CHECK(r.composition_defect <= 1e-10);
  CHECK(r.contraction_max <= 1.0 + 1e-12);
  CHECK(std::abs(r.generator_slope - 1.0) <= 0.1);
}

TEST_CASE("heat kernel is positive, mass preserving and Gaussian") {
  const auto f = euclidean(1, 128);
  const auto dec = spectral_decompose(assemble(f));
  const std::vector<double> times{0.5};
  const auto fit = gaussian_probe(dec, f, 64, times);
  REQUIRE(fit.size() == 1);
  CHECK(fit[0].min_kernel > 0.0);
  CHECK(fit[0].stochastic_defect <= 1e-12);
  CHECK(fit[0].beta == doctest::Approx(0.25).epsilon(0.15));
}

TEST_CASE("evolutive semigroup") {
  const auto dec = spectral_decompose(assemble(euclidean(2, 6)));
  TimeCircle c{2.0, 8, 0.0};
  const Eigen::VectorXd v = smooth_random_field(dec, 2, 0.1);
  const auto U = SpaceTimeField::broadcast(v, c);
  const auto P = evolutive_apply(dec, 0.7, U);
  const Eigen::VectorXd pv = heat_apply(dec, 0.7, v);
  for (int i = 0; i < c.samples; ++i) CHECK((P.values().col(i) - pv).cwiseAbs().maxCoeff() <= 1e-12);

  const auto W = smooth_random_spacetime(dec, c, 4, 0.0);
  CHECK(evolutive_apply(dec, 0.3, W).norm() <= W.norm() * (1 + 1e-14));
}
