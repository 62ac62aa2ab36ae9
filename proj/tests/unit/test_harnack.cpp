#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fraclab/errors.hpp"
#include "fraclab/harnack.hpp"

using namespace fraclab;

namespace {

struct Setup {
  VectorFieldFrame frame = euclidean(1, 64);
  SpectralDecomposition dec = spectral_decompose(assemble(frame));
  std::size_t x = 32;
  MetricField metric = control_distance(frame, 32);
  double h = frame.grid().spacing(0);
};

}  // namespace

TEST_CASE("caloric translates") {
  Setup st;
  TimeCircle c{1.0, 16, -0.9375};
  const auto u = make_caloric_translate(st.dec, 10, -1.5, c);
  CHECK(u.values().minCoeff() > 0.0);

  const auto m = ModalField::caloric(st.dec, 10, -1.5);
  std::vector<double> times, taus{0.1, 1.0};
  for (int i = 0; i < c.samples; ++i) times.push_back(c.time(i));
  CHECK(evolutive_invariance_defect(st.dec, m, times, taus) <= 1e-10);

  // H^s p = 0 away from the source time, checked through the mode rates.
  for (double s : {0.25, 0.5, 0.75}) {
    const auto Hs = m.map(st.dec, [s](cplx w) { return power_symbol(w, s); });
    CHECK(Hs.coefficients().cwiseAbs().maxCoeff() <= 1e-8 * m.coefficients().cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(make_caloric_translate(st.dec, 10, 0.0, c), InputError);
}

TEST_CASE("time windows are half-open") {
  const std::vector<double> t{-1.0, -0.75, -0.5, -0.25, 0.0};
  const auto in = times_in(t, -0.75, 0.0);
  REQUIRE(in.size() == 3);
  CHECK(in.front() == 2);
  CHECK(in.back() == 4);
}

TEST_CASE("elliptic quotients") {
  Setup st;
  const double r = 4 * st.h;
  CHECK(harnack_quotient_elliptic(Eigen::VectorXd::Constant(64, 3.0), st.metric, r).quotient == 1.0);

  std::vector<std::size_t> region = ball(st.metric, 2 * r).nodes;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(64);
  g[2] = 1.0;
  const auto sol = dirichlet_solve_elliptic(st.dec, 0.5, region, g);
  const auto q1 = harnack_quotient_elliptic(sol.u, st.metric, r);
  CHECK(!q1.infinite);
  CHECK(std::isfinite(q1.quotient));
  CHECK(q1.quotient >= 1.0);
  const auto sol2 = dirichlet_solve_elliptic(st.dec, 0.5, region, 2.0 * g);
  CHECK(harnack_quotient_elliptic(sol2.u, st.metric, r).quotient == doctest::Approx(q1.quotient).epsilon(1e-12));
}

TEST_CASE("parabolic quotients") {
  Setup st;
  const double r = 8 * st.h, dt = r * r / 16;
  TimeCircle c{64 * dt, 64, -63 * dt};
  std::vector<double> times;
  for (int i = 0; i < c.samples; ++i) times.push_back(c.time(i));
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(64, 64);
  CHECK(harnack_quotient_parabolic(one, times, st.metric, r).quotient == 1.0);

  const auto u = make_caloric_translate(st.dec, 20, -4.5 * r * r, c);
  const auto q = harnack_quotient_parabolic(u.values(), times, st.metric, r);
  CHECK(std::isfinite(q.quotient));
  CHECK(q.quotient >= 1.0);

  // Refined in space and time: quotient stable within a factor 2.
  const auto f2 = euclidean(1, 128);
  const auto d2 = spectral_decompose(assemble(f2));
  TimeCircle c2{64 * dt, 128, -127 * dt / 2};
  std::vector<double> t2;
  for (int i = 0; i < c2.samples; ++i) t2.push_back(c2.time(i));
  const auto u2 = make_caloric_translate(d2, 40, -4.5 * r * r, c2);
  const auto q2 = harnack_quotient_parabolic(u2.values(), t2, control_distance(f2, 64), r);
  CHECK(q2.quotient / q.quotient <= 2.0);
  CHECK(q.quotient / q2.quotient <= 2.0);

  // A larger region can only raise the sup and lower the inf.
  const auto wide = harnack_quotient_elliptic(u.values().col(63), st.metric, 2 * r);
  const auto narrow = harnack_quotient_elliptic(u.values().col(63), st.metric, r);
  CHECK(wide.quotient >= narrow.quotient);
}

TEST_CASE("extension quotients") {
  Setup st;
  const double r = 8 * st.h;
  TimeCircle c{r * r, 16, -15 * r * r / 16};
  const auto zg = ZGrid::geometric();
  const auto one = extend_parabolic(st.dec, 0.5, SpaceTimeField::broadcast(Eigen::VectorXd::Ones(64), c), zg);
  CHECK(harnack_quotient_extension(st.dec, one.reflect_even(true), st.metric, 0.0, r).quotient ==
        doctest::Approx(1.0).epsilon(1e-12));

  const auto m = ModalField::caloric(st.dec, 20, -3 * r * r);
  const ExtensionField V(st.dec, 0.5, m, zg);
  const auto R = V.reflect_even(true);
  const ExtensionField V2(st.dec, 0.5, m.with_coefficients(2.0 * m.coefficients()), zg);
  double prev = 0.0;
  for (double rr : {4 * st.h, 8 * st.h, 16 * st.h}) {
    const auto q = harnack_quotient_extension(st.dec, R, st.metric, 0.0, rr);
    CHECK(std::isfinite(q.quotient));
    CHECK(q.quotient >= 1.0);
    prev = q.quotient;
  }
  CHECK(harnack_quotient_extension(st.dec, V2.reflect_even(true), st.metric, 0.0, r).quotient ==
        doctest::Approx(harnack_quotient_extension(st.dec, R, st.metric, 0.0, r).quotient).epsilon(1e-12));
  CHECK(prev > 0.0);
}

TEST_CASE("scale scan") {
  Setup st;
  const std::vector<FamilyKind> fam{FamilyKind::Constant, FamilyKind::CaloricTranslate,
                                    FamilyKind::EllipticDirichlet};
  const std::vector<std::size_t> centers{32};
  const std::vector<double> radii{4 * st.h, 8 * st.h, 16 * st.h, 32 * st.h};
  ScanOptions opt;
  opt.time_samples = 32;
  const auto rep = scale_scan(st.dec, st.frame, fam, centers, radii, opt);
  CHECK(rep.excluded.size() == 1);
  CHECK(rep.rows.size() == fam.size() * (radii.size() - rep.excluded.size()));
  const auto& k = rep.summary.at(FamilyKind::Constant);
  CHECK(k.max_quotient == 1.0);
  CHECK(k.stability_ratio == 1.0);
  for (const auto& row : rep.rows) {
    CHECK(row.cert.valid);
    CHECK(std::isfinite(row.q.quotient));
  }
  CHECK(rep.summary.at(FamilyKind::CaloricTranslate).stability_ratio <= 10.0);

  opt.inject_negative = true;
  CHECK_THROWS_AS(scale_scan(st.dec, st.frame, fam, centers, radii, opt), CertificateError);
  CHECK(parse_family(family_name(FamilyKind::ParabolicDirichlet)) == FamilyKind::ParabolicDirichlet);
  CHECK_THROWS_AS(parse_family("nope"), InputError);
}
