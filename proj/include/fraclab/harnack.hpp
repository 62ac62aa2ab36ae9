#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fraclab/extension.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/spacetime.hpp"

namespace fraclab {

enum class FamilyKind { Constant, CaloricTranslate, EllipticDirichlet, ParabolicDirichlet, Extension };

std::string family_name(FamilyKind kind);
FamilyKind parse_family(const std::string& name);

// p(x, y0, t - t0) sampled on the circle; t0 must lie below the first sample.
SpaceTimeField make_caloric_translate(const SpectralDecomposition& dec, std::size_t y0, double t0,
                                      const TimeCircle& circle);

// max over t and tau (t - tau > t0) of |P_tau u(t - tau) - u(t)| / max|u(t)|.
double evolutive_invariance_defect(const SpectralDecomposition& dec, const ModalField& caloric,
                                   std::span<const double> times, std::span<const double> taus);

// Sample times in (lo, hi], compared with a relative tolerance of 1e-9 of the step.
std::vector<int> times_in(std::span<const double> times, double lo, double hi);

struct Quotient {
  double sup = 0.0;
  double inf = 0.0;
  double quotient = 0.0;
  bool infinite = false;  // inf region value <= 0
  std::size_t sup_node = 0, inf_node = 0;
  int sup_time = 0, inf_time = 0;
};

// values: nodes x times. Sup over B(x,r) x (-r^2, -r^2/2], inf over B(x,r) x (-r^2/4, 0].
Quotient harnack_quotient_parabolic(const Eigen::MatrixXd& values, std::span<const double> times,
                                    const MetricField& metric, double r);
// Sup and inf over B(x,r).
Quotient harnack_quotient_elliptic(const Eigen::VectorXd& u, const MetricField& metric, double r);
// Sup over C_{r/2}(x,z) x {t = -r^2/2}, inf over C_{r/2}(x,z) x {t = 0}; C_rho = B(x,rho) x {|z'-z| < rho}.
Quotient harnack_quotient_extension(const SpectralDecomposition& dec, const ExtensionField& V,
                                    const MetricField& metric, double z, double r);

struct Certificate {
  double min_value = 0.0;
  double residual = 0.0;
  bool valid = false;
};

inline constexpr double kNonnegativityFloor = -1e-10;
inline constexpr double kResidualCeiling = 1e-8;

struct ScanOptions {
  double s = 0.5;
  std::uint64_t seed = 1;
  int time_samples = 64;    // per-radius circle for the parabolic Dirichlet family
  double dt_fraction = 1.0 / 16;  // dt = r^2 * dt_fraction
  double caloric_offset = 3.0;    // t0 = -caloric_offset * r^2
  bool inject_negative = false;   // subtract a bump so the certificate must fail
  ZGrid zgrid = ZGrid::geometric();
  std::size_t space_time_cap = kSpaceTimeCap;
};

struct HarnackRow {
  FamilyKind family;
  std::size_t center;
  double r;
  Quotient q;
  Certificate cert;
};

struct FamilySummary {
  double max_quotient = 0.0;
  double min_quotient = 0.0;
  double stability_ratio = 0.0;  // max_r C(r) / min_r C(r), C(r) the max over centres
  int radii = 0;
  bool any_infinite = false;
};

struct HarnackReport {
  std::vector<HarnackRow> rows;
  std::vector<std::pair<std::size_t, double>> excluded;  // (centre, r)
  std::map<FamilyKind, FamilySummary> summary;
};

// Throws CertificateError when a manufactured field is not admissible, InputError when no radius survives.
HarnackReport scale_scan(const SpectralDecomposition& dec, const VectorFieldFrame& frame,
                         std::span<const FamilyKind> families, std::span<const std::size_t> centers,
                         std::span<const double> radii, const ScanOptions& opt = {});

}  // namespace fraclab
