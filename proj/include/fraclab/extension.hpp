#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fraclab/fractional.hpp"
#include "fraclab/spacetime.hpp"

namespace fraclab {

// Geometric z-levels z_min * ratio^k, closed by the extent M.
class ZGrid {
 public:
  static ZGrid geometric(double z_min = 1e-3, double extent = 2.0, double ratio = 1.25);

  const std::vector<double>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }
  double z_min() const { return levels_.front(); }
  double extent() const { return levels_.back(); }
  double ratio() const { return ratio_; }
  // Inserts the geometric midpoint of every cell: ratio -> sqrt(ratio).
  ZGrid refined() const;
  // int z^a over (0, z_1], (z_1, z_2], ...
  std::vector<double> cell_weights(double a) const;
  // Node weights of the product rule for int_0^M f(z) z^p dz, f piecewise linear, constant on (0, z_1].
  std::vector<double> node_weights(double p) const;

 private:
  std::vector<double> levels_;
  double ratio_ = 1.25;
};

// Mode multiplier of the Poisson kernel, P(z, w) with w = lambda + eta; equals 1 at w = 0.
cplx poisson_mode(double s, double z, cplx w);
cplx poisson_mode(double a, double z, double lambda, double sigma);
// The same integral without the w = 0 shortcut; used to check the kernel normalisation.
cplx poisson_mode_quadrature(double s, double z, cplx w);
// c_a z^a dP/dz; tends to -w^s as z -> 0.
cplx neumann_mode(double s, double z, cplx w);

struct ExtensionOptions {
  bool derivatives = true;  // also store z^a dV/dz per level
};

class ExtensionField {
 public:
  ExtensionField(const SpectralDecomposition& dec, double s, ModalField source, ZGrid zgrid,
                 const ExtensionOptions& opt = {});

  double s() const { return s_; }
  double a() const { return 1.0 - 2.0 * s_; }
  const ModalField& source() const { return source_; }
  const ZGrid& zgrid() const { return zgrid_; }
  bool reflected() const { return reflected_; }
  bool has_derivatives() const { return !flux_.empty(); }

  // Level l (0-based, z = zgrid.levels()[l]). For reflected fields the value at -z equals the value at z.
  const ModalField& level(std::size_t l) const { return levels_[l]; }
  // z^a dV/dz at level l, without the constant c_a.
  const ModalField& flux(std::size_t l) const;
  // Signed levels: (-z_M .. -z_1, z_1 .. z_M) when reflected, else the positive levels.
  std::vector<double> signed_levels() const;
  const ModalField& at_signed(std::size_t i) const;

  // Modes at an arbitrary z > 0 (not cached).
  ModalField evaluate(const SpectralDecomposition& dec, double z) const;
  ModalField evaluate_flux(const SpectralDecomposition& dec, double z) const;
  // Realified values on the source circle samples at level l.
  Eigen::MatrixXd values(const SpectralDecomposition& dec, std::size_t l) const;

  ExtensionField reflect_even(bool neumann_vanishes) const;
  bool reflection_warning() const { return reflection_warning_; }

 private:
  double s_;
  ModalField source_;
  ZGrid zgrid_;
  std::vector<ModalField> levels_;
  std::vector<ModalField> flux_;
  bool reflected_ = false;
  bool reflection_warning_ = false;
};

ExtensionField extend_parabolic(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                                const ZGrid& zgrid, const ExtensionOptions& opt = {});
ExtensionField extend_elliptic(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u,
                               const ZGrid& zgrid, const ExtensionOptions& opt = {});

struct TraceReport {
  std::vector<double> z;
  std::vector<double> error;
  double slope = 0.0;
  double prefactor = 0.0;  // max error / (z^{2s} ||H^s u||)
  double bound = 0.0;      // Gamma(1-s) / (Gamma(1+s) 4^s)
  bool degenerate = false;
};

TraceReport trace_rate(const SpectralDecomposition& dec, const ExtensionField& V, double z_lo = 1e-3,
                       double z_hi = 1e-1);

struct NeumannReport {
  double c_a = 0.0;
  double defect = 0.0;         // relative, extrapolated from levels 0..2
  double defect_shifted = 0.0; // same from levels 1..3
  bool monotone = true;
  Eigen::MatrixXcd limit;      // extrapolated c_a z^a dV/dz coefficients
};

NeumannReport neumann_limit(const SpectralDecomposition& dec, const ExtensionField& V);

struct StrongResidual {
  std::vector<double> z;
  std::vector<double> residual;
};

// Per mode: w V - (V'' + (a/z) V') with three-point differences on interior levels.
StrongResidual pde_residual_strong(const SpectralDecomposition& dec, const ExtensionField& V);

struct TestBump {
  std::size_t center = 0;
  double rho_x = 1.0;
  double z_center = 0.0;
  double rho_z = 0.5;
  double t_center = 0.0;
  double rho_t = 1.0;
};

// Three scales times five spatial centres inside B(x, r).
std::vector<TestBump> default_test_family(const VectorFieldFrame& frame, std::size_t x, double r, double extent,
                                          double t_center, double t_halfwidth);

// Nodal Neumann datum psi(., t).
using BoundaryDatum = std::function<Eigen::VectorXd(double)>;

struct WeakFormOptions {
  double t1 = 0.0;
  double t2 = 1.0;
  int z_points = 3;
  int t_points = 32;
};

// Max over the family of |lhs - rhs| in the weak formulation; psi is ignored for reflected fields.
double weak_form_residual(const SpectralDecomposition& dec, const VectorFieldFrame& frame, const ExtensionField& W,
                          const BoundaryDatum& psi, std::span<const TestBump> family, const WeakFormOptions& opt);

// -(1/c_a) H^s u as a boundary datum.
BoundaryDatum neumann_datum(const SpectralDecomposition& dec, double s, const ModalField& u);

double energy_norm(const SpectralDecomposition& dec, const ExtensionField& W);
// energy_norm / (sqrt(cell volume * dt) ||u||_{H^{2s}}): both sides as integrals.
double energy_ratio(const SpectralDecomposition& dec, const ExtensionField& W);

// Per-mode energy factors e_kj of the extension of the given field shape: for any field with the same
// shape and coefficients C, energy_norm^2 = cell volume * dt * sum |C_kj|^2 e_kj.
Eigen::MatrixXd energy_factors(const SpectralDecomposition& dec, double s, const ModalField& shape,
                               const ZGrid& zgrid);
// energy_ratio for a batch of circle fields sharing one extension of a unit field.
std::vector<double> energy_ratios(const SpectralDecomposition& dec, double s, std::span<const SpaceTimeField> fields,
                                  const ZGrid& zgrid);

struct IdentityRow {
  std::string identity;
  std::string parameters;
  double value = 0.0;
  double expected = 0.0;
  double defect = 0.0;
  double tolerance = 0.0;
  bool report_only = false;
  bool pass() const { return report_only || defect <= tolerance; }
};

std::vector<IdentityRow> special_identities_check(std::span<const double> s_values, double tolerance = 1e-8);

// int_0^R K_nu(rho)^2 rho^{1-2 nu} d rho; infinite for nu >= 1/2.
double bessel_energy_integral(double nu, double R);

}  // namespace fraclab
