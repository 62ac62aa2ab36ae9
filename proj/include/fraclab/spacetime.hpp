#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>

#include "fraclab/generator.hpp"
#include "fraclab/quadrature.hpp"

namespace fraclab {

// How d/dt acts on time mode j of a circle field.
//   Spectral: 2 pi i sigma_j with sigma_j = j / T (signed).
//   Causal:   (1 - e^{-2 pi i j / N}) / dt, the backward difference; keeps space-time operators M-matrices.
enum class TimeSymbol { Spectral, Causal };

struct TimeCircle {
  double period = 2 * 3.141592653589793;
  int samples = 16;
  double origin = 0.0;

  void validate() const;
  double dt() const { return period / samples; }
  double time(int i) const { return origin + i * dt(); }
  int frequency(int j) const;  // signed index; the Nyquist column reports +N/2
  bool is_nyquist(int j) const { return samples % 2 == 0 && j == samples / 2; }
  cplx eta(int j, TimeSymbol symbol) const;
};

// Unitary DFT matrix F(i, j) = e^{-2 pi i ij/n} / sqrt(n).
const Eigen::MatrixXcd& dft_matrix(int n);

class SpaceTimeField {
 public:
  SpaceTimeField(Eigen::MatrixXd values, TimeCircle circle);
  static SpaceTimeField broadcast(const Eigen::VectorXd& v, TimeCircle circle);
  // Real part of the inverse transform.
  static SpaceTimeField from_modes(const Eigen::MatrixXcd& modes, TimeCircle circle);

  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXcd& modes() const { return modes_; }
  const TimeCircle& circle() const { return circle_; }
  std::size_t nodes() const { return static_cast<std::size_t>(values_.rows()); }
  int samples() const { return static_cast<int>(values_.cols()); }
  double norm() const { return values_.norm(); }

  // u(t - k dt) on the circle.
  SpaceTimeField shifted(int k) const;
  double roundtrip_error() const;
  double conjugate_symmetry_defect() const;

 private:
  Eigen::MatrixXd values_;
  Eigen::MatrixXcd modes_;
  TimeCircle circle_;
};

// Field stored as eigenmode x time-profile coefficients. Each entry (k, j) evolves with
// complex rate eta, so the heat operator acts on it as multiplication by w = lambda_k + eta.
class ModalField {
 public:
  enum class Kind { Circle, Exponential };

  static ModalField from_circle(const SpectralDecomposition& dec, const SpaceTimeField& u,
                                TimeSymbol symbol = TimeSymbol::Spectral);
  // Time-independent field: one column with rate 0.
  static ModalField stationary(const SpectralDecomposition& dec, const Eigen::VectorXd& v);
  // p(x, y0, t - t0) = sum_k e^{-lambda_k (t - t0)} phi_k(y0) phi_k(x) / cell volume.
  static ModalField caloric(const SpectralDecomposition& dec, std::size_t y0, double t0);

  Kind kind() const { return kind_; }
  TimeSymbol symbol() const { return symbol_; }
  const TimeCircle& circle() const { return circle_; }
  const Eigen::MatrixXcd& coefficients() const { return coef_; }
  const Eigen::VectorXcd& rates() const { return eta_; }
  bool per_mode_rates() const { return per_mode_; }
  double t_ref() const { return t_ref_; }
  std::size_t modes() const { return static_cast<std::size_t>(coef_.rows()); }
  int columns() const { return static_cast<int>(coef_.cols()); }
  cplx w(const SpectralDecomposition& dec, std::size_t k, int j) const;

  // Coefficient-wise multiplication by m(lambda_k + eta). m must satisfy m(conj w) = conj m(w).
  ModalField map(const SpectralDecomposition& dec, const std::function<cplx(cplx)>& m) const;
  ModalField with_coefficients(Eigen::MatrixXcd coef) const;

  Eigen::MatrixXd sample(const SpectralDecomposition& dec, std::span<const double> times) const;
  // Coefficients of the field at one time, in the eigenbasis (real part taken).
  Eigen::VectorXd coefficients_at(double t) const;
  SpaceTimeField to_circle(const SpectralDecomposition& dec) const;
  double l2_norm() const { return coef_.norm(); }

 private:
  ModalField() = default;

  Kind kind_ = Kind::Circle;
  TimeSymbol symbol_ = TimeSymbol::Spectral;
  TimeCircle circle_;
  Eigen::MatrixXcd coef_;
  Eigen::VectorXcd eta_;
  bool per_mode_ = false;
  double t_ref_ = 0.0;
};

// Seeded field with eigen/time coefficients N(0,1) e^{-tau (lambda_k + 2 pi |sigma_j|)}.
// The Nyquist column is left empty so the field is band-limited in time.
SpaceTimeField smooth_random_spacetime(const SpectralDecomposition& dec, TimeCircle circle, std::uint64_t seed,
                                       double tau);

// Trigonometric resampling onto a circle of the same period with a different sample count.
SpaceTimeField resample(const SpaceTimeField& u, int samples);

// Evolutive semigroup: time mode j and eigenmode k multiplied by e^{-(lambda_k + 2 pi i sigma_j) tau}.
SpaceTimeField evolutive_apply(const SpectralDecomposition& dec, double tau, const SpaceTimeField& u);

}  // namespace fraclab
