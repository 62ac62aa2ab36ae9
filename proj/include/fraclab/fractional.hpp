#pragma once

#include <Eigen/Dense>
#include <span>

#include "fraclab/quadrature.hpp"
#include "fraclab/spacetime.hpp"

namespace fraclab {

struct FractionalParams {
  double s = 0.5;
  explicit FractionalParams(double s_);
  double a() const { return 1.0 - 2.0 * s; }
};

// Principal-branch w^s, 0 at w = 0.
cplx power_symbol(cplx w, double s);

Eigen::VectorXd frac_L_spectral(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u);

struct BalakrishnanOptions {
  QuadratureScheme scheme{};
  double tolerance = 1e-6;  // relative, against one refinement of the scheme
  int max_refinements = 2;
};

Eigen::VectorXd frac_L_balakrishnan(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u,
                                    const BalakrishnanOptions& opt = {});

SpaceTimeField frac_H_spectral(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                               TimeSymbol symbol = TimeSymbol::Spectral);
SpaceTimeField frac_H_balakrishnan(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                                   const BalakrishnanOptions& opt = {}, TimeSymbol symbol = TimeSymbol::Spectral);

double norm_w2s(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u);
double norm_h2s(const SpectralDecomposition& dec, double s, const SpaceTimeField& u);
double norm_h2s(const SpectralDecomposition& dec, double s, const ModalField& u);

// Dense matrices of the fractional operators: N x N, and (N N_t) x (N N_t) with index node * N_t + i.
Eigen::MatrixXd frac_L_matrix(const SpectralDecomposition& dec, double s);
Eigen::MatrixXd frac_H_matrix(const SpectralDecomposition& dec, double s, const TimeCircle& circle,
                              TimeSymbol symbol, std::span<const std::size_t> rows = {},
                              std::span<const std::size_t> cols = {});

inline constexpr std::size_t kSpaceTimeCap = 32768;

struct DirichletResult {
  Eigen::VectorXd u;          // full field (elliptic) or node-major space-time values
  double residual = 0.0;      // max |A u| over the solve region
  double min_value = 0.0;
};

// u = g off `region`, (L^s u) = 0 on `region`.
DirichletResult dirichlet_solve_elliptic(const SpectralDecomposition& dec, double s,
                                         std::span<const std::size_t> region, const Eigen::VectorXd& g);

// Space-time version; region holds space-time indices node * N_t + i. Uses the given time symbol.
struct ParabolicDirichletResult {
  Eigen::MatrixXd u;  // nodes x N_t
  double residual = 0.0;
  double min_value = 0.0;
};

ParabolicDirichletResult dirichlet_solve_parabolic(const SpectralDecomposition& dec, double s,
                                                   const TimeCircle& circle, std::span<const std::size_t> region,
                                                   const Eigen::MatrixXd& g, TimeSymbol symbol = TimeSymbol::Causal,
                                                   std::size_t cap = kSpaceTimeCap);

}  // namespace fraclab
