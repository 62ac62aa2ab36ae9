#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fraclab/frame.hpp"
#include "fraclab/geometry.hpp"

namespace fraclab {

inline constexpr std::size_t kSpectralNodeCap = 4096;

// Preset frames on periodic grids.
VectorFieldFrame euclidean(int n, int nodes_per_axis, double length = 2 * 3.141592653589793);
// X1 = d/dx, X2 = x d/dy on [-pi, pi)^2.
VectorFieldFrame grushin(int nodes_per_axis);
// X1 = d/dx - (y/2) d/dt, X2 = d/dy + (x/2) d/dt on [-pi, pi)^3.
VectorFieldFrame heisenberg(int nodes_per_axis);
VectorFieldFrame preset(const std::string& name, int nodes_per_axis, int euclidean_dim = 1);

// Matrix of -L (positive semidefinite): L = D^T C D over the edges of energy_edges().
struct SubLaplacian {
  Eigen::SparseMatrix<double> matrix;
  std::vector<Edge> edges;
  std::string frame_name;
  double cell_volume = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  // sum_e c_e (f_a - f_b)^2, equal to <f, matrix f>.
  double energy(std::span<const double> f) const;
};

SubLaplacian assemble(const VectorFieldFrame& frame);

class SpectralDecomposition {
 public:
  SpectralDecomposition(Eigen::VectorXd lambda, Eigen::MatrixXd phi, double cell_volume, std::string name);

  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::MatrixXd& eigenvectors() const { return phi_; }
  std::size_t size() const { return static_cast<std::size_t>(lambda_.size()); }
  int zero_multiplicity() const { return zero_mult_; }
  double cell_volume() const { return cell_volume_; }
  const std::string& name() const { return name_; }
  double min_positive() const;

  // Eigenvalues equal up to rounding share a group; multipliers are evaluated once per group.
  const std::vector<int>& groups() const { return group_; }
  const std::vector<double>& group_values() const { return group_value_; }

  Eigen::VectorXd coefficients(const Eigen::VectorXd& u) const;
  Eigen::MatrixXd coefficients(const Eigen::MatrixXd& u) const;
  Eigen::VectorXd synthesize(const Eigen::VectorXd& c) const;
  Eigen::VectorXd apply(const std::function<double(double)>& m, const Eigen::VectorXd& u) const;
  Eigen::MatrixXd matrix_function(const std::function<double(double)>& m) const;

  double reconstruction_residual = 0.0;
  double orthonormality_residual = 0.0;

 private:
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd phi_;
  double cell_volume_;
  std::string name_;
  int zero_mult_ = 0;
  std::vector<int> group_;
  std::vector<double> group_value_;
};

SpectralDecomposition spectral_decompose(const SubLaplacian& L, std::size_t cap = kSpectralNodeCap);

Eigen::VectorXd heat_apply(const SpectralDecomposition& dec, double t, const Eigen::VectorXd& u);

// Random field with coefficients N(0,1) e^{-lambda tau}; tau = 0 gives white noise.
Eigen::VectorXd smooth_random_field(const SpectralDecomposition& dec, std::uint64_t seed, double tau);

struct SemigroupReport {
  double identity_defect = 0.0;
  double composition_defect = 0.0;
  double contraction_max = 0.0;  // max ||P_t u|| / ||u||
  double symmetry_defect = 0.0;
  double stochastic_defect = 0.0;
  std::vector<double> generator_t;
  std::vector<double> generator_error;
  double generator_slope = 0.0;
};

SemigroupReport semigroup_axioms_check(const SpectralDecomposition& dec, std::uint64_t seed = 1);

struct GaussianFit {
  double t = 0.0;
  double min_kernel = 0.0;
  double stochastic_defect = 0.0;
  double beta = 0.0;         // fitted coefficient of d^2/t
  double alpha_low = 0.0;    // envelope constants around the fit
  double alpha_high = 0.0;
  int pairs = 0;
};

std::vector<GaussianFit> gaussian_probe(const SpectralDecomposition& dec, const VectorFieldFrame& frame,
                                        std::size_t source, std::span<const double> times);

}  // namespace fraclab
