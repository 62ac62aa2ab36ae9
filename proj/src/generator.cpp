#include "fraclab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

using Coeffs = std::vector<std::vector<std::vector<double>>>;

Coeffs zero_coeffs(int fields, const Grid& g) {
  return Coeffs(fields, std::vector<std::vector<double>>(g.ndim(), std::vector<double>(g.size(), 0.0)));
}

Grid centred_torus(int dims, int n) {
  const double h = 2 * std::numbers::pi / n;
  return Grid(std::vector<int>(dims, n), std::vector<double>(dims, h), std::vector<bool>(dims, true),
              std::vector<double>(dims, -std::numbers::pi));
}

double slope_fit(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

VectorFieldFrame euclidean(int n, int nodes_per_axis, double length) {
  if (n < 1) throw InputError("euclidean: dimension must be at least 1");
  const double h = length / nodes_per_axis;
  Grid g(std::vector<int>(n, nodes_per_axis), std::vector<double>(n, h), std::vector<bool>(n, true));
  auto c = zero_coeffs(n, g);
  for (int i = 0; i < n; ++i) c[i][i].assign(g.size(), 1.0);
  return VectorFieldFrame(std::move(g), std::move(c), "euclidean" + std::to_string(n));
}

VectorFieldFrame grushin(int nodes_per_axis) {
  Grid g = centred_torus(2, nodes_per_axis);
  auto c = zero_coeffs(2, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    c[0][0][k] = 1.0;
    c[1][1][k] = g.coordinate(k, 0);
  }
  return VectorFieldFrame(std::move(g), std::move(c), "grushin");
}

VectorFieldFrame heisenberg(int nodes_per_axis) {
  Grid g = centred_torus(3, nodes_per_axis);
  auto c = zero_coeffs(2, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double x = g.coordinate(k, 0), y = g.coordinate(k, 1);
    c[0][0][k] = 1.0;
    c[0][2][k] = -0.5 * y;
    c[1][1][k] = 1.0;
    c[1][2][k] = 0.5 * x;
  }
  return VectorFieldFrame(std::move(g), std::move(c), "heisenberg");
}

VectorFieldFrame preset(const std::string& name, int nodes_per_axis, int euclidean_dim) {
  if (name == "euclidean") return euclidean(euclidean_dim, nodes_per_axis);
  if (name == "grushin") return grushin(nodes_per_axis);
  if (name == "heisenberg") return heisenberg(nodes_per_axis);
  throw InputError("unknown generator preset: " + name);
}

double SubLaplacian::energy(std::span<const double> f) const {
  if (f.size() != size()) throw InputError("energy: field does not match operator");
  double e = 0.0;
  for (const auto& ed : edges) {
    const double d = f[ed.a] - f[ed.b];
    e += ed.conductance * d * d;
  }
  return e;
}

SubLaplacian assemble(const VectorFieldFrame& frame) {
  SubLaplacian L;
  L.edges = energy_edges(frame);
  L.frame_name = frame.name();
  L.cell_volume = frame.grid().cell_volume();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * L.edges.size());
  for (const auto& e : L.edges) {
    const auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    t.emplace_back(a, a, e.conductance);
    t.emplace_back(b, b, e.conductance);
    t.emplace_back(a, b, -e.conductance);
    t.emplace_back(b, a, -e.conductance);
  }
  const auto n = static_cast<Eigen::Index>(frame.grid().size());
  L.matrix.resize(n, n);
  L.matrix.setFromTriplets(t.begin(), t.end());
  return L;
}

SpectralDecomposition::SpectralDecomposition(Eigen::VectorXd lambda, Eigen::MatrixXd phi,
                                             double cell_volume, std::string name)
    : lambda_(std::move(lambda)), phi_(std::move(phi)), cell_volume_(cell_volume), name_(std::move(name)) {
  if (phi_.rows() != lambda_.size() || phi_.cols() != lambda_.size())
    throw InputError("spectral decomposition: shapes disagree");
  for (Eigen::Index k = 0; k < lambda_.size(); ++k) {
    if (lambda_[k] == 0.0) ++zero_mult_;
    if (k == 0 || lambda_[k] - group_value_.back() > 1e-10 * std::max(1.0, lambda_[k]))
      group_value_.push_back(lambda_[k]);
    group_.push_back(static_cast<int>(group_value_.size()) - 1);
  }
}

double SpectralDecomposition::min_positive() const {
  for (Eigen::Index k = 0; k < lambda_.size(); ++k)
    if (lambda_[k] > 0.0) return lambda_[k];
  return 0.0;
}

Eigen::VectorXd SpectralDecomposition::coefficients(const Eigen::VectorXd& u) const {
  if (u.size() != lambda_.size()) throw InputError("field does not match decomposition");
  return phi_.transpose() * u;
}

Eigen::MatrixXd SpectralDecomposition::coefficients(const Eigen::MatrixXd& u) const {
  if (u.rows() != lambda_.size()) throw InputError("field does not match decomposition");
  return phi_.transpose() * u;
}

Eigen::VectorXd SpectralDecomposition::synthesize(const Eigen::VectorXd& c) const { return phi_ * c; }

Eigen::VectorXd SpectralDecomposition::apply(const std::function<double(double)>& m,
                                             const Eigen::VectorXd& u) const {
  Eigen::VectorXd c = coefficients(u);
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= m(lambda_[k]);
  return phi_ * c;
}

Eigen::MatrixXd SpectralDecomposition::matrix_function(const std::function<double(double)>& m) const {
  Eigen::VectorXd d(lambda_.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = m(lambda_[k]);
  return phi_ * d.asDiagonal() * phi_.transpose();
}

SpectralDecomposition spectral_decompose(const SubLaplacian& L, std::size_t cap) {
  const std::size_t n = L.size();
  if (n > cap)
    throw CapacityError("spectral_decompose: " + std::to_string(n) + " nodes exceed cap " + std::to_string(cap));
  const Eigen::MatrixXd A = Eigen::MatrixXd(L.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) {
    throw NumericalError("spectral_decompose: eigensolver failed", (A - A.transpose()).norm());
  }
  Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd phi = es.eigenvectors();
  const double scale = std::max(1.0, std::abs(lam[lam.size() - 1]));
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (std::abs(lam[k]) <= 1e-11 * scale) lam[k] = 0.0;
  int zeros = 0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) zeros += lam[k] == 0.0;
  if (zeros == 1) phi.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));

  SpectralDecomposition dec(std::move(lam), std::move(phi), L.cell_volume, L.frame_name);
  const auto& P = dec.eigenvectors();
  const Eigen::MatrixXd R = A - P * dec.eigenvalues().asDiagonal() * P.transpose();
  dec.reconstruction_residual = R.norm() / std::max(1.0, A.norm());
  dec.orthonormality_residual =
      (P.transpose() * P - Eigen::MatrixXd::Identity(P.cols(), P.cols())).cwiseAbs().maxCoeff();
  if (!(dec.reconstruction_residual < 1e-8))
    throw NumericalError("spectral_decompose: reconstruction residual too large", dec.reconstruction_residual);
  return dec;
}

Eigen::VectorXd heat_apply(const SpectralDecomposition& dec, double t, const Eigen::VectorXd& u) {
  if (!(t >= 0.0)) throw InputError("heat_apply: t must be nonnegative");
  if (u.size() != static_cast<Eigen::Index>(dec.size())) throw InputError("heat_apply: field does not match");
  if (t == 0.0) return u;
  return dec.apply([t](double l) { return std::exp(-l * t); }, u);
}

Eigen::VectorXd smooth_random_field(const SpectralDecomposition& dec, std::uint64_t seed, double tau) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd c(dec.size());
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] = nd(rng) * std::exp(-dec.eigenvalues()[k] * tau);
  return dec.synthesize(c);
}

SemigroupReport semigroup_axioms_check(const SpectralDecomposition& dec, std::uint64_t seed) {
  SemigroupReport r;
  const Eigen::VectorXd u = smooth_random_field(dec, seed, 0.0);
  const Eigen::VectorXd v = smooth_random_field(dec, seed + 1, 0.0);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dec.size()));
  r.identity_defect = (heat_apply(dec, 0.0, u) - u).cwiseAbs().maxCoeff();
  const double times[] = {0.1, 1.0, 10.0};
  for (double t : times) {
    const Eigen::VectorXd pu = heat_apply(dec, t, u);
    r.contraction_max = std::max(r.contraction_max, pu.norm() / u.norm());
    r.symmetry_defect =
        std::max(r.symmetry_defect, std::abs(pu.dot(v) - u.dot(heat_apply(dec, t, v))) / (u.norm() * v.norm()));
    r.stochastic_defect = std::max(r.stochastic_defect, (heat_apply(dec, t, one) - one).cwiseAbs().maxCoeff());
    for (double s : times) {
      const Eigen::VectorXd lhs = heat_apply(dec, t + s, u);
      const Eigen::VectorXd rhs = heat_apply(dec, t, heat_apply(dec, s, u));
      r.composition_defect = std::max(r.composition_defect, (lhs - rhs).norm() / u.norm());
    }
  }

  const Eigen::VectorXd w = smooth_random_field(dec, seed + 2, 1.0);
  const Eigen::VectorXd Lw = -dec.apply([](double l) { return l; }, w);
  std::vector<double> lx, ly;
  for (double t : {1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2}) {
    const double e = ((heat_apply(dec, t, w) - w) / t - Lw).norm() / Lw.norm();
    r.generator_t.push_back(t);
    r.generator_error.push_back(e);
    lx.push_back(std::log(t));
    ly.push_back(std::log(e));
  }
  r.generator_slope = slope_fit(lx, ly);
  return r;
}

std::vector<GaussianFit> gaussian_probe(const SpectralDecomposition& dec, const VectorFieldFrame& frame,
                                        std::size_t source, std::span<const double> times) {
  const auto n = static_cast<Eigen::Index>(dec.size());
  if (frame.grid().size() != dec.size()) throw InputError("gaussian_probe: frame does not match");
  if (source >= dec.size()) throw InputError("gaussian_probe: source outside grid");
  const auto& P = dec.eigenvectors();
  const double cv = dec.cell_volume();
  const auto metric = control_distance(frame, source);
  std::vector<GaussianFit> out;
  for (double t : times) {
    if (!(t > 0.0)) throw InputError("gaussian_probe: times must be positive");
    GaussianFit fit;
    fit.t = t;
    Eigen::VectorXd decay = (-t * dec.eigenvalues().array()).exp();
    Eigen::VectorXd row = P * decay.cwiseProduct(P.row(static_cast<Eigen::Index>(source)).transpose()) / cv;
    if (n <= 1024) {
      const Eigen::MatrixXd K = P * decay.asDiagonal() * P.transpose() / cv;
      fit.min_kernel = K.minCoeff();
    } else {
      fit.min_kernel = row.minCoeff();
    }
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
    fit.stochastic_defect = (heat_apply(dec, t, one) - one).cwiseAbs().maxCoeff();

    const double rt = std::sqrt(t);
    const double window = std::min(3.0 * rt, 0.5 * metric.saturation_radius);
    auto vol = [&](std::size_t y) {
      auto m = control_distance(frame, y);
      return volume(frame.grid(), ball(m, rt));
    };
    const double vx = vol(source);
    std::vector<double> X, Y;
    for (std::size_t y = 0; y < dec.size(); ++y) {
      const double d = metric.dist[y];
      if (!(d <= window) || row[static_cast<Eigen::Index>(y)] <= 0.0) continue;
      X.push_back(d * d / t);
      Y.push_back(std::log(row[static_cast<Eigen::Index>(y)]) + 0.5 * (std::log(vx) + std::log(vol(y))));
    }
    fit.pairs = static_cast<int>(X.size());
    if (X.size() >= 3) {
      fit.beta = -slope_fit(X, Y);
      fit.alpha_low = std::numeric_limits<double>::infinity();
      fit.alpha_high = -fit.alpha_low;
      for (std::size_t i = 0; i < X.size(); ++i) {
        const double c = Y[i] + fit.beta * X[i];
        fit.alpha_low = std::min(fit.alpha_low, c);
        fit.alpha_high = std::max(fit.alpha_high, c);
      }
      fit.alpha_low = std::exp(fit.alpha_low);
      fit.alpha_high = std::exp(fit.alpha_high);
    }
    out.push_back(fit);
  }
  return out;
}

}  // namespace fraclab
