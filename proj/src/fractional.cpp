#include "fraclab/fractional.hpp"

#include <cmath>
#include <numbers>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

void check_s(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double d = b.norm();
  return d == 0.0 ? (a - b).norm() : (a - b).norm() / d;
}

// c_g(delta) = (1/N) sum_j m(lambda_g + eta_j) e^{2 pi i j delta / N}: the time kernel of one eigenvalue group.
Eigen::MatrixXd time_kernels(const SpectralDecomposition& dec, double s, const TimeCircle& circle, TimeSymbol symbol) {
  const int N = circle.samples;
  const auto& lam = dec.group_values();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(lam.size()), N);
  std::vector<cplx> m(N);
  for (std::size_t g = 0; g < lam.size(); ++g) {
    for (int j = 0; j < N; ++j) {
      cplx v = power_symbol(lam[g] + circle.eta(j, symbol), s);
      if (circle.is_nyquist(j)) v = v.real();
      m[j] = v;
    }
    for (int d = 0; d < N; ++d) {
      cplx acc = 0.0;
      for (int j = 0; j < N; ++j) {
        const long p = (static_cast<long>(j) * d) % N;
        acc += m[j] * std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(p) / N);
      }
      c(static_cast<Eigen::Index>(g), d) = acc.real() / N;
    }
  }
  return c;
}

// K_delta = Phi diag(c(delta)) Phi^T for every time lag.
std::vector<Eigen::MatrixXd> lag_blocks(const SpectralDecomposition& dec, double s, const TimeCircle& circle,
                                        TimeSymbol symbol) {
  const Eigen::MatrixXd c = time_kernels(dec, s, circle, symbol);
  const auto& P = dec.eigenvectors();
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd d(static_cast<Eigen::Index>(dec.size()));
  for (int lag = 0; lag < circle.samples; ++lag) {
    for (Eigen::Index k = 0; k < d.size(); ++k) d[k] = c(dec.groups()[static_cast<std::size_t>(k)], lag);
    blocks.push_back(P * d.asDiagonal() * P.transpose());
  }
  return blocks;
}

}  // namespace

FractionalParams::FractionalParams(double s_) : s(s_) { check_s(s); }

cplx power_symbol(cplx w, double s) {
  if (w == 0.0) return 0.0;
  if (w.imag() == 0.0 && w.real() > 0.0) return std::pow(w.real(), s);
  return std::pow(w, s);
}

Eigen::VectorXd frac_L_spectral(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u) {
  check_s(s);
  return dec.apply([s](double l) { return l == 0.0 ? 0.0 : std::pow(l, s); }, u);
}

namespace {

template <class Run>
auto with_refinement(const BalakrishnanOptions& opt, Run&& run) {
  opt.scheme.validate();
  QuadratureScheme q = opt.scheme;
  auto cur = run(q);
  double achieved = 0.0;
  for (int it = 0; it <= opt.max_refinements; ++it) {
    const QuadratureScheme finer = q.refined();
    auto next = run(finer);
    achieved = rel_diff(cur, next);
    if (achieved <= opt.tolerance) return cur;
    q = finer;
    cur = std::move(next);
  }
  throw NumericalError("Balakrishnan quadrature did not reach tolerance", achieved);
}

}  // namespace

Eigen::VectorXd frac_L_balakrishnan(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u,
                                    const BalakrishnanOptions& opt) {
  check_s(s);
  const Eigen::VectorXd c = dec.coefficients(u);
  return with_refinement(opt, [&](const QuadratureScheme& q) {
    std::vector<double> m(dec.group_values().size());
    for (std::size_t g = 0; g < m.size(); ++g) m[g] = balakrishnan_symbol(s, dec.group_values()[g], q).real();
    Eigen::VectorXd cc = c;
    for (Eigen::Index k = 0; k < cc.size(); ++k) cc[k] *= m[dec.groups()[static_cast<std::size_t>(k)]];
    return Eigen::VectorXd(dec.synthesize(cc));
  });
}

SpaceTimeField frac_H_spectral(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                               TimeSymbol symbol) {
  check_s(s);
  auto f = ModalField::from_circle(dec, u, symbol);
  return f.map(dec, [s](cplx w) { return power_symbol(w, s); }).to_circle(dec);
}

SpaceTimeField frac_H_balakrishnan(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                                   const BalakrishnanOptions& opt, TimeSymbol symbol) {
  check_s(s);
  auto f = ModalField::from_circle(dec, u, symbol);
  Eigen::MatrixXd v = with_refinement(opt, [&](const QuadratureScheme& q) {
    return Eigen::MatrixXd(
        f.map(dec, [&](cplx w) { return balakrishnan_symbol(s, w, q); }).to_circle(dec).values());
  });
  return SpaceTimeField(std::move(v), u.circle());
}

double norm_w2s(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u) {
  check_s(s);
  const Eigen::VectorXd c = dec.coefficients(u);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const double f = 1.0 + (dec.eigenvalues()[k] == 0.0 ? 0.0 : std::pow(dec.eigenvalues()[k], s));
    acc += f * f * c[k] * c[k];
  }
  return std::sqrt(acc);
}

double norm_h2s(const SpectralDecomposition& dec, double s, const ModalField& u) {
  check_s(s);
  double acc = 0.0;
  const auto& C = u.coefficients();
  for (Eigen::Index k = 0; k < C.rows(); ++k)
    for (Eigen::Index j = 0; j < C.cols(); ++j) {
      const double f = 1.0 + std::abs(power_symbol(u.w(dec, static_cast<std::size_t>(k), static_cast<int>(j)), s));
      acc += f * f * std::norm(C(k, j));
    }
  return std::sqrt(acc);
}

double norm_h2s(const SpectralDecomposition& dec, double s, const SpaceTimeField& u) {
  return norm_h2s(dec, s, ModalField::from_circle(dec, u, TimeSymbol::Spectral));
}

Eigen::MatrixXd frac_L_matrix(const SpectralDecomposition& dec, double s) {
  check_s(s);
  return dec.matrix_function([s](double l) { return l == 0.0 ? 0.0 : std::pow(l, s); });
}

Eigen::MatrixXd frac_H_matrix(const SpectralDecomposition& dec, double s, const TimeCircle& circle,
                              TimeSymbol symbol, std::span<const std::size_t> rows,
                              std::span<const std::size_t> cols) {
  check_s(s);
  circle.validate();
  const std::size_t Nt = static_cast<std::size_t>(circle.samples);
  const std::size_t total = dec.size() * Nt;
  if (total > kSpaceTimeCap) throw CapacityError("space-time matrix exceeds " + std::to_string(kSpaceTimeCap) + " unknowns");
  std::vector<std::size_t> all;
  if (rows.empty() || cols.empty()) {
    all.resize(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
  }
  if (rows.empty()) rows = all;
  if (cols.empty()) cols = all;
  const auto blocks = lag_blocks(dec, s, circle, symbol);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t x = rows[r] / Nt, i = rows[r] % Nt;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const std::size_t y = cols[c] / Nt, ip = cols[c] % Nt;
      const std::size_t lag = (i + Nt - ip) % Nt;
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          blocks[lag](static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
    }
  }
  return A;
}

DirichletResult dirichlet_solve_elliptic(const SpectralDecomposition& dec, double s,
                                         std::span<const std::size_t> region, const Eigen::VectorXd& g) {
  check_s(s);
  const std::size_t n = dec.size();
  if (static_cast<std::size_t>(g.size()) != n) throw InputError("dirichlet: exterior data does not match grid");
  if (region.empty() || region.size() >= n) throw InputError("dirichlet: region must be a nonempty strict subset");
  std::vector<char> inside(n, 0);
  for (auto i : region) {
    if (i >= n) throw InputError("dirichlet: region index outside grid");
    inside[i] = 1;
  }
  std::vector<std::size_t> I, B;
  for (std::size_t i = 0; i < n; ++i) (inside[i] ? I : B).push_back(i);
  for (auto b : B)
    if (g[static_cast<Eigen::Index>(b)] < 0.0) throw InputError("dirichlet: exterior data must be nonnegative");

  const Eigen::MatrixXd A = frac_L_matrix(dec, s);
  const auto ni = static_cast<Eigen::Index>(I.size()), nb = static_cast<Eigen::Index>(B.size());
  Eigen::MatrixXd Aii(ni, ni), Aib(ni, nb);
  Eigen::VectorXd gb(nb);
  for (Eigen::Index r = 0; r < ni; ++r) {
    for (Eigen::Index c = 0; c < ni; ++c) Aii(r, c) = A(static_cast<Eigen::Index>(I[r]), static_cast<Eigen::Index>(I[c]));
    for (Eigen::Index c = 0; c < nb; ++c) Aib(r, c) = A(static_cast<Eigen::Index>(I[r]), static_cast<Eigen::Index>(B[c]));
  }
  for (Eigen::Index c = 0; c < nb; ++c) gb[c] = g[static_cast<Eigen::Index>(B[c])];
  Eigen::LLT<Eigen::MatrixXd> llt(Aii);
  if (llt.info() != Eigen::Success) throw NumericalError("dirichlet: interior block is singular", 0.0);
  const Eigen::VectorXd ui = llt.solve(-Aib * gb);

  DirichletResult res;
  res.u = g;
  for (Eigen::Index r = 0; r < ni; ++r) res.u[static_cast<Eigen::Index>(I[r])] = ui[r];
  res.residual = (Aii * ui + Aib * gb).cwiseAbs().maxCoeff();
  res.min_value = res.u.minCoeff();
  return res;
}

ParabolicDirichletResult dirichlet_solve_parabolic(const SpectralDecomposition& dec, double s,
                                                   const TimeCircle& circle, std::span<const std::size_t> region,
                                                   const Eigen::MatrixXd& g, TimeSymbol symbol, std::size_t cap) {
  check_s(s);
  circle.validate();
  const std::size_t Nt = static_cast<std::size_t>(circle.samples);
  const std::size_t total = dec.size() * Nt;
  if (total > cap) throw CapacityError("space-time problem exceeds " + std::to_string(cap) + " unknowns");
  if (static_cast<std::size_t>(g.rows()) != dec.size() || static_cast<std::size_t>(g.cols()) != Nt)
    throw InputError("dirichlet: exterior data does not match the space-time grid");
  if (region.empty() || region.size() >= total) throw InputError("dirichlet: region must be a nonempty strict subset");
  std::vector<char> inside(total, 0);
  for (auto i : region) {
    if (i >= total) throw InputError("dirichlet: region index outside grid");
    inside[i] = 1;
  }
  std::vector<std::size_t> I, B;
  for (std::size_t i = 0; i < total; ++i) (inside[i] ? I : B).push_back(i);
  auto at = [&](std::size_t idx) { return g(static_cast<Eigen::Index>(idx / Nt), static_cast<Eigen::Index>(idx % Nt)); };
  Eigen::VectorXd gb(static_cast<Eigen::Index>(B.size()));
  for (std::size_t c = 0; c < B.size(); ++c) {
    gb[static_cast<Eigen::Index>(c)] = at(B[c]);
    if (gb[static_cast<Eigen::Index>(c)] < 0.0) throw InputError("dirichlet: exterior data must be nonnegative");
  }

  const auto blocks = lag_blocks(dec, s, circle, symbol);
  auto entry = [&](std::size_t r, std::size_t c) {
    const std::size_t lag = (r % Nt + Nt - c % Nt) % Nt;
    return blocks[lag](static_cast<Eigen::Index>(r / Nt), static_cast<Eigen::Index>(c / Nt));
  };
  const auto ni = static_cast<Eigen::Index>(I.size()), nb = static_cast<Eigen::Index>(B.size());
  Eigen::MatrixXd Aii(ni, ni);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
  for (Eigen::Index r = 0; r < ni; ++r) {
    for (Eigen::Index c = 0; c < ni; ++c) Aii(r, c) = entry(I[r], I[c]);
    for (Eigen::Index c = 0; c < nb; ++c) rhs[r] -= entry(I[r], B[c]) * gb[c];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Aii);
  const Eigen::VectorXd ui = lu.solve(rhs);
  if (!ui.allFinite()) throw NumericalError("dirichlet: interior block is singular", 0.0);

  ParabolicDirichletResult res;
  res.u = g;
  for (Eigen::Index r = 0; r < ni; ++r)
    res.u(static_cast<Eigen::Index>(I[r] / Nt), static_cast<Eigen::Index>(I[r] % Nt)) = ui[r];
  res.residual = (Aii * ui - rhs).cwiseAbs().maxCoeff();
  res.min_value = res.u.minCoeff();
  return res;
}

}  // namespace fraclab
