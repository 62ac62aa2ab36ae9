#include "fraclab/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <set>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Largest |cbar_ij| over fields for the move a -> b along axis j.
double axis_speed(const VectorFieldFrame& f, int j, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (int i = 0; i < f.fields(); ++i)
    s = std::max(s, std::abs(0.5 * (f.coeff(i, j, a) + f.coeff(i, j, b))));
  return s;
}

double axis_cost(const VectorFieldFrame& f, int j, std::size_t a, std::size_t b) {
  const double v = axis_speed(f, j, a, b);
  return v > 0.0 ? f.grid().spacing(j) / v : kInf;
}

template <class Fn>
void for_each_move(const VectorFieldFrame& f, std::size_t n, Stencil stencil, Fn&& fn) {
  const Grid& g = f.grid();
  const int d = g.ndim();
  std::vector<int> steps(d, 0);
  for (int j = 0; j < d; ++j) {
    for (int s : {-1, 1}) {
      steps[j] = s;
      if (auto m = g.offset(n, steps)) {
        const double c = axis_cost(f, j, n, *m);
        if (c < kInf) fn(*m, c);
      }
      steps[j] = 0;
    }
  }
  if (stencil != Stencil::AxisDiagonal) return;
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      for (int sj : {-1, 1}) {
        for (int sk : {-1, 1}) {
          steps[j] = sj;
          steps[k] = sk;
          if (auto m = g.offset(n, steps)) {
            const double c = std::hypot(axis_cost(f, j, n, *m), axis_cost(f, k, n, *m));
            if (c < kInf) fn(*m, c);
          }
          steps[j] = 0;
          steps[k] = 0;
        }
      }
    }
  }
}

std::vector<double> unit_density(std::size_t n) { return std::vector<double>(n, 1.0); }

const std::vector<double>& density_or(const WeightedMeasure* w, const std::vector<double>& ones,
                                      std::size_t n) {
  if (!w) return ones;
  if (w->density.size() != n) throw InputError("weighted measure does not match grid");
  return w->density;
}

void check_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InputError("radius must be positive and finite");
}

}  // namespace

std::vector<Edge> energy_edges(const VectorFieldFrame& frame) {
  const Grid& g = frame.grid();
  std::vector<Edge> edges;
  for (int j = 0; j < g.ndim(); ++j) {
    const double h2 = g.spacing(j) * g.spacing(j);
    for (std::size_t n = 0; n < g.size(); ++n) {
      auto m = g.neighbor(n, j, 1);
      if (!m) continue;
      double w = 0.0;
      for (int i = 0; i < frame.fields(); ++i) {
        const double c = 0.5 * (frame.coeff(i, j, n) + frame.coeff(i, j, *m));
        w += c * c;
      }
      if (w > 0.0) edges.push_back({n, *m, w / h2});
    }
  }
  return edges;
}

std::vector<double> carre_du_champ(const VectorFieldFrame& frame, std::span<const double> u) {
  if (u.size() != frame.grid().size()) throw InputError("carre_du_champ: field does not match grid");
  std::vector<double> out(u.size(), 0.0);
  for (int i = 0; i < frame.fields(); ++i) {
    auto xu = frame.apply(i, u);
    for (std::size_t n = 0; n < u.size(); ++n) out[n] += xu[n] * xu[n];
  }
  return out;
}

MetricField control_distance(const VectorFieldFrame& frame, std::size_t source, Stencil stencil) {
  const Grid& g = frame.grid();
  if (source >= g.size()) throw InputError("control_distance: source outside grid");
  MetricField m;
  m.source = source;
  m.dist.assign(g.size(), kInf);
  m.dist[source] = 0.0;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0.0, source});
  std::vector<char> done(g.size(), 0);
  while (!pq.empty()) {
    auto [d, n] = pq.top();
    pq.pop();
    if (done[n]) continue;
    done[n] = 1;
    for_each_move(frame, n, stencil, [&](std::size_t k, double c) {
      const double nd = d + c;
      if (nd < m.dist[k]) {
        m.dist[k] = nd;
        pq.push({nd, k});
      }
    });
  }
  m.connected = std::all_of(m.dist.begin(), m.dist.end(), [](double v) { return v < kInf; });

  const auto src = g.multi_index(source);
  for (std::size_t n = 0; n < g.size(); ++n) {
    for (int j = 0; j < g.ndim(); ++j) {
      const int i = g.axis_index(n, j);
      const bool slab = g.periodic(j) ? i == (src[j] + g.dim(j) / 2) % g.dim(j)
                                      : (i == 0 || i == g.dim(j) - 1);
      if (slab) {
        m.saturation_radius = std::min(m.saturation_radius, m.dist[n]);
        break;
      }
    }
  }
  return m;
}

WeightedMeasure WeightedMeasure::on_extended(const Grid& extended, double a) {
  if (!(a > -1.0 && a < 1.0)) throw InputError("weight exponent a must lie in (-1, 1)");
  WeightedMeasure w;
  w.a = a;
  const int zaxis = extended.ndim() - 1;
  const double h = extended.spacing(zaxis);
  auto F = [a](double t) { return std::copysign(std::pow(std::abs(t), a + 1.0) / (a + 1.0), t); };
  w.density.resize(extended.size());
  for (std::size_t n = 0; n < extended.size(); ++n) {
    if (a == 0.0) {
      w.density[n] = 1.0;
      continue;
    }
    const double z = extended.coordinate(n, zaxis);
    w.density[n] = (F(z + 0.5 * h) - F(z - 0.5 * h)) / h;
  }
  return w;
}

Ball ball(const MetricField& metric, double r) {
  check_radius(r);
  Ball b;
  for (std::size_t n = 0; n < metric.dist.size(); ++n)
    if (metric.dist[n] < r) b.nodes.push_back(n);
  b.saturated = r > metric.saturation_radius;
  return b;
}

double volume(const Grid& grid, const Ball& b, const WeightedMeasure* weight) {
  const auto ones = weight ? std::vector<double>{} : unit_density(grid.size());
  const auto& rho = density_or(weight, ones, grid.size());
  double s = 0.0;
  for (auto n : b.nodes) s += rho[n];
  return s * grid.cell_volume();
}

double DoublingTable::q() const { return std::log2(c_d); }

DoublingTable doubling_audit(const VectorFieldFrame& frame, std::span<const std::size_t> centers,
                             std::span<const double> radii, const WeightedMeasure* weight,
                             Stencil stencil) {
  if (centers.empty() || radii.empty()) throw InputError("doubling_audit: empty centers or radii");
  for (double r : radii) {
    check_radius(r);
    const double k = std::log2(r / radii[0]);
    if (std::abs(k - std::round(k)) > 1e-9) throw InputError("doubling_audit: radii must be dyadic");
  }
  const Grid& g = frame.grid();
  DoublingTable t;
  for (auto c : centers) {
    auto m = control_distance(frame, c, stencil);
    for (double r : radii) {
      if (2 * r > m.saturation_radius) {
        ++t.excluded;
        continue;
      }
      const Ball b1 = ball(m, r), b2 = ball(m, 2 * r);
      DoublingRow row{c, r, volume(g, b2) / volume(g, b1), std::nan("")};
      t.c_d = std::max(t.c_d, row.ratio);
      if (weight) {
        row.weighted_ratio = volume(g, b2, weight) / volume(g, b1, weight);
        t.c_d_weighted = std::max(t.c_d_weighted, row.weighted_ratio);
      }
      t.rows.push_back(row);
    }
  }
  return t;
}

namespace {

// Quadratic forms of the Poincare pencil restricted to B(x,r) after harmonic elimination of the annulus.
struct PoincarePencil {
  std::vector<std::size_t> inner;
  std::vector<std::size_t> ring;  // annulus nodes, local ordering
  Eigen::SparseMatrix<double> energy;  // on inner + ring, inner first
  Eigen::VectorXd mu;                  // measure of inner nodes
  bool resolved = true;
};

PoincarePencil build_pencil(const VectorFieldFrame& frame, std::size_t center, double r,
                            const WeightedMeasure* weight, Stencil stencil) {
  check_radius(r);
  const Grid& g = frame.grid();
  const auto ones = weight ? std::vector<double>{} : unit_density(g.size());
  const auto& rho = density_or(weight, ones, g.size());
  auto m = control_distance(frame, center, stencil);
  PoincarePencil p;
  p.inner = ball(m, r).nodes;
  const auto outer = ball(m, 2 * r).nodes;

  for (int j = 0; j < g.ndim(); ++j) {
    std::set<int> seen;
    for (auto n : p.inner) seen.insert(g.axis_index(n, j));
    if (seen.size() < 3) p.resolved = false;
  }

  std::vector<long> local(g.size(), -1);
  for (std::size_t i = 0; i < p.inner.size(); ++i) local[p.inner[i]] = static_cast<long>(i);
  std::vector<char> in2(g.size(), 0);
  for (auto n : outer) in2[n] = 1;

  const auto edges = energy_edges(frame);
  // Annulus nodes count only if linked to the inner ball inside B(x,2r); the rest carry no energy.
  std::vector<std::vector<std::size_t>> adj(g.size());
  for (const auto& e : edges)
    if (in2[e.a] && in2[e.b] && e.a != e.b) {
      adj[e.a].push_back(e.b);
      adj[e.b].push_back(e.a);
    }
  std::vector<std::size_t> stack(p.inner.begin(), p.inner.end());
  std::vector<char> reach(g.size(), 0);
  for (auto n : p.inner) reach[n] = 1;
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    for (auto k : adj[n])
      if (!reach[k]) {
        reach[k] = 1;
        stack.push_back(k);
      }
  }
  for (auto n : outer)
    if (local[n] < 0 && reach[n]) {
      local[n] = static_cast<long>(p.inner.size() + p.ring.size());
      p.ring.push_back(n);
    }

  const double cv = g.cell_volume();
  const long total = static_cast<long>(p.inner.size() + p.ring.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : edges) {
    const long a = local[e.a], b = local[e.b];
    if (a < 0 || b < 0 || a == b) continue;
    const double w = cv * e.conductance * 0.5 * (rho[e.a] + rho[e.b]);
    trip.emplace_back(a, a, w);
    trip.emplace_back(b, b, w);
    trip.emplace_back(a, b, -w);
    trip.emplace_back(b, a, -w);
  }
  p.energy.resize(total, total);
  p.energy.setFromTriplets(trip.begin(), trip.end());
  p.mu.resize(static_cast<long>(p.inner.size()));
  for (std::size_t i = 0; i < p.inner.size(); ++i) p.mu[static_cast<long>(i)] = cv * rho[p.inner[i]];
  return p;
}

Eigen::MatrixXd oscillation_form(const Eigen::VectorXd& mu) {
  Eigen::MatrixXd A = Eigen::MatrixXd(mu.asDiagonal());
  A.noalias() -= mu * mu.transpose() / mu.sum();
  return A;
}

Eigen::MatrixXd schur_energy(const PoincarePencil& p) {
  const long ni = static_cast<long>(p.inner.size());
  const long no = static_cast<long>(p.ring.size());
  Eigen::MatrixXd E = Eigen::MatrixXd(p.energy);
  Eigen::MatrixXd S = E.topLeftCorner(ni, ni);
  if (no == 0) return S;
  Eigen::SparseMatrix<double> Eoo = p.energy.bottomRightCorner(no, no);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Eoo);
  if (ldlt.info() != Eigen::Success) throw NumericalError("poincare: annulus block not factorisable", 0.0);
  Eigen::MatrixXd Eoi = E.bottomLeftCorner(no, ni);
  Eigen::MatrixXd X = ldlt.solve(Eoi);
  S.noalias() -= Eoi.transpose() * X;
  return 0.5 * (S + S.transpose());
}

}  // namespace

PoincareResult poincare_constant(const VectorFieldFrame& frame, std::size_t center, double r,
                                 const WeightedMeasure* weight, Stencil stencil) {
  auto p = build_pencil(frame, center, r, weight, stencil);
  PoincareResult res;
  res.inner_nodes = p.inner.size();
  res.outer_nodes = p.ring.size();
  res.resolved = p.resolved;
  const long n = static_cast<long>(p.inner.size());
  if (n < 2) {
    res.degenerate = true;
    return res;
  }
  const Eigen::MatrixXd A = oscillation_form(p.mu);
  const Eigen::MatrixXd S = schur_energy(p);

  // Householder reflector whose first column is the normalised constant; the others span its complement.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, -1.0 / std::sqrt(double(n)));
  v[0] += 1.0;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) - 2.0 * v * v.transpose() / v.squaredNorm();
  const Eigen::MatrixXd Q = H.rightCols(n - 1);
  const Eigen::MatrixXd Aq = Q.transpose() * A * Q;
  const Eigen::MatrixXd Sq = Q.transpose() * S * Q;

  Eigen::LLT<Eigen::MatrixXd> llt(Sq);
  if (llt.info() != Eigen::Success) {
    res.degenerate = true;
    return res;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Aq, Sq, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) {
    res.degenerate = true;
    return res;
  }
  const double top = ges.eigenvalues().maxCoeff();
  res.degenerate = !(std::isfinite(top) && top > 0.0);
  res.constant = top / (r * r);
  return res;
}

double poincare_ratio(const VectorFieldFrame& frame, std::size_t center, double r,
                      std::span<const double> u, const WeightedMeasure* weight, Stencil stencil) {
  if (u.size() != frame.grid().size()) throw InputError("poincare_ratio: field does not match grid");
  auto p = build_pencil(frame, center, r, weight, stencil);
  const long ni = static_cast<long>(p.inner.size());
  Eigen::VectorXd x(ni + static_cast<long>(p.ring.size()));
  for (long i = 0; i < ni; ++i) x[i] = u[p.inner[static_cast<std::size_t>(i)]];
  for (std::size_t i = 0; i < p.ring.size(); ++i) x[ni + static_cast<long>(i)] = u[p.ring[i]];
  const Eigen::VectorXd xi = x.head(ni);
  const double num = xi.dot(oscillation_form(p.mu) * xi);
  const double den = x.dot(p.energy * x);
  return num / (r * r * den);
}

double a2_characteristic(double a, std::span<const std::pair<double, double>> intervals) {
  if (!(a > -1.0 && a < 1.0)) throw InputError("a2_characteristic: a must lie in (-1, 1)");
  if (intervals.empty()) throw InputError("a2_characteristic: no intervals");
  auto integral = [](double p, double lo, double hi) {
    auto F = [p](double t) { return std::copysign(std::pow(std::abs(t), p + 1.0) / (p + 1.0), t); };
    return F(hi) - F(lo);
  };
  double worst = 0.0;
  for (auto [lo, hi] : intervals) {
    if (!(hi > lo)) throw InputError("a2_characteristic: empty interval");
    const double len = hi - lo;
    const double v = a == 0.0 ? 1.0 : (integral(a, lo, hi) / len) * (integral(-a, lo, hi) / len);
    worst = std::max(worst, v);
  }
  return worst;
}

Cylinder cylinder(const VectorFieldFrame& base, const VectorFieldFrame& extended, std::size_t x,
                  int z_index, double r, Stencil stencil) {
  check_radius(r);
  const Grid& eg = extended.grid();
  const int zaxis = eg.ndim() - 1;
  if (eg.ndim() != base.grid().ndim() + 1 || eg.size() != base.grid().size() * eg.dim(zaxis))
    throw InputError("cylinder: extended frame does not extend the base frame");
  const std::size_t nz = static_cast<std::size_t>(eg.dim(zaxis));
  if (z_index < 0 || static_cast<std::size_t>(z_index) >= nz) throw InputError("cylinder: z index out of range");
  auto mb = control_distance(base, x, stencil);
  const std::size_t origin = x * nz + static_cast<std::size_t>(z_index);
  auto me = control_distance(extended, origin, stencil);
  const double zc = eg.coordinate(origin, zaxis);

  Cylinder c;
  c.sigma1 = kInf;
  for (std::size_t e = 0; e < eg.size(); ++e) {
    const bool inside = mb.dist[e / nz] < r && std::abs(eg.coordinate(e, zaxis) - zc) < r;
    if (inside) {
      c.nodes.push_back(e);
      c.sigma2 = std::max(c.sigma2, me.dist[e] / r);
    } else {
      c.sigma1 = std::min(c.sigma1, me.dist[e] / r);
    }
  }
  return c;
}

SobolevProbe sobolev_probe(const VectorFieldFrame& frame, std::size_t center, double r,
                           const WeightedMeasure* weight, const SobolevOptions& opt, Stencil stencil) {
  check_radius(r);
  const Grid& g = frame.grid();
  const auto ones = weight ? std::vector<double>{} : unit_density(g.size());
  const auto& rho = density_or(weight, ones, g.size());
  std::vector<double> kappas = opt.kappas;
  if (kappas.empty())
    for (int k = 1; k <= 180; ++k) kappas.push_back(1.0 + 0.05 * k);

  double hmax = 0.0;
  for (int j = 0; j < g.ndim(); ++j) hmax = std::max(hmax, g.spacing(j));
  auto m = control_distance(frame, center, stencil);
  const auto edges = energy_edges(frame);
  const double cv = g.cell_volume();

  SobolevProbe out;
  std::vector<std::vector<double>> bumps;
  for (int k = 0; k < opt.scales; ++k) {
    const double s = r * std::ldexp(1.0, -k);
    if (s < 3 * hmax || s > m.saturation_radius) continue;
    std::vector<double> phi(g.size(), 0.0);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double q = m.dist[n] / s;
      if (q < 1.0) phi[n] = (1 - q * q) * (1 - q * q);
    }
    out.scales.push_back(s);
    bumps.push_back(std::move(phi));
  }
  if (bumps.size() < 2) throw InputError("sobolev_probe: fewer than two resolved bump scales");

  std::vector<double> energy(bumps.size(), 0.0);
  for (std::size_t b = 0; b < bumps.size(); ++b) {
    for (const auto& e : edges) {
      const double d = bumps[b][e.a] - bumps[b][e.b];
      energy[b] += cv * e.conductance * 0.5 * (rho[e.a] + rho[e.b]) * d * d;
    }
  }
  auto ratio = [&](double kappa, std::size_t b) {
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n)
      if (bumps[b][n] != 0.0) s += cv * rho[n] * std::pow(bumps[b][n], 2 * kappa);
    return std::pow(s, 1.0 / (2 * kappa)) / std::sqrt(energy[b]);
  };

  const double n = static_cast<double>(bumps.size());
  double best = 0.0, best_const = 0.0;
  bool all = true;
  for (double kappa : kappas) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, top = 0;
    for (std::size_t b = 0; b < bumps.size(); ++b) {
      const double R = ratio(kappa, b);
      const double lx = std::log(out.scales[b]), ly = std::log(R);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      top = std::max(top, R);
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (slope >= -opt.slope_tolerance) {
      best = kappa;
      best_const = top;
    } else {
      all = false;
    }
  }
  out.kappa = best;
  out.constant = best_const;
  out.capped = all;
  return out;
}

}  // namespace fraclab
