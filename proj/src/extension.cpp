#include "fraclab/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "fraclab/errors.hpp"
#include "fraclab/special.hpp"

namespace fraclab {

namespace {

void check_s(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0, 1)");
}

double bump(double q) {
  if (std::abs(q) >= 1.0) return 0.0;
  const double v = 1.0 - q * q;
  return v * v * v;
}

double bump_derivative(double q) {
  if (std::abs(q) >= 1.0) return 0.0;
  const double v = 1.0 - q * q;
  return -6.0 * q * v * v;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (auto& [k, v] : kv) {
    os << (first ? "" : ";") << k << "=" << v;
    first = false;
  }
  return os.str();
}

}  // namespace

ZGrid ZGrid::geometric(double z_min, double extent, double ratio) {
  if (!(z_min > 0.0)) throw InputError("zgrid: z_min must be positive");
  if (!(extent > z_min)) throw InputError("zgrid: extent must exceed z_min");
  if (!(ratio > 1.0 && ratio <= 2.0)) throw InputError("zgrid: ratio must lie in (1, 2]");
  ZGrid g;
  g.ratio_ = ratio;
  for (int k = 0;; ++k) {
    const double z = z_min * std::pow(ratio, k);
    if (z >= extent * (1.0 - 1e-12)) break;
    g.levels_.push_back(z);
  }
  // Avoid a sliver cell before the extent.
  if (g.levels_.size() > 1 && extent / g.levels_.back() < std::sqrt(ratio) &&
      extent / g.levels_[g.levels_.size() - 2] <= 2.0)
    g.levels_.pop_back();
  g.levels_.push_back(extent);
  return g;
}

ZGrid ZGrid::refined() const {
  ZGrid g;
  g.ratio_ = std::sqrt(ratio_);
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    if (l > 0) g.levels_.push_back(std::sqrt(levels_[l - 1] * levels_[l]));
    g.levels_.push_back(levels_[l]);
  }
  return g;
}

std::vector<double> ZGrid::cell_weights(double a) const {
  if (!(a > -1.0 && a < 1.0)) throw InputError("zgrid: a must lie in (-1, 1)");
  std::vector<double> w(levels_.size());
  double prev = 0.0;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    const double cur = std::pow(levels_[l], a + 1.0) / (a + 1.0);
    w[l] = cur - prev;
    prev = cur;
  }
  return w;
}

std::vector<double> ZGrid::node_weights(double p) const {
  if (!(p > -1.0)) throw InputError("zgrid: weight exponent must exceed -1");
  const std::size_t L = levels_.size();
  std::vector<double> w(L, 0.0);
  auto M = [](double q, double z) { return std::pow(z, q) / q; };
  w[0] = M(p + 1.0, levels_[0]);
  for (std::size_t l = 0; l + 1 < L; ++l) {
    const double lo = levels_[l], hi = levels_[l + 1], h = hi - lo;
    const double m0 = M(p + 1.0, hi) - M(p + 1.0, lo);
    const double m1 = M(p + 2.0, hi) - M(p + 2.0, lo);
    w[l] += (hi * m0 - m1) / h;
    w[l + 1] += (m1 - lo * m0) / h;
  }
  return w;
}

cplx poisson_mode_quadrature(double s, double z, cplx w) {
  check_s(s);
  if (!(z > 0.0)) throw InputError("poisson_mode: z must be positive");
  return kernel_integral(1.0 + s, w * z * z) / (std::pow(4.0, s) * std::tgamma(s));
}

cplx poisson_mode(double s, double z, cplx w) {
  if (w == 0.0) {
    check_s(s);
    if (!(z > 0.0)) throw InputError("poisson_mode: z must be positive");
    return 1.0;
  }
  return poisson_mode_quadrature(s, z, w);
}

cplx poisson_mode(double a, double z, double lambda, double sigma) {
  if (!(lambda >= 0.0)) throw InputError("poisson_mode: lambda must be nonnegative");
  return poisson_mode(0.5 * (1.0 - a), z, cplx(lambda, 2 * std::numbers::pi * sigma));
}

cplx neumann_mode(double s, double z, cplx w) {
  check_s(s);
  if (!(z > 0.0)) throw InputError("neumann_mode: z must be positive");
  if (w == 0.0) return 0.0;
  return -w * std::pow(z, 2.0 - 2.0 * s) / std::tgamma(1.0 - s) * kernel_integral(s, w * z * z);
}

ExtensionField::ExtensionField(const SpectralDecomposition& dec, double s, ModalField source, ZGrid zgrid,
                               const ExtensionOptions& opt)
    : s_(s), source_(std::move(source)), zgrid_(std::move(zgrid)) {
  check_s(s);
  if (source_.modes() != dec.size()) throw InputError("extension: field does not match decomposition");
  for (double z : zgrid_.levels()) {
    levels_.push_back(evaluate(dec, z));
    if (opt.derivatives) flux_.push_back(evaluate_flux(dec, z));
  }
}

ModalField ExtensionField::evaluate(const SpectralDecomposition& dec, double z) const {
  return source_.map(dec, [&](cplx w) { return poisson_mode(s_, z, w); });
}

ModalField ExtensionField::evaluate_flux(const SpectralDecomposition& dec, double z) const {
  const double ca = neumann_constant(s_);
  return source_.map(dec, [&](cplx w) { return neumann_mode(s_, z, w) / ca; });
}

const ModalField& ExtensionField::flux(std::size_t l) const {
  if (flux_.empty()) throw InputError("extension: built without derivatives");
  return flux_[l];
}

std::vector<double> ExtensionField::signed_levels() const {
  const auto& z = zgrid_.levels();
  if (!reflected_) return z;
  std::vector<double> out;
  for (std::size_t l = z.size(); l-- > 0;) out.push_back(-z[l]);
  out.insert(out.end(), z.begin(), z.end());
  return out;
}

const ModalField& ExtensionField::at_signed(std::size_t i) const {
  if (!reflected_) return levels_.at(i);
  const std::size_t L = levels_.size();
  if (i >= 2 * L) throw InputError("extension: level index out of range");
  return i < L ? levels_[L - 1 - i] : levels_[i - L];
}

Eigen::MatrixXd ExtensionField::values(const SpectralDecomposition& dec, std::size_t l) const {
  if (source_.kind() != ModalField::Kind::Circle) throw InputError("extension values: source is not a circle field");
  return levels_.at(l).to_circle(dec).values();
}

ExtensionField ExtensionField::reflect_even(bool neumann_vanishes) const {
  ExtensionField out = *this;
  out.reflected_ = true;
  out.reflection_warning_ = !neumann_vanishes;
  return out;
}

ExtensionField extend_parabolic(const SpectralDecomposition& dec, double s, const SpaceTimeField& u,
                                const ZGrid& zgrid, const ExtensionOptions& opt) {
  return ExtensionField(dec, s, ModalField::from_circle(dec, u, TimeSymbol::Spectral), zgrid, opt);
}

ExtensionField extend_elliptic(const SpectralDecomposition& dec, double s, const Eigen::VectorXd& u,
                               const ZGrid& zgrid, const ExtensionOptions& opt) {
  return ExtensionField(dec, s, ModalField::stationary(dec, u), zgrid, opt);
}

TraceReport trace_rate(const SpectralDecomposition& dec, const ExtensionField& V, double z_lo, double z_hi) {
  TraceReport r;
  const double s = V.s();
  const auto& C = V.source().coefficients();
  const double hs = V.source().map(dec, [s](cplx w) { return power_symbol(w, s); }).l2_norm();
  r.bound = std::tgamma(1.0 - s) / (std::tgamma(1.0 + s) * std::pow(4.0, s));
  std::vector<double> lx, ly;
  for (std::size_t l = 0; l < V.zgrid().size(); ++l) {
    const double z = V.zgrid().levels()[l];
    if (z < z_lo * (1 - 1e-12) || z > z_hi * (1 + 1e-12)) continue;
    const double e = (V.level(l).coefficients() - C).norm();
    r.z.push_back(z);
    r.error.push_back(e);
    if (hs > 0.0) r.prefactor = std::max(r.prefactor, e / (std::pow(z, 2 * s) * hs));
    if (e > 0.0) {
      lx.push_back(std::log(z));
      ly.push_back(std::log(e));
    }
  }
  if (r.z.size() < 2) throw InputError("trace_rate: fewer than two levels in the fit window");
  if (lx.size() < 2 || lx.size() != r.z.size()) {
    r.degenerate = true;
    r.slope = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.slope = fit_slope(lx, ly);
  return r;
}

NeumannReport neumann_limit(const SpectralDecomposition& dec, const ExtensionField& V) {
  if (!V.has_derivatives()) throw InputError("neumann_limit: extension built without derivatives");
  if (V.zgrid().size() < 4) throw InputError("neumann_limit: need at least four z-levels");
  const double s = V.s();
  NeumannReport r;
  r.c_a = neumann_constant(s);
  const Eigen::MatrixXcd oracle = V.source().map(dec, [s](cplx w) { return -power_symbol(w, s); }).coefficients();
  const double scale = oracle.norm();
  const double p1 = 2.0 - 2.0 * s, p2 = 2.0;
  auto extrapolate = [&](std::size_t first) {
    Eigen::Matrix3d M;
    for (int i = 0; i < 3; ++i) {
      const double z = V.zgrid().levels()[first + i];
      M(i, 0) = 1.0;
      M(i, 1) = std::pow(z, p1);
      M(i, 2) = std::pow(z, p2);
    }
    const Eigen::Vector3d w = M.transpose().fullPivLu().solve(Eigen::Vector3d(1.0, 0.0, 0.0));
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(oracle.rows(), oracle.cols());
    for (int i = 0; i < 3; ++i) acc += w[i] * r.c_a * V.flux(first + i).coefficients();
    return acc;
  };
  r.limit = extrapolate(0);
  const Eigen::MatrixXcd shifted = extrapolate(1);
  const double denom = scale > 0.0 ? scale : 1.0;
  r.defect = (r.limit - oracle).norm() / denom;
  r.defect_shifted = (shifted - oracle).norm() / denom;
  r.monotone = r.defect <= std::max(r.defect_shifted, 1e-12);
  return r;
}

StrongResidual pde_residual_strong(const SpectralDecomposition& dec, const ExtensionField& V) {
  StrongResidual out;
  const auto& z = V.zgrid().levels();
  const double a = V.a();
  const ModalField& src = V.source();
  Eigen::MatrixXcd W(src.coefficients().rows(), src.coefficients().cols());
  for (Eigen::Index k = 0; k < W.rows(); ++k)
    for (Eigen::Index j = 0; j < W.cols(); ++j) W(k, j) = src.w(dec, static_cast<std::size_t>(k), static_cast<int>(j));
  for (std::size_t l = 1; l + 1 < z.size(); ++l) {
    const double hm = z[l] - z[l - 1], hp = z[l + 1] - z[l];
    const auto& vm = V.level(l - 1).coefficients();
    const auto& v0 = V.level(l).coefficients();
    const auto& vp = V.level(l + 1).coefficients();
    const double den = hp * hm * (hp + hm);
    const Eigen::MatrixXcd d2 = 2.0 * (hm * vp - (hp + hm) * v0 + hp * vm) / den;
    const Eigen::MatrixXcd d1 = (hm * hm * vp + (hp * hp - hm * hm) * v0 - hp * hp * vm) / den;
    const Eigen::MatrixXcd res = W.cwiseProduct(v0) - d2 - (a / z[l]) * d1;
    out.z.push_back(z[l]);
    out.residual.push_back(res.norm());
  }
  return out;
}

std::vector<TestBump> default_test_family(const VectorFieldFrame& frame, std::size_t x, double r, double extent,
                                          double t_center, double t_halfwidth) {
  if (!(r > 0.0) || !(extent > 0.0) || !(t_halfwidth > 0.0)) throw InputError("test family: sizes must be positive");
  const auto m = control_distance(frame, x);
  std::vector<std::size_t> order(m.dist.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) {
    return std::abs(m.dist[p] - 0.25 * r) < std::abs(m.dist[q] - 0.25 * r);
  });
  std::vector<std::size_t> centers{x};
  for (auto n : order) {
    if (centers.size() == 5) break;
    if (n != x && m.dist[n] > 0.0 && m.dist[n] <= 0.25 * r) centers.push_back(n);
  }
  std::vector<TestBump> out;
  for (int k = 0; k < 3; ++k) {
    const double f = std::ldexp(1.0, -k);
    for (auto c : centers) {
      const double room = r - m.dist[c];
      out.push_back({c, std::min(0.5 * r * f, 0.999 * room), 0.0, 0.5 * extent * f, t_center, t_halfwidth * f});
    }
  }
  return out;
}

BoundaryDatum neumann_datum(const SpectralDecomposition& dec, double s, const ModalField& u) {
  const double ca = neumann_constant(s);
  ModalField h = u.map(dec, [s, ca](cplx w) { return -power_symbol(w, s) / ca; });
  const Eigen::MatrixXd P = dec.eigenvectors();
  return [h, P](double t) -> Eigen::VectorXd { return P * h.coefficients_at(t); };
}

double weak_form_residual(const SpectralDecomposition& dec, const VectorFieldFrame& frame, const ExtensionField& W,
                          const BoundaryDatum& psi, std::span<const TestBump> family, const WeakFormOptions& opt) {
  if (family.empty()) throw InputError("weak form: empty test family");
  if (!W.has_derivatives()) throw InputError("weak form: extension built without derivatives");
  if (!(opt.t2 > opt.t1)) throw InputError("weak form: t2 must exceed t1");
  if (opt.z_points < 1 || opt.t_points < 1) throw InputError("weak form: quadrature orders must be positive");
  if (frame.grid().size() != dec.size()) throw InputError("weak form: frame does not match decomposition");
  const double M = W.zgrid().extent();
  for (const auto& b : family) {
    if (!(b.rho_x > 0.0 && b.rho_z > 0.0 && b.rho_t > 0.0)) throw InputError("weak form: bump sizes must be positive");
    if (std::abs(b.z_center) + b.rho_z >= M) throw InputError("weak form: test function support reaches z = M");
    if (b.center >= dec.size()) throw InputError("weak form: bump centre out of range");
  }

  const double a = W.a();
  const double cv = dec.cell_volume();
  const auto& lam = dec.eigenvalues();
  const auto& levels = W.zgrid().levels();
  const auto nk = static_cast<Eigen::Index>(dec.size());
  const GaussRule& gz = gauss_legendre(opt.z_points);
  const GaussRule& gt = gauss_legendre(opt.t_points);

  // Mode coefficients at one z, cached across bumps sharing breakpoints.
  struct ZData {
    ModalField v, f;
  };
  std::map<double, ZData> zcache;
  auto zdata = [&](double z) -> const ZData& {
    auto it = zcache.find(z);
    if (it == zcache.end()) it = zcache.emplace(z, ZData{W.evaluate(dec, z), W.evaluate_flux(dec, z)}).first;
    return it->second;
  };
  std::map<double, Eigen::VectorXd> psi_cache;
  auto psi_at = [&](double t) -> const Eigen::VectorXd& {
    auto it = psi_cache.find(t);
    if (it == psi_cache.end()) it = psi_cache.emplace(t, psi(t)).first;
    return it->second;
  };
  std::map<std::size_t, MetricField> metrics;

  double worst = 0.0;
  for (const auto& b : family) {
    auto it = metrics.find(b.center);
    if (it == metrics.end()) it = metrics.emplace(b.center, control_distance(frame, b.center)).first;
    Eigen::VectorXd phx(nk);
    for (Eigen::Index n = 0; n < nk; ++n) phx[n] = bump(it->second.dist[static_cast<std::size_t>(n)] / b.rho_x);
    const Eigen::VectorXd ak = dec.eigenvectors().transpose() * phx;
    const Eigen::VectorXd lak = lam.cwiseProduct(ak);

    auto pz = [&](double z) { return bump((z - b.z_center) / b.rho_z); };
    auto dpz = [&](double z) { return bump_derivative((z - b.z_center) / b.rho_z) / b.rho_z; };
    auto pt = [&](double t) { return bump((t - b.t_center) / b.rho_t); };
    auto dpt = [&](double t) { return bump_derivative((t - b.t_center) / b.rho_t) / b.rho_t; };

    // Time: the bump support clipped to [t1, t2], so the integrand is smooth on the interval.
    const double ta = std::max(opt.t1, b.t_center - b.rho_t), tb = std::min(opt.t2, b.t_center + b.rho_t);
    std::vector<double> tq, wt;
    if (tb > ta)
      for (std::size_t i = 0; i < gt.x.size(); ++i) {
        tq.push_back(0.5 * (ta + tb) + 0.5 * (tb - ta) * gt.x[i]);
        wt.push_back(0.5 * (tb - ta) * gt.w[i]);
      }

    // z in (0, top]; breakpoints at the mesh levels and at the support edges of both halves.
    const double top = std::abs(b.z_center) + b.rho_z;
    std::vector<double> br{0.0, top};
    for (double z : levels)
      if (z < top) br.push_back(z);
    for (double e : {b.z_center - b.rho_z, b.z_center + b.rho_z, -b.z_center - b.rho_z, -b.z_center + b.rho_z})
      if (e > 0.0 && e < top) br.push_back(e);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());

    const int sides = W.reflected() ? 2 : 1;
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t c = 0; c + 1 < br.size(); ++c) {
      const double lo = br[c], hi = br[c + 1], mid = 0.5 * (lo + hi);
      bool live = false;
      for (int side = 0; side < sides; ++side) live = live || pz((side == 0 ? 1 : -1) * mid) != 0.0;
      if (!live) continue;
      for (std::size_t i = 0; i < gz.x.size(); ++i) {
        double z, wa, w1;
        if (c == 0) {
          // z = hi y^{1/(1+a)} absorbs z^a on the cell touching 0.
          const double y = 0.5 * (gz.x[i] + 1.0);
          z = hi * std::pow(y, 1.0 / (1.0 + a));
          wa = 0.5 * gz.w[i] * std::pow(hi, 1.0 + a) / (1.0 + a);
          w1 = wa * std::pow(z, -a);
        } else {
          z = mid + 0.5 * (hi - lo) * gz.x[i];
          w1 = 0.5 * (hi - lo) * gz.w[i];
          wa = w1 * std::pow(z, a);
        }
        const ZData& zd = zdata(z);
        for (int side = 0; side < sides; ++side) {
          const double sg = side == 0 ? 1.0 : -1.0;  // lower half: W even, flux odd
          const double fz = pz(sg * z), dfz = dpz(sg * z);
          if (fz == 0.0 && dfz == 0.0) continue;
          for (std::size_t g = 0; g < tq.size(); ++g) {
            const Eigen::VectorXd cw = zd.v.coefficients_at(tq[g]);
            const double sf = ak.dot(zd.f.coefficients_at(tq[g]));
            lhs += cv * wt[g] * pt(tq[g]) * (wa * fz * lak.dot(cw) + w1 * dfz * sg * sf);
            rhs += cv * wt[g] * dpt(tq[g]) * wa * fz * ak.dot(cw);
          }
          rhs -= cv * wa * fz *
                 (pt(opt.t2) * ak.dot(zd.v.coefficients_at(opt.t2)) - pt(opt.t1) * ak.dot(zd.v.coefficients_at(opt.t1)));
        }
      }
    }
    if (!W.reflected()) {
      const double f0 = pz(0.0);
      if (f0 != 0.0)
        for (std::size_t g = 0; g < tq.size(); ++g) rhs -= cv * wt[g] * pt(tq[g]) * f0 * phx.dot(psi_at(tq[g]));
    }
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double energy_norm(const SpectralDecomposition& dec, const ExtensionField& W) {
  if (!W.has_derivatives()) throw InputError("energy_norm: extension built without derivatives");
  const ModalField& src = W.source();
  if (src.per_mode_rates()) throw InputError("energy_norm: needs a circle or stationary field");
  const double dt = src.kind() == ModalField::Kind::Circle ? src.circle().dt() : 1.0;
  const double a = W.a();
  const auto wa = W.zgrid().node_weights(a);
  const auto wd = W.zgrid().node_weights(-a);
  const Eigen::VectorXd lam = dec.eigenvalues();
  double e = 0.0;
  for (std::size_t l = 0; l < W.zgrid().size(); ++l) {
    const auto& C = W.level(l).coefficients();
    const Eigen::VectorXd rows = C.cwiseAbs2().rowwise().sum();
    const double mass = rows.sum();
    const double grad = lam.dot(rows);
    const double flux = W.flux(l).coefficients().squaredNorm();
    e += wa[l] * (mass + grad) + wd[l] * flux;
  }
  e *= dec.cell_volume() * dt;
  if (W.reflected()) e *= 2.0;
  return std::sqrt(e);
}

double energy_ratio(const SpectralDecomposition& dec, const ExtensionField& W) {
  const ModalField& src = W.source();
  const double dt = src.kind() == ModalField::Kind::Circle ? src.circle().dt() : 1.0;
  const double h = norm_h2s(dec, W.s(), src);
  if (h == 0.0) return 0.0;
  return energy_norm(dec, W) / (std::sqrt(dec.cell_volume() * dt) * h);
}

Eigen::MatrixXd energy_factors(const SpectralDecomposition& dec, double s, const ModalField& shape,
                               const ZGrid& zgrid) {
  if (shape.per_mode_rates()) throw InputError("energy_factors: needs a circle or stationary field");
  const Eigen::MatrixXcd ones = Eigen::MatrixXcd::Ones(shape.coefficients().rows(), shape.coefficients().cols());
  const ExtensionField W(dec, s, shape.with_coefficients(ones), zgrid);
  const double a = W.a();
  const auto wa = zgrid.node_weights(a);
  const auto wd = zgrid.node_weights(-a);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(ones.rows(), ones.cols());
  const Eigen::VectorXd grad = Eigen::VectorXd::Ones(ones.rows()) + dec.eigenvalues();
  for (std::size_t l = 0; l < zgrid.size(); ++l) {
    e += wa[l] * (grad.asDiagonal() * W.level(l).coefficients().cwiseAbs2());
    e += wd[l] * W.flux(l).coefficients().cwiseAbs2();
  }
  return e;
}

std::vector<double> energy_ratios(const SpectralDecomposition& dec, double s, std::span<const SpaceTimeField> fields,
                                  const ZGrid& zgrid) {
  std::vector<double> out;
  if (fields.empty()) return out;
  const ModalField first = ModalField::from_circle(dec, fields[0]);
  const Eigen::MatrixXd e = energy_factors(dec, s, first, zgrid);
  for (const auto& u : fields) {
    if (u.circle().samples != fields[0].circle().samples || u.circle().period != fields[0].circle().period)
      throw InputError("energy_ratios: fields must share one time circle");
    const ModalField m = ModalField::from_circle(dec, u);
    const double h = norm_h2s(dec, s, m);
    const double en = std::sqrt((m.coefficients().cwiseAbs2().cwiseProduct(e)).sum());
    out.push_back(h == 0.0 ? 0.0 : en / h);
  }
  return out;
}

double bessel_energy_integral(double nu, double R) {
  nu = std::abs(nu);
  if (nu >= 0.5) return std::numeric_limits<double>::infinity();
  if (!(R > 0.0)) throw InputError("bessel_energy_integral: R must be positive");
  const double p = 1.0 - 2.0 * nu;
  auto f = [&](double r) {
    const double k = bessel_k(nu, r);
    return k * k * std::pow(r, p);
  };
  // Leading small-argument term K_nu(r) ~ Gamma(nu)/2 (2/r)^nu integrated on (0, r0].
  const double r0 = std::min(1e-8, 0.5 * R);
  const double g = 0.5 * std::tgamma(nu);
  double acc = g * g * std::pow(2.0, 2 * nu) * std::pow(r0, 2.0 - 4.0 * nu) / (2.0 - 4.0 * nu);
  const GaussRule& gl = gauss_legendre(20);
  double lo = r0;
  while (lo < R) {
    const double hi = std::min(2.0 * lo, R);
    const int pieces = std::max(1, static_cast<int>(std::ceil((hi - lo) / 2.0)));
    const double step = (hi - lo) / pieces;
    for (int m = 0; m < pieces; ++m) acc += integrate(gl, lo + m * step, m + 1 == pieces ? hi : lo + (m + 1) * step, f);
    lo = hi;
    if (lo > 60.0) break;  // K^2 below e^{-120}
  }
  return acc;
}

namespace {

// w^s int_0^inf u^{-1-s} e^{-zeta/(4u)} e^{-u} du: the ray-rotated form of the Poisson mode integral.
cplx rotated_poisson(double s, double z, cplx w) {
  const cplx zeta = w * z * z;
  const GaussRule& g = gauss_legendre(20);
  auto f = [&](double u) { return std::pow(u, -1.0 - s) * std::exp(-zeta / (4.0 * u) - u); };
  cplx acc = 0.0;
  // Lower end where e^{-Re zeta/(4u)} is negligible.
  double lo = std::max(zeta.real() / (4.0 * 80.0), 1e-300);
  const double top = 80.0;
  while (lo < top) {
    const double hi = std::min(2.0 * lo, top);
    const double phase = std::abs(zeta.imag()) / (4.0 * lo * lo) * (hi - lo);
    const int pieces = std::max(1, static_cast<int>(std::ceil(phase / 1.0)));
    const double step = (hi - lo) / pieces;
    for (int m = 0; m < pieces; ++m) acc += integrate(g, lo + m * step, m + 1 == pieces ? hi : lo + (m + 1) * step, f);
    lo = hi;
  }
  return std::pow(w, s) * acc * std::pow(z, 2 * s) / (std::pow(4.0, s) * std::tgamma(s));
}

// int_0^inf t^{p-1} e^{-t} dt by dyadic panels; t = y^{1/p} removes the endpoint singularity.
double gamma_by_quadrature(double p) {
  const GaussRule& g = gauss_legendre(20);
  auto f = [&](double y) { return std::exp(-std::pow(y, 1.0 / p)) / p; };
  double acc = 0.0;
  const double top = std::pow(60.0, p);
  double hi = top;
  while (hi > 1e-30) {
    const double lo = hi > 1.0 ? std::max(hi - 1.0, 0.5 * hi) : 0.5 * hi;
    acc += integrate(g, lo, hi, f);
    hi = lo;
  }
  return acc;
}

}  // namespace

std::vector<IdentityRow> special_identities_check(std::span<const double> s_values, double tolerance) {
  if (s_values.empty()) throw InputError("identities: no s values");
  std::vector<IdentityRow> rows;
  auto add = [&](std::string id, std::string par, double value, double expected, bool relative, bool report = false) {
    IdentityRow r;
    r.identity = std::move(id);
    r.parameters = std::move(par);
    r.value = value;
    r.expected = expected;
    r.defect = std::abs(value - expected) / (relative && expected != 0.0 ? std::abs(expected) : 1.0);
    r.tolerance = tolerance;
    r.report_only = report;
    rows.push_back(std::move(r));
  };

  for (double s : s_values) {
    check_s(s);
    const double a = 1.0 - 2.0 * s;
    for (double z : {0.1, 1.0, 10.0})
      add("kernel_normalization", fmt({{"a", a}, {"z", z}}), poisson_mode_quadrature(s, z, 0.0).real(), 1.0, false);
  }
  for (double s : s_values)
    add("gamma_integral", fmt({{"s", s}}), -balakrishnan_integral(s, 1.0).real(), std::tgamma(1.0 - s) / s, true);
  for (double nu : s_values)
    for (double beta : {0.5, 1.0, 2.0})
      for (double gam : {0.5, 1.0, 2.0})
        add("gr_bessel", fmt({{"nu", nu}, {"beta", beta}, {"gamma", gam}}), bessel_k_moment(nu, beta, gam),
            2.0 * std::pow(beta / gam, 0.5 * nu) * bessel_k(nu, 2.0 * std::sqrt(beta * gam)), true);
  for (double s : s_values)
    for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0})
      for (double sig : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const cplx w(lam, 2 * std::numbers::pi * sig);
        const cplx exact = std::pow(w, s);
        add("complex_power", fmt({{"s", s}, {"lambda", lam}, {"sigma", sig}}),
            std::abs(balakrishnan_symbol(s, w) - exact) / std::abs(exact), 0.0, false);
      }
  for (double s : s_values) {
    const double ca = neumann_constant(s);
    if (s == 0.5) add("neumann_constant", fmt({{"s", s}}), ca, 1.0, false);
    else add("neumann_constant", fmt({{"s", s}}), ca, ca, false, true);
    add("neumann_gamma_identity", fmt({{"s", s}}), gamma_by_quadrature(1.0 - s) / std::tgamma(1.0 - s), 1.0, false);
  }
  add("bessel_k_half", fmt({{"nu", 0.5}, {"x", 1.0}}), bessel_k(0.5, 1.0),
      std::sqrt(std::numbers::pi / 2.0) * std::exp(-1.0), true);
  for (double x : {0.5, 1.0, 5.0})
    add("bessel_k_symmetry", fmt({{"nu", 0.3}, {"x", x}}), bessel_k(-0.3, x), bessel_k(0.3, x), true);
  for (double s : s_values)
    for (cplx w : {cplx(1.0, 2 * std::numbers::pi), cplx(0.5, std::numbers::pi)}) {
      const cplx direct = poisson_mode_quadrature(s, 0.5, w);
      add("contour_rotation", fmt({{"s", s}, {"z", 0.5}, {"re_w", w.real()}, {"im_w", w.imag()}}),
          std::abs(rotated_poisson(s, 0.5, w) - direct), 0.0, false);
    }
  for (double s : s_values) {
    const double nu = s;
    const double mu = 2.0 - 2.0 * nu;
    if (nu < 0.5) {
      const double limit = std::sqrt(std::numbers::pi) * std::tgamma(mu / 2 + nu) * std::tgamma(mu / 2 - nu) *
                           std::tgamma(mu / 2) / (4.0 * std::tgamma((mu + 1) / 2));
      double worst = 0.0;
      for (double lam : {1.0, 1e2, 1e4}) worst = std::max(worst, bessel_energy_integral(nu, 2.0 * std::sqrt(lam)));
      add("bessel_energy_bounded", fmt({{"nu", nu}, {"M", 2.0}}), std::max(worst, limit), limit, true);
    } else {
      // rho^{1-4 nu} is not integrable at 0: the integral is infinite for every lambda.
      add("bessel_energy_bounded", fmt({{"nu", nu}, {"M", 2.0}}), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), false, true);
    }
  }
  return rows;
}

}  // namespace fraclab
