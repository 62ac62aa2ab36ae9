#include "fraclab/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "fraclab/errors.hpp"
#include "fraclab/fractional.hpp"

namespace fraclab {

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Constant: return "constant";
    case FamilyKind::CaloricTranslate: return "caloric-translate";
    case FamilyKind::EllipticDirichlet: return "elliptic-dirichlet";
    case FamilyKind::ParabolicDirichlet: return "parabolic-dirichlet";
    case FamilyKind::Extension: return "extension";
  }
  return "?";
}

FamilyKind parse_family(const std::string& name) {
  for (auto k : {FamilyKind::Constant, FamilyKind::CaloricTranslate, FamilyKind::EllipticDirichlet,
                 FamilyKind::ParabolicDirichlet, FamilyKind::Extension})
    if (family_name(k) == name) return k;
  throw InputError("unknown solution family '" + name + "'");
}

SpaceTimeField make_caloric_translate(const SpectralDecomposition& dec, std::size_t y0, double t0,
                                      const TimeCircle& circle) {
  circle.validate();
  if (!(t0 < circle.origin)) throw InputError("caloric translate: t0 must lie below the time window");
  const ModalField p = ModalField::caloric(dec, y0, t0);
  std::vector<double> times(static_cast<std::size_t>(circle.samples));
  for (int i = 0; i < circle.samples; ++i) times[static_cast<std::size_t>(i)] = circle.time(i);
  return SpaceTimeField(p.sample(dec, times), circle);
}

double evolutive_invariance_defect(const SpectralDecomposition& dec, const ModalField& caloric,
                                   std::span<const double> times, std::span<const double> taus) {
  if (!caloric.per_mode_rates()) throw InputError("invariance defect: needs a caloric field");
  const Eigen::MatrixXd& P = dec.eigenvectors();
  double worst = 0.0;
  for (double t : times)
    for (double tau : taus) {
      if (!(t - tau > caloric.t_ref())) continue;
      const Eigen::VectorXd now = P * caloric.coefficients_at(t);
      const Eigen::VectorXd moved = heat_apply(dec, tau, P * caloric.coefficients_at(t - tau));
      worst = std::max(worst, (moved - now).cwiseAbs().maxCoeff() / now.cwiseAbs().maxCoeff());
    }
  return worst;
}

std::vector<int> times_in(std::span<const double> times, double lo, double hi) {
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < times.size(); ++i) step = std::min(step, std::abs(times[i] - times[i - 1]));
  const double tol = std::isfinite(step) ? 1e-9 * step : 1e-12 * std::max(1.0, std::abs(hi));
  std::vector<int> out;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] > lo + tol && times[i] <= hi + tol) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void finish(Quotient& q) {
  if (q.inf <= 0.0) {
    q.infinite = true;
    q.quotient = std::numeric_limits<double>::infinity();
  } else {
    q.quotient = q.sup / q.inf;
  }
}

std::vector<std::size_t> ball_nodes(const MetricField& metric, double r) {
  auto b = ball(metric, r).nodes;
  if (b.empty()) throw InputError("harnack: empty ball");
  return b;
}

}  // namespace

Quotient harnack_quotient_parabolic(const Eigen::MatrixXd& values, std::span<const double> times,
                                    const MetricField& metric, double r) {
  if (static_cast<std::size_t>(values.cols()) != times.size() ||
      static_cast<std::size_t>(values.rows()) != metric.dist.size())
    throw InputError("harnack: values do not match nodes x times");
  const auto nodes = ball_nodes(metric, r);
  const auto ts = times_in(times, -r * r, -0.5 * r * r);
  const auto ti = times_in(times, -0.25 * r * r, 0.0);
  if (ts.empty() || ti.empty()) throw InputError("harnack: a time region holds no samples");
  Quotient q;
  q.sup = -std::numeric_limits<double>::infinity();
  q.inf = std::numeric_limits<double>::infinity();
  for (auto n : nodes) {
    for (int i : ts)
      if (values(static_cast<Eigen::Index>(n), i) > q.sup) {
        q.sup = values(static_cast<Eigen::Index>(n), i);
        q.sup_node = n;
        q.sup_time = i;
      }
    for (int i : ti)
      if (values(static_cast<Eigen::Index>(n), i) < q.inf) {
        q.inf = values(static_cast<Eigen::Index>(n), i);
        q.inf_node = n;
        q.inf_time = i;
      }
  }
  finish(q);
  return q;
}

Quotient harnack_quotient_elliptic(const Eigen::VectorXd& u, const MetricField& metric, double r) {
  if (static_cast<std::size_t>(u.size()) != metric.dist.size()) throw InputError("harnack: field size mismatch");
  Quotient q;
  q.sup = -std::numeric_limits<double>::infinity();
  q.inf = std::numeric_limits<double>::infinity();
  for (auto n : ball_nodes(metric, r)) {
    const double v = u[static_cast<Eigen::Index>(n)];
    if (v > q.sup) {
      q.sup = v;
      q.sup_node = n;
    }
    if (v < q.inf) {
      q.inf = v;
      q.inf_node = n;
    }
  }
  finish(q);
  return q;
}

Quotient harnack_quotient_extension(const SpectralDecomposition& dec, const ExtensionField& V,
                                    const MetricField& metric, double z, double r) {
  if (!V.reflected()) throw InputError("harnack: extension quotient needs a reflected field");
  if (V.reflection_warning()) throw InputError("harnack: reflected field has a nonzero Neumann datum");
  const double rho = 0.5 * r;
  const auto nodes = ball_nodes(metric, rho);
  const auto zs = V.signed_levels();
  Quotient q;
  q.sup = -std::numeric_limits<double>::infinity();
  q.inf = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (!(std::abs(zs[i] - z) < rho)) continue;
    any = true;
    const ModalField& lv = V.at_signed(i);
    const Eigen::VectorXd hi = dec.eigenvectors() * lv.coefficients_at(-0.5 * r * r);
    const Eigen::VectorXd lo = dec.eigenvectors() * lv.coefficients_at(0.0);
    for (auto n : nodes) {
      const auto k = static_cast<Eigen::Index>(n);
      if (hi[k] > q.sup) {
        q.sup = hi[k];
        q.sup_node = n;
        q.sup_time = static_cast<int>(i);
      }
      if (lo[k] < q.inf) {
        q.inf = lo[k];
        q.inf_node = n;
        q.inf_time = static_cast<int>(i);
      }
    }
  }
  if (!any) throw InputError("harnack: no z-level inside the cylinder");
  finish(q);
  return q;
}

namespace {

struct Sample {
  Eigen::MatrixXd values;  // nodes x times
  std::vector<double> times;
  Certificate cert;
};

Certificate certify(double min_value, double residual) {
  return {min_value, residual, min_value >= kNonnegativityFloor && residual <= kResidualCeiling};
}

void inject(Eigen::MatrixXd& v, std::size_t center) {
  v(static_cast<Eigen::Index>(center), v.cols() - 1) -= 2.0 * v.cwiseAbs().maxCoeff() + 1.0;
}

std::vector<double> window(double r, double dt_fraction) {
  // (-2 r^2, 0] on the step r^2 dt_fraction, ending at 0.
  const double dt = r * r * dt_fraction;
  const int n = static_cast<int>(std::lround(2.0 / dt_fraction));
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = -(n - 1 - i) * dt;
  return t;
}

std::uint64_t mix(std::uint64_t seed, std::size_t center, std::size_t radius_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(center), static_cast<std::uint32_t>(radius_index)};
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  return (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
}

}  // namespace

HarnackReport scale_scan(const SpectralDecomposition& dec, const VectorFieldFrame& frame,
                         std::span<const FamilyKind> families, std::span<const std::size_t> centers,
                         std::span<const double> radii, const ScanOptions& opt) {
  if (families.empty() || centers.empty() || radii.empty()) throw InputError("scan: empty families, centres or radii");
  if (!(opt.s > 0.0 && opt.s < 1.0)) throw InputError("s must lie in (0, 1)");
  if (!(opt.dt_fraction > 0.0 && opt.dt_fraction <= 1.0 / 16)) throw InputError("scan: dt must be at most r^2/16");
  if (!(opt.caloric_offset > 2.0)) throw InputError("scan: caloric offset must exceed 2 (t0 below -2 r^2)");
  if (frame.grid().size() != dec.size()) throw InputError("scan: frame does not match decomposition");
  std::vector<double> rs(radii.begin(), radii.end());
  std::sort(rs.begin(), rs.end());
  for (std::size_t i = 1; i < rs.size(); ++i)
    if (std::abs(rs[i] / rs[i - 1] - 2.0) > 1e-9) throw InputError("scan: radii must be dyadic");
  std::vector<std::size_t> cs(centers.begin(), centers.end());
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  for (auto c : cs)
    if (c >= dec.size()) throw InputError("scan: centre outside grid");

  const double hmin = frame.grid().min_spacing();
  const double s = opt.s;
  const auto nk = static_cast<Eigen::Index>(dec.size());
  HarnackReport rep;

  for (auto c : cs) {
    const MetricField metric = control_distance(frame, c);
    for (std::size_t ri = 0; ri < rs.size(); ++ri) {
      const double r = rs[ri];
      if (r < 4.0 * hmin * (1 - 1e-12) || 2.0 * r > metric.saturation_radius) {
        rep.excluded.emplace_back(c, r);
        continue;
      }
      const auto region_nodes = ball_nodes(metric, 2.0 * r);
      for (auto fam : families) {
        HarnackRow row{fam, c, r, {}, {}};
        switch (fam) {
          case FamilyKind::Constant: {
            const auto t = window(r, opt.dt_fraction);
            Eigen::MatrixXd v = Eigen::MatrixXd::Ones(nk, static_cast<Eigen::Index>(t.size()));
            const Eigen::VectorXd Lu = frac_L_spectral(dec, s, Eigen::VectorXd::Ones(nk));
            if (opt.inject_negative) inject(v, c);
            row.cert = certify(v.minCoeff(), Lu.cwiseAbs().maxCoeff());
            row.q = harnack_quotient_parabolic(v, t, metric, r);
            break;
          }
          case FamilyKind::CaloricTranslate: {
            const auto t = window(r, opt.dt_fraction);
            const double t0 = -opt.caloric_offset * r * r;
            const ModalField p = ModalField::caloric(dec, c, t0);
            Eigen::MatrixXd v = p.sample(dec, t);
            if (opt.inject_negative) inject(v, c);
            const ModalField hs = p.map(dec, [s](cplx w) { return power_symbol(w, s); });
            double res = hs.sample(dec, t).cwiseAbs().maxCoeff();
            const double taus[] = {0.1 * r * r, r * r};
            res = std::max(res, evolutive_invariance_defect(dec, p, t, taus));
            row.cert = certify(v.minCoeff(), res);
            row.q = harnack_quotient_parabolic(v, t, metric, r);
            break;
          }
          case FamilyKind::EllipticDirichlet: {
            std::mt19937_64 rng(mix(opt.seed, c, ri));
            std::uniform_real_distribution<double> U(0.0, 1.0);
            Eigen::VectorXd g(nk);
            for (Eigen::Index n = 0; n < nk; ++n) g[n] = U(rng);
            auto sol = dirichlet_solve_elliptic(dec, s, region_nodes, g);
            if (opt.inject_negative) sol.u[static_cast<Eigen::Index>(c)] = -1.0;
            row.cert = certify(sol.u.minCoeff(), sol.residual);
            row.q = harnack_quotient_elliptic(sol.u, metric, r);
            break;
          }
          case FamilyKind::ParabolicDirichlet: {
            TimeCircle circle;
            circle.samples = opt.time_samples;
            circle.period = opt.time_samples * r * r * opt.dt_fraction;
            circle.origin = -(opt.time_samples - 1) * r * r * opt.dt_fraction;
            circle.validate();
            std::vector<double> t(static_cast<std::size_t>(circle.samples));
            for (int i = 0; i < circle.samples; ++i) t[static_cast<std::size_t>(i)] = circle.time(i);
            const auto in_time = times_in(t, -2.0 * r * r, 0.0);
            if (in_time.size() + 1 >= static_cast<std::size_t>(circle.samples))
              throw InputError("scan: time circle too short for the parabolic region");
            std::vector<std::size_t> region;
            for (auto n : region_nodes)
              for (int i : in_time) region.push_back(n * static_cast<std::size_t>(circle.samples) + i);
            std::mt19937_64 rng(mix(opt.seed, c, ri));
            std::uniform_real_distribution<double> U(0.0, 1.0);
            Eigen::MatrixXd g(nk, circle.samples);
            for (Eigen::Index n = 0; n < nk; ++n)
              for (int i = 0; i < circle.samples; ++i) g(n, i) = U(rng);
            auto sol = dirichlet_solve_parabolic(dec, s, circle, region, g, TimeSymbol::Causal, opt.space_time_cap);
            if (opt.inject_negative) inject(sol.u, c);
            row.cert = certify(sol.u.minCoeff(), sol.residual);
            row.q = harnack_quotient_parabolic(sol.u, t, metric, r);
            break;
          }
          case FamilyKind::Extension: {
            const double t0 = -opt.caloric_offset * r * r;
            ExtensionOptions eo;
            eo.derivatives = false;
            const ExtensionField V =
                ExtensionField(dec, s, ModalField::caloric(dec, c, t0), opt.zgrid, eo).reflect_even(true);
            double mn = std::numeric_limits<double>::infinity();
            const double ts[] = {-2.0 * r * r * (1 - 1e-12), -0.5 * r * r, 0.0};
            for (std::size_t l = 0; l < V.zgrid().size(); ++l)
              mn = std::min(mn, V.level(l).sample(dec, ts).minCoeff());
            if (opt.inject_negative) mn = std::min(mn, -1.0);
            // Per mode the equation reads w V = V'' + (a/z) V'. Here w = 0 and V is constant in z, so both
            // sides are measured directly; difference quotients would only amplify rounding near z = 0.
            double res = 0.0;
            const ModalField& src = V.source();
            for (std::size_t k = 0; k < src.modes(); ++k)
              res = std::max(res, std::abs(src.w(dec, k, 0) * src.coefficients()(static_cast<Eigen::Index>(k), 0)));
            for (std::size_t l = 0; l < V.zgrid().size(); ++l)
              res = std::max(res, (V.level(l).coefficients() - src.coefficients()).cwiseAbs().maxCoeff());
            row.cert = certify(mn, res);
            row.q = harnack_quotient_extension(dec, V, metric, 0.0, r);
            break;
          }
        }
        if (!row.cert.valid)
          throw CertificateError("certificate failed for family " + family_name(fam) + " at centre " +
                                 std::to_string(c) + ", r = " + std::to_string(r) +
                                 ": min = " + fmt_g(row.cert.min_value) +
                                 ", residual = " + fmt_g(row.cert.residual));
        rep.rows.push_back(row);
      }
    }
  }
  if (rep.rows.empty()) throw InputError("scan: no admissible radius");

  for (auto fam : families) {
    std::map<double, double> per_r;
    FamilySummary sm;
    sm.min_quotient = std::numeric_limits<double>::infinity();
    for (const auto& row : rep.rows) {
      if (row.family != fam) continue;
      auto& m = per_r[row.r];
      m = std::max(m, row.q.quotient);
      sm.max_quotient = std::max(sm.max_quotient, row.q.quotient);
      sm.min_quotient = std::min(sm.min_quotient, row.q.quotient);
      sm.any_infinite = sm.any_infinite || row.q.infinite;
    }
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (auto& [r, v] : per_r) {
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    sm.radii = static_cast<int>(per_r.size());
    sm.stability_ratio = hi / lo;
    rep.summary[fam] = sm;
  }
  return rep;
}

}  // namespace fraclab
