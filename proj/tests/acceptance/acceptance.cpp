// Acceptance gate: one line per criterion, nonzero exit when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/commands.hpp"
#include "fraclab/config.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/fractional.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/harnack.hpp"
#include "fraclab/io.hpp"
#include "fraclab/special.hpp"

using namespace fraclab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Preset {
  std::string name;
  VectorFieldFrame frame;
  SpectralDecomposition dec;
};

std::vector<Preset> desk_presets() {
  std::vector<Preset> out;
  for (auto [name, f] : {std::pair{"euclidean1d_n64", euclidean(1, 64)}, std::pair{"euclidean2d_n16", euclidean(2, 16)},
                         std::pair{"grushin_n16", grushin(16)}, std::pair{"heisenberg_n8", heisenberg(8)}})
    out.push_back({name, f, spectral_decompose(assemble(f))});
  return out;
}

const std::vector<double> kS{0.25, 0.5, 0.75};
const TimeCircle kCircle{2 * 3.141592653589793, 16, 0.0};

std::size_t center_of(const Grid& g) {
  std::vector<int> idx(static_cast<std::size_t>(g.ndim()));
  for (int a = 0; a < g.ndim(); ++a) idx[static_cast<std::size_t>(a)] = g.dim(a) / 2;
  return g.flat_index(idx);
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& body, double budget_seconds = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_seconds > 0.0 && sec >= budget_seconds) {
    o.pass = false;
    o.detail += "; over the " + fmt_num(budget_seconds) + " s budget";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), sec);
  std::fflush(stdout);
}

std::string g3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const auto presets = desk_presets();

  report(1, [&] {
    double worst = 0.0;
    for (const auto& p : presets) {
      const Eigen::VectorXd u = smooth_random_field(p.dec, 101, 0.0);
      const auto U = smooth_random_spacetime(p.dec, kCircle, 102, 0.0);
      for (double s : kS) {
        const Eigen::VectorXd a = frac_L_balakrishnan(p.dec, s, u), b = frac_L_spectral(p.dec, s, u);
        worst = std::max(worst, (a - b).norm() / b.norm());
        const Eigen::MatrixXd A = frac_H_balakrishnan(p.dec, s, U).values(), B = frac_H_spectral(p.dec, s, U).values();
        worst = std::max(worst, (A - B).norm() / B.norm());
      }
    }
    return Outcome{worst <= 1e-6, "Balakrishnan vs spectral, max relative error " + g3(worst) + " (tol 1e-6)"};
  }, 60.0);

  report(2, [&] {
    int rows = 0, bad = 0;
    double worst = 0.0;
    for (const auto& r : special_identities_check(kS, 1e-8)) {
      if (r.report_only) continue;
      ++rows;
      worst = std::max(worst, r.defect);
      bad += r.pass() ? 0 : 1;
    }
    return Outcome{bad == 0, std::to_string(rows) + " closed-form identity rows, max defect " + g3(worst) + " (tol 1e-8)"};
  });

  // Extensions of one band-limited field per preset and s, shared by criteria 3 and 4.
  const ZGrid zg = ZGrid::geometric();

  report(3, [&] {
    double margin = 1e9;
    std::string where;
    for (const auto& p : presets) {
      const auto u = smooth_random_spacetime(p.dec, kCircle, 7, 0.5);
      for (double s : kS) {
        const auto V = extend_parabolic(p.dec, s, u, zg, ExtensionOptions{false});
        const auto tr = trace_rate(p.dec, V);
        if (tr.slope - (2 * s - 0.1) < margin) {
          margin = tr.slope - (2 * s - 0.1);
          where = p.name + " s=" + fmt_num(s) + " slope " + g3(tr.slope);
        }
      }
    }
    return Outcome{margin >= 0.0, "trace slope >= 2s - 0.1 on 4 presets x 3 s; tightest " + where};
  }, 120.0);

  report(4, [&] {
    double worst = 0.0;
    for (const auto& p : presets) {
      const auto u = smooth_random_spacetime(p.dec, kCircle, 7, 0.5);
      for (double s : kS) worst = std::max(worst, neumann_limit(p.dec, extend_parabolic(p.dec, s, u, zg)).defect);
    }
    const bool ca = neumann_constant(0.5) == 1.0;
    return Outcome{worst <= 1e-3 && ca, "Neumann limit max relative defect " + g3(worst) + " (tol 1e-3); c_a(1/2) == 1 " +
                                            (ca ? "exactly" : "FAILED")};
  });

  report(5, [&] {
    double worst = 1.0;
    bool finite = true;
    for (const auto& p : presets) {
      std::vector<SpaceTimeField> base, fine_t;
      for (std::uint64_t k = 0; k < 20; ++k) {
        base.push_back(smooth_random_spacetime(p.dec, kCircle, 1000 + k, 0.5));
        fine_t.push_back(resample(base.back(), 2 * kCircle.samples));
      }
      for (double s : kS) {
        const auto e0 = energy_ratios(p.dec, s, base, zg);
        const auto ez = energy_ratios(p.dec, s, base, zg.refined());
        const auto et = energy_ratios(p.dec, s, fine_t, zg);
        const double m0 = *std::max_element(e0.begin(), e0.end());
        const double mz = *std::max_element(ez.begin(), ez.end());
        const double mt = *std::max_element(et.begin(), et.end());
        finite = finite && std::isfinite(m0) && std::isfinite(mz) && std::isfinite(mt) && m0 > 0;
        worst = std::max({worst, std::max(m0, mz) / std::min(m0, mz), std::max(m0, mt) / std::min(m0, mt)});
      }
    }
    return Outcome{finite && worst < 2.0, "20-field energy battery, max-ratio change under z / t refinement x" + fmt_num(worst) +
                                              " (must stay < 2)"};
  });

  report(6, [&] {
    double stoch = 0, sym = 0, comp = 0, slope_dev = 0;
    for (const auto& p : presets) {
      const auto r = semigroup_axioms_check(p.dec, 5);
      stoch = std::max(stoch, r.stochastic_defect);
      sym = std::max(sym, r.symmetry_defect);
      comp = std::max(comp, r.composition_defect);
      slope_dev = std::max(slope_dev, std::abs(r.generator_slope - 1.0));
    }
    const bool ok = stoch <= 1e-12 && sym <= 1e-12 && comp <= 1e-10 && slope_dev <= 0.1;
    return Outcome{ok, "P_t1 defect " + g3(stoch) + ", symmetry " + g3(sym) + ", composition " + g3(comp) +
                           ", |generator slope - 1| " + g3(slope_dev)};
  });

  report(7, [&] {
    double min_ell = 1e9, min_par = 1e9, off = -1e9;
    for (const auto& p : presets) {
      const Grid& g = p.frame.grid();
      const std::size_t x = center_of(g);
      const auto m = control_distance(p.frame, x);
      double h = 0.0;
      for (int a = 0; a < g.ndim(); ++a) h = std::max(h, g.spacing(a));
      const auto region = ball(m, 2.0 * h).nodes;
      const std::size_t Nt = static_cast<std::size_t>(kCircle.samples);
      std::vector<std::size_t> st_region;
      for (auto n : region)
        for (std::size_t i = Nt / 2; i < Nt; ++i) st_region.push_back(n * Nt + i);
      std::vector<std::size_t> time0(g.size());
      for (std::size_t n = 0; n < g.size(); ++n) time0[n] = n * Nt;
      for (double s : kS) {
        Eigen::MatrixXd A = frac_L_matrix(p.dec, s);
        A.diagonal().setZero();
        off = std::max(off, A.maxCoeff());
        // Lag-circulant in time: rows at time 0 against every column hold every distinct entry.
        Eigen::MatrixXd H = frac_H_matrix(p.dec, s, kCircle, TimeSymbol::Causal, time0);
        for (std::size_t n = 0; n < g.size(); ++n) H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n * Nt)) = 0.0;
        off = std::max(off, H.maxCoeff());
      }
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        Eigen::VectorXd ge(static_cast<Eigen::Index>(g.size()));
        for (auto& v : ge) v = ud(rng);
        Eigen::MatrixXd gp(static_cast<Eigen::Index>(g.size()), kCircle.samples);
        for (auto& v : gp.reshaped()) v = ud(rng);
        const double s = kS[seed % 3];
        min_ell = std::min(min_ell, dirichlet_solve_elliptic(p.dec, s, region, ge).u.minCoeff());
        min_par = std::min(min_par, dirichlet_solve_parabolic(p.dec, s, kCircle, st_region, gp).u.minCoeff());
      }
    }
    const bool ok = min_ell >= -1e-10 && min_par >= -1e-10 && off <= 1e-12;
    return Outcome{ok, "min Dirichlet solution elliptic " + g3(min_ell) + ", parabolic " + g3(min_par) +
                           " (floor -1e-10); max off-diagonal of L^s and H^s " + g3(off) + " (tol 1e-12)"};
  });

  report(8, [&] {
    const auto f = euclidean(1, 128);
    const auto dec = spectral_decompose(assemble(f));
    const std::vector<FamilyKind> fam{FamilyKind::Constant, FamilyKind::CaloricTranslate, FamilyKind::EllipticDirichlet,
                                      FamilyKind::ParabolicDirichlet, FamilyKind::Extension};
    const double r0 = 4 * f.grid().spacing(0);
    const std::vector<double> radii{r0, 2 * r0, 4 * r0};
    const std::vector<std::size_t> centers{64};
    bool ok = true;
    double stability = 0.0;
    for (double s : kS) {
      ScanOptions opt;
      opt.s = s;
      const auto rep = scale_scan(dec, f, fam, centers, radii, opt);
      ok = ok && rep.excluded.empty() && rep.rows.size() == fam.size() * radii.size();
      for (const auto& row : rep.rows) {
        ok = ok && row.cert.valid && std::isfinite(row.q.quotient) && !row.q.infinite;
        if (row.family == FamilyKind::Constant) ok = ok && row.q.quotient == 1.0;
      }
      for (const auto& [k, sm] : rep.summary) stability = std::max(stability, sm.stability_ratio);
    }
    ok = ok && stability <= 10.0;
    return Outcome{ok, "all quotients finite with valid certificates, constants exactly 1, max stability ratio " +
                           g3(stability) + " (<= 10); the Harnack constant itself is not numeric"};
  });

  report(9, [&] {
    std::vector<std::string> notes;
    bool ok = true;
    // Doubling constant on euclidean(2).
    {
      const auto f = euclidean(2, 16);
      const double h = f.grid().spacing(0);
      const std::vector<std::size_t> c{center_of(f.grid())};
      const std::vector<double> radii{2 * h, 4 * h, 8 * h};
      const auto t = doubling_audit(f, c, radii);
      ok = ok && !t.rows.empty() && t.c_d <= 5.0;
      notes.push_back("C_D " + g3(t.c_d));
    }
    // a = 0 against unweighted, every preset, on the extended frame.
    bool same = true;
    for (const auto& p : presets) {
      const Grid& g = p.frame.grid();
      double h = 0.0;
      for (int a = 0; a < g.ndim(); ++a) h = std::max(h, g.spacing(a));
      const int nz = 2 * static_cast<int>(std::ceil(4.0)) + 3;
      const auto ext = p.frame.extended(nz, h);
      const auto w = WeightedMeasure::on_extended(ext.grid(), 0.0);
      const std::vector<std::size_t> c{center_of(g) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(nz / 2)};
      const std::vector<double> radii{h, 2 * h};
      const auto plain = doubling_audit(ext, c, radii), weighted = doubling_audit(ext, c, radii, &w);
      same = same && plain.rows.size() == weighted.rows.size();
      for (std::size_t i = 0; same && i < plain.rows.size(); ++i) same = plain.rows[i].ratio == weighted.rows[i].weighted_ratio;
      same = same && poincare_constant(ext, c[0], 2 * h).constant == poincare_constant(ext, c[0], 2 * h, &w).constant;
    }
    ok = ok && same;
    notes.push_back(std::string("a=0 weighted == unweighted ") + (same ? "bit-for-bit" : "NO"));
    const std::vector<std::pair<double, double>> iv{{0.0, 0.5}, {0.0, 1.0}, {0.0, 2.0}};
    const double a2 = a2_characteristic(0.0, iv);
    ok = ok && a2 == 1.0;
    notes.push_back("A2(a=0) " + fmt_num(a2));
    // Weighted Poincare on grushin, off the singular axis, 16 -> 32 nodes at a fixed radius.
    double worst = 0.0;
    for (double a : {0.0, 0.5, -0.5}) {
      std::vector<double> cp;
      for (int n : {16, 32}) {
        const auto f = grushin(n);
        const double h = f.grid().spacing(0);
        const double r = 2 * 2 * 3.141592653589793 / 16;
        const int nz = 2 * static_cast<int>(std::ceil(2 * r / h)) + 3;
        const auto ext = f.extended(nz, h);
        const auto w = WeightedMeasure::on_extended(ext.grid(), a);
        std::vector<int> idx{n / 2 + n / 4, n / 2};
        const std::size_t c = f.grid().flat_index(idx) * static_cast<std::size_t>(nz) + static_cast<std::size_t>(nz / 2);
        const auto pr = poincare_constant(ext, c, r, &w);
        ok = ok && pr.resolved && !pr.degenerate && std::isfinite(pr.constant);
        cp.push_back(pr.constant);
      }
      worst = std::max(worst, std::abs(cp[1] / cp[0] - 1.0));
    }
    ok = ok && worst <= 0.2;
    notes.push_back("grushin weighted Poincare refinement change " + g3(worst) + " (<= 0.2)");
    std::string d;
    for (const auto& n : notes) d += (d.empty() ? "" : "; ") + n;
    return Outcome{ok, d};
  });

  report(10, [&] {
    const fs::path root = fs::temp_directory_path() / "fraclab_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "field.csv") << "1\n0\n2\n0\n1\n3\n0\n1\n";
    const json cfg = {
        {"generators", {{{"preset", "euclidean"}, {"dim", 1}, {"nodes", 8}}, {{"preset", "grushin"}, {"nodes", 8}}}},
        {"s_values", {0.5}},
        {"time", {{"period", 6.283185307179586}, {"samples", 8}}},
        {"battery", 4},
        {"scan", {{"time_samples", 16}, {"r0_spacings", 1.0}, {"radii", 2}}},
        {"geometry", {{"radii_spacings", {1.0, 2.0}}}},
        {"frac_apply", {{"input", (root / "field.csv").string()}}}};
    std::ofstream(root / "config.json") << cfg.dump(2);
    json c2 = cfg;
    c2["generators"] = {{{"preset", "euclidean"}, {"dim", 1}, {"nodes", 8}}};
    std::ofstream(root / "frac.json") << c2.dump(2);

    int compared = 0;
    bool same = true;
    for (const auto& cmd : command_names()) {
      const fs::path conf = root / (cmd == "frac-apply" ? "frac.json" : "config.json");
      for (const char* run : {"a", "b"}) {
        setenv("FRACLAB_OUTPUT_ROOT", (root / run).c_str(), 1);
        std::ostringstream o, e;
        execute(cmd, conf, o, e);
      }
    }
    unsetenv("FRACLAB_OUTPUT_ROOT");
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
      if (!entry.is_regular_file() || entry.path().filename() == "timings.json") continue;
      const auto rel = fs::relative(entry.path(), root / "a");
      same = same && fs::exists(root / "b" / rel) && slurp(entry.path()) == slurp(root / "b" / rel);
      ++compared;
    }
    fs::remove_all(root);
    return Outcome{same && compared > 6, std::to_string(compared) + " output files from all " +
                                             std::to_string(command_names().size()) + " commands byte-identical across reruns"};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
