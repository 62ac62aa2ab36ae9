#include "fraclab/commands.hpp"

#include <chrono>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "fraclab/errors.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/fractional.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/harnack.hpp"

namespace fraclab {

using nlohmann::json;

namespace {

const char* status_of(bool report_only, bool ok) { return report_only ? "report-only" : ok ? "pass" : "fail"; }

// Collects (check, value, tolerance, status) rows and the overall verdict.
struct Checks {
  CsvTable table;
  bool ok = true;
  bool any_asserted = false;

  explicit Checks(std::vector<std::string> key_cols) : table(with_tail(std::move(key_cols))) {}

  static std::vector<std::string> with_tail(std::vector<std::string> h) {
    for (const char* c : {"check", "value", "tolerance", "status"}) h.push_back(c);
    return h;
  }

  // Asserted row; passes when `pass` holds.
  json add(std::vector<std::string> keys, const std::string& check, double value, double tol, bool pass) {
    any_asserted = true;
    ok = ok && pass;
    return push(std::move(keys), check, value, fmt_num(tol), status_of(false, pass));
  }
  json report(std::vector<std::string> keys, const std::string& check, double value) {
    return push(std::move(keys), check, value, "", "report-only");
  }

 private:
  json push(std::vector<std::string> keys, const std::string& check, double value, const std::string& tol,
            const char* status) {
    keys.push_back(check);
    keys.push_back(fmt_num(value));
    keys.push_back(tol);
    keys.push_back(status);
    table.row(std::move(keys));
    return json{{"value", std::isfinite(value) ? json(value) : json(fmt_num(value))}, {"status", status}};
  }
};

std::string verdict(const Checks& c) { return !c.any_asserted ? "report-only" : c.ok ? "pass" : "fail"; }

json jnum(double v) { return std::isfinite(v) ? json(v) : json(fmt_num(v)); }

std::string s_tag(double s) { return fmt_num(s); }

void check_caps(const ExperimentConfig& cfg) {
  for (const auto& g : cfg.generators)
    if (g.node_count() > cfg.node_cap)
      throw CapacityError("generator " + g.id() + " has " + std::to_string(g.node_count()) + " nodes, cap is " +
                          std::to_string(cfg.node_cap));
}

SpectralDecomposition decompose(const ExperimentConfig& cfg, const VectorFieldFrame& frame) {
  return spectral_decompose(assemble(frame), cfg.node_cap);
}

std::size_t grid_center(const Grid& g) {
  std::vector<int> idx(static_cast<std::size_t>(g.ndim()));
  for (int a = 0; a < g.ndim(); ++a) idx[static_cast<std::size_t>(a)] = g.dim(a) / 2;
  return g.flat_index(idx);
}

double max_spacing(const Grid& g) {
  double h = 0.0;
  for (int a = 0; a < g.ndim(); ++a) h = std::max(h, g.spacing(a));
  return h;
}

std::uint64_t field_seed(std::uint64_t seed, std::size_t gen, std::size_t i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(gen), static_cast<std::uint32_t>(i)};
  std::uint32_t p[2];
  seq.generate(p, p + 2);
  return (static_cast<std::uint64_t>(p[0]) << 32) | p[1];
}

OutputFile json_file(const std::string& path, const json& j) { return {path, j.dump(2) + "\n"}; }

}  // namespace

CommandResult cmd_spectrum(const ExperimentConfig& cfg) {
  check_caps(cfg);
  CommandResult res{"spectrum", "pass", {}, json::object()};
  Checks checks({"generator"});
  for (const auto& g : cfg.generators) {
    const auto frame = g.frame();
    const SubLaplacian L = assemble(frame);
    const auto dec = spectral_decompose(L, cfg.node_cap);
    CsvTable t({"k", "lambda"});
    for (Eigen::Index k = 0; k < dec.eigenvalues().size(); ++k)
      t.row({std::to_string(k), fmt_num(dec.eigenvalues()[k])});
    res.files.push_back({"spectrum/" + g.id() + ".csv", t.str(cfg.digest)});
    if (cfg.export_operator) res.files.push_back({"spectrum/" + g.id() + "_operator.coo.txt", coo_text(L.matrix)});

    const auto sg = semigroup_axioms_check(dec, field_seed(cfg.seed, 0, 0));
    const auto& tol = cfg.tol;
    const std::string id = g.id();
    json j;
    j["nodes"] = dec.size();
    j["zero_multiplicity"] = dec.zero_multiplicity();
    j["min_positive"] = dec.min_positive();
    j["max"] = dec.eigenvalues().maxCoeff();
    j["reconstruction_residual"] = checks.add({id}, "reconstruction_residual", dec.reconstruction_residual, 1e-10,
                                              dec.reconstruction_residual <= 1e-10);
    j["orthonormality_residual"] = checks.add({id}, "orthonormality_residual", dec.orthonormality_residual, 1e-10,
                                              dec.orthonormality_residual <= 1e-10);
    j["identity_defect"] =
        checks.add({id}, "heat_identity_defect", sg.identity_defect, 0.0, sg.identity_defect == 0.0);
    j["stochastic_defect"] = checks.add({id}, "stochastic_completeness_defect", sg.stochastic_defect, tol.semigroup,
                                        sg.stochastic_defect <= tol.semigroup);
    j["symmetry_defect"] =
        checks.add({id}, "symmetry_defect", sg.symmetry_defect, tol.semigroup, sg.symmetry_defect <= tol.semigroup);
    j["composition_defect"] = checks.add({id}, "composition_defect", sg.composition_defect, tol.composition,
                                         sg.composition_defect <= tol.composition);
    j["contraction_max"] = checks.add({id}, "contraction_max", sg.contraction_max, 1.0, sg.contraction_max <= 1.0 + 1e-12);
    j["generator_slope"] = checks.add({id}, "generator_limit_slope", sg.generator_slope, tol.generator_slope,
                                      std::abs(sg.generator_slope - 1.0) <= tol.generator_slope);
    res.summary[id] = j;
  }
  res.files.push_back({"spectrum/checks.csv", checks.table.str(cfg.digest)});
  res.status = verdict(checks);
  res.summary["config_digest"] = cfg.digest;
  res.files.push_back(json_file("spectrum/spectrum.json", res.summary));
  return res;
}

CommandResult cmd_verify_identities(const ExperimentConfig& cfg) {
  CommandResult res{"verify-identities", "pass", {}, json::object()};
  const auto rows = special_identities_check(cfg.s_values, cfg.tol.identities);
  CsvTable t({"identity", "parameters", "value", "expected", "defect", "tolerance", "status"});
  json arr = json::array();
  bool ok = true;
  for (const auto& r : rows) {
    const char* st = status_of(r.report_only, r.pass());
    ok = ok && r.pass();
    t.row({r.identity, r.parameters, fmt_num(r.value), fmt_num(r.expected), fmt_num(r.defect),
           r.report_only ? "" : fmt_num(r.tolerance), st});
    arr.push_back({{"identity", r.identity},
                   {"parameters", r.parameters},
                   {"value", jnum(r.value)},
                   {"expected", jnum(r.expected)},
                   {"defect", jnum(r.defect)},
                   {"tolerance", r.tolerance},
                   {"status", st}});
  }
  res.status = ok ? "pass" : "fail";
  res.summary = {{"config_digest", cfg.digest}, {"rows", arr}, {"status", res.status}};
  res.files.push_back({"verify-identities/identities.csv", t.str(cfg.digest)});
  res.files.push_back(json_file("verify-identities/identities.json", res.summary));
  return res;
}

CommandResult cmd_extend_check(const ExperimentConfig& cfg) {
  check_caps(cfg);
  CommandResult res{"extend-check", "pass", {}, json::object()};
  Checks checks({"generator", "s"});
  const ZGrid zg = cfg.zgrid();
  const auto& tol = cfg.tol;
  for (std::size_t gi = 0; gi < cfg.generators.size(); ++gi) {
    const auto& g = cfg.generators[gi];
    const auto frame = g.frame();
    const auto dec = decompose(cfg, frame);
    const std::string id = g.id();

    std::vector<SpaceTimeField> battery, battery_t;
    for (int i = 0; i < cfg.battery; ++i) {
      battery.push_back(smooth_random_spacetime(dec, cfg.time, field_seed(cfg.seed, gi, static_cast<std::size_t>(i)),
                                                cfg.smoothing));
      battery_t.push_back(resample(battery.back(), 2 * cfg.time.samples));
    }
    const auto& u = battery.front();
    const SpaceTimeField one = SpaceTimeField::broadcast(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dec.size())), cfg.time);

    const std::size_t x = grid_center(frame.grid());
    const MetricField mx = control_distance(frame, x);
    const double r_weak = std::min(0.5 * mx.saturation_radius, 1.0);
    const double T = cfg.time.period;
    const auto family = default_test_family(frame, x, r_weak, zg.extent(), cfg.time.origin + 0.5 * T, 0.25 * T);
    WeakFormOptions wo;
    wo.t1 = cfg.time.origin + 0.25 * T;
    wo.t2 = cfg.time.origin + 0.75 * T;

    for (double s : cfg.s_values) {
      const std::vector<std::string> key{id, s_tag(s)};
      json j;
      const ExtensionField V = extend_parabolic(dec, s, u, zg);
      const TraceReport tr = trace_rate(dec, V);
      CsvTable tt({"z", "error"});
      for (std::size_t i = 0; i < tr.z.size(); ++i) tt.row({fmt_num(tr.z[i]), fmt_num(tr.error[i])});
      res.files.push_back({"extend-check/trace_" + id + "_s" + s_tag(s) + ".csv", tt.str(cfg.digest)});
      j["trace_slope"] = checks.add(key, "trace_slope", tr.slope, 2 * s - tol.slope_margin,
                                    std::isfinite(tr.slope) && tr.slope >= 2 * s - tol.slope_margin);
      j["trace_prefactor"] = checks.add(key, "trace_prefactor", tr.prefactor, tr.bound,
                                        tr.prefactor <= tr.bound * (1.0 + 1e-6));

      const NeumannReport nr = neumann_limit(dec, V);
      j["neumann_defect"] = checks.add(key, "neumann_defect", nr.defect, tol.neumann, nr.defect <= tol.neumann);
      j["neumann_monotone"] = checks.report(key, "neumann_monotone", nr.monotone ? 1.0 : 0.0);
      if (s == 0.5) j["c_a"] = checks.add(key, "c_a", nr.c_a, 0.0, nr.c_a == 1.0);
      else j["c_a"] = checks.report(key, "c_a", nr.c_a);

      const auto e0 = energy_ratios(dec, s, battery, zg);
      const auto ez = energy_ratios(dec, s, battery, zg.refined());
      const auto et = energy_ratios(dec, s, battery_t, zg);
      const double m0 = *std::max_element(e0.begin(), e0.end());
      const double mz = *std::max_element(ez.begin(), ez.end());
      const double mt = *std::max_element(et.begin(), et.end());
      const double hi = std::max({m0, mz, mt}), lo = std::min({m0, mz, mt});
      const double factor = hi / lo;
      CsvTable et_tab({"field", "ratio", "ratio_z_refined", "ratio_t_refined"});
      for (std::size_t i = 0; i < e0.size(); ++i)
        et_tab.row({std::to_string(i), fmt_num(e0[i]), fmt_num(ez[i]), fmt_num(et[i])});
      res.files.push_back({"extend-check/energy_" + id + "_s" + s_tag(s) + ".csv", et_tab.str(cfg.digest)});
      j["energy_max"] = checks.report(key, "energy_ratio_max", m0);
      j["energy_max_z_refined"] = checks.report(key, "energy_ratio_max_z_refined", mz);
      j["energy_max_t_refined"] = checks.report(key, "energy_ratio_max_t_refined", mt);
      j["energy_refinement_factor"] = checks.add(key, "energy_refinement_factor", factor, tol.energy_factor,
                                                 std::isfinite(hi) && lo > 0.0 && factor < tol.energy_factor);

      const double weak = weak_form_residual(dec, frame, V, neumann_datum(dec, s, V.source()), family, wo);
      j["weak_form_defect"] = checks.add(key, "weak_form_defect", weak, tol.weak_form, weak <= tol.weak_form);
      double strong = 0.0;
      for (double r : pde_residual_strong(dec, V).residual) strong = std::max(strong, r);
      j["strong_residual_max"] = checks.report(key, "strong_residual_max", strong);

      ExtensionOptions lean;
      const ExtensionField C = extend_parabolic(dec, s, one, zg, lean);
      double cerr = 0.0;
      for (std::size_t l = 0; l < zg.size(); ++l)
        cerr = std::max(cerr, (C.values(dec, l) - one.values()).cwiseAbs().maxCoeff());
      const NeumannReport cn = neumann_limit(dec, C);
      j["constant_trace_error"] = checks.add(key, "constant_trace_error", cerr, 1e-12, cerr <= 1e-12);
      // Zero up to the rounding left by projecting 1 onto the eigenbasis.
      const double cflux = cn.limit.norm() / C.source().coefficients().norm();
      j["constant_neumann"] = checks.add(key, "constant_neumann_datum", cflux, 1e-12, cflux <= 1e-12);
      res.summary[id][s_tag(s)] = j;
    }
  }
  res.files.push_back({"extend-check/summary.csv", checks.table.str(cfg.digest)});
  res.status = verdict(checks);
  res.summary["config_digest"] = cfg.digest;
  res.files.push_back(json_file("extend-check/extension.json", res.summary));
  return res;
}

CommandResult cmd_harnack_scan(const ExperimentConfig& cfg) {
  check_caps(cfg);
  for (const auto& g : cfg.generators)
    if (g.node_count() * static_cast<std::size_t>(cfg.scan.time_samples) > cfg.space_time_cap)
      throw CapacityError("space-time grid of " + g.id() + " exceeds " + std::to_string(cfg.space_time_cap) +
                          " unknowns");
  CommandResult res{"harnack-scan", "pass", {}, json::object()};
  Checks checks({"generator", "s", "family"});
  CsvTable q({"generator", "s", "family", "center", "r", "sup", "inf", "quotient", "certificate_min",
              "certificate_residual"});
  for (const auto& g : cfg.generators) {
    const auto frame = g.frame();
    const auto dec = decompose(cfg, frame);
    const std::string id = g.id();
    std::vector<std::size_t> centers = cfg.scan.centers;
    if (centers.empty()) centers.push_back(grid_center(frame.grid()));
    std::vector<double> radii;
    for (int k = 0; k < cfg.scan.radii; ++k)
      radii.push_back(cfg.scan.r0_spacings * frame.grid().min_spacing() * std::ldexp(1.0, k));
    for (double s : cfg.s_values) {
      ScanOptions opt;
      opt.s = s;
      opt.seed = cfg.seed;
      opt.time_samples = cfg.scan.time_samples;
      opt.inject_negative = cfg.scan.inject_negative;
      opt.zgrid = cfg.zgrid();
      opt.space_time_cap = cfg.space_time_cap;
      const HarnackReport rep = scale_scan(dec, frame, cfg.scan.families, centers, radii, opt);
      for (const auto& row : rep.rows)
        q.row({id, s_tag(s), family_name(row.family), std::to_string(row.center), fmt_num(row.r), fmt_num(row.q.sup),
               fmt_num(row.q.inf), fmt_num(row.q.quotient), fmt_num(row.cert.min_value), fmt_num(row.cert.residual)});
      json js;
      for (const auto& [fam, sm] : rep.summary) {
        const std::string fn = family_name(fam);
        const std::vector<std::string> key{id, s_tag(s), fn};
        json f;
        if (fam == FamilyKind::Constant) {
          bool exact = true;
          for (const auto& row : rep.rows)
            if (row.family == fam) exact = exact && row.q.quotient == 1.0;
          f["all_quotients_one"] = checks.add(key, "all_quotients_one", exact ? 1.0 : 0.0, 0.0, exact);
        }
        f["max_quotient"] = checks.add(key, "max_quotient", sm.max_quotient, std::numeric_limits<double>::infinity(),
                                       !sm.any_infinite && std::isfinite(sm.max_quotient));
        f["stability_ratio"] = checks.add(key, "stability_ratio", sm.stability_ratio, cfg.tol.stability,
                                          sm.stability_ratio <= cfg.tol.stability);
        f["radii"] = sm.radii;
        js[fn] = f;
      }
      js["excluded"] = rep.excluded.size();
      res.summary[id][s_tag(s)] = js;
    }
  }
  res.summary["note"] =
      "The Harnack constant is universal but not quantified; acceptance is finiteness of every quotient, "
      "exact 1 for constants, and the dyadic scale-stability ratio.";
  res.files.push_back({"harnack-scan/quotients.csv", q.str(cfg.digest)});
  res.files.push_back({"harnack-scan/summary.csv", checks.table.str(cfg.digest)});
  res.status = verdict(checks);
  res.summary["config_digest"] = cfg.digest;
  res.files.push_back(json_file("harnack-scan/harnack.json", res.summary));
  return res;
}

namespace {

std::vector<std::size_t> geometry_centers(const ExperimentConfig& cfg, const GeneratorSpec& g, const Grid& grid) {
  if (!cfg.geometry.centers.empty()) {
    for (auto c : cfg.geometry.centers)
      if (c >= grid.size()) throw InputError("geometry centre " + std::to_string(c) + " outside grid");
    return cfg.geometry.centers;
  }
  const std::size_t mid = grid_center(grid);
  if (g.preset != "grushin") return {mid};
  // On the singular axis x = 0 and a quarter period off it.
  std::vector<int> off{grid.dim(0) / 2 + grid.dim(0) / 4, grid.dim(1) / 2};
  return {mid, grid.flat_index(off)};
}

}  // namespace

CommandResult cmd_geometry_audit(const ExperimentConfig& cfg) {
  check_caps(cfg);
  CommandResult res{"geometry-audit", "pass", {}, json::object()};
  // One table per (generator, audit), columns fixed to (center, r, metric, value).
  std::map<std::string, CsvTable> tables;
  bool ok = true, asserted = false;
  json out = json::object();
  auto put = [&](const std::string& id, const std::string& audit, std::size_t center, double r,
                 const std::string& metric, double value, int mode /*0 report, 1 pass, -1 fail*/) {
    const char* st = mode == 0 ? "report-only" : mode > 0 ? "pass" : "fail";
    if (mode != 0) asserted = true;
    if (mode < 0) ok = false;
    const std::string key = id + "_" + audit;
    tables.try_emplace(key, std::vector<std::string>{"center", "r", "metric", "value"});
    tables.at(key).row({std::to_string(center), fmt_num(r), metric, fmt_num(value)});
    out[audit][id].push_back({{"center", center}, {"r", jnum(r)}, {"metric", metric}, {"value", jnum(value)},
                              {"status", st}});
  };
  auto verdict_of = [](bool pass) { return pass ? 1 : -1; };

  for (const auto& g : cfg.generators) {
    const auto frame = g.frame();
    const Grid& grid = frame.grid();
    const std::string id = g.id();
    const double h = max_spacing(grid);
    const auto centers = geometry_centers(cfg, g, grid);
    std::vector<double> radii;
    for (double k : cfg.geometry.radii_spacings) radii.push_back(k * h);
    std::sort(radii.begin(), radii.end());

    // Base doubling.
    const DoublingTable dt = doubling_audit(frame, centers, radii);
    for (const auto& r : dt.rows) put(id, "doubling", r.center, r.r, "ratio", r.ratio, 0);
    const bool cd_asserted = g.preset == "euclidean" && g.dim == 2;
    if (!dt.rows.empty()) {
      put(id, "doubling", centers.front(), 0.0, "C_D", dt.c_d,
          cd_asserted ? verdict_of(dt.c_d <= cfg.tol.doubling) : verdict_of(std::isfinite(dt.c_d) && dt.c_d >= 1.0));
      put(id, "doubling", centers.front(), 0.0, "Q", dt.q(), 0);
    }
    put(id, "doubling", centers.front(), 0.0, "excluded", dt.excluded, 0);

    // Extended geometry with |z|^a weights; z extent covers the largest doubled ball.
    double rmax = 0.0;
    for (const auto& r : dt.rows) rmax = std::max(rmax, r.r);
    rmax = std::max({rmax, cfg.geometry.poincare_spacings * h, radii.front()});
    const int nz = 2 * static_cast<int>(std::ceil(2.0 * rmax / h)) + 3;
    const auto ext = frame.extended(nz, h);
    if (ext.grid().size() > (std::size_t{1} << 18))
      throw CapacityError("extended grid of " + id + " exceeds 262144 nodes");
    std::vector<std::size_t> ext_centers;
    for (auto c : centers) ext_centers.push_back(c * static_cast<std::size_t>(nz) + static_cast<std::size_t>(nz / 2));
    const DoublingTable plain = doubling_audit(ext, ext_centers, radii);
    const double rp = cfg.geometry.poincare_spacings * h;
    std::vector<PoincareResult> plain_p;
    for (auto c : ext_centers) plain_p.push_back(poincare_constant(ext, c, rp));
    for (double a : cfg.geometry.a_values) {
      const auto W = WeightedMeasure::on_extended(ext.grid(), a);
      const DoublingTable wt = doubling_audit(ext, ext_centers, radii, &W);
      const std::string tag = "[a=" + fmt_num(a) + "]";
      for (const auto& r : wt.rows) put(id, "weighted_doubling", r.center, r.r, "ratio" + tag, r.weighted_ratio, 0);
      put(id, "weighted_doubling", ext_centers.front(), 0.0, "C_D" + tag, wt.c_d_weighted,
          verdict_of(std::isfinite(wt.c_d_weighted) && wt.c_d_weighted >= 1.0));
      if (a == 0.0) {
        bool same = wt.rows.size() == plain.rows.size();
        for (std::size_t i = 0; same && i < wt.rows.size(); ++i) same = wt.rows[i].weighted_ratio == plain.rows[i].ratio;
        put(id, "weighted_doubling", ext_centers.front(), 0.0, "a0_equals_unweighted", same ? 1.0 : 0.0,
            verdict_of(same));
      }
      // Weighted Poincare on the extended ball.
      for (std::size_t ci = 0; ci < ext_centers.size(); ++ci) {
        const PoincareResult p = poincare_constant(ext, ext_centers[ci], rp, &W);
        const bool fine = !p.degenerate && std::isfinite(p.constant) && p.constant > 0.0;
        put(id, "poincare", ext_centers[ci], rp, "C_P" + tag, p.constant, verdict_of(fine));
        put(id, "poincare", ext_centers[ci], rp, "resolved" + tag, p.resolved ? 1.0 : 0.0, 0);
        if (a == 0.0) {
          const bool same = p.constant == plain_p[ci].constant;
          put(id, "poincare", ext_centers[ci], rp, "a0_equals_unweighted", same ? 1.0 : 0.0, verdict_of(same));
        }
      }
      // A2 characteristic on intervals (0, L).
      std::vector<std::pair<double, double>> iv;
      for (double L : {0.25, 0.5, 1.0, 2.0}) iv.push_back({0.0, L});
      const double a2 = a2_characteristic(a, iv);
      put(id, "a2", 0, 2.0, "A2" + tag, a2, a == 0.0 ? verdict_of(a2 == 1.0) : verdict_of(std::isfinite(a2) && a2 >= 1.0));
    }

    // Refinement study of the weighted Poincare constants at the same physical radius.
    if (cfg.geometry.refine) {
      GeneratorSpec fine_spec = g;
      fine_spec.nodes = 2 * g.nodes;
      const auto ffr = fine_spec.frame();
      const double hf = max_spacing(ffr.grid());
      const int nzf = 2 * nz - 1;
      if (fine_spec.node_count() * static_cast<std::size_t>(nzf) <= (std::size_t{1} << 18)) {
        const auto fext = ffr.extended(nzf, hf);
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
          std::vector<int> idx = grid.multi_index(centers[ci]);
          for (auto& v : idx) v *= 2;
          const std::size_t fc = ffr.grid().flat_index(idx) * static_cast<std::size_t>(nzf) + static_cast<std::size_t>(nzf / 2);
          for (double a : cfg.geometry.a_values) {
            const std::string tag = "[a=" + fmt_num(a) + "]";
            const auto Wc = WeightedMeasure::on_extended(ext.grid(), a);
            const auto Wf = WeightedMeasure::on_extended(fext.grid(), a);
            const PoincareResult pc = poincare_constant(ext, ext_centers[ci], rp, &Wc);
            const PoincareResult pf = poincare_constant(fext, fc, rp, &Wf);
            const double change = std::abs(pf.constant / pc.constant - 1.0);
            // Asserted on grushin, where the weight and the degenerate frame meet; elsewhere measured.
            const bool both = g.preset == "grushin" && pc.resolved && pf.resolved && !pc.degenerate && !pf.degenerate;
            put(id, "poincare_refinement", ext_centers[ci], rp, "relative_change" + tag, change,
                both ? verdict_of(change <= cfg.tol.poincare_refinement) : 0);
          }
        }
      } else {
        put(id, "poincare_refinement", centers.front(), rp, "skipped_capacity", 1.0, 0);
      }
    }

    // Cylinder comparability and the Sobolev probe (both measured, not asserted).
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      for (double r : radii) {
        if (2.0 * r > control_distance(frame, centers[ci]).saturation_radius) continue;
        const Cylinder cy = cylinder(frame, ext, centers[ci], nz / 2, r);
        put(id, "cylinder", centers[ci], r, "sigma1", cy.sigma1, 0);
        put(id, "cylinder", centers[ci], r, "sigma2", cy.sigma2, 0);
      }
      try {
        const SobolevProbe sp = sobolev_probe(frame, centers[ci], radii.back());
        put(id, "sobolev", centers[ci], radii.back(), "kappa", sp.kappa, 0);
        put(id, "sobolev", centers[ci], radii.back(), "constant", sp.constant, 0);
        put(id, "sobolev", centers[ci], radii.back(), "capped", sp.capped ? 1.0 : 0.0, 0);
      } catch (const InputError&) {
        put(id, "sobolev", centers[ci], radii.back(), "unresolved", 1.0, 0);
      }
    }
  }
  res.status = !asserted ? "report-only" : ok ? "pass" : "fail";
  out["config_digest"] = cfg.digest;
  res.summary = out;
  for (const auto& [key, t] : tables) res.files.push_back({"geometry-audit/" + key + ".csv", t.str(cfg.digest)});
  res.files.push_back(json_file("geometry-audit/geometry.json", out));
  return res;
}

CommandResult cmd_frac_apply(const ExperimentConfig& cfg) {
  if (cfg.frac.input.empty()) throw InputError("frac-apply needs frac_apply.input");
  check_caps(cfg);
  const auto& g = cfg.generators.front();
  const Eigen::MatrixXd f = read_field_csv(cfg.frac.input);
  if (static_cast<std::size_t>(f.rows()) != g.node_count())
    throw InputError("frac-apply: field has " + std::to_string(f.rows()) + " rows, generator has " +
                     std::to_string(g.node_count()) + " nodes");
  const bool parabolic = cfg.frac.op == "H";
  if (!parabolic && f.cols() != 1) throw InputError("frac-apply: operator L needs a single column");
  if (parabolic && f.cols() != cfg.time.samples)
    throw InputError("frac-apply: operator H needs one column per time sample");

  const auto dec = decompose(cfg, g.frame());
  BalakrishnanOptions bo;
  bo.scheme = cfg.quadrature;
  bo.tolerance = cfg.tol.oracle;
  bo.max_refinements = cfg.max_refinements;
  const double s = cfg.frac.s;
  const bool spectral = cfg.frac.method == "spectral";
  Eigen::MatrixXd out;
  if (parabolic) {
    const SpaceTimeField u(f, cfg.time);
    out = (spectral ? frac_H_spectral(dec, s, u) : frac_H_balakrishnan(dec, s, u, bo)).values();
  } else {
    const Eigen::VectorXd u = f.col(0);
    out = spectral ? frac_L_spectral(dec, s, u) : frac_L_balakrishnan(dec, s, u, bo);
  }

  CommandResult res{"frac-apply", "report-only", {}, json::object()};
  CsvTable t(parabolic ? std::vector<std::string>{"node", "t_index", "value"} : std::vector<std::string>{"node", "value"});
  for (Eigen::Index n = 0; n < out.rows(); ++n)
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (parabolic) t.row({std::to_string(n), std::to_string(j), fmt_num(out(n, j))});
      else t.row({std::to_string(n), fmt_num(out(n, j))});
    }
  res.summary = {{"shape", {out.rows(), out.cols()}},
                 {"dtype", "float64-le"},
                 {"order", "row-major"},
                 {"operator", cfg.frac.op},
                 {"method", cfg.frac.method},
                 {"s", s},
                 {"generator", g.id()},
                 {"quadrature_digest", cfg.quadrature.digest()},
                 {"config_digest", cfg.digest}};
  res.files.push_back({"frac-apply/result.csv", t.str(cfg.digest)});
  res.files.push_back({"frac-apply/result.bin", binary_dump(out)});
  res.files.push_back(json_file("frac-apply/result.json", res.summary));
  return res;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"spectrum",      "verify-identities", "extend-check",
                                              "harnack-scan",  "geometry-audit",    "frac-apply"};
  return names;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "spectrum") return cmd_spectrum(cfg);
  if (name == "verify-identities") return cmd_verify_identities(cfg);
  if (name == "extend-check") return cmd_extend_check(cfg);
  if (name == "harnack-scan") return cmd_harnack_scan(cfg);
  if (name == "geometry-audit") return cmd_geometry_audit(cfg);
  if (name == "frac-apply") return cmd_frac_apply(cfg);
  throw InputError("unknown command '" + name + "'");
}

std::filesystem::path output_root(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("FRACLAB_OUTPUT_ROOT"); env && *env) return env;
  return cfg.output_dir;
}

namespace {

json read_json_or(const std::filesystem::path& p, json fallback) {
  std::ifstream in(p);
  if (!in) return fallback;
  try {
    return json::parse(in);
  } catch (const json::parse_error&) {
    return fallback;
  }
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << bytes;
}

}  // namespace

void write_result(const std::filesystem::path& root, const ExperimentConfig& cfg, const CommandResult& res,
                  double seconds, const std::string& error) {
  std::filesystem::create_directories(root);
  for (const auto& f : res.files) write_bytes(root / f.path, f.bytes);

  // The manifest is deterministic; wall-clock times live next to it in timings.json.
  json m = read_json_or(root / "manifest.json", json::object());
  if (!m.is_object() || m.value("config_digest", "") != cfg.digest) m = json::object();
  m["config_digest"] = cfg.digest;
  m["seed"] = cfg.seed;
  m["config"] = cfg.canonical;
  json entry{{"status", res.status}};
  json files = json::array();
  for (const auto& f : res.files) files.push_back(f.path);
  entry["files"] = files;
  if (!error.empty()) entry["error"] = error;
  m["commands"][res.command] = entry;
  write_bytes(root / "manifest.json", m.dump(2) + "\n");

  json t = read_json_or(root / "timings.json", json::object());
  if (!t.is_object()) t = json::object();
  t[res.command] = seconds;
  write_bytes(root / "timings.json", t.dump(2) + "\n");
}

int execute(const std::string& command, const std::filesystem::path& config_path, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
      throw InputError("unknown command '" + command + "'");
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  const auto root = output_root(cfg);
  try {
    const CommandResult res = run_command(command, cfg);
    write_result(root, cfg, res, elapsed());
    out << command << ": " << res.status << " (digest " << cfg.digest.substr(0, 12) << ", " << res.files.size()
        << " files under " << root.string() << ")\n";
    return res.status == "fail" ? kExitFail : kExitPass;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const CapacityError& e) {
    err << "capacity exceeded: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const CertificateError& e) {
    CommandResult failed{command, "fail", {}, json::object()};
    write_result(root, cfg, failed, elapsed(), e.what());
    err << "certificate failure: " << e.what() << "\n";
    return kExitFail;
  } catch (const NumericalError& e) {
    CommandResult failed{command, "fail", {}, json::object()};
    write_result(root, cfg, failed, elapsed(), e.what());
    err << "numerical failure: " << e.what() << "\n";
    return kExitFail;
  }
}

}  // namespace fraclab
