#include "fraclab/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fraclab/errors.hpp"

namespace fraclab {

using nlohmann::json;

std::string GeneratorSpec::id() const {
  if (preset == "euclidean") return "euclidean" + std::to_string(dim) + "d_n" + std::to_string(nodes);
  return preset + "_n" + std::to_string(nodes);
}

VectorFieldFrame GeneratorSpec::frame() const { return fraclab::preset(preset, nodes, dim); }

std::size_t GeneratorSpec::node_count() const {
  const int d = preset == "euclidean" ? dim : preset == "grushin" ? 2 : 3;
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(nodes);
  return n;
}

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InputError("config: '" + name() + "' must be an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  template <class T>
  void get(const std::string& k, T& out) {
    if (!j_.contains(k)) return;
    used_.insert(k);
    try {
      const json& v = j_.at(k);
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw InputError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw InputError("");
        if constexpr (std::is_unsigned_v<T>)
          if (v.get<long long>() < 0) throw InputError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw InputError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw InputError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw InputError("config: '" + name() + "." + k + "' has the wrong type");
    }
  }

  Section sub(const std::string& k) {
    used_.insert(k);
    return Section(j_.at(k), path_.empty() ? k : path_ + "." + k);
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw InputError("config: unknown key '" + name() + "." + it.key() + "'");
  }

 private:
  std::string name() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class T>
std::vector<T> read_list(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw InputError("config: '" + what + "' must be a nonempty array");
  std::vector<T> out;
  for (const auto& e : v) {
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw InputError("config: '" + what + "' must hold nonnegative integers");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!e.is_number()) throw InputError("config: '" + what + "' must hold numbers");
    } else {
      if (!e.is_string()) throw InputError("config: '" + what + "' must hold strings");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError("config: " + msg);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  Section root(j, "");

  if (root.has("generators")) {
    const json& gl = root.raw("generators");
    require(gl.is_array() && !gl.empty(), "'generators' must be a nonempty array");
    c.generators.clear();
    for (std::size_t i = 0; i < gl.size(); ++i) {
      Section g(gl[i], "generators[" + std::to_string(i) + "]");
      GeneratorSpec spec;
      g.get("preset", spec.preset);
      g.get("nodes", spec.nodes);
      g.get("dim", spec.dim);
      g.finish();
      require(spec.preset == "euclidean" || spec.preset == "grushin" || spec.preset == "heisenberg",
              "unknown preset '" + spec.preset + "'");
      require(spec.nodes >= 2, "generator nodes must be >= 2");
      require(spec.dim >= 1 && spec.dim <= 3, "euclidean dim must be 1, 2 or 3");
      if (spec.preset != "euclidean") spec.dim = spec.preset == "grushin" ? 2 : 3;
      c.generators.push_back(spec);
    }
  }
  if (root.has("s_values")) c.s_values = read_list<double>(root.raw("s_values"), "s_values");
  for (double s : c.s_values) require(s > 0.0 && s < 1.0, "s values must lie in (0, 1)");

  if (root.has("time")) {
    Section t = root.sub("time");
    t.get("period", c.time.period);
    t.get("samples", c.time.samples);
    t.finish();
  }
  c.time.validate();

  if (root.has("zgrid")) {
    Section z = root.sub("zgrid");
    z.get("z_min", c.z_min);
    z.get("extent", c.z_extent);
    z.get("ratio", c.z_ratio);
    z.finish();
  }
  (void)c.zgrid();  // validates

  if (root.has("quadrature")) {
    Section q = root.sub("quadrature");
    q.get("x0", c.quadrature.x0);
    q.get("panels", c.quadrature.panels);
    q.get("order", c.quadrature.order);
    q.get("series_order", c.quadrature.series_order);
    q.get("max_width", c.quadrature.max_width);
    q.get("max_refinements", c.max_refinements);
    q.finish();
  }
  c.quadrature.validate();
  require(c.max_refinements >= 0 && c.max_refinements <= 4, "max_refinements must lie in [0, 4]");

  if (root.has("tolerances")) {
    Section t = root.sub("tolerances");
    auto& x = c.tol;
    t.get("oracle", x.oracle);
    t.get("identities", x.identities);
    t.get("neumann", x.neumann);
    t.get("weak_form", x.weak_form);
    t.get("slope_margin", x.slope_margin);
    t.get("energy_factor", x.energy_factor);
    t.get("stability", x.stability);
    t.get("sign", x.sign);
    t.get("semigroup", x.semigroup);
    t.get("composition", x.composition);
    t.get("generator_slope", x.generator_slope);
    t.get("doubling", x.doubling);
    t.get("poincare_refinement", x.poincare_refinement);
    t.finish();
    for (double v : {x.oracle, x.identities, x.neumann, x.weak_form, x.slope_margin, x.sign, x.semigroup,
                     x.composition, x.generator_slope, x.poincare_refinement})
      require(v >= 0.0 && std::isfinite(v), "tolerances must be finite and nonnegative");
    require(x.energy_factor >= 1.0 && x.stability >= 1.0 && x.doubling >= 1.0, "ratio tolerances must be >= 1");
  }

  root.get("seed", c.seed);
  root.get("battery", c.battery);
  root.get("smoothing", c.smoothing);
  root.get("export_operator", c.export_operator);
  root.get("node_cap", c.node_cap);
  root.get("space_time_cap", c.space_time_cap);
  require(c.battery >= 1 && c.battery <= 1000, "battery must lie in [1, 1000]");
  require(c.smoothing >= 0.0 && std::isfinite(c.smoothing), "smoothing must be nonnegative");

  if (root.has("scan")) {
    Section s = root.sub("scan");
    if (s.has("families")) {
      c.scan.families.clear();
      for (const auto& f : read_list<std::string>(s.raw("families"), "scan.families"))
        c.scan.families.push_back(parse_family(f));
    }
    if (s.has("centers")) c.scan.centers = read_list<std::size_t>(s.raw("centers"), "scan.centers");
    s.get("r0_spacings", c.scan.r0_spacings);
    s.get("radii", c.scan.radii);
    s.get("time_samples", c.scan.time_samples);
    s.get("inject_negative", c.scan.inject_negative);
    s.finish();
    require(c.scan.r0_spacings > 0.0, "scan.r0_spacings must be positive");
    require(c.scan.radii >= 1 && c.scan.radii <= 8, "scan.radii must lie in [1, 8]");
    require(c.scan.time_samples >= 4 && (c.scan.time_samples & (c.scan.time_samples - 1)) == 0,
            "scan.time_samples must be a power of two >= 4");
  }

  if (root.has("geometry")) {
    Section g = root.sub("geometry");
    if (g.has("centers")) c.geometry.centers = read_list<std::size_t>(g.raw("centers"), "geometry.centers");
    if (g.has("radii_spacings"))
      c.geometry.radii_spacings = read_list<double>(g.raw("radii_spacings"), "geometry.radii_spacings");
    if (g.has("a_values")) c.geometry.a_values = read_list<double>(g.raw("a_values"), "geometry.a_values");
    g.get("poincare_spacings", c.geometry.poincare_spacings);
    g.get("refine", c.geometry.refine);
    g.finish();
    for (double r : c.geometry.radii_spacings) require(r > 0.0, "geometry radii must be positive");
    for (double a : c.geometry.a_values) require(a > -1.0 && a < 1.0, "geometry a values must lie in (-1, 1)");
    require(c.geometry.poincare_spacings > 0.0, "geometry.poincare_spacings must be positive");
  }

  std::string input_bytes;
  if (root.has("frac_apply")) {
    Section f = root.sub("frac_apply");
    f.get("input", c.frac.input);
    f.get("operator", c.frac.op);
    f.get("method", c.frac.method);
    f.get("s", c.frac.s);
    f.finish();
    require(c.frac.op == "L" || c.frac.op == "H", "frac_apply.operator must be 'L' or 'H'");
    require(c.frac.method == "spectral" || c.frac.method == "balakrishnan",
            "frac_apply.method must be 'spectral' or 'balakrishnan'");
    require(c.frac.s > 0.0 && c.frac.s < 1.0, "frac_apply.s must lie in (0, 1)");
    if (!c.frac.input.empty()) {
      std::filesystem::path p(c.frac.input);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.frac.input = p.string();
      std::ifstream in(p, std::ios::binary);
      if (!in) throw InputError("config: cannot read frac_apply.input '" + p.string() + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      input_bytes = ss.str();
    }
  }

  if (root.has("output")) {
    Section o = root.sub("output");
    o.get("directory", c.output_dir);
    o.finish();
  }
  root.finish();

  // Canonical form: every resolved value; the output location is excluded on purpose.
  json k;
  k["generators"] = json::array();
  for (const auto& g : c.generators) k["generators"].push_back({{"preset", g.preset}, {"nodes", g.nodes}, {"dim", g.dim}});
  k["s_values"] = c.s_values;
  k["time"] = {{"period", c.time.period}, {"samples", c.time.samples}};
  k["zgrid"] = {{"z_min", c.z_min}, {"extent", c.z_extent}, {"ratio", c.z_ratio}};
  k["quadrature"] = {{"x0", c.quadrature.x0},
                     {"panels", c.quadrature.panels},
                     {"order", c.quadrature.order},
                     {"series_order", c.quadrature.series_order},
                     {"max_width", c.quadrature.max_width},
                     {"max_refinements", c.max_refinements}};
  const auto& x = c.tol;
  k["tolerances"] = {{"oracle", x.oracle},
                     {"identities", x.identities},
                     {"neumann", x.neumann},
                     {"weak_form", x.weak_form},
                     {"slope_margin", x.slope_margin},
                     {"energy_factor", x.energy_factor},
                     {"stability", x.stability},
                     {"sign", x.sign},
                     {"semigroup", x.semigroup},
                     {"composition", x.composition},
                     {"generator_slope", x.generator_slope},
                     {"doubling", x.doubling},
                     {"poincare_refinement", x.poincare_refinement}};
  k["seed"] = c.seed;
  k["battery"] = c.battery;
  k["smoothing"] = c.smoothing;
  k["export_operator"] = c.export_operator;
  k["node_cap"] = c.node_cap;
  k["space_time_cap"] = c.space_time_cap;
  json fams = json::array();
  for (auto f : c.scan.families) fams.push_back(family_name(f));
  k["scan"] = {{"families", fams},
               {"centers", c.scan.centers},
               {"r0_spacings", c.scan.r0_spacings},
               {"radii", c.scan.radii},
               {"time_samples", c.scan.time_samples},
               {"inject_negative", c.scan.inject_negative}};
  k["geometry"] = {{"centers", c.geometry.centers},
                   {"radii_spacings", c.geometry.radii_spacings},
                   {"a_values", c.geometry.a_values},
                   {"poincare_spacings", c.geometry.poincare_spacings},
                   {"refine", c.geometry.refine}};
  k["frac_apply"] = {{"input_sha256", input_bytes.empty() ? "" : sha256_hex(input_bytes)},
                     {"operator", c.frac.op},
                     {"method", c.frac.method},
                     {"s", c.frac.s}};
  c.canonical = k;
  c.digest = sha256_hex(k.dump());
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace fraclab
