#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "fraclab/generator.hpp"
#include "fraclab/harnack.hpp"
#include "fraclab/quadrature.hpp"
#include "fraclab/spacetime.hpp"

namespace fraclab {

struct GeneratorSpec {
  std::string preset = "euclidean";
  int nodes = 64;
  int dim = 1;  // euclidean only

  std::string id() const;
  VectorFieldFrame frame() const;
  std::size_t node_count() const;
};

struct Tolerances {
  double oracle = 1e-6;
  double identities = 1e-8;
  double neumann = 1e-3;
  double weak_form = 1e-3;
  double slope_margin = 0.1;
  double energy_factor = 2.0;
  double stability = 10.0;
  double sign = 1e-10;
  double semigroup = 1e-12;
  double composition = 1e-10;
  double generator_slope = 0.1;
  double doubling = 5.0;  // euclidean(2) only
  double poincare_refinement = 0.2;
};

struct ScanConfig {
  std::vector<FamilyKind> families{FamilyKind::Constant, FamilyKind::CaloricTranslate,
                                   FamilyKind::EllipticDirichlet, FamilyKind::ParabolicDirichlet,
                                   FamilyKind::Extension};
  std::vector<std::size_t> centers;  // empty: the node nearest the grid centre
  double r0_spacings = 4.0;
  int radii = 3;
  int time_samples = 64;
  bool inject_negative = false;
};

struct GeometryConfig {
  std::vector<std::size_t> centers;  // empty: per-preset defaults
  std::vector<double> radii_spacings{2.0, 4.0, 8.0};
  std::vector<double> a_values{0.0, 0.5, -0.5};
  double poincare_spacings = 2.0;
  bool refine = true;
};

struct FracApplyConfig {
  std::string input;  // CSV, one row per node; one column (L) or N_t columns (H)
  std::string op = "L";
  std::string method = "balakrishnan";
  double s = 0.5;
};

struct ExperimentConfig {
  std::vector<GeneratorSpec> generators{GeneratorSpec{}};
  std::vector<double> s_values{0.25, 0.5, 0.75};
  TimeCircle time{};
  double z_min = 1e-3, z_extent = 2.0, z_ratio = 1.25;
  QuadratureScheme quadrature{};
  int max_refinements = 2;
  Tolerances tol{};
  std::uint64_t seed = 1;
  int battery = 20;
  double smoothing = 0.5;
  bool export_operator = false;
  std::size_t node_cap = kSpectralNodeCap;
  std::size_t space_time_cap = kSpaceTimeCap;
  ScanConfig scan{};
  GeometryConfig geometry{};
  FracApplyConfig frac{};
  std::string output_dir = "fraclab_out";

  nlohmann::json canonical;  // every field resolved, defaults included, output location excluded
  std::string digest;        // SHA-256 of canonical.dump() plus any input file bytes

  ZGrid zgrid() const { return ZGrid::geometric(z_min, z_extent, z_ratio); }
};

// Throws InputError on unknown keys, wrong types or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& bytes);

}  // namespace fraclab
