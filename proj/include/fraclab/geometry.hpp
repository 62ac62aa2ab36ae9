#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/frame.hpp"

namespace fraclab {

// Edge of the energy graph: E(u) = sum_e conductance (u[a]-u[b])^2 approximates the integral of |Xu|^2 / cell volume.
struct Edge {
  std::size_t a;
  std::size_t b;
  double conductance;
};

// Axis edges with conductance sum_i cbar_ij^2 / h_j^2, cbar the coefficient averaged over the endpoints.
std::vector<Edge> energy_edges(const VectorFieldFrame& frame);

// |Xu|^2 = sum_i (X_i u)^2 with centred differences.
std::vector<double> carre_du_champ(const VectorFieldFrame& frame, std::span<const double> u);

enum class Stencil { Axis, AxisDiagonal };

struct MetricField {
  std::size_t source = 0;
  std::vector<double> dist;
  bool connected = true;
  // Smallest distance at which a ball can wrap around a periodic axis or touch a boundary.
  double saturation_radius = std::numeric_limits<double>::infinity();
};

MetricField control_distance(const VectorFieldFrame& frame, std::size_t source,
                             Stencil stencil = Stencil::AxisDiagonal);

// |z|^a cell-averaged over the dual cell of each node on an extended grid (last axis is z).
struct WeightedMeasure {
  double a = 0.0;
  std::vector<double> density;

  static WeightedMeasure on_extended(const Grid& extended, double a);
};

struct Ball {
  std::vector<std::size_t> nodes;  // ascending node index
  bool saturated = false;
};

Ball ball(const MetricField& metric, double r);
double volume(const Grid& grid, const Ball& b, const WeightedMeasure* weight = nullptr);

struct DoublingRow {
  std::size_t center;
  double r;
  double ratio;
  double weighted_ratio;  // NaN when no weight was supplied
};

struct DoublingTable {
  std::vector<DoublingRow> rows;
  int excluded = 0;
  double c_d = 0.0;
  double c_d_weighted = 0.0;
  double q() const;
};

DoublingTable doubling_audit(const VectorFieldFrame& frame, std::span<const std::size_t> centers,
                             std::span<const double> radii, const WeightedMeasure* weight = nullptr,
                             Stencil stencil = Stencil::AxisDiagonal);

struct PoincareResult {
  double constant = 0.0;
  std::size_t inner_nodes = 0;
  std::size_t outer_nodes = 0;
  bool resolved = false;
  bool degenerate = false;
};

PoincareResult poincare_constant(const VectorFieldFrame& frame, std::size_t center, double r,
                                 const WeightedMeasure* weight = nullptr,
                                 Stencil stencil = Stencil::AxisDiagonal);

// The Rayleigh quotient the Poincare constant maximises, for one candidate field.
double poincare_ratio(const VectorFieldFrame& frame, std::size_t center, double r,
                      std::span<const double> u, const WeightedMeasure* weight = nullptr,
                      Stencil stencil = Stencil::AxisDiagonal);

double a2_characteristic(double a, std::span<const std::pair<double, double>> intervals);

struct Cylinder {
  std::vector<std::size_t> nodes;  // indices on the extended grid
  double sigma1 = 0.0;
  double sigma2 = 0.0;
};

Cylinder cylinder(const VectorFieldFrame& base, const VectorFieldFrame& extended, std::size_t x,
                  int z_index, double r, Stencil stencil = Stencil::AxisDiagonal);

struct SobolevOptions {
  std::vector<double> kappas;  // empty: 1.05, 1.10, ... 10
  int scales = 4;
  double slope_tolerance = 0.05;
};

struct SobolevProbe {
  double kappa = 0.0;
  double constant = 0.0;
  bool capped = false;  // every candidate admissible
  std::vector<double> scales;
};

SobolevProbe sobolev_probe(const VectorFieldFrame& frame, std::size_t center, double r,
                           const WeightedMeasure* weight = nullptr, const SobolevOptions& opt = {},
                           Stencil stencil = Stencil::AxisDiagonal);

}  // namespace fraclab
