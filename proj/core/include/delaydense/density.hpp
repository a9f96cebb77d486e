#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "delaydense/dde.hpp"

namespace delaydense {

/// Piecewise-constant probability density on explicit bins.
struct Density1D {
  std::vector<double> edges;    // B+1 strictly increasing
  std::vector<double> density;  // B values, mass = density * width
  bool normalized = false;

  Density1D() = default;
  Density1D(std::vector<double> edges, std::vector<double> density, bool normalized = false);

  static Density1D uniform(double lo, double hi, std::size_t bins);
  /// Midpoint evaluation of f on the given edges.
  static Density1D from_function(std::vector<double> edges, const std::function<double(double)>& f);
  static Density1D from_masses(std::vector<double> edges, std::span<const double> masses);

  std::size_t bins() const noexcept { return density.size(); }
  double lo() const noexcept { return edges.front(); }
  double hi() const noexcept { return edges.back(); }
  double width(std::size_t i) const noexcept { return edges[i + 1] - edges[i]; }
  double mid(std::size_t i) const noexcept { return 0.5 * (edges[i] + edges[i + 1]); }
  double mass(std::size_t i) const noexcept { return density[i] * width(i); }
  std::vector<double> masses() const;
  double total_mass() const noexcept;

  /// Scales to unit mass; DomainError when the mass is zero.
  Density1D& normalize();
  /// Bin index containing x (half-open bins, last bin closed), or -1.
  std::ptrdiff_t locate(double x) const noexcept;
  double pdf(double x) const noexcept;
  double cdf(double x) const noexcept;
  /// Inverse CDF for u in (0, 1).
  double quantile(double u) const;
  double mean() const noexcept;
  double variance() const noexcept;
};

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

/// Exact mass transfer of a piecewise-constant density onto new edges.
Density1D rebin(const Density1D& rho, std::span<const double> edges);

/// sum_i |a_i - b_i| * width_i over bins whose extent lies inside [lo, hi].
/// Both densities must share edges.
double l1_distance(const Density1D& a, const Density1D& b);
double l1_distance(const Density1D& a, const Density1D& b, double lo, double hi);

/// Histogram of values normalized over the in-range count.
Density1D histogram(std::span<const double> values, std::span<const double> edges,
                    std::size_t* out_of_range = nullptr);

// Explicit transfer operators.

/// Point form of the quadratic-map transfer operator for x -> 4x(1-x).
double quadratic_map_pf_at(const Density1D& rho, double x);
/// Midpoint evaluation of the transfer operator followed by renormalization.
Density1D quadratic_map_pf(const Density1D& rho);
/// Invariant density of the quadratic map and its bin averages.
double quadratic_map_invariant_pdf(double x);
Density1D quadratic_map_invariant(std::span<const double> edges);

/// beta(t) for x' = alpha x(t-1) with constant initial functions.
double linear_beta(double alpha, double t);
/// Exact push-forward x -> beta x; edges are scaled accordingly.
Density1D explicit_pf_linear(const Density1D& rho0, double alpha, double t);

/// S_t(x) = x - (t-1) x^2 push-forward, as exact bin masses on out_edges.
Density1D explicit_pf_quadratic(const Density1D& rho0, double t, std::span<const double> out_edges);
/// Same, on automatically chosen edges spanning the image with rho0.bins() bins.
Density1D explicit_pf_quadratic(const Density1D& rho0, double t);
/// Pointwise two-branch formula.
double explicit_pf_quadratic_at(const Density1D& rho0, double t, double x);

// Ensembles.

struct EnsembleStats {
  std::size_t requested = 0;
  std::size_t dropped = 0;
  std::size_t out_of_range = 0;
};

/// x(t) for n_samples initial values drawn from rho0 by inverse CDF.
/// Samples that overflow are returned as NaN.
std::vector<double> ensemble_values(const DelaySystem& system, const Density1D& rho0, const FamilyKind& kind,
                                    double t, std::size_t n_samples, std::uint64_t seed, int n_mesh = kDefaultMesh);

Density1D sample_ensemble(const DelaySystem& system, const Density1D& rho0, const FamilyKind& kind, double t,
                          std::size_t n_samples, std::uint64_t seed, std::span<const double> edges,
                          int n_mesh = kDefaultMesh, EnsembleStats* stats = nullptr);

/// ceil(4(1-p)/(delta^2 p)).
std::uint64_t sampling_requirement(double p, double delta);

// Piecewise-linear approximation of the solution map.

struct PiecewiseLinearMap {
  std::vector<double> mesh_x;
  std::vector<double> mesh_y;
  double t = 0;

  PiecewiseLinearMap() = default;
  PiecewiseLinearMap(std::vector<double> x, std::vector<double> y, double t);
  double operator()(double x) const;
};

PiecewiseLinearMap build_pl_map(const DelaySystem& system, const FamilyKind& kind, std::span<const double> mesh_x,
                                double t, int n_mesh = kDefaultMesh);

struct PlPfOptions {
  /// Raise DegenerateSegment instead of depositing a flat segment's mass.
  bool strict = false;
};

/// Pre-image sum evaluated at the midpoints of eval_edges.
Density1D apply_pl_pf(const PiecewiseLinearMap& map, const Density1D& rho0, std::span<const double> eval_edges,
                      PlPfOptions options = {});

/// Exact bin masses of the push-forward of rho0 under the piecewise-linear map.
Density1D transport_pl_mass(const PiecewiseLinearMap& map, const Density1D& rho0, std::span<const double> out_edges,
                            double* lost_mass = nullptr);

// Density support curve.

struct SupportCurve {
  double t = 0;
  std::vector<double> s;       // source parameters x0
  std::vector<double> weight;  // rho0 mass carried by each node
  std::vector<std::vector<double>> points;  // y_n = x(t - n), n = 0..n_delays

  std::size_t size() const noexcept { return s.size(); }
  double y0(std::size_t i) const { return points[i][0]; }
  double y1(std::size_t i) const { return points[i].size() > 1 ? points[i][1] : points[i][0]; }
};

/// Integrates the modified method-of-steps field from the diagonal points
/// (s, ..., s). n_delays defaults to ceil(t_end).
SupportCurve track_support_curve(const DelaySystem& system, const FamilyKind& kind, std::span<const double> x0_samples,
                                 double t_end, int n_mesh = kDefaultMesh, int n_delays = -1,
                                 const Density1D* rho0 = nullptr);

/// Weighted histogram of the y0 coordinates.
Density1D support_curve_histogram(const SupportCurve& curve, std::span<const double> edges);

}  // namespace delaydense
