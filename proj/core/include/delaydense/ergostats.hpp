#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "delaydense/dde.hpp"
#include "delaydense/transient.hpp"

namespace delaydense {

enum class TangentMode {
  /// Linearized Euler recursion; jumps of a piecewise-constant feedback act
  /// as impulses J w / |y'| where the lagged path crosses a threshold.
  Variational,
  /// Central differences of the time-one map, delta = rel_delta * |x|_sup.
  FiniteDifference,
};

struct LyapunovOptions {
  std::size_t k = 5;
  std::size_t renorm_every = 1;  // map steps between re-orthonormalizations
  std::size_t warmup = 10;       // map steps propagated before averaging starts
  std::uint64_t seed = 1;
  TangentMode mode = TangentMode::Variational;
  double fd_rel_delta = 1e-6;
};

struct LyapunovSpectrum {
  std::vector<double> exponents;  // bits per time unit, descending
  std::size_t renorm_every = 1;
  std::size_t steps = 0;  // map steps averaged over
};

/// Benettin spectrum along a sequence of phase points one delay apart
/// (a saddle run, possibly with small jumps between consecutive states).
LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, std::span<const HistoryVector> states,
                                   const LyapunovOptions& opt = {});
LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, const SaddleRun& run, const LyapunovOptions& opt = {});
/// Uses the windows of a path at whole delay offsets; the path step must be 1/N.
LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, const SolutionPath& path,
                                   const LyapunovOptions& opt = {});

/// Tangent image of each vector under one time-one map step at x.
std::vector<std::vector<double>> tangent_map(const DelaySystem& system, const HistoryVector& x,
                                             const std::vector<std::vector<double>>& vectors,
                                             TangentMode mode = TangentMode::Variational, double fd_rel_delta = 1e-6);

/// Modified Gram-Schmidt in place; returns the norms removed from each vector.
/// DegenerateTangent if a norm underflows or is not finite.
std::vector<double> gram_schmidt(std::vector<std::vector<double>>& vectors);

/// d = j + (sum_{i<=j} l_i) / |l_{j+1}|, j the largest index with a positive prefix sum.
double kaplan_yorke(std::span<const double> spectrum);

struct PointCloud {
  std::size_t dim = 1;
  std::vector<double> coords;  // row-major, dim values per point

  std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  const double* point(std::size_t i) const noexcept { return coords.data() + i * dim; }
  void push(std::span<const double> p);
};

/// Delay embedding of a path: point at t is (x(t + lags[0]), x(t + lags[1]), ...),
/// with t stepping by `stride` time units.
PointCloud delay_embed(const SolutionPath& path, std::span<const double> lags, double stride);

/// One point per state, sampled at the given offsets within the delay window (in [-1, 0]).
PointCloud embed_states(std::span<const HistoryVector> states, std::span<const double> offsets);

struct CorrelationOptions {
  std::size_t theiler = 10;  // pairs closer than this in index are skipped
  double slope_tolerance = 0.15;
};

struct CorrelationDimension {
  double dimension = 0;
  double intercept = 0;  // of log C = intercept + dimension log r (natural logs)
  std::vector<double> r, c;
  std::vector<double> local_slope;  // between r[i] and r[i+1]
  std::size_t fit_lo = 0, fit_hi = 0;  // r indices of the fit window, inclusive
  std::uint64_t pairs = 0;
};

/// Grassberger-Procaccia estimate over n_r log-spaced radii.
/// InsufficientPairs when no fit window with nonzero C(r) exists.
CorrelationDimension correlation_dimension(const PointCloud& cloud, double r_min, double r_max, std::size_t n_r,
                                           const CorrelationOptions& opt = {});

}  // namespace delaydense
