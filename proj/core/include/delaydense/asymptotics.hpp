#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "delaydense/dde.hpp"
#include "delaydense/density.hpp"

namespace delaydense {

/// Samples x_k = x(1 + k h_sample) of a single trajectory. The first
/// burn_in samples are kept but excluded from statistics.
struct TimeSeries {
  double h_sample = 1.0 / kDefaultMesh;
  std::size_t burn_in = 0;
  std::vector<double> values;

  std::span<const double> samples() const noexcept {
    return std::span<const double>(values).subspan(std::min(burn_in, values.size()));
  }
};

struct SeriesOptions {
  double h_sample = 0;  // 0 selects the integration step
  std::size_t n_samples = 0;
  std::size_t burn_in = 0;
  int n_mesh = kDefaultMesh;
};

/// Single-trajectory sampling; raises EquilibriumTrap when the last delay
/// interval is constant to 1e-10.
TimeSeries generate_series(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt);

/// Equal-width edges covering the finite values with a small margin.
std::vector<double> auto_edges(std::span<const double> values, std::size_t bins);

Density1D solution_histogram(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt,
                             std::span<const double> edges);

/// Counts over (x(t-1), x(t)) pairs; lag along columns, current along rows.
struct Histogram2D {
  std::vector<double> edges_lag;
  std::vector<double> edges_cur;
  std::vector<std::uint64_t> counts;  // row-major [cur][lag]
  std::uint64_t in_range = 0;
  std::uint64_t out_of_range = 0;

  std::size_t cols() const noexcept { return edges_lag.size() - 1; }
  std::size_t rows() const noexcept { return edges_cur.size() - 1; }
  std::uint64_t at(std::size_t row, std::size_t col) const { return counts[row * cols() + col]; }
  /// Density of x(t), summing over the lag axis.
  Density1D marginal_current() const;
  /// Density of x(t-1), summing over the current axis.
  Density1D marginal_lag() const;
};

struct PairSeries {
  std::vector<double> lag;
  std::vector<double> cur;
};

PairSeries generate_pairs(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt);

Histogram2D trace2d_histogram(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt,
                              std::span<const double> edges_lag, std::span<const double> edges_cur);
Histogram2D histogram2d(const PairSeries& pairs, std::span<const double> edges_lag,
                        std::span<const double> edges_cur);

/// Column-stochastic Ulam matrix; column j is the source bin.
struct TransitionMatrix {
  std::vector<double> edges;
  std::size_t r = 0;
  std::vector<double> p;  // row-major, p[i * r + j]
  std::vector<std::uint64_t> column_counts;

  double operator()(std::size_t i, std::size_t j) const { return p[i * r + j]; }
  std::vector<double> apply(std::span<const double> x) const;
  static TransitionMatrix from_dense(std::vector<std::vector<double>> rows);
};

TransitionMatrix ulam_matrix(const TimeSeries& series, std::span<const double> edges);

/// Occupation frequencies of the post-burn-in samples on the partition.
std::vector<double> occupation_histogram(const TimeSeries& series, std::span<const double> edges);

double l1_norm_diff(std::span<const double> a, std::span<const double> b);

struct StationaryResult {
  std::vector<double> p;
  std::size_t iterations = 0;
  double residual = 0;  // |Pp - p|_1
  bool multiple_fixed_points = false;
};

/// Number of closed communicating classes of the chain.
std::size_t closed_classes(const TransitionMatrix& P);

/// Lazy power iteration p <- (p + Pp)/2 from the uniform vector; stops when
/// |Pp - p|_1 < tol.
StationaryResult stationary_vector(const TransitionMatrix& P, double tol = 1e-10, std::size_t max_iter = 1000000);

// Self-consistent transfer operator for x_{n+1} = (1 - alpha h) x_n + h F(x_{n-N}).

struct ScpfFeedback {
  double alpha = 0;
  std::function<double(double)> f;
  std::function<double(double)> fprime;
  /// Appends all s with f(s) = z; empty selects the numeric scan.
  std::function<void(double z, std::vector<double>& out)> inverse;
};

/// Registered feedback decompositions (tent: analytic branches; Mackey-Glass
/// and the toys: numeric branch scan). UnsupportedModel otherwise.
ScpfFeedback scpf_feedback(const DelaySystem& system);

/// Quadrature weights for n equally spaced nodes: composite Simpson (with a
/// closing 3/8 panel when the interval count is odd).
std::vector<double> simpson_weights(std::size_t n, double dx);

struct ScpfStep {
  Density1D u;
  double l1_change = 0;
  double mean = 0;
  double stddev = 0;
};

class ScpfOperator {
 public:
  /// Nodes are the midpoints of `bins` equal cells on [lo, hi].
  static ScpfOperator build(const ScpfFeedback& feedback, double h, double lo, double hi, std::size_t bins);

  std::size_t size() const noexcept { return m_; }
  double node(std::size_t i) const noexcept { return x1_ + static_cast<double>(i) * dx_; }
  double dx() const noexcept { return dx_; }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  Density1D make_density(std::vector<double> values) const;

  /// v_k = v((k + 1 - M) dx), k = 0..2M-2.
  std::vector<double> tabulate_v(std::span<const double> u) const;
  /// w_j = w(x_j).
  std::vector<double> tabulate_w(std::span<const double> u) const;

  /// Unnormalized quadrature (Qu)_i by FFT or by direct summation.
  std::vector<double> convolve_fft(std::span<const double> u) const;
  std::vector<double> convolve_direct(std::span<const double> u) const;

  Density1D apply(const Density1D& u) const;
  Density1D apply_direct(const Density1D& u) const;
  std::vector<ScpfStep> iterate(const Density1D& u0, std::size_t n_iter) const;

 private:
  struct Preimage {
    double s;
    double scale;  // 1 / (h |f'(s)|)
  };
  struct FftPlan;

  void check_grid(const Density1D& u) const;
  double interp(std::span<const double> u, double x) const noexcept;

  double h_ = 0, alpha_ = 0, a_ = 1;
  double x1_ = 0, dx_ = 0;
  std::size_t m_ = 0;
  std::vector<double> edges_;
  std::vector<double> weights_;
  std::vector<std::vector<Preimage>> preimages_;
  std::shared_ptr<FftPlan> fft_;
};

}  // namespace delaydense
