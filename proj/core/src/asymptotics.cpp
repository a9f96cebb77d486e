#include "delaydense/asymptotics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "delaydense/error.hpp"
#include "delaydense/format.hpp"

namespace delaydense {

namespace {

std::ptrdiff_t bin_of(std::span<const double> edges, double x) noexcept {
  if (!(x >= edges.front() && x <= edges.back())) return -1;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto i = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return std::min<std::ptrdiff_t>(i, static_cast<std::ptrdiff_t>(edges.size()) - 2);
}

std::size_t sample_stride(double h_sample, int n_mesh) {
  if (h_sample <= 0) return 1;
  double k = h_sample * n_mesh;
  double r = std::round(k);
  if (r < 1 || std::abs(k - r) > 1e-9 * std::max(1.0, r))
    throw Error(Errc::InvalidParam, "h_sample must be a positive multiple of the integration step 1/N");
  return static_cast<std::size_t>(r);
}

void check_series_options(const SeriesOptions& opt) {
  if (opt.n_samples == 0) throw Error(Errc::InvalidParam, "n_samples must be >= 1");
  if (!(opt.n_samples > opt.burn_in)) throw Error(Errc::InvalidParam, "n_samples must exceed burn_in");
}

void check_equilibrium(const Integrator& it) {
  double lo = it.back(0), hi = lo;
  for (std::size_t k = 1; k <= static_cast<std::size_t>(it.n_mesh()); ++k) {
    lo = std::min(lo, it.back(k));
    hi = std::max(hi, it.back(k));
  }
  if (hi - lo <= 1e-10)
    throw Error(Errc::EquilibriumTrap, "trajectory settled on the constant solution x=" + format_double(it.current()));
}

}  // namespace

TimeSeries generate_series(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt) {
  check_series_options(opt);
  const std::size_t stride = sample_stride(opt.h_sample, opt.n_mesh);
  TimeSeries series;
  series.h_sample = static_cast<double>(stride) / opt.n_mesh;
  series.burn_in = opt.burn_in;
  series.values.reserve(opt.n_samples);
  Integrator it(system, initial_history(family, opt.n_mesh));
  series.values.push_back(it.current());
  while (series.values.size() < opt.n_samples) {
    for (std::size_t s = 0; s < stride; ++s) it.step();
    series.values.push_back(it.current());
  }
  check_equilibrium(it);
  return series;
}

PairSeries generate_pairs(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt) {
  check_series_options(opt);
  const std::size_t stride = sample_stride(opt.h_sample, opt.n_mesh);
  PairSeries pairs;
  const std::size_t n = opt.n_samples - opt.burn_in;
  pairs.lag.reserve(n);
  pairs.cur.reserve(n);
  Integrator it(system, initial_history(family, opt.n_mesh));
  for (std::size_t k = 0; k < opt.n_samples; ++k) {
    if (k > 0)
      for (std::size_t s = 0; s < stride; ++s) it.step();
    if (k >= opt.burn_in) {
      pairs.lag.push_back(it.lagged());
      pairs.cur.push_back(it.current());
    }
  }
  check_equilibrium(it);
  return pairs;
}

std::vector<double> auto_edges(std::span<const double> values, std::size_t bins) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi)) throw Error(Errc::DomainError, "no finite values to bin");
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  return uniform_edges(lo, hi, bins);
}

Density1D solution_histogram(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt,
                             std::span<const double> edges) {
  TimeSeries series = generate_series(system, family, opt);
  if (edges.empty()) {
    std::vector<double> e = auto_edges(series.samples(), 100);
    return histogram(series.samples(), e);
  }
  return histogram(series.samples(), edges);
}

Histogram2D histogram2d(const PairSeries& pairs, std::span<const double> edges_lag,
                        std::span<const double> edges_cur) {
  Histogram2D out;
  out.edges_lag.assign(edges_lag.begin(), edges_lag.end());
  out.edges_cur.assign(edges_cur.begin(), edges_cur.end());
  if (out.edges_lag.size() < 2 || out.edges_cur.size() < 2) throw Error(Errc::InvalidParam, "2-D grid needs edges");
  out.counts.assign(out.rows() * out.cols(), 0);
  for (std::size_t k = 0; k < pairs.cur.size(); ++k) {
    auto c = bin_of(edges_lag, pairs.lag[k]);
    auto r = bin_of(edges_cur, pairs.cur[k]);
    if (c < 0 || r < 0) {
      ++out.out_of_range;
      continue;
    }
    ++out.counts[static_cast<std::size_t>(r) * out.cols() + static_cast<std::size_t>(c)];
    ++out.in_range;
  }
  return out;
}

Histogram2D trace2d_histogram(const DelaySystem& system, const InitialFamily& family, const SeriesOptions& opt,
                              std::span<const double> edges_lag, std::span<const double> edges_cur) {
  PairSeries pairs = generate_pairs(system, family, opt);
  if (edges_lag.empty() || edges_cur.empty()) {
    std::vector<double> all(pairs.lag);
    all.insert(all.end(), pairs.cur.begin(), pairs.cur.end());
    std::vector<double> e = auto_edges(all, 128);
    return histogram2d(pairs, e, e);
  }
  return histogram2d(pairs, edges_lag, edges_cur);
}

Density1D Histogram2D::marginal_current() const {
  std::vector<double> m(rows(), 0.0);
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c) m[r] += static_cast<double>(at(r, c));
  if (in_range > 0)
    for (double& v : m) v /= static_cast<double>(in_range);
  Density1D out = Density1D::from_masses(edges_cur, m);
  out.normalized = in_range > 0;
  return out;
}

Density1D Histogram2D::marginal_lag() const {
  std::vector<double> m(cols(), 0.0);
  for (std::size_t r = 0; r < rows(); ++r)
    for (std::size_t c = 0; c < cols(); ++c) m[c] += static_cast<double>(at(r, c));
  if (in_range > 0)
    for (double& v : m) v /= static_cast<double>(in_range);
  Density1D out = Density1D::from_masses(edges_lag, m);
  out.normalized = in_range > 0;
  return out;
}

std::vector<double> TransitionMatrix::apply(std::span<const double> x) const {
  std::vector<double> y(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < r; ++j) s += p[i * r + j] * x[j];
    y[i] = s;
  }
  return y;
}

TransitionMatrix TransitionMatrix::from_dense(std::vector<std::vector<double>> rows) {
  TransitionMatrix P;
  P.r = rows.size();
  P.p.resize(P.r * P.r);
  for (std::size_t i = 0; i < P.r; ++i) {
    if (rows[i].size() != P.r) throw Error(Errc::InvalidParam, "transition matrix must be square");
    for (std::size_t j = 0; j < P.r; ++j) P.p[i * P.r + j] = rows[i][j];
  }
  for (std::size_t j = 0; j < P.r; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < P.r; ++i) {
      if (P.p[i * P.r + j] < 0) throw Error(Errc::InvalidParam, "transition matrix entries must be >= 0");
      s += P.p[i * P.r + j];
    }
    if (std::abs(s - 1) > 1e-12) throw Error(Errc::InvalidParam, "transition matrix must be column-stochastic");
  }
  P.edges = uniform_edges(0, static_cast<double>(P.r), P.r);
  return P;
}

TransitionMatrix ulam_matrix(const TimeSeries& series, std::span<const double> edges) {
  auto s = series.samples();
  if (s.size() < 2) throw Error(Errc::InvalidParam, "Ulam matrix needs at least two samples");
  if (edges.size() < 2) throw Error(Errc::InvalidParam, "partition needs edges");
  TransitionMatrix P;
  P.edges.assign(edges.begin(), edges.end());
  P.r = edges.size() - 1;
  std::vector<std::size_t> bins(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    auto b = bin_of(edges, s[k]);
    if (b < 0) throw Error(Errc::DomainError, "sample " + std::to_string(k) + " lies outside the partition");
    bins[k] = static_cast<std::size_t>(b);
  }
  std::vector<std::uint64_t> t(P.r * P.r, 0);
  P.column_counts.assign(P.r, 0);
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    ++t[bins[k + 1] * P.r + bins[k]];
    ++P.column_counts[bins[k]];
  }
  for (std::size_t j = 0; j < P.r; ++j)
    if (P.column_counts[j] == 0)
      throw Error(Errc::EmptyBin, "bin " + std::to_string(j) + " has no outgoing transitions; coarsen the partition");
  P.p.resize(P.r * P.r);
  for (std::size_t i = 0; i < P.r; ++i)
    for (std::size_t j = 0; j < P.r; ++j)
      P.p[i * P.r + j] = static_cast<double>(t[i * P.r + j]) / static_cast<double>(P.column_counts[j]);
  return P;
}

std::vector<double> occupation_histogram(const TimeSeries& series, std::span<const double> edges) {
  auto s = series.samples();
  std::vector<double> h(edges.size() - 1, 0.0);
  for (double v : s) {
    auto b = bin_of(edges, v);
    if (b >= 0) h[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(s.size());
  return h;
}

double l1_norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

std::size_t closed_classes(const TransitionMatrix& P) {
  const std::size_t r = P.r;
  // Iterative Tarjan over edges j -> i where p_ij > 0.
  std::vector<std::vector<std::size_t>> adj(r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < r; ++i)
      if (P(i, j) > 0) adj[j].push_back(i);
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(r, kUnset), low(r, 0), comp(r, kUnset), stack;
  std::vector<bool> on_stack(r, false);
  std::size_t next = 0, n_comp = 0;
  for (std::size_t root = 0; root < r; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<std::pair<std::size_t, std::size_t>> call{{root, 0}};
    index[root] = low[root] = next++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, e] = call.back();
      if (e < adj[v].size()) {
        std::size_t w = adj[v][e++];
        if (index[w] == kUnset) {
          index[w] = low[w] = next++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = n_comp;
        } while (w != v);
        ++n_comp;
      }
      std::size_t done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  std::vector<bool> leaks(n_comp, false);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i : adj[j])
      if (comp[i] != comp[j]) leaks[comp[j]] = true;
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), false));
}

StationaryResult stationary_vector(const TransitionMatrix& P, double tol, std::size_t max_iter) {
  const std::size_t r = P.r;
  if (r == 0) throw Error(Errc::InvalidParam, "empty transition matrix");
  // Column-compressed nonzeros.
  std::vector<std::size_t> start(r + 1, 0), row;
  std::vector<double> val;
  for (std::size_t j = 0; j < r; ++j) {
    for (std::size_t i = 0; i < r; ++i)
      if (P(i, j) != 0) {
        row.push_back(i);
        val.push_back(P(i, j));
      }
    start[j + 1] = row.size();
  }
  StationaryResult res;
  res.multiple_fixed_points = closed_classes(P) > 1;
  res.p.assign(r, 1.0 / static_cast<double>(r));
  std::vector<double> q(r);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(q.begin(), q.end(), 0.0);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t k = start[j]; k < start[j + 1]; ++k) q[row[k]] += val[k] * res.p[j];
    res.residual = l1_norm_diff(q, res.p);
    res.iterations = it;
    if (res.residual < tol) return res;
    double sum = 0;
    for (std::size_t i = 0; i < r; ++i) {
      res.p[i] = 0.5 * (res.p[i] + q[i]);
      sum += res.p[i];
    }
    for (double& v : res.p) v /= sum;
  }
  throw Error(Errc::NoConvergence, "stationary vector did not converge in " + std::to_string(max_iter) +
                                       " iterations (residual " + format_double(res.residual) + ")");
}

ScpfFeedback scpf_feedback(const DelaySystem& system) {
  ScpfFeedback fb;
  switch (system.model()) {
    case ModelId::TentFeedback: {
      const double eps = system.param("epsilon");
      fb.alpha = 1.0 / eps;
      fb.f = [eps](double y) { return (1.0 - 1.9 * std::abs(y)) / eps; };
      fb.fprime = [eps](double y) { return (y > 0 ? -1.9 : 1.9) / eps; };
      fb.inverse = [eps](double z, std::vector<double>& out) {
        double m = (1.0 - eps * z) / 1.9;
        if (m > 0) {
          out.push_back(-m);
          out.push_back(m);
        } else if (m == 0) {
          out.push_back(0.0);
        }
      };
      return fb;
    }
    case ModelId::MackeyGlass:
    case ModelId::LinearToy:
    case ModelId::QuadraticToy: {
      fb.alpha = system.decay_rate();
      fb.f = [system](double y) { return system.feedback(y); };
      fb.fprime = [system](double y) { return system.feedback_slope(y); };
      return fb;
    }
    default:
      throw Error(Errc::UnsupportedModel, std::string(model_name(system.model())) +
                                              " has no registered branch inverses for the self-consistent operator");
  }
}

std::vector<double> simpson_weights(std::size_t n, double dx) {
  if (n < 2) throw Error(Errc::InvalidParam, "quadrature needs >= 2 nodes");
  std::vector<double> w(n, 0.0);
  if (n == 2) {
    w[0] = w[1] = dx / 2;
    return w;
  }
  std::size_t simpson_nodes = (n % 2 == 1) ? n : n - 3;
  if (simpson_nodes >= 3) {
    for (std::size_t i = 0; i < simpson_nodes; ++i) {
      double c = (i == 0 || i + 1 == simpson_nodes) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      w[i] += c * dx / 3.0;
    }
  }
  if (n % 2 == 0) {
    // Closing 3/8 panel on the last four nodes.
    std::size_t b = n - 4;
    static constexpr double c38[] = {1, 3, 3, 1};
    for (std::size_t k = 0; k < 4; ++k) w[b + k] += c38[k] * 3.0 * dx / 8.0;
  }
  return w;
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct ScpfOperator::FftPlan {
  std::size_t len = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit FftPlan(std::size_t n) : len(n) {
    std::lock_guard lock(planner_mutex());
    auto* in = fftw_alloc_real(n);
    auto* out = fftw_alloc_complex(n / 2 + 1);
    // FFTW_ESTIMATE keeps the chosen algorithm, and therefore the rounding, reproducible.
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), out, in, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
};

namespace {

std::size_t fast_length(std::size_t n) {
  for (std::size_t m = n;; ++m) {
    std::size_t k = m;
    for (std::size_t p : {2, 3, 5}) while (k % p == 0) k /= p;
    if (k == 1) return m;
  }
}

std::vector<std::pair<double, double>> monotone_segments(const std::function<double(double)>& f, double lo,
                                                         double hi) {
  constexpr std::size_t kScan = 10000;
  std::vector<std::pair<double, double>> segs;
  double seg_start = lo;
  int prev_sign = 0;
  double prev_s = lo, prev_f = f(lo);
  for (std::size_t k = 1; k <= kScan; ++k) {
    double s = lo + (hi - lo) * static_cast<double>(k) / kScan;
    double fs = f(s);
    int sign = fs > prev_f ? 1 : (fs < prev_f ? -1 : 0);
    if (sign != 0) {
      if (prev_sign != 0 && sign != prev_sign) {
        segs.emplace_back(seg_start, prev_s);
        seg_start = prev_s;
      }
      prev_sign = sign;
    }
    prev_s = s;
    prev_f = fs;
  }
  segs.emplace_back(seg_start, hi);
  return segs;
}

}  // namespace

ScpfOperator ScpfOperator::build(const ScpfFeedback& feedback, double h, double lo, double hi, std::size_t bins) {
  if (!(h > 0)) throw Error(Errc::InvalidParam, "h must be > 0");
  if (!(hi > lo)) throw Error(Errc::InvalidParam, "grid needs lo < hi");
  if (bins < 3) throw Error(Errc::InvalidParam, "grid needs >= 3 nodes");
  if (!feedback.f) throw Error(Errc::UnsupportedModel, "feedback function missing");
  ScpfOperator op;
  op.h_ = h;
  op.alpha_ = feedback.alpha;
  op.a_ = 1.0 - feedback.alpha * h;
  if (std::abs(op.a_) < 1e-12) throw Error(Errc::InvalidParam, "1 - alpha h must be nonzero");
  op.m_ = bins;
  op.edges_ = uniform_edges(lo, hi, bins);
  op.dx_ = (hi - lo) / static_cast<double>(bins);
  op.x1_ = lo + 0.5 * op.dx_;
  op.weights_ = simpson_weights(bins, op.dx_);

  std::vector<std::pair<double, double>> segs;
  if (!feedback.inverse) segs = monotone_segments(feedback.f, op.node(0), op.node(bins - 1));

  op.preimages_.resize(bins);
  std::vector<double> roots;
  for (std::size_t j = 0; j < bins; ++j) {
    const double z = op.node(j) / h;
    roots.clear();
    if (feedback.inverse) {
      feedback.inverse(z, roots);
    } else {
      for (std::size_t k = 0; k < segs.size(); ++k) {
        auto [a, b] = segs[k];
        double fa = feedback.f(a) - z, fb = feedback.f(b) - z;
        // Half-open at the right end so shared extrema are counted once.
        bool last = k + 1 == segs.size();
        if (fa == 0) {
          roots.push_back(a);
          continue;
        }
        if (fb == 0 && last) {
          roots.push_back(b);
          continue;
        }
        if ((fa < 0) == (fb < 0) || fb == 0) continue;
        for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
          double m = 0.5 * (a + b), fm = feedback.f(m) - z;
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
    }
    for (double s : roots) {
      double d = std::abs(feedback.fprime(s));
      if (d < 1e-12) continue;
      op.preimages_[j].push_back({s, 1.0 / (h * d)});
    }
  }
  op.fft_ = std::make_shared<FftPlan>(fast_length(3 * bins - 2));
  return op;
}

Density1D ScpfOperator::make_density(std::vector<double> values) const {
  for (double& v : values) v = std::max(0.0, v);
  return Density1D(edges_, std::move(values));
}

double ScpfOperator::interp(std::span<const double> u, double x) const noexcept {
  double t = (x - x1_) / dx_;
  if (!(t >= 0 && t <= static_cast<double>(m_ - 1))) return 0.0;
  auto k = static_cast<std::size_t>(t);
  if (k + 1 >= m_) return u[m_ - 1];
  double frac = t - static_cast<double>(k);
  return u[k] + frac * (u[k + 1] - u[k]);
}

std::vector<double> ScpfOperator::tabulate_v(std::span<const double> u) const {
  std::vector<double> v(2 * m_ - 1);
  const double inv = 1.0 / std::abs(a_);
  for (std::size_t k = 0; k < v.size(); ++k) {
    double y = (static_cast<double>(k) + 1.0 - static_cast<double>(m_)) * dx_;
    v[k] = inv * interp(u, y / a_);
  }
  return v;
}

std::vector<double> ScpfOperator::tabulate_w(std::span<const double> u) const {
  std::vector<double> w(m_, 0.0);
  for (std::size_t j = 0; j < m_; ++j)
    for (const auto& pre : preimages_[j]) w[j] += interp(u, pre.s) * pre.scale;
  return w;
}

std::vector<double> ScpfOperator::convolve_direct(std::span<const double> u) const {
  std::vector<double> v = tabulate_v(u), w = tabulate_w(u), out(m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < m_; ++j) s += v[i + m_ - 1 - j] * w[j] * weights_[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> ScpfOperator::convolve_fft(std::span<const double> u) const {
  std::vector<double> v = tabulate_v(u), w = tabulate_w(u);
  const std::size_t n = fft_->len, nc = n / 2 + 1;
  double* a = fftw_alloc_real(n);
  double* b = fftw_alloc_real(n);
  fftw_complex* fa = fftw_alloc_complex(nc);
  fftw_complex* fb = fftw_alloc_complex(nc);
  std::fill(a, a + n, 0.0);
  std::fill(b, b + n, 0.0);
  for (std::size_t j = 0; j < m_; ++j) a[j] = w[j] * weights_[j];
  std::copy(v.begin(), v.end(), b);
  fftw_execute_dft_r2c(fft_->forward, a, fa);
  fftw_execute_dft_r2c(fft_->forward, b, fb);
  for (std::size_t k = 0; k < nc; ++k) {
    double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
    double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
    fa[k][0] = re;
    fa[k][1] = im;
  }
  fftw_execute_dft_c2r(fft_->backward, fa, a);
  std::vector<double> out(m_);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < m_; ++i) out[i] = a[i + m_ - 1] * scale;
  fftw_free(a);
  fftw_free(b);
  fftw_free(fa);
  fftw_free(fb);
  return out;
}

void ScpfOperator::check_grid(const Density1D& u) const {
  if (u.edges.size() != edges_.size()) throw Error(Errc::InvalidParam, "density does not conform to the operator grid");
  for (std::size_t i = 0; i < edges_.size(); ++i)
    if (std::abs(u.edges[i] - edges_[i]) > 1e-12 * std::max(1.0, std::abs(edges_[i])))
      throw Error(Errc::InvalidParam, "density does not conform to the operator grid");
}

Density1D ScpfOperator::apply(const Density1D& u) const {
  check_grid(u);
  Density1D out = make_density(convolve_fft(u.density));
  if (!(out.total_mass() > 0)) throw Error(Errc::DomainError, "iterate lost all mass on the grid");
  return out.normalize();
}

Density1D ScpfOperator::apply_direct(const Density1D& u) const {
  check_grid(u);
  Density1D out = make_density(convolve_direct(u.density));
  if (!(out.total_mass() > 0)) throw Error(Errc::DomainError, "iterate lost all mass on the grid");
  return out.normalize();
}

std::vector<ScpfStep> ScpfOperator::iterate(const Density1D& u0, std::size_t n_iter) const {
  if (n_iter < 1) throw Error(Errc::InvalidParam, "n_iter must be >= 1");
  std::vector<ScpfStep> steps;
  steps.reserve(n_iter);
  Density1D u = u0;
  for (std::size_t k = 0; k < n_iter; ++k) {
    Density1D next = apply(u);
    ScpfStep st;
    double l1 = 0;
    for (std::size_t i = 0; i < m_; ++i) l1 += std::abs(next.density[i] - u.density[i]) * dx_;
    st.l1_change = l1;
    st.mean = next.mean();
    st.stddev = std::sqrt(next.variance());
    st.u = next;
    steps.push_back(std::move(st));
    u = std::move(next);
  }
  return steps;
}

}  // namespace delaydense
