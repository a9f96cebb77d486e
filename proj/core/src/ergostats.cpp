#include "delaydense/ergostats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "delaydense/error.hpp"
#include "delaydense/parallel.hpp"
#include "delaydense/rng.hpp"

namespace delaydense {

namespace {

constexpr double kTinyNorm = 1e-300;

// Base path over one map step: p[0..N] = x, p[N+1..2N] the Euler continuation.
std::vector<double> base_path(const DelaySystem& system, std::span<const double> x, double h) {
  const std::size_t n = x.size() - 1;
  std::vector<double> p(2 * n + 1);
  std::copy(x.begin(), x.end(), p.begin());
  for (std::size_t k = 0; k < n; ++k) p[n + 1 + k] = p[n + k] + h * system.rhs(p[n + k], p[k]);
  return p;
}

std::vector<double> variational_step(const DelaySystem& system, std::span<const double> p, std::span<const double> v,
                                     double h) {
  const std::size_t n = v.size() - 1;
  std::vector<double> q(2 * n + 1);
  std::copy(v.begin(), v.end(), q.begin());
  auto jumps = system.lag_jumps();
  for (std::size_t k = 0; k < n; ++k) {
    const double x = p[n + k], y = p[k];
    double next = q[n + k] + h * (system.d_state(x, y) * q[n + k] + system.d_lag(x, y) * q[k]);
    // Threshold crossings of the lagged path between t_k and t_{k+1}. Using the
    // sample at t_k for both w and the slope keeps the discrete derivative of
    // the base path an exact tangent solution.
    const double dy = p[k + 1] - y;
    if (dy != 0) {
      for (const auto& j : jumps) {
        const bool crosses = (y < j.at && p[k + 1] >= j.at) || (y >= j.at && p[k + 1] < j.at);
        if (crosses) next += j.jump * q[k] * h / std::abs(dy);
      }
    }
    q[n + 1 + k] = next;
  }
  return {q.begin() + static_cast<std::ptrdiff_t>(n), q.end()};
}

std::vector<double> fd_step(const DelaySystem& system, const HistoryVector& x, std::span<const double> v,
                            double rel_delta) {
  double scale = 0;
  for (double u : x.values()) scale = std::max(scale, std::abs(u));
  double vnorm = 0;
  for (double u : v) vnorm = std::max(vnorm, std::abs(u));
  if (vnorm == 0) return std::vector<double>(v.size(), 0.0);
  const double delta = rel_delta * std::max(scale, 1e-12) / vnorm;
  std::vector<double> plus(x.values().begin(), x.values().end()), minus = plus, scratch;
  for (std::size_t i = 0; i < v.size(); ++i) {
    plus[i] += delta * v[i];
    minus[i] -= delta * v[i];
  }
  time_one_map_inplace(system, plus, scratch);
  time_one_map_inplace(system, minus, scratch);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (plus[i] - minus[i]) / (2 * delta);
  return out;
}

}  // namespace

std::vector<std::vector<double>> tangent_map(const DelaySystem& system, const HistoryVector& x,
                                             const std::vector<std::vector<double>>& vectors, TangentMode mode,
                                             double fd_rel_delta) {
  std::vector<std::vector<double>> out(vectors.size());
  for (const auto& v : vectors)
    if (v.size() != x.size()) throw Error(Errc::InvalidParam, "tangent vector length differs from the state");
  if (mode == TangentMode::FiniteDifference) {
    for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = fd_step(system, x, vectors[i], fd_rel_delta);
    return out;
  }
  const auto p = base_path(system, x.values(), x.step());
  for (std::size_t i = 0; i < vectors.size(); ++i) out[i] = variational_step(system, p, vectors[i], x.step());
  return out;
}

std::vector<double> gram_schmidt(std::vector<std::vector<double>>& vectors) {
  std::vector<double> norms(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    auto& v = vectors[i];
    // Second pass restores orthogonality lost to cancellation on nearly dependent vectors.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t j = 0; j < i; ++j) {
        const auto& u = vectors[j];
        double d = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
        for (std::size_t m = 0; m < v.size(); ++m) v[m] -= d * u[m];
      }
    double nrm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (!(nrm > kTinyNorm) || !std::isfinite(nrm))
      throw Error(Errc::DegenerateTangent, "tangent vector " + std::to_string(i) + " collapsed during orthonormalization");
    for (double& x : v) x /= nrm;
    norms[i] = nrm;
  }
  return norms;
}

LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, std::span<const HistoryVector> states,
                                   const LyapunovOptions& opt) {
  if (opt.k < 1 || opt.k > 8) throw Error(Errc::InvalidParam, "k must be in 1..8");
  if (opt.renorm_every < 1) throw Error(Errc::InvalidParam, "renorm_every must be >= 1");
  if (states.empty()) throw Error(Errc::InvalidParam, "empty run");
  const std::size_t steps = states.size() - 1;
  if (steps < opt.warmup + 100 * opt.renorm_every)
    throw Error(Errc::InvalidParam, "run has " + std::to_string(steps) + " map steps; need at least " +
                                        std::to_string(opt.warmup + 100 * opt.renorm_every));
  const std::size_t dim = states.front().size();
  if (opt.k > dim) throw Error(Errc::InvalidParam, "k exceeds the state dimension");

  CounterRng rng(opt.seed, 0x4c59);
  std::vector<std::vector<double>> vs(opt.k, std::vector<double>(dim));
  for (std::size_t i = 0; i < opt.k; ++i)
    for (std::size_t m = 0; m < dim; ++m) vs[i][m] = rng.normal(i * dim + m);
  gram_schmidt(vs);

  std::vector<double> sums(opt.k, 0.0);
  std::size_t averaged = 0, since = 0;
  for (std::size_t n = 0; n < steps; ++n) {
    vs = tangent_map(system, states[n], vs, opt.mode, opt.fd_rel_delta);
    ++since;
    const bool last = n + 1 == steps;
    if (since == opt.renorm_every || last) {
      auto norms = gram_schmidt(vs);
      if (n + 1 > opt.warmup) {
        for (std::size_t i = 0; i < opt.k; ++i) sums[i] += std::log2(norms[i]);
        averaged += since;
      }
      since = 0;
    }
  }
  LyapunovSpectrum out;
  out.renorm_every = opt.renorm_every;
  out.steps = averaged;
  out.exponents.resize(opt.k);
  const double time = static_cast<double>(averaged) * system.delay();
  for (std::size_t i = 0; i < opt.k; ++i) out.exponents[i] = sums[i] / time;
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
  return out;
}

LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, const SaddleRun& run, const LyapunovOptions& opt) {
  return lyapunov_spectrum(system, std::span<const HistoryVector>(run.states), opt);
}

LyapunovSpectrum lyapunov_spectrum(const DelaySystem& system, const SolutionPath& path, const LyapunovOptions& opt) {
  const auto n = static_cast<std::size_t>(std::llround(1.0 / path.h));
  if (n < 2 || std::abs(static_cast<double>(n) * path.h - 1.0) > 1e-9)
    throw Error(Errc::InvalidParam, "path step must be 1/N");
  if (path.size() < n + 1) throw Error(Errc::InvalidParam, "path shorter than one delay");
  std::vector<HistoryVector> states;
  for (std::size_t off = 0; off + n < path.size(); off += n) {
    std::vector<double> w(path.x.begin() + static_cast<std::ptrdiff_t>(off),
                          path.x.begin() + static_cast<std::ptrdiff_t>(off + n + 1));
    states.emplace_back(std::move(w), static_cast<int>(n), path.time(off) + 1.0);
  }
  return lyapunov_spectrum(system, std::span<const HistoryVector>(states), opt);
}

double kaplan_yorke(std::span<const double> spectrum) {
  for (std::size_t i = 1; i < spectrum.size(); ++i)
    if (spectrum[i] > spectrum[i - 1]) throw Error(Errc::InvalidParam, "spectrum must be sorted descending");
  double sum = 0, best_sum = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    sum += spectrum[i];
    if (sum > 0) {
      j = i + 1;
      best_sum = sum;
    }
  }
  if (j == 0) throw Error(Errc::Undefined, "no positive partial sum of exponents");
  if (j == spectrum.size() || !(spectrum[j] < 0))
    throw Error(Errc::Undefined, "no negative exponent follows the positive partial sums");
  return static_cast<double>(j) + best_sum / std::abs(spectrum[j]);
}

void PointCloud::push(std::span<const double> p) {
  if (p.size() != dim) throw Error(Errc::InvalidParam, "point dimension mismatch");
  for (double v : p)
    if (!std::isfinite(v)) throw Error(Errc::InvalidParam, "point cloud values must be finite");
  coords.insert(coords.end(), p.begin(), p.end());
}

PointCloud delay_embed(const SolutionPath& path, std::span<const double> lags, double stride) {
  if (lags.empty()) throw Error(Errc::InvalidParam, "need at least one lag");
  if (!(stride > 0)) throw Error(Errc::InvalidParam, "stride must be > 0");
  auto [lo, hi] = std::minmax_element(lags.begin(), lags.end());
  PointCloud cloud;
  cloud.dim = lags.size();
  std::vector<double> p(lags.size());
  for (double t = path.t0 - *lo; t + *hi <= path.t_end() + 1e-12; t += stride) {
    for (std::size_t i = 0; i < lags.size(); ++i) p[i] = path.value_at(t + lags[i]);
    cloud.push(p);
  }
  return cloud;
}

PointCloud embed_states(std::span<const HistoryVector> states, std::span<const double> offsets) {
  if (offsets.empty()) throw Error(Errc::InvalidParam, "need at least one offset");
  for (double o : offsets)
    if (o < -1 || o > 0) throw Error(Errc::InvalidParam, "offsets must lie in [-1, 0]");
  PointCloud cloud;
  cloud.dim = offsets.size();
  std::vector<double> p(offsets.size());
  for (const auto& s : states) {
    const double n = static_cast<double>(s.n_mesh());
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      double pos = (offsets[i] + 1.0) * n;
      auto k = std::min(static_cast<std::size_t>(pos), s.size() - 2);
      double f = pos - static_cast<double>(k);
      p[i] = s[k] + f * (s[k + 1] - s[k]);
    }
    cloud.push(p);
  }
  return cloud;
}

CorrelationDimension correlation_dimension(const PointCloud& cloud, double r_min, double r_max, std::size_t n_r,
                                           const CorrelationOptions& opt) {
  if (!(r_min > 0) || !(r_max > r_min)) throw Error(Errc::InvalidParam, "need 0 < r_min < r_max");
  if (n_r < 3) throw Error(Errc::InvalidParam, "need at least 3 radii");
  const std::size_t n = cloud.size();
  if (n < 1000) throw Error(Errc::InvalidParam, "point cloud needs at least 1000 points");
  if (opt.theiler + 1 >= n) throw Error(Errc::InvalidParam, "Theiler window leaves no pairs");

  CorrelationDimension out;
  out.r.resize(n_r);
  for (std::size_t i = 0; i < n_r; ++i)
    out.r[i] = r_min * std::pow(r_max / r_min, static_cast<double>(i) / static_cast<double>(n_r - 1));
  std::vector<double> r2(n_r);
  for (std::size_t i = 0; i < n_r; ++i) r2[i] = out.r[i] * out.r[i];

  // Rows are dealt round-robin to a fixed number of blocks; counts are integers.
  constexpr std::size_t kBlocks = 64;
  std::vector<std::vector<std::uint64_t>> counts(kBlocks, std::vector<std::uint64_t>(n_r, 0));
  const std::size_t dim = cloud.dim;
  parallel_for(kBlocks, [&](std::size_t b) {
    auto& cnt = counts[b];
    for (std::size_t i = b; i < n; i += kBlocks) {
      const double* pi = cloud.point(i);
      for (std::size_t j = i + opt.theiler + 1; j < n; ++j) {
        const double* pj = cloud.point(j);
        double d2 = 0;
        for (std::size_t m = 0; m < dim; ++m) {
          double d = pi[m] - pj[m];
          d2 += d * d;
        }
        if (d2 >= r2.back()) continue;
        auto k = static_cast<std::size_t>(std::upper_bound(r2.begin(), r2.end(), d2) - r2.begin());
        ++cnt[k];
      }
    }
  });
  const std::size_t m = n - opt.theiler - 1;
  out.pairs = static_cast<std::uint64_t>(m) * (m + 1) / 2;
  out.c.assign(n_r, 0.0);
  std::uint64_t cum = 0;
  for (std::size_t k = 0; k < n_r; ++k) {
    for (std::size_t b = 0; b < kBlocks; ++b) cum += counts[b][k];
    out.c[k] = static_cast<double>(cum) / static_cast<double>(out.pairs);
  }

  out.local_slope.assign(n_r - 1, NAN);
  for (std::size_t k = 0; k + 1 < n_r; ++k)
    if (out.c[k] > 0) out.local_slope[k] = std::log(out.c[k + 1] / out.c[k]) / std::log(out.r[k + 1] / out.r[k]);

  // Longest run of local slopes whose spread stays within the tolerance of their mean.
  std::size_t best_a = 0, best_len = 0;
  double best_spread = INFINITY;
  for (std::size_t a = 0; a < out.local_slope.size(); ++a) {
    double lo = INFINITY, hi = -INFINITY, sum = 0;
    for (std::size_t b = a; b < out.local_slope.size(); ++b) {
      double s = out.local_slope[b];
      if (!std::isfinite(s)) break;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      sum += s;
      double mean = sum / static_cast<double>(b - a + 1);
      if (!(mean > 0) || hi - lo > opt.slope_tolerance * mean) break;
      std::size_t len = b - a + 1;
      double spread = (hi - lo) / mean;
      if (len > best_len || (len == best_len && spread < best_spread)) {
        best_a = a;
        best_len = len;
        best_spread = spread;
      }
    }
  }
  if (best_len < 2) throw Error(Errc::InsufficientPairs, "no fit window with nonzero correlation sums");
  out.fit_lo = best_a;
  out.fit_hi = best_a + best_len;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(out.fit_hi - out.fit_lo + 1);
  for (std::size_t k = out.fit_lo; k <= out.fit_hi; ++k) {
    double x = std::log(out.r[k]), y = std::log(out.c[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.dimension = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  out.intercept = (sy - out.dimension * sx) / cnt;
  return out;
}

}  // namespace delaydense
