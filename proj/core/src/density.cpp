#include "delaydense/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "delaydense/error.hpp"
#include "delaydense/format.hpp"
#include "delaydense/parallel.hpp"
#include "delaydense/rng.hpp"

namespace delaydense {

namespace {

void check_edges(std::span<const double> edges) {
  if (edges.size() < 2) throw Error(Errc::InvalidParam, "need at least two bin edges");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] < edges[i + 1])) throw Error(Errc::InvalidParam, "bin edges must be strictly increasing");
}

std::ptrdiff_t locate_in(std::span<const double> edges, double x) noexcept {
  if (!(x >= edges.front() && x <= edges.back())) return -1;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  auto i = static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  return std::min<std::ptrdiff_t>(i, static_cast<std::ptrdiff_t>(edges.size()) - 2);
}

// Cumulative mass table for inverse-CDF sampling.
class InverseCdf {
 public:
  explicit InverseCdf(const Density1D& rho) : rho_(rho), cum_(rho.bins() + 1, 0.0) {
    for (std::size_t i = 0; i < rho.bins(); ++i) cum_[i + 1] = cum_[i] + rho.mass(i);
    if (!(cum_.back() > 0)) throw Error(Errc::DomainError, "density has zero mass");
  }

  double operator()(double u) const {
    double target = u * cum_.back();
    auto it = std::upper_bound(cum_.begin() + 1, cum_.end(), target);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()) - 1, rho_.bins() - 1);
    while (i + 1 < rho_.bins() && rho_.mass(i) == 0) ++i;
    double m = rho_.mass(i);
    double frac = m > 0 ? std::clamp((target - cum_[i]) / m, 0.0, 1.0) : 0.5;
    return rho_.edges[i] + frac * rho_.width(i);
  }

 private:
  const Density1D& rho_;
  std::vector<double> cum_;
};

}  // namespace

Density1D::Density1D(std::vector<double> e, std::vector<double> d, bool norm)
    : edges(std::move(e)), density(std::move(d)), normalized(norm) {
  check_edges(edges);
  if (density.size() + 1 != edges.size()) throw Error(Errc::InvalidParam, "need one density value per bin");
  for (double v : density)
    if (!(v >= 0) || !std::isfinite(v)) throw Error(Errc::InvalidParam, "density values must be finite and >= 0");
}

Density1D Density1D::uniform(double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) throw Error(Errc::InvalidParam, "uniform density needs lo < hi");
  return Density1D(uniform_edges(lo, hi, bins), std::vector<double>(bins, 1.0 / (hi - lo)), true);
}

Density1D Density1D::from_function(std::vector<double> edges, const std::function<double(double)>& f) {
  check_edges(edges);
  std::vector<double> d(edges.size() - 1);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = f(0.5 * (edges[i] + edges[i + 1]));
  return Density1D(std::move(edges), std::move(d));
}

Density1D Density1D::from_masses(std::vector<double> edges, std::span<const double> masses) {
  check_edges(edges);
  if (masses.size() + 1 != edges.size()) throw Error(Errc::InvalidParam, "need one mass per bin");
  std::vector<double> d(masses.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = masses[i] / (edges[i + 1] - edges[i]);
  return Density1D(std::move(edges), std::move(d));
}

std::vector<double> Density1D::masses() const {
  std::vector<double> m(bins());
  for (std::size_t i = 0; i < bins(); ++i) m[i] = mass(i);
  return m;
}

double Density1D::total_mass() const noexcept {
  double s = 0;
  for (std::size_t i = 0; i < bins(); ++i) s += mass(i);
  return s;
}

Density1D& Density1D::normalize() {
  double m = total_mass();
  if (!(m > 0)) throw Error(Errc::DomainError, "cannot normalize a zero density");
  for (double& v : density) v /= m;
  normalized = true;
  return *this;
}

std::ptrdiff_t Density1D::locate(double x) const noexcept { return locate_in(edges, x); }

double Density1D::pdf(double x) const noexcept {
  auto i = locate(x);
  return i < 0 ? 0.0 : density[static_cast<std::size_t>(i)];
}

double Density1D::cdf(double x) const noexcept {
  if (x <= lo()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < bins(); ++i) {
    if (x >= edges[i + 1]) {
      s += mass(i);
    } else {
      s += density[i] * (x - edges[i]);
      break;
    }
  }
  return s;
}

double Density1D::quantile(double u) const {
  if (!(u > 0 && u < 1)) throw Error(Errc::DomainError, "quantile needs 0 < u < 1");
  return InverseCdf(*this)(u);
}

double Density1D::mean() const noexcept {
  double m = 0, s = 0;
  for (std::size_t i = 0; i < bins(); ++i) {
    m += mass(i) * mid(i);
    s += mass(i);
  }
  return s > 0 ? m / s : 0.0;
}

double Density1D::variance() const noexcept {
  double mu = mean(), v = 0, s = 0;
  for (std::size_t i = 0; i < bins(); ++i) {
    double d = mid(i) - mu;
    v += mass(i) * d * d;
    s += mass(i);
  }
  return s > 0 ? v / s : 0.0;
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw Error(Errc::InvalidParam, "bins must be >= 1");
  if (!(hi > lo)) throw Error(Errc::InvalidParam, "edges need lo < hi");
  std::vector<double> e(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) e[i] = lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(bins));
  e.back() = hi;
  return e;
}

Density1D rebin(const Density1D& rho, std::span<const double> edges) {
  check_edges(edges);
  std::vector<double> m(edges.size() - 1, 0.0);
  for (std::size_t j = 0; j < m.size(); ++j) {
    double a = edges[j], b = edges[j + 1];
    auto i0 = std::upper_bound(rho.edges.begin(), rho.edges.end(), a) - rho.edges.begin();
    std::size_t i = i0 > 0 ? static_cast<std::size_t>(i0 - 1) : 0;
    for (; i < rho.bins() && rho.edges[i] < b; ++i) {
      double lo = std::max(a, rho.edges[i]), hi = std::min(b, rho.edges[i + 1]);
      if (hi > lo) m[j] += rho.density[i] * (hi - lo);
    }
  }
  return Density1D::from_masses(std::vector<double>(edges.begin(), edges.end()), m);
}

double l1_distance(const Density1D& a, const Density1D& b) {
  return l1_distance(a, b, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
}

double l1_distance(const Density1D& a, const Density1D& b, double lo, double hi) {
  if (a.edges.size() != b.edges.size()) throw Error(Errc::InvalidParam, "l1_distance needs matching bins");
  for (std::size_t i = 0; i < a.edges.size(); ++i)
    if (std::abs(a.edges[i] - b.edges[i]) > 1e-12 * std::max(1.0, std::abs(a.edges[i])))
      throw Error(Errc::InvalidParam, "l1_distance needs matching bins");
  double s = 0;
  for (std::size_t i = 0; i < a.bins(); ++i)
    if (a.edges[i] >= lo && a.edges[i + 1] <= hi) s += std::abs(a.density[i] - b.density[i]) * a.width(i);
  return s;
}

Density1D histogram(std::span<const double> values, std::span<const double> edges, std::size_t* out_of_range) {
  check_edges(edges);
  std::vector<double> counts(edges.size() - 1, 0.0);
  std::size_t inside = 0, outside = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    auto i = locate_in(edges, v);
    if (i < 0) {
      ++outside;
      continue;
    }
    counts[static_cast<std::size_t>(i)] += 1.0;
    ++inside;
  }
  if (out_of_range) *out_of_range = outside;
  if (inside > 0)
    for (double& c : counts) c /= static_cast<double>(inside);
  Density1D out = Density1D::from_masses(std::vector<double>(edges.begin(), edges.end()), counts);
  out.normalized = inside > 0;
  return out;
}

double quadratic_map_pf_at(const Density1D& rho, double x) {
  if (!(x >= 0 && x < 1)) return 0.0;
  double r = std::sqrt(1.0 - x);
  return (rho.pdf(0.5 - 0.5 * r) + rho.pdf(0.5 + 0.5 * r)) / (4.0 * r);
}

Density1D quadratic_map_pf(const Density1D& rho) {
  for (std::size_t i = 0; i < rho.bins(); ++i)
    if (rho.density[i] > 0 && (rho.edges[i] < -1e-12 || rho.edges[i + 1] > 1 + 1e-12))
      throw Error(Errc::DomainError, "quadratic map density must be supported on [0,1]");
  Density1D out = rho;
  for (std::size_t i = 0; i < out.bins(); ++i) out.density[i] = quadratic_map_pf_at(rho, out.mid(i));
  return out.normalize();
}

double quadratic_map_invariant_pdf(double x) {
  if (!(x > 0 && x < 1)) return 0.0;
  return 1.0 / (std::numbers::pi * std::sqrt(x * (1.0 - x)));
}

Density1D quadratic_map_invariant(std::span<const double> edges) {
  check_edges(edges);
  auto F = [](double x) { return 2.0 / std::numbers::pi * std::asin(std::sqrt(std::clamp(x, 0.0, 1.0))); };
  std::vector<double> m(edges.size() - 1);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = F(edges[i + 1]) - F(edges[i]);
  Density1D out = Density1D::from_masses(std::vector<double>(edges.begin(), edges.end()), m);
  out.normalized = true;
  return out;
}

double linear_beta(double alpha, double t) {
  if (!(t >= 0)) throw Error(Errc::DomainError, "t must be >= 0");
  if (t <= 1) return 1.0;
  if (t <= 2) return 1.0 + alpha * (t - 1.0);
  throw Error(Errc::NotImplementedWindow, "explicit linear transfer operator is implemented for t <= 2");
}

Density1D explicit_pf_linear(const Density1D& rho0, double alpha, double t) {
  double beta = linear_beta(alpha, t);
  if (std::abs(beta) < 1e-12)
    throw Error(Errc::SingularTime, "beta(t) vanishes at t=" + format_double(t) + ": all solutions pass through 0");
  const std::size_t b = rho0.bins();
  std::vector<double> e(b + 1), d(b);
  if (beta > 0) {
    for (std::size_t i = 0; i <= b; ++i) e[i] = beta * rho0.edges[i];
    for (std::size_t i = 0; i < b; ++i) d[i] = rho0.density[i] / beta;
  } else {
    for (std::size_t i = 0; i <= b; ++i) e[i] = beta * rho0.edges[b - i];
    for (std::size_t i = 0; i < b; ++i) d[i] = rho0.density[b - 1 - i] / -beta;
  }
  return Density1D(std::move(e), std::move(d), rho0.normalized);
}

namespace {

double quadratic_tau(double t) {
  if (!(t >= 0)) throw Error(Errc::DomainError, "t must be >= 0");
  if (t >= 2) throw Error(Errc::NotImplementedWindow, "explicit quadratic transfer operator is implemented for t < 2");
  return t <= 1 ? 0.0 : t - 1.0;
}

}  // namespace

Density1D explicit_pf_quadratic(const Density1D& rho0, double t, std::span<const double> out_edges) {
  double tau = quadratic_tau(t);
  if (tau == 0) return rebin(rho0, out_edges);
  check_edges(out_edges);
  // P(S(X) <= x) = F0(z-) + 1 - F0(z+) with z-, z+ the two pre-images of x.
  auto cdf_out = [&](double x) {
    double disc = 1.0 - 4.0 * tau * x;
    if (disc <= 0) return rho0.total_mass();
    double r = std::sqrt(disc);
    double zm = 2.0 * x / (1.0 + r);
    double zp = (1.0 + r) / (2.0 * tau);
    return rho0.cdf(zm) + rho0.total_mass() - rho0.cdf(zp);
  };
  std::vector<double> m(out_edges.size() - 1);
  double prev = cdf_out(out_edges[0]);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double next = cdf_out(out_edges[i + 1]);
    m[i] = std::max(0.0, next - prev);
    prev = next;
  }
  return Density1D::from_masses(std::vector<double>(out_edges.begin(), out_edges.end()), m);
}

Density1D explicit_pf_quadratic(const Density1D& rho0, double t) {
  double tau = quadratic_tau(t);
  auto S = [tau](double x) { return x - tau * x * x; };
  double lo = std::min(S(rho0.lo()), S(rho0.hi()));
  double hi = std::max(S(rho0.lo()), S(rho0.hi()));
  if (tau > 0) {
    double apex = 1.0 / (2.0 * tau);
    if (apex > rho0.lo() && apex < rho0.hi()) hi = S(apex);
  }
  return explicit_pf_quadratic(rho0, t, uniform_edges(lo, hi, rho0.bins()));
}

double explicit_pf_quadratic_at(const Density1D& rho0, double t, double x) {
  double tau = quadratic_tau(t);
  if (tau == 0) return rho0.pdf(x);
  double disc = 1.0 - 4.0 * tau * x;
  if (disc <= 0) return 0.0;
  double r = std::sqrt(disc);
  return (rho0.pdf(2.0 * x / (1.0 + r)) + rho0.pdf((1.0 + r) / (2.0 * tau))) / r;
}

std::vector<double> ensemble_values(const DelaySystem& system, const Density1D& rho0, const FamilyKind& kind,
                                    double t, std::size_t n_samples, std::uint64_t seed, int n_mesh) {
  if (n_samples < 1) throw Error(Errc::InvalidParam, "n_samples must be >= 1");
  InverseCdf inv(rho0);
  CounterRng rng(seed, 0x656E73656D626CULL);
  std::vector<double> out(n_samples);
  parallel_for(n_samples, [&](std::size_t i) {
    double x0 = inv(rng.uniform(i));
    try {
      out[i] = scalar_solution_map(system, kind.at(x0), t, n_mesh);
    } catch (const Error& e) {
      if (e.code() != Errc::Overflow) throw;
      out[i] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

Density1D sample_ensemble(const DelaySystem& system, const Density1D& rho0, const FamilyKind& kind, double t,
                          std::size_t n_samples, std::uint64_t seed, std::span<const double> edges, int n_mesh,
                          EnsembleStats* stats) {
  std::vector<double> values = ensemble_values(system, rho0, kind, t, n_samples, seed, n_mesh);
  std::size_t dropped = static_cast<std::size_t>(std::count_if(values.begin(), values.end(),
                                                               [](double v) { return std::isnan(v); }));
  if (dropped * 100 > n_samples)
    throw Error(Errc::Overflow, std::to_string(dropped) + " of " + std::to_string(n_samples) + " samples overflowed");
  std::size_t outside = 0;
  Density1D out = histogram(values, edges, &outside);
  if (stats) *stats = {n_samples, dropped, outside};
  return out;
}

std::uint64_t sampling_requirement(double p, double delta) {
  if (!(p > 0 && p < 1)) throw Error(Errc::DomainError, "sampling requirement needs 0 < p < 1");
  if (!(delta > 0)) throw Error(Errc::DomainError, "sampling requirement needs delta > 0");
  double v = 4.0 * (1.0 - p) / (delta * delta * p);
  if (!std::isfinite(v) || v > 1.8e19) throw Error(Errc::DomainError, "sampling requirement overflows");
  // Treat values within rounding noise of an integer as that integer.
  double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, r)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(v));
}

PiecewiseLinearMap::PiecewiseLinearMap(std::vector<double> x, std::vector<double> y, double time)
    : mesh_x(std::move(x)), mesh_y(std::move(y)), t(time) {
  if (mesh_x.size() < 2 || mesh_x.size() != mesh_y.size())
    throw Error(Errc::InvalidParam, "piecewise-linear map needs >= 2 matching nodes");
  check_edges(mesh_x);
}

double PiecewiseLinearMap::operator()(double x) const {
  auto i = locate_in(mesh_x, x);
  if (i < 0) throw Error(Errc::DomainError, "point outside the piecewise-linear mesh");
  auto k = static_cast<std::size_t>(i);
  double w = (x - mesh_x[k]) / (mesh_x[k + 1] - mesh_x[k]);
  return mesh_y[k] + w * (mesh_y[k + 1] - mesh_y[k]);
}

PiecewiseLinearMap build_pl_map(const DelaySystem& system, const FamilyKind& kind, std::span<const double> mesh_x,
                                double t, int n_mesh) {
  if (mesh_x.size() < 2) throw Error(Errc::InvalidParam, "mesh needs >= 2 nodes");
  check_edges(mesh_x);
  std::vector<double> y(mesh_x.size());
  parallel_for(mesh_x.size(), [&](std::size_t i) {
    try {
      y[i] = scalar_solution_map(system, kind.at(mesh_x[i]), t, n_mesh);
    } catch (const Error& e) {
      throw Error(e.code(), "mesh node " + std::to_string(i) + " (x=" + format_double(mesh_x[i]) + "): " + e.what());
    }
  });
  return PiecewiseLinearMap(std::vector<double>(mesh_x.begin(), mesh_x.end()), std::move(y), t);
}

Density1D apply_pl_pf(const PiecewiseLinearMap& map, const Density1D& rho0, std::span<const double> eval_edges,
                      PlPfOptions options) {
  check_edges(eval_edges);
  const std::size_t nb = eval_edges.size() - 1;
  std::vector<double> mids(nb), out(nb, 0.0);
  for (std::size_t j = 0; j < nb; ++j) mids[j] = 0.5 * (eval_edges[j] + eval_edges[j + 1]);
  for (std::size_t i = 0; i + 1 < map.mesh_x.size(); ++i) {
    const double xa = map.mesh_x[i], xb = map.mesh_x[i + 1];
    const double ya = map.mesh_y[i], yb = map.mesh_y[i + 1];
    const double dy = yb - ya;
    if (std::abs(dy) < 1e-14) {
      if (options.strict)
        throw Error(Errc::DegenerateSegment, "mesh interval " + std::to_string(i) + " maps to a point");
      double mass = rho0.cdf(xb) - rho0.cdf(xa);
      auto j = locate_in(eval_edges, ya);
      if (j >= 0 && mass > 0) {
        auto jj = static_cast<std::size_t>(j);
        out[jj] += mass / (eval_edges[jj + 1] - eval_edges[jj]);
      }
      continue;
    }
    const double slope = (xb - xa) / dy;
    const double lo = std::min(ya, yb), hi = std::max(ya, yb);
    auto first = std::lower_bound(mids.begin(), mids.end(), lo);
    for (auto it = first; it != mids.end() && *it < hi; ++it) {
      double z = xa + slope * (*it - ya);
      out[static_cast<std::size_t>(it - mids.begin())] += rho0.pdf(z) * std::abs(slope);
    }
  }
  return Density1D(std::vector<double>(eval_edges.begin(), eval_edges.end()), std::move(out));
}

Density1D transport_pl_mass(const PiecewiseLinearMap& map, const Density1D& rho0, std::span<const double> out_edges,
                            double* lost_mass) {
  check_edges(out_edges);
  const std::size_t nb = out_edges.size() - 1;
  std::vector<double> m(nb, 0.0);
  double lost = 0;
  auto deposit_point = [&](double y, double mass) {
    auto j = locate_in(out_edges, y);
    if (j < 0)
      lost += mass;
    else
      m[static_cast<std::size_t>(j)] += mass;
  };
  auto deposit_range = [&](double ylo, double yhi, double mass) {
    double inside = 0;
    auto it = std::upper_bound(out_edges.begin(), out_edges.end(), ylo);
    std::size_t j = it == out_edges.begin() ? 0 : static_cast<std::size_t>(it - out_edges.begin()) - 1;
    for (; j < nb && out_edges[j] < yhi; ++j) {
      double a = std::max(ylo, out_edges[j]), b = std::min(yhi, out_edges[j + 1]);
      if (b > a) {
        double part = mass * (b - a) / (yhi - ylo);
        m[j] += part;
        inside += part;
      }
    }
    lost += mass - inside;
  };
  lost += rho0.cdf(map.mesh_x.front()) + (rho0.total_mass() - rho0.cdf(map.mesh_x.back()));
  for (std::size_t i = 0; i + 1 < map.mesh_x.size(); ++i) {
    const double xa = map.mesh_x[i], xb = map.mesh_x[i + 1];
    const double ya = map.mesh_y[i], yb = map.mesh_y[i + 1];
    const double slope = (yb - ya) / (xb - xa);
    // Walk the rho0 bins overlapping [xa, xb]; each piece has constant density.
    auto it = std::upper_bound(rho0.edges.begin(), rho0.edges.end(), xa);
    std::size_t k = it == rho0.edges.begin() ? 0 : static_cast<std::size_t>(it - rho0.edges.begin()) - 1;
    for (; k < rho0.bins() && rho0.edges[k] < xb; ++k) {
      double p = std::max(xa, rho0.edges[k]), q = std::min(xb, rho0.edges[k + 1]);
      if (!(q > p)) continue;
      double mass = rho0.density[k] * (q - p);
      if (mass == 0) continue;
      double yp = ya + slope * (p - xa), yq = ya + slope * (q - xa);
      if (std::abs(yq - yp) < 1e-14)
        deposit_point(yp, mass);
      else
        deposit_range(std::min(yp, yq), std::max(yp, yq), mass);
    }
  }
  if (lost_mass) *lost_mass = lost;
  return Density1D::from_masses(std::vector<double>(out_edges.begin(), out_edges.end()), m);
}

SupportCurve track_support_curve(const DelaySystem& system, const FamilyKind& kind, std::span<const double> x0_samples,
                                 double t_end, int n_mesh, int n_delays, const Density1D* rho0) {
  if (!(t_end >= 0)) throw Error(Errc::InvalidParam, "t_end must be >= 0");
  if (x0_samples.empty()) throw Error(Errc::InvalidParam, "support curve needs at least one point");
  for (std::size_t i = 0; i + 1 < x0_samples.size(); ++i)
    if (!(x0_samples[i] < x0_samples[i + 1])) throw Error(Errc::InvalidParam, "x0 samples must be sorted");
  if (n_delays < 0) n_delays = std::max(1, static_cast<int>(std::ceil(t_end - 1e-12)));
  if (t_end > n_delays + 1 + 1e-12)
    throw Error(Errc::InvalidParam, "t_end exceeds the allotted number of delay steps");

  const auto M = static_cast<std::size_t>(n_mesh);
  const auto D = static_cast<std::size_t>(n_delays);
  const double h = 1.0 / n_mesh;
  const auto K = static_cast<std::size_t>(std::ceil(t_end * n_mesh - 1e-9));

  SupportCurve curve;
  curve.t = t_end;
  curve.s.assign(x0_samples.begin(), x0_samples.end());
  curve.points.resize(x0_samples.size());

  parallel_for(x0_samples.size(), [&](std::size_t i) {
    const double s = x0_samples[i];
    HistoryVector phi = initial_history(kind.at(s), n_mesh);
    std::vector<double> y(D + 1, s);
    for (std::size_t k = 0; k < K; ++k) {
      // Ascending n reads y[n+1] before it is overwritten, so the update is simultaneous.
      for (std::size_t n = 0; n <= D; ++n) {
        if (k < n * M) break;
        if (k < (n + 1) * M) {
          y[n] = phi[k + 1 - n * M];
        } else {
          y[n] = y[n] + h * system.rhs(y[n], y[n + 1]);
          check_finite(y[n], static_cast<double>(k + 1) * h);
        }
      }
    }
    curve.points[i] = std::move(y);
  });

  const std::size_t n = x0_samples.size();
  curve.weight.assign(n, 1.0 / static_cast<double>(n));
  if (rho0) {
    for (std::size_t i = 0; i < n; ++i) {
      double left = i == 0 ? rho0->lo() : 0.5 * (x0_samples[i - 1] + x0_samples[i]);
      double right = i + 1 == n ? rho0->hi() : 0.5 * (x0_samples[i] + x0_samples[i + 1]);
      curve.weight[i] = std::max(0.0, rho0->cdf(right) - rho0->cdf(left));
    }
  }
  return curve;
}

Density1D support_curve_histogram(const SupportCurve& curve, std::span<const double> edges) {
  check_edges(edges);
  std::vector<double> m(edges.size() - 1, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    auto j = locate_in(edges, curve.y0(i));
    if (j < 0) continue;
    m[static_cast<std::size_t>(j)] += curve.weight[i];
    total += curve.weight[i];
  }
  if (total > 0)
    for (double& v : m) v /= total;
  Density1D out = Density1D::from_masses(std::vector<double>(edges.begin(), edges.end()), m);
  out.normalized = total > 0;
  return out;
}

}  // namespace delaydense
