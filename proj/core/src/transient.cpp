#include "delaydense/transient.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "delaydense/error.hpp"
#include "delaydense/format.hpp"
#include "delaydense/parallel.hpp"
#include "delaydense/rng.hpp"

namespace delaydense {

namespace {

constexpr std::string_view kKindNames[] = {"fixed-point", "periodic", "saddle-periodic"};

// sup_k |x_k - x(t_k - lag)| over the last `count` samples, lag in samples
// (real-valued, linear interpolation). Stops once the bound is exceeded.
double lag_sup(std::span<const double> x, double lag, std::size_t count, double bound) {
  const std::size_t n = x.size();
  double s = 0;
  for (std::size_t k = n - count; k < n; ++k) {
    double pos = static_cast<double>(k) - lag;
    auto i = static_cast<std::size_t>(pos);
    double f = pos - static_cast<double>(i);
    double prev = i + 1 < n ? x[i] + f * (x[i + 1] - x[i]) : x[i];
    s = std::max(s, std::abs(x[k] - prev));
    if (s > bound) return s;
  }
  return s;
}

double refine_lag(std::span<const double> x, std::size_t p, std::size_t count) {
  double a = static_cast<double>(p) - 1.0, b = static_cast<double>(p) + 1.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = lag_sup(x, c, count, INFINITY), fd = lag_sup(x, d, count, INFINITY);
  for (int it = 0; it < 40; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = lag_sup(x, c, count, INFINITY);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = lag_sup(x, d, count, INFINITY);
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> template_window(const AttractorTemplate& t, double duration) {
  auto n = static_cast<std::size_t>(std::llround(duration / t.h)) + 1;
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = t.at(static_cast<double>(j) * t.h);
  return w;
}

bool templates_match(const AttractorTemplate& candidate, const AttractorTemplate& ref) {
  if (candidate.periodic() != ref.periodic()) return false;
  double dur = 2.0 * std::max({candidate.period, ref.period, 1.0});
  auto w = template_window(candidate, dur);
  return template_distance(ref, w, candidate.h, ref.tol) < ref.tol;
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

std::vector<double> lerp(std::span<const double> a, std::span<const double> b, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * (b[i] - a[i]);
  return out;
}

HistoryVector with_values(const HistoryVector& like, std::vector<double> values) {
  return HistoryVector(std::move(values), like.n_mesh(), like.t_anchor());
}

HistoryVector map_state(const DelaySystem& system, const HistoryVector& x) { return time_one_map(system, x); }

}  // namespace

std::string_view attractor_kind_name(AttractorKind kind) noexcept { return kKindNames[static_cast<int>(kind)]; }

AttractorKind parse_attractor_kind(std::string_view name) {
  for (int i = 0; i < 3; ++i)
    if (kKindNames[i] == name) return static_cast<AttractorKind>(i);
  throw Error(Errc::ParseError, "unknown attractor kind '" + std::string(name) + "'");
}

double AttractorTemplate::amplitude() const noexcept {
  if (samples.empty()) return 0;
  auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  return *hi - *lo;
}

double AttractorTemplate::at(double phase) const noexcept {
  if (!periodic() || samples.size() < 2) return samples.empty() ? 0.0 : samples[0];
  double p = std::fmod(phase, period);
  if (p < 0) p += period;
  double t = p / h;
  auto k = static_cast<std::size_t>(t);
  if (k + 1 >= samples.size()) return samples.back();
  double f = t - static_cast<double>(k);
  return samples[k] + f * (samples[k + 1] - samples[k]);
}

std::size_t AttractorTemplate::offsets() const noexcept {
  if (!periodic()) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(period / h - 1e-9)));
}

AttractorTemplate AttractorTemplate::negated() const {
  AttractorTemplate t = *this;
  for (double& v : t.samples) v = -v;
  return t;
}

AttractorTemplate extract_template(const SolutionPath& path, int label, const TemplateOptions& opt) {
  SolutionPath tail = path.tail(opt.window);
  std::span<const double> x = tail.x;
  const std::size_t n = x.size();
  if (n < 8) throw Error(Errc::InvalidParam, "path too short for template extraction");
  auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double amp = *hi_it - *lo_it;
  AttractorTemplate t;
  t.label = label;
  t.h = tail.h;
  if (amp <= opt.fixed_point_amplitude * std::max(1.0, std::abs(x.back()))) {
    t.kind = AttractorKind::FixedPoint;
    t.samples = {x.back()};
    t.tol = opt.match_factor * opt.tol_floor;
    return t;
  }
  const double strict = opt.rel_period_tol * amp;
  const double loose = 0.1 * amp;
  const std::size_t count = n / 2;
  auto p_min = static_cast<std::size_t>(std::ceil(opt.min_period / tail.h));
  double prev2 = INFINITY, prev1 = INFINITY;
  for (std::size_t p = std::max<std::size_t>(p_min, 2); p + 1 < n - count; ++p) {
    double s = lag_sup(x, static_cast<double>(p), count, loose);
    // prev1 is a local minimum of the integer-lag profile.
    if (prev1 < loose && prev1 <= prev2 && prev1 <= s) {
      double lag = refine_lag(x, p - 1, count);
      if (lag_sup(x, lag, count, INFINITY) < strict) {
        t.kind = AttractorKind::Periodic;
        t.period = lag * tail.h;
        auto ns = static_cast<std::size_t>(std::floor(lag)) + 2;
        t.samples.assign(x.end() - static_cast<std::ptrdiff_t>(ns), x.end());
        t.tol = opt.match_factor * std::max(amp, opt.tol_floor);
        return t;
      }
    }
    prev2 = prev1;
    prev1 = s;
  }
  throw Error(Errc::NoConvergence, "no period found in the last " + format_double(opt.window) + " time units");
}

AttractorTemplate template_from_family(const DelaySystem& system, const InitialFamily& family, int label,
                                       const TemplateOptions& opt) {
  return extract_template(integrate(system, family, opt.t_settle, opt.n_mesh), label, opt);
}

double template_distance(const AttractorTemplate& tmpl, std::span<const double> window, double h, double bound) {
  if (!tmpl.periodic()) {
    const double c = tmpl.samples.at(0);
    double s = 0;
    for (double v : window) {
      s = std::max(s, std::abs(v - c));
      if (s >= bound) return s;
    }
    return s;
  }
  double best = bound;
  const std::size_t n_off = tmpl.offsets();
  const std::size_t n = window.size();
  const double per = tmpl.period;
  const double inv_h = 1.0 / tmpl.h;
  const std::size_t last = tmpl.samples.size() - 1;
  for (std::size_t o = 0; o < n_off; ++o) {
    double phase = static_cast<double>(o) * tmpl.h;
    double s = 0;
    std::size_t j = 0;
    for (; j < n; ++j) {
      double p = phase + static_cast<double>(j) * h;
      p -= per * std::floor(p / per);
      double tt = p * inv_h;
      auto k = static_cast<std::size_t>(tt);
      double v = k >= last ? tmpl.samples[last]
                           : tmpl.samples[k] + (tt - static_cast<double>(k)) * (tmpl.samples[k + 1] - tmpl.samples[k]);
      double d = std::abs(window[j] - v);
      if (d >= best) break;
      s = std::max(s, d);
    }
    if (j == n) best = s;
  }
  return best;
}

std::vector<AttractorTemplate> discover_templates(const DelaySystem& system, FamilyId family, const Rect& rect,
                                                  std::size_t grid, const TemplateOptions& opt) {
  if (grid == 0) throw Error(Errc::InvalidParam, "template survey grid must be >= 1");
  std::vector<std::optional<AttractorTemplate>> found(grid * grid);
  parallel_for(grid * grid, [&](std::size_t idx) {
    std::size_t i = idx / grid, j = idx % grid;
    double a = rect.a_lo + (rect.a_hi - rect.a_lo) * (static_cast<double>(j) + 0.5) / static_cast<double>(grid);
    double b = rect.b_lo + (rect.b_hi - rect.b_lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    try {
      found[idx] = template_from_family(system, family_at(family, a, b), 0, opt);
    } catch (const Error& e) {
      if (e.code() != Errc::NoConvergence && e.code() != Errc::Overflow) throw;
    }
  });
  std::vector<AttractorTemplate> out;
  for (auto& f : found) {
    if (!f) continue;
    bool dup = std::any_of(out.begin(), out.end(), [&](const AttractorTemplate& r) { return templates_match(*f, r); });
    if (!dup) out.push_back(std::move(*f));
  }
  auto mean = [](const AttractorTemplate& t) {
    double s = 0;
    for (double v : t.samples) s += v;
    return s / static_cast<double>(t.samples.size());
  };
  std::stable_sort(out.begin(), out.end(), [&](const AttractorTemplate& a, const AttractorTemplate& b) {
    if (a.periodic() != b.periodic()) return !a.periodic();
    if (std::abs(a.period - b.period) > 1e-3) return a.period < b.period;
    return mean(a) < mean(b);
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].label = static_cast<int>(i);
  return out;
}

int mirror_label(std::span<const AttractorTemplate> templates, int label) {
  if (label == kUnresolved) return kUnresolved;
  const AttractorTemplate& t = templates[index_of_label(templates, label)];
  AttractorTemplate neg = t.negated();
  int found = kUnresolved;
  for (const auto& r : templates)
    if (templates_match(neg, r)) {
      if (found != kUnresolved) return kUnresolved;
      found = r.label;
    }
  return found;
}

std::size_t index_of_label(std::span<const AttractorTemplate> templates, int label) {
  for (std::size_t i = 0; i < templates.size(); ++i)
    if (templates[i].label == label) return i;
  throw Error(Errc::InvalidParam, "no template with label " + std::to_string(label));
}

double classification_window(std::span<const AttractorTemplate> templates) {
  double p = 0;
  for (const auto& t : templates) p = std::max(p, t.period);
  return std::max(2.0 * p, 1.0);
}

namespace {

int classify_window(std::span<const double> window, double h, std::span<const AttractorTemplate> templates) {
  int found = kUnresolved;
  for (const auto& t : templates) {
    if (template_distance(t, window, h, t.tol) < t.tol) {
      if (found != kUnresolved) return kUnresolved;
      found = t.label;
    }
  }
  return found;
}

}  // namespace

int classify_attractor(const SolutionPath& tail, std::span<const AttractorTemplate> templates) {
  if (templates.empty()) throw Error(Errc::InvalidParam, "no templates registered");
  const double w = classification_window(templates);
  auto n = static_cast<std::size_t>(std::llround(w / tail.h)) + 1;
  if (tail.size() < n)
    throw Error(Errc::InvalidParam, "tail spans " + format_double(tail.t_end() - tail.t0) +
                                        " time units; classification needs " + format_double(w));
  std::span<const double> window(tail.x.data() + tail.size() - n, n);
  return classify_window(window, tail.h, templates);
}

Resolution resolve_state(const DelaySystem& system, const HistoryVector& start,
                         std::span<const AttractorTemplate> templates, const ResolveOptions& opt) {
  if (templates.empty()) throw Error(Errc::InvalidParam, "no templates registered");
  Resolution res;
  res.window = classification_window(templates);
  const double h = start.step();
  auto n_win = static_cast<std::size_t>(std::llround(res.window / h)) + 1;
  const double t0 = start.t_anchor() - 1.0;
  std::vector<double> path(start.values().begin(), start.values().end());
  path.reserve(static_cast<std::size_t>(std::max(0.0, opt.t_max) / h) + 2);
  Integrator it(system, start);
  double next_check = std::max(opt.t_first, res.window);
  const auto total = static_cast<std::int64_t>(std::llround((opt.t_max - 1.0) / h));
  auto steps_to = [&](double t) { return static_cast<std::int64_t>(std::ceil((t - 1.0) / h - 1e-9)); };
  std::int64_t target = std::max<std::int64_t>(0, steps_to(next_check));
  try {
    while (true) {
      while (it.steps() < std::min(target, total)) path.push_back(it.step());
      if (path.size() >= n_win) {
        std::span<const double> window(path.data() + path.size() - n_win, n_win);
        int label = classify_window(window, h, templates);
        if (label != kUnresolved) {
          res.label = label;
          res.t_resolved = it.time() - t0;
          return res;
        }
      }
      if (it.steps() >= total) break;
      next_check += opt.check_every;
      target = steps_to(next_check);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::Overflow) throw;
  }
  res.t_resolved = it.time() - t0;
  return res;
}

InitialFamily family_at(FamilyId family, double A, double B) {
  switch (family) {
    case FamilyId::Linear:
      return InitialFamily::linear(A, B);
    case FamilyId::Sinusoidal:
      return InitialFamily::sinusoidal(A, B);
    case FamilyId::Constant:
      return InitialFamily::constant(A);
    default:
      throw Error(Errc::InvalidParam, "basin scans need a two-parameter family (linear or sin)");
  }
}

Resolution resolve_family(const DelaySystem& system, const InitialFamily& family,
                          std::span<const AttractorTemplate> templates, const ResolveOptions& opt, int n_mesh) {
  return resolve_state(system, initial_history(family, n_mesh), templates, opt);
}

double BasinRaster::a_at(std::size_t col) const noexcept {
  return rect.a_lo + (rect.a_hi - rect.a_lo) * (static_cast<double>(col) + 0.5) / static_cast<double>(width);
}

double BasinRaster::b_at(std::size_t row) const noexcept {
  return rect.b_hi - (rect.b_hi - rect.b_lo) * (static_cast<double>(row) + 0.5) / static_cast<double>(height);
}

std::vector<int> BasinRaster::distinct_labels() const {
  std::vector<int> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

BasinRaster basin_raster(const DelaySystem& system, FamilyId family, const Rect& rect, std::size_t width,
                         std::size_t height, std::span<const AttractorTemplate> templates, const ResolveOptions& opt,
                         int n_mesh) {
  if (templates.empty()) throw Error(Errc::InvalidParam, "no templates registered");
  if (width == 0 || height == 0) throw Error(Errc::InvalidParam, "raster resolution must be >= 1");
  BasinRaster r;
  r.rect = rect;
  r.width = width;
  r.height = height;
  r.labels.assign(width * height, kUnresolved);
  parallel_for(width * height, [&](std::size_t idx) {
    std::size_t row = idx / width, col = idx % width;
    auto fam = family_at(family, r.a_at(col), r.b_at(row));
    r.labels[idx] = resolve_family(system, fam, templates, opt, n_mesh).label;
  });
  return r;
}

double raster_asymmetry(const BasinRaster& raster, std::span<const AttractorTemplate> templates) {
  const auto& q = raster.rect;
  const double scale = std::max({std::abs(q.a_lo), std::abs(q.a_hi), std::abs(q.b_lo), std::abs(q.b_hi)});
  if (std::abs(q.a_lo + q.a_hi) > 1e-12 * scale || std::abs(q.b_lo + q.b_hi) > 1e-12 * scale)
    throw Error(Errc::InvalidParam, "raster rectangle is not symmetric about the origin");
  std::vector<int> mirror;
  for (const auto& t : templates) {
    if (static_cast<std::size_t>(t.label) >= mirror.size()) mirror.resize(static_cast<std::size_t>(t.label) + 1, kUnresolved);
    mirror[static_cast<std::size_t>(t.label)] = mirror_label(templates, t.label);
  }
  std::size_t bad = 0;
  for (std::size_t row = 0; row < raster.height; ++row)
    for (std::size_t col = 0; col < raster.width; ++col) {
      int l = raster.at(row, col);
      int m = raster.at(raster.height - 1 - row, raster.width - 1 - col);
      int expect = l == kUnresolved ? kUnresolved : mirror[static_cast<std::size_t>(l)];
      if (expect != m) ++bad;
    }
  return static_cast<double>(bad) / static_cast<double>(raster.labels.size());
}

BisectResult boundary_bisect(const DelaySystem& system, FamilyId family, ParamPoint pa, ParamPoint pb,
                             std::span<const AttractorTemplate> templates, double eps, ResolveOptions opt,
                             int n_mesh) {
  if (!(eps > 0)) throw Error(Errc::InvalidParam, "eps must be > 0");
  auto label_of = [&](ParamPoint p) { return resolve_family(system, family_at(family, p.a, p.b), templates, opt, n_mesh).label; };
  BisectResult res;
  res.label_a = label_of(pa);
  res.label_b = label_of(pb);
  if (res.label_a == kUnresolved || res.label_b == kUnresolved)
    throw Error(Errc::InvalidParam, "bisection endpoints must both be classified");
  if (res.label_a == res.label_b)
    throw Error(Errc::InvalidParam, "bisection endpoints lie in the same basin (label " + std::to_string(res.label_a) + ")");
  bool doubled = false;
  while (std::hypot(pa.a - pb.a, pa.b - pb.b) >= eps) {
    ParamPoint m{0.5 * (pa.a + pb.a), 0.5 * (pa.b + pb.b)};
    if ((m.a == pa.a && m.b == pa.b) || (m.a == pb.a && m.b == pb.b)) break;  // floating-point resolution reached
    int l = label_of(m);
    if (l == kUnresolved && !doubled) {
      doubled = true;
      opt.t_max *= 2;
      l = label_of(m);
    }
    if (l == kUnresolved)
      throw Error(Errc::LostClassification, "midpoint (" + format_double(m.a) + ", " + format_double(m.b) +
                                                ") unresolved at t_max=" + format_double(opt.t_max));
    if (l == res.label_a) {
      pa = m;
    } else {
      pb = m;
      res.label_b = l;
    }
    ++res.iterations;
  }
  res.a = pa;
  res.b = pb;
  res.t_max = opt.t_max;
  return res;
}

std::pair<ParamPoint, ParamPoint> find_label_change(const DelaySystem& system, FamilyId family, ParamPoint pa,
                                                    ParamPoint pb, std::size_t n,
                                                    std::span<const AttractorTemplate> templates, double near,
                                                    const ResolveOptions& opt, int n_mesh) {
  if (n < 2) throw Error(Errc::InvalidParam, "scan needs >= 2 points");
  std::vector<int> labels(n);
  auto point = [&](std::size_t i) {
    double s = static_cast<double>(i) / static_cast<double>(n - 1);
    return ParamPoint{pa.a + s * (pb.a - pa.a), pa.b + s * (pb.b - pa.b)};
  };
  parallel_for(n, [&](std::size_t i) {
    auto p = point(i);
    labels[i] = resolve_family(system, family_at(family, p.a, p.b), templates, opt, n_mesh).label;
  });
  std::ptrdiff_t best = -1;
  double best_d = INFINITY;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (labels[i] == kUnresolved || labels[i + 1] == kUnresolved || labels[i] == labels[i + 1]) continue;
    double mid = (static_cast<double>(i) + 0.5) / static_cast<double>(n - 1);
    if (std::abs(mid - near) < best_d) {
      best_d = std::abs(mid - near);
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) throw Error(Errc::DomainError, "no change of basin found along the segment");
  return {point(static_cast<std::size_t>(best)), point(static_cast<std::size_t>(best) + 1)};
}

EscapeRegion region_from_templates(std::vector<AttractorTemplate> templates, double delta, double lo, double hi) {
  if (!(delta > 0)) throw Error(Errc::InvalidParam, "delta must be > 0");
  if (!(hi > lo)) throw Error(Errc::InvalidParam, "bounding box needs lo < hi");
  EscapeRegion r;
  r.delta.assign(templates.size(), delta);
  r.templates = std::move(templates);
  r.lo = lo;
  r.hi = hi;
  return r;
}

double state_distance(std::span<const double> state, double h, const AttractorTemplate& tmpl, double bound) {
  return template_distance(tmpl, state, h, bound);
}

bool in_region(std::span<const double> state, double h, const EscapeRegion& region) {
  for (double v : state)
    if (!(v >= region.lo && v <= region.hi)) return false;
  for (std::size_t i = 0; i < region.templates.size(); ++i)
    if (state_distance(state, h, region.templates[i], region.delta[i]) < region.delta[i]) return false;
  return true;
}

int escape_time(const DelaySystem& system, const HistoryVector& state, const EscapeRegion& region, int t_cap) {
  std::vector<double> x(state.values().begin(), state.values().end()), scratch;
  const double h = state.step();
  for (int n = 1; n <= t_cap; ++n) {
    try {
      time_one_map_inplace(system, x, scratch);
    } catch (const Error& e) {
      if (e.code() == Errc::Overflow) return n;
      throw;
    }
    if (!in_region(x, h, region)) return n;
  }
  return t_cap + 1;
}

SolutionPath SaddleRun::path() const {
  SolutionPath p;
  if (states.empty()) return p;
  p.h = states.front().step();
  p.t0 = states.front().t_anchor() - 1.0;
  p.x.assign(states.front().values().begin(), states.front().values().end());
  for (std::size_t n = 1; n < states.size(); ++n) {
    auto v = states[n].values();
    p.x.insert(p.x.end(), v.begin() + 1, v.end());
  }
  return p;
}

constexpr double kMinGap = 1e-12;

SaddleRun straddle_orbit(const DelaySystem& system, const HistoryVector& xa_in, const HistoryVector& xb_in,
                         std::span<const AttractorTemplate> templates, double eps, std::size_t n_steps,
                         const StraddleOptions& opt) {
  if (!(eps > 0)) throw Error(Errc::InvalidParam, "eps must be > 0");
  auto label_of = [&](const HistoryVector& x) { return resolve_state(system, x, templates, opt.resolve).label; };
  HistoryVector xa = xa_in, xb = xb_in;
  int la = label_of(xa), lb = label_of(xb);
  if (la == kUnresolved || lb == kUnresolved) throw Error(Errc::BasinAmbiguity, "straddle endpoints are unclassified");
  if (la == lb) throw Error(Errc::InvalidParam, "straddle endpoints lie in the same basin");
  SaddleRun run;
  std::vector<double> mapped;  // S(previous recorded state)
  std::size_t tries = 0;
  auto bisect_once = [&](std::size_t n) {
    HistoryVector xc = with_values(xa, lerp(xa.values(), xb.values(), 0.5));
    int lc = label_of(xc);
    ++tries;
    if (lc == kUnresolved)
      throw Error(Errc::BasinAmbiguity, "bisection midpoint unclassified at step " + std::to_string(n));
    (lc == la ? xa : xb) = std::move(xc);
  };
  for (std::size_t n = 0; n < n_steps; ++n) {
    tries = 0;
    while (sup_diff(xa.values(), xb.values()) >= eps) bisect_once(n);
    HistoryVector sa = map_state(system, xa), sb = map_state(system, xb);
    // The next state lies between the images, so their gap bounds the pseudo-orbit error.
    // Across a jump of a discontinuous map the gap cannot shrink; refinement stops at kMinGap.
    while (sup_diff(sa.values(), sb.values()) >= eps && sup_diff(xa.values(), xb.values()) > kMinGap) {
      bisect_once(n);
      sa = map_state(system, xa);
      sb = map_state(system, xb);
    }
    double norm = mapped.empty() ? 0.0 : sup_diff(xa.values(), mapped);
    run.stagger_norm.push_back(norm);
    if (tries > 0) run.events.push_back({n, norm, tries});
    run.states.push_back(xa);
    xa = std::move(sa);
    xb = std::move(sb);
    mapped.assign(xa.values().begin(), xa.values().end());
  }
  return run;
}

PimRun pim_orbit(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& xa_in,
                 const HistoryVector& xb_in, const HistoryVector& xc_in, double eps, std::size_t n_steps,
                 const PimOptions& opt) {
  if (!(eps > 0)) throw Error(Errc::InvalidParam, "eps must be > 0");
  if (opt.n_refine < 3) throw Error(Errc::InvalidParam, "n_refine must be >= 3");
  auto T = [&](const HistoryVector& x) { return escape_time(system, x, region, opt.t_cap); };
  int ta = T(xa_in), tb = T(xb_in), tc = T(xc_in);
  if (!(tb > std::max(ta, tc)))
    throw Error(Errc::InvalidParam, "initial points are not a PIM triple (T = " + std::to_string(ta) + ", " +
                                        std::to_string(tb) + ", " + std::to_string(tc) + ")");
  PimRun out;
  HistoryVector xa = xa_in, xb = xb_in, xc = xc_in;
  std::vector<double> mapped;
  for (std::size_t n = 0; n < n_steps; ++n) {
    std::size_t refinements = 0;
    while (sup_diff(xa.values(), xc.values()) >= eps) {
      if (++refinements > opt.max_refinements)
        throw Error(Errc::NoInteriorMaximum, "refinement limit reached at step " + std::to_string(n));
      std::vector<HistoryVector> pts;
      std::vector<int> ts(opt.n_refine);
      for (std::size_t i = 0; i < opt.n_refine; ++i) {
        double s = static_cast<double>(i) / static_cast<double>(opt.n_refine - 1);
        pts.push_back(with_values(xa, lerp(xa.values(), xc.values(), s)));
      }
      parallel_for(opt.n_refine, [&](std::size_t i) { ts[i] = T(pts[i]); });
      // Interior maximum bracketed by the nearest strictly lower points; plateaus are allowed.
      std::size_t b = 1;
      for (std::size_t i = 2; i + 1 < opt.n_refine; ++i)
        if (ts[i] > ts[b]) b = i;
      std::size_t lo = b, hi = b;
      while (lo > 0 && ts[lo] >= ts[b]) --lo;
      while (hi + 1 < opt.n_refine && ts[hi] >= ts[b]) ++hi;
      if (ts[lo] >= ts[b] || ts[hi] >= ts[b] || (lo == 0 && hi + 1 == opt.n_refine))
        throw Error(Errc::NoInteriorMaximum, "no proper interior maximum of the escape time at step " +
                                                 std::to_string(n) + " (segment length " +
                                                 format_double(sup_diff(xa.values(), xc.values())) + ")");
      xa = pts[lo];
      xb = pts[b];
      xc = pts[hi];
      out.refinements.push_back({n, sup_diff(xa.values(), xc.values()), ts[lo], ts[b], ts[hi]});
      tb = ts[b];
    }
    double norm = mapped.empty() ? 0.0 : sup_diff(xb.values(), mapped);
    out.run.stagger_norm.push_back(norm);
    if (refinements > 0) out.run.events.push_back({n, norm, refinements});
    out.run.states.push_back(xb);
    out.run.escape.push_back(tb);
    xa = map_state(system, xa);
    xb = map_state(system, xb);
    xc = map_state(system, xc);
    tb = tb > opt.t_cap ? T(xb) : tb - 1;
    mapped.assign(xb.values().begin(), xb.values().end());
  }
  return out;
}

std::vector<double> stagger_perturbation(std::size_t dim, double eps, double eps_min, std::uint64_t seed,
                                         std::uint64_t stream) {
  CounterRng rng(seed, stream);
  std::vector<double> r(dim);
  double norm2 = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    r[i] = rng.normal(i);
    norm2 += r[i] * r[i];
  }
  double lmax = std::log10(eps), lmin = std::log10(eps_min);
  double mag = std::pow(10.0, lmin + (lmax - lmin) * rng.uniform(2 * dim));
  double scale = mag / std::sqrt(norm2);
  for (double& v : r) v *= scale;
  return r;
}

namespace {

struct Stagger {
  const DelaySystem& system;
  const EscapeRegion& region;
  double eps, eps_min;
  std::uint64_t seed;
  int t_cap;

  int T(const HistoryVector& x) const { return escape_time(system, x, region, t_cap); }

  HistoryVector perturbed(const HistoryVector& base, std::uint64_t stream, double* norm) const {
    auto r = stagger_perturbation(base.size(), eps, eps_min, seed, stream);
    std::vector<double> v(base.values().begin(), base.values().end());
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] += r[i];
      s = std::max(s, std::abs(r[i]));
    }
    *norm = s;
    return with_values(base, std::move(v));
  }
};

std::uint64_t stream_id(std::uint64_t step, std::uint64_t attempt, std::uint64_t salt = 0) {
  return splitmix64(step * 0x9E3779B97F4A7C15ULL ^ (attempt + 1) ^ (salt << 48));
}

void check_stagger_inputs(double eps, const StaggerOptions& opt) {
  if (!(eps > 0)) throw Error(Errc::InvalidParam, "eps must be > 0");
  if (opt.t_cap < 1) throw Error(Errc::InvalidParam, "t_cap must be >= 1");
}

}  // namespace

SaddleRun stagger_step(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& x0, int t_star,
                       double eps, std::size_t n_steps, std::uint64_t seed, const StaggerOptions& opt) {
  check_stagger_inputs(eps, opt);
  Stagger sg{system, region, eps, opt.eps_min > 0 ? opt.eps_min : eps * 1e-6, seed, opt.t_cap};
  SaddleRun run;
  HistoryVector x = x0;
  int t = sg.T(x);
  if (t <= t_star)
    throw Error(Errc::InvalidParam, "initial escape time " + std::to_string(t) + " does not exceed T*=" +
                                        std::to_string(t_star));
  for (std::size_t n = 0; n < n_steps; ++n) {
    double norm = 0;
    if (t <= t_star) {
      std::size_t a = 0;
      for (; a < opt.max_attempts; ++a) {
        double rn = 0;
        HistoryVector cand = sg.perturbed(x, stream_id(n, a), &rn);
        int tc = sg.T(cand);
        if (tc > t_star) {
          x = std::move(cand);
          t = tc;
          norm = rn;
          break;
        }
      }
      if (a == opt.max_attempts)
        throw Error(Errc::StaggerExhausted, "no successful stagger in " + std::to_string(a) + " attempts at step " +
                                                std::to_string(n));
      run.events.push_back({n, norm, a + 1});
    }
    run.states.push_back(x);
    run.escape.push_back(t);
    run.stagger_norm.push_back(norm);
    x = map_state(system, x);
    t = t > opt.t_cap ? sg.T(x) : t - 1;
  }
  return run;
}

SaddleRun modified_stagger_step(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& x0,
                                int t_star, double eps, std::size_t n_steps, std::uint64_t seed,
                                const StaggerOptions& opt) {
  check_stagger_inputs(eps, opt);
  if (opt.n_tries < 1) throw Error(Errc::InvalidParam, "n_tries must be >= 1");
  Stagger sg{system, region, eps, opt.eps_min > 0 ? opt.eps_min : eps * 1e-6, seed, opt.t_cap};
  SaddleRun run;
  std::vector<HistoryVector> bases;  // unperturbed images S(x_{n-1}); bases[0] = x0
  int t0 = sg.T(x0);
  if (t0 <= t_star)
    throw Error(Errc::InvalidParam, "initial escape time " + std::to_string(t0) + " does not exceed T*=" +
                                        std::to_string(t_star));
  HistoryVector base = x0;
  int t_base = t0;
  std::size_t n = 0;
  std::uint64_t salt = 0;
  while (n < n_steps) {
    HistoryVector x = base;
    int t = t_base;
    double norm = 0;
    std::size_t j = 1;
    bool found = false;
    for (;; ++j) {
      double rn = 0;
      HistoryVector cand = sg.perturbed(base, stream_id(n, j, salt), &rn);
      int tc = sg.T(cand);
      if (tc > t) {
        x = std::move(cand);
        t = tc;
        norm = rn;
        found = true;
        break;
      }
      if (t > t_star && j >= opt.n_tries) break;
      if (j >= opt.max_attempts) break;
    }
    if (t <= t_star) {
      // Dead end: revert to an earlier iterate and search it thoroughly.
      bool recovered = false;
      for (std::size_t d = 1; d <= opt.backtrack_depth && d <= n && !recovered; ++d) {
        std::size_t m = n - d;
        ++salt;
        for (std::size_t a = 0; a < opt.max_attempts; ++a) {
          double rn = 0;
          HistoryVector cand = sg.perturbed(bases[m], stream_id(m, a, salt), &rn);
          int tc = sg.T(cand);
          if (tc > std::max(run.escape[m], t_star)) {
            run.states.erase(run.states.begin() + static_cast<std::ptrdiff_t>(m), run.states.end());
            run.escape.resize(m);
            run.stagger_norm.resize(m);
            bases.erase(bases.begin() + static_cast<std::ptrdiff_t>(m) + 1, bases.end());
            while (!run.events.empty() && run.events.back().step >= m) run.events.pop_back();
            run.states.push_back(cand);
            run.escape.push_back(tc);
            run.stagger_norm.push_back(rn);
            run.events.push_back({m, rn, a + 1});
            ++run.backtracks;
            n = m + 1;
            base = map_state(system, cand);
            t_base = tc > opt.t_cap ? sg.T(base) : tc - 1;
            recovered = true;
            break;
          }
        }
      }
      if (!recovered)
        throw Error(Errc::StaggerExhausted, "no successful stagger at step " + std::to_string(n) +
                                                " after backtracking " + std::to_string(opt.backtrack_depth) +
                                                " iterates");
      continue;
    }
    bases.push_back(base);
    run.states.push_back(x);
    run.escape.push_back(t);
    run.stagger_norm.push_back(norm);
    if (found) run.events.push_back({n, norm, j});
    ++n;
    base = map_state(system, x);
    t_base = t > opt.t_cap ? sg.T(base) : t - 1;
  }
  return run;
}

WindowScan scan_template_matches(const SolutionPath& path, std::span<const AttractorTemplate> templates,
                                 double stride) {
  WindowScan scan;
  if (templates.empty()) return scan;
  const double w = classification_window(templates);
  auto n_win = static_cast<std::size_t>(std::llround(w / path.h)) + 1;
  auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(stride / path.h)));
  for (std::size_t end = n_win; end <= path.size(); end += step) {
    std::span<const double> window(path.x.data() + end - n_win, n_win);
    ++scan.windows;
    bool hit = false;
    for (const auto& t : templates) {
      double d = template_distance(t, window, path.h, INFINITY);
      scan.min_distance = std::min(scan.min_distance, d);
      if (d < t.tol) hit = true;
    }
    if (hit) ++scan.matched;
  }
  return scan;
}

}  // namespace delaydense
