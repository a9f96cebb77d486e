#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "delaydense/asymptotics.hpp"
#include "delaydense/cli.hpp"
#include "delaydense/density.hpp"
#include "delaydense/ergostats.hpp"
#include "delaydense/error.hpp"
#include "delaydense/format.hpp"
#include "delaydense/io.hpp"
#include "delaydense/transient.hpp"

namespace delaydense::cli {

namespace {

using Keys = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string join_paths(const std::vector<std::filesystem::path>& ps) {
  std::string out;
  for (const auto& p : ps) out += (out.empty() ? "" : ", ") + p.string();
  return out;
}

[[noreturn]] void invalid(std::string_view key, const std::string& why) {
  throw Error(Errc::ValidationError, std::string(key) + ": " + why);
}

std::size_t positive(const ExperimentConfig& c, std::string_view key, long long fallback = -1) {
  long long v = fallback < 0 ? c.integer(key) : c.integer_or(key, fallback);
  if (v < 1) invalid(key, "must be >= 1");
  return static_cast<std::size_t>(v);
}

// Model and initial data.

const Keys kModelKeys = {
    {"model", "mackey-glass | piecewise-constant | tent | linear-toy | quadratic-toy"},
    {"alpha", "model parameter"},
    {"beta", "model parameter"},
    {"n", "model parameter"},
    {"c", "model parameter"},
    {"x1", "model parameter"},
    {"x2", "model parameter"},
    {"epsilon", "model parameter (tent)"},
    {"mesh", "samples per delay interval (default 256)"},
};

Keys with(Keys a, const Keys& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

DelaySystem system_from(const ExperimentConfig& c) {
  ModelId id = parse_model(c.str("model"));
  ParamMap p;
  for (const char* k : {"alpha", "beta", "n", "c", "x1", "x2", "epsilon"})
    if (c.has(k)) p[k] = c.num(k);
  return make_system(id, std::move(p));
}

int mesh_from(const ExperimentConfig& c) {
  long long m = c.integer_or("mesh", kDefaultMesh);
  if (m < 2 || m > (1 << 20)) invalid("mesh", "must be in 2..2^20");
  return static_cast<int>(m);
}

struct Spec {
  std::string name;
  std::vector<double> args;
};

Spec parse_spec(const ExperimentConfig& c, std::string_view key, std::string fallback = {}) {
  std::string s = fallback.empty() ? c.str(key) : c.str_or(key, fallback);
  Spec out;
  auto colon = s.find(':');
  out.name = s.substr(0, colon);
  if (colon != std::string::npos) {
    ExperimentConfig tmp;
    tmp.set(std::string(key), s.substr(colon + 1), c.origin(key));
    out.args = tmp.list(key);
  }
  return out;
}

void expect_args(const Spec& s, std::string_view key, std::size_t n) {
  if (s.args.size() != n)
    invalid(key, "'" + s.name + "' takes " + std::to_string(n) + " value(s), got " + std::to_string(s.args.size()));
}

FamilyId family_id_of(const std::string& name, std::string_view key) {
  if (name == "const" || name == "constant") return FamilyId::Constant;
  if (name == "linear") return FamilyId::Linear;
  if (name == "sin" || name == "sinusoidal") return FamilyId::Sinusoidal;
  if (name == "ode") return FamilyId::OdeGenerated;
  invalid(key, "unknown family '" + name + "'");
}

// Full initial function: const:x0, linear:A,B, sin:A,B, ode:x0,g0,g1.
InitialFamily family_from(const ExperimentConfig& c, std::string_view key = "family") {
  Spec s = parse_spec(c, key);
  switch (family_id_of(s.name, key)) {
    case FamilyId::Constant:
      expect_args(s, key, 1);
      return InitialFamily::constant(s.args[0]);
    case FamilyId::Linear:
      expect_args(s, key, 2);
      return InitialFamily::linear(s.args[0], s.args[1]);
    case FamilyId::Sinusoidal:
      expect_args(s, key, 2);
      return InitialFamily::sinusoidal(s.args[0], s.args[1]);
    case FamilyId::OdeGenerated: {
      expect_args(s, key, 3);
      double g0 = s.args[1], g1 = s.args[2];
      return InitialFamily::ode(s.args[0], [g0, g1](double x) { return g0 + g1 * x; },
                                format_double(g0) + "+" + format_double(g1) + "x");
    }
  }
  invalid(key, "unsupported family");
}

// One-parameter family over x0: const, linear:B, sin:B, ode:g0,g1.
FamilyKind kind_from(const ExperimentConfig& c) {
  Spec s = parse_spec(c, "kind", "const");
  switch (family_id_of(s.name, "kind")) {
    case FamilyId::Constant:
      expect_args(s, "kind", 0);
      return FamilyKind::constant();
    case FamilyId::Linear:
      expect_args(s, "kind", 1);
      return FamilyKind::linear(s.args[0]);
    case FamilyId::Sinusoidal:
      expect_args(s, "kind", 1);
      return FamilyKind::sinusoidal(s.args[0]);
    case FamilyId::OdeGenerated:
      expect_args(s, "kind", 2);
      return FamilyKind::ode_linear(s.args[0], s.args[1]);
  }
  invalid("kind", "unsupported family");
}

Density1D rho0_from(const ExperimentConfig& c) {
  Spec s = parse_spec(c, "rho0");
  if (s.name != "uniform") invalid("rho0", "only uniform:lo,hi is supported");
  expect_args(s, "rho0", 2);
  if (!(s.args[0] < s.args[1])) invalid("rho0", "needs lo < hi");
  return Density1D::uniform(s.args[0], s.args[1], 1);
}

std::pair<double, double> range_of(const ExperimentConfig& c, std::string_view key) {
  auto v = c.list(key);
  if (v.size() != 2 || !(v[0] < v[1])) invalid(key, "expected lo,hi with lo < hi");
  return {v[0], v[1]};
}

// Edges from bins + range, or fitted to the data when no range is given.
std::vector<double> edges_from(const ExperimentConfig& c, std::span<const double> data, std::size_t default_bins,
                               std::string_view range_key = "range") {
  std::size_t bins = positive(c, "bins", static_cast<long long>(default_bins));
  if (c.has(range_key)) {
    auto [lo, hi] = range_of(c, range_key);
    return uniform_edges(lo, hi, bins);
  }
  return auto_edges(data, bins);
}

SeriesOptions series_from(const ExperimentConfig& c) {
  SeriesOptions o;
  o.n_samples = positive(c, "samples");
  o.burn_in = static_cast<std::size_t>(c.integer_or("burn_in", 0));
  o.h_sample = c.num_or("h_sample", 0.0);
  o.n_mesh = mesh_from(c);
  return o;
}

std::uint64_t seed_from(const ExperimentConfig& c, std::string_view key = "seed") {
  long long s = c.integer(key);
  if (s < 0) invalid(key, "must be non-negative");
  return static_cast<std::uint64_t>(s);
}

// Templates and saddle runs.

const Keys kTemplateKeys = {
    {"family", "initial family id: const | linear | sin"},
    {"templates", "attractor templates file (skips discovery)"},
    {"templates_out", "write discovered templates here"},
    {"rect", "A_lo,A_hi,B_lo,B_hi of the survey/raster rectangle"},
    {"grid", "survey grid per side for template discovery (default 16)"},
    {"t_max", "classification horizon (default 200)"},
};

Rect rect_from(const ExperimentConfig& c) {
  auto v = c.list("rect");
  if (v.size() != 4 || !(v[0] <= v[1]) || !(v[2] <= v[3])) invalid("rect", "expected A_lo,A_hi,B_lo,B_hi");
  return Rect{v[0], v[1], v[2], v[3]};
}

FamilyId family_id_from(const ExperimentConfig& c) { return family_id_of(parse_spec(c, "family").name, "family"); }

ParamPoint point_from(const ExperimentConfig& c, std::string_view key) {
  auto v = c.list(key);
  if (v.size() != 2) invalid(key, "expected A,B");
  return {v[0], v[1]};
}

ResolveOptions resolve_from(const ExperimentConfig& c) {
  ResolveOptions o;
  o.t_max = c.num_or("t_max", 200);
  if (!(o.t_max > 0)) invalid("t_max", "must be positive");
  return o;
}

std::vector<AttractorTemplate> templates_from(const ExperimentConfig& c, const DelaySystem& sys, FamilyId fam,
                                              bool& discovered) {
  discovered = !c.has("templates");
  if (!discovered) {
    auto p = c.path("templates");
    if (!std::filesystem::exists(p)) invalid("templates", "file not found: " + p.string());
    return read_templates(p);
  }
  TemplateOptions o;
  o.n_mesh = mesh_from(c);
  return discover_templates(sys, fam, rect_from(c), positive(c, "grid", 16), o);
}

void maybe_write_templates(const ExperimentConfig& c, std::string_view sub, bool discovered,
                           std::span<const AttractorTemplate> ts, std::vector<std::filesystem::path>& written) {
  if (!c.has("templates_out")) return;
  if (!discovered) invalid("templates_out", "templates were read from a file");
  auto p = c.path("templates_out");
  write_templates(p, make_header(sub, c), ts);
  written.push_back(p);
}

const Keys kSaddleKeys = with(kTemplateKeys, {
    {"method", "pipeline | stagger | modified | straddle | pim (default pipeline)"},
    {"start", "A,B of the initial function (straddle/pim: first endpoint)"},
    {"mid", "A,B of the interior point (pim)"},
    {"end", "A,B of the second endpoint (straddle/pim)"},
    {"t_star", "escape-time floor T*"},
    {"eps", "perturbation bound (Euclidean norm) or pseudo-orbit tolerance"},
    {"eps_min", "smallest perturbation magnitude (default eps*1e-6)"},
    {"delta", "exclusion radius around templates"},
    {"steps", "map iterates"},
    {"orbit_steps", "pipeline: unmodified iterates before extracting the orbit (default 800)"},
    {"orbit_seed", "pipeline: seed of the unmodified run (default: seed)"},
    {"orbit_out", "pipeline: write the extracted saddle orbit template here"},
    {"exclude", "additional templates file added to the exclusion set"},
    {"n_tries", "modified method: retries before backtracking (default 5)"},
    {"t_cap", "escape-time cap (default 200)"},
    {"max_attempts", "perturbation draws per mandatory search (default 2000)"},
});

struct SaddleSetup {
  std::optional<DelaySystem> sys;
  std::vector<AttractorTemplate> templates;
  bool discovered = false;
  std::optional<AttractorTemplate> orbit;
  SaddleRun run;
};

SaddleSetup run_saddle(const ExperimentConfig& c) {
  SaddleSetup s;
  s.sys = system_from(c);
  const DelaySystem& sys = *s.sys;
  const int mesh = mesh_from(c);
  const FamilyId fam = family_id_from(c);
  s.templates = templates_from(c, sys, fam, s.discovered);
  auto state_at = [&](std::string_view key) {
    auto p = point_from(c, key);
    return initial_history(family_at(fam, p.a, p.b), mesh);
  };
  const std::string method = c.str_or("method", "pipeline");
  const double eps = c.num("eps");
  if (!(eps > 0)) invalid("eps", "must be positive");
  const std::size_t steps = positive(c, "steps");

  if (method == "straddle") {
    StraddleOptions o;
    o.resolve = resolve_from(c);
    s.run = straddle_orbit(sys, state_at("start"), state_at("end"), s.templates, eps, steps, o);
    return s;
  }

  std::vector<AttractorTemplate> excluded = s.templates;
  if (c.has("exclude")) {
    for (auto t : read_templates(c.path("exclude"))) {
      t.label = static_cast<int>(excluded.size());
      excluded.push_back(std::move(t));
    }
  }
  const double delta = c.num("delta");
  if (!(delta > 0)) invalid("delta", "must be positive");

  if (method == "pim") {
    PimOptions o;
    o.t_cap = static_cast<int>(c.integer_or("t_cap", 200));
    auto region = region_from_templates(excluded, delta);
    s.run = pim_orbit(sys, region, state_at("start"), state_at("mid"), state_at("end"), eps, steps, o).run;
    return s;
  }

  StaggerOptions o;
  o.t_cap = static_cast<int>(c.integer_or("t_cap", 200));
  o.eps_min = c.num_or("eps_min", 0.0);
  o.max_attempts = positive(c, "max_attempts", 2000);
  o.n_tries = positive(c, "n_tries", 5);
  const int t_star = static_cast<int>(c.integer("t_star"));
  const std::uint64_t seed = seed_from(c);
  const auto x0 = state_at("start");

  if (method == "stagger") {
    s.run = stagger_step(sys, region_from_templates(excluded, delta), x0, t_star, eps, steps, seed, o);
  } else if (method == "modified") {
    s.run = modified_stagger_step(sys, region_from_templates(excluded, delta), x0, t_star, eps, steps, seed, o);
  } else if (method == "pipeline") {
    const std::uint64_t orbit_seed = c.has("orbit_seed") ? seed_from(c, "orbit_seed") : seed;
    auto first = stagger_step(sys, region_from_templates(excluded, delta), x0, t_star, eps,
                              positive(c, "orbit_steps", 800), orbit_seed, o);
    TemplateOptions to;
    to.n_mesh = mesh;
    AttractorTemplate orbit = extract_template(first.path(), static_cast<int>(excluded.size()), to);
    orbit.kind = AttractorKind::SaddlePeriodic;
    s.orbit = orbit;
    excluded.push_back(orbit);
    s.run = modified_stagger_step(sys, region_from_templates(excluded, delta), x0, t_star, eps, steps, seed, o);
  } else {
    invalid("method", "unknown method '" + method + "'");
  }
  return s;
}

std::string run_stats(const SaddleRun& run) {
  std::string out = std::to_string(run.size()) + " states";
  if (!run.escape.empty())
    out += ", min escape time " + std::to_string(*std::min_element(run.escape.begin(), run.escape.end()));
  out += ", " + std::to_string(run.events.size()) + " staggers";
  return out;
}

// Subcommands.

int cmd_simulate(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto fam = family_from(c);
  double t_end = c.num("t_end");
  auto path = integrate(sys, fam, t_end, mesh_from(c));
  auto out = c.path("out");
  write_solution_csv(out, make_header("simulate", c), path);
  summary = "simulate: " + std::to_string(path.size()) + " samples to t=" + fmt(path.t_end()) + "; wrote " + out.string();
  return 0;
}

int cmd_density(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto rho0 = rho0_from(c);
  auto kind = kind_from(c);
  double t = c.num("t");
  auto values = ensemble_values(sys, rho0, kind, t, positive(c, "samples"), seed_from(c), mesh_from(c));
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) throw Error(Errc::Overflow, "every ensemble member overflowed");
  auto edges = edges_from(c, finite, 100);
  std::size_t outside = 0;
  auto rho = histogram(finite, edges, &outside);
  auto out = c.path("out");
  write_density_csv(out, make_header("density", c), rho);
  summary = "density: " + std::to_string(finite.size()) + " members (" + std::to_string(values.size() - finite.size()) +
            " overflowed, " + std::to_string(outside) + " out of range), mean " + fmt(rho.mean()) + "; wrote " +
            out.string();
  return 0;
}

int cmd_plmap(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto rho0 = rho0_from(c);
  auto kind = kind_from(c);
  double t = c.num("t");
  auto mesh_x = uniform_edges(rho0.lo(), rho0.hi(), positive(c, "nodes", 1000));
  auto map = build_pl_map(sys, kind, mesh_x, t, mesh_from(c));
  auto edges = edges_from(c, map.mesh_y, 100);
  PlPfOptions o;
  o.strict = c.flag_or("strict", false);
  auto rho = apply_pl_pf(map, rho0, edges, o);
  std::vector<std::filesystem::path> written{c.path("out")};
  if (c.has("map_out")) {
    CsvWriter w(make_header("plmap", c), "x0,x_t");
    for (std::size_t i = 0; i < map.mesh_x.size(); ++i) {
      w.cell(map.mesh_x[i]).cell(map.mesh_y[i]);
      w.end_row();
    }
    w.save(c.path("map_out"));
    written.push_back(c.path("map_out"));
  }
  write_density_csv(written[0], make_header("plmap", c), rho);
  summary = "plmap: " + std::to_string(map.mesh_x.size() - 1) + " segments at t=" + fmt(t) + ", mass " +
            fmt(rho.total_mass()) + "; wrote " + join_paths(written);
  return 0;
}

int cmd_support_curve(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto rho0 = rho0_from(c);
  auto kind = kind_from(c);
  double t = c.num("t");
  auto nodes = uniform_edges(rho0.lo(), rho0.hi(), positive(c, "nodes", 1000));
  auto curve = track_support_curve(sys, kind, nodes, t, mesh_from(c), static_cast<int>(c.integer_or("delays", -1)),
                                   &rho0);
  std::vector<std::filesystem::path> written{c.path("out")};
  if (c.has("hist_out")) {
    std::vector<double> y0;
    for (std::size_t i = 0; i < curve.size(); ++i) y0.push_back(curve.y0(i));
    auto edges = edges_from(c, y0, 100);
    write_density_csv(c.path("hist_out"), make_header("support-curve", c), support_curve_histogram(curve, edges));
    written.push_back(c.path("hist_out"));
  }
  write_support_curve_csv(written[0], make_header("support-curve", c), curve);
  summary = "support-curve: " + std::to_string(curve.size()) + " nodes at t=" + fmt(t) + "; wrote " + join_paths(written);
  return 0;
}

int cmd_hist(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto series = generate_series(sys, family_from(c), series_from(c));
  auto edges = edges_from(c, series.samples(), 100);
  std::size_t outside = 0;
  auto rho = histogram(series.samples(), edges, &outside);
  auto out = c.path("out");
  write_density_csv(out, make_header("hist", c), rho);
  summary = "hist: " + std::to_string(series.samples().size()) + " samples, mean " + fmt(rho.mean()) + ", std " +
            fmt(std::sqrt(rho.variance())) + "; wrote " + out.string();
  return 0;
}

int cmd_trace2d(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto pairs = generate_pairs(sys, family_from(c), series_from(c));
  auto el = edges_from(c, pairs.lag, 100, "range_lag");
  auto ec = edges_from(c, pairs.cur, 100, "range_cur");
  auto h = histogram2d(pairs, el, ec);
  auto out = c.path("out");
  write_histogram2d_pgm(out, make_header("trace2d", c), h);
  summary = "trace2d: " + std::to_string(h.in_range) + " pairs in range, " + std::to_string(h.out_of_range) +
            " outside; wrote " + out.string();
  return 0;
}

int cmd_ulam(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto series = generate_series(sys, family_from(c), series_from(c));
  auto edges = edges_from(c, series.samples(), 100);
  auto P = ulam_matrix(series, edges);
  auto occ = occupation_histogram(series, edges);
  double circ = l1_norm_diff(P.apply(occ), occ);
  std::vector<std::filesystem::path> written{c.path("out")};
  std::string extra;
  if (c.has("stationary_out")) {
    auto st = stationary_vector(P);
    auto as_density = [&](const std::vector<double>& m) { return Density1D::from_masses(edges, m); };
    std::vector<std::string> names{"stationary", "occupation"};
    std::vector<Density1D> ds{as_density(st.p), as_density(occ)};
    write_densities_csv(c.path("stationary_out"), make_header("ulam", c), names, ds);
    written.push_back(c.path("stationary_out"));
    extra = ", stationary-vs-occupation L1 " + fmt(l1_norm_diff(st.p, occ), 3);
  }
  write_transition_csv(written[0], make_header("ulam", c), P);
  summary = "ulam: r=" + std::to_string(P.r) + ", |P h - h|_1 = " + fmt(circ, 3) + " (bound r/M = " +
            fmt(static_cast<double>(P.r) / static_cast<double>(series.samples().size()), 3) + ")" + extra +
            "; wrote " + join_paths(written);
  return 0;
}

int cmd_scpf(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  auto range = c.list_or("range", {-1.0, 1.2});
  if (range.size() != 2 || !(range[0] < range[1])) invalid("range", "expected lo,hi with lo < hi");
  const double lo = range[0], hi = range[1];
  double h = c.num_or("dt", 0.05);
  auto op = ScpfOperator::build(scpf_feedback(sys), h, lo, hi, positive(c, "bins", 513));
  Spec init = parse_spec(c, "init", "uniform:-1,1");
  if (init.name != "uniform") invalid("init", "only uniform:lo,hi is supported");
  expect_args(init, "init", 2);
  std::vector<double> u(op.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (op.node(i) >= init.args[0] && op.node(i) <= init.args[1]) ? 1.0 : 0.0;
  auto d = op.make_density(u);
  d.normalize();
  auto steps = op.iterate(d, positive(c, "iterations", 500));
  std::vector<std::filesystem::path> written{c.path("out")};
  if (c.has("density_out")) {
    write_density_csv(c.path("density_out"), make_header("scpf", c), steps.back().u);
    written.push_back(c.path("density_out"));
  }
  write_scpf_csv(written[0], make_header("scpf", c), steps);
  summary = "scpf: " + std::to_string(steps.size()) + " iterations, mean " + fmt(steps.back().mean) + ", std " +
            fmt(steps.back().stddev, 3) + "; wrote " + join_paths(written);
  return 0;
}

int cmd_oracle_quadmap(const ExperimentConfig& c, std::string& summary) {
  auto edges = uniform_edges(0, 1, positive(c, "bins", 4000));
  auto f = Density1D::uniform(0, 1, edges.size() - 1);
  std::size_t n = static_cast<std::size_t>(c.integer_or("steps", 6));
  for (std::size_t k = 0; k < n; ++k) f = quadratic_map_pf(f);
  auto inv = quadratic_map_invariant(edges);
  double l1 = l1_distance(f, inv, 0.01, 0.99);
  auto out = c.path("out");
  std::vector<std::string> names{"iterate", "invariant"};
  std::vector<Density1D> ds{f, inv};
  write_densities_csv(out, make_header("oracle-quadmap", c), names, ds);
  summary = "oracle-quadmap: L1 on [0.01,0.99] after " + std::to_string(n) + " steps = " + fmt(l1, 4) + "; wrote " +
            out.string();
  return 0;
}

int cmd_kaplan_yorke(const ExperimentConfig& c, std::string& summary) {
  auto l = c.list("lambda");
  auto digits = c.integer_or("digits", 2);
  if (digits < 0 || digits > 17) invalid("digits", "must be in 0..17");
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(static_cast<int>(digits));
  s << kaplan_yorke(l);
  summary = s.str();
  return 0;
}

int cmd_basin(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  const FamilyId fam = family_id_from(c);
  bool discovered = false;
  auto ts = templates_from(c, sys, fam, discovered);
  const Rect rect = rect_from(c);
  auto r = basin_raster(sys, fam, rect, positive(c, "width"), positive(c, "height"), ts, resolve_from(c), mesh_from(c));
  std::vector<std::filesystem::path> written;
  maybe_write_templates(c, "basin", discovered, ts, written);
  auto out = c.path("out");
  auto sidecar = c.has("labels_out") ? c.path("labels_out") : std::filesystem::path(out.string() + ".labels.csv");
  const auto header = make_header("basin", c);
  write_raster_pgm(out, sidecar, header, r, ts);
  written.push_back(out);
  written.push_back(sidecar);
  if (c.has("csv_out")) {
    write_raster_csv(c.path("csv_out"), header, r);
    written.push_back(c.path("csv_out"));
  }
  std::size_t attractors = 0, unresolved = 0;
  for (int l : r.distinct_labels()) attractors += l != kUnresolved;
  for (int l : r.labels) unresolved += l == kUnresolved;
  std::string sym;
  if (sys.odd_symmetric() && rect.a_lo == -rect.a_hi && rect.b_lo == -rect.b_hi)
    sym = ", mirror mismatch " + fmt(100 * raster_asymmetry(r, ts), 3) + "%";
  summary = "basin: " + std::to_string(ts.size()) + " templates, " + std::to_string(attractors) + " labels present, " +
            std::to_string(unresolved) + " unresolved pixels" + sym + "; wrote " + join_paths(written);
  return 0;
}

int cmd_bisect(const ExperimentConfig& c, std::string& summary) {
  auto sys = system_from(c);
  const FamilyId fam = family_id_from(c);
  const int mesh = mesh_from(c);
  bool discovered = false;
  auto ts = templates_from(c, sys, fam, discovered);
  auto ro = resolve_from(c);
  ParamPoint pa = point_from(c, "from"), pb = point_from(c, "to");
  if (auto n = c.integer_or("scan", 0); n > 0) {
    if (n < 2) invalid("scan", "needs at least 2 points");
    std::tie(pa, pb) = find_label_change(sys, fam, pa, pb, static_cast<std::size_t>(n), ts, c.num_or("near", 0.5), ro, mesh);
  }
  double eps = c.num_or("eps", 1e-6);
  auto res = boundary_bisect(sys, fam, pa, pb, ts, eps, ro, mesh);
  ro.t_max = res.t_max;
  auto ra = resolve_family(sys, family_at(fam, res.a.a, res.a.b), ts, ro, mesh);
  auto rb = resolve_family(sys, family_at(fam, res.b.a, res.b.b), ts, ro, mesh);
  std::vector<std::filesystem::path> written;
  maybe_write_templates(c, "bisect", discovered, ts, written);
  if (c.has("out")) {
    CsvWriter w(make_header("bisect", c), "endpoint,A,B,label,settle_time");
    w.cell("a").cell(res.a.a).cell(res.a.b).cell(static_cast<long long>(res.label_a)).cell(ra.settle_time());
    w.end_row();
    w.cell("b").cell(res.b.a).cell(res.b.b).cell(static_cast<long long>(res.label_b)).cell(rb.settle_time());
    w.end_row();
    w.save(c.path("out"));
    written.push_back(c.path("out"));
  }
  summary = "bisect: A=" + format_double(res.a.a) + " B=" + format_double(res.a.b) + " (label " +
            std::to_string(res.label_a) + ", settles at t=" + fmt(ra.settle_time(), 4) + ") | A=" +
            format_double(res.b.a) + " B=" + format_double(res.b.b) + " (label " + std::to_string(res.label_b) +
            ", settles at t=" + fmt(rb.settle_time(), 4) + ") after " + std::to_string(res.iterations) + " halvings";
  if (!written.empty()) summary += "; wrote " + join_paths(written);
  return 0;
}

int cmd_saddle(const ExperimentConfig& c, std::string& summary) {
  auto s = run_saddle(c);
  std::vector<std::filesystem::path> written;
  maybe_write_templates(c, "saddle", s.discovered, s.templates, written);
  auto out = c.path("out");
  if (c.has("orbit_out") && !s.orbit) invalid("orbit_out", "only the pipeline method extracts an orbit");
  const auto header = make_header("saddle", c);
  if (s.orbit) {
    if (c.has("orbit_out")) {
      write_templates(c.path("orbit_out"), header, std::span(&*s.orbit, 1));
      written.push_back(c.path("orbit_out"));
    }
  }
  write_saddle_run_csv(out, header, s.run);
  written.push_back(out);
  auto scan = scan_template_matches(s.run.path(), s.templates);
  summary = "saddle: " + run_stats(s.run) + (s.orbit ? ", excluded orbit period " + fmt(s.orbit->period, 5) : "") +
            ", template matches " + std::to_string(scan.matched) + "/" + std::to_string(scan.windows) + "; wrote " +
            join_paths(written);
  return 0;
}

const Keys kLyapunovKeys = {
    {"source", "saddle | trajectory (default saddle)"},
    {"t_end", "trajectory: integration time"},
    {"discard", "trajectory: initial time dropped (default 0)"},
    {"k", "number of exponents (default 5)"},
    {"renorm_every", "map steps between re-orthonormalizations (default 1)"},
    {"warmup", "map steps before averaging (default 10)"},
    {"tangent", "variational | fd (default variational)"},
    {"fd_rel_delta", "finite-difference step relative to |x| (default 1e-6)"},
};

SolutionPath trajectory_from(const ExperimentConfig& c, const DelaySystem& sys) {
  double t_end = c.num("t_end"), discard = c.num_or("discard", 0);
  if (!(discard >= 0 && discard < t_end)) invalid("discard", "must be in [0, t_end)");
  auto p = integrate(sys, family_from(c), t_end, mesh_from(c));
  return discard > 0 ? p.tail(p.t_end() - (1 + discard)) : p;
}

int cmd_lyapunov(const ExperimentConfig& c, std::string& summary) {
  LyapunovOptions o;
  o.k = static_cast<std::size_t>(c.integer_or("k", 5));
  o.renorm_every = positive(c, "renorm_every", 1);
  o.warmup = static_cast<std::size_t>(c.integer_or("warmup", 10));
  o.seed = seed_from(c);
  auto mode = c.str_or("tangent", "variational");
  if (mode == "fd") o.mode = TangentMode::FiniteDifference;
  else if (mode != "variational") invalid("tangent", "expected variational or fd");
  o.fd_rel_delta = c.num_or("fd_rel_delta", 1e-6);

  LyapunovSpectrum spec;
  std::vector<std::filesystem::path> written;
  auto source = c.str_or("source", "saddle");
  if (source == "saddle") {
    auto s = run_saddle(c);
    maybe_write_templates(c, "lyapunov", s.discovered, s.templates, written);
    spec = lyapunov_spectrum(*s.sys, s.run, o);
  } else if (source == "trajectory") {
    auto sys = system_from(c);
    spec = lyapunov_spectrum(sys, trajectory_from(c, sys), o);
  } else {
    invalid("source", "expected saddle or trajectory");
  }
  std::string ky;
  try {
    ky = fmt(kaplan_yorke(spec.exponents), 4);
  } catch (const Error& e) {
    if (e.code() != Errc::Undefined) throw;
    ky = "undefined";
  }
  auto out = c.path("out");
  write_spectrum_csv(out, make_header("lyapunov", c), spec);
  written.push_back(out);
  std::string list;
  for (double l : spec.exponents) list += (list.empty() ? "" : " ") + fmt(l, 4);
  summary = "lyapunov: " + list + " bits/time, Kaplan-Yorke " + ky + "; wrote " + join_paths(written);
  return 0;
}

const Keys kCorrKeys = {
    {"input", "points CSV (one point per line); skips the run"},
    {"lags", "delay-embedding lags in delays (default -1,0,-0.5)"},
    {"stride", "embedding stride in time units (default 0.125)"},
    {"points_out", "write the embedded point cloud here"},
    {"r_min", "smallest radius (default 1e-3)"},
    {"r_max", "largest radius (default 2)"},
    {"n_r", "number of log-spaced radii (default 30)"},
    {"theiler", "Theiler window in points (default 10)"},
    {"slope_tolerance", "relative spread of local slopes in the fit window (default 0.15)"},
};

int cmd_corrdim(const ExperimentConfig& c, std::string& summary) {
  PointCloud cloud;
  std::vector<std::filesystem::path> written;
  if (c.has("input")) {
    auto p = c.path("input");
    if (!std::filesystem::exists(p)) invalid("input", "file not found: " + p.string());
    cloud = read_point_cloud(p);
  } else {
    auto lags = c.list_or("lags", {-1, 0, -0.5});
    double stride = c.num_or("stride", 0.125);
    auto source = c.str_or("source", "saddle");
    if (source == "saddle") {
      auto s = run_saddle(c);
      maybe_write_templates(c, "corrdim", s.discovered, s.templates, written);
      cloud = delay_embed(s.run.path(), lags, stride);
    } else if (source == "trajectory") {
      auto sys = system_from(c);
      cloud = delay_embed(trajectory_from(c, sys), lags, stride);
    } else {
      invalid("source", "expected saddle or trajectory");
    }
  }
  CorrelationOptions o;
  o.theiler = static_cast<std::size_t>(c.integer_or("theiler", 10));
  o.slope_tolerance = c.num_or("slope_tolerance", 0.15);
  auto cd = correlation_dimension(cloud, c.num_or("r_min", 1e-3), c.num_or("r_max", 2), positive(c, "n_r", 30), o);
  const auto header = make_header("corrdim", c);
  if (c.has("points_out")) {
    std::string cols;
    for (std::size_t d = 0; d < cloud.dim; ++d) cols += (d ? ",x" : "x") + std::to_string(d);
    CsvWriter w(header, cols);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (std::size_t d = 0; d < cloud.dim; ++d) w.cell(cloud.point(i)[d]);
      w.end_row();
    }
    w.save(c.path("points_out"));
    written.push_back(c.path("points_out"));
  }
  auto out = c.path("out");
  write_correlation_csv(out, header, cd);
  written.push_back(out);
  summary = "corrdim: " + std::to_string(cloud.size()) + " points, dimension " + fmt(cd.dimension, 4) +
            " over r in [" + fmt(cd.r[cd.fit_lo], 3) + ", " + fmt(cd.r[cd.fit_hi], 3) + "]; wrote " +
            join_paths(written);
  return 0;
}

const Keys kSeriesKeys = {
    {"family", "initial function, e.g. const:0.5, linear:A,B, sin:A,B, ode:x0,g0,g1"},
    {"samples", "number of recorded samples"},
    {"burn_in", "leading samples excluded from statistics (default 0)"},
    {"h_sample", "sampling interval, a multiple of 1/mesh (default 1/mesh)"},
    {"bins", "histogram bins (default 100)"},
    {"range", "lo,hi of the histogram (default: fitted to the data)"},
};

const Keys kEnsembleKeys = {
    {"rho0", "initial density, uniform:lo,hi"},
    {"kind", "one-parameter family over x0: const, linear:B, sin:B, ode:g0,g1 (default const)"},
    {"t", "evaluation time"},
    {"bins", "output bins (default 100)"},
    {"range", "lo,hi of the output grid (default: fitted)"},
};

}  // namespace

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> all = [] {
    const Keys out = {{"out", "output file"}};
    std::vector<Subcommand> v;
    v.push_back({"simulate", "Integrate one initial function and write x(t)",
                 with(with(kModelKeys, {{"family", "initial function, e.g. const:0.5 or linear:A,B"},
                                        {"t_end", "final time"}}),
                      out),
                 false, cmd_simulate});
    v.push_back({"density", "Ensemble histogram of x(t) for initial values drawn from rho0",
                 with(with(kModelKeys, kEnsembleKeys), with({{"samples", "ensemble size"}, {"seed", "RNG seed"}}, out)),
                 true, cmd_density});
    v.push_back({"plmap", "Density at time t via the piecewise-linear solution map",
                 with(with(kModelKeys, kEnsembleKeys),
                      with({{"nodes", "map segments (default 1000)"},
                            {"strict", "raise on flat segments (default false)"},
                            {"map_out", "write the map nodes here"}},
                           out)),
                 false, cmd_plmap});
    v.push_back({"support-curve", "Track the density support curve with the method-of-steps field",
                 with(with(kModelKeys, kEnsembleKeys),
                      with({{"nodes", "curve nodes (default 1000)"},
                            {"delays", "delay coordinates tracked (default ceil(t))"},
                            {"hist_out", "write the weighted y0 histogram here"}},
                           out)),
                 false, cmd_support_curve});
    v.push_back({"hist", "Histogram of one long trajectory", with(with(kModelKeys, kSeriesKeys), out), false, cmd_hist});
    v.push_back({"trace2d", "2-D histogram of (x(t-1), x(t)) as a graymap",
                 with(with(kModelKeys, kSeriesKeys),
                      with({{"range_lag", "lo,hi of x(t-1)"}, {"range_cur", "lo,hi of x(t)"}}, out)),
                 false, cmd_trace2d});
    v.push_back({"ulam", "Ulam transition matrix from a trajectory",
                 with(with(kModelKeys, kSeriesKeys),
                      with({{"stationary_out", "write stationary vector and occupation histogram here"}}, out)),
                 false, cmd_ulam});
    v.push_back({"scpf", "Iterate the self-consistent transfer operator",
                 with(kModelKeys, with({{"dt", "Euler step of the discrete map (default 0.05)"},
                                        {"bins", "quadrature nodes (default 513)"},
                                        {"range", "lo,hi of the grid (default -1,1.2)"},
                                        {"init", "initial density, uniform:lo,hi (default uniform:-1,1)"},
                                        {"iterations", "number of iterations (default 500)"},
                                        {"density_out", "write the final density here"}},
                                       out)),
                 false, cmd_scpf});
    v.push_back({"basin", "Basin-of-attraction raster over a parameter rectangle",
                 with(with(kModelKeys, kTemplateKeys),
                      with({{"width", "raster columns"},
                            {"height", "raster rows"},
                            {"labels_out", "sidecar (default <out>.labels.csv)"},
                            {"csv_out", "write A,B,label rows here"}},
                           out)),
                 false, cmd_basin});
    v.push_back({"bisect", "Bisect to a straddling pair on a basin boundary",
                 with(with(kModelKeys, kTemplateKeys),
                      {{"from", "A,B"},
                       {"to", "A,B"},
                       {"scan", "label-change scan points on the segment first (default 0: off)"},
                       {"near", "preferred scan position in [0, 1] (default 0.5)"},
                       {"eps", "final pair distance (default 1e-6)"},
                       {"out", "optional CSV of the pair"}}),
                 false, cmd_bisect});
    v.push_back({"saddle", "Track a chaotic saddle",
                 with(with(kModelKeys, kSaddleKeys), with({{"seed", "RNG seed"}}, out)), true, cmd_saddle});
    v.push_back({"lyapunov", "Lyapunov spectrum along a saddle run or trajectory",
                 with(with(with(kModelKeys, kSaddleKeys), kLyapunovKeys), with({{"seed", "RNG seed"}}, out)), true,
                 cmd_lyapunov});
    v.push_back({"corrdim", "Correlation dimension of an embedded run or a point file",
                 with(with(with(kModelKeys, kSaddleKeys), kCorrKeys),
                      with({{"source", "saddle | trajectory (default saddle)"},
                            {"t_end", "trajectory: integration time"},
                            {"discard", "trajectory: initial time dropped"},
                            {"seed", "RNG seed"}},
                           out)),
                 false, cmd_corrdim});
    v.push_back({"oracle-quadmap", "Iterate the quadratic-map transfer operator from the uniform density",
                 with({{"bins", "bins on [0, 1] (default 4000)"}, {"steps", "iterations (default 6)"}}, out), false,
                 cmd_oracle_quadmap});
    v.push_back({"kaplan-yorke", "Kaplan-Yorke dimension of a spectrum",
                 {{"lambda", "comma-separated exponents, descending"}, {"digits", "decimals printed (default 2)"}},
                 false, cmd_kaplan_yorke});
    return v;
  }();
  return all;
}

}  // namespace delaydense::cli
