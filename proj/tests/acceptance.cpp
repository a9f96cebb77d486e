// Acceptance run: one line per criterion, exit status 1 if any criterion fails.
// Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "delaydense/asymptotics.hpp"
#include "delaydense/cli.hpp"
#include "delaydense/density.hpp"
#include "delaydense/ergostats.hpp"
#include "delaydense/error.hpp"
#include "delaydense/rng.hpp"
#include "delaydense/transient.hpp"

#include <fcntl.h>
#include <unistd.h>

using namespace delaydense;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DelaySystem mg_small() { return make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}}); }
DelaySystem mg_chaotic() {
  return make_system(ModelId::MackeyGlass, {{"alpha", 1 / 0.1625}, {"beta", 12 / 0.1625}, {"n", 10}});
}
DelaySystem pwc() {
  return make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}});
}
DelaySystem tent() { return make_system(ModelId::TentFeedback, {{"epsilon", 0.3}}); }

const Rect kPwcRect{0, 3, -4, 4};
const Rect kMgRect{-1.5, 1.5, -4, 4};

// Shared saddle runs (criteria 10, 12, 13).

struct PwcPipeline {
  std::vector<AttractorTemplate> survey;
  std::optional<AttractorTemplate> orbit;
  std::string orbit_error;
  SaddleRun first, run;
};

const std::vector<AttractorTemplate>& pwc_templates() {
  static const auto ts = discover_templates(pwc(), FamilyId::Linear, kPwcRect, 16);
  return ts;
}

const std::vector<AttractorTemplate>& mg_templates() {
  static const auto ts = discover_templates(mg_chaotic(), FamilyId::Linear, kMgRect, 16);
  return ts;
}

const PwcPipeline& pwc_pipeline() {
  static const PwcPipeline p = [] {
    PwcPipeline p;
    auto sys = pwc();
    p.survey = pwc_templates();
    StaggerOptions so;
    so.eps_min = 0.01;
    auto x0 = initial_history(InitialFamily::linear(0.013414726562, 1.870858));
    p.first = stagger_step(sys, region_from_templates(p.survey, 0.3), x0, 8, 1.0, 800, 7, so);
    try {
      auto orbit = extract_template(p.first.path(), static_cast<int>(p.survey.size()));
      orbit.kind = AttractorKind::SaddlePeriodic;
      p.orbit = orbit;
    } catch (const Error& e) {
      p.orbit_error = e.what();
      return p;
    }
    auto excluded = p.survey;
    excluded.push_back(*p.orbit);
    p.run = modified_stagger_step(sys, region_from_templates(excluded, 0.3), x0, 8, 1.0, 1000, 11, so);
    return p;
  }();
  return p;
}

const SaddleRun& mg_run() {
  static const SaddleRun run = [] {
    StaggerOptions so;
    so.eps_min = 0.003;
    auto x0 = initial_history(InitialFamily::linear(0.481970773688, -0.6));
    return modified_stagger_step(mg_chaotic(), region_from_templates(mg_templates(), 0.2), x0, 45, 0.1, 2000, 11,
                                 so);
  }();
  return run;
}

// Criteria.

Verdict quadmap_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  auto f = Density1D::uniform(0, 1, 4000);
  for (int i = 0; i < 6; ++i) f = quadratic_map_pf(f);
  double secs = seconds_since(t0);
  double l1 = l1_distance(f, quadratic_map_invariant(f.edges), 0.01, 0.99);
  return {l1 < 0.05 && secs < 1.0, fmt("L1 %.4f on [0.01,0.99] (< 0.05), %.3f s (< 1 s)", l1, secs)};
}

Verdict explicit_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  auto rho = Density1D::uniform(0, 1, 100);
  auto nodes = uniform_edges(0, 1, 999);
  double worst = 0;
  std::string where;
  auto track = [&](double l1, std::string label) {
    if (l1 > worst || where.empty()) {
      worst = std::max(worst, l1);
      where = std::move(label);
    }
  };
  for (double t : {1.25, 1.5, 1.75}) {
    for (double alpha : {1.0, -1.0}) {
      auto sys = make_system(ModelId::LinearToy, {{"alpha", alpha}});
      auto plm = build_pl_map(sys, FamilyKind::constant(), nodes, t, 1000);
      double b = linear_beta(alpha, t);
      auto grid = uniform_edges(std::min(0.0, b), std::max(0.0, b), 200);
      auto pl = apply_pl_pf(plm, rho, grid);
      auto exact = rebin(explicit_pf_linear(rho, alpha, t), grid);
      track(l1_distance(pl, exact), fmt("linear alpha=%g t=%g", alpha, t));
    }
    auto plm = build_pl_map(make_system(ModelId::QuadraticToy, {}), FamilyKind::constant(), nodes, t, 1000);
    // Image of [0,1] under x - (t-1)x^2; the fold value is the only singular point.
    double fold_x = 1 / (2 * (t - 1));
    double top = fold_x <= 1 ? fold_x / 2 : 1 - (t - 1);
    auto grid = uniform_edges(0, top, 200);
    auto pl = apply_pl_pf(plm, rho, grid);
    auto exact = explicit_pf_quadratic(rho, t, grid);
    double w = grid[1] - grid[0];
    double hi = fold_x <= 1 ? top - 2 * w : top;
    track(l1_distance(pl, exact, 0, hi), fmt("quadratic t=%g", t));
  }
  double secs = seconds_since(t0);
  return {worst <= 1e-2 && secs < 10, fmt("worst L1 %.2e at %s (<= 1e-2), %.2f s (< 10 s)", worst, where.c_str(), secs)};
}

Verdict ensemble_vs_operator() {
  auto t0 = std::chrono::steady_clock::now();
  auto sys = mg_small();
  auto rho = Density1D::uniform(0.3, 1.3, 100);
  const std::size_t n = 100000;
  double worst_z = 0, chi2 = 0;
  std::size_t dof = 0;
  std::string where;
  bool empty_ok = true;
  for (double t : {1.0, 2.0, 3.0}) {
    auto plm = build_pl_map(sys, FamilyKind::constant(), uniform_edges(0.3, 1.3, 999), t);
    auto [lo, hi] = std::minmax_element(plm.mesh_y.begin(), plm.mesh_y.end());
    auto grid = uniform_edges(*lo - 0.01, *hi + 0.01, 50);
    auto exact = transport_pl_mass(plm, rho, grid);
    auto ens = sample_ensemble(sys, rho, FamilyKind::constant(), t, n, 1, grid);
    for (std::size_t i = 0; i < grid.size() - 1; ++i) {
      double p = exact.mass(i), q = ens.mass(i);
      if (p <= 0) {
        empty_ok = empty_ok && q == 0;
        continue;
      }
      double z = std::abs(q - p) / std::sqrt(p * (1 - p) / static_cast<double>(n));
      chi2 += z * z;
      ++dof;
      if (z > worst_z) {
        worst_z = z;
        where = fmt("t=%g bin %zu", t, i);
      }
    }
  }
  double secs = seconds_since(t0);
  return {worst_z <= 3 && empty_ok && secs < 60,
          fmt("max |z| %.2f at %s (<= 3 sigma), chi2/dof %.2f over %zu bins, %.1f s (< 60 s)", worst_z,
              where.c_str(), chi2 / static_cast<double>(dof), dof, secs)};
}

Verdict sampling_formula() {
  auto n = sampling_requirement(0.01, 0.01);
  return {n == 3960000, fmt("sampling_requirement(0.01, 0.01) = %llu", static_cast<unsigned long long>(n))};
}

Verdict ulam_circularity() {
  SeriesOptions opt;
  opt.n_samples = 100000;
  auto series = generate_series(mg_small(), InitialFamily::constant(0.5), opt);
  auto edges = auto_edges(series.samples(), 100);
  auto P = ulam_matrix(series, edges);
  auto hist = occupation_histogram(series, edges);
  double d = l1_norm_diff(P.apply(hist), hist);
  double bound = static_cast<double>(P.r) / static_cast<double>(series.samples().size());
  return {d <= bound, fmt("|P hist - hist|_1 = %.2e (<= r/M = %.0e)", d, bound)};
}

Verdict tent_asymptotic() {
  auto t0 = std::chrono::steady_clock::now();
  auto edges = uniform_edges(-1, 1, 40);
  SeriesOptions opt;
  opt.burn_in = 10000;
  opt.n_samples = 1000000 + opt.burn_in;
  auto series = solution_histogram(tent(), InitialFamily::constant(0.5), opt, edges);
  auto ens = sample_ensemble(tent(), Density1D::uniform(-0.5, 0.9, 1), FamilyKind::constant(), 100, 10000, 3, edges);
  double l1 = l1_distance(series, ens);
  double secs = seconds_since(t0);
  return {l1 < 0.08 && secs < 600, fmt("L1 %.4f (< 0.08), %.1f s (< 600 s)", l1, secs)};
}

Verdict scpf_collapse() {
  auto t0 = std::chrono::steady_clock::now();
  auto op = ScpfOperator::build(scpf_feedback(tent()), 0.05, -1.0, 1.2, 513);
  std::vector<double> u(op.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::abs(op.node(i)) < 1 ? 0.5 : 0.0;
  auto steps = op.iterate(op.make_density(u), 500);
  const double target = 1 / 2.9;
  std::size_t first = 0;
  for (std::size_t k = 0; k < steps.size(); ++k)
    if (std::abs(steps[k].mean - target) < 0.01 && steps[k].stddev < 0.02) {
      first = k + 1;
      break;
    }
  double secs = seconds_since(t0);
  const auto& last = steps.back();
  return {first > 0 && secs < 60, fmt("collapsed at iteration %zu; after 500: mean %.5f (1/2.9 = %.5f), sd %.1e; %.1f s",
                                      first, last.mean, target, last.stddev, secs)};
}

Verdict multistability() {
  auto t0 = std::chrono::steady_clock::now();
  auto pr = basin_raster(pwc(), FamilyId::Linear, kPwcRect, 128, 128, pwc_templates());
  double t_pwc = seconds_since(t0);
  auto labels = pr.distinct_labels();
  std::size_t resolved = std::count_if(labels.begin(), labels.end(), [](int l) { return l != kUnresolved; });
  t0 = std::chrono::steady_clock::now();
  auto mr = basin_raster(mg_chaotic(), FamilyId::Linear, kMgRect, 128, 128, mg_templates());
  double t_mg = seconds_since(t0);
  double asym = raster_asymmetry(mr, mg_templates());
  return {resolved >= 4 && asym <= 0.01 && t_pwc < 1800 && t_mg < 1800,
          fmt("PWC %zu labels (>= 4), %.0f s; MG mirror mismatch %.2f%% (<= 1%%), %.0f s", resolved, t_pwc,
              100 * asym, t_mg)};
}

Verdict chaotic_transient() {
  auto t0 = std::chrono::steady_clock::now();
  auto sys = mg_chaotic();
  const auto& ts = mg_templates();
  ResolveOptions ro;
  ro.t_max = 400;
  ParamPoint pa{0.4, -0.6}, pb{0.6, -0.6};
  auto [a, b] = find_label_change(sys, FamilyId::Linear, pa, pb, 201, ts, (0.482417 - 0.4) / 0.2, ro);
  auto br = boundary_bisect(sys, FamilyId::Linear, a, b, ts, 1e-6, ro);
  ro.t_max = br.t_max;
  double settle = 0;
  ParamPoint best;
  for (auto p : {br.a, br.b}) {
    auto res = resolve_family(sys, InitialFamily::linear(p.a, p.b), ts, ro);
    if (res.label != kUnresolved && res.settle_time() > settle) {
      settle = res.settle_time();
      best = p;
    }
  }
  double secs = seconds_since(t0);
  return {settle >= 30 && secs < 300,
          fmt("unresolved for %.1f time units at A=%.9f B=%g (>= 30), %.0f s (< 300 s)", settle, best.a, best.b, secs)};
}

Verdict saddle_tracking() {
  auto t0 = std::chrono::steady_clock::now();
  const auto& p = pwc_pipeline();
  if (!p.orbit) return {false, "no periodic orbit extracted from the unmodified run: " + p.orbit_error};
  // The orbit must be new, i.e. not one of the surveyed attractors.
  bool fresh = true;
  for (const auto& t : p.survey) {
    std::vector<double> window(p.orbit->samples.begin(), p.orbit->samples.end());
    if (template_distance(t, window, p.orbit->h) <= t.tol) fresh = false;
  }
  auto all = p.survey;
  all.push_back(*p.orbit);
  auto scan = scan_template_matches(p.run.path(), all);
  int min_t = *std::min_element(p.run.escape.begin(), p.run.escape.end());
  double secs = seconds_since(t0);
  bool ok = fresh && p.run.size() >= 500 && min_t >= 8 && scan.matched == 0 && secs < 1800;
  return {ok, fmt("orbit period %.4f%s; modified run %zu iterates, min T %d (>= 8), %zu/%zu windows matched, %.0f s",
                  p.orbit->period, fresh ? " (not in survey)" : " (already surveyed)", p.run.size(), min_t,
                  scan.matched, scan.windows, secs)};
}

Verdict kaplan_yorke_exact() {
  auto ky = [](std::vector<double> l) { return std::round(kaplan_yorke(l) * 100) / 100; };
  double a = ky({0.54, 0.00, -1.5, -8.2, -12}), b = ky({0.60, 0.00, -0.50, -3.1, -3.8});
  return {a == 2.36 && b == 3.03, fmt("%.2f and %.2f", a, b)};
}

Verdict lyapunov_properties() {
  auto check = [](const std::vector<double>& l, double lambda1, std::string& out) {
    std::size_t positive = 0, zero = 0;
    for (double v : l) {
      if (v > 0.1) ++positive;
      if (std::abs(v) <= 0.1) ++zero;
    }
    bool ok = positive == 1 && zero >= 1 && std::abs(l[0] - lambda1) <= 0.3;
    out += fmt("[%.3f %.3f %.2f %.2f %.2f] %zu positive, %zu near zero", l[0], l[1], l[2], l[3], l[4], positive, zero);
    return ok;
  };
  const auto& p = pwc_pipeline();
  if (!p.orbit) return {false, "PWC saddle run unavailable"};
  std::string detail = "PWC ";
  bool ok = check(lyapunov_spectrum(pwc(), p.run).exponents, 0.54, detail);
  detail += "; MG ";
  ok = check(lyapunov_spectrum(mg_chaotic(), mg_run()).exponents, 0.60, detail) && ok;
  return {ok, detail};
}

Verdict correlation_dimension_check() {
  CounterRng rng(5, 0);
  PointCloud circle{2, {}}, square{2, {}};
  for (std::uint64_t i = 0; i < 10000; ++i) {
    double th = 2 * std::numbers::pi * rng.uniform(i);
    circle.push(std::vector<double>{std::cos(th), std::sin(th)});
    square.push(std::vector<double>{rng.uniform(20000 + 2 * i), rng.uniform(20001 + 2 * i)});
  }
  double dc = correlation_dimension(circle, 1e-3, 2, 30).dimension;
  double ds = correlation_dimension(square, 1e-3, 2, 30).dimension;
  const std::vector<double> lags{-1, 0, -0.5};
  const auto& p = pwc_pipeline();
  if (!p.orbit) return {false, "PWC saddle run unavailable"};
  double dp = correlation_dimension(delay_embed(p.run.path(), lags, 0.125), 1e-3, 2, 30).dimension;
  double dm = correlation_dimension(delay_embed(mg_run().path(), lags, 0.125), 1e-3, 2, 30).dimension;
  bool ok = std::abs(dc - 1) <= 0.1 && std::abs(ds - 2) <= 0.1 && std::abs(dp - 1.96) <= 0.5 &&
            std::abs(dm - 2.24) <= 0.5;
  return {ok, fmt("circle %.3f, square %.3f, PWC saddle %.2f (1.96 +- 0.5), MG saddle %.2f (2.24 +- 0.5)", dc, ds, dp,
                  dm)};
}

// Determinism: the CLI runs behind criteria 3, 6, 8 and 10 at two worker counts.

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Verdict determinism() {
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"density", {"--model", "mackey-glass", "--alpha", "2", "--beta", "4", "--n", "10", "--rho0", "uniform:0.3,1.3",
                   "--t", "2", "--samples", "100000", "--bins", "50", "--seed", "1"}},
      {"hist", {"--model", "tent", "--epsilon", "0.3", "--family", "const:0.5", "--samples", "1010000", "--burn-in",
                "10000", "--bins", "40", "--range", "-1,1"}},
      {"density", {"--model", "tent", "--epsilon", "0.3", "--rho0", "uniform:-0.5,0.9", "--t", "100", "--samples",
                   "10000", "--bins", "40", "--range", "-1,1", "--seed", "3"}},
      {"basin", {"--model", "pwc", "--alpha", "3.25", "--c", "20.5", "--x1", "1", "--x2", "2", "--family", "linear",
                 "--rect", "0,3,-4,4", "--width", "128", "--height", "128"}},
      {"basin", {"--model", "mg", "--alpha", "6.153846153846154", "--beta", "73.84615384615384", "--n", "10",
                 "--family", "linear", "--rect", "-1.5,1.5,-4,4", "--width", "128", "--height", "128"}},
      {"saddle", {"--model", "pwc", "--alpha", "3.25", "--c", "20.5", "--x1", "1", "--x2", "2", "--family", "linear",
                  "--rect", "0,3,-4,4", "--start", "0.013414726562,1.870858", "--t-star", "8", "--eps", "1",
                  "--eps-min", "0.01", "--delta", "0.3", "--steps", "1000", "--orbit-seed", "7", "--seed", "11"}},
  };
  const fs::path root = fs::temp_directory_path() / "delaydense_acceptance";
  std::size_t files = 0, differing = 0;
  std::string failures;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4"}) {
      setenv("DELAYDENSE_THREADS", threads, 1);
      fs::path dir = root / (std::string("threads") + threads) / std::to_string(i);
      fs::remove_all(dir);
      fs::create_directories(dir);
      std::vector<std::string> args{"delaydense", runs[i].first};
      args.insert(args.end(), runs[i].second.begin(), runs[i].second.end());
      args.insert(args.end(), {"--out", (dir / "out").string()});
      // Keep the report to one line per criterion; the subcommand summaries go to /dev/null.
      std::fflush(stdout);
      int saved = dup(STDOUT_FILENO), null = open("/dev/null", O_WRONLY);
      dup2(null, STDOUT_FILENO);
      int code = cli::run(args);
      std::fflush(stdout);
      dup2(saved, STDOUT_FILENO);
      close(null);
      close(saved);
      if (code != 0) failures += fmt(" %s#%zu exited %d", runs[i].first.c_str(), i, code);
      std::string all;
      for (const auto& e : fs::directory_iterator(dir)) all += e.path().filename().string() + "\n" + slurp(e.path());
      outputs.push_back(std::move(all));
    }
    unsetenv("DELAYDENSE_THREADS");
    ++files;
    if (outputs[0] != outputs[1]) {
      ++differing;
      failures += " " + runs[i].first + "#" + std::to_string(i) + " differs";
    }
  }
  return {differing == 0 && failures.empty(),
          fmt("%zu/%zu runs identical at DELAYDENSE_THREADS=1 and 4%s", files - differing, files, failures.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  Verdict (*run)();
};

const Criterion kCriteria[] = {
    {1, "quadratic-map oracle", quadmap_oracle},
    {2, "explicit transfer-operator equivalence", explicit_equivalence},
    {3, "ensemble vs operator", ensemble_vs_operator},
    {4, "sampling formula", sampling_formula},
    {5, "Ulam circularity", ulam_circularity},
    {6, "asymptotic density agreement", tent_asymptotic},
    {7, "self-consistent operator collapse", scpf_collapse},
    {8, "multistability", multistability},
    {9, "chaotic transient", chaotic_transient},
    {10, "saddle tracking", saddle_tracking},
    {11, "Kaplan-Yorke dimension", kaplan_yorke_exact},
    {12, "Lyapunov properties", lyapunov_properties},
    {13, "correlation dimension", correlation_dimension_check},
    {14, "determinism across worker counts", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("[%s] #%d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
