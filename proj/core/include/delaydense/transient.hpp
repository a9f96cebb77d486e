#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "delaydense/dde.hpp"

namespace delaydense {

inline constexpr int kUnresolved = -1;

enum class AttractorKind { FixedPoint, Periodic, SaddlePeriodic };

std::string_view attractor_kind_name(AttractorKind kind) noexcept;
AttractorKind parse_attractor_kind(std::string_view name);

/// Reference solution used for classification and as an exclusion set.
struct AttractorTemplate {
  int label = 0;
  AttractorKind kind = AttractorKind::FixedPoint;
  double h = 1.0 / kDefaultMesh;
  double period = 0;            // 0 for fixed points
  std::vector<double> samples;  // x(k h), k = 0 .. period_samples(); one value for fixed points
  double tol = 0;               // match tolerance (sup norm)

  bool periodic() const noexcept { return kind != AttractorKind::FixedPoint; }
  double amplitude() const noexcept;
  /// Value at the given phase (periodic linear interpolation).
  double at(double phase) const noexcept;
  /// Number of sampling offsets in one period.
  std::size_t offsets() const noexcept;
  AttractorTemplate negated() const;
};

struct TemplateOptions {
  double t_settle = 300;     // integration time before extraction
  double window = 40;        // tail length searched for a period
  double min_period = 0.25;
  double rel_period_tol = 2e-3;  // sup |x(t) - x(t - p)| relative to the amplitude
  double match_factor = 0.05;    // tol = match_factor * max(amplitude, tol_floor)
  double tol_floor = 1.0;
  double fixed_point_amplitude = 1e-6;
  int n_mesh = kDefaultMesh;
};

/// Period detection on the tail of a path; NoConvergence when no period fits.
AttractorTemplate extract_template(const SolutionPath& path, int label, const TemplateOptions& opt = {});

AttractorTemplate template_from_family(const DelaySystem& system, const InitialFamily& family, int label,
                                       const TemplateOptions& opt = {});

/// Phase-aligned sup distance between a window sampled at step h and a template.
/// Offsets are scanned at the template sampling step; `bound` allows early exit.
double template_distance(const AttractorTemplate& tmpl, std::span<const double> window, double h,
                         double bound = std::numeric_limits<double>::infinity());

struct Rect {
  double a_lo = 0, a_hi = 1, b_lo = 0, b_hi = 1;
};

/// Integrates a coarse grid over rect, extracts templates and merges those
/// within matching tolerance. Labels are assigned in a deterministic order.
std::vector<AttractorTemplate> discover_templates(const DelaySystem& system, FamilyId family, const Rect& rect,
                                                  std::size_t grid, const TemplateOptions& opt = {});

/// Label of the template whose mirror x -> -x matches, or kUnresolved.
int mirror_label(std::span<const AttractorTemplate> templates, int label);

std::size_t index_of_label(std::span<const AttractorTemplate> templates, int label);

/// Window length needed to classify: twice the longest period (one delay unit minimum).
double classification_window(std::span<const AttractorTemplate> templates);

/// Unique template within tolerance of the path tail, or kUnresolved.
int classify_attractor(const SolutionPath& tail, std::span<const AttractorTemplate> templates);

/// Times are measured from the start of the state's window, so for an
/// initial function on [0, 1] they coincide with the integration time.
struct ResolveOptions {
  double t_max = 200;
  double check_every = 1.0;
  /// First classification time; defaults to the classification window.
  double t_first = 0;
};

struct Resolution {
  int label = kUnresolved;
  double t_resolved = 0;  // end of the first matching window
  double window = 0;
  /// Start of the first matching window, taken as the settling time.
  double settle_time() const noexcept { return t_resolved - window; }
};

Resolution resolve_state(const DelaySystem& system, const HistoryVector& start,
                         std::span<const AttractorTemplate> templates, const ResolveOptions& opt = {});
Resolution resolve_family(const DelaySystem& system, const InitialFamily& family,
                          std::span<const AttractorTemplate> templates, const ResolveOptions& opt = {},
                          int n_mesh = kDefaultMesh);

InitialFamily family_at(FamilyId family, double A, double B);

struct BasinRaster {
  Rect rect;
  std::size_t width = 0, height = 0;
  std::vector<int> labels;  // row-major, row 0 at b_hi

  double a_at(std::size_t col) const noexcept;
  double b_at(std::size_t row) const noexcept;
  int at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }
  std::vector<int> distinct_labels() const;
};

/// Per-pixel integrate-then-classify over pixel centres (parallel, deterministic).
BasinRaster basin_raster(const DelaySystem& system, FamilyId family, const Rect& rect, std::size_t width,
                         std::size_t height, std::span<const AttractorTemplate> templates,
                         const ResolveOptions& opt = {}, int n_mesh = kDefaultMesh);

/// Fraction of pixels whose label does not map to the mirror label of the
/// pixel at (-A, -B). Requires a rect symmetric about the origin.
double raster_asymmetry(const BasinRaster& raster, std::span<const AttractorTemplate> templates);

struct ParamPoint {
  double a = 0, b = 0;
};

struct BisectResult {
  ParamPoint a, b;
  int label_a = kUnresolved, label_b = kUnresolved;
  std::size_t iterations = 0;
  double t_max = 0;  // horizon in effect at the end
};

/// Bisection on the segment pa-pb to a straddling pair closer than eps.
/// LostClassification when a midpoint stays unresolved after one doubling of t_max.
BisectResult boundary_bisect(const DelaySystem& system, FamilyId family, ParamPoint pa, ParamPoint pb,
                             std::span<const AttractorTemplate> templates, double eps, ResolveOptions opt = {},
                             int n_mesh = kDefaultMesh);

/// Scans n points on pa-pb and returns the adjacent pair with different
/// resolved labels closest to `near` (parameter along the segment in [0, 1]).
std::pair<ParamPoint, ParamPoint> find_label_change(const DelaySystem& system, FamilyId family, ParamPoint pa,
                                                    ParamPoint pb, std::size_t n,
                                                    std::span<const AttractorTemplate> templates, double near = 0.5,
                                                    const ResolveOptions& opt = {}, int n_mesh = kDefaultMesh);

// Escape times on the discretized time-one map.

struct EscapeRegion {
  std::vector<AttractorTemplate> templates;
  std::vector<double> delta;  // exclusion radius per template
  double lo = -1e6, hi = 1e6;  // bounding box on sample values
};

EscapeRegion region_from_templates(std::vector<AttractorTemplate> templates, double delta, double lo = -1e6,
                                   double hi = 1e6);

/// Phase-aligned sup distance between a phase point and a template.
double state_distance(std::span<const double> state, double h, const AttractorTemplate& tmpl,
                      double bound = std::numeric_limits<double>::infinity());
bool in_region(std::span<const double> state, double h, const EscapeRegion& region);

/// min{n > 0 : S^n(x) outside R}; t_cap + 1 when the orbit stays inside.
int escape_time(const DelaySystem& system, const HistoryVector& state, const EscapeRegion& region, int t_cap);

struct StaggerEvent {
  std::size_t step = 0;
  double norm = 0;
  std::size_t tries = 0;
};

struct SaddleRun {
  std::vector<HistoryVector> states;  // x_n after any perturbation
  std::vector<int> escape;            // T(x_n); empty for straddle runs
  std::vector<double> stagger_norm;   // |x_n - S(x_{n-1})|_sup, 0 when unperturbed
  std::vector<StaggerEvent> events;
  std::size_t backtracks = 0;

  std::size_t size() const noexcept { return states.size(); }
  /// Concatenated solution x(t) over the run (right segments of each state).
  SolutionPath path() const;
};

struct StraddleOptions {
  ResolveOptions resolve;
};

SaddleRun straddle_orbit(const DelaySystem& system, const HistoryVector& xa, const HistoryVector& xb,
                         std::span<const AttractorTemplate> templates, double eps, std::size_t n_steps,
                         const StraddleOptions& opt = {});

struct PimOptions {
  std::size_t n_refine = 10;
  int t_cap = 200;
  std::size_t max_refinements = 200;
};

struct PimRefinement {
  std::size_t step = 0;
  double length = 0;
  int t_a = 0, t_b = 0, t_c = 0;
};

struct PimRun {
  SaddleRun run;
  std::vector<PimRefinement> refinements;
};

/// PIM triple iteration on the segment xa-xc with interior point xb.
PimRun pim_orbit(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& xa,
                 const HistoryVector& xb, const HistoryVector& xc, double eps, std::size_t n_steps,
                 const PimOptions& opt = {});

struct StaggerOptions {
  int t_cap = 200;
  double eps_min = 0;  // 0 selects eps * 1e-6
  std::size_t max_attempts = 2000;  // per mandatory search
  std::size_t n_tries = 5;          // modified method only
  std::size_t backtrack_depth = 5;  // modified method only
};

/// Random perturbation with |r|_2 < eps: uniform direction, log-uniform magnitude.
std::vector<double> stagger_perturbation(std::size_t dim, double eps, double eps_min, std::uint64_t seed,
                                         std::uint64_t stream);

SaddleRun stagger_step(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& x0, int t_star,
                       double eps, std::size_t n_steps, std::uint64_t seed, const StaggerOptions& opt = {});

SaddleRun modified_stagger_step(const DelaySystem& system, const EscapeRegion& region, const HistoryVector& x0,
                                int t_star, double eps, std::size_t n_steps, std::uint64_t seed,
                                const StaggerOptions& opt = {});

/// Template match counts over sliding windows of a run's solution path.
struct WindowScan {
  std::size_t windows = 0;
  std::size_t matched = 0;
  double min_distance = std::numeric_limits<double>::infinity();
};
WindowScan scan_template_matches(const SolutionPath& path, std::span<const AttractorTemplate> templates,
                                 double stride = 1.0);

}  // namespace delaydense
