#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace delaydense {

inline constexpr int kDefaultMesh = 256;
inline constexpr double kOverflowThreshold = 1e12;

enum class ModelId { MackeyGlass, PiecewiseConstant, TentFeedback, LinearToy, QuadraticToy, Custom };

std::string_view model_name(ModelId id) noexcept;
ModelId parse_model(std::string_view name);

using ParamMap = std::map<std::string, double, std::less<>>;

/// User-supplied right-hand side f(x, x_lag). The derivatives are only
/// needed for variational tangent propagation.
struct CustomModel {
  std::function<double(double, double)> f;
  std::function<double(double, double)> df_dx;
  std::function<double(double, double)> df_dlag;
  bool odd_symmetric = false;
};

/// A scalar DDE x'(t) = f(x(t), x(t-1)). The delay is fixed at one time unit.
class DelaySystem {
 public:
  /// Jump of f in its lag argument: f(x, y) increases by `jump` as y
  /// increases through `at`.
  struct LagJump {
    double at;
    double jump;
  };

  static DelaySystem make(ModelId model, ParamMap params);
  static DelaySystem custom(CustomModel model, ParamMap params = {});

  ModelId model() const noexcept { return model_; }
  const ParamMap& params() const noexcept { return params_; }
  double param(std::string_view key) const;
  double delay() const noexcept { return 1.0; }
  std::string describe() const;

  double rhs(double x, double lag) const noexcept {
    switch (model_) {
      case ModelId::MackeyGlass:
        return -a_ * x + b_ * lag / (1.0 + lag_power(lag));
      case ModelId::PiecewiseConstant:
        return -a_ * x + ((lag >= x1_ && lag <= x2_) ? c_ : 0.0);
      case ModelId::TentFeedback:
        return (-x + 1.0 - 1.9 * (lag < 0 ? -lag : lag)) / eps_;
      case ModelId::LinearToy:
        return a_ * lag;
      case ModelId::QuadraticToy:
        return -lag * lag;
      case ModelId::Custom:
        return custom_.f(x, lag);
    }
    return 0.0;
  }

  double d_state(double x, double lag) const;
  /// Classical derivative in the lag argument (zero between the jumps of a
  /// piecewise-constant feedback).
  double d_lag(double x, double lag) const;
  std::span<const LagJump> lag_jumps() const noexcept { return jumps_; }

  /// True when f(-x, -y) == -f(x, y) exactly.
  bool odd_symmetric() const noexcept;

  /// For models of the form x' = -alpha x + F(x_lag): alpha (0 for the toys).
  double decay_rate() const noexcept;
  double feedback(double lag) const noexcept;
  double feedback_slope(double lag) const noexcept;

 private:
  DelaySystem() = default;
  void validate_and_cache();

  double lag_power(double y) const noexcept {
    if (int_power_ > 0) {
      double result = 1.0, base = y;
      for (int e = int_power_; e > 0; e >>= 1) {
        if (e & 1) result *= base;
        base *= base;
      }
      return result;
    }
    return std::pow(y, n_);
  }

  ModelId model_ = ModelId::Custom;
  ParamMap params_;
  CustomModel custom_;
  std::vector<LagJump> jumps_;
  double a_ = 0, b_ = 0, n_ = 1, c_ = 0, x1_ = 0, x2_ = 0, eps_ = 1;
  int int_power_ = 0;
};

DelaySystem make_system(ModelId model, ParamMap params);

/// Discretized phase point: samples u_i = x(t_anchor - 1 + i/N), i = 0..N.
class HistoryVector {
 public:
  HistoryVector(std::vector<double> values, int n_mesh, double t_anchor);

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }
  int n_mesh() const noexcept { return n_mesh_; }
  double t_anchor() const noexcept { return t_anchor_; }
  double step() const noexcept { return 1.0 / n_mesh_; }
  double right() const noexcept { return values_.back(); }
  double left() const noexcept { return values_.front(); }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const HistoryVector&, const HistoryVector&) = default;

 private:
  std::vector<double> values_;
  int n_mesh_;
  double t_anchor_;
};

double sup_distance(std::span<const double> a, std::span<const double> b);
double euclidean_norm(std::span<const double> a);

enum class FamilyId { Constant, Linear, Sinusoidal, OdeGenerated };

std::string_view family_name(FamilyId id) noexcept;

/// Initial function on [0, 1].
struct InitialFamily {
  FamilyId id = FamilyId::Constant;
  double a = 0;  // x0 for Constant, A otherwise
  double b = 0;  // B for Linear/Sinusoidal
  std::function<double(double)> g;  // OdeGenerated: x' = g(x), x(0) = a
  std::string g_desc;

  static InitialFamily constant(double x0);
  static InitialFamily linear(double A, double B);
  static InitialFamily sinusoidal(double A, double B);
  static InitialFamily ode(double x0, std::function<double(double)> g, std::string desc = "custom");

  double x0() const noexcept { return a; }
  std::string describe() const;
};

/// One-parameter family x0 -> initial function with x(0) = x0.
struct FamilyKind {
  FamilyId id = FamilyId::Constant;
  double shape = 0;  // B for Linear/Sinusoidal
  std::function<double(double)> g;
  std::string g_desc;

  static FamilyKind constant() { return {}; }
  static FamilyKind linear(double slope) { return {FamilyId::Linear, slope, {}, {}}; }
  static FamilyKind sinusoidal(double b) { return {FamilyId::Sinusoidal, b, {}, {}}; }
  /// x' = g0 + g1 x on [0, 1].
  static FamilyKind ode_linear(double g0, double g1);

  InitialFamily at(double x0) const;
};

/// Uniformly sampled solution x(t0 + k h).
struct SolutionPath {
  double t0 = 0;
  double h = 1.0 / kDefaultMesh;
  std::vector<double> x;

  std::size_t size() const noexcept { return x.size(); }
  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * h; }
  double t_end() const noexcept { return x.empty() ? t0 : time(x.size() - 1); }
  /// Linear interpolation between samples; exact on mesh points.
  double value_at(double t) const;
  /// Last `duration` time units (rounded up to whole samples).
  SolutionPath tail(double duration) const;
};

HistoryVector initial_history(const InitialFamily& family, int n_mesh = kDefaultMesh);

/// x_{n+1} = x_n + h f(x_n, x_{n-N}); shifts the window by one sample.
HistoryVector euler_step(const DelaySystem& system, const HistoryVector& state);

/// N Euler steps: the discretized time-one map.
HistoryVector time_one_map(const DelaySystem& system, const HistoryVector& state);

/// In-place time-one map on a raw sample window of length N+1.
void time_one_map_inplace(const DelaySystem& system, std::span<double> values, std::vector<double>& scratch);

SolutionPath integrate(const DelaySystem& system, const InitialFamily& family, double t_end,
                       int n_mesh = kDefaultMesh);

/// Continue an integration from an arbitrary phase point for `duration`
/// time units. The returned path starts at state.t_anchor() - 1.
SolutionPath integrate_from(const DelaySystem& system, const HistoryVector& state, double duration);

/// S_t: x0 -> x(t) for the family member with x(0) = x0.
double scalar_solution_map(const DelaySystem& system, const InitialFamily& family, double t,
                           int n_mesh = kDefaultMesh);

/// Ring-buffer Euler integrator for long runs (O(1) per step).
class Integrator {
 public:
  Integrator(const DelaySystem& system, const HistoryVector& start);

  /// Advance by h; returns the new x(t).
  double step();
  double current() const noexcept { return buf_[head_]; }
  /// x(t - k h) for 0 <= k <= N.
  double back(std::size_t k) const noexcept { return buf_[(head_ + size_ - k) % size_]; }
  double lagged() const noexcept { return back(n_); }
  double time() const noexcept { return t0_ + static_cast<double>(steps_) * h_; }
  std::int64_t steps() const noexcept { return steps_; }
  int n_mesh() const noexcept { return static_cast<int>(n_); }
  HistoryVector history() const;

 private:
  const DelaySystem* system_;
  std::vector<double> buf_;
  std::size_t size_;
  std::size_t n_;
  std::size_t head_;
  double h_;
  double t0_;
  std::int64_t steps_ = 0;
};

[[noreturn]] void throw_overflow(double value, double t);

inline void check_finite(double value, double t) {
  if (!(value > -kOverflowThreshold && value < kOverflowThreshold)) throw_overflow(value, t);
}

}  // namespace delaydense
