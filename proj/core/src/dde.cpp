#include "delaydense/dde.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <numbers>

#include "delaydense/error.hpp"
#include "delaydense/format.hpp"

namespace delaydense {

namespace {

struct ModelInfo {
  ModelId id;
  std::string_view name;
  std::array<std::string_view, 4> keys;
  std::size_t n_keys;
};

constexpr std::array<ModelInfo, 6> kModels{{
    {ModelId::MackeyGlass, "mackey-glass", {"alpha", "beta", "n", ""}, 3},
    {ModelId::PiecewiseConstant, "piecewise-constant", {"alpha", "c", "x1", "x2"}, 4},
    {ModelId::TentFeedback, "tent", {"epsilon", "", "", ""}, 1},
    {ModelId::LinearToy, "linear-toy", {"alpha", "", "", ""}, 1},
    {ModelId::QuadraticToy, "quadratic-toy", {"", "", "", ""}, 0},
    {ModelId::Custom, "custom", {"", "", "", ""}, 0},
}};

const ModelInfo& info(ModelId id) {
  for (const auto& m : kModels)
    if (m.id == id) return m;
  return kModels.back();
}

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view model_name(ModelId id) noexcept { return info(id).name; }

ModelId parse_model(std::string_view name) {
  std::string key = normalize(name);
  for (const auto& m : kModels)
    if (normalize(m.name) == key) return m.id;
  if (key == "mg") return ModelId::MackeyGlass;
  if (key == "pwc" || key == "piecewise") return ModelId::PiecewiseConstant;
  if (key == "tentfeedback") return ModelId::TentFeedback;
  if (key == "linear") return ModelId::LinearToy;
  if (key == "quadratic") return ModelId::QuadraticToy;
  throw Error(Errc::InvalidParam, "unknown model '" + std::string(name) + "'");
}

DelaySystem DelaySystem::make(ModelId model, ParamMap params) {
  if (model == ModelId::Custom)
    throw Error(Errc::InvalidParam, "custom models are built with DelaySystem::custom");
  DelaySystem sys;
  sys.model_ = model;
  sys.params_ = std::move(params);
  sys.validate_and_cache();
  return sys;
}

DelaySystem DelaySystem::custom(CustomModel model, ParamMap params) {
  if (!model.f) throw Error(Errc::MissingParam, "custom model needs a right-hand side");
  DelaySystem sys;
  sys.model_ = ModelId::Custom;
  sys.custom_ = std::move(model);
  sys.params_ = std::move(params);
  return sys;
}

DelaySystem make_system(ModelId model, ParamMap params) { return DelaySystem::make(model, std::move(params)); }

double DelaySystem::param(std::string_view key) const {
  auto it = params_.find(key);
  if (it == params_.end()) throw Error(Errc::MissingParam, std::string(key));
  return it->second;
}

void DelaySystem::validate_and_cache() {
  const ModelInfo& m = info(model_);
  for (std::size_t i = 0; i < m.n_keys; ++i)
    if (!params_.contains(m.keys[i]))
      throw Error(Errc::MissingParam, std::string(m.name) + " requires '" + std::string(m.keys[i]) + "'");
  for (const auto& [key, value] : params_) {
    bool known = false;
    for (std::size_t i = 0; i < m.n_keys; ++i) known = known || m.keys[i] == key;
    if (!known)
      throw Error(Errc::InvalidParam, "unknown parameter '" + key + "' for " + std::string(m.name));
    if (!std::isfinite(value)) throw Error(Errc::InvalidParam, "parameter '" + key + "' is not finite");
  }
  switch (model_) {
    case ModelId::MackeyGlass:
      a_ = param("alpha");
      b_ = param("beta");
      n_ = param("n");
      if (!(a_ > 0)) throw Error(Errc::InvalidParam, "mackey-glass requires alpha > 0");
      if (!(b_ > 0)) throw Error(Errc::InvalidParam, "mackey-glass requires beta > 0");
      if (!(n_ >= 1)) throw Error(Errc::InvalidParam, "mackey-glass requires n >= 1");
      int_power_ = (n_ == std::floor(n_) && n_ <= 64) ? static_cast<int>(n_) : 0;
      break;
    case ModelId::PiecewiseConstant:
      a_ = param("alpha");
      c_ = param("c");
      x1_ = param("x1");
      x2_ = param("x2");
      if (!(x1_ < x2_)) throw Error(Errc::InvalidParam, "piecewise-constant requires x1 < x2");
      jumps_ = {{x1_, c_}, {x2_, -c_}};
      break;
    case ModelId::TentFeedback:
      eps_ = param("epsilon");
      if (!(eps_ > 0)) throw Error(Errc::InvalidParam, "tent requires epsilon > 0");
      break;
    case ModelId::LinearToy:
      a_ = param("alpha");
      break;
    case ModelId::QuadraticToy:
    case ModelId::Custom:
      break;
  }
}

std::string DelaySystem::describe() const {
  std::string out(model_name(model_));
  out += '(';
  bool first = true;
  for (const auto& [k, v] : params_) {
    if (!first) out += ',';
    first = false;
    out += k + "=" + format_double(v);
  }
  return out + ')';
}

double DelaySystem::d_state(double x, double lag) const {
  switch (model_) {
    case ModelId::MackeyGlass:
    case ModelId::PiecewiseConstant:
      return -a_;
    case ModelId::TentFeedback:
      return -1.0 / eps_;
    case ModelId::LinearToy:
    case ModelId::QuadraticToy:
      return 0.0;
    case ModelId::Custom:
      if (custom_.df_dx) return custom_.df_dx(x, lag);
      {
        double d = 1e-6 * std::max(1.0, std::abs(x));
        return (custom_.f(x + d, lag) - custom_.f(x - d, lag)) / (2 * d);
      }
  }
  return 0.0;
}

double DelaySystem::d_lag(double x, double lag) const {
  switch (model_) {
    case ModelId::MackeyGlass: {
      double p = lag_power(lag);
      return b_ * (1.0 + (1.0 - n_) * p) / ((1.0 + p) * (1.0 + p));
    }
    case ModelId::PiecewiseConstant:
      return 0.0;
    case ModelId::TentFeedback:
      return (lag > 0 ? -1.9 : (lag < 0 ? 1.9 : 0.0)) / eps_;
    case ModelId::LinearToy:
      return a_;
    case ModelId::QuadraticToy:
      return -2.0 * lag;
    case ModelId::Custom:
      if (custom_.df_dlag) return custom_.df_dlag(x, lag);
      {
        double d = 1e-6 * std::max(1.0, std::abs(lag));
        return (custom_.f(x, lag + d) - custom_.f(x, lag - d)) / (2 * d);
      }
  }
  return 0.0;
}

bool DelaySystem::odd_symmetric() const noexcept {
  switch (model_) {
    case ModelId::MackeyGlass:
      return int_power_ > 0 && int_power_ % 2 == 0;
    case ModelId::LinearToy:
      return true;
    case ModelId::Custom:
      return custom_.odd_symmetric;
    default:
      return false;
  }
}

double DelaySystem::decay_rate() const noexcept {
  switch (model_) {
    case ModelId::MackeyGlass:
    case ModelId::PiecewiseConstant:
      return a_;
    case ModelId::TentFeedback:
      return 1.0 / eps_;
    default:
      return 0.0;
  }
}

double DelaySystem::feedback(double lag) const noexcept { return rhs(0.0, lag); }

double DelaySystem::feedback_slope(double lag) const noexcept {
  switch (model_) {
    case ModelId::Custom: {
      double d = 1e-6 * std::max(1.0, std::abs(lag));
      return (custom_.f(0.0, lag + d) - custom_.f(0.0, lag - d)) / (2 * d);
    }
    default:
      return d_lag(0.0, lag);
  }
}

HistoryVector::HistoryVector(std::vector<double> values, int n_mesh, double t_anchor)
    : values_(std::move(values)), n_mesh_(n_mesh), t_anchor_(t_anchor) {
  if (n_mesh_ < 2) throw Error(Errc::InvalidParam, "n_mesh must be >= 2");
  if (values_.size() != static_cast<std::size_t>(n_mesh_) + 1)
    throw Error(Errc::InvalidParam, "history length must be n_mesh + 1");
  for (double v : values_)
    if (!std::isfinite(v)) throw Error(Errc::InvalidParam, "history contains a non-finite value");
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double euclidean_norm(std::span<const double> a) {
  double s = 0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

std::string_view family_name(FamilyId id) noexcept {
  switch (id) {
    case FamilyId::Constant: return "const";
    case FamilyId::Linear: return "linear";
    case FamilyId::Sinusoidal: return "sin";
    case FamilyId::OdeGenerated: return "ode";
  }
  return "?";
}

InitialFamily InitialFamily::constant(double x0) { return {FamilyId::Constant, x0, 0, {}, {}}; }
InitialFamily InitialFamily::linear(double A, double B) { return {FamilyId::Linear, A, B, {}, {}}; }
InitialFamily InitialFamily::sinusoidal(double A, double B) { return {FamilyId::Sinusoidal, A, B, {}, {}}; }
InitialFamily InitialFamily::ode(double x0, std::function<double(double)> g, std::string desc) {
  if (!g) throw Error(Errc::MissingParam, "ode family needs g");
  return {FamilyId::OdeGenerated, x0, 0, std::move(g), std::move(desc)};
}

std::string InitialFamily::describe() const {
  std::string out(family_name(id));
  out += ':' + format_double(a);
  if (id == FamilyId::Linear || id == FamilyId::Sinusoidal) out += ',' + format_double(b);
  if (id == FamilyId::OdeGenerated) out += ',' + g_desc;
  return out;
}

FamilyKind FamilyKind::ode_linear(double g0, double g1) {
  return {FamilyId::OdeGenerated, 0, [g0, g1](double x) { return g0 + g1 * x; },
          "g0=" + format_double(g0) + ";g1=" + format_double(g1)};
}

InitialFamily FamilyKind::at(double x0) const {
  switch (id) {
    case FamilyId::Constant: return InitialFamily::constant(x0);
    case FamilyId::Linear: return InitialFamily::linear(x0, shape);
    case FamilyId::Sinusoidal: return InitialFamily::sinusoidal(x0, shape);
    case FamilyId::OdeGenerated: return InitialFamily::ode(x0, g, g_desc);
  }
  return InitialFamily::constant(x0);
}

double SolutionPath::value_at(double t) const {
  if (x.empty()) throw Error(Errc::DomainError, "empty path");
  double u = (t - t0) / h;
  double last = static_cast<double>(x.size() - 1);
  if (u < -1e-9 || u > last + 1e-9) throw Error(Errc::DomainError, "time outside path");
  u = std::clamp(u, 0.0, last);
  auto k = static_cast<std::size_t>(std::floor(u));
  double frac = u - static_cast<double>(k);
  if (k + 1 >= x.size() || frac == 0.0) return x[k];
  return x[k] + frac * (x[k + 1] - x[k]);
}

SolutionPath SolutionPath::tail(double duration) const {
  auto n = static_cast<std::size_t>(std::ceil(duration / h - 1e-9)) + 1;
  n = std::min(n, x.size());
  SolutionPath out;
  out.h = h;
  out.t0 = time(x.size() - n);
  out.x.assign(x.end() - static_cast<std::ptrdiff_t>(n), x.end());
  return out;
}

HistoryVector initial_history(const InitialFamily& family, int n_mesh) {
  if (n_mesh < 2) throw Error(Errc::InvalidParam, "n_mesh must be >= 2");
  std::vector<double> u(static_cast<std::size_t>(n_mesh) + 1);
  const double h = 1.0 / n_mesh;
  switch (family.id) {
    case FamilyId::Constant:
      std::fill(u.begin(), u.end(), family.a);
      break;
    case FamilyId::Linear:
      for (int i = 0; i <= n_mesh; ++i) u[i] = family.a + family.b * (static_cast<double>(i) / n_mesh);
      break;
    case FamilyId::Sinusoidal:
      for (int i = 0; i <= n_mesh; ++i) {
        // Reduce the angle to quarter turns so the samples at t = k/4 are exact.
        const int q = 4 * i;
        if (q % n_mesh == 0) {
          static constexpr double c4[] = {1, 0, -1, 0}, s4[] = {0, 1, 0, -1};
          int k = (q / n_mesh) % 4;
          u[i] = family.a * c4[k] + family.b * s4[k];
        } else {
          double th = 2.0 * std::numbers::pi * (static_cast<double>(i) / n_mesh);
          u[i] = family.a * std::cos(th) + family.b * std::sin(th);
        }
      }
      break;
    case FamilyId::OdeGenerated:
      u[0] = family.a;
      for (int i = 0; i < n_mesh; ++i) {
        u[i + 1] = u[i] + h * family.g(u[i]);
        check_finite(u[i + 1], (i + 1) * h);
      }
      break;
  }
  return HistoryVector(std::move(u), n_mesh, 1.0);
}

void throw_overflow(double value, double t) {
  throw Error(Errc::Overflow, "solution reached " + format_double(value) + " at t=" + format_double(t));
}

HistoryVector euler_step(const DelaySystem& system, const HistoryVector& state) {
  const auto u = state.values();
  const double h = state.step();
  const std::size_t n = u.size() - 1;
  std::vector<double> out(u.begin() + 1, u.end());
  const double next = u[n] + h * system.rhs(u[n], u[0]);
  check_finite(next, state.t_anchor() + h);
  out.push_back(next);
  return HistoryVector(std::move(out), state.n_mesh(), state.t_anchor() + h);
}

void time_one_map_inplace(const DelaySystem& system, std::span<double> values, std::vector<double>& scratch) {
  const std::size_t n = values.size() - 1;
  const double h = 1.0 / static_cast<double>(n);
  scratch.resize(n + 1);
  double prev = values[n];
  scratch[0] = prev;
  for (std::size_t j = 1; j <= n; ++j) {
    prev = prev + h * system.rhs(prev, values[j - 1]);
    check_finite(prev, static_cast<double>(j) * h);
    scratch[j] = prev;
  }
  std::copy(scratch.begin(), scratch.end(), values.begin());
}

HistoryVector time_one_map(const DelaySystem& system, const HistoryVector& state) {
  std::vector<double> values(state.values().begin(), state.values().end());
  std::vector<double> scratch;
  try {
    time_one_map_inplace(system, values, scratch);
  } catch (const Error& e) {
    throw Error(Errc::Overflow, std::string(e.what()) + " (time-one map from t_anchor=" +
                                    format_double(state.t_anchor()) + ")");
  }
  return HistoryVector(std::move(values), state.n_mesh(), state.t_anchor() + 1.0);
}

Integrator::Integrator(const DelaySystem& system, const HistoryVector& start)
    : system_(&system),
      buf_(start.values().begin(), start.values().end()),
      size_(buf_.size()),
      n_(buf_.size() - 1),
      head_(buf_.size() - 1),
      h_(start.step()),
      t0_(start.t_anchor()) {}

double Integrator::step() {
  const double cur = buf_[head_];
  std::size_t oldest = head_ + 1 == size_ ? 0 : head_ + 1;
  const double next = cur + h_ * system_->rhs(cur, buf_[oldest]);
  ++steps_;
  if (!(next > -kOverflowThreshold && next < kOverflowThreshold)) throw_overflow(next, time());
  head_ = oldest;
  buf_[head_] = next;
  return next;
}

HistoryVector Integrator::history() const {
  std::vector<double> out(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i] = back(n_ - i);
  return HistoryVector(std::move(out), static_cast<int>(n_), time());
}

namespace {

std::size_t samples_for(double duration, int n_mesh) {
  return static_cast<std::size_t>(std::ceil(duration * n_mesh - 1e-9));
}

}  // namespace

SolutionPath integrate(const DelaySystem& system, const InitialFamily& family, double t_end, int n_mesh) {
  if (!(t_end > 0)) throw Error(Errc::InvalidParam, "t_end must be > 0");
  HistoryVector start = initial_history(family, n_mesh);
  SolutionPath path;
  path.t0 = 0;
  path.h = start.step();
  std::size_t total = samples_for(t_end, n_mesh) + 1;
  path.x.reserve(std::max(total, start.size()));
  path.x.assign(start.values().begin(), start.values().end());
  if (total <= path.x.size()) {
    path.x.resize(total);
    return path;
  }
  Integrator it(system, start);
  while (path.x.size() < total) path.x.push_back(it.step());
  return path;
}

SolutionPath integrate_from(const DelaySystem& system, const HistoryVector& state, double duration) {
  SolutionPath path;
  path.h = state.step();
  path.t0 = state.t_anchor() - 1.0;
  std::size_t steps = samples_for(duration, state.n_mesh());
  path.x.reserve(state.size() + steps);
  path.x.assign(state.values().begin(), state.values().end());
  Integrator it(system, state);
  for (std::size_t k = 0; k < steps; ++k) path.x.push_back(it.step());
  return path;
}

double scalar_solution_map(const DelaySystem& system, const InitialFamily& family, double t, int n_mesh) {
  if (!(t >= 0)) throw Error(Errc::InvalidParam, "t must be >= 0");
  if (t == 0) return family.x0();
  HistoryVector start = initial_history(family, n_mesh);
  const double u = t * n_mesh;
  auto k_lo = static_cast<std::size_t>(std::floor(u + 1e-9));
  const double frac = std::max(0.0, u - static_cast<double>(k_lo));
  const bool on_mesh = frac < 1e-9;
  std::size_t k_hi = on_mesh ? k_lo : k_lo + 1;
  auto n = static_cast<std::size_t>(n_mesh);
  if (k_hi <= n) {
    if (on_mesh) return start[k_lo];
    return start[k_lo] + frac * (start[k_hi] - start[k_lo]);
  }
  Integrator it(system, start);
  double lo = k_lo <= n ? start[k_lo] : 0.0, hi = 0.0;
  for (std::size_t k = n + 1; k <= k_hi; ++k) {
    double v = it.step();
    if (k == k_lo) lo = v;
    if (k == k_hi) hi = v;
  }
  if (on_mesh) return hi;
  return lo + frac * (hi - lo);
}

}  // namespace delaydense
