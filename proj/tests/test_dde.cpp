#include <gtest/gtest.h>

#include <cmath>

#include "delaydense/dde.hpp"
#include "delaydense/error.hpp"

using namespace delaydense;

namespace {

DelaySystem mackey_glass() { return make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}}); }
DelaySystem linear_toy(double a) { return make_system(ModelId::LinearToy, {{"alpha", a}}); }
DelaySystem quadratic_toy() { return make_system(ModelId::QuadraticToy, {}); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Usage;
}

}  // namespace

TEST(MakeSystem, ValidatesParameters) {
  EXPECT_NO_THROW(mackey_glass());
  EXPECT_NO_THROW(make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}}));
  EXPECT_EQ(code_of([] { make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 2}, {"x2", 1}}); }),
            Errc::InvalidParam);
  EXPECT_EQ(code_of([] { make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}}); }), Errc::MissingParam);
  EXPECT_EQ(code_of([] { make_system(ModelId::MackeyGlass, {{"alpha", -2}, {"beta", 4}, {"n", 10}}); }),
            Errc::InvalidParam);
  EXPECT_EQ(code_of([] { make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 0.5}}); }),
            Errc::InvalidParam);
  EXPECT_EQ(code_of([] { make_system(ModelId::TentFeedback, {{"epsilon", 0.3}, {"bogus", 1}}); }), Errc::InvalidParam);
  EXPECT_DOUBLE_EQ(mackey_glass().delay(), 1.0);
}

TEST(Rhs, NamedModels) {
  EXPECT_DOUBLE_EQ(mackey_glass().rhs(0, 1), 2.0);
  auto pwc = make_system(ModelId::PiecewiseConstant, {{"alpha", 6}, {"c", 24}, {"x1", 1}, {"x2", 2}});
  EXPECT_DOUBLE_EQ(pwc.rhs(0, 1.5), 24.0);
  EXPECT_DOUBLE_EQ(pwc.rhs(0, 1.0), 24.0);  // closed interval
  EXPECT_DOUBLE_EQ(pwc.rhs(0, 2.0), 24.0);
  EXPECT_DOUBLE_EQ(pwc.rhs(0, 2.0000001), 0.0);
  auto tent = make_system(ModelId::TentFeedback, {{"epsilon", 0.3}});
  const double xs = 1 / 2.9;
  // Fixed point oracle: 1 - 1.9 x = x.
  EXPECT_NEAR(1 - 1.9 * xs, xs, 1e-15);
  EXPECT_NEAR(tent.rhs(xs, xs), 0.0, 1e-14);
  EXPECT_DOUBLE_EQ(linear_toy(3).rhs(5, 2), 6.0);
  EXPECT_DOUBLE_EQ(quadratic_toy().rhs(5, 3), -9.0);
}

TEST(Rhs, MackeyGlassNonIntegerPowerMatchesPow) {
  auto a = make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 9.5}});
  double y = 1.3;
  EXPECT_NEAR(a.rhs(0.2, y), -0.4 + 4 * y / (1 + std::pow(y, 9.5)), 1e-14);
}

TEST(Derivatives, MatchCentralDifferences) {
  auto mg = mackey_glass();
  for (double y : {-1.2, 0.3, 0.9, 1.1, 2.0}) {
    double d = 1e-6;
    double fd = (mg.rhs(0.4, y + d) - mg.rhs(0.4, y - d)) / (2 * d);
    EXPECT_NEAR(mg.d_lag(0.4, y), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
  EXPECT_DOUBLE_EQ(mg.d_state(0.4, 1.0), -2.0);
  auto pwc = make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}});
  ASSERT_EQ(pwc.lag_jumps().size(), 2u);
  EXPECT_DOUBLE_EQ(pwc.lag_jumps()[0].at, 1.0);
  EXPECT_DOUBLE_EQ(pwc.lag_jumps()[0].jump, 20.5);
  EXPECT_DOUBLE_EQ(pwc.lag_jumps()[1].jump, -20.5);
}

TEST(Symmetry, OddModelsFlagged) {
  auto mg = make_system(ModelId::MackeyGlass, {{"alpha", 1 / 0.1625}, {"beta", 12 / 0.1625}, {"n", 10}});
  EXPECT_TRUE(mg.odd_symmetric());
  EXPECT_DOUBLE_EQ(mg.rhs(-0.3, -0.7), -mg.rhs(0.3, 0.7));
  auto pwc = make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}});
  EXPECT_FALSE(pwc.odd_symmetric());
}

TEST(InitialHistory, ClosedForms) {
  auto c = initial_history(InitialFamily::constant(0.5), 4);
  EXPECT_EQ(std::vector<double>(c.values().begin(), c.values().end()), std::vector<double>(5, 0.5));
  auto l = initial_history(InitialFamily::linear(0, 1), 2);
  EXPECT_EQ(std::vector<double>(l.values().begin(), l.values().end()), (std::vector<double>{0, 0.5, 1.0}));
  auto s = initial_history(InitialFamily::sinusoidal(1, 0), 4);
  EXPECT_EQ(std::vector<double>(s.values().begin(), s.values().end()), (std::vector<double>{1, 0, -1, 0, 1}));
  EXPECT_DOUBLE_EQ(c.t_anchor(), 1.0);
  EXPECT_THROW(initial_history(InitialFamily::constant(0), 1), Error);
}

TEST(InitialHistory, OdeFamilyUsesEulerSteps) {
  auto fam = FamilyKind::ode_linear(0.0, -1.0).at(1.0);
  auto u = initial_history(fam, 4);
  double x = 1.0;
  for (int i = 1; i <= 4; ++i) {
    x = x + 0.25 * (-x);
    EXPECT_DOUBLE_EQ(u[static_cast<std::size_t>(i)], x);
  }
}

TEST(HistoryVector, RejectsBadInput) {
  EXPECT_THROW(HistoryVector({1, 2}, 2, 1), Error);
  EXPECT_THROW(HistoryVector({1, NAN, 3}, 2, 1), Error);
}

TEST(EulerStep, Examples) {
  auto u = initial_history(InitialFamily::constant(1), 2);
  EXPECT_DOUBLE_EQ(euler_step(linear_toy(1), u).right(), 1.5);
  auto q = initial_history(InitialFamily::constant(2), 4);
  EXPECT_DOUBLE_EQ(euler_step(quadratic_toy(), q).right(), 1.0);
  auto z = initial_history(InitialFamily::constant(0), 8);
  EXPECT_DOUBLE_EQ(euler_step(mackey_glass(), z).right(), 0.0);
}

TEST(EulerStep, ShiftConsistency) {
  auto u = initial_history(InitialFamily::sinusoidal(0.7, -0.3), 16);
  auto v = euler_step(mackey_glass(), u);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(v[i], u[i + 1]);
  EXPECT_DOUBLE_EQ(v.t_anchor(), 1.0 + 1.0 / 16);
}

TEST(EulerStep, OverflowDetected) {
  auto u = initial_history(InitialFamily::constant(1e11), 2);
  EXPECT_EQ(code_of([&] { euler_step(linear_toy(100), u); }), Errc::Overflow);
  EXPECT_EQ(code_of([&] { integrate(quadratic_toy(), InitialFamily::constant(-3), 20, 64); }), Errc::Overflow);
}

TEST(TimeOneMap, FixedPointPreserved) {
  auto z = initial_history(InitialFamily::constant(0), 32);
  EXPECT_EQ(time_one_map(mackey_glass(), z).values()[32], 0.0);
  auto lin = linear_toy(2);
  auto zero = initial_history(InitialFamily::constant(0), 8);
  auto out = time_one_map(lin, zero);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
  // x = 1 is an exact root of the Mackey-Glass steady state -2x + 4x/(1+x^10).
  auto one = initial_history(InitialFamily::constant(1), 8);
  EXPECT_EQ(time_one_map(mackey_glass(), one), HistoryVector(std::vector<double>(9, 1.0), 8, 2.0));
}

TEST(TimeOneMap, LinearToyAnalytic) {
  // x(t) = 1 + alpha (t - 1) on [1, 2] for constant history 1.
  for (int n : {100, 1000}) {
    auto u = initial_history(InitialFamily::constant(1), n);
    EXPECT_NEAR(time_one_map(linear_toy(1), u).right(), 2.0, 2.0 / n);
  }
}

TEST(TimeOneMap, EqualsRepeatedEulerSteps) {
  auto sys = mackey_glass();
  auto u = initial_history(InitialFamily::linear(0.4, 0.9), 24);
  auto a = time_one_map(sys, time_one_map(sys, u));
  auto b = u;
  for (int k = 0; k < 48; ++k) b = euler_step(sys, b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_NEAR(a.t_anchor(), b.t_anchor(), 1e-12);
}

TEST(Integrator, MatchesEulerSteps) {
  auto sys = mackey_glass();
  auto u = initial_history(InitialFamily::linear(0.4, 0.9), 24);
  Integrator it(sys, u);
  auto b = u;
  for (int k = 0; k < 100; ++k) {
    b = euler_step(sys, b);
    EXPECT_EQ(it.step(), b.right());
  }
  auto hv = it.history();
  for (std::size_t i = 0; i < hv.size(); ++i) EXPECT_EQ(hv[i], b[i]);
  EXPECT_EQ(it.lagged(), b[0]);
}

TEST(Integrate, Examples) {
  auto zero = integrate(mackey_glass(), InitialFamily::constant(0), 10, 256);
  EXPECT_EQ(zero.size(), 2561u);
  for (double v : zero.x) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(zero.t_end(), 10.0);

  auto lin = integrate(linear_toy(-1), InitialFamily::constant(1), 2, 1000);
  EXPECT_NEAR(lin.x.back(), 0.0, 2e-3);
  auto quad = integrate(quadratic_toy(), InitialFamily::constant(1), 2, 1000);
  EXPECT_NEAR(quad.x.back(), 0.0, 2e-3);
}

TEST(Integrate, FirstOrderConvergence) {
  // Constant histories make the first step exact, so use x(t) = A + B t on [0,1].
  // On [1,2]: x(2) = x(1) + int_0^1 f(A + B s) ds.
  const double A = 0.8, B = -0.5, alpha = 1.5;
  const double want_lin = A + B + alpha * (A + B / 2);
  const double want_quad = A + B - (A * A + A * B + B * B / 3);
  for (int model = 0; model < 2; ++model) {
    std::vector<double> err;
    for (int n : {100, 200, 400}) {
      double got = model == 0 ? integrate(linear_toy(alpha), InitialFamily::linear(A, B), 2, n).x.back()
                              : integrate(quadratic_toy(), InitialFamily::linear(A, B), 2, n).x.back();
      err.push_back(std::abs(got - (model == 0 ? want_lin : want_quad)));
    }
    double slope = (std::log(err[2]) - std::log(err[0])) / (std::log(1.0 / 400) - std::log(1.0 / 100));
    EXPECT_NEAR(slope, 1.0, 0.1) << "model " << model;
    for (std::size_t i = 0; i < err.size(); ++i) EXPECT_LE(err[i], 1.0 / (100 << i));
  }
}

TEST(ScalarSolutionMap, Examples) {
  EXPECT_NEAR(scalar_solution_map(linear_toy(2), InitialFamily::constant(3), 1.5, 1000), 6.0, 1e-2);
  EXPECT_EQ(scalar_solution_map(mackey_glass(), InitialFamily::constant(0.7), 0.0), 0.7);
  EXPECT_NEAR(scalar_solution_map(quadratic_toy(), InitialFamily::constant(2), 2, 1000), -2.0, 1e-2);
}

TEST(ScalarSolutionMap, AgreesWithIntegrateOnMesh) {
  auto sys = mackey_glass();
  auto fam = InitialFamily::linear(0.5, 0.2);
  auto path = integrate(sys, fam, 5, 64);
  for (std::size_t k : {0u, 10u, 64u, 65u, 200u, 320u}) EXPECT_EQ(scalar_solution_map(sys, fam, path.time(k), 64), path.x[k]);
  double t = 3.3;
  EXPECT_NEAR(scalar_solution_map(sys, fam, t, 64), path.value_at(t), 1e-14);
}

TEST(Determinism, BitwiseRepeatable) {
  auto sys = make_system(ModelId::MackeyGlass, {{"alpha", 1 / 0.1625}, {"beta", 12 / 0.1625}, {"n", 10}});
  auto a = integrate(sys, InitialFamily::linear(0.48, -0.6), 40);
  auto b = integrate(sys, InitialFamily::linear(0.48, -0.6), 40);
  EXPECT_EQ(a.x, b.x);
}

TEST(SolutionPath, TailAndInterpolation) {
  SolutionPath p;
  p.h = 0.5;
  p.x = {0, 1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(p.value_at(0.75), 1.5);
  auto tail = p.tail(1.0);
  EXPECT_EQ(tail.x, (std::vector<double>{2, 3, 4}));
  EXPECT_DOUBLE_EQ(tail.t0, 1.0);
  EXPECT_THROW(p.value_at(3), Error);
}

TEST(Models, NamesRoundTrip) {
  for (auto id : {ModelId::MackeyGlass, ModelId::PiecewiseConstant, ModelId::TentFeedback, ModelId::LinearToy,
                  ModelId::QuadraticToy})
    EXPECT_EQ(parse_model(model_name(id)), id);
  EXPECT_THROW(parse_model("lorenz"), Error);
}
