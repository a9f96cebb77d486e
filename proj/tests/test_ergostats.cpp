#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "delaydense/ergostats.hpp"
#include "delaydense/error.hpp"
#include "delaydense/rng.hpp"

using namespace delaydense;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Usage;
}

DelaySystem pwc() {
  return make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}});
}
DelaySystem mackey_glass() {
  return make_system(ModelId::MackeyGlass, {{"alpha", 1 / 0.1625}, {"beta", 12 / 0.1625}, {"n", 10}});
}

DelaySystem decay_toy() {
  CustomModel m;
  m.f = [](double x, double) { return -x; };
  m.df_dx = [](double, double) { return -1.0; };
  m.df_dlag = [](double, double) { return 0.0; };
  return DelaySystem::custom(m);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

PointCloud circle(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  PointCloud c;
  c.dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    double th = 2 * std::numbers::pi * rng.uniform(i);
    std::array<double, 2> p{std::cos(th), std::sin(th)};
    c.push(p);
  }
  return c;
}

PointCloud square(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  PointCloud c;
  c.dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 2> p{rng.uniform(2 * i), rng.uniform(2 * i + 1)};
    c.push(p);
  }
  return c;
}

}  // namespace

TEST(Lyapunov, ContractingToyMatchesAnalyticRate) {
  auto path = integrate(decay_toy(), InitialFamily::constant(1.0), 130);
  LyapunovOptions o;
  o.k = 1;
  auto s = lyapunov_spectrum(decay_toy(), path, o);
  ASSERT_EQ(s.exponents.size(), 1u);
  EXPECT_NEAR(s.exponents[0], -1.0 / std::numbers::ln2, 0.05);
  // The Euler map contracts by exactly (1 - h)^N per delay.
  EXPECT_NEAR(s.exponents[0], 256 * std::log2(1.0 - 1.0 / 256), 1e-9);
}

TEST(Lyapunov, ZeroFixedPointOfPiecewiseConstant) {
  auto path = integrate(pwc(), InitialFamily::linear(0.5, -2.0), 150);
  LyapunovOptions o;
  o.k = 1;
  auto s = lyapunov_spectrum(pwc(), path.tail(130), o);
  EXPECT_NEAR(s.exponents[0], 256 * std::log2(1.0 - 3.25 / 256), 1e-9);
}

TEST(Lyapunov, FlowDirectionIsNeutralOnPeriodicOrbits) {
  LyapunovOptions o;
  o.k = 1;
  auto p1 = integrate(pwc(), InitialFamily::linear(1.5, 2.0), 500).tail(400);
  EXPECT_NEAR(lyapunov_spectrum(pwc(), p1, o).exponents[0], 0.0, 0.01);
  auto p2 = integrate(mackey_glass(), InitialFamily::linear(1.0, 1.0), 400).tail(300);
  EXPECT_NEAR(lyapunov_spectrum(mackey_glass(), p2, o).exponents[0], 0.0, 0.01);
}

TEST(Lyapunov, VariationalMatchesFiniteDifferencesOnSmoothModel) {
  const auto sys = mackey_glass();
  auto path = integrate(sys, InitialFamily::linear(0.48, -0.6), 12);
  CounterRng rng(5, 1);
  std::vector<std::vector<double>> vs(3, std::vector<double>(257));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t m = 0; m < 257; ++m) vs[i][m] = rng.normal(i * 257 + m);
  for (std::size_t off : {0ul, 5 * 256ul, 10 * 256ul}) {
    std::vector<double> w(path.x.begin() + off, path.x.begin() + off + 257);
    HistoryVector x(w, 256, path.time(off) + 1);
    auto a = tangent_map(sys, x, vs, TangentMode::Variational);
    auto b = tangent_map(sys, x, vs, TangentMode::FiniteDifference);
    for (std::size_t i = 0; i < 3; ++i) {
      double scale = 0, err = 0;
      for (std::size_t m = 0; m < 257; ++m) {
        scale = std::max(scale, std::abs(a[i][m]));
        err = std::max(err, std::abs(a[i][m] - b[i][m]));
      }
      EXPECT_LT(err, 1e-5 * scale) << "offset " << off << " vector " << i;
    }
  }
}

TEST(Lyapunov, SpectrumSortedAndStableUnderRenormInterval) {
  const auto sys = mackey_glass();
  auto path = integrate(sys, InitialFamily::linear(1.0, 1.0), 400).tail(300);
  LyapunovOptions o;
  o.k = 3;
  auto a = lyapunov_spectrum(sys, path, o);
  o.renorm_every = 2;
  auto b = lyapunov_spectrum(sys, path, o);
  for (std::size_t i = 0; i + 1 < a.exponents.size(); ++i) EXPECT_GE(a.exponents[i], a.exponents[i + 1]);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.exponents[i], b.exponents[i], 0.02);
  EXPECT_EQ(b.renorm_every, 2u);
}

TEST(Lyapunov, RejectsShortRunsAndLargeK) {
  auto path = integrate(decay_toy(), InitialFamily::constant(1.0), 50);
  EXPECT_EQ(code_of([&] { lyapunov_spectrum(decay_toy(), path, LyapunovOptions{}); }), Errc::InvalidParam);
  auto longer = integrate(decay_toy(), InitialFamily::constant(1.0), 150);
  LyapunovOptions o;
  o.k = 9;
  EXPECT_EQ(code_of([&] { lyapunov_spectrum(decay_toy(), longer, o); }), Errc::InvalidParam);
}

TEST(GramSchmidt, OutputIsOrthonormal) {
  CounterRng rng(9, 0);
  std::vector<std::vector<double>> vs(6, std::vector<double>(257));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t m = 0; m < 257; ++m) vs[i][m] = rng.normal(i * 257 + m) * (1 + 1000.0 * (i == 2));
  vs[3] = vs[1];
  for (std::size_t m = 0; m < 257; ++m) vs[3][m] += 1e-6 * rng.normal(10000 + m);
  gram_schmidt(vs);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j <= i; ++j) EXPECT_NEAR(dot(vs[i], vs[j]), i == j ? 1.0 : 0.0, 1e-10);
}

TEST(GramSchmidt, DependentVectorsAreDegenerate) {
  std::vector<std::vector<double>> vs{{1, 2, 3}, {2, 4, 6}};
  EXPECT_EQ(code_of([&] { gram_schmidt(vs); }), Errc::DegenerateTangent);
}

TEST(KaplanYorke, TableSpectra) {
  std::vector<double> a{0.54, 0.00, -1.5, -8.2, -12}, b{0.60, 0.00, -0.50, -3.1, -3.8};
  EXPECT_NEAR(kaplan_yorke(a), 2 + 0.54 / 1.5, 1e-12);
  EXPECT_NEAR(kaplan_yorke(b), 3 + 0.10 / 3.1, 1e-12);
  EXPECT_EQ(std::round(kaplan_yorke(a) * 100) / 100, 2.36);
  EXPECT_EQ(std::round(kaplan_yorke(b) * 100) / 100, 3.03);
}

TEST(KaplanYorke, UndefinedCases) {
  std::vector<double> contracting{-1, -2}, expanding{0.5, 0.1};
  EXPECT_EQ(code_of([&] { kaplan_yorke(contracting); }), Errc::Undefined);
  EXPECT_EQ(code_of([&] { kaplan_yorke(expanding); }), Errc::Undefined);
  std::vector<double> unsorted{-1, 0.5};
  EXPECT_EQ(code_of([&] { kaplan_yorke(unsorted); }), Errc::InvalidParam);
}

TEST(CorrelationDimension, CircleIsOneDimensional) {
  auto cd = correlation_dimension(circle(10000, 1), 1e-3, 1.0, 30);
  EXPECT_NEAR(cd.dimension, 1.0, 0.1);
  EXPECT_LT(cd.fit_lo, cd.fit_hi);
}

TEST(CorrelationDimension, SquareIsTwoDimensional) {
  auto cd = correlation_dimension(square(10000, 2), 1e-3, 0.5, 30);
  EXPECT_NEAR(cd.dimension, 2.0, 0.1);
}

TEST(CorrelationDimension, SumIsNonDecreasing) {
  auto cd = correlation_dimension(square(3000, 3), 1e-3, 1.5, 25);
  for (std::size_t i = 1; i < cd.c.size(); ++i) EXPECT_GE(cd.c[i], cd.c[i - 1]);
  EXPECT_LE(cd.c.back(), 1.0);
  // Theiler window w: each of the first n - w - 1 points pairs with all later points beyond w.
  const std::uint64_t m = 3000 - 10 - 1;
  EXPECT_EQ(cd.pairs, m * (m + 1) / 2);
}

TEST(CorrelationDimension, EmptyFitWindowIsInsufficient) {
  PointCloud grid;
  grid.dim = 1;
  for (int i = 0; i < 1200; ++i) {
    std::array<double, 1> p{static_cast<double>(i)};
    grid.push(p);
  }
  EXPECT_EQ(code_of([&] { correlation_dimension(grid, 0.01, 0.5, 10); }), Errc::InsufficientPairs);
  EXPECT_EQ(code_of([&] { correlation_dimension(circle(500, 1), 0.01, 0.5, 10); }), Errc::InvalidParam);
}

TEST(Embedding, DelayCoordinatesFollowThePath) {
  SolutionPath p;
  p.h = 1.0 / 256;
  for (int k = 0; k <= 10 * 256; ++k) p.x.push_back(std::sin(k * p.h));
  std::array<double, 3> lags{-1, 0, -0.5};
  auto c = delay_embed(p, lags, 0.5);
  ASSERT_EQ(c.dim, 3u);
  EXPECT_EQ(c.size(), 19u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    double t = 1.0 + 0.5 * static_cast<double>(i);
    EXPECT_NEAR(c.point(i)[0], std::sin(t - 1), 1e-12);
    EXPECT_NEAR(c.point(i)[1], std::sin(t), 1e-12);
    EXPECT_NEAR(c.point(i)[2], std::sin(t - 0.5), 1e-4);
  }
}

TEST(Embedding, StatesGiveOnePointEach) {
  std::vector<HistoryVector> states{initial_history(InitialFamily::linear(1, 2)),
                                    initial_history(InitialFamily::linear(-1, 0.5))};
  std::array<double, 3> offs{-1, 0, -0.5};
  auto c = embed_states(states, offs);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_DOUBLE_EQ(c.point(0)[0], 1.0);
  EXPECT_DOUBLE_EQ(c.point(0)[1], 3.0);
  EXPECT_DOUBLE_EQ(c.point(0)[2], 2.0);
  EXPECT_DOUBLE_EQ(c.point(1)[1], -0.5);
}
