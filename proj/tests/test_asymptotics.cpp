#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "delaydense/asymptotics.hpp"
#include "delaydense/error.hpp"

using namespace delaydense;

namespace {

DelaySystem mackey_glass() { return make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}}); }
DelaySystem tent() { return make_system(ModelId::TentFeedback, {{"epsilon", 0.3}}); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Usage;
}

TimeSeries series_of(std::vector<double> v) {
  TimeSeries s;
  s.h_sample = 1;
  s.values = std::move(v);
  return s;
}

// Bracketed bisection used as an independent root oracle.
double bisect(const std::function<double(double)>& g, double a, double b) {
  double ga = g(a);
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b), gm = g(m);
    if ((gm < 0) == (ga < 0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

constexpr double kTentFixed = 1.0 / 2.9;

ScpfOperator tent_operator(std::size_t bins = 513) {
  return ScpfOperator::build(scpf_feedback(tent()), 0.05, -1.0, 1.2, bins);
}

}  // namespace

TEST(SolutionHistogram, ZeroSolutionIsAnEquilibriumTrap) {
  SeriesOptions opt;
  opt.n_samples = 5000;
  opt.burn_in = 100;
  EXPECT_EQ(code_of([&] { solution_histogram(mackey_glass(), InitialFamily::constant(0.0), opt, {}); }),
            Errc::EquilibriumTrap);
}

TEST(SolutionHistogram, RejectsBadOptions) {
  SeriesOptions opt;
  opt.n_samples = 10;
  opt.burn_in = 10;
  EXPECT_EQ(code_of([&] { generate_series(tent(), InitialFamily::constant(0.7), opt); }), Errc::InvalidParam);
  opt.n_samples = 100;
  opt.h_sample = 0.3 / kDefaultMesh;
  EXPECT_EQ(code_of([&] { generate_series(tent(), InitialFamily::constant(0.7), opt); }), Errc::InvalidParam);
}

TEST(SolutionHistogram, SamplesFollowTheIntegrator) {
  SeriesOptions opt;
  opt.n_samples = 50;
  opt.h_sample = 4.0 / kDefaultMesh;
  auto series = generate_series(mackey_glass(), InitialFamily::constant(0.5), opt);
  Integrator it(mackey_glass(), initial_history(InitialFamily::constant(0.5), kDefaultMesh));
  for (std::size_t k = 0; k < opt.n_samples; ++k) {
    EXPECT_EQ(series.values[k], it.current());
    for (int s = 0; s < 4; ++s) it.step();
  }
}

TEST(SolutionHistogram, TentIndependentOfInitialValue) {
  SeriesOptions opt;
  opt.n_samples = 1000000;
  opt.burn_in = 10000;
  auto edges = uniform_edges(-1.0, 1.0, 100);
  auto a = solution_histogram(tent(), InitialFamily::constant(0.7), opt, edges);
  auto b = solution_histogram(tent(), InitialFamily::constant(-0.4), opt, edges);
  EXPECT_NEAR(a.total_mass(), 1.0, 1e-12);
  EXPECT_LT(l1_distance(a, b), 0.05);
}

TEST(SolutionHistogram, TentMatchesEnsemble) {
  SeriesOptions opt;
  opt.n_samples = 1000000;
  opt.burn_in = 10000;
  auto edges = uniform_edges(-1.0, 1.0, 20);
  auto series = solution_histogram(tent(), InitialFamily::constant(0.7), opt, edges);
  auto rho0 = Density1D::uniform(-0.5, 0.9, 1);
  auto ensemble = sample_ensemble(tent(), rho0, FamilyKind::constant(), 100.0, 20000, 11, edges);
  EXPECT_LT(l1_distance(series, ensemble), 0.05);
}

TEST(Trace2D, ConstantSolutionOccupiesOneDiagonalCell) {
  auto sys = make_system(ModelId::MackeyGlass, {{"alpha", 2}, {"beta", 4}, {"n", 10}});
  PairSeries pairs;
  pairs.lag.assign(100, 1.0);
  pairs.cur.assign(100, 1.0);
  auto edges = uniform_edges(0.0, 2.0, 8);
  auto h = histogram2d(pairs, edges, edges);
  std::size_t occupied = 0;
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c)
      if (h.at(r, c) > 0) {
        ++occupied;
        EXPECT_EQ(r, c);
        EXPECT_EQ(h.at(r, c), 100u);
      }
  EXPECT_EQ(occupied, 1u);
}

TEST(Trace2D, MarginalEqualsSolutionHistogramExactly) {
  SeriesOptions opt;
  opt.n_samples = 200000;
  opt.burn_in = 5000;
  auto edges_cur = uniform_edges(0.0, 2.0, 64);
  auto edges_lag = uniform_edges(0.0, 2.0, 48);
  auto fam = InitialFamily::constant(0.5);
  auto h2 = trace2d_histogram(mackey_glass(), fam, opt, edges_lag, edges_cur);
  auto h1 = solution_histogram(mackey_glass(), fam, opt, edges_cur);
  auto m = h2.marginal_current();
  ASSERT_EQ(m.bins(), h1.bins());
  EXPECT_EQ(h2.out_of_range, 0u);
  for (std::size_t i = 0; i < m.bins(); ++i) EXPECT_EQ(m.density[i], h1.density[i]) << i;
}

TEST(Ulam, PeriodicSeriesGivesSwap) {
  auto P = ulam_matrix(series_of({1, 2, 1, 2, 1, 2, 1}), std::vector<double>{0.5, 1.5, 2.5});
  EXPECT_EQ(P(0, 0), 0.0);
  EXPECT_EQ(P(1, 0), 1.0);
  EXPECT_EQ(P(0, 1), 1.0);
  EXPECT_EQ(P(1, 1), 0.0);
}

TEST(Ulam, ConstantSeriesGivesIdentity) {
  auto P = ulam_matrix(series_of({3, 3, 3, 3}), std::vector<double>{2.0, 4.0});
  ASSERT_EQ(P.r, 1u);
  EXPECT_EQ(P(0, 0), 1.0);
}

TEST(Ulam, Errors) {
  EXPECT_EQ(code_of([] { ulam_matrix(series_of({0.1, 0.2, 0.3}), std::vector<double>{0.0, 0.5, 1.0}); }),
            Errc::EmptyBin);
  EXPECT_EQ(code_of([] { ulam_matrix(series_of({0.1, 2.0}), std::vector<double>{0.0, 1.0}); }), Errc::DomainError);
}

TEST(Ulam, ColumnsSumToOneAndCircularity) {
  SeriesOptions opt;
  opt.n_samples = 100000;
  opt.burn_in = 0;
  opt.h_sample = 8.0 / kDefaultMesh;
  auto series = generate_series(mackey_glass(), InitialFamily::constant(0.5), opt);
  auto edges = auto_edges(series.samples(), 100);
  auto P = ulam_matrix(series, edges);
  for (std::size_t j = 0; j < P.r; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < P.r; ++i) {
      EXPECT_GE(P(i, j), 0.0);
      s += P(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  auto hist = occupation_histogram(series, edges);
  const double bound = static_cast<double>(P.r) / static_cast<double>(series.samples().size());
  EXPECT_LE(l1_norm_diff(P.apply(hist), hist), bound);
}

TEST(Stationary, TwoCycle) {
  auto P = TransitionMatrix::from_dense({{0, 1}, {1, 0}});
  auto res = stationary_vector(P);
  EXPECT_NEAR(res.p[0], 0.5, 1e-12);
  EXPECT_NEAR(res.p[1], 0.5, 1e-12);
  EXPECT_FALSE(res.multiple_fixed_points);
}

TEST(Stationary, IdentityReturnsInitialGuessWithFlag) {
  auto P = TransitionMatrix::from_dense({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  auto res = stationary_vector(P);
  for (double v : res.p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(res.multiple_fixed_points);
  EXPECT_EQ(closed_classes(P), 3u);
}

TEST(Stationary, IsAProbabilityFixedPoint) {
  auto P = TransitionMatrix::from_dense({{0.5, 0.2, 0.0}, {0.5, 0.3, 1.0}, {0.0, 0.5, 0.0}});
  auto res = stationary_vector(P, 1e-12);
  EXPECT_NEAR(std::accumulate(res.p.begin(), res.p.end(), 0.0), 1.0, 1e-12);
  EXPECT_LT(l1_norm_diff(P.apply(res.p), res.p), 1e-12);
  EXPECT_EQ(closed_classes(P), 1u);
}

TEST(Stationary, NoConvergence) {
  auto P = TransitionMatrix::from_dense({{0.5, 0.2}, {0.5, 0.8}});
  EXPECT_EQ(code_of([&] { stationary_vector(P, 1e-300, 3); }), Errc::NoConvergence);
}

TEST(Stationary, MatchesSeriesHistogram) {
  SeriesOptions opt;
  opt.n_samples = 100000;
  // Consecutive samples a quarter delay apart; at the integration step the chain
  // mixes too slowly for the stationary vector to sit within r/M of the histogram.
  opt.h_sample = 0.25;
  auto series = generate_series(mackey_glass(), InitialFamily::constant(0.5), opt);
  auto edges = auto_edges(series.samples(), 100);
  auto P = ulam_matrix(series, edges);
  auto res = stationary_vector(P);
  auto hist = occupation_histogram(series, edges);
  const double bound = static_cast<double>(P.r) / static_cast<double>(series.samples().size());
  EXPECT_LE(l1_norm_diff(res.p, hist), bound);
}

TEST(Scpf, SimpsonWeightsIntegratePolynomials) {
  for (std::size_t n : {2u, 3u, 4u, 7u, 8u, 513u, 512u}) {
    double dx = 1.0 / static_cast<double>(n - 1);
    auto w = simpson_weights(n, dx);
    double s0 = 0, s1 = 0, s3 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = static_cast<double>(i) * dx;
      s0 += w[i];
      s1 += w[i] * x;
      s3 += w[i] * x * x * x;
    }
    EXPECT_NEAR(s0, 1.0, 1e-13) << n;
    EXPECT_NEAR(s1, 0.5, 1e-13) << n;
    if (n > 2) EXPECT_NEAR(s3, 0.25, 1e-13) << n;
  }
}

TEST(Scpf, VIsUWhenAlphaIsZero) {
  auto toy = make_system(ModelId::LinearToy, {{"alpha", 0}});
  // 257 cells on [-2, 2] put the nodes on integer multiples of dx, so the
  // tabulation offsets coincide with nodes.
  auto op = ScpfOperator::build(scpf_feedback(toy), 0.37, -2.0, 2.0, 257);
  const std::size_t m = op.size();
  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) u[i] = (op.node(i) >= -0.5 && op.node(i) <= 1.0) ? 1.0 / 1.5 : 0.0;
  auto v = op.tabulate_v(u);
  const auto shift = static_cast<std::ptrdiff_t>(std::lround(-op.node(0) / op.dx()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(k) + 1 - static_cast<std::ptrdiff_t>(m) + shift;
    double expect = (i >= 0 && i < static_cast<std::ptrdiff_t>(m)) ? u[static_cast<std::size_t>(i)] : 0.0;
    EXPECT_EQ(v[k], expect) << k;
  }
}

TEST(Scpf, TentBranchInversesMatchRootFinding) {
  auto fb = scpf_feedback(tent());
  EXPECT_NEAR(fb.alpha, 1.0 / 0.3, 1e-15);
  std::vector<double> roots;
  for (double z : {-3.0, -1.0, 0.0, 1.5, 3.0, 3.3}) {
    roots.clear();
    fb.inverse(z, roots);
    ASSERT_EQ(roots.size(), 2u);
    auto g = [&](double s) { return fb.f(s) - z; };
    EXPECT_NEAR(roots[0], bisect(g, -10.0, 0.0), 1e-12);
    EXPECT_NEAR(roots[1], bisect(g, 0.0, 10.0), 1e-12);
  }
  roots.clear();
  fb.inverse(4.0, roots);
  EXPECT_TRUE(roots.empty());
}

TEST(Scpf, NumericBranchScanAgreesWithAnalyticInverse) {
  auto analytic = scpf_feedback(tent());
  auto numeric = analytic;
  numeric.inverse = nullptr;
  auto a = ScpfOperator::build(analytic, 0.05, -1.0, 1.2, 513);
  auto n = ScpfOperator::build(numeric, 0.05, -1.0, 1.2, 513);
  std::vector<double> u(a.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::exp(-8 * a.node(i) * a.node(i));
  auto wa = a.tabulate_w(u), wn = n.tabulate_w(u);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(wa[i], wn[i], 1e-8) << i;
}

TEST(Scpf, WConservesMass) {
  // Smooth bump vanishing to high order at its ends and at the tent's kink.
  auto bump = [](double s) {
    if (std::abs(s) >= 0.5) return 0.0;
    double q = std::sin(2 * M_PI * s);
    return q * q * q * q;
  };
  auto check = [&](const DelaySystem& sys, double h, double lo, double hi) {
    auto op = ScpfOperator::build(scpf_feedback(sys), h, lo, hi, 4097);
    std::vector<double> u(op.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = bump(op.node(i));
    auto w = op.tabulate_w(u);
    double mu = 0, mw = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      mu += op.weights()[i] * u[i];
      mw += op.weights()[i] * w[i];
    }
    EXPECT_NEAR(mw, mu, 1e-6);
  };
  check(tent(), 0.05, -1.0, 1.2);
  check(make_system(ModelId::QuadraticToy, {}), 0.5, -1.0, 1.0);
}

TEST(Scpf, FftMatchesDirectSum) {
  auto op = tent_operator(257);
  std::vector<double> u(op.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0 + 0.5 * std::cos(3 * op.node(i));
  auto a = op.convolve_fft(u), b = op.convolve_direct(u);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
  auto d = op.make_density(u);
  auto qa = op.apply(d), qb = op.apply_direct(d);
  EXPECT_NEAR(qa.total_mass(), 1.0, 1e-12);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(qa.density[i], qb.density[i], 1e-10);
}

TEST(Scpf, SpikeAtFixedPointIsStable) {
  auto op = tent_operator();
  std::vector<double> u(op.size(), 0.0);
  std::size_t k = static_cast<std::size_t>(std::lround((kTentFixed - op.node(0)) / op.dx()));
  u[k] = 1.0;
  auto d = op.make_density(u);
  d.normalize();
  auto steps = op.iterate(d, 20);
  for (const auto& st : steps) {
    EXPECT_NEAR(st.mean, kTentFixed, op.dx());
    EXPECT_LT(st.stddev, 2 * op.dx());
  }
}

TEST(Scpf, UniformCollapsesToTentFixedPoint) {
  auto op = tent_operator();
  std::vector<double> u(op.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::abs(op.node(i)) < 1.0 ? 0.5 : 0.0;
  auto d = op.make_density(u);
  d.normalize();
  auto steps = op.iterate(d, 200);
  EXPECT_NEAR(steps.back().mean, kTentFixed, 0.01);
  EXPECT_LT(steps.back().stddev, 0.02);
  // Contraction toward the fixed point after the initial transient.
  for (std::size_t k = 20; k + 1 < steps.size(); ++k) EXPECT_LE(steps[k + 1].stddev, steps[k].stddev + 1e-12) << k;
}

TEST(Scpf, UnsupportedModels) {
  auto pwc = make_system(ModelId::PiecewiseConstant, {{"alpha", 3.25}, {"c", 20.5}, {"x1", 1}, {"x2", 2}});
  EXPECT_EQ(code_of([&] { scpf_feedback(pwc); }), Errc::UnsupportedModel);
  auto op = tent_operator();
  auto other = Density1D::uniform(-1.0, 1.2, 100);
  EXPECT_EQ(code_of([&] { op.apply(other); }), Errc::InvalidParam);
}
