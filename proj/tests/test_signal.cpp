#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "support.hpp"

using namespace vortrack;

namespace {

TrajectoryEnsemble sampled(std::size_t nt, double h, const std::vector<std::function<PlanePoint(double)>>& paths,
                           Provenance tag = Provenance::Raw) {
  TrajectoryEnsemble e{TimeGrid{0.0, h, nt}, PointTable(nt, paths.size()), tag};
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t p = 0; p < paths.size(); ++p) e.tracers(k, p) = paths[p](h * static_cast<double>(k));
  }
  return e;
}

TrajectoryEnsemble white_noise(std::size_t nt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  TrajectoryEnsemble e{TimeGrid{0.0, 1.0, nt}, PointTable(nt, 1), Provenance::Raw};
  for (auto& p : e.tracers.data()) p = {n(rng), n(rng)};
  return e;
}

// Biased estimator evaluated term by term.
double direct_rho(const std::vector<PlanePoint>& z, std::size_t lag) {
  const double n = static_cast<double>(z.size());
  PlanePoint mu{};
  for (const auto& p : z) mu += p;
  mu *= 1.0 / n;
  double var = 0.0;
  for (const auto& p : z) var += norm2(p - mu);
  var /= n;
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k + lag < z.size(); ++k) {
    const PlanePoint a = z[k] - mu, b = z[k + lag] - mu;
    // a * conj(b)
    re += a.x * b.x + a.y * b.y;
    im += a.y * b.x - a.x * b.y;
  }
  return std::hypot(re, im) / (n * var);
}

}  // namespace

TEST(AddNoise, ZeroSigmaKeepsValuesAndRetags) {
  const auto e = sampled(50, 0.1, {[](double t) { return PlanePoint{t, -t}; }});
  const auto n = add_noise(e, 0.0, 7);
  EXPECT_EQ(n.provenance, Provenance::Noisy);
  EXPECT_TRUE(n.tracers == e.tracers);
}

TEST(AddNoise, SampleMomentsMatchSigma) {
  const std::size_t nt = 5000, np = 20;
  TrajectoryEnsemble e{TimeGrid{0.0, 0.01, nt}, PointTable(nt, np), Provenance::Raw};
  const auto n = add_noise(e, 0.01, 11);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : n.tracers.data()) {
    sum += p.x + p.y;
    sum2 += p.x * p.x + p.y * p.y;
  }
  const double m = 2.0 * nt * np;
  const double mean = sum / m;
  const double sd = std::sqrt(sum2 / m - mean * mean);
  EXPECT_LE(std::abs(mean), 3 * 0.01 / std::sqrt(m));
  EXPECT_NEAR(sd, 0.01, 0.05 * 0.01);
}

TEST(AddNoise, SameSeedSameOutput) {
  const auto e = sampled(100, 0.1, {[](double t) { return PlanePoint{std::sin(t), t}; }});
  EXPECT_TRUE(add_noise(e, 0.01, 3).tracers == add_noise(e, 0.01, 3).tracers);
  EXPECT_FALSE(add_noise(e, 0.01, 3).tracers == add_noise(e, 0.01, 4).tracers);
}

TEST(AddNoise, RequiresRawInput) {
  const auto e = sampled(10, 0.1, {[](double) { return PlanePoint{}; }}, Provenance::Smoothed);
  EXPECT_THROW(add_noise(e, 0.01, 1), Error);
}

TEST(GaussianSmooth, ConstantUnchanged) {
  const auto e = sampled(200, 0.01, {[](double) { return PlanePoint{1.25, -3.5}; }});
  const auto s = gaussian_smooth(e, 5.0);
  EXPECT_EQ(s.provenance, Provenance::Smoothed);
  for (const auto& p : s.tracers.data()) {
    EXPECT_NEAR(p.x, 1.25, 1e-14);
    EXPECT_NEAR(p.y, -3.5, 1e-14);
  }
}

TEST(GaussianSmooth, LinearUnchangedInInterior) {
  const auto e = sampled(200, 0.01, {[](double t) { return PlanePoint{2.0 * t + 1.0, -0.5 * t}; }});
  const auto s = gaussian_smooth(e, 5.0);
  const std::size_t r = gaussian_radius(5.0);
  EXPECT_EQ(r, 20u);
  for (std::size_t k = r; k + r < 200; ++k) {
    EXPECT_NEAR(s.tracers(k, 0).x, e.tracers(k, 0).x, 1e-12);
    EXPECT_NEAR(s.tracers(k, 0).y, e.tracers(k, 0).y, 1e-12);
  }
}

TEST(GaussianSmooth, ReducesNoiseOnSine) {
  const std::size_t nt = 4000;
  const auto clean = sampled(nt, 0.01, {[](double t) { return PlanePoint{std::sin(t), std::cos(0.7 * t)}; }});
  const auto noisy = add_noise(clean, 0.01, 21);
  const auto smooth = gaussian_smooth(noisy, 5.0);
  double raw = 0.0, filtered = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    raw += norm2(noisy.tracers(k, 0) - clean.tracers(k, 0));
    filtered += norm2(smooth.tracers(k, 0) - clean.tracers(k, 0));
  }
  EXPECT_GE(std::sqrt(raw / filtered), 3.0);
}

TEST(GaussianSmooth, IsLinear) {
  const auto a = add_noise(sampled(300, 0.01, {[](double t) { return PlanePoint{t * t, std::sin(3 * t)}; }}), 0.1, 1);
  const auto b = add_noise(sampled(300, 0.01, {[](double t) { return PlanePoint{std::exp(-t), t}; }}), 0.1, 2);
  TrajectoryEnsemble combo = a;
  combo.provenance = Provenance::Raw;
  for (std::size_t k = 0; k < 300; ++k) combo.tracers(k, 0) = 2.0 * a.tracers(k, 0) - 0.5 * b.tracers(k, 0);
  const auto sa = gaussian_smooth(a, 3.0), sb = gaussian_smooth(b, 3.0), sc = gaussian_smooth(combo, 3.0);
  for (std::size_t k = 0; k < 300; ++k) {
    const PlanePoint expect = 2.0 * sa.tracers(k, 0) - 0.5 * sb.tracers(k, 0);
    EXPECT_NEAR(sc.tracers(k, 0).x, expect.x, 1e-12);
    EXPECT_NEAR(sc.tracers(k, 0).y, expect.y, 1e-12);
  }
}

TEST(GaussianSmooth, ShortGridRejected) {
  const auto e = sampled(10, 0.01, {[](double) { return PlanePoint{}; }});
  try {
    gaussian_smooth(e, 5.0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::GridTooShort);
  }
}

TEST(FdVelocity, ConstantGivesZero) {
  const auto v = fd_velocity(sampled(20, 0.1, {[](double) { return PlanePoint{4, 5}; }}));
  for (const auto& p : v.velocities.data()) {
    EXPECT_NEAR(p.x, 0.0, 1e-12);
    EXPECT_NEAR(p.y, 0.0, 1e-12);
  }
}

TEST(FdVelocity, QuarticExactEverywhere) {
  auto f = [](double t) { return PlanePoint{t * t * t * t, 1.0 - t + 3.0 * t * t * t}; };
  const auto v = fd_velocity(sampled(21, 0.1, {f}));
  EXPECT_NEAR(v.velocities(10, 0).x, 4.0, 1e-12);
  for (std::size_t k = 0; k < 21; ++k) {
    const double t = 0.1 * static_cast<double>(k);
    EXPECT_NEAR(v.velocities(k, 0).x, 4 * t * t * t, 1e-11) << k;
    EXPECT_NEAR(v.velocities(k, 0).y, -1.0 + 9.0 * t * t, 1e-11) << k;
  }
}

TEST(FdVelocity, CircularOrbitMatchesFieldToFourthOrder) {
  const double gamma = 2 * kPi, r = 1.0;
  const double omega = gamma / (2 * kPi * r * r);
  auto orbit = [&](double t) { return PlanePoint{r * std::cos(omega * t), r * std::sin(omega * t)}; };
  auto max_error = [&](double h) {
    const auto e = sampled(static_cast<std::size_t>(std::llround(2.0 / h)) + 1, h, {orbit});
    const auto v = fd_velocity(e);
    double m = 0.0;
    for (std::size_t k = 0; k < e.tracers.rows(); ++k) {
      const auto exact = tracer_velocities(VortexSystem{{gamma}, {{0, 0}}}, TracerSet{{e.tracers(k, 0)}});
      m = std::max(m, norm(v.velocities(k, 0) - exact[0]));
    }
    return m;
  };
  const double e1 = max_error(0.02), e2 = max_error(0.01);
  EXPECT_LE(e1, 1e-5);
  EXPECT_GE(std::log2(e1 / e2), 3.9);
}

TEST(FdVelocity, NeedsFiveSamples) {
  try {
    fd_velocity(sampled(4, 0.1, {[](double t) { return PlanePoint{t, t}; }}));
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::GridTooShort);
  }
}

TEST(FdVelocity, SmoothingImprovesVelocitiesOnVortexData) {
  ExperimentConfig cfg;
  cfg.vortices = vt_test::reference();
  cfg.tracers.clearance = 0.3;
  cfg.grid = TimeGrid{0.0, 1e-2, 2001};
  const auto rec = integrate(cfg.vortices, place_tracers(cfg.vortices, cfg.tracers), cfg.grid);
  const TrajectoryEnsemble raw{cfg.grid, rec.tracer_history, Provenance::Raw};
  const auto noisy = add_noise(raw, 0.01, 11);
  const auto v_noisy = fd_velocity(noisy);
  const auto v_smooth = fd_velocity(gaussian_smooth(noisy, 5.0));
  double en = 0.0, es = 0.0;
  for (std::size_t k = 0; k < cfg.grid.nt; ++k) {
    std::vector<PlanePoint> exact(raw.num_tracers());
    tracer_velocities(cfg.vortices.circulations, rec.vortex_history.row(k), rec.tracer_history.row(k), exact);
    for (std::size_t p = 0; p < exact.size(); ++p) {
      en += norm2(v_noisy.velocities(k, p) - exact[p]);
      es += norm2(v_smooth.velocities(k, p) - exact[p]);
    }
  }
  EXPECT_GE(std::sqrt(en / es), 2.0);
}

TEST(Autocorrelation, MatchesDirectEvaluation) {
  const auto e = add_noise(sampled(777, 0.01, {[](double t) { return PlanePoint{std::sin(2 * t) + t, std::cos(5 * t)}; }}), 0.1, 9);
  const auto z = e.tracers.column(0);
  const auto c = autocorrelation(e, 0, 400);
  ASSERT_EQ(c.values.size(), 401u);
  EXPECT_EQ(c.values[0], 1.0);
  for (std::size_t l = 0; l <= 400; l += 7) EXPECT_NEAR(c.values[l], direct_rho(z, l), 1e-12) << l;
  for (double v : c.values) EXPECT_LE(v, 1.0 + 1e-9);
}

TEST(Autocorrelation, WhiteNoiseDecorrelatesImmediately) {
  const auto c = autocorrelation(white_noise(10000, 4), 0, 500);
  for (std::size_t l = 1; l <= 500; ++l) EXPECT_LT(c.values[l], 0.05) << l;
}

TEST(Autocorrelation, SlowRotationDecaysMonotonically) {
  const std::size_t nt = 2000;
  const double h = 1e-2, omega = 0.2;  // omega * h * nt = 4 rad
  const auto e = sampled(nt, h, {[&](double t) { return PlanePoint{std::cos(omega * t), std::sin(omega * t)}; }});
  const auto c = autocorrelation(e, 0, nt - 1);
  for (std::size_t l = 1; l <= nt / 10; ++l) EXPECT_LE(c.values[l], c.values[l - 1] + 1e-12) << l;
}

TEST(Autocorrelation, TranslationAndRotationInvariant) {
  const auto e = add_noise(sampled(500, 0.01, {[](double t) { return PlanePoint{std::sin(3 * t), t * t}; }}), 0.05, 2);
  TrajectoryEnsemble moved = e;
  for (auto& p : moved.tracers.data()) p = rotate(p, 1.1) + PlanePoint{10, -4};
  const auto a = autocorrelation(e, 0, 300), b = autocorrelation(moved, 0, 300);
  for (std::size_t l = 0; l <= 300; ++l) EXPECT_NEAR(a.values[l], b.values[l], 1e-10);
}

TEST(Autocorrelation, DegenerateSignalRejected) {
  const auto e = sampled(100, 0.01, {[](double) { return PlanePoint{1, 1}; }});
  try {
    autocorrelation(e, 0, 10);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DegenerateSignal);
  }
}

TEST(Decorrelation, ImmediateDecorrelationGivesOneStep) {
  EXPECT_DOUBLE_EQ(decorrelation_time(white_noise(10000, 4), 0.2, 200), 1.0);
}

namespace {

// Complex AR(1) series; correlation a^l, so the smaller a decorrelates sooner.
std::vector<PlanePoint> ar1(double a, std::uint64_t seed, std::size_t nt) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<PlanePoint> z(nt);
  for (std::size_t k = 1; k < nt; ++k) z[k] = a * z[k - 1] + PlanePoint{n(rng), n(rng)};
  return z;
}

}  // namespace

TEST(Decorrelation, MinimumOverTracers) {
  const std::size_t nt = 20000;
  const auto fast = ar1(0.9, 1, nt), slow = ar1(0.99, 2, nt);
  TrajectoryEnsemble both{TimeGrid{0.0, 0.01, nt}, PointTable(nt, 2), Provenance::Raw};
  for (std::size_t k = 0; k < nt; ++k) {
    both.tracers(k, 0) = slow[k];
    both.tracers(k, 1) = fast[k];
  }
  const double t_slow = 0.01 * static_cast<double>(decorrelation_lag(autocorrelation(slow, 3000), 0.2));
  const double t_fast = 0.01 * static_cast<double>(decorrelation_lag(autocorrelation(fast, 3000), 0.2));
  ASSERT_LT(t_fast, t_slow);
  const auto res = decorrelation_times(both, 0.2, 3000);
  EXPECT_DOUBLE_EQ(res.per_tracer[0], t_slow);
  EXPECT_DOUBLE_EQ(res.per_tracer[1], t_fast);
  EXPECT_DOUBLE_EQ(res.tau, t_fast);
}

TEST(Decorrelation, MonotoneInAlpha) {
  const std::size_t nt = 20000;
  const auto z = ar1(0.995, 5, nt);
  TrajectoryEnsemble e{TimeGrid{0.0, 0.01, nt}, PointTable(nt, 1), Provenance::Raw};
  for (std::size_t k = 0; k < nt; ++k) e.tracers(k, 0) = z[k];
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.1, 0.2, 0.4, 0.6, 0.8}) {
    const double tau = decorrelation_time(e, alpha, 2000);
    EXPECT_LE(tau, prev);
    prev = tau;
  }
}

TEST(Decorrelation, NoTracerDecorrelates) {
  const auto e = sampled(1000, 0.01, {[](double t) { return PlanePoint{t, 0.5 * t}; }});
  try {
    decorrelation_time(e, 0.2, 100);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NoDecorrelation);
  }
}
