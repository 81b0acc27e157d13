#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <doctest.h>

#include "mbcs/core.hpp"
#include "mbcs/rng.hpp"
#include "mbcs/simlab.hpp"

using mbcs::gaussian_kernel;
using mbcs::local_linear_fit;
using mbcs::local_linear_weights;
using mbcs::moment_sums;
using mbcs::SampleSet;

namespace {

// Random regression sample with sorted covariates.
SampleSet random_sample(mbcs::Stream& rng, std::size_t n, double lo,
                        double hi) {
  std::vector<double> xs(n), ys(n);
  for (auto& x : xs) x = rng.uniform(lo, hi);
  std::sort(xs.begin(), xs.end());
  for (auto& y : ys) y = rng.uniform(-5.0, 5.0);
  return SampleSet(std::move(xs), std::move(ys));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double triangular(double u) {
  const double a = std::fabs(u);
  return a < 1.0 ? 1.0 - a : 0.0;
}

}  // namespace

TEST_CASE("gaussian kernel value, symmetry and unit mass") {
  CHECK(gaussian_kernel(0.0) ==
        doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(gaussian_kernel(1.5) == gaussian_kernel(-1.5));
  CHECK(gaussian_kernel(3.25) == gaussian_kernel(-3.25));
  CHECK(gaussian_kernel(37.0) > 0.0);  // still representable, ~1e-298

  // quadrature oracle: 1e5-interval trapezoid over [-10, 10]
  const std::size_t n = 100001;
  const double step = 20.0 / (n - 1);
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = -10.0 + step * static_cast<double>(i);
    acc += (i == 0 || i == n - 1 ? 0.5 : 1.0) * gaussian_kernel(u);
  }
  CHECK(acc * step == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("moment sums on tiny hand cases") {
  // single centered point: only S0 survives
  const std::vector<double> one{0.0};
  const auto s1 = moment_sums(std::span<const double>(one), 0.0, 1.0);
  CHECK(s1.s0 == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(s1.s1 == 0.0);
  CHECK(s1.s2 == 0.0);
  CHECK(s1.s3 == 0.0);

  // symmetric three-point design; S0, S2 frozen from the direct-summation
  // oracle (1 + 2e^{-1/2})/sqrt(2 pi) and 2 e^{-1/2}/sqrt(2 pi)
  const std::vector<double> sym{-1.0, 0.0, 1.0};
  const auto s3 = moment_sums(std::span<const double>(sym), 0.0, 1.0);
  CHECK(s3.s0 == doctest::Approx(0.8828837294397194).epsilon(1e-14));
  CHECK(s3.s2 == doctest::Approx(0.4839414490382867).epsilon(1e-14));
  CHECK(std::fabs(s3.s1) < 1e-16);
  CHECK(std::fabs(s3.s3) < 1e-16);
}

TEST_CASE("moment sums match a direct summation oracle on random data") {
  mbcs::Stream rng(11, 0, mbcs::Stream::Purpose::Generic);
  for (int rep = 0; rep < 50; ++rep) {
    const auto data = random_sample(rng, 3 + (rep % 40), -3.0, 3.0);
    const double x = rng.uniform(-3.5, 3.5);
    const double h = std::exp(rng.uniform(std::log(0.05), std::log(2.0)));
    const auto s = moment_sums(data, x, h);

    double e0 = 0, e1 = 0, e2 = 0, e3 = 0;
    for (const double xj : data.xs) {
      const double d = xj - x;
      const double k = gaussian_kernel(d / h) / h;
      e0 += k;
      e1 += d * k;
      e2 += d * d * k;
      e3 += d * d * d * k;
    }
    CHECK(s.s0 == doctest::Approx(e0).epsilon(1e-12));
    CHECK(s.s1 == doctest::Approx(e1).epsilon(1e-12));
    CHECK(s.s2 == doctest::Approx(e2).epsilon(1e-12));
    CHECK(s.s3 == doctest::Approx(e3).epsilon(1e-12));
  }
}

TEST_CASE("weights on the symmetric three-point design") {
  // hand oracle: w(+-1) = e^{-1/2} / (1 + 2 e^{-1/2}), w(0) = 1 - 2 w(1)
  const SampleSet data({-1.0, 0.0, 1.0}, {5.0, 5.0, 5.0});
  const auto wv = local_linear_weights(data, 0.0, 1.0);
  const double a = 0.2740686190611970;
  CHECK(wv.weights[0] == doctest::Approx(a).epsilon(1e-13));
  CHECK(wv.weights[1] == doctest::Approx(1.0 - 2.0 * a).epsilon(1e-13));
  CHECK(wv.weights[2] == doctest::Approx(a).epsilon(1e-13));
}

TEST_CASE("weight identities hold over randomized cases") {
  mbcs::Stream rng(7, 0, mbcs::Stream::Purpose::Generic);
  int accepted = 0;
  while (accepted < 400) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform(0, 60));
    const double lo = rng.uniform(-10.0, 0.0);
    const double hi = lo + rng.uniform(0.5, 10.0);
    const auto data = random_sample(rng, n, lo, hi);
    const double h =
        data.range() * std::exp(rng.uniform(std::log(0.02), std::log(1.0)));
    const double x = rng.uniform(lo - h, hi + h);
    try {
      const auto wv = local_linear_weights(data, x, h);
      ++accepted;
      double sum = 0, moment = 0, dmax = 0;
      for (std::size_t j = 0; j < n; ++j) {
        sum += wv.weights[j];
        moment += (data.xs[j] - x) * wv.weights[j];
        dmax = std::max(dmax, std::fabs(data.xs[j] - x));
      }
      REQUIRE(std::fabs(sum - 1.0) <= 1e-10);
      REQUIRE(std::fabs(moment) <= 1e-8 * dmax);
    } catch (const mbcs::DegenerateDesign&) {
      // sparse draw at this bandwidth; try another case
    }
  }
}

TEST_CASE("fit equals the weight dot product") {
  mbcs::Stream rng(13, 0, mbcs::Stream::Purpose::Generic);
  const auto data = random_sample(rng, 40, 0.0, 4.0);
  for (double x : {0.5, 1.7, 3.9}) {
    for (double h : {0.1, 0.4, 2.0}) {
      const auto wv = local_linear_weights(data, x, h);
      const std::vector<double> grid{x};
      const auto fit = local_linear_fit(data, h, grid);
      CHECK(fit.values[0] ==
            doctest::Approx(dot(wv.weights, data.ys)).epsilon(1e-12));
    }
  }
}

TEST_CASE("affine functions are reproduced exactly") {
  // dense enough that the smallest bandwidth on the log grid still sees
  // several points on both sides everywhere
  mbcs::Stream rng(17, 0, mbcs::Stream::Purpose::Generic);
  std::vector<double> xs(400);
  for (auto& x : xs) x = rng.uniform(0.0, 1.0);
  std::sort(xs.begin(), xs.end());
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = 2.0 + 3.0 * xs[i];
  const SampleSet data(xs, ys);
  const auto grid = mbcs::uniform_grid(0.05, 0.95, 101);

  for (double h = 0.01; h <= 1.0 + 1e-12; h *= std::pow(100.0, 0.125)) {
    const auto fit = local_linear_fit(data, h, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double want = 2.0 + 3.0 * grid[i];
      REQUIRE(std::fabs(fit.values[i] - want) <= 1e-8 * std::fabs(want));
    }
  }

  // constant responses reproduce the constant (weights sum to one)
  std::vector<double> yc(xs.size(), 4.25);
  const SampleSet constant(xs, yc);
  const auto fit = local_linear_fit(constant, 0.2, grid);
  for (const double v : fit.values) {
    REQUIRE(v == doctest::Approx(4.25).epsilon(1e-12));
  }
}

TEST_CASE("translation equivariance") {
  mbcs::Stream rng(19, 0, mbcs::Stream::Purpose::Generic);
  const auto data = random_sample(rng, 50, -1.0, 1.0);
  const auto grid = mbcs::uniform_grid(-0.9, 0.9, 25);
  const auto base = local_linear_fit(data, 0.3, grid);
  for (double c : {-5.0, 1.25, 7.0}) {
    std::vector<double> xs2(data.xs), grid2(grid);
    for (auto& v : xs2) v += c;
    for (auto& v : grid2) v += c;
    const SampleSet shifted(xs2, data.ys);
    const auto fit = local_linear_fit(shifted, 0.3, grid2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      REQUIRE(std::fabs(fit.values[i] - base.values[i]) <= 1e-10);
    }
  }
}

TEST_CASE("degenerate designs are rejected") {
  const SampleSet tied({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0});
  CHECK_THROWS_AS(local_linear_weights(tied, 1.0, 0.5),
                  mbcs::DegenerateDesign);

  // far outside the data at a tiny bandwidth: kernel mass underflows
  const SampleSet data({0.0, 0.5, 1.0}, {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(local_linear_weights(data, 50.0, 1e-3),
                  mbcs::DegenerateDesign);
  const std::vector<double> grid{50.0};
  CHECK_THROWS_AS(local_linear_fit(data, 1e-3, grid), mbcs::DegenerateDesign);

  CHECK_THROWS_AS(local_linear_weights(data, 0.5, -1.0), mbcs::Error);
}

TEST_CASE("grid points beyond the data range are counted, not fatal") {
  const SampleSet data({0.0, 0.5, 1.0}, {1.0, 2.0, 3.0});
  const std::vector<double> grid{-0.5, 0.5, 1.5};
  const auto fit = local_linear_fit(data, 0.4, grid);
  CHECK(fit.outside_range == 2);
  CHECK(fit.values.size() == 3);
}

TEST_CASE("custom kernels run through the generic path") {
  const mbcs::Kernel tri{"triangular", &triangular};
  mbcs::Stream rng(23, 0, mbcs::Stream::Purpose::Generic);
  const auto data = random_sample(rng, 30, 0.0, 1.0);
  const auto wv = local_linear_weights(data, 0.4, 0.8, tri);
  const double sum =
      std::accumulate(wv.weights.begin(), wv.weights.end(), 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  const auto sums = moment_sums(data, 0.4, 0.8, tri);
  CHECK(sums.s0 > 0.0);
}

TEST_CASE("local linear fit tracks its conditional mean at the peak") {
  // Monte-Carlo oracle: with the design held fixed, E[m_hat(0) | X] is
  // exactly sum_j w_j(0) m(X_j); the replicate mean must sit within 3
  // standard errors of it.
  const auto& f = mbcs::test_function("local");
  mbcs::SimConfig cfg;
  cfg.n = 100;
  cfg.replications = 300;
  cfg.seed = 4242;
  cfg.fixed_design = true;

  const double h = 0.02;
  std::vector<double> estimates;
  double conditional_mean = 0;
  for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
    const auto data = mbcs::generate_sample(f, cfg, rep);
    const std::vector<double> grid{0.0};
    const auto fit = local_linear_fit(data, h, grid);
    estimates.push_back(fit.values[0]);
    if (rep == 0) {
      const auto wv = local_linear_weights(data, 0.0, h);
      for (std::size_t j = 0; j < data.size(); ++j) {
        conditional_mean += wv.weights[j] * f.evaluate(data.xs[j]);
      }
    }
  }
  double mean = 0;
  for (const double e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  double ss = 0;
  for (const double e : estimates) ss += (e - mean) * (e - mean);
  const double se = std::sqrt(ss / (estimates.size() - 1)) /
                    std::sqrt(static_cast<double>(estimates.size()));
  CHECK(std::fabs(mean - conditional_mean) <= 3.0 * se);
  // the peak at x=0 is under-estimated (negative smoothing bias)
  CHECK(conditional_mean < f.evaluate(0.0));
}

TEST_CASE("confidence band arithmetic and guards") {
  const SampleSet data({0.0, 0.25, 0.5, 0.75, 1.0}, {1.0, 1.1, 0.9, 1.0, 1.2});
  const std::vector<double> grid{0.5};
  const auto fit = local_linear_fit(data, 0.4, grid);
  const auto band = mbcs::pointwise_ci(fit, data, 1.0, 0.95);

  const auto wv = local_linear_weights(data, 0.5, 0.4);
  double ssq = 0;
  for (const double w : wv.weights) ssq += w * w;
  const double half = 1.959963984540054 * std::sqrt(ssq);
  CHECK(band.upper[0] - fit.values[0] == doctest::Approx(half).epsilon(1e-12));
  CHECK(fit.values[0] - band.lower[0] == doctest::Approx(half).epsilon(1e-12));
  CHECK(band.tau_sq[0] ==
        doctest::Approx(5.0 * 0.4 * ssq).epsilon(1e-12));

  CHECK_THROWS_AS(mbcs::pointwise_ci(fit, data, 0.0, 0.95), mbcs::Error);
  CHECK_THROWS_AS(mbcs::pointwise_ci(fit, data, 1.0, 1.5), mbcs::Error);
}

TEST_CASE("half-width formula example: sum w^2 = 0.01 gives z * 0.1") {
  // pure quantile arithmetic
  const double z = mbcs::normal_quantile(0.975);
  CHECK(z * std::sqrt(0.01) == doctest::Approx(0.195996398454).epsilon(1e-10));
}

TEST_CASE("confidence band coverage near an inflection point of m3") {
  // Monte-Carlo coverage oracle with the noise scale known (0.3): at x*
  // with m''(x*) = 0 the smoothing bias is negligible, so the band should
  // cover at close to its nominal level.
  const auto& f = mbcs::test_function("m3");
  const double x_star = 0.33239;  // smaller root of 436 - 1890 x + 1740 x^2
  mbcs::SimConfig cfg;
  cfg.n = 100;
  cfg.replications = 500;
  cfg.seed = 99;
  cfg.fixed_design = false;

  const double h = 0.05;
  int hits = 0;
  int usable = 0;
  const std::vector<double> grid{x_star};
  const double truth = f.evaluate(x_star);
  for (std::size_t rep = 0; rep < cfg.replications; ++rep) {
    const auto data = mbcs::generate_sample(f, cfg, rep);
    const auto fit = local_linear_fit(data, h, grid);
    const auto band = mbcs::pointwise_ci(fit, data, f.noise_sd, 0.95);
    ++usable;
    if (band.lower[0] <= truth && truth <= band.upper[0]) ++hits;
  }
  const double coverage = static_cast<double>(hits) / usable;
  CHECK(coverage >= 0.90);
  CHECK(coverage <= 0.99);
}

TEST_CASE("first-difference sigma estimate") {
  const SampleSet flat({0.0, 0.5, 1.0, 1.5}, {2.0, 2.0, 2.0, 2.0});
  CHECK(mbcs::sigma_first_difference(flat) == 0.0);

  mbcs::Stream rng(31, 0, mbcs::Stream::Purpose::Generic);
  const std::size_t n = 20000;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = static_cast<double>(i);
    ys[i] = rng.normal(0.0, 0.7);
  }
  const SampleSet noise(xs, ys);
  CHECK(mbcs::sigma_first_difference(noise) ==
        doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("sample set validation") {
  CHECK_THROWS_AS(SampleSet({1.0, 2.0}, {1.0}), mbcs::Error);
  CHECK_THROWS_AS(SampleSet({1.0, 2.0}, {1.0, 2.0}), mbcs::Error);
  CHECK_THROWS_AS(SampleSet({2.0, 1.0, 3.0}, {1.0, 2.0, 3.0}), mbcs::Error);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SampleSet({0.0, 1.0, inf}, {1.0, 2.0, 3.0}), mbcs::Error);

  const SampleSet ok({0.0, 1.0, 2.0, 3.0}, {5.0, 6.0, 7.0, 8.0});
  const auto del = ok.without(1);
  CHECK(del.size() == 3);
  CHECK(del.xs[1] == 2.0);
  CHECK(del.ys[1] == 7.0);
}
