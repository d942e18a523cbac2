#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "microclust/gaussian_assignment.hpp"
#include "microclust/scale.hpp"
#include "microclust/special.hpp"

using namespace microclust;

namespace {

std::size_t nearest_by_scan(double y, const std::vector<double>& means) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < means.size(); ++k) {
    if (std::abs(y - means[k]) < std::abs(y - means[best])) best = k;
  }
  return best;
}

}  // namespace

TEST_CASE("special functions against closed forms") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_sf(10.0) == doctest::Approx(7.61985302416047e-24).epsilon(1e-10));
  for (double x : {0.01, 0.5, 2.0, 7.0, 30.0}) {
    CHECK(chisq_cdf(x, 2) == doctest::Approx(1.0 - std::exp(-x / 2)).epsilon(1e-13));
    const double c3 = std::erf(std::sqrt(x / 2)) - std::sqrt(2 * x / M_PI) * std::exp(-x / 2);
    CHECK(chisq_cdf(x, 3) == doctest::Approx(c3).epsilon(1e-12));
    CHECK(chisq_cdf(x, 1) == doctest::Approx(std::erf(std::sqrt(x / 2))).epsilon(1e-13));
  }
  // ψ'(1) = π²/6, ψ'(x+1) = ψ'(x) - 1/x².
  CHECK(trigamma(1.0) == doctest::Approx(M_PI * M_PI / 6).epsilon(1e-14));
  CHECK(trigamma(4.5) == doctest::Approx(trigamma(3.5) - 1 / (3.5 * 3.5)).epsilon(1e-13));
  CHECK(log_factorial(10) == doctest::Approx(std::log(3628800.0)).epsilon(1e-14));
}

TEST_CASE("scale conventions") {
  CHECK(sigma_for(2.0, 100, ScaleConvention::SigmaLinear) == doctest::Approx(0.02));
  CHECK(sigma_for(2.0, 100, ScaleConvention::SigmaSquared) == doctest::Approx(std::sqrt(0.02)));
  CHECK(parse_scale_convention("sigma") == ScaleConvention::SigmaLinear);
  CHECK(parse_scale_convention("sigma-squared") == ScaleConvention::SigmaSquared);
  CHECK(to_string(ScaleConvention::SigmaSquared) == "sigma-squared");
  CHECK_THROWS(parse_scale_convention("variance"));
}

TEST_CASE("ml_assign basics") {
  const PointSet means(1, {0.1, 0.2, 0.3, 0.4});
  const double at3 = 0.3;
  CHECK(ml_assign({&at3, 1}, means, 1.0) == 2);
  const double mid = 0.25;
  CHECK(ml_assign({&mid, 1}, means, 1.0) == 1);  // tie between 1 and 2
  CHECK_THROWS(ml_assign({&mid, 1}, PointSet(1), 1.0));
  CHECK_THROWS(ml_assign({&mid, 1}, means, 0.0));
  const double two[2] = {0.0, 0.0};
  CHECK_THROWS(ml_assign(two, means, 1.0));
}

TEST_CASE("1D grid example: y = 0.057 goes to the mean 0.06") {
  EquallySpacedMixture1D mix{100, 1.0, 0.01, 0.0};
  CHECK(ml_assign_1d(0.057, mix) == 5);
  const auto m = mix.means();
  const double y = 0.057;
  CHECK(ml_assign({&y, 1}, m, 0.01) == 5);
}

TEST_CASE("1D fast path agrees with the linear scan") {
  std::mt19937_64 rng(17);
  for (std::size_t n : {1u, 2u, 7u, 100u, 5000u}) {
    EquallySpacedMixture1D mix{n, 1.0, 0.1, 0.0};
    const auto means = mix.means();
    std::vector<double> flat(means.coords());
    std::uniform_real_distribution<double> u(-0.2, 1.2);
    for (int i = 0; i < 20000; ++i) {
      const double y = u(rng);
      const auto scan = ml_assign({&y, 1}, means, 0.1);
      REQUIRE(ml_assign_1d(y, mix) == scan);
      REQUIRE(scan == nearest_by_scan(y, flat));
    }
    // Exact midpoints tie toward the lower index on both paths.
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double y = 0.5 * (mix.mean(k) + mix.mean(k + 1));
      CHECK(ml_assign_1d(y, mix) == ml_assign({&y, 1}, means, 0.1));
    }
  }
}

TEST_CASE("ml_assign invariances") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  PointSet means(3);
  for (int k = 0; k < 12; ++k) {
    const double p[3] = {g(rng), g(rng), g(rng)};
    means.push_back(p);
  }
  for (int trial = 0; trial < 500; ++trial) {
    const double y[3] = {g(rng), g(rng), g(rng)};
    const auto k = ml_assign(y, means, 1.0);
    const double shift[3] = {g(rng) * 5, g(rng) * 5, g(rng) * 5};
    const double scale = std::exp(g(rng));
    PointSet moved(3), scaled(3);
    for (std::size_t j = 0; j < means.size(); ++j) {
      double a[3], b[3];
      for (int d = 0; d < 3; ++d) {
        a[d] = means[j][d] + shift[d];
        b[d] = means[j][d] * scale;
      }
      moved.push_back(a);
      scaled.push_back(b);
    }
    double ya[3], yb[3];
    for (int d = 0; d < 3; ++d) {
      ya[d] = y[d] + shift[d];
      yb[d] = y[d] * scale;
    }
    CHECK(ml_assign(ya, moved, 1.0) == k);
    CHECK(ml_assign(yb, scaled, scale) == k);
  }
}

TEST_CASE("correct_prob_1d") {
  EquallySpacedMixture1D mix{5000, 1.0, 2.0 / 5000, 0.0};
  CHECK(correct_prob_1d(mix, false) == doctest::Approx(2 * normal_cdf(0.25) - 1));
  CHECK(correct_prob_1d(mix, false) == doctest::Approx(0.197).epsilon(0.005));
  EquallySpacedMixture1D tight{10, 1.0, 1e-6, 0.0};
  CHECK(correct_prob_1d(tight, false) == doctest::Approx(1.0));
  EquallySpacedMixture1D small{4, 1.0, 0.25, 0.0};
  const double a = normal_cdf(0.5);
  CHECK(correct_prob_1d(small, true) == doctest::Approx((2 * (2 * a - 1) + 2 * a) / 4));
  CHECK(correct_prob_1d(small, false) == doctest::Approx(2 * a - 1));
}

TEST_CASE("one-dimensional concentration and zero-correct bounds") {
  EquallySpacedMixture1D mix{50, 1.0, 0.01, 0.0};
  const auto r = remark2_bounds(mix, 1.0);
  CHECK(r.concentration_bound == doctest::Approx(2 * std::exp(-100.0)));
  CHECK_THROWS(remark2_bounds(mix, 0.0));

  // ℓ/σ = √(2π) puts the limit at e^{-1}.
  EquallySpacedMixture1D at_e{10, 1.0, 1.0 / std::sqrt(2 * M_PI), 0.0};
  CHECK(remark2_bounds(at_e, 0.1).zero_correct_limit == doctest::Approx(std::exp(-1.0)));

  // With ℓ/σ fixed, [2 - 2Φ(ℓ/2Nσ)]^N increases monotonically to the limit.
  double previous = 0.0;
  const double sigma = 0.4;
  double limit = 0.0, last = 0.0;
  for (std::size_t n : {2u, 5u, 10u, 100u, 1000u, 10000u, 100000u, 1000000u}) {
    EquallySpacedMixture1D m{n, 1.0, sigma, 0.0};
    const auto b = remark2_bounds(m, 0.1);
    const double a = 1.0 / (2 * n * sigma);
    CHECK(b.zero_correct_finite == doctest::Approx(std::pow(2 - 2 * normal_cdf(a), double(n))));
    CHECK(b.zero_correct_finite > previous);
    previous = b.zero_correct_finite;
    limit = b.zero_correct_limit;
    last = b.zero_correct_finite;
  }
  CHECK(limit == doctest::Approx(std::exp(-1.0 / (std::sqrt(2 * M_PI) * sigma))));
  CHECK(std::abs(last - limit) < 1e-6);
}

TEST_CASE("lattice means") {
  auto l = build_lattice_means(4, 2);
  CHECK(l.side == 2);
  CHECK(l.separation == doctest::Approx(1.0));
  CHECK(l.means.coords() == std::vector<double>{0, 0, 0, 1, 1, 0, 1, 1});
  l = build_lattice_means(1000, 3);
  CHECK(l.side == 10);
  CHECK(l.separation == doctest::Approx(1.0 / 9));
  CHECK(l.means.size() == 1000);
  l = build_lattice_means(5, 1);
  CHECK(l.separation == doctest::Approx(0.25));
  l = build_lattice_means(10, 2);  // 4x4 grid, first 10 points
  CHECK(l.side == 4);
  CHECK(l.means.size() == 10);
  CHECK(std::isinf(build_lattice_means(1, 3).separation));
}

TEST_CASE("chi-square bounds") {
  const auto b = correct_prob_bounds_p(0.5, 0.2, 1);
  CHECK(b.upper == doctest::Approx(2 * normal_cdf(0.5 / 0.2) - 1).epsilon(1e-12));
  CHECK(b.lower <= b.upper);
  CHECK(b.inscribed_ball_lower <= b.lower);
  const auto wide = correct_prob_bounds_p(1.0, 1e-3, 5);
  CHECK(wide.lower == doctest::Approx(1.0));
  CHECK(wide.upper == doctest::Approx(1.0));
  CHECK(b.normal_approx_c1 == doctest::Approx(normal_cdf((6.25 - 1) / 1.0)));
  CHECK(b.normal_approx_c2 == doctest::Approx(normal_cdf((3.125 - 1) / std::sqrt(0.5))));
}

TEST_CASE("chi-square bounds with p = log N, sigma^2 = 1/log N decay") {
  // δ = N^{-1/p} = e^{-1} so δ²/σ² = e^{-2} p: both bounds go to zero.
  double previous = 1.0;
  for (double n : {1e3, 1e6, 1e12, 1e24, 1e48}) {
    const double p = std::log(n);
    const auto b = correct_prob_bounds_p(std::exp(-1.0), std::sqrt(1.0 / p),
                                         static_cast<std::size_t>(std::round(p)));
    CHECK(b.upper < previous);
    previous = b.upper;
  }
  CHECK(previous < 1e-6);
  // δ²/σ² = 2p keeps the lower bound P(χ²_p < p) near 1/2.
  for (std::size_t p : {10u, 100u, 1000u}) {
    const auto b = correct_prob_bounds_p(1.0, 1.0 / std::sqrt(2.0 * p), p);
    CHECK(b.lower > 0.45);
    CHECK(b.lower < 0.6);
  }
}

TEST_CASE("assignment simulation") {
  AssignmentSimConfig cfg;
  cfg.n = 500;
  cfg.replicates = 20;
  cfg.seed = 11;
  for (double c : {0.1, 0.25, 0.5, 1.0, 2.0}) {
    cfg.c = c;
    const auto r = run_assignment_sim(cfg);
    CHECK(r.sigma == doctest::Approx(c / 500));
    CHECK(r.replicate_proportions.size() == 20);
    const double p = r.theory_proportion;
    const double se = std::sqrt(p * (1 - p) / (500.0 * 20));
    CHECK(std::abs(r.proportion_correct_mean - p) <= 4 * se + 1e-12);
  }
  cfg.sigma = 1e-9;
  const auto exact = run_assignment_sim(cfg);
  CHECK(exact.proportion_correct_mean == 1.0);
  CHECK(exact.proportion_correct_se == 0.0);
}

TEST_CASE("assignment simulation is reproducible across job counts") {
  AssignmentSimConfig cfg;
  cfg.n = 300;
  cfg.c = 0.7;
  cfg.replicates = 12;
  const auto a = run_assignment_sim(cfg);
  cfg.jobs = 3;
  const auto b = run_assignment_sim(cfg);
  CHECK(a.replicate_proportions == b.replicate_proportions);
  cfg.seed = 2;
  CHECK(run_assignment_sim(cfg).replicate_proportions != a.replicate_proportions);
}

TEST_CASE("padded edges remove the end-component advantage") {
  AssignmentSimConfig cfg;
  cfg.n = 10;
  cfg.c = 2.0;
  cfg.replicates = 4000;
  cfg.edges = EdgeMode::Padded;
  const auto padded = run_assignment_sim(cfg);
  EquallySpacedMixture1D mix{10, 1.0, 0.2, 0.0};
  const double p0 = remark2_bounds(mix, 0.1).zero_correct_finite;
  const double se = std::sqrt(p0 * (1 - p0) / 4000);
  CHECK(std::abs(padded.zero_correct_frequency - p0) < 4 * se);
  CHECK(padded.theory_proportion == doctest::Approx(correct_prob_1d(mix, false)));

  cfg.edges = EdgeMode::Exact;
  const auto plain = run_assignment_sim(cfg);
  const double q0 = remark2_bounds(mix, 0.1).zero_correct_finite_edges;
  CHECK(std::abs(plain.zero_correct_frequency - q0) < 4 * std::sqrt(q0 * (1 - q0) / 4000));
}

TEST_CASE("dimension simulation") {
  DimensionSimConfig cfg{64, 3, 0.01, 20, 4, 1};
  auto r = run_dimension_sim(cfg);
  CHECK(r.separation == doctest::Approx(1.0 / 3));
  CHECK(r.proportion_correct == doctest::Approx(1.0));
  CHECK(r.within_bounds);

  cfg.sigma = 10.0;
  cfg.replicates = 200;
  r = run_dimension_sim(cfg);
  CHECK(std::abs(r.proportion_correct - 1.0 / 64) < 4 * r.proportion_se + 0.005);

  // p = 1 is the equally spaced problem on [0, 1] with spacing 1/(N-1).
  cfg = {50, 1, 0.01, 200, 9, 1};
  r = run_dimension_sim(cfg);
  EquallySpacedMixture1D mix{50, 50.0 / 49, 0.01, -1.0 / 49};
  const double p = correct_prob_1d(mix, true);
  CHECK(std::abs(r.proportion_correct - p) < 4 * std::sqrt(p * (1 - p) / (50.0 * 200)));
}
