#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "microclust/bayes_mixture.hpp"
#include "microclust/rng.hpp"
#include "oracles.hpp"

using namespace microclust;

namespace {

double log_multinomial(const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<double> counts(k, 0.0);
  for (auto z : labels) counts[z] += 1;
  double v = std::lgamma(labels.size() + 1.0);
  for (double c : counts) v -= std::lgamma(c + 1.0);
  return v;
}

// Every labeling of n items into k clusters, in lexicographic order.
std::vector<std::vector<std::size_t>> all_labelings(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> z(n, 0);
  while (true) {
    out.push_back(z);
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++z[i] < k) break;
      z[i] = 0;
      if (i == 0) return out;
    }
  }
}

std::size_t labeling_index(const std::vector<std::size_t>& z, std::size_t k) {
  std::size_t idx = 0;
  for (auto v : z) idx = idx * k + v;
  return idx;
}

}  // namespace

TEST_CASE("model validation") {
  CHECK_NOTHROW(BayesMixtureModel::uniform(3, 1.0, 2.0).validate());
  CHECK_THROWS(BayesMixtureModel({{0.5, 0.6}, 1.0, 1.0}).validate());
  CHECK_THROWS(BayesMixtureModel({{0.5, 0.5}, 0.0, 1.0}).validate());
  CHECK_THROWS(BayesMixtureModel({{1.0, 0.0}, 1.0, 1.0}).validate());
  CHECK_THROWS(BayesMixtureModel({{}, 1.0, 1.0}).validate());
}

TEST_CASE("configuration likelihood matches quadrature for N <= 4") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const std::vector<double> weights = {0.2, 0.3, 0.5};
      const BayesMixtureModel model{weights, u(rng), u(rng)};
      std::vector<double> y(n);
      for (auto& v : y) v = 2.0 * g(rng);
      for (const auto& z : all_labelings(n, 3)) {
        const double want =
            oracle::log_config_likelihood_quadrature(weights, y, z, model.sigma2, model.tau2);
        const double got = log_config_likelihood(model, y, z);
        CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
        CHECK(log_config_likelihood(model, y, z, true) ==
              doctest::Approx(got + log_multinomial(z, 3)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("configuration likelihood input checks") {
  const auto model = BayesMixtureModel::uniform(2, 1.0, 1.0);
  const std::vector<double> y = {0.1, 0.2};
  const std::vector<std::size_t> bad = {0, 2};
  const std::vector<std::size_t> shorter = {0};
  CHECK_THROWS(log_config_likelihood(model, y, bad));
  CHECK_THROWS(log_config_likelihood(model, y, shorter));
}

TEST_CASE("merge Bayes factor is the likelihood ratio split / merged") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> weights = {0.1, 0.25, 0.4, 0.25};
    const BayesMixtureModel model{weights, u(rng), u(rng)};
    const std::size_t j = trial % 4, k = (trial / 4 + 1 + j) % 4;
    if (j == k) continue;
    // Two records plus bystanders in the clusters other than j and k.
    std::vector<double> y = {g(rng), g(rng), g(rng), g(rng)};
    std::vector<std::size_t> split = {j, k, 0, 0};
    std::size_t other = 0;
    while (other == j || other == k) ++other;
    split[2] = split[3] = other;
    auto merged = split;
    merged[0] = k;
    const double ratio = std::exp(log_config_likelihood(model, y, split, true) -
                                  log_config_likelihood(model, y, merged, true));
    const double bf = bayes_factor_merge(model, y[0], y[1], j, k);
    CHECK(bf == doctest::Approx(ratio).epsilon(1e-10));
  }
  const auto model = BayesMixtureModel::uniform(2, 1.0, 1.0);
  CHECK_THROWS(bayes_factor_merge(model, 0.0, 1.0, 1, 1));
  CHECK_THROWS(bayes_factor_merge(model, 0.0, 1.0, 0, 2));
  CHECK_THROWS(expected_bayes_factor(model, 0.0, 1.0, 0, 0));
}

TEST_CASE("expected Bayes factor matches Monte Carlo") {
  // The factor has finite variance under the data only for τ² < σ².
  struct Setting {
    double sigma2, tau2, mu1, mu2;
  };
  const std::array<Setting, 4> settings = {{
      {1.0, 0.3, 0.0, 0.5},
      {2.0, 0.4, -1.0, 1.5},
      {0.5, 0.05, 0.2, 0.1},
      {1.0, 0.2, 3.0, -2.0},
  }};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (const auto& s : settings) {
    const BayesMixtureModel model{{0.3, 0.7}, s.sigma2, s.tau2};
    const double sd = std::sqrt(s.sigma2);
    const std::size_t draws = 400000;
    double sum = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      sum += bayes_factor_merge(model, s.mu1 + sd * g(rng), s.mu2 + sd * g(rng), 0, 1);
    }
    CHECK(expected_bayes_factor(model, s.mu1, s.mu2, 0, 1) ==
          doctest::Approx(sum / draws).epsilon(0.01));
  }
}

TEST_CASE("expected Bayes factor grows with the separation of the means") {
  const BayesMixtureModel model{{0.5, 0.5}, 1.0, 4.0};
  double previous = 0.0;
  for (double gap : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const double v = expected_bayes_factor(model, -gap / 2, gap / 2, 0, 1);
    CHECK(v > previous);
    previous = v;
  }
}

TEST_CASE("mixture state bookkeeping") {
  const std::vector<double> y = {0.5, -1.0, 2.0, 0.25};
  MixtureState s(3, y, {0, 1, 0, 2});
  CHECK(s.counts() == std::vector<std::size_t>{2, 1, 1});
  CHECK(s.sums()[0] == doctest::Approx(2.5));
  CHECK(s.sum_squares()[0] == doctest::Approx(4.25));
  s.remove(2, y[2]);
  s.add(2, 1, y[2]);
  CHECK(s.labels()[2] == 1);
  CHECK(s.counts() == std::vector<std::size_t>{1, 2, 1});
  s.refresh(y);
  CHECK(s.consistent(y));
  CHECK_THROWS(MixtureState(2, y, {0, 1, 2, 0}));
}

TEST_CASE("Gibbs occupancy matches the exhaustive posterior at N = 3, K = 2") {
  const std::vector<double> y = {-0.3, 0.1, 0.9};
  const BayesMixtureModel model{{0.4, 0.6}, 0.25, 1.0};
  const auto configs = all_labelings(3, 2);
  std::vector<double> posterior(configs.size());
  double norm = 0.0;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    posterior[labeling_index(configs[c], 2)] = std::exp(log_config_likelihood(model, y, configs[c]));
    norm += posterior[labeling_index(configs[c], 2)];
  }
  for (auto& p : posterior) p /= norm;

  for (auto order : {ScanOrder::Sequential, ScanOrder::Random}) {
    Engine rng(derive_seed(123, {static_cast<std::uint64_t>(order)}));
    MixtureState state(2, y, {0, 0, 0});
    std::vector<double> occupancy(configs.size(), 0.0);
    const std::size_t sweeps = 100000;
    for (std::size_t s = 0; s < 100; ++s) gibbs_sweep(model, y, state, rng, order);
    for (std::size_t s = 0; s < sweeps; ++s) {
      gibbs_sweep(model, y, state, rng, order);
      occupancy[labeling_index(state.labels(), 2)] += 1.0 / sweeps;
    }
    double tv = 0.0;
    for (std::size_t c = 0; c < configs.size(); ++c) tv += std::abs(occupancy[c] - posterior[c]);
    CHECK(0.5 * tv < 0.01);
    CHECK(state.consistent(y));
  }
}

TEST_CASE("adjacency L0 equals the pairwise count") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::uniform_int_distribution<std::size_t> a_lab(0, 1 + rng() % 8), b_lab(0, 1 + rng() % 8);
    std::vector<std::size_t> a(n), b(n);
    for (auto& v : a) v = a_lab(rng);
    for (auto& v : b) v = b_lab(rng);
    const auto got = adjacency_l0(a, b);
    CHECK(got == oracle::adjacency_disagreements(a, b));
    CHECK(got % 2 == 0);
    // Renaming clusters does not change the partition.
    auto renamed = b;
    for (auto& v : renamed) v = 100 - v;
    CHECK(adjacency_l0(a, renamed) == got);
  }
  const std::vector<std::size_t> a = {0, 0, 1};
  CHECK(adjacency_l0(a, a) == 0);
  const std::vector<std::size_t> all_one = {0, 0, 0}, singles = {0, 1, 2};
  CHECK(adjacency_l0(all_one, singles) == 6);
  const std::vector<std::size_t> two = {0, 0};
  CHECK_THROWS(adjacency_l0(a, two));
}

TEST_CASE("bayes simulation run") {
  BayesSimConfig cfg;
  cfg.n = 20;
  cfg.c = 0.1;
  cfg.sweeps = 50;
  cfg.burn_in = 20;
  const auto r = run_bayes_sim(cfg);
  CHECK(r.l0_samples.size() == 50);
  CHECK(r.y.size() == 20);
  CHECK(r.true_labels.size() == 20);
  CHECK(r.sigma == doctest::Approx(0.1 / 20));
  const auto again = run_bayes_sim(cfg);
  CHECK(again.l0_samples == r.l0_samples);
  CHECK(again.y == r.y);
  cfg.c = 0.2;
  CHECK(run_bayes_sim(cfg).y != r.y);
}
