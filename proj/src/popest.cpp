#include "microclust/popest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>

#include "microclust/errors.hpp"
#include "microclust/gaussian_assignment.hpp"
#include "microclust/parallel.hpp"
#include "microclust/special.hpp"

namespace microclust {

CaptureTable CaptureTable::zeros(std::size_t lists) {
  if (lists == 0 || lists > 20) {
    throw std::invalid_argument("capture table needs 1..20 lists");
  }
  return {lists, std::vector<std::uint64_t>(std::size_t{1} << lists, 0)};
}

std::uint64_t CaptureTable::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t CaptureTable::observed() const {
  return counts.empty() ? 0 : total() - counts[0];
}

std::vector<std::uint64_t> CaptureTable::list_totals() const {
  std::vector<std::uint64_t> m(lists, 0);
  for (std::size_t x = 1; x < counts.size(); ++x) {
    for (std::size_t j = 0; j < lists; ++j) {
      if (x >> j & 1U) m[j] += counts[x];
    }
  }
  return m;
}

std::vector<double> cell_probabilities(std::span<const double> p) {
  std::vector<double> pi(std::size_t{1} << p.size());
  for (std::size_t x = 0; x < pi.size(); ++x) {
    double prob = 1.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      prob *= (x >> j & 1U) ? p[j] : 1.0 - p[j];
    }
    pi[x] = prob;
  }
  return pi;
}

CaptureTable sample_capture_table(std::uint64_t entities,
                                  std::span<const double> p, Engine& rng) {
  for (double pj : p) {
    if (!(pj >= 0.0 && pj <= 1.0)) {
      throw std::invalid_argument("list probabilities must lie in [0, 1]");
    }
  }
  auto table = CaptureTable::zeros(p.size());
  const auto pi = cell_probabilities(p);
  // Multinomial as a chain of conditional binomials.
  std::uint64_t left = entities;
  double mass = 1.0;
  for (std::size_t x = 0; x + 1 < pi.size() && left > 0; ++x) {
    const double q = mass > 0.0 ? std::clamp(pi[x] / mass, 0.0, 1.0) : 1.0;
    std::binomial_distribution<std::uint64_t> draw(left, q);
    table.counts[x] = draw(rng);
    left -= table.counts[x];
    mass -= pi[x];
  }
  table.counts.back() += left;
  return table;
}

GeneratedTable generate_capture_table(std::uint64_t entities, std::size_t lists,
                                      double a, double b, Engine& rng) {
  if (entities == 0) throw std::invalid_argument("need at least one entity");
  if (lists < 2) throw std::invalid_argument("need at least two lists");
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("Beta hyperparameters must be positive");
  }
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  std::vector<double> p(lists);
  for (auto& pj : p) {
    const double x = ga(rng);
    const double y = gb(rng);
    pj = x / (x + y);
  }
  auto table = sample_capture_table(entities, p, rng);
  return {std::move(table), std::move(p)};
}

double beta_b_for_unobserved_fraction(double a, std::size_t lists, double target) {
  if (!(a > 0.0) || lists == 0 || !(target > 0.0 && target < 1.0)) {
    throw std::invalid_argument("need a > 0, T >= 1 and a target in (0, 1)");
  }
  const double r = std::pow(target, 1.0 / static_cast<double>(lists));
  return a * r / (1.0 - r);
}

std::vector<SyntheticRecord> generate_databases(const CaptureTable& table,
                                                std::uint64_t entities,
                                                double sigma, Engine& rng) {
  if (!(sigma > 0.0)) throw std::invalid_argument("generate_databases: sigma must be > 0");
  if (table.total() > entities) {
    throw std::invalid_argument("generate_databases: table holds more than K entities");
  }
  std::vector<std::size_t> pool(entities);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::size_t used = 0;
  std::normal_distribution<double> noise(0.0, sigma);
  const auto k_total = static_cast<double>(entities);

  std::size_t expected = 0;
  for (std::size_t x = 0; x < table.cells(); ++x) {
    expected += table.counts[x] * static_cast<std::size_t>(std::popcount(x));
  }
  std::vector<SyntheticRecord> records;
  records.reserve(expected);
  std::vector<std::size_t> lists_left;

  for (std::size_t x = 0; x < table.cells(); ++x) {
    for (std::uint64_t draw = 0; draw < table.counts[x]; ++draw) {
      std::uniform_int_distribution<std::size_t> pick(used, pool.size() - 1);
      std::swap(pool[used], pool[pick(rng)]);
      const std::size_t k = pool[used++];
      lists_left.clear();
      for (std::size_t j = 0; j < table.lists; ++j) {
        if (x >> j & 1U) lists_left.push_back(j);
      }
      while (!lists_left.empty()) {
        const double y = static_cast<double>(k + 1) / k_total + noise(rng);
        std::uniform_int_distribution<std::size_t> tag(0, lists_left.size() - 1);
        const auto t = tag(rng);
        records.push_back({y, lists_left[t], k});
        lists_left.erase(lists_left.begin() + static_cast<std::ptrdiff_t>(t));
      }
    }
  }
  return records;
}

CaptureTable reconstruct_counts(std::span<const SyntheticRecord> records,
                                std::span<const std::size_t> assignments,
                                std::size_t lists) {
  if (records.size() != assignments.size()) {
    throw std::invalid_argument("reconstruct_counts: one assignment per record required");
  }
  auto table = CaptureTable::zeros(lists);
  std::unordered_map<std::size_t, std::size_t> pattern;
  pattern.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].list >= lists) {
      throw std::invalid_argument("reconstruct_counts: list tag out of range");
    }
    pattern[assignments[i]] |= std::size_t{1} << records[i].list;
  }
  for (const auto& [_, x] : pattern) ++table.counts[x];
  return table;
}

namespace {

// Observed information of the profile log-likelihood
//   l(N) = log N! - log (N - N_obs)! + Σ_j [M_j log(M_j/N) + (N - M_j) log(1 - M_j/N)]
// at N, i.e. -l''(N).
double profile_information(double n, double n_obs, std::span<const double> m) {
  double info = trigamma(n - n_obs + 1.0) - trigamma(n + 1.0);
  for (double mj : m) info -= 1.0 / (n - mj) - 1.0 / n;
  return info;
}

}  // namespace

PopEstimate estimate_population(const CaptureTable& observed,
                                IntervalMethod method, double level) {
  if (observed.lists < 2) throw DataError("population estimate needs at least two lists");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  }
  PopEstimate est;
  est.n_obs = observed.observed();
  if (est.n_obs == 0) throw DataError("population estimate needs observed entities");

  const auto totals = observed.list_totals();
  std::vector<double> m;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < observed.lists; ++j) {
    if (totals[j] == 0) {
      est.dropped_lists.push_back(j);
      est.warnings.push_back("list " + std::to_string(j) +
                             " has no captures and was dropped");
    } else {
      m.push_back(static_cast<double>(totals[j]));
      kept.push_back(j);
    }
  }
  if (m.size() < 2) throw DataError("fewer than two lists have captures");
  est.p_hat.assign(observed.lists, 0.0);

  const auto n_obs = static_cast<double>(est.n_obs);
  const double captures = std::accumulate(m.begin(), m.end(), 0.0);
  const auto inf = std::numeric_limits<double>::infinity();
  if (captures <= n_obs) {
    // Nobody was seen twice: the likelihood increases without bound in N.
    est.unbounded = true;
    est.converged = true;
    est.n_hat = est.n0_hat = est.ci_upper = est.variance = inf;
    est.ci_lower = 0.0;
    est.warnings.push_back("no recaptures; population size is unbounded");
    return est;
  }

  auto miss_prob = [&](double n) {
    double q = 1.0;
    for (double mj : m) q *= 1.0 - mj / n;
    return q;
  };
  double n = n_obs / (1.0 - miss_prob(n_obs));
  est.converged = false;
  for (std::size_t it = 1; it <= 10000; ++it) {
    const double next = n_obs / (1.0 - miss_prob(n));
    const double step = std::abs(next - n);
    n = next;
    est.iterations = it;
    if (step < 1e-8) {
      est.converged = true;
      break;
    }
  }
  est.n_hat = n;
  est.n0_hat = std::max(0.0, n - n_obs);
  for (std::size_t idx = 0; idx < kept.size(); ++idx) est.p_hat[kept[idx]] = m[idx] / n;

  const double z = boost::math::quantile(
      boost::math::complement(boost::math::normal(), (1.0 - level) / 2.0));
  const bool full_list =
      std::any_of(m.begin(), m.end(), [&](double mj) { return mj >= n_obs; });
  if (full_list || est.n0_hat <= 0.0) {
    // Some list saw everyone: N̂ = N_obs with no uncertainty left.
    est.variance = 0.0;
    est.ci_lower = est.ci_upper = est.n0_hat;
    return est;
  }
  const double info = profile_information(n, n_obs, m);
  est.variance = info > 0.0 ? 1.0 / info : inf;
  if (method == IntervalMethod::LogNormal) {
    const double spread =
        std::exp(z * std::sqrt(std::log1p(est.variance / (est.n0_hat * est.n0_hat))));
    est.ci_lower = est.n0_hat / spread;
    est.ci_upper = est.n0_hat * spread;
  } else {
    const double half = z * std::sqrt(est.variance);
    est.ci_lower = std::max(0.0, est.n0_hat - half);
    est.ci_upper = est.n0_hat + half;
  }
  return est;
}

PopestSimResult run_popest_sim(const PopestSimConfig& config) {
  if (config.entities < 2 || config.lists < 2 || config.replicates == 0) {
    throw std::invalid_argument("popest sim: need K >= 2, T >= 2, replicates >= 1");
  }
  const double sigma =
      config.sigma ? *config.sigma : sigma_for(config.c, config.entities, config.scale);
  const EquallySpacedMixture1D grid{config.entities, 1.0, sigma, 0.0};
  grid.validate();

  PopestSimResult out;
  out.rows.resize(config.replicates);
  const auto tag = stream_tag("popest-sim");
  const auto cbits = double_bits(config.c);

  parallel_for(config.replicates, config.jobs, [&](std::size_t r) {
    auto& row = out.rows[r];
    row.replicate = r;
    try {
      auto rng = make_engine(config.seed, {tag, cbits, r});
      const auto gen = generate_capture_table(config.entities, config.lists,
                                              config.a, config.b, rng);
      const auto records = generate_databases(gen.table, config.entities, sigma, rng);
      std::vector<std::size_t> assigned(records.size());
      std::size_t correct = 0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        assigned[i] = ml_assign_1d(records[i].y, grid);
        correct += assigned[i] == records[i].entity;
      }
      row.prop_correct = records.empty()
                             ? 1.0
                             : static_cast<double>(correct) /
                                   static_cast<double>(records.size());
      const auto est_table = reconstruct_counts(records, assigned, config.lists);
      double sq = 0.0;
      for (std::size_t x = 1; x < est_table.cells(); ++x) {
        const double d = static_cast<double>(est_table.counts[x]) -
                         static_cast<double>(gen.table.counts[x]);
        sq += d * d;
      }
      row.mse_nx = sq / static_cast<double>(est_table.cells() - 1);
      row.n0_true = gen.table.counts[0];

      const auto est = estimate_population(est_table, config.interval);
      if (!est.converged) throw NumericalError("population estimate did not converge");
      row.n0_hat = est.n0_hat;
      row.ci_lower = est.ci_lower;
      row.ci_upper = est.ci_upper;
      const auto truth = static_cast<double>(row.n0_true);
      row.covered = est.ci_lower <= truth && truth <= est.ci_upper;
      row.sq_error_n0 = (est.n0_hat - truth) * (est.n0_hat - truth);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  });

  auto& s = out.summary;
  s.c = config.c;
  s.sigma = sigma;
  s.replicates = config.replicates;
  std::size_t ok = 0;
  for (const auto& row : out.rows) {
    if (row.failed) {
      ++s.failed;
      continue;
    }
    ++ok;
    s.prop_correct += row.prop_correct;
    s.coverage += row.covered ? 1.0 : 0.0;
    s.mse_n0 += row.sq_error_n0;
    s.mse_nx += row.mse_nx;
  }
  if (ok > 0) {
    const auto k = static_cast<double>(ok);
    s.prop_correct /= k;
    s.coverage /= k;
    s.mse_n0 /= k;
    s.mse_nx /= k;
  }
  return out;
}

}  // namespace microclust
