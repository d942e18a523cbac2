#include "microclust/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "microclust/parallel.hpp"
#include "microclust/rng.hpp"
#include "microclust/special.hpp"

namespace microclust {

NameHistogram::NameHistogram(std::vector<Bucket> buckets)
    : buckets_(std::move(buckets)) {
  for (const auto& b : buckets_) {
    records_ += b.size * b.groups;
    names_ += b.groups;
    sum_sq_ += static_cast<double>(b.size) * static_cast<double>(b.size) *
               static_cast<double>(b.groups);
  }
}

NameHistogram NameHistogram::from_sizes(std::span<const std::uint64_t> sizes) {
  std::vector<Bucket> buckets;
  buckets.reserve(sizes.size());
  for (auto s : sizes) buckets.push_back({s, 1});
  return from_buckets(std::move(buckets));
}

NameHistogram NameHistogram::from_buckets(std::vector<Bucket> buckets) {
  std::erase_if(buckets, [](const Bucket& b) { return b.groups == 0; });
  if (buckets.empty()) {
    throw std::invalid_argument("name histogram needs at least one group");
  }
  for (const auto& b : buckets) {
    if (b.size == 0) {
      throw std::invalid_argument("name group sizes must be positive");
    }
  }
  std::sort(buckets.begin(), buckets.end(),
            [](const Bucket& a, const Bucket& b) { return a.size < b.size; });
  std::vector<Bucket> merged;
  for (const auto& b : buckets) {
    if (!merged.empty() && merged.back().size == b.size) {
      merged.back().groups += b.groups;
    } else {
      merged.push_back(b);
    }
  }
  return NameHistogram(std::move(merged));
}

std::vector<std::uint64_t> NameHistogram::sizes() const {
  std::vector<std::uint64_t> out;
  out.reserve(names_);
  for (const auto& b : buckets_) out.insert(out.end(), b.groups, b.size);
  return out;
}

std::vector<BigInt> subfactorials(unsigned n) {
  std::vector<BigInt> d(std::max(2u, n + 1));
  d[0] = 1;
  d[1] = 0;
  for (unsigned k = 2; k <= n; ++k) d[k] = (k - 1) * (d[k - 1] + d[k - 2]);
  d.resize(n + 1);
  return d;
}

BigInt subfactorial(unsigned n) { return subfactorials(n).back(); }

std::vector<Rational> match_pmf_exact(unsigned group_size) {
  if (group_size == 0) {
    throw std::invalid_argument("match_pmf: group size must be >= 1");
  }
  const auto d = subfactorials(group_size);
  BigInt factorial = 1;
  for (unsigned k = 2; k <= group_size; ++k) factorial *= k;
  std::vector<Rational> pmf(group_size + 1);
  BigInt binom = 1;  // C(n, z)
  for (unsigned z = 0; z <= group_size; ++z) {
    pmf[z] = Rational(binom * d[group_size - z], factorial);
    binom = binom * (group_size - z) / (z + 1);
  }
  return pmf;
}

MatchDistribution match_pmf(std::uint64_t group_size) {
  if (group_size == 0) {
    throw std::invalid_argument("match_pmf: group size must be >= 1");
  }
  MatchDistribution out;
  out.group_size = group_size;
  if (group_size <= kExactPmfLimit) {
    out.exact = match_pmf_exact(static_cast<unsigned>(group_size));
    out.pmf.reserve(out.exact.size());
    for (const auto& p : out.exact) out.pmf.push_back(p.convert_to<double>());
    return out;
  }
  // pr(z) = (1/z!) Σ_{i=0}^{n-z} (-1)^i / i!; the partial sums converge to
  // 1/e after ~20 terms, so log-space factorials keep this stable for any n.
  std::vector<double> partial(group_size + 1);
  double term = 1.0;
  double acc = 0.0;
  for (std::uint64_t i = 0; i <= group_size; ++i) {
    if (i > 0) term /= -static_cast<double>(i);
    acc += term;
    partial[i] = acc;
  }
  out.pmf.resize(group_size + 1);
  for (std::uint64_t z = 0; z <= group_size; ++z) {
    out.pmf[z] = std::exp(-log_factorial(static_cast<double>(z))) *
                 partial[group_size - z];
  }
  out.pmf[group_size - 1] = 0.0;
  return out;
}

ExpectationBounds expected_matches_bounds(std::uint64_t group_size) {
  if (group_size == 0) {
    throw std::invalid_argument("expected_matches_bounds: group size must be >= 1");
  }
  // Γ(n,1)/Γ(n) = e^{-1} Σ_{k<n} 1/k! for integer n.
  double sum = 0.0;
  double term = 1.0;
  for (std::uint64_t k = 0; k < group_size; ++k) {
    if (k > 0) term /= static_cast<double>(k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  const double lower = sum * std::exp(-1.0);
  const double n1 = static_cast<double>(group_size - 1);
  const double gap = std::exp(n1 * std::numbers::ln2 - log_factorial(n1));
  return {lower, lower + gap};
}

Rational expected_matches_exact(unsigned group_size) {
  const auto pmf = match_pmf_exact(group_size);
  Rational e = 0;
  for (unsigned z = 1; z < pmf.size(); ++z) e += z * pmf[z];
  return e;
}

double log_prob_all_correct(const NameHistogram& hist) {
  double acc = 0.0;
  for (const auto& b : hist.buckets()) {
    acc -= static_cast<double>(b.groups) *
           log_factorial(static_cast<double>(b.size));
  }
  return acc;
}

Rational prob_all_correct_exact(const NameHistogram& hist) {
  BigInt denom = 1;
  for (const auto& b : hist.buckets()) {
    BigInt f = 1;
    for (std::uint64_t k = 2; k <= b.size; ++k) f *= k;
    denom *= boost::multiprecision::pow(f, static_cast<unsigned>(b.groups));
  }
  return Rational(BigInt(1), denom);
}

double name_entropy(const NameHistogram& hist) {
  const double n = static_cast<double>(hist.records());
  double h = 0.0;
  for (const auto& b : hist.buckets()) {
    const double q = static_cast<double>(b.size) / n;
    h -= static_cast<double>(b.groups) * q * std::log(q);
  }
  return h;
}

double concentration_ratio(const NameHistogram& hist) {
  const double n = static_cast<double>(hist.records());
  return n * n / hist.sum_squared_sizes();
}

double log_hoeffding_tail(const NameHistogram& hist, double t) {
  if (!(t > 0.0)) {
    throw std::invalid_argument("hoeffding_tail: t must be positive");
  }
  return std::numbers::ln2 - 2.0 * concentration_ratio(hist) * t * t;
}

double hoeffding_tail(const NameHistogram& hist, double t) {
  return std::exp(log_hoeffding_tail(hist, t));
}

std::vector<double> simulate_random_allocation(const NameHistogram& hist,
                                               std::size_t replicates,
                                               std::uint64_t seed,
                                               unsigned jobs) {
  if (replicates == 0) {
    throw std::invalid_argument("simulate_random_allocation: replicates must be >= 1");
  }
  const auto tag = stream_tag("random-allocation");
  const double n = static_cast<double>(hist.records());
  std::vector<double> out(replicates);
  parallel_for(replicates, jobs, [&](std::size_t r) {
    auto rng = make_engine(seed, {tag, r});
    std::vector<std::uint64_t> perm;
    std::uint64_t fixed = 0;
    for (const auto& b : hist.buckets()) {
      if (b.size == 1) {
        fixed += b.groups;
        continue;
      }
      perm.resize(b.size);
      for (std::uint64_t g = 0; g < b.groups; ++g) {
        std::iota(perm.begin(), perm.end(), std::uint64_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::uint64_t i = 0; i < b.size; ++i) fixed += (perm[i] == i);
      }
    }
    out[r] = static_cast<double>(fixed) / n;
  });
  return out;
}

}  // namespace microclust
