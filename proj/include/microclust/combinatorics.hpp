#pragma once

// Exact and bounded quantities for the random-allocation matching problem:
// records that share a name are assigned identifiers by a uniformly random
// permutation within the name group, and z_m counts the records that land
// on their own identifier.

#include <cstdint>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace microclust {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Group sizes at or below this use exact rational arithmetic in match_pmf.
inline constexpr std::uint64_t kExactPmfLimit = 20;

/// Group sizes N_m of M distinct names over N records.
///
/// Stored as (size, multiplicity) buckets sorted by size: census-scale
/// joins produce ~10^8 singleton groups, which would not fit as a flat list.
class NameHistogram {
 public:
  struct Bucket {
    std::uint64_t size = 0;    // N_m
    std::uint64_t groups = 0;  // number of names with this N_m
    bool operator==(const Bucket&) const = default;
  };

  // Throws std::invalid_argument on an empty list or a zero size.
  static NameHistogram from_sizes(std::span<const std::uint64_t> sizes);
  static NameHistogram from_buckets(std::vector<Bucket> buckets);

  const std::vector<Bucket>& buckets() const { return buckets_; }
  std::uint64_t records() const { return records_; }  // N
  std::uint64_t names() const { return names_; }      // M
  double sum_squared_sizes() const { return sum_sq_; }
  std::vector<std::uint64_t> sizes() const;

 private:
  explicit NameHistogram(std::vector<Bucket> buckets);

  std::vector<Bucket> buckets_;
  std::uint64_t records_ = 0;
  std::uint64_t names_ = 0;
  double sum_sq_ = 0.0;
};

/// Distribution of the number of fixed points z of a uniform permutation of
/// `group_size` elements. `exact` is filled for group_size <= kExactPmfLimit.
struct MatchDistribution {
  std::uint64_t group_size = 0;
  std::vector<double> pmf;      // pmf[z], z = 0..group_size
  std::vector<Rational> exact;  // empty above kExactPmfLimit
};

struct ExpectationBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// !n, the number of derangements of n elements. !0 = 1.
BigInt subfactorial(unsigned n);
// !0 .. !n in one pass.
std::vector<BigInt> subfactorials(unsigned n);

MatchDistribution match_pmf(std::uint64_t group_size);
// pr(z = k) = C(n, k) !(n - k) / n!, exactly, for any n >= 1.
std::vector<Rational> match_pmf_exact(unsigned group_size);

// Γ(n,1)/Γ(n) and that plus 2^{n-1}/(n-1)!.
ExpectationBounds expected_matches_bounds(std::uint64_t group_size);

// Σ_z z · pr(z), evaluated from match_pmf_exact rather than assumed.
Rational expected_matches_exact(unsigned group_size);

// log pr(z = N) = -Σ_m log N_m!.
double log_prob_all_correct(const NameHistogram& hist);
Rational prob_all_correct_exact(const NameHistogram& hist);

// Entropy of the empirical name distribution, in nats.
double name_entropy(const NameHistogram& hist);

// N^2 / Σ_m N_m^2.
double concentration_ratio(const NameHistogram& hist);

/// Hoeffding bound 2 exp(-2 N² t² / Σ N_m²) on P[|S_M - M/N| > t].
/// Throws std::invalid_argument unless t > 0.
double hoeffding_tail(const NameHistogram& hist, double t);
double log_hoeffding_tail(const NameHistogram& hist, double t);

/// Monte Carlo draws of S_M = z / N: each replicate permutes every name
/// group uniformly and independently and counts fixed points. Replicate r
/// uses the stream derived from (seed, r), so `jobs` does not change output.
std::vector<double> simulate_random_allocation(const NameHistogram& hist,
                                               std::size_t replicates,
                                               std::uint64_t seed,
                                               unsigned jobs = 1);

}  // namespace microclust
