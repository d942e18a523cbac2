#pragma once

// Closed-population estimation after entity resolution: capture tables,
// synthetic multi-list databases, reconstruction of list-intersection counts
// from a clustering, and the independent-lists population estimator.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "microclust/rng.hpp"
#include "microclust/scale.hpp"

namespace microclust {

/// Counts n(x) for capture patterns x in {0,1}^T. Pattern x is stored at
/// index Σ_j x_j 2^j, so bit j says whether list j saw the entity; index 0
/// is the unobserved cell.
struct CaptureTable {
  std::size_t lists = 0;
  std::vector<std::uint64_t> counts;

  static CaptureTable zeros(std::size_t lists);
  std::size_t cells() const { return counts.size(); }
  std::uint64_t total() const;     // including n(0...0)
  std::uint64_t observed() const;  // excluding n(0...0)
  // M_j: entities seen on list j.
  std::vector<std::uint64_t> list_totals() const;
};

// π_x = Π_j p_j^{x_j} (1 - p_j)^{1 - x_j}, indexed like CaptureTable.
std::vector<double> cell_probabilities(std::span<const double> p);

// n ~ Multinomial(K, π(p)).
CaptureTable sample_capture_table(std::uint64_t entities,
                                  std::span<const double> p, Engine& rng);

struct GeneratedTable {
  CaptureTable table;
  std::vector<double> list_probs;  // the sampled p_j
};

/// p_j ~ Beta(a, b) independently for j = 1..T, then n ~ Multinomial(K, π(p)).
GeneratedTable generate_capture_table(std::uint64_t entities, std::size_t lists,
                                      double a, double b, Engine& rng);

// b such that (b / (a + b))^T = target, i.e. E[n(0)/K] = target.
double beta_b_for_unobserved_fraction(double a, std::size_t lists, double target);

struct SyntheticRecord {
  double y = 0.0;
  std::size_t list = 0;    // d_i, 0-based
  std::size_t entity = 0;  // 0-based; entity k has mean (k + 1)/K
};

/// Synthetic databases from a capture table. Patterns are visited in
/// ascending index order; for each, n(x) entities are drawn uniformly
/// without replacement from those not yet used, and each emits one record
/// per list in x with y ~ N((k+1)/K, σ²) and a list tag drawn without
/// replacement from the lists in x. Throws std::invalid_argument when the
/// table holds more than K entities or σ <= 0.
std::vector<SyntheticRecord> generate_databases(const CaptureTable& table,
                                                std::uint64_t entities,
                                                double sigma, Engine& rng);

/// Estimated intersection counts from a clustering of the records: each
/// non-empty cluster gets the pattern of lists its records carry, and n̂(x)
/// counts clusters with pattern x. The zero cell is left at 0.
CaptureTable reconstruct_counts(std::span<const SyntheticRecord> records,
                                std::span<const std::size_t> assignments,
                                std::size_t lists);

enum class IntervalMethod { LogNormal, Wald };

struct PopEstimate {
  double n_hat = 0.0;   // N̂ = N_obs + n̂(0)
  double n0_hat = 0.0;  // n̂(0)
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double variance = 0.0;  // of N̂ (equivalently n̂(0))
  std::uint64_t n_obs = 0;
  std::vector<double> p_hat;  // per list; 0 for dropped lists
  std::size_t iterations = 0;
  bool converged = false;
  bool unbounded = false;  // no recaptures: N̂ = ∞
  std::vector<std::size_t> dropped_lists;
  std::vector<std::string> warnings;
};

/// Maximum likelihood under independent lists. Solves
///   p̂_j = M_j / N̂,  N̂ = N_obs / (1 - Π_j (1 - p̂_j))
/// by fixed-point iteration from N̂⁽⁰⁾ = N_obs / (1 - Π_j (1 - M_j/N_obs)),
/// stopping when |ΔN̂| < 1e-8 (at most 10⁴ iterations; `converged` reports
/// which). The variance is the inverse observed information of the profile
/// log-likelihood in N; the default interval is the log-normal one on n̂(0):
/// [n̂0 / C, n̂0 · C], C = exp(z √log(1 + var/n̂0²)).
///
/// Lists nobody was seen on are dropped with a warning. Throws DataError if
/// fewer than two lists remain or nothing was observed.
PopEstimate estimate_population(const CaptureTable& observed,
                                IntervalMethod method = IntervalMethod::LogNormal,
                                double level = 0.95);

struct PopestSimConfig {
  std::uint64_t entities = 5000;  // K
  std::size_t lists = 3;          // T
  double a = 1.0;
  double b = 1.7;
  double c = 1.0;
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  ScaleConvention scale = ScaleConvention::SigmaLinear;
  IntervalMethod interval = IntervalMethod::LogNormal;
  std::optional<double> sigma;  // overrides the σ derived from c
  unsigned jobs = 1;
};

struct PopestReplicate {
  std::size_t replicate = 0;
  bool failed = false;
  std::string error;
  double prop_correct = 0.0;
  bool covered = false;
  std::uint64_t n0_true = 0;
  double n0_hat = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double sq_error_n0 = 0.0;
  double mse_nx = 0.0;  // mean over x != 0 of (n̂(x) - n(x))²
};

struct PopestSummary {
  double c = 0.0;
  double sigma = 0.0;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  double prop_correct = 0.0;
  double coverage = 0.0;
  double mse_n0 = 0.0;
  double mse_nx = 0.0;
};

struct PopestSimResult {
  std::vector<PopestReplicate> rows;
  PopestSummary summary;
};

/// Per replicate: capture table -> databases -> maximum likelihood
/// assignment to the known grid of means {k/K} -> reconstructed counts ->
/// population estimate. A replicate whose estimator throws or fails to
/// converge is marked failed and excluded from the summary.
PopestSimResult run_popest_sim(const PopestSimConfig& config);

}  // namespace microclust
