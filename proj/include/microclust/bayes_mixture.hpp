#pragma once

// Finite Gaussian mixture with known weights π and observation variance σ²,
// unknown means with iid Normal(0, τ²) priors. Means are integrated out, so
// a configuration (label vector) has a closed-form marginal likelihood.

#include <cstdint>
#include <span>
#include <vector>

#include "microclust/rng.hpp"
#include "microclust/scale.hpp"

namespace microclust {

struct BayesMixtureModel {
  std::vector<double> weights;  // π, length K
  double sigma2 = 1.0;          // σ²
  double tau2 = 9.0;            // τ²

  std::size_t components() const { return weights.size(); }
  // Throws std::invalid_argument unless π is a positive simplex vector
  // (sum within 1e-12) and σ², τ² > 0.
  void validate() const;

  static BayesMixtureModel uniform(std::size_t k, double sigma2, double tau2);
};

/// Labels plus per-cluster counts, sums and sums of squares.
class MixtureState {
 public:
  MixtureState(std::size_t components, std::span<const double> y,
               std::vector<std::size_t> labels);

  const std::vector<std::size_t>& labels() const { return labels_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  const std::vector<double>& sums() const { return sums_; }
  const std::vector<double>& sum_squares() const { return sum_squares_; }

  void remove(std::size_t i, double yi);
  void add(std::size_t i, std::size_t k, double yi);
  // Recomputes the statistics from the labels in index order.
  void refresh(std::span<const double> y);
  // True when the stored statistics equal a from-scratch recomputation.
  bool consistent(std::span<const double> y) const;

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::size_t> counts_;
  std::vector<double> sums_;
  std::vector<double> sum_squares_;
};

/// log L(y, z | π, τ², σ²) with the cluster means integrated out:
///   Σ_k [ N_k log π_k + log σ - N_k log(√(2π) σ) - ½ log(N_k τ² + σ²)
///         - Σ y²/(2σ²) + τ² (Σ y)² / (2σ² (N_k τ² + σ²)) ]
/// Empty clusters contribute 0. The multinomial coefficient N!/Π N_k! is
/// added only when `include_multinomial_coeff` is set; the Gibbs sampler
/// works with labeled configurations and leaves it out.
/// Throws std::invalid_argument for out-of-range labels or a length mismatch.
double log_config_likelihood(const BayesMixtureModel& model,
                             std::span<const double> y,
                             std::span<const std::size_t> labels,
                             bool include_multinomial_coeff = false);

/// Closed-form Bayes factor for two singletons y_i (in cluster j) and
/// y_i' (in cluster k) against the configuration that puts both in k:
///   (2π_j/π_k) σ√(2τ²+σ²)/(τ²+σ²)
///     × exp[(τ²/2σ²){(y_i²+y_i'²)/(τ²+σ²) - (y_i+y_i')²/(2τ²+σ²)}]
/// It equals L(split)/L(merged) with the multinomial coefficient included,
/// i.e. the odds *against* merging.
double bayes_factor_merge(const BayesMixtureModel& model, double yi, double yi2,
                          std::size_t j, std::size_t k);

/// Expectation of bayes_factor_merge over y_i ~ N(μ_i, σ²), y_i' ~ N(μ_i', σ²):
///   (2π_j/π_k) (2τ²+σ²)/√(2(σ²+τ²)² - σ⁴)
///     × exp[-¼ τ² {-(μ_i-μ_i')²/σ⁴ + (μ_i+μ_i')²/(2(σ²+τ²)² - σ⁴)}]
double expected_bayes_factor(const BayesMixtureModel& model, double mu_i,
                             double mu_i2, std::size_t j, std::size_t k);

enum class ScanOrder { Sequential, Random };

/// One collapsed Gibbs sweep. Each observation is removed from its cluster
/// and redrawn from p(z_i = k | z_-i, y) ∝ π_k N(y_i; m_k, s_k² + σ²) with
/// m_k = τ² S_k/(N_k τ² + σ²), s_k² = τ²σ²/(N_k τ² + σ²) computed from the
/// other members. Statistics are refreshed from scratch at the end.
void gibbs_sweep(const BayesMixtureModel& model, std::span<const double> y,
                 MixtureState& state, Engine& rng,
                 ScanOrder order = ScanOrder::Sequential);

/// ||A - A0||_0 for the co-clustering matrices of two labelings: the number
/// of ordered pairs i != j on which they disagree. Always even. Throws
/// std::invalid_argument on a length mismatch.
std::uint64_t adjacency_l0(std::span<const std::size_t> a,
                           std::span<const std::size_t> b);

struct BayesSimConfig {
  std::size_t n = 100;
  double c = 1.0;
  std::size_t sweeps = 2000;  // retained
  std::size_t burn_in = 500;
  std::uint64_t seed = 1;
  ScaleConvention scale = ScaleConvention::SigmaLinear;
  double tau2 = 9.0;
  std::size_t components = 0;  // 0 -> n
  ScanOrder order = ScanOrder::Sequential;
};

struct BayesSimResult {
  double c = 0.0;
  double sigma = 0.0;
  std::vector<double> y;
  std::vector<std::size_t> true_labels;
  std::vector<std::uint64_t> l0_samples;  // one per retained sweep
};

/// z_i ~ uniform over K components, y_i | z_i ~ N((z_i + 1)/N, σ²); runs the
/// collapsed sampler from a uniform random labeling and records the L0 loss
/// against the true partition after every retained sweep.
BayesSimResult run_bayes_sim(const BayesSimConfig& config);

}  // namespace microclust
