#pragma once

// Maximum-likelihood assignment of observations to the components of a
// known Gaussian mixture with a common spherical covariance.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "microclust/scale.hpp"

namespace microclust {

// Row-major set of points in R^dim.
class PointSet {
 public:
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }
  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  void push_back(std::span<const double> point);
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

/// N components with means origin + k * ℓ/N, k = 1..N (stored 0-based),
/// and common standard deviation σ.
struct EquallySpacedMixture1D {
  std::size_t components = 0;
  double range_width = 1.0;  // ℓ
  double sigma = 1.0;
  double origin = 0.0;

  double spacing() const { return range_width / static_cast<double>(components); }
  double mean(std::size_t k) const {
    return origin + static_cast<double>(k + 1) * spacing();
  }
  PointSet means() const;
  // Throws std::invalid_argument on N = 0 or non-positive ℓ, σ.
  void validate() const;
};

struct SphericalMixture {
  PointSet means;
  double sigma = 1.0;
  double separation = 0.0;  // minimum pairwise distance
};

/// argmax_k log φ(y; μ_k, σ² I) = argmin_k ||y - μ_k||². Ties go to the
/// lowest index. Throws std::invalid_argument for an empty mean set, a
/// dimension mismatch or σ <= 0.
std::size_t ml_assign(std::span<const double> y, const PointSet& means,
                      double sigma);

/// Same answer as ml_assign over mix.means(), in O(1): rounds (y - μ_1)/δ
/// and compares the bracketing components with the scan's arithmetic.
std::size_t ml_assign_1d(double y, const EquallySpacedMixture1D& mix);

/// Probability that an observation is assigned to its own component.
/// Interior components: 2Φ(δ/2σ) - 1; the two end components: Φ(δ/2σ).
/// With edge_exact unset every component uses the interior expression.
double correct_prob_1d(const EquallySpacedMixture1D& mix, bool edge_exact);

struct Remark2Bounds {
  // 2 exp(-2 t² N) on P[|X_N/N - (2Φ(ℓ/2Nσ) - 1)| > t].
  double concentration_bound = 0.0;
  // exp(-ℓ / (√(2π) σ)), the N -> ∞ limit of P(X_N = 0).
  double zero_correct_limit = 0.0;
  // [2 - 2Φ(ℓ/2Nσ)]^N, every component treated as interior.
  double zero_correct_finite = 0.0;
  // P(X_N = 0) on the plain grid, where the two ends miss with 1 - Φ.
  double zero_correct_finite_edges = 0.0;
};

Remark2Bounds remark2_bounds(const EquallySpacedMixture1D& mix, double t);

struct LatticeMeans {
  PointSet means;
  std::size_t side = 0;  // points per axis
  double separation = 0.0;
};

/// N points from the regular side^p grid on [0,1]^p, side = ⌈N^{1/p}⌉,
/// taken in lexicographic order. Separation is 1/(side-1) (∞ for N = 1).
LatticeMeans build_lattice_means(std::size_t n, std::size_t dim);

struct ChiSquareBounds {
  double lower = 0.0;  // P(χ²_p < δ²/(2σ²))
  double upper = 0.0;  // P(χ²_p < δ²/σ²)
  // Φ{(δ²/(cσ²) - p) / √(p/c)} for c = 1 and c = 2.
  double normal_approx_c1 = 0.0;
  double normal_approx_c2 = 0.0;
  // P(χ²_p < δ²/(4σ²)): the ball of radius δ/2 sits inside every Voronoi
  // cell of a δ-separated set, so this one is a guaranteed lower bound.
  double inscribed_ball_lower = 0.0;
};

ChiSquareBounds correct_prob_bounds_p(double delta, double sigma, std::size_t dim);

enum class EdgeMode {
  Exact,   // plain grid: the end components have one neighbour
  Padded,  // one decoy component past each end, so every entity is interior
};

struct AssignmentSimConfig {
  std::size_t n = 5000;
  double c = 1.0;
  double range_width = 1.0;
  std::size_t replicates = 50;
  std::uint64_t seed = 1;
  ScaleConvention scale = ScaleConvention::SigmaLinear;
  EdgeMode edges = EdgeMode::Exact;
  // Overrides the σ derived from c when set.
  std::optional<double> sigma;
  unsigned jobs = 1;
};

struct AssignmentSimResult {
  double c = 0.0;
  std::size_t n = 0;
  std::size_t replicates = 0;
  double sigma = 0.0;
  double proportion_correct_mean = 0.0;
  double proportion_correct_se = 0.0;
  double zero_correct_frequency = 0.0;
  // correct_prob_1d: edge-exact for EdgeMode::Exact, interior for Padded.
  double theory_proportion = 0.0;
  std::vector<double> replicate_proportions;
};

/// Draws y_i ~ N(μ_i, σ²) for every component i, assigns each by maximum
/// likelihood, and summarizes the proportion correct across replicates.
AssignmentSimResult run_assignment_sim(const AssignmentSimConfig& config);

struct DimensionSimConfig {
  std::size_t n = 64;
  std::size_t dim = 3;
  double sigma = 0.1;
  std::size_t replicates = 50;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct DimensionSimResult {
  std::size_t n = 0;
  std::size_t dim = 0;
  double sigma = 0.0;
  std::size_t replicates = 0;
  double separation = 0.0;
  double proportion_correct = 0.0;
  double proportion_se = 0.0;
  ChiSquareBounds bounds;
  // lower - 3 SE <= proportion <= upper + 3 SE
  bool within_bounds = false;
};

DimensionSimResult run_dimension_sim(const DimensionSimConfig& config);

}  // namespace microclust
