#include "microclust/gaussian_assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "microclust/parallel.hpp"
#include "microclust/rng.hpp"
#include "microclust/special.hpp"

namespace microclust {

double sigma_for(double c, std::uint64_t n, ScaleConvention convention) {
  if (!(c > 0.0) || n == 0) {
    throw std::invalid_argument("sigma_for: need c > 0 and n >= 1");
  }
  const double ratio = c / static_cast<double>(n);
  return convention == ScaleConvention::SigmaLinear ? ratio : std::sqrt(ratio);
}

std::string_view to_string(ScaleConvention convention) {
  return convention == ScaleConvention::SigmaLinear ? "sigma" : "sigma-squared";
}

ScaleConvention parse_scale_convention(std::string_view text) {
  if (text == "sigma") return ScaleConvention::SigmaLinear;
  if (text == "sigma-squared") return ScaleConvention::SigmaSquared;
  throw std::invalid_argument("unknown scale convention '" + std::string(text) +
                              "' (expected sigma or sigma-squared)");
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) {
    throw std::invalid_argument("PointSet: coordinate count is not a multiple of dim");
  }
}

void PointSet::push_back(std::span<const double> point) {
  if (point.size() != dim_) {
    throw std::invalid_argument("PointSet: point has the wrong dimension");
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

PointSet EquallySpacedMixture1D::means() const {
  std::vector<double> m(components);
  for (std::size_t k = 0; k < components; ++k) m[k] = mean(k);
  return PointSet(1, std::move(m));
}

void EquallySpacedMixture1D::validate() const {
  if (components == 0) throw std::invalid_argument("mixture needs >= 1 component");
  if (!(range_width > 0.0)) throw std::invalid_argument("range width must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
}

std::size_t ml_assign(std::span<const double> y, const PointSet& means,
                      double sigma) {
  if (means.empty()) throw std::invalid_argument("ml_assign: no components");
  if (y.size() != means.dim()) {
    throw std::invalid_argument("ml_assign: dimension mismatch");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("ml_assign: sigma must be > 0");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  const std::size_t dim = means.dim();
  const double* mu = means.coords().data();
  for (std::size_t k = 0; k < means.size(); ++k, mu += dim) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      const double diff = y[j] - mu[j];
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

std::size_t ml_assign_1d(double y, const EquallySpacedMixture1D& mix) {
  const std::size_t n = mix.components;
  if (n == 0) throw std::invalid_argument("ml_assign_1d: no components");
  const double pos = std::floor((y - mix.mean(0)) / mix.spacing());
  // Candidates pos-1 .. pos+2 always contain the nearest mean, even when the
  // division above is off by an ulp.
  const double lo_d = std::clamp(pos - 1.0, 0.0, static_cast<double>(n - 1));
  const double hi_d = std::clamp(pos + 2.0, 0.0, static_cast<double>(n - 1));
  const auto lo = static_cast<std::size_t>(lo_d);
  const auto hi = static_cast<std::size_t>(hi_d);
  std::size_t best = lo;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = lo; k <= hi; ++k) {
    const double diff = y - mix.mean(k);
    const double d2 = diff * diff;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

double correct_prob_1d(const EquallySpacedMixture1D& mix, bool edge_exact) {
  mix.validate();
  const double x = mix.spacing() / (2.0 * mix.sigma);
  const double interior = 1.0 - 2.0 * normal_sf(x);
  if (!edge_exact) return interior;
  const auto n = static_cast<double>(mix.components);
  if (mix.components == 1) return 1.0;
  const double edge = normal_cdf(x);
  return ((n - 2.0) * interior + 2.0 * edge) / n;
}

Remark2Bounds remark2_bounds(const EquallySpacedMixture1D& mix, double t) {
  mix.validate();
  if (!(t > 0.0)) throw std::invalid_argument("remark2_bounds: t must be > 0");
  const auto n = static_cast<double>(mix.components);
  const double x = mix.range_width / (2.0 * n * mix.sigma);
  const double miss_interior = 2.0 * normal_sf(x);  // 2 - 2Φ(x)
  Remark2Bounds b;
  b.concentration_bound = 2.0 * std::exp(-2.0 * t * t * n);
  b.zero_correct_limit =
      std::exp(-mix.range_width / (std::sqrt(2.0 * std::numbers::pi) * mix.sigma));
  b.zero_correct_finite = std::exp(n * std::log(miss_interior));
  if (mix.components >= 2) {
    b.zero_correct_finite_edges = std::exp((n - 2.0) * std::log(miss_interior) +
                                           2.0 * std::log(normal_sf(x)));
  }
  return b;
}

LatticeMeans build_lattice_means(std::size_t n, std::size_t dim) {
  if (n == 0 || dim == 0) {
    throw std::invalid_argument("build_lattice_means: need n >= 1 and dim >= 1");
  }
  // Smallest side with side^dim >= n, without trusting pow() rounding.
  auto covers = [&](std::size_t side) {
    double total = 1.0;
    for (std::size_t j = 0; j < dim; ++j) total *= static_cast<double>(side);
    return total >= static_cast<double>(n);
  };
  auto side = static_cast<std::size_t>(
      std::max(1.0, std::floor(std::pow(static_cast<double>(n), 1.0 / dim))));
  while (side > 1 && covers(side - 1)) --side;
  while (!covers(side)) ++side;

  LatticeMeans out{PointSet(dim), side,
                   side > 1 ? 1.0 / static_cast<double>(side - 1)
                            : std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> digit(dim, 0);
  std::vector<double> point(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      point[j] = side > 1 ? static_cast<double>(digit[j]) /
                                static_cast<double>(side - 1)
                          : 0.5;
    }
    out.means.push_back(point);
    for (std::size_t j = dim; j-- > 0;) {
      if (++digit[j] < side) break;
      digit[j] = 0;
    }
  }
  return out;
}

ChiSquareBounds correct_prob_bounds_p(double delta, double sigma,
                                      std::size_t dim) {
  if (!(delta > 0.0) || !(sigma > 0.0) || dim == 0) {
    throw std::invalid_argument("correct_prob_bounds_p: need delta, sigma > 0, dim >= 1");
  }
  const double ratio = delta * delta / (sigma * sigma);
  const auto p = static_cast<double>(dim);
  auto approx = [&](double c) {
    return normal_cdf((ratio / c - p) / std::sqrt(p / c));
  };
  ChiSquareBounds b;
  b.lower = chisq_cdf(ratio / 2.0, p);
  b.upper = chisq_cdf(ratio, p);
  b.normal_approx_c1 = approx(1.0);
  b.normal_approx_c2 = approx(2.0);
  b.inscribed_ball_lower = chisq_cdf(ratio / 4.0, p);
  return b;
}

namespace {

double mean_and_se(const std::vector<double>& xs, double& se, double trials) {
  const auto r = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / r;
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (r - 1.0) / r);
  } else {
    se = std::sqrt(mean * (1.0 - mean) / trials);
  }
  return mean;
}

}  // namespace

AssignmentSimResult run_assignment_sim(const AssignmentSimConfig& config) {
  if (config.n < 2) throw std::invalid_argument("assignment sim: n must be >= 2");
  if (!(config.c > 0.0)) throw std::invalid_argument("assignment sim: c must be > 0");
  if (config.replicates == 0) {
    throw std::invalid_argument("assignment sim: replicates must be >= 1");
  }
  const double sigma =
      config.sigma ? *config.sigma : sigma_for(config.c, config.n, config.scale);
  EquallySpacedMixture1D truth{config.n, config.range_width, sigma, 0.0};
  truth.validate();

  // In padded mode assignment runs over N + 2 equally spaced components and
  // entity i is component i + 1.
  EquallySpacedMixture1D grid = truth;
  std::size_t offset = 0;
  if (config.edges == EdgeMode::Padded) {
    grid.components = config.n + 2;
    grid.range_width = truth.spacing() * static_cast<double>(config.n + 2);
    grid.origin = -truth.spacing();
    offset = 1;
  }

  AssignmentSimResult res;
  res.c = config.c;
  res.n = config.n;
  res.replicates = config.replicates;
  res.sigma = sigma;
  res.theory_proportion =
      correct_prob_1d(truth, config.edges == EdgeMode::Exact);
  res.replicate_proportions.resize(config.replicates);
  std::vector<char> zero(config.replicates, 0);

  const auto tag = stream_tag("assignment-sim");
  const auto cbits = double_bits(config.c);
  parallel_for(config.replicates, config.jobs, [&](std::size_t r) {
    auto rng = make_engine(config.seed, {tag, cbits, r});
    std::normal_distribution<double> noise(0.0, sigma);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < config.n; ++i) {
      const double y = grid.mean(i + offset) + noise(rng);
      correct += (ml_assign_1d(y, grid) == i + offset);
    }
    res.replicate_proportions[r] =
        static_cast<double>(correct) / static_cast<double>(config.n);
    zero[r] = correct == 0;
  });

  const double trials =
      static_cast<double>(config.n) * static_cast<double>(config.replicates);
  res.proportion_correct_mean =
      mean_and_se(res.replicate_proportions, res.proportion_correct_se, trials);
  res.zero_correct_frequency =
      static_cast<double>(std::count(zero.begin(), zero.end(), 1)) /
      static_cast<double>(config.replicates);
  return res;
}

DimensionSimResult run_dimension_sim(const DimensionSimConfig& config) {
  if (config.n < 2 || config.dim == 0 || !(config.sigma > 0.0) ||
      config.replicates == 0) {
    throw std::invalid_argument(
        "dimension sim: need n >= 2, dim >= 1, sigma > 0, replicates >= 1");
  }
  const auto lattice = build_lattice_means(config.n, config.dim);
  DimensionSimResult res;
  res.n = config.n;
  res.dim = config.dim;
  res.sigma = config.sigma;
  res.replicates = config.replicates;
  res.separation = lattice.separation;
  res.bounds = correct_prob_bounds_p(lattice.separation, config.sigma, config.dim);

  std::vector<double> props(config.replicates);
  const auto tag = stream_tag("dimension-sim");
  parallel_for(config.replicates, config.jobs, [&](std::size_t r) {
    auto rng = make_engine(config.seed,
                           {tag, config.n, config.dim, double_bits(config.sigma), r});
    std::normal_distribution<double> noise(0.0, config.sigma);
    std::vector<double> y(config.dim);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < config.n; ++k) {
      const auto mu = lattice.means[k];
      for (std::size_t j = 0; j < config.dim; ++j) y[j] = mu[j] + noise(rng);
      correct += (ml_assign(y, lattice.means, config.sigma) == k);
    }
    props[r] = static_cast<double>(correct) / static_cast<double>(config.n);
  });
  const double trials =
      static_cast<double>(config.n) * static_cast<double>(config.replicates);
  res.proportion_correct = mean_and_se(props, res.proportion_se, trials);
  res.within_bounds = res.proportion_correct >= res.bounds.lower - 3.0 * res.proportion_se &&
                      res.proportion_correct <= res.bounds.upper + 3.0 * res.proportion_se;
  return res;
}

}  // namespace microclust
