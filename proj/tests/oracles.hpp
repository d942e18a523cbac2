#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's own formulas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

// counts[z] = number of permutations of n items with exactly z fixed points.
inline std::vector<std::uint64_t> fixed_point_counts(unsigned n) {
  std::vector<std::uint64_t> counts(n + 1, 0);
  std::vector<unsigned> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  do {
    unsigned z = 0;
    for (unsigned i = 0; i < n; ++i) z += perm[i] == i;
    ++counts[z];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return counts;
}

inline double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

// log ∫ Π_i φ(y_i; μ, σ²) φ(μ; 0, τ²) dμ by adaptive Gauss-Kronrod on the
// real line, times π_k^{n}. Integrand is rescaled around its peak so small
// likelihoods do not underflow.
inline double log_cluster_marginal_quadrature(std::span<const double> y, double weight,
                                              double sigma2, double tau2) {
  if (y.empty()) return 0.0;
  double sum = 0.0;
  for (double v : y) sum += v;
  const double n = static_cast<double>(y.size());
  const double peak = tau2 * sum / (n * tau2 + sigma2);
  auto log_integrand = [&](double mu) {
    double s = std::log(normal_pdf(mu, 0.0, tau2));
    for (double v : y) s += std::log(normal_pdf(v, mu, sigma2));
    return s;
  };
  const double ref = log_integrand(peak);
  const double spread = std::sqrt(tau2 * sigma2 / (n * tau2 + sigma2));
  auto f = [&](double u) { return std::exp(log_integrand(peak + spread * u) - ref); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          f, -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), 15, 1e-13);
  return n * std::log(weight) + ref + std::log(spread * integral);
}

inline double log_config_likelihood_quadrature(std::span<const double> weights,
                                               std::span<const double> y,
                                               std::span<const std::size_t> labels,
                                               double sigma2, double tau2) {
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    std::vector<double> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (labels[i] == k) members.push_back(y[i]);
    }
    total += log_cluster_marginal_quadrature(members, weights[k], sigma2, tau2);
  }
  return total;
}

// Brute-force co-clustering disagreement count over ordered pairs.
inline std::uint64_t adjacency_disagreements(std::span<const std::size_t> a,
                                             std::span<const std::size_t> b) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i != j && ((a[i] == a[j]) != (b[i] == b[j]))) ++count;
    }
  }
  return count;
}

// Golden-section maximization of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// How the falling factorial N!/(N - N_obs)! is extended to real N.
enum class FallingFactorial {
  Gamma,     // lgamma(N + 1) - lgamma(N - N_obs + 1)
  Stirling,  // N log N - (N - N_obs) log(N - N_obs)
};

// Independent-lists log-likelihood in (N, p) for a capture table with
// N_obs observed entities and list totals M_j, N treated as continuous.
inline double capture_log_likelihood(double n, std::uint64_t n_obs,
                                     std::span<const std::uint64_t> list_totals,
                                     std::span<const double> p,
                                     FallingFactorial form = FallingFactorial::Gamma) {
  const double rest = n - static_cast<double>(n_obs);
  double ll = form == FallingFactorial::Gamma
                  ? std::lgamma(n + 1.0) - std::lgamma(rest + 1.0)
                  : n * std::log(n) - (rest > 0.0 ? rest * std::log(rest) : 0.0);
  for (std::size_t j = 0; j < list_totals.size(); ++j) {
    const double m = static_cast<double>(list_totals[j]);
    ll += m * std::log(p[j]) + (n - m) * std::log1p(-p[j]);
  }
  return ll;
}

// MLE of N by nested golden-section search: the outer search runs over N,
// and for each N every p_j is maximized numerically on (0, 1).
inline double capture_mle_numeric(std::uint64_t n_obs,
                                  std::span<const std::uint64_t> list_totals,
                                  double n_upper,
                                  FallingFactorial form = FallingFactorial::Gamma) {
  auto profile = [&](double n) {
    std::vector<double> p(list_totals.size());
    for (std::size_t j = 0; j < list_totals.size(); ++j) {
      const double m = static_cast<double>(list_totals[j]);
      p[j] = golden_max(
          [&](double q) { return m * std::log(q) + (n - m) * std::log1p(-q); }, 1e-12,
          1.0 - 1e-12, 1e-14);
    }
    return capture_log_likelihood(n, n_obs, list_totals, p, form);
  };
  return golden_max(profile, static_cast<double>(n_obs), n_upper, 1e-12);
}

}  // namespace oracle
