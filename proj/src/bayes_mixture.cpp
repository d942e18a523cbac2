#include "microclust/bayes_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "microclust/special.hpp"

namespace microclust {

void BayesMixtureModel::validate() const {
  if (weights.empty()) throw std::invalid_argument("mixture needs >= 1 component");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  if (!(sigma2 > 0.0) || !(tau2 > 0.0)) {
    throw std::invalid_argument("sigma2 and tau2 must be positive");
  }
}

BayesMixtureModel BayesMixtureModel::uniform(std::size_t k, double sigma2,
                                             double tau2) {
  if (k == 0) throw std::invalid_argument("mixture needs >= 1 component");
  return {std::vector<double>(k, 1.0 / static_cast<double>(k)), sigma2, tau2};
}

MixtureState::MixtureState(std::size_t components, std::span<const double> y,
                           std::vector<std::size_t> labels)
    : labels_(std::move(labels)),
      counts_(components, 0),
      sums_(components, 0.0),
      sum_squares_(components, 0.0) {
  if (labels_.size() != y.size()) {
    throw std::invalid_argument("MixtureState: labels and data differ in length");
  }
  for (auto z : labels_) {
    if (z >= components) throw std::invalid_argument("MixtureState: label out of range");
  }
  refresh(y);
}

void MixtureState::remove(std::size_t i, double yi) {
  const auto k = labels_[i];
  --counts_[k];
  sums_[k] -= yi;
  sum_squares_[k] -= yi * yi;
  if (counts_[k] == 0) {
    sums_[k] = 0.0;
    sum_squares_[k] = 0.0;
  }
}

void MixtureState::add(std::size_t i, std::size_t k, double yi) {
  labels_[i] = k;
  ++counts_[k];
  sums_[k] += yi;
  sum_squares_[k] += yi * yi;
}

void MixtureState::refresh(std::span<const double> y) {
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(sums_.begin(), sums_.end(), 0.0);
  std::fill(sum_squares_.begin(), sum_squares_.end(), 0.0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto k = labels_[i];
    ++counts_[k];
    sums_[k] += y[i];
    sum_squares_[k] += y[i] * y[i];
  }
}

bool MixtureState::consistent(std::span<const double> y) const {
  MixtureState fresh(counts_.size(), y, labels_);
  return fresh.counts_ == counts_ && fresh.sums_ == sums_ &&
         fresh.sum_squares_ == sum_squares_;
}

double log_config_likelihood(const BayesMixtureModel& model,
                             std::span<const double> y,
                             std::span<const std::size_t> labels,
                             bool include_multinomial_coeff) {
  if (y.size() != labels.size()) {
    throw std::invalid_argument("log_config_likelihood: length mismatch");
  }
  const std::size_t k_count = model.components();
  std::vector<std::size_t> n(k_count, 0);
  std::vector<double> s(k_count, 0.0), q(k_count, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto k = labels[i];
    if (k >= k_count) throw std::invalid_argument("log_config_likelihood: label out of range");
    ++n[k];
    s[k] += y[i];
    q[k] += y[i] * y[i];
  }
  const double log_sigma = 0.5 * std::log(model.sigma2);
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi) + log_sigma;
  double total = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (n[k] == 0) continue;
    const auto nk = static_cast<double>(n[k]);
    const double v = nk * model.tau2 + model.sigma2;
    total += nk * std::log(model.weights[k]) + log_sigma - nk * log_norm -
             0.5 * std::log(v) - q[k] / (2.0 * model.sigma2) +
             model.tau2 * s[k] * s[k] / (2.0 * model.sigma2 * v);
  }
  if (include_multinomial_coeff) {
    total += log_factorial(static_cast<double>(y.size()));
    for (auto nk : n) total -= log_factorial(static_cast<double>(nk));
  }
  return total;
}

namespace {

void check_pair(const BayesMixtureModel& model, std::size_t j, std::size_t k) {
  if (j == k) throw std::invalid_argument("Bayes factor needs two distinct clusters");
  if (j >= model.components() || k >= model.components()) {
    throw std::invalid_argument("Bayes factor: cluster index out of range");
  }
}

}  // namespace

double bayes_factor_merge(const BayesMixtureModel& model, double yi, double yi2,
                          std::size_t j, std::size_t k) {
  check_pair(model, j, k);
  const double s2 = model.sigma2;
  const double t2 = model.tau2;
  const double pre = 2.0 * model.weights[j] / model.weights[k] *
                     std::sqrt(s2) * std::sqrt(2.0 * t2 + s2) / (t2 + s2);
  const double sum = yi + yi2;
  const double expo = t2 / (2.0 * s2) *
                      ((yi * yi + yi2 * yi2) / (t2 + s2) - sum * sum / (2.0 * t2 + s2));
  return pre * std::exp(expo);
}

double expected_bayes_factor(const BayesMixtureModel& model, double mu_i,
                             double mu_i2, std::size_t j, std::size_t k) {
  check_pair(model, j, k);
  const double s2 = model.sigma2;
  const double t2 = model.tau2;
  const double d = 2.0 * (s2 + t2) * (s2 + t2) - s2 * s2;
  const double diff = mu_i - mu_i2;
  const double sum = mu_i + mu_i2;
  const double pre = 2.0 * model.weights[j] / model.weights[k] *
                     (2.0 * t2 + s2) / std::sqrt(d);
  return pre * std::exp(-0.25 * t2 * (-diff * diff / (s2 * s2) + sum * sum / d));
}

void gibbs_sweep(const BayesMixtureModel& model, std::span<const double> y,
                 MixtureState& state, Engine& rng, ScanOrder order) {
  const std::size_t k_count = model.components();
  std::vector<std::size_t> visit(y.size());
  std::iota(visit.begin(), visit.end(), std::size_t{0});
  if (order == ScanOrder::Random) std::shuffle(visit.begin(), visit.end(), rng);

  std::vector<double> log_w(k_count);
  std::vector<double> log_pi(k_count);
  for (std::size_t k = 0; k < k_count; ++k) log_pi[k] = std::log(model.weights[k]);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double s2 = model.sigma2;
  const double t2 = model.tau2;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

  for (auto i : visit) {
    const double yi = y[i];
    state.remove(i, yi);
    const auto& n = state.counts();
    const auto& s = state.sums();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      const double v = static_cast<double>(n[k]) * t2 + s2;
      const double m = t2 * s[k] / v;
      const double pred_var = t2 * s2 / v + s2;
      const double r = yi - m;
      log_w[k] = log_pi[k] - half_log_2pi - 0.5 * std::log(pred_var) -
                 r * r / (2.0 * pred_var);
      top = std::max(top, log_w[k]);
    }
    double total = 0.0;
    for (auto& w : log_w) {
      w = std::exp(w - top);
      total += w;
    }
    double u = unif(rng) * total;
    std::size_t pick = k_count - 1;
    for (std::size_t k = 0; k < k_count; ++k) {
      u -= log_w[k];
      if (u < 0.0) {
        pick = k;
        break;
      }
    }
    state.add(i, pick, yi);
  }
  state.refresh(y);
}

std::uint64_t adjacency_l0(std::span<const std::size_t> a,
                           std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("adjacency_l0: length mismatch");
  auto pairs = [](std::uint64_t m) { return m < 2 ? 0 : m * (m - 1) / 2; };
  std::unordered_map<std::size_t, std::uint64_t> na, nb;
  std::unordered_map<std::uint64_t, std::uint64_t> nab;
  // Joint key assumes labels fit in 32 bits, which any in-memory data does.
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++na[a[i]];
    ++nb[b[i]];
    ++nab[(static_cast<std::uint64_t>(a[i]) << 32) ^ static_cast<std::uint64_t>(b[i])];
  }
  std::uint64_t pa = 0, pb = 0, pab = 0;
  for (const auto& [_, m] : na) pa += pairs(m);
  for (const auto& [_, m] : nb) pb += pairs(m);
  for (const auto& [_, m] : nab) pab += pairs(m);
  // Unordered pairs co-clustered in exactly one labeling, counted twice.
  return 2 * (pa + pb - 2 * pab);
}

BayesSimResult run_bayes_sim(const BayesSimConfig& config) {
  if (config.n == 0) throw std::invalid_argument("bayes sim: n must be >= 1");
  if (config.sweeps == 0) throw std::invalid_argument("bayes sim: sweeps must be >= 1");
  const std::size_t k_count = config.components ? config.components : config.n;
  BayesSimResult res;
  res.c = config.c;
  res.sigma = sigma_for(config.c, config.n, config.scale);
  const auto model =
      BayesMixtureModel::uniform(k_count, res.sigma * res.sigma, config.tau2);

  auto rng = make_engine(config.seed,
                         {stream_tag("bayes-sim"), double_bits(config.c)});
  std::uniform_int_distribution<std::size_t> pick(0, k_count - 1);
  std::normal_distribution<double> noise(0.0, res.sigma);
  res.true_labels.resize(config.n);
  res.y.resize(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    res.true_labels[i] = pick(rng);
    res.y[i] = static_cast<double>(res.true_labels[i] + 1) /
                   static_cast<double>(config.n) +
               noise(rng);
  }
  std::vector<std::size_t> init(config.n);
  for (auto& z : init) z = pick(rng);
  MixtureState state(k_count, res.y, std::move(init));

  for (std::size_t s = 0; s < config.burn_in; ++s) {
    gibbs_sweep(model, res.y, state, rng, config.order);
  }
  res.l0_samples.reserve(config.sweeps);
  for (std::size_t s = 0; s < config.sweeps; ++s) {
    gibbs_sweep(model, res.y, state, rng, config.order);
    res.l0_samples.push_back(adjacency_l0(state.labels(), res.true_labels));
  }
  return res;
}

}  // namespace microclust
