#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "microclust/bayes_mixture.hpp"
#include "microclust/combinatorics.hpp"
#include "microclust/errors.hpp"
#include "microclust/gaussian_assignment.hpp"
#include "microclust/io.hpp"
#include "microclust/name_data.hpp"
#include "microclust/popest.hpp"

namespace py = pybind11;
using namespace microclust;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::object to_int(const BigInt& v) { return py::module_::import("builtins").attr("int")(v.str()); }

py::object to_fraction(const Rational& r) {
  return py::module_::import("fractions")
      .attr("Fraction")(to_int(boost::multiprecision::numerator(r)),
                        to_int(boost::multiprecision::denominator(r)));
}

PointSet to_points(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return PointSet(1);
  PointSet p(rows.front().size());
  for (const auto& r : rows) {
    if (r.size() != p.dim()) throw std::invalid_argument("ragged point list");
    p.push_back(r);
  }
  return p;
}

std::vector<std::vector<double>> from_points(const PointSet& p) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < p.size(); ++i) rows.emplace_back(p[i].begin(), p[i].end());
  return rows;
}

EdgeMode parse_edges(const std::string& s) {
  if (s == "exact") return EdgeMode::Exact;
  if (s == "padded") return EdgeMode::Padded;
  throw std::invalid_argument("edges must be 'exact' or 'padded'");
}

IntervalMethod parse_interval(const std::string& s) {
  if (s == "lognormal") return IntervalMethod::LogNormal;
  if (s == "wald") return IntervalMethod::Wald;
  throw std::invalid_argument("interval must be 'lognormal' or 'wald'");
}

CaptureTable make_table(const std::vector<std::uint64_t>& counts) {
  std::size_t lists = 0;
  while ((std::size_t{1} << lists) < counts.size()) ++lists;
  if ((std::size_t{1} << lists) != counts.size()) {
    throw std::invalid_argument("counts must have 2^T entries");
  }
  auto t = CaptureTable::zeros(lists);
  t.counts = counts;
  return t;
}

}  // namespace

PYBIND11_MODULE(_microclust, m) {
  m.doc() = "Entity resolution limits: combinatorics, Gaussian assignment, Bayes mixtures, population estimation";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // combinatorics
  m.def("subfactorial", [](unsigned n) { return to_int(subfactorial(n)); }, py::arg("n"));
  m.def("match_pmf", [](std::uint64_t n) { return match_pmf(n).pmf; }, py::arg("group_size"));
  m.def(
      "match_pmf_exact",
      [](unsigned n) {
        py::list out;
        for (const auto& r : match_pmf_exact(n)) out.append(to_fraction(r));
        return out;
      },
      py::arg("group_size"));
  m.def(
      "expected_matches_bounds",
      [](std::uint64_t n) {
        const auto b = expected_matches_bounds(n);
        return py::make_tuple(b.lower, b.upper);
      },
      py::arg("group_size"));
  m.def("expected_matches_exact", [](unsigned n) { return to_fraction(expected_matches_exact(n)); },
        py::arg("group_size"));

  py::class_<NameHistogram>(m, "NameHistogram")
      .def_static("from_sizes",
                  [](const std::vector<std::uint64_t>& sizes) { return NameHistogram::from_sizes(sizes); })
      .def_static("from_buckets",
                  [](const std::vector<std::pair<std::uint64_t, std::uint64_t>>& b) {
                    std::vector<NameHistogram::Bucket> buckets;
                    for (const auto& [size, groups] : b) buckets.push_back({size, groups});
                    return NameHistogram::from_buckets(std::move(buckets));
                  })
      .def_property_readonly("records", &NameHistogram::records)
      .def_property_readonly("names", &NameHistogram::names)
      .def_property_readonly("buckets",
                             [](const NameHistogram& h) {
                               std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
                               for (const auto& b : h.buckets()) out.emplace_back(b.size, b.groups);
                               return out;
                             })
      .def("__repr__", [](const NameHistogram& h) {
        return "<NameHistogram records=" + std::to_string(h.records()) +
               " names=" + std::to_string(h.names()) + ">";
      });

  m.def("log_prob_all_correct", &log_prob_all_correct);
  m.def("prob_all_correct_exact",
        [](const NameHistogram& h) { return to_fraction(prob_all_correct_exact(h)); });
  m.def("name_entropy", &name_entropy);
  m.def("concentration_ratio", &concentration_ratio);
  m.def("hoeffding_tail", &hoeffding_tail, py::arg("hist"), py::arg("t"));
  m.def("log_hoeffding_tail", &log_hoeffding_tail, py::arg("hist"), py::arg("t"));
  m.def("simulate_random_allocation", &simulate_random_allocation, py::arg("hist"),
        py::arg("replicates"), py::arg("seed") = 1, py::arg("jobs") = 1);

  // name data
  m.def(
      "load_frequency_table",
      [](const std::string& path, const std::string& value_column, const std::string& kind,
         char delimiter, std::optional<std::uint64_t> population) {
        CsvFormat f;
        f.value_column = value_column;
        f.delimiter = delimiter;
        f.population = population;
        if (kind == "count") {
          f.kind = ValueKind::Count;
        } else if (kind == "proportion") {
          f.kind = ValueKind::Proportion;
        } else if (kind == "per100k") {
          f.kind = ValueKind::Per100k;
        } else {
          throw std::invalid_argument("kind must be count, proportion or per100k");
        }
        std::vector<std::pair<std::string, double>> rows;
        for (const auto& e : load_frequency_table(path, f).entries) rows.emplace_back(e.name, e.proportion);
        return rows;
      },
      py::arg("path"), py::arg("value_column") = "count", py::arg("kind") = "count",
      py::arg("delimiter") = ',', py::arg("population") = py::none());
  m.def(
      "independence_join",
      [](const std::vector<std::pair<std::string, double>>& first,
         const std::vector<std::pair<std::string, double>>& last, std::uint64_t population,
         double pool_threshold) {
        auto table = [](const std::vector<std::pair<std::string, double>>& rows) {
          std::vector<FrequencyEntry> entries;
          for (const auto& [name, p] : rows) entries.push_back({name, p, name == kRemainderName});
          return FrequencyTable{std::move(entries), std::nullopt};
        };
        return independence_join(table(first), table(last), population, pool_threshold);
      },
      py::arg("first"), py::arg("last"), py::arg("population"), py::arg("pool_threshold") = 0.5);
  m.def(
      "names_report",
      [](const NameHistogram& h, const std::vector<double>& t_grid) {
        return to_python(to_json(names_report(h, t_grid)));
      },
      py::arg("hist"), py::arg("t_grid") = std::vector<double>{0.005, 0.01, 0.05});

  // gaussian assignment
  m.def(
      "ml_assign",
      [](const std::vector<double>& y, const std::vector<std::vector<double>>& means, double sigma) {
        return ml_assign(y, to_points(means), sigma);
      },
      py::arg("y"), py::arg("means"), py::arg("sigma"));
  m.def(
      "correct_prob_1d",
      [](std::size_t n, double ell, double sigma, bool edge_exact) {
        return correct_prob_1d({n, ell, sigma, 0.0}, edge_exact);
      },
      py::arg("n"), py::arg("range_width"), py::arg("sigma"), py::arg("edge_exact") = false);
  m.def(
      "remark2_bounds",
      [](std::size_t n, double ell, double sigma, double t) {
        return to_python(to_json(remark2_bounds({n, ell, sigma, 0.0}, t)));
      },
      py::arg("n"), py::arg("range_width"), py::arg("sigma"), py::arg("t"));
  m.def(
      "build_lattice_means",
      [](std::size_t n, std::size_t dim) {
        const auto l = build_lattice_means(n, dim);
        return py::make_tuple(from_points(l.means), l.side, l.separation);
      },
      py::arg("n"), py::arg("dim"));
  m.def(
      "correct_prob_bounds_p",
      [](double delta, double sigma, std::size_t dim) {
        return to_python(to_json(correct_prob_bounds_p(delta, sigma, dim)));
      },
      py::arg("delta"), py::arg("sigma"), py::arg("dim"));
  m.def(
      "run_assignment_sim",
      [](std::size_t n, double c, std::size_t replicates, std::uint64_t seed,
         const std::string& scale, const std::string& edges, unsigned jobs) {
        AssignmentSimConfig cfg;
        cfg.n = n;
        cfg.c = c;
        cfg.replicates = replicates;
        cfg.seed = seed;
        cfg.scale = parse_scale_convention(scale);
        cfg.edges = parse_edges(edges);
        cfg.jobs = jobs;
        py::gil_scoped_release release;
        const auto r = run_assignment_sim(cfg);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["c"] = r.c;
        d["n"] = r.n;
        d["replicates"] = r.replicates;
        d["sigma"] = r.sigma;
        d["proportion_correct_mean"] = r.proportion_correct_mean;
        d["proportion_correct_se"] = r.proportion_correct_se;
        d["zero_correct_frequency"] = r.zero_correct_frequency;
        d["theory_proportion"] = r.theory_proportion;
        d["replicate_proportions"] = r.replicate_proportions;
        return d;
      },
      py::arg("n"), py::arg("c"), py::arg("replicates") = 50, py::arg("seed") = 1,
      py::arg("scale") = "sigma", py::arg("edges") = "exact", py::arg("jobs") = 1);

  // bayes mixture
  m.def(
      "log_config_likelihood",
      [](const std::vector<double>& weights, double sigma2, double tau2, const std::vector<double>& y,
         const std::vector<std::size_t>& labels, bool coeff) {
        const BayesMixtureModel model{weights, sigma2, tau2};
        model.validate();
        return log_config_likelihood(model, y, labels, coeff);
      },
      py::arg("weights"), py::arg("sigma2"), py::arg("tau2"), py::arg("y"), py::arg("labels"),
      py::arg("include_multinomial_coeff") = false);
  m.def(
      "bayes_factor_merge",
      [](const std::vector<double>& weights, double sigma2, double tau2, double yi, double yi2,
         std::size_t j, std::size_t k) {
        return bayes_factor_merge({weights, sigma2, tau2}, yi, yi2, j, k);
      },
      py::arg("weights"), py::arg("sigma2"), py::arg("tau2"), py::arg("yi"), py::arg("yi2"),
      py::arg("j"), py::arg("k"));
  m.def(
      "expected_bayes_factor",
      [](const std::vector<double>& weights, double sigma2, double tau2, double mu_i, double mu_i2,
         std::size_t j, std::size_t k) {
        return expected_bayes_factor({weights, sigma2, tau2}, mu_i, mu_i2, j, k);
      },
      py::arg("weights"), py::arg("sigma2"), py::arg("tau2"), py::arg("mu_i"), py::arg("mu_i2"),
      py::arg("j"), py::arg("k"));
  m.def(
      "adjacency_l0",
      [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        return adjacency_l0(a, b);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "run_bayes_sim",
      [](std::size_t n, double c, std::size_t sweeps, std::size_t burn_in, std::uint64_t seed,
         const std::string& scale, double tau2, bool random_scan) {
        BayesSimConfig cfg;
        cfg.n = n;
        cfg.c = c;
        cfg.sweeps = sweeps;
        cfg.burn_in = burn_in;
        cfg.seed = seed;
        cfg.scale = parse_scale_convention(scale);
        cfg.tau2 = tau2;
        cfg.order = random_scan ? ScanOrder::Random : ScanOrder::Sequential;
        py::gil_scoped_release release;
        auto r = run_bayes_sim(cfg);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["c"] = r.c;
        d["sigma"] = r.sigma;
        d["y"] = r.y;
        d["true_labels"] = r.true_labels;
        d["l0_samples"] = r.l0_samples;
        return d;
      },
      py::arg("n"), py::arg("c"), py::arg("sweeps") = 2000, py::arg("burn_in") = 500,
      py::arg("seed") = 1, py::arg("scale") = "sigma", py::arg("tau2") = 9.0,
      py::arg("random_scan") = false);

  // population estimation
  m.def("beta_b_for_unobserved_fraction", &beta_b_for_unobserved_fraction, py::arg("a"),
        py::arg("lists"), py::arg("target"));
  m.def(
      "estimate_population",
      [](const std::vector<std::uint64_t>& counts, const std::string& interval, double level) {
        const auto e = estimate_population(make_table(counts), parse_interval(interval), level);
        py::dict d;
        d["n_hat"] = e.n_hat;
        d["n0_hat"] = e.n0_hat;
        d["ci_lower"] = e.ci_lower;
        d["ci_upper"] = e.ci_upper;
        d["variance"] = e.variance;
        d["n_obs"] = e.n_obs;
        d["p_hat"] = e.p_hat;
        d["iterations"] = e.iterations;
        d["converged"] = e.converged;
        d["unbounded"] = e.unbounded;
        d["dropped_lists"] = e.dropped_lists;
        d["warnings"] = e.warnings;
        return d;
      },
      py::arg("counts"), py::arg("interval") = "lognormal", py::arg("level") = 0.95);
  m.def(
      "run_popest_sim",
      [](std::uint64_t k, std::size_t lists, double a, double b, double c, std::size_t replicates,
         std::uint64_t seed, const std::string& scale, const std::string& interval,
         std::optional<double> sigma, unsigned jobs) {
        PopestSimConfig cfg;
        cfg.entities = k;
        cfg.lists = lists;
        cfg.a = a;
        cfg.b = b;
        cfg.c = c;
        cfg.replicates = replicates;
        cfg.seed = seed;
        cfg.scale = parse_scale_convention(scale);
        cfg.interval = parse_interval(interval);
        cfg.sigma = sigma;
        cfg.jobs = jobs;
        py::gil_scoped_release release;
        const auto r = run_popest_sim(cfg);
        py::gil_scoped_acquire acquire;
        return to_python(to_json(r.summary));
      },
      py::arg("k"), py::arg("lists") = 3, py::arg("a") = 1.0, py::arg("b") = 1.7, py::arg("c") = 1.0,
      py::arg("replicates") = 200, py::arg("seed") = 1, py::arg("scale") = "sigma",
      py::arg("interval") = "lognormal", py::arg("sigma") = py::none(), py::arg("jobs") = 1);
}
