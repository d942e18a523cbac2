#include "app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "microclust/bayes_mixture.hpp"
#include "microclust/combinatorics.hpp"
#include "microclust/errors.hpp"
#include "microclust/gaussian_assignment.hpp"
#include "microclust/io.hpp"
#include "microclust/name_data.hpp"
#include "microclust/parallel.hpp"
#include "microclust/popest.hpp"

namespace microclust::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

// Rounds grid points to 12 significant digits so 0.1:2:0.1 yields 0.3, not
// 0.30000000000000004.
double tidy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::stod(buf);
}

// Resolved options plus the bookkeeping written next to every output.
class Manifest {
 public:
  Manifest(std::string subcommand, std::string config, std::uint64_t seed,
           std::vector<std::string> argv)
      : subcommand_(std::move(subcommand)),
        config_(std::move(config)),
        seed_(seed),
        argv_(std::move(argv)),
        started_(utc_now()) {}

  void add_output(const fs::path& path) { outputs_.push_back(path.string()); }
  void derive(const std::string& key, json value) { derived_[key] = std::move(value); }

  fs::path write(const fs::path& dir) const {
    json doc = {{"subcommand", subcommand_},
                {"config", config_},
                {"seed", seed_},
                {"tool_version", MICROCLUST_VERSION},
                {"command_line", argv_},
                {"started", started_},
                {"finished", utc_now()},
                {"outputs", outputs_}};
    if (!derived_.empty()) doc["derived"] = derived_;
    const auto path = dir / (subcommand_ + ".manifest.json");
    std::ofstream(path) << doc.dump(2) << '\n';
    return path;
  }

 private:
  std::string subcommand_;
  std::string config_;
  std::uint64_t seed_;
  std::vector<std::string> argv_;
  std::string started_;
  std::vector<std::string> outputs_;
  json derived_ = json::object();
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  return out;
}

ValueKind parse_kind(const std::string& text) {
  if (text == "count") return ValueKind::Count;
  if (text == "proportion") return ValueKind::Proportion;
  if (text == "per100k") return ValueKind::Per100k;
  throw std::invalid_argument("unknown value kind '" + text + "'");
}

EdgeMode parse_edges(const std::string& text) {
  if (text == "exact") return EdgeMode::Exact;
  if (text == "padded") return EdgeMode::Padded;
  throw std::invalid_argument("unknown edge mode '" + text + "'");
}

struct Globals {
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out_dir = ".";
};

struct NamesOptions {
  std::string first, last;
  bool fixture = false;
  std::string sizes;
  std::uint64_t population = 0;
  double pool_threshold = 0.5;
  std::string t_grid = "0.005,0.01,0.05";
  std::string delimiter = ",";
  bool no_header = false;
  std::string name_column = "name";
  std::string first_value_column = "count";
  std::string last_value_column = "count";
  std::string first_kind = "count";
  std::string last_kind = "count";
  std::optional<std::uint64_t> first_total;
  std::optional<std::uint64_t> last_total;
};

struct AssignOptions {
  std::size_t n = 5000;
  std::string c_grid = "0.1:2:0.1";
  std::size_t replicates = 50;
  std::string scale = "sigma";
  std::string edges = "exact";
};

struct DimOptions {
  std::size_t n = 64;
  std::size_t p = 3;
  std::string sigma_grid = "0.01,0.3";
  std::size_t replicates = 50;
};

struct BayesOptions {
  std::size_t n = 100;
  std::string c_grid = "0.1,0.25,0.5,1,2";
  std::size_t sweeps = 2000;
  std::size_t burn_in = 500;
  double tau2 = 9.0;
  std::string scale = "sigma";
  bool random_scan = false;
};

struct PopestOptions {
  std::uint64_t k = 5000;
  std::size_t t = 3;
  double a = 1.0;
  std::optional<double> b;
  std::optional<double> target_n0_frac;
  std::string c_grid = "0.1,0.5,1,2";
  std::size_t replicates = 200;
  std::string scale = "sigma";
  std::string interval = "lognormal";
};

struct TheoryOptions {
  bool derange = false;
  std::uint64_t nm = 10;
  bool remark2 = false;
  double ell = 1.0;
  double sigma = 0.0;
  std::size_t n = 0;
  double t = 0.0;
  bool chisq = false;
  std::size_t p = 1;
  double delta = 0.0;
};

CsvFormat csv_format(const NamesOptions& o, const std::string& value_column,
                     const std::string& kind, std::optional<std::uint64_t> total) {
  if (o.delimiter.size() != 1) throw std::invalid_argument("--delimiter must be one character");
  CsvFormat f;
  f.delimiter = o.delimiter.front();
  f.header = !o.no_header;
  f.name_column = o.name_column;
  f.value_column = value_column;
  f.kind = parse_kind(kind);
  f.population = total;
  return f;
}

void cmd_names(NamesOptions o, const Globals& g, Manifest& manifest, std::ostream& out) {
  const auto t_grid = parse_grid(o.t_grid);
  std::optional<NameHistogram> hist;
  if (!o.sizes.empty()) {
    std::vector<std::uint64_t> sizes;
    for (double v : parse_grid(o.sizes)) {
      if (v < 1 || v != std::floor(v)) throw std::invalid_argument("--sizes takes positive integers");
      sizes.push_back(static_cast<std::uint64_t>(v));
    }
    hist = NameHistogram::from_sizes(sizes);
  } else {
    if (o.fixture) {
      const fs::path dir = fs::path(MICROCLUST_DATA_DIR) / "fixtures";
      o.first = (dir / "first_names.csv").string();
      o.last = (dir / "last_names.csv").string();
      o.first_value_column = "proportion";
      o.first_kind = "proportion";
      o.last_value_column = "count";
      o.last_kind = "count";
      o.last_total = 1000;
      if (o.population == 0) o.population = 10000;
      manifest.derive("first", o.first);
      manifest.derive("last", o.last);
      manifest.derive("population", o.population);
    }
    if (o.first.empty() || o.last.empty()) {
      throw std::invalid_argument("names: give --first and --last, --fixture, or --sizes");
    }
    if (o.population == 0) throw std::invalid_argument("names: --population is required");
    const auto first =
        load_frequency_table(o.first, csv_format(o, o.first_value_column, o.first_kind, o.first_total));
    const auto last =
        load_frequency_table(o.last, csv_format(o, o.last_value_column, o.last_kind, o.last_total));
    hist = independence_join(first, last, o.population, o.pool_threshold);
  }

  const fs::path dir = g.out_dir;
  const auto report = names_report(*hist, t_grid);
  const auto report_path = dir / "names_report.json";
  open_output(report_path) << to_json(report).dump(2) << '\n';
  manifest.add_output(report_path);
  const auto groups_path = dir / "names_groups.csv";
  {
    auto f = open_output(groups_path);
    write_group_size_csv(f, group_size_summary(*hist));
  }
  manifest.add_output(groups_path);
  out << "expected proportion correct " << format_number(report.expected_proportion_correct)
      << " over " << report.records << " records\n";
}

void cmd_assign_sim(const AssignOptions& o, const Globals& g, Manifest& manifest,
                    std::ostream& out) {
  const auto grid = parse_grid(o.c_grid);
  std::vector<AssignmentSimResult> rows;
  for (double c : grid) {
    AssignmentSimConfig cfg;
    cfg.n = o.n;
    cfg.c = c;
    cfg.replicates = o.replicates;
    cfg.seed = g.seed;
    cfg.scale = parse_scale_convention(o.scale);
    cfg.edges = parse_edges(o.edges);
    cfg.jobs = g.jobs;
    rows.push_back(run_assignment_sim(cfg));
  }
  const auto path = fs::path(g.out_dir) / "assign_sim.csv";
  {
    auto f = open_output(path);
    write_assignment_csv(f, rows);
  }
  manifest.add_output(path);
  out << "wrote " << rows.size() << " rows to " << path.string() << '\n';
}

void cmd_dim_sim(const DimOptions& o, const Globals& g, Manifest& manifest,
                 std::ostream& out) {
  std::vector<DimensionSimResult> rows;
  for (double sigma : parse_grid(o.sigma_grid)) {
    DimensionSimConfig cfg{o.n, o.p, sigma, o.replicates, g.seed, g.jobs};
    rows.push_back(run_dimension_sim(cfg));
  }
  const auto path = fs::path(g.out_dir) / "dim_sim.csv";
  {
    auto f = open_output(path);
    write_dimension_csv(f, rows);
  }
  manifest.add_output(path);
  out << "wrote " << rows.size() << " rows to " << path.string() << '\n';
}

void cmd_bayes_sim(const BayesOptions& o, const Globals& g, Manifest& manifest,
                   std::ostream& out) {
  if (o.sweeps == 0) throw std::invalid_argument("bayes-sim: --sweeps must be >= 1");
  const auto grid = parse_grid(o.c_grid);
  std::vector<BayesSimResult> runs(grid.size());
  parallel_for(grid.size(), g.jobs, [&](std::size_t i) {
    BayesSimConfig cfg;
    cfg.n = o.n;
    cfg.c = grid[i];
    cfg.sweeps = o.sweeps;
    cfg.burn_in = o.burn_in;
    cfg.seed = g.seed;
    cfg.scale = parse_scale_convention(o.scale);
    cfg.tau2 = o.tau2;
    cfg.order = o.random_scan ? ScanOrder::Random : ScanOrder::Sequential;
    runs[i] = run_bayes_sim(cfg);
  });
  const auto path = fs::path(g.out_dir) / "bayes_sim.csv";
  {
    auto f = open_output(path);
    write_bayes_csv(f, runs);
  }
  manifest.add_output(path);
  out << "wrote " << grid.size() * o.sweeps << " samples to " << path.string() << '\n';
}

void cmd_popest_sim(const PopestOptions& o, const Globals& g, Manifest& manifest,
                    std::ostream& out) {
  if (o.b && o.target_n0_frac) {
    throw std::invalid_argument("popest-sim: give --b or --target-n0-frac, not both");
  }
  double b = 1.7;
  if (o.b) b = *o.b;
  if (o.target_n0_frac) {
    b = beta_b_for_unobserved_fraction(o.a, o.t, *o.target_n0_frac);
  }
  manifest.derive("b", b);
  IntervalMethod interval;
  if (o.interval == "lognormal") {
    interval = IntervalMethod::LogNormal;
  } else if (o.interval == "wald") {
    interval = IntervalMethod::Wald;
  } else {
    throw std::invalid_argument("unknown interval '" + o.interval + "'");
  }

  std::vector<PopestSimResult> runs;
  json summaries = json::array();
  for (double c : parse_grid(o.c_grid)) {
    PopestSimConfig cfg;
    cfg.entities = o.k;
    cfg.lists = o.t;
    cfg.a = o.a;
    cfg.b = b;
    cfg.c = c;
    cfg.replicates = o.replicates;
    cfg.seed = g.seed;
    cfg.scale = parse_scale_convention(o.scale);
    cfg.interval = interval;
    cfg.jobs = g.jobs;
    runs.push_back(run_popest_sim(cfg));
    summaries.push_back(to_json(runs.back().summary));
  }
  const fs::path dir = g.out_dir;
  const auto csv_path = dir / "popest_sim.csv";
  {
    auto f = open_output(csv_path);
    write_popest_csv(f, runs);
  }
  manifest.add_output(csv_path);
  const auto json_path = dir / "popest_summary.json";
  json doc = {{"K", o.k}, {"T", o.t}, {"a", o.a}, {"b", b}, {"summaries", summaries}};
  open_output(json_path) << doc.dump(2) << '\n';
  manifest.add_output(json_path);
  for (const auto& s : summaries) {
    out << "c=" << format_number(s["c"].get<double>())
        << " coverage=" << format_number(s["coverage"].get<double>())
        << " prop_correct=" << format_number(s["prop_correct"].get<double>()) << '\n';
  }
}

void cmd_theory(const TheoryOptions& o, const Globals& g, Manifest& manifest,
                std::ostream& out) {
  if (!o.derange && !o.remark2 && !o.chisq) {
    throw std::invalid_argument("theory: choose at least one of --derange, --remark2, --chisq");
  }
  json doc = json::object();
  if (o.derange) {
    if (o.nm == 0) throw std::invalid_argument("theory: --nm must be >= 1");
    json rows = json::array();
    for (std::uint64_t n = 1; n <= o.nm; ++n) {
      auto row = to_json(expected_matches_bounds(n));
      row["nm"] = n;
      if (n <= kExactPmfLimit) {
        const auto e = expected_matches_exact(static_cast<unsigned>(n));
        row["exact"] = e.convert_to<double>();
        row["exact_rational"] = e.str();
      }
      rows.push_back(row);
    }
    doc["derangement"] = rows;
  }
  if (o.remark2) {
    if (o.n == 0 || !(o.sigma > 0.0) || !(o.ell > 0.0) || !(o.t > 0.0)) {
      throw std::invalid_argument("theory --remark2 needs --n, --ell, --sigma and --t");
    }
    EquallySpacedMixture1D mix{o.n, o.ell, o.sigma, 0.0};
    auto r = to_json(remark2_bounds(mix, o.t));
    r["n"] = o.n;
    r["ell"] = o.ell;
    r["sigma"] = o.sigma;
    r["t"] = o.t;
    r["expected_proportion"] = correct_prob_1d(mix, false);
    doc["remark2"] = r;
  }
  if (o.chisq) {
    if (!(o.delta > 0.0) || !(o.sigma > 0.0) || o.p == 0) {
      throw std::invalid_argument("theory --chisq needs --p, --delta and --sigma");
    }
    auto r = to_json(correct_prob_bounds_p(o.delta, o.sigma, o.p));
    r["p"] = o.p;
    r["delta"] = o.delta;
    r["sigma"] = o.sigma;
    doc["chisq"] = r;
  }
  const auto path = fs::path(g.out_dir) / "theory.json";
  open_output(path) << doc.dump(2) << '\n';
  manifest.add_output(path);
  out << doc.dump(2) << '\n';
}

// Keeps the global options and those of the chosen subcommand.
std::string resolved_config(const CLI::App& app, const std::string& sub) {
  std::stringstream in(app.config_to_str(true, false));
  std::string line, kept;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    if (dot == std::string::npos || dot > eq || line.compare(0, dot, sub) == 0) {
      kept += line + '\n';
    }
  }
  return kept;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ':')) parts.push_back(parse_number(piece));
    if (parts.size() != 3) throw std::invalid_argument("grid must be start:stop:step");
    const double start = parts[0], stop = parts[1], step = parts[2];
    if (!(step > 0.0) || stop < start) {
      throw std::invalid_argument("grid needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      grid.push_back(tidy(start + static_cast<double>(i) * step));
    }
  } else {
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      if (!piece.empty()) grid.push_back(parse_number(piece));
    }
  }
  if (grid.empty()) throw std::invalid_argument("empty grid '" + text + "'");
  return grid;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Limits of entity resolution by microclustering: bounds and simulations",
               "microclust"};
  app.set_config("--config", "", "TOML file with option values");
  app.set_version_flag("--version", MICROCLUST_VERSION);
  app.require_subcommand(1, 1);

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs")->capture_default_str();

  NamesOptions names;
  auto* names_cmd = app.add_subcommand("names", "Name-collision matching analysis");
  names_cmd->add_option("--first", names.first, "Given-name frequency table");
  names_cmd->add_option("--last", names.last, "Surname frequency table");
  names_cmd->add_flag("--fixture", names.fixture, "Use the bundled fixture tables");
  names_cmd->add_option("--sizes", names.sizes, "Group sizes, comma separated (skips the join)");
  names_cmd->add_option("--population", names.population, "Population size for the join");
  names_cmd->add_option("--pool-threshold", names.pool_threshold)->capture_default_str();
  names_cmd->add_option("--t-grid", names.t_grid, "Hoeffding deviations")->capture_default_str();
  names_cmd->add_option("--delimiter", names.delimiter)->capture_default_str();
  names_cmd->add_flag("--no-header", names.no_header, "Tables have no header row");
  names_cmd->add_option("--name-column", names.name_column)->capture_default_str();
  names_cmd->add_option("--first-value-column", names.first_value_column)->capture_default_str();
  names_cmd->add_option("--last-value-column", names.last_value_column)->capture_default_str();
  names_cmd->add_option("--first-kind", names.first_kind, "count, proportion or per100k")->capture_default_str();
  names_cmd->add_option("--last-kind", names.last_kind, "count, proportion or per100k")->capture_default_str();
  names_cmd->add_option("--first-total", names.first_total, "Count denominator (default: column sum)");
  names_cmd->add_option("--last-total", names.last_total, "Count denominator (default: column sum)");

  AssignOptions assign;
  auto* assign_cmd = app.add_subcommand("assign-sim", "Known-parameter assignment simulation");
  assign_cmd->add_option("--n", assign.n)->capture_default_str();
  assign_cmd->add_option("--c-grid", assign.c_grid)->capture_default_str();
  assign_cmd->add_option("--replicates", assign.replicates)->capture_default_str();
  assign_cmd->add_option("--scale", assign.scale, "sigma (σ = c/N) or sigma-squared")->capture_default_str();
  assign_cmd->add_option("--edges", assign.edges, "exact or padded")->capture_default_str();

  DimOptions dim;
  auto* dim_cmd = app.add_subcommand("dim-sim", "Lattice means in p dimensions");
  dim_cmd->add_option("--n", dim.n)->capture_default_str();
  dim_cmd->add_option("--p", dim.p)->capture_default_str();
  dim_cmd->add_option("--sigma-grid", dim.sigma_grid)->capture_default_str();
  dim_cmd->add_option("--replicates", dim.replicates)->capture_default_str();

  BayesOptions bayes;
  auto* bayes_cmd = app.add_subcommand("bayes-sim", "Collapsed Gibbs with unknown means");
  bayes_cmd->add_option("--n", bayes.n)->capture_default_str();
  bayes_cmd->add_option("--c-grid", bayes.c_grid)->capture_default_str();
  bayes_cmd->add_option("--sweeps", bayes.sweeps, "Retained sweeps")->capture_default_str();
  bayes_cmd->add_option("--burn-in", bayes.burn_in)->capture_default_str();
  bayes_cmd->add_option("--tau2", bayes.tau2)->capture_default_str();
  bayes_cmd->add_option("--scale", bayes.scale)->capture_default_str();
  bayes_cmd->add_flag("--random-scan", bayes.random_scan);

  PopestOptions pop;
  auto* pop_cmd = app.add_subcommand("popest-sim", "Population estimation after entity resolution");
  pop_cmd->add_option("--k", pop.k, "Entities")->capture_default_str();
  pop_cmd->add_option("--t", pop.t, "Lists")->capture_default_str();
  pop_cmd->add_option("--a", pop.a)->capture_default_str();
  pop_cmd->add_option("--b", pop.b, "Beta b (default 1.7)");
  pop_cmd->add_option("--target-n0-frac", pop.target_n0_frac, "Solve b so E[n(0)/K] hits this");
  pop_cmd->add_option("--c-grid", pop.c_grid)->capture_default_str();
  pop_cmd->add_option("--replicates", pop.replicates)->capture_default_str();
  pop_cmd->add_option("--scale", pop.scale)->capture_default_str();
  pop_cmd->add_option("--interval", pop.interval, "lognormal or wald")->capture_default_str();

  TheoryOptions theory;
  auto* theory_cmd = app.add_subcommand("theory", "Closed-form bounds");
  theory_cmd->add_flag("--derange", theory.derange);
  theory_cmd->add_option("--nm", theory.nm)->capture_default_str();
  theory_cmd->add_flag("--remark2", theory.remark2);
  theory_cmd->add_option("--ell", theory.ell)->capture_default_str();
  theory_cmd->add_option("--sigma", theory.sigma);
  theory_cmd->add_option("--n", theory.n);
  theory_cmd->add_option("--t", theory.t);
  theory_cmd->add_flag("--chisq", theory.chisq);
  theory_cmd->add_option("--p", theory.p)->capture_default_str();
  theory_cmd->add_option("--delta", theory.delta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  std::vector<std::string> args(argv, argv + argc);
  const auto* sub = app.get_subcommands().front();
  Manifest manifest(sub->get_name(), resolved_config(app, sub->get_name()), g.seed, args);
  try {
    fs::create_directories(g.out_dir);
    if (sub == names_cmd) cmd_names(names, g, manifest, out);
    if (sub == assign_cmd) cmd_assign_sim(assign, g, manifest, out);
    if (sub == dim_cmd) cmd_dim_sim(dim, g, manifest, out);
    if (sub == bayes_cmd) cmd_bayes_sim(bayes, g, manifest, out);
    if (sub == pop_cmd) cmd_popest_sim(pop, g, manifest, out);
    if (sub == theory_cmd) cmd_theory(theory, g, manifest, out);
    manifest.write(g.out_dir);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "usage: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("microclust");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace microclust::cli
