#include "microclust/name_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "microclust/errors.hpp"
#include "microclust/special.hpp"

namespace microclust {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return std::string(s);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == delim && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

[[noreturn]] void fail(const std::string& source, std::size_t row,
                       const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << row << ": " << what;
  throw DataError(msg.str());
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& wanted, const std::string& source) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == wanted) return i;
  }
  fail(source, 1, "no column named '" + wanted + "'");
}

std::size_t parse_index(const std::string& text, const std::string& source) {
  std::size_t idx = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), idx);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DataError(source + ": column '" + text +
                    "' must be an integer index when the table has no header");
  }
  return idx;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() &&
         std::isfinite(out);
}

}  // namespace

FrequencyTable normalize_table(std::vector<FrequencyEntry> entries,
                               std::optional<std::uint64_t> source_population,
                               const std::string& source) {
  if (entries.empty()) throw DataError(source + ": empty frequency table");
  std::set<std::string> seen;
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!seen.insert(entries[i].name).second) {
      throw DataError(source + ": duplicate name '" + entries[i].name + "'");
    }
    total += entries[i].proportion;
  }
  if (total > 1.0 + 1e-6) {
    std::ostringstream msg;
    msg << source << ": proportions sum to " << total << " > 1";
    throw DataError(msg.str());
  }
  const double rest = 1.0 - total;
  if (rest > 1e-12) {
    if (seen.count(kRemainderName)) {
      throw DataError(source + ": table already has an entry named " +
                      kRemainderName);
    }
    entries.push_back({kRemainderName, rest, true});
  }
  return {std::move(entries), source_population};
}

FrequencyTable parse_frequency_table(std::istream& in, const CsvFormat& format,
                                     const std::string& source) {
  std::string line;
  std::size_t row = 0;
  std::size_t name_col = 0;
  std::size_t value_col = 1;
  if (format.header) {
    do {
      if (!std::getline(in, line)) throw DataError(source + ": empty frequency table");
      ++row;
    } while (trim(line).empty());
    const auto header = split(line, format.delimiter);
    name_col = column_index(header, format.name_column, source);
    value_col = column_index(header, format.value_column, source);
  } else {
    name_col = parse_index(format.name_column, source);
    value_col = parse_index(format.value_column, source);
  }

  std::vector<FrequencyEntry> entries;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line, format.delimiter);
    if (cells.size() <= std::max(name_col, value_col)) {
      fail(source, row, "expected at least " +
                            std::to_string(std::max(name_col, value_col) + 1) +
                            " columns");
    }
    double v = 0.0;
    if (!parse_double(cells[value_col], v)) {
      fail(source, row, "malformed numeric value '" + cells[value_col] + "'");
    }
    if (v < 0.0) fail(source, row, "negative value '" + cells[value_col] + "'");
    if (cells[name_col].empty()) fail(source, row, "empty name");
    entries.push_back({cells[name_col], 0.0, false});
    values.push_back(v);
  }
  if (entries.empty()) throw DataError(source + ": empty frequency table");

  std::optional<std::uint64_t> population = format.population;
  switch (format.kind) {
    case ValueKind::Count: {
      const double total = std::accumulate(values.begin(), values.end(), 0.0);
      if (!(total > 0.0)) throw DataError(source + ": counts sum to zero");
      const double denom =
          population ? static_cast<double>(*population) : total;
      if (!population) population = static_cast<std::uint64_t>(std::llround(total));
      for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].proportion = values[i] / denom;
      }
      break;
    }
    case ValueKind::Proportion:
      for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].proportion = values[i];
      }
      break;
    case ValueKind::Per100k:
      for (std::size_t i = 0; i < entries.size(); ++i) {
        entries[i].proportion = values[i] / 1e5;
      }
      break;
  }
  return normalize_table(std::move(entries), population, source);
}

FrequencyTable load_frequency_table(const std::filesystem::path& path,
                                    const CsvFormat& format) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  return parse_frequency_table(in, format, path.string());
}

NameHistogram independence_join(const FrequencyTable& first,
                                 const FrequencyTable& last,
                                 std::uint64_t population,
                                 double pool_threshold) {
  if (population == 0) {
    throw std::invalid_argument("independence_join: population must be >= 1");
  }
  auto sorted = [](const FrequencyTable& t) {
    std::vector<double> p;
    for (const auto& e : t.entries) {
      if (!e.remainder && e.proportion > 0.0) p.push_back(e.proportion);
    }
    std::sort(p.begin(), p.end(), std::greater<>());
    return p;
  };
  const auto pf = sorted(first);
  const auto pl = sorted(last);
  const double pop = static_cast<double>(population);

  struct Cell {
    double expected;
    std::uint64_t order;
  };
  std::vector<Cell> cells;
  double kept = 0.0;
  if (!pl.empty()) {
    for (std::size_t i = 0; i < pf.size(); ++i) {
      if (pop * pf[i] * pl.front() < pool_threshold) break;
      for (std::size_t j = 0; j < pl.size(); ++j) {
        const double e = pop * (pf[i] * pl[j]);
        if (e < pool_threshold) break;
        cells.push_back({e, i * pl.size() + j});
        kept += e;
      }
    }
  }
  // Everything not in a kept cell becomes singletons.
  const double pooled = std::max(0.0, pop - kept);

  struct Share {
    std::uint64_t base;
    double frac;
    double expected;
    std::uint64_t order;
  };
  std::vector<Share> shares;
  shares.reserve(cells.size() + 1);
  std::uint64_t assigned = 0;
  for (const auto& c : cells) {
    const double fl = std::floor(c.expected);
    shares.push_back({static_cast<std::uint64_t>(fl), c.expected - fl, c.expected,
                      c.order});
    assigned += shares.back().base;
  }
  const std::uint64_t pooled_order = pf.size() * pl.size();
  {
    const double fl = std::floor(pooled);
    shares.push_back({static_cast<std::uint64_t>(fl), pooled - fl, pooled,
                      pooled_order});
    assigned += shares.back().base;
  }
  if (assigned > population) {
    // Only reachable through floating point drift in `kept`.
    shares.back().base -= std::min(shares.back().base, assigned - population);
    assigned = 0;
    for (const auto& s : shares) assigned += s.base;
  }
  std::uint64_t leftover = population - assigned;
  if (leftover > 0) {
    auto by_remainder = [](const Share& a, const Share& b) {
      if (a.frac != b.frac) return a.frac > b.frac;
      if (a.expected != b.expected) return a.expected > b.expected;
      return a.order < b.order;
    };
    std::vector<std::size_t> idx(shares.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto take = std::min<std::size_t>(leftover, idx.size());
    std::nth_element(idx.begin(), idx.begin() + (take - 1), idx.end(),
                     [&](std::size_t a, std::size_t b) {
                       return by_remainder(shares[a], shares[b]);
                     });
    for (std::size_t k = 0; k < take; ++k) ++shares[idx[k]].base;
    leftover -= take;
    shares.back().base += leftover;  // never hit for sane inputs
  }

  std::vector<NameHistogram::Bucket> buckets;
  for (std::size_t k = 0; k + 1 < shares.size(); ++k) {
    if (shares[k].base > 0) buckets.push_back({shares[k].base, 1});
  }
  if (shares.back().base > 0) buckets.push_back({1, shares.back().base});
  return NameHistogram::from_buckets(std::move(buckets));
}

NamesReport names_report(const NameHistogram& hist,
                         const std::vector<double>& t_grid) {
  NamesReport r;
  r.records = hist.records();
  r.names = hist.names();
  r.expected_proportion_correct =
      static_cast<double>(r.names) / static_cast<double>(r.records);
  r.entropy_nats = name_entropy(hist);
  r.log_prob_all_correct = log_prob_all_correct(hist);
  r.n_over_sum_sq = concentration_ratio(hist);
  for (double t : t_grid) r.hoeffding_bounds.push_back({t, hoeffding_tail(hist, t)});
  return r;
}

nlohmann::json to_json(const NamesReport& report) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : report.hoeffding_bounds) {
    bounds.push_back({{"t", b.t}, {"bound", b.bound}});
  }
  return {
      {"records", report.records},
      {"names", report.names},
      {"expected_proportion_correct", report.expected_proportion_correct},
      {"entropy_nats", report.entropy_nats},
      {"log_prob_all_correct", report.log_prob_all_correct},
      {"hoeffding_bounds", bounds},
      {"n_over_sum_sq", report.n_over_sum_sq},
  };
}

std::vector<GroupSizeSummary> group_size_summary(const NameHistogram& hist) {
  std::vector<GroupSizeSummary> rows;
  for (const auto& b : hist.buckets()) {
    GroupSizeSummary s;
    s.size = b.size;
    s.groups = b.groups;
    const auto dist = match_pmf(b.size);
    if (!dist.exact.empty()) {
      Rational e = 0;
      for (std::size_t z = 1; z < dist.exact.size(); ++z) e += z * dist.exact[z];
      s.expected_matches = e.convert_to<double>();
    } else {
      for (std::size_t z = 1; z < dist.pmf.size(); ++z) {
        s.expected_matches += static_cast<double>(z) * dist.pmf[z];
      }
    }
    s.prob_no_match = dist.pmf.front();
    s.prob_all_match = std::exp(-log_factorial(static_cast<double>(b.size)));
    const auto bounds = expected_matches_bounds(b.size);
    s.bound_lower = bounds.lower;
    s.bound_upper = bounds.upper;
    rows.push_back(s);
  }
  return rows;
}

}  // namespace microclust
