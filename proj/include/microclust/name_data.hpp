#pragma once

// Census-style name frequency tables and the first x last name join.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "microclust/combinatorics.hpp"

namespace microclust {

struct FrequencyEntry {
  std::string name;
  double proportion = 0.0;
  // Synthesized bucket for the mass a truncated table leaves out.
  bool remainder = false;
};

struct FrequencyTable {
  std::vector<FrequencyEntry> entries;
  std::optional<std::uint64_t> source_population;
};

inline constexpr const char* kRemainderName = "OTHER";

enum class ValueKind { Count, Proportion, Per100k };

/// Column mapping for delimited name tables. With `header` set, the columns
/// are looked up by name; otherwise they are zero-based indices ("0", "2").
/// Census surname files are count based (name,rank,count,...), given-name
/// tables are usually proportions.
struct CsvFormat {
  char delimiter = ',';
  bool header = true;
  std::string name_column = "name";
  std::string value_column = "count";
  ValueKind kind = ValueKind::Count;
  // Counts are divided by this when set, otherwise by their sum.
  std::optional<std::uint64_t> population;
};

// Errors are DataError with "<source>:<row>: <reason>" messages.
FrequencyTable load_frequency_table(const std::filesystem::path& path,
                                    const CsvFormat& format);
FrequencyTable parse_frequency_table(std::istream& in, const CsvFormat& format,
                                     const std::string& source);

// Rejects duplicates and totals above 1 + 1e-6; appends the remainder
// entry when the proportions fall short of 1.
FrequencyTable normalize_table(std::vector<FrequencyEntry> entries,
                               std::optional<std::uint64_t> source_population,
                               const std::string& source);

/// Joint histogram of a population of `population` people whose first and
/// last names are drawn independently from the two tables.
///
/// Cell (f, l) has expected size population * p_f * p_l. Cells below
/// `pool_threshold`, and any cell touching a remainder entry, are pooled
/// and realized as singleton groups. Integer sizes come from largest
/// remainder rounding (ties: larger expected size first, then cell order
/// by descending proportion), so Σ N_m == population exactly.
NameHistogram independence_join(const FrequencyTable& first,
                                 const FrequencyTable& last,
                                 std::uint64_t population,
                                 double pool_threshold = 0.5);

struct TailBound {
  double t = 0.0;
  double bound = 0.0;
};

struct NamesReport {
  std::uint64_t records = 0;
  std::uint64_t names = 0;
  double expected_proportion_correct = 0.0;  // M / N
  double entropy_nats = 0.0;
  double log_prob_all_correct = 0.0;
  double n_over_sum_sq = 0.0;  // N^2 / Σ N_m^2
  std::vector<TailBound> hoeffding_bounds;
};

NamesReport names_report(const NameHistogram& hist,
                         const std::vector<double>& t_grid);

nlohmann::json to_json(const NamesReport& report);

// One row per distinct group size, for the per-bucket CSV.
struct GroupSizeSummary {
  std::uint64_t size = 0;
  std::uint64_t groups = 0;
  double expected_matches = 0.0;
  double prob_no_match = 0.0;
  double prob_all_match = 0.0;
  double bound_lower = 0.0;
  double bound_upper = 0.0;
};

std::vector<GroupSizeSummary> group_size_summary(const NameHistogram& hist);

}  // namespace microclust
