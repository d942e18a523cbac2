#include "microclust/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace microclust {

std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

void write_assignment_csv(std::ostream& out, std::span<const AssignmentSimResult> rows) {
  out << kAssignmentHeader << '\n';
  for (const auto& r : rows) {
    out << format_number(r.c) << ',' << r.n << ',' << r.replicates << ','
        << format_number(r.proportion_correct_mean) << ','
        << format_number(r.proportion_correct_se) << ','
        << format_number(r.zero_correct_frequency) << ','
        << format_number(r.theory_proportion) << '\n';
  }
}

void write_dimension_csv(std::ostream& out, std::span<const DimensionSimResult> rows) {
  out << kDimensionHeader << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << r.dim << ',' << format_number(r.sigma) << ','
        << r.replicates << ',' << format_number(r.separation) << ','
        << format_number(r.proportion_correct) << ','
        << format_number(r.proportion_se) << ',' << format_number(r.bounds.lower)
        << ',' << format_number(r.bounds.upper) << ',' << (r.within_bounds ? 1 : 0)
        << '\n';
  }
}

void write_bayes_csv(std::ostream& out, std::span<const BayesSimResult> runs) {
  out << kBayesHeader << '\n';
  for (const auto& run : runs) {
    for (std::size_t s = 0; s < run.l0_samples.size(); ++s) {
      out << format_number(run.c) << ',' << s + 1 << ',' << run.l0_samples[s] << '\n';
    }
  }
}

void write_popest_csv(std::ostream& out, std::span<const PopestSimResult> runs) {
  out << kPopestHeader << '\n';
  for (const auto& run : runs) {
    const auto c = format_number(run.summary.c);
    for (const auto& r : run.rows) {
      out << c << ',' << r.replicate << ',';
      if (r.failed) {
        out << "NA,NA,NA,NA,NA,NA,NA\n";
        continue;
      }
      out << format_number(r.prop_correct) << ',' << (r.covered ? 1 : 0) << ','
          << r.n0_true << ',' << format_number(r.n0_hat) << ','
          << format_number(r.ci_lower) << ',' << format_number(r.ci_upper) << ','
          << format_number(r.mse_nx) << '\n';
    }
  }
}

void write_group_size_csv(std::ostream& out, std::span<const GroupSizeSummary> rows) {
  out << kGroupSizeHeader << '\n';
  for (const auto& r : rows) {
    out << r.size << ',' << r.groups << ',' << format_number(r.expected_matches) << ','
        << format_number(r.prob_no_match) << ',' << format_number(r.prob_all_match)
        << ',' << format_number(r.bound_lower) << ',' << format_number(r.bound_upper)
        << '\n';
  }
}

nlohmann::json to_json(const PopestSummary& s) {
  return {{"c", s.c},
          {"sigma", s.sigma},
          {"replicates", s.replicates},
          {"failed", s.failed},
          {"prop_correct", s.prop_correct},
          {"coverage", s.coverage},
          {"mse_n0", s.mse_n0},
          {"mse_nx", s.mse_nx}};
}

nlohmann::json to_json(const ExpectationBounds& b) {
  return {{"lower", b.lower}, {"upper", b.upper}, {"gap", b.upper - b.lower}};
}

nlohmann::json to_json(const Remark2Bounds& b) {
  return {{"concentration_bound", b.concentration_bound},
          {"zero_correct_limit", b.zero_correct_limit},
          {"zero_correct_finite", b.zero_correct_finite},
          {"zero_correct_finite_edges", b.zero_correct_finite_edges}};
}

nlohmann::json to_json(const ChiSquareBounds& b) {
  return {{"lower", b.lower},
          {"upper", b.upper},
          {"normal_approx_c1", b.normal_approx_c1},
          {"normal_approx_c2", b.normal_approx_c2},
          {"inscribed_ball_lower", b.inscribed_ball_lower}};
}

}  // namespace microclust
