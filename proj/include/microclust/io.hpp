#pragma once

// CSV and JSON emission with fixed schemas. Numbers are printed with %.12g
// so output bytes depend only on the values.

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "microclust/bayes_mixture.hpp"
#include "microclust/gaussian_assignment.hpp"
#include "microclust/name_data.hpp"
#include "microclust/popest.hpp"

namespace microclust {

std::string format_number(double value);

inline constexpr const char* kAssignmentHeader =
    "c,N,replicates,prop_correct,prop_se,zero_correct_freq,theory";
inline constexpr const char* kDimensionHeader =
    "N,p,sigma,replicates,delta,prop_correct,prop_se,lower,upper,within_bounds";
inline constexpr const char* kBayesHeader = "c,sweep,l0";
inline constexpr const char* kPopestHeader =
    "c,replicate,prop_correct,covered,n0_true,n0_hat,ci_lo,ci_hi,mse_nx";
inline constexpr const char* kGroupSizeHeader =
    "group_size,groups,expected_matches,prob_no_match,prob_all_match,bound_lower,bound_upper";

void write_assignment_csv(std::ostream& out, std::span<const AssignmentSimResult> rows);
void write_dimension_csv(std::ostream& out, std::span<const DimensionSimResult> rows);
// Sweeps are numbered from 1 within each c.
void write_bayes_csv(std::ostream& out, std::span<const BayesSimResult> runs);
// Failed replicates keep their c and replicate columns; the rest read NA.
void write_popest_csv(std::ostream& out, std::span<const PopestSimResult> runs);
void write_group_size_csv(std::ostream& out, std::span<const GroupSizeSummary> rows);

nlohmann::json to_json(const PopestSummary& summary);
nlohmann::json to_json(const ExpectationBounds& bounds);
nlohmann::json to_json(const Remark2Bounds& bounds);
nlohmann::json to_json(const ChiSquareBounds& bounds);

}  // namespace microclust
