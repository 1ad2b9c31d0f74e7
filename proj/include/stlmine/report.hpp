#pragma once

#include <string>
#include <vector>

#include "stlmine/analysis.hpp"
#include "stlmine/learner.hpp"

namespace stlmine {

/// A misclassification rate as percent text on a 0.0001 fraction grid,
/// e.g. 0.1484 renders as "14.84%".
std::string percent_text(double fraction);

/// Machine-readable reports: JSON with two-space indent and keys in layout
/// order. Output is byte-stable for identical inputs.
std::string candidates_json(const std::string& task,
                            const std::vector<Candidate>& candidates);
std::string groups_json(const std::vector<RepeatedRuleGroup>& groups);
std::string range_table_json(const RangeTable& table);
std::string cluster_summary_json(const ClusterSummary& summary);

/// Aligned text tables for terminal reports. Missing bounds render as "?",
/// missing rates as "N/A", inverted rows carry a conflict marker.
std::string format_range_table(const RangeTable& table);
std::string format_cluster_summary(const ClusterSummary& summary);
std::string format_groups(const std::vector<RepeatedRuleGroup>& groups);

/// Plot-ready long-format CSV of per-patient bounds with header
/// group,patient_id,task,param,value,accuracy and one row per member
/// parameter. Members without parameters are omitted.
void write_bounds_csv(const std::vector<RepeatedRuleGroup>& groups,
                      const std::string& path);

/// Writes text to path, replacing any existing file. Throws
/// std::runtime_error when the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace stlmine
