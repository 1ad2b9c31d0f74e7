#pragma once

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stlmine/dataset.hpp"
#include "stlmine/labeling.hpp"
#include "stlmine/learner.hpp"
#include "stlmine/stl/ast.hpp"

namespace stlmine {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One learned rule tagged with its origin, input to group_repeated_rules.
struct PatientCandidate {
  std::string patient_id;
  std::string task;  // classification task the rule solves, e.g. a TIR class
  Candidate candidate;
};

struct GroupMember {
  std::string patient_id;
  std::string task;
  std::map<std::string, double> params;
  double accuracy = 0.0;
  double fitness = 0.0;
  std::string rendered;  // instantiated formula text
};

/// Rules sharing one template signature across patients. The per-member
/// parameter assignments are the personalized bounds behind the cohort
/// bound tables and plots.
struct RepeatedRuleGroup {
  std::string signature;
  std::vector<GroupMember> members;
};

/// Partitions candidates by template signature (numeric slots abstracted,
/// variables and comparators kept). Every candidate lands in exactly one
/// group. Groups are ordered by descending member count, ties by signature
/// text; members keep input order.
std::vector<RepeatedRuleGroup> group_repeated_rules(
    const std::vector<PatientCandidate>& candidates);

/// Classification rule feeding the range derivation. The formula must be
/// ground and is expected to compare the range variable and the condition
/// variable exactly once each; rules that do not are skipped with a warning.
/// `mcr` is the rule's reported misclassification rate as a fraction in
/// [0, 1]; NaN marks it unknown.
struct RangeRule {
  std::string id;
  Formula formula;
  double mcr = std::numeric_limits<double>::quiet_NaN();
};

struct RangeRow {
  int level = 0;
  bool has_lower = false;
  bool has_upper = false;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> source_ids;  // good-class rules first, input order
  bool has_mcr_good = false;
  bool has_mcr_bad = false;  // false renders as N/A
  double mcr_good = 0.0;
  double mcr_bad = 0.0;
  bool conflict = false;  // set when the derived bounds invert
};

struct RangeTable {
  std::string variable;
  std::string condition_variable;
  double quantum = 0.001;
  std::vector<RangeRow> rows;  // descending condition level
  std::vector<std::string> warnings;
};

/// Derives per-level [lower, upper] ranges for `variable` from good-class
/// rules (the upper half of the TIR classes) and bad-class rules (the lower
/// half), each conditioned on `condition_variable`.
///
/// A rule's condition level is read from its condition-variable comparison,
/// assuming an integer-valued signal: `>= x` means level ceil(x), `<= x`
/// means level floor(x), and strict forms exclude the boundary. Range-
/// variable thresholds are rounded to the quantum grid and strict
/// comparators are treated as their non-strict counterparts.
///
/// Per level, in priority order:
///   upper: one quantum below a bad >=-threshold, else a good <=-threshold,
///          else the ten-quanta cell ceiling above a good >=-threshold.
///   lower: a good >=-threshold floored to the ten-quanta grid, else one
///          quantum above a bad <=-threshold, else one quantum above the
///          next higher level's upper bound.
/// When several rules feed one slot the tightest bound wins. Levels with no
/// rules are omitted; inverted bounds are kept and conflict-marked. Each
/// MCR column reports the best (lowest) known rate among that class's rules
/// at the level.
RangeTable derive_ranges(const std::vector<RangeRule>& good_rules,
                         const std::vector<RangeRule>& bad_rules,
                         const std::string& variable,
                         const std::string& condition_variable,
                         double quantum = 0.001);

struct ClusterEventRow {
  int cluster = 0;
  int patients = 0;       // distinct patients with usable chunks
  int total_count = 0;    // satisfying chunks summed over the cluster
  double avg_count = 0.0; // mean satisfying-chunk count per patient
  bool has_amount = false;
  double mean_amount = 0.0;  // mean nonzero amount sample in satisfying chunks
};

struct ClusterSummary {
  std::string rule;  // rendered event rule
  std::string amount_variable;
  std::vector<ClusterEventRow> rows;  // ascending cluster id; empty clusters omitted
  std::vector<std::string> warnings;
};

/// Counts the chunks satisfying event_rule at t = 0 per patient, then
/// aggregates the counts per cluster. With a non-empty amount_variable the
/// summary also reports the mean of that channel's nonzero samples across
/// satisfying chunks. Invalid chunks are dropped; chunks from patients
/// without a cluster assignment are skipped with a warning. Counting is
/// additive over disjoint chunk sets. Throws AnalysisError on a parametric
/// rule or a missing amount channel.
ClusterSummary count_events(const std::vector<Chunk>& chunks,
                            const ClusterAssignment& clusters,
                            const Formula& event_rule,
                            const std::string& amount_variable = {});

/// (accuracy, mcr) of the candidate on the dataset; the two sum to 1
/// exactly. Thin wrapper over objective().
std::pair<double, double> metrics(const Candidate& c, const LabeledDataset& ds);

}  // namespace stlmine
