#include "stlmine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>

#include "stlmine/stl/monitor.hpp"
#include "stlmine/util.hpp"

namespace stlmine {

namespace {

void walk_nodes(const Formula::Node& n,
                const std::function<void(const Formula::Node&)>& fn) {
  fn(n);
  if (n.left) walk_nodes(*n.left, fn);
  if (n.right) walk_nodes(*n.right, fn);
}

long long floor_ten(long long k) {
  return k >= 0 ? k / 10 * 10 : -((-k + 9) / 10) * 10;
}

struct BoundSlot {
  bool present = false;
  long long quanta = 0;
};

void keep_min(BoundSlot& s, long long k) {
  if (!s.present || k < s.quanta) s = {true, k};
}

void keep_max(BoundSlot& s, long long k) {
  if (!s.present || k > s.quanta) s = {true, k};
}

void keep_best_mcr(double& slot, double v) {
  if (!std::isnan(v) && (std::isnan(slot) || v < slot)) slot = v;
}

struct LevelSlots {
  BoundSlot good_le, good_ge, bad_le, bad_ge;
  std::vector<std::string> good_ids, bad_ids;
  double mcr_good = std::numeric_limits<double>::quiet_NaN();
  double mcr_bad = std::numeric_limits<double>::quiet_NaN();
};

// Condition level of a comparison on an integer-valued signal. `>= x` keeps
// levels from ceil(x) up, so the rule's level is ceil(x); the other forms
// follow the same reading.
bool condition_level(Cmp cmp, double thr, int* level) {
  double x = 0.0;
  switch (cmp) {
    case Cmp::Ge: x = std::ceil(thr - 1e-9); break;
    case Cmp::Gt: x = std::floor(thr + 1e-9) + 1.0; break;
    case Cmp::Le: x = std::floor(thr + 1e-9); break;
    case Cmp::Lt: x = std::ceil(thr - 1e-9) - 1.0; break;
  }
  if (!(std::abs(x) <= 1e9)) return false;
  *level = static_cast<int>(std::llround(x));
  return true;
}

struct RuleRead {
  bool ok = false;
  int level = 0;
  bool le = false;  // comparator on the range variable, strict forms folded
  long long quanta = 0;
  std::string why;
};

RuleRead read_rule(const RangeRule& r, const std::string& var, const std::string& cond,
                   double quantum) {
  RuleRead out;
  if (!r.formula.is_ground()) {
    out.why = "not ground";
    return out;
  }
  int var_hits = 0;
  int cond_hits = 0;
  bool negated = false;
  Cmp var_cmp = Cmp::Le;
  Cmp cond_cmp = Cmp::Le;
  double var_thr = 0.0;
  double cond_thr = 0.0;
  walk_nodes(r.formula.node(), [&](const Formula::Node& n) {
    if (n.kind == NodeKind::Not) negated = true;
    if (n.kind != NodeKind::Predicate) return;
    if (n.variable == var) {
      ++var_hits;
      var_cmp = n.cmp;
      var_thr = n.threshold.number();
    } else if (n.variable == cond) {
      ++cond_hits;
      cond_cmp = n.cmp;
      cond_thr = n.threshold.number();
    }
  });
  if (negated) {
    out.why = "contains negation";
    return out;
  }
  if (var_hits != 1) {
    out.why = "compares '" + var + "' " + std::to_string(var_hits) + " times, need exactly 1";
    return out;
  }
  if (cond_hits != 1) {
    out.why = "compares '" + cond + "' " + std::to_string(cond_hits) + " times, need exactly 1";
    return out;
  }
  if (!condition_level(cond_cmp, cond_thr, &out.level)) {
    out.why = "condition threshold " + format_double(cond_thr) + " out of range";
    return out;
  }
  out.le = var_cmp == Cmp::Le || var_cmp == Cmp::Lt;
  out.quanta = std::llround(var_thr / quantum);
  out.ok = true;
  return out;
}

}  // namespace

std::vector<RepeatedRuleGroup> group_repeated_rules(
    const std::vector<PatientCandidate>& candidates) {
  std::map<std::string, RepeatedRuleGroup> by_sig;
  for (const PatientCandidate& pc : candidates) {
    std::string sig = pc.candidate.pformula.signature();
    RepeatedRuleGroup& g = by_sig[sig];
    g.signature = sig;
    GroupMember m;
    m.patient_id = pc.patient_id;
    m.task = pc.task;
    m.params = pc.candidate.best_params;
    m.accuracy = pc.candidate.accuracy;
    m.fitness = pc.candidate.fitness;
    m.rendered = pc.candidate.instantiated().render();
    g.members.push_back(std::move(m));
  }
  std::vector<RepeatedRuleGroup> out;
  out.reserve(by_sig.size());
  for (auto& [sig, g] : by_sig) out.push_back(std::move(g));
  std::stable_sort(out.begin(), out.end(),
                   [](const RepeatedRuleGroup& a, const RepeatedRuleGroup& b) {
                     return a.members.size() > b.members.size();
                   });
  return out;
}

RangeTable derive_ranges(const std::vector<RangeRule>& good_rules,
                         const std::vector<RangeRule>& bad_rules,
                         const std::string& variable,
                         const std::string& condition_variable, double quantum) {
  if (!(quantum > 0.0)) throw AnalysisError("quantum must be positive");
  RangeTable table;
  table.variable = variable;
  table.condition_variable = condition_variable;
  table.quantum = quantum;

  std::map<int, LevelSlots, std::greater<int>> levels;
  auto absorb = [&](const std::vector<RangeRule>& rules, bool good) {
    for (const RangeRule& r : rules) {
      RuleRead read = read_rule(r, variable, condition_variable, quantum);
      if (!read.ok) {
        table.warnings.push_back("rule " + r.id + ": " + read.why + ", skipped");
        continue;
      }
      LevelSlots& slot = levels[read.level];
      if (good) {
        slot.good_ids.push_back(r.id);
        keep_best_mcr(slot.mcr_good, r.mcr);
        if (read.le) {
          keep_min(slot.good_le, read.quanta);
        } else {
          keep_max(slot.good_ge, read.quanta);
        }
      } else {
        slot.bad_ids.push_back(r.id);
        keep_best_mcr(slot.mcr_bad, r.mcr);
        if (read.le) {
          keep_max(slot.bad_le, read.quanta);
        } else {
          keep_min(slot.bad_ge, read.quanta);
        }
      }
    }
  };
  absorb(good_rules, true);
  absorb(bad_rules, false);

  bool prev_upper_set = false;
  long long prev_upper = 0;
  for (const auto& [level, slot] : levels) {
    RangeRow row;
    row.level = level;
    BoundSlot upper, lower;
    if (slot.bad_ge.present) {
      upper = {true, slot.bad_ge.quanta - 1};
    } else if (slot.good_le.present) {
      upper = {true, slot.good_le.quanta};
    } else if (slot.good_ge.present) {
      upper = {true, floor_ten(slot.good_ge.quanta) + 10};
    }
    if (slot.good_ge.present) {
      lower = {true, floor_ten(slot.good_ge.quanta)};
    } else if (slot.bad_le.present) {
      lower = {true, slot.bad_le.quanta + 1};
    } else if (prev_upper_set) {
      lower = {true, prev_upper + 1};
    }
    row.has_upper = upper.present;
    row.has_lower = lower.present;
    if (upper.present) row.upper = decimal_product(upper.quanta, quantum);
    if (lower.present) row.lower = decimal_product(lower.quanta, quantum);
    row.conflict = upper.present && lower.present && lower.quanta > upper.quanta;
    row.source_ids = slot.good_ids;
    row.source_ids.insert(row.source_ids.end(), slot.bad_ids.begin(), slot.bad_ids.end());
    row.has_mcr_good = !std::isnan(slot.mcr_good);
    row.has_mcr_bad = !std::isnan(slot.mcr_bad);
    if (row.has_mcr_good) row.mcr_good = slot.mcr_good;
    if (row.has_mcr_bad) row.mcr_bad = slot.mcr_bad;
    if (upper.present) {
      prev_upper_set = true;
      prev_upper = upper.quanta;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ClusterSummary count_events(const std::vector<Chunk>& chunks,
                            const ClusterAssignment& clusters, const Formula& event_rule,
                            const std::string& amount_variable) {
  if (!event_rule.is_ground()) throw AnalysisError("event rule must be ground");
  ClusterSummary out;
  out.rule = event_rule.render();
  out.amount_variable = amount_variable;

  struct PatientTally {
    int cluster = 0;
    int hits = 0;
  };
  struct AmountTally {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, PatientTally> per_patient;
  std::map<int, AmountTally> amounts;
  std::set<std::string> unassigned;

  for (const Chunk& c : chunks) {
    if (!c.valid) continue;
    auto it = clusters.cluster_of.find(c.patient_id);
    if (it == clusters.cluster_of.end()) {
      unassigned.insert(c.patient_id);
      continue;
    }
    PatientTally& tally = per_patient[c.patient_id];
    tally.cluster = it->second;
    if (!eval_bool(event_rule, c.trace, 0.0)) continue;
    ++tally.hits;
    if (amount_variable.empty()) continue;
    if (!c.trace.has_channel(amount_variable)) {
      throw AnalysisError("chunk for patient " + c.patient_id + " lacks amount channel '" +
                          amount_variable + "'");
    }
    AmountTally& amount = amounts[it->second];
    for (double v : c.trace.channel(amount_variable)) {
      if (v != 0.0) {
        amount.sum += v;
        ++amount.n;
      }
    }
  }
  for (const std::string& p : unassigned) {
    out.warnings.push_back("patient " + p + ": no cluster assignment, chunks skipped");
  }

  std::map<int, std::pair<int, int>> cluster_tally;  // cluster -> (patients, hits)
  for (const auto& [pid, tally] : per_patient) {
    auto& ct = cluster_tally[tally.cluster];
    ++ct.first;
    ct.second += tally.hits;
  }
  for (const auto& [cluster, ct] : cluster_tally) {
    ClusterEventRow row;
    row.cluster = cluster;
    row.patients = ct.first;
    row.total_count = ct.second;
    row.avg_count = static_cast<double>(ct.second) / ct.first;
    auto ait = amounts.find(cluster);
    if (ait != amounts.end() && ait->second.n > 0) {
      row.has_amount = true;
      row.mean_amount = ait->second.sum / static_cast<double>(ait->second.n);
    }
    out.rows.push_back(row);
  }
  return out;
}

std::pair<double, double> metrics(const Candidate& c, const LabeledDataset& ds) {
  FitnessReport r = objective(c.instantiated(), ds);
  return {r.accuracy, r.mcr};
}

}  // namespace stlmine
