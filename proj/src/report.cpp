#include "stlmine/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stlmine/util.hpp"

namespace stlmine {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string table_text(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      line += i + 1 == row.size() ? row[i] : pad(row[i], widths[i] + 2);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << "\n";
  }
  return out.str();
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

ordered_json params_json(const std::map<std::string, double>& params) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, value] : params) j[name] = value;
  return j;
}

std::string range_cell(const RangeRow& row) {
  std::string lo = row.has_lower ? format_double(row.lower) : "?";
  std::string hi = row.has_upper ? format_double(row.upper) : "?";
  std::string cell = lo + " - " + hi;
  if (row.conflict) cell += " (conflict)";
  return cell;
}

}  // namespace

std::string percent_text(double fraction) {
  long long centi = std::llround(fraction * 10000.0);
  return format_double(decimal_product(centi, 0.01)) + "%";
}

std::string candidates_json(const std::string& task,
                            const std::vector<Candidate>& candidates) {
  ordered_json j;
  j["task"] = task;
  j["candidates"] = ordered_json::array();
  int rank = 1;
  for (const Candidate& c : candidates) {
    ordered_json e;
    e["rank"] = rank++;
    e["formula"] = c.instantiated().render();
    e["template"] = c.pformula.render();
    e["params"] = params_json(c.best_params);
    e["fitness"] = c.fitness;
    e["accuracy"] = c.accuracy;
    e["mcr"] = c.mcr;
    e["n_pos"] = c.report.n_pos;
    e["n_neg"] = c.report.n_neg;
    j["candidates"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string groups_json(const std::vector<RepeatedRuleGroup>& groups) {
  ordered_json j;
  j["groups"] = ordered_json::array();
  int index = 1;
  for (const RepeatedRuleGroup& g : groups) {
    ordered_json e;
    e["group"] = index++;
    e["signature"] = g.signature;
    e["members"] = ordered_json::array();
    for (const GroupMember& m : g.members) {
      ordered_json me;
      me["patient_id"] = m.patient_id;
      me["task"] = m.task;
      me["params"] = params_json(m.params);
      me["accuracy"] = m.accuracy;
      me["fitness"] = m.fitness;
      me["formula"] = m.rendered;
      e["members"].push_back(std::move(me));
    }
    j["groups"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string range_table_json(const RangeTable& table) {
  ordered_json j;
  j["variable"] = table.variable;
  j["condition_variable"] = table.condition_variable;
  j["quantum"] = table.quantum;
  j["rows"] = ordered_json::array();
  for (const RangeRow& row : table.rows) {
    ordered_json e;
    e["level"] = row.level;
    e["lower"] = row.has_lower ? ordered_json(row.lower) : ordered_json(nullptr);
    e["upper"] = row.has_upper ? ordered_json(row.upper) : ordered_json(nullptr);
    e["mcr_good"] = row.has_mcr_good ? ordered_json(row.mcr_good) : ordered_json(nullptr);
    e["mcr_bad"] = row.has_mcr_bad ? ordered_json(row.mcr_bad) : ordered_json(nullptr);
    e["conflict"] = row.conflict;
    e["sources"] = row.source_ids;
    j["rows"].push_back(std::move(e));
  }
  j["warnings"] = table.warnings;
  return j.dump(2) + "\n";
}

std::string cluster_summary_json(const ClusterSummary& summary) {
  ordered_json j;
  j["rule"] = summary.rule;
  j["amount_variable"] = summary.amount_variable;
  j["rows"] = ordered_json::array();
  for (const ClusterEventRow& row : summary.rows) {
    ordered_json e;
    e["cluster"] = row.cluster;
    e["patients"] = row.patients;
    e["total_count"] = row.total_count;
    e["avg_count"] = row.avg_count;
    e["mean_amount"] = row.has_amount ? ordered_json(row.mean_amount) : ordered_json(nullptr);
    j["rows"].push_back(std::move(e));
  }
  j["warnings"] = summary.warnings;
  return j.dump(2) + "\n";
}

std::string format_range_table(const RangeTable& table) {
  std::ostringstream out;
  out << "Ranges for " << table.variable << " by " << table.condition_variable << " (quantum "
      << format_double(table.quantum) << ")\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"level", "range", "MCR_good", "MCR_bad", "sources"});
  for (const RangeRow& row : table.rows) {
    rows.push_back({std::to_string(row.level), range_cell(row),
                    row.has_mcr_good ? percent_text(row.mcr_good) : "N/A",
                    row.has_mcr_bad ? percent_text(row.mcr_bad) : "N/A",
                    join(row.source_ids, ", ")});
  }
  out << table_text(rows);
  for (const std::string& w : table.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string format_cluster_summary(const ClusterSummary& summary) {
  std::ostringstream out;
  out << "Chunks matching " << summary.rule << "\n";
  std::vector<std::vector<std::string>> rows;
  std::string amount_head =
      summary.amount_variable.empty() ? "mean_amount" : "mean " + summary.amount_variable;
  rows.push_back({"cluster", "patients", "total", "avg_per_patient", amount_head});
  for (const ClusterEventRow& row : summary.rows) {
    rows.push_back({std::to_string(row.cluster), std::to_string(row.patients),
                    std::to_string(row.total_count), format_double(row.avg_count),
                    row.has_amount ? format_double(row.mean_amount) : "N/A"});
  }
  out << table_text(rows);
  for (const std::string& w : summary.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::string format_groups(const std::vector<RepeatedRuleGroup>& groups) {
  std::ostringstream out;
  int index = 1;
  for (const RepeatedRuleGroup& g : groups) {
    out << "group " << index++ << " (" << g.members.size() << " member"
        << (g.members.size() == 1 ? "" : "s") << "): " << g.signature << "\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"  patient", "task", "accuracy", "params"});
    for (const GroupMember& m : g.members) {
      std::vector<std::string> parts;
      for (const auto& [name, value] : m.params) parts.push_back(name + "=" + format_double(value));
      rows.push_back({"  " + m.patient_id, m.task, format_double(m.accuracy), join(parts, " ")});
    }
    out << table_text(rows);
  }
  if (groups.empty()) out << "no rules to group\n";
  return out.str();
}

void write_bounds_csv(const std::vector<RepeatedRuleGroup>& groups, const std::string& path) {
  std::string body = "group,patient_id,task,param,value,accuracy\n";
  int index = 1;
  for (const RepeatedRuleGroup& g : groups) {
    for (const GroupMember& m : g.members) {
      for (const auto& [name, value] : m.params) {
        body += std::to_string(index) + "," + m.patient_id + "," + m.task + "," + name + "," +
                format_double(value) + "," + format_double(m.accuracy) + "\n";
      }
    }
    ++index;
  }
  write_text_file(path, body);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace stlmine
