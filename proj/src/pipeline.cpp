#include "stlmine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stlmine/analysis.hpp"
#include "stlmine/report.hpp"
#include "stlmine/stl/parser.hpp"
#include "stlmine/util.hpp"

namespace stlmine {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  try {
    // stoull accepts and wraps a leading minus, so forbid it up front
    if (value.empty() || value[0] == '-') throw std::invalid_argument(value);
    std::size_t used = 0;
    std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// ---------------------------------------------------------------------------
// in-memory pipeline state

struct PatientData {
  std::string id;
  std::string path;
  bool ok = false;
  std::string error;
  RawRecordStream raw;
  PatientSeries series;
  std::vector<Chunk> chunks;
  std::size_t valid_chunks = 0;
  MulticlassResult learned;
};

struct Workspace {
  PipelineConfig cfg;
  fs::path out;
  std::vector<PatientData> patients;
  std::vector<std::string> artifacts;
};

void emit(Workspace& ws, const std::string& rel, const std::string& content) {
  fs::path path = ws.out / rel;
  fs::create_directories(path.parent_path());
  write_text_file(path.string(), content);
  ws.artifacts.push_back(rel);
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

std::vector<PatientData> scan_inputs(const PipelineConfig& cfg) {
  if (cfg.input_dir.empty()) throw ConfigError("input_dir is not set");
  fs::path dir(cfg.input_dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw ConfigError("input_dir '" + cfg.input_dir + "' is not a directory");
  }
  std::vector<PatientData> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    PatientData p;
    p.id = entry.path().stem().string();
    p.path = entry.path().string();
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const PatientData& a, const PatientData& b) { return a.id < b.id; });
  return out;
}

// ingest + resample + exercise + chunk for one patient; errors stay local
void load_patient(PatientData& p) {
  try {
    p.raw = ingest_csv(p.path);
    if (p.raw.empty()) throw DatasetError("no events");
    std::int64_t first = p.raw.first_timestamp();
    std::int64_t last = p.raw.last_timestamp();
    std::int64_t start = first - (((first % kStepSeconds) + kStepSeconds) % kStepSeconds);
    std::int64_t steps = (last - start + kStepSeconds - 1) / kStepSeconds;
    std::int64_t end = start + (steps + 1) * kStepSeconds;
    p.series = detect_exercise(align_resample(p.raw, start, end, p.id));
    p.chunks = chunk(p.series);
    for (const Chunk& c : p.chunks) {
      if (c.valid) ++p.valid_chunks;
    }
    p.ok = true;
  } catch (const std::exception& e) {
    p.ok = false;
    p.error = e.what();
  }
}

Workspace open_workspace(const PipelineConfig& cfg, bool with_inputs) {
  cfg.validate();
  Workspace ws;
  ws.cfg = cfg;
  ws.out = fs::path(cfg.output_dir);
  fs::create_directories(ws.out);
  if (with_inputs) {
    ws.patients = scan_inputs(cfg);
    parallel_for(ws.patients.size(), cfg.jobs,
                 [&](std::size_t i) { load_patient(ws.patients[i]); });
  }
  return ws;
}

std::size_t count_ok(const Workspace& ws) {
  std::size_t n = 0;
  for (const PatientData& p : ws.patients) n += p.ok ? 1 : 0;
  return n;
}

void report_patients(const Workspace& ws, std::ostream& log) {
  for (const PatientData& p : ws.patients) {
    if (p.ok) {
      log << "patient " << p.id << ": " << p.chunks.size() << " chunks ("
          << p.valid_chunks << " valid)\n";
    } else {
      log << "patient " << p.id << ": error: " << p.error << "\n";
    }
  }
}

StageResult finish(Workspace& ws, std::ostream& log, bool need_patients) {
  StageResult r;
  for (const PatientData& p : ws.patients) {
    r.outcomes.push_back({p.id, p.ok, p.error, p.chunks.size(), p.valid_chunks});
  }
  r.artifacts = std::move(ws.artifacts);
  if (need_patients && count_ok(ws) == 0) {
    log << "error: no usable patient data in '" << ws.cfg.input_dir << "'\n";
    r.exit_code = 2;
  }
  return r;
}

std::vector<Chunk> all_valid_chunks(const Workspace& ws) {
  std::vector<Chunk> all;
  for (const PatientData& p : ws.patients) {
    if (!p.ok) continue;
    for (const Chunk& c : p.chunks) {
      if (c.valid) all.push_back(c);
    }
  }
  return all;
}

// ---------------------------------------------------------------------------
// stage artifact writers

void write_ingest_summary(Workspace& ws) {
  ordered_json j;
  j["patients"] = ordered_json::array();
  for (const PatientData& p : ws.patients) {
    ordered_json e;
    e["id"] = p.id;
    if (!p.ok) {
      e["error"] = p.error;
      j["patients"].push_back(std::move(e));
      continue;
    }
    e["first"] = format_iso8601(p.raw.first_timestamp());
    e["last"] = format_iso8601(p.raw.last_timestamp());
    ordered_json counts = ordered_json::object();
    for (const auto& [channel, events] : p.raw.events) {
      if (!events.empty()) counts[channel] = events.size();
    }
    e["events"] = std::move(counts);
    e["warnings"] = p.raw.warnings;
    j["patients"].push_back(std::move(e));
  }
  emit(ws, "ingest.json", json_text(j));
}

void write_preprocess(Workspace& ws) {
  ordered_json j;
  j["patients"] = ordered_json::array();
  for (const PatientData& p : ws.patients) {
    if (!p.ok) continue;
    std::string rel = "series/" + p.id + ".csv";
    fs::path path = ws.out / rel;
    fs::create_directories(path.parent_path());
    write_series_csv(p.series, path.string());
    ws.artifacts.push_back(rel);
    ordered_json e;
    e["id"] = p.id;
    e["start"] = format_iso8601(p.series.trace.start_epoch_s);
    e["samples"] = p.series.trace.size();
    e["chunks"] = p.chunks.size();
    e["valid_chunks"] = p.valid_chunks;
    j["patients"].push_back(std::move(e));
  }
  emit(ws, "chunks.json", json_text(j));
}

void write_labels(Workspace& ws) {
  ordered_json j;
  j["patients"] = ordered_json::array();
  for (const PatientData& p : ws.patients) {
    if (!p.ok) continue;
    std::string rel = "labels/" + p.id + ".csv";
    fs::path path = ws.out / rel;
    fs::create_directories(path.parent_path());
    write_labels_csv(p.chunks, path.string(), ws.cfg.labels);
    ws.artifacts.push_back(rel);

    std::map<TirClass, int> counts;
    double tir_sum = 0.0;
    std::size_t n = 0;
    for (const Chunk& c : p.chunks) {
      if (!c.valid) continue;
      double tir = time_in_range(c, ws.cfg.labels);
      ++counts[tir_class(tir, ws.cfg.labels)];
      tir_sum += tir;
      ++n;
    }
    ordered_json e;
    e["id"] = p.id;
    e["valid_chunks"] = n;
    e["avg_tir"] = n > 0 ? tir_sum / static_cast<double>(n) : 0.0;
    ordered_json hist = ordered_json::object();
    for (TirClass t : kAllTirClasses) {
      hist[tir_class_name(t)] = counts.count(t) ? counts[t] : 0;
    }
    e["classes"] = std::move(hist);
    j["patients"].push_back(std::move(e));
  }
  emit(ws, "labels.json", json_text(j));
}

ClusterAssignment write_clusters(Workspace& ws) {
  ClusterAssignment assignment = cluster_patients(all_valid_chunks(ws), ws.cfg.labels);
  ordered_json j;
  j["assignments"] = ordered_json::array();
  for (const auto& [id, cluster] : assignment.cluster_of) {
    ordered_json e;
    e["id"] = id;
    e["cluster"] = cluster;
    e["avg_tir"] = assignment.avg_tir.at(id);
    j["assignments"].push_back(std::move(e));
  }
  j["warnings"] = assignment.warnings;
  emit(ws, "clusters.json", json_text(j));
  return assignment;
}

std::vector<Candidate> top_candidates(const std::vector<Candidate>& all, int k) {
  std::vector<Candidate> out;
  for (const Candidate& c : all) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(c);
  }
  return out;
}

// learn per patient (individual mode); failures recorded on the patient
void learn_individual(Workspace& ws, std::ostream& log) {
  parallel_for(ws.patients.size(), ws.cfg.jobs, [&](std::size_t i) {
    PatientData& p = ws.patients[i];
    if (!p.ok) return;
    try {
      GaConfig ga = ws.cfg.ga;
      GpUcbConfig gp = ws.cfg.gp;
      ga.seed = mix_seed(ws.cfg.ga.seed, 4096 + i);
      gp.seed = mix_seed(ws.cfg.gp.seed, 8192 + i);
      p.learned = learn_multiclass(p.chunks, ga, gp, ws.cfg.labels, 1);
    } catch (const std::exception& e) {
      p.ok = false;
      p.error = std::string("learn: ") + e.what();
    }
  });
  for (PatientData& p : ws.patients) {
    if (!p.ok) continue;
    for (const auto& [cls, candidates] : p.learned.per_class) {
      std::string task = std::string("class_") + tir_class_name(cls);
      emit(ws, "rules/" + p.id + "_" + task + ".json",
           candidates_json(task, top_candidates(candidates, ws.cfg.top_k)));
    }
    for (const std::string& s : p.learned.skipped) {
      log << "patient " << p.id << ": " << s << "\n";
    }
  }
}

struct ClusterLearnResult {
  int cluster = 0;
  bool ok = false;
  std::string error;
  std::vector<Candidate> candidates;
};

// learn per cluster (population mode)
std::vector<ClusterLearnResult> learn_population(Workspace& ws,
                                                 const ClusterAssignment& assignment,
                                                 std::ostream& log) {
  std::set<int> ids;
  for (const auto& [id, cluster] : assignment.cluster_of) ids.insert(cluster);
  std::vector<int> order(ids.begin(), ids.end());
  std::vector<Chunk> pool = all_valid_chunks(ws);

  std::vector<ClusterLearnResult> results(order.size());
  parallel_for(order.size(), ws.cfg.jobs, [&](std::size_t i) {
    ClusterLearnResult& r = results[i];
    r.cluster = order[i];
    std::vector<Chunk> members;
    for (const Chunk& c : pool) {
      auto it = assignment.cluster_of.find(c.patient_id);
      if (it != assignment.cluster_of.end() && it->second == r.cluster) {
        members.push_back(c);
      }
    }
    try {
      LabeledDataset ds = cluster_labels(members, ws.cfg.labels);
      ds.task = "cluster" + std::to_string(r.cluster);
      GaConfig ga = ws.cfg.ga;
      GpUcbConfig gp = ws.cfg.gp;
      ga.seed = mix_seed(ws.cfg.ga.seed, 16384 + static_cast<std::uint64_t>(r.cluster));
      gp.seed = mix_seed(ws.cfg.gp.seed, 32768 + static_cast<std::uint64_t>(r.cluster));
      r.candidates = learn(ds, ga, gp, 1);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  for (const ClusterLearnResult& r : results) {
    if (r.ok) {
      emit(ws, "rules/cluster" + std::to_string(r.cluster) + ".json",
           candidates_json("cluster" + std::to_string(r.cluster),
                           top_candidates(r.candidates, ws.cfg.top_k)));
    } else {
      log << "cluster " << r.cluster << ": error: " << r.error << "\n";
    }
  }
  return results;
}

void write_groups(Workspace& ws) {
  std::vector<PatientCandidate> best;
  for (const PatientData& p : ws.patients) {
    if (!p.ok) continue;
    for (const auto& [cls, candidates] : p.learned.per_class) {
      if (candidates.empty()) continue;
      best.push_back({p.id, std::string("class_") + tir_class_name(cls), candidates.front()});
    }
  }
  std::vector<RepeatedRuleGroup> groups = group_repeated_rules(best);
  emit(ws, "analysis/groups.json", groups_json(groups));
  emit(ws, "analysis/groups.txt", format_groups(groups));
  fs::create_directories(ws.out / "analysis");
  write_bounds_csv(groups, (ws.out / "analysis/bounds.csv").string());
  ws.artifacts.push_back("analysis/bounds.csv");
}

void write_events(Workspace& ws, const ClusterAssignment& assignment) {
  Formula rule = parse(ws.cfg.event_rule);
  ClusterSummary summary =
      count_events(all_valid_chunks(ws), assignment, rule, ws.cfg.amount_variable);
  emit(ws, "analysis/events.json", cluster_summary_json(summary));
  emit(ws, "analysis/events.txt", format_cluster_summary(summary));
}

// rule list format: `<id> <good|bad> <mcr|-> <formula text>` per line
void parse_rules_file(const std::string& path, std::vector<RangeRule>& good,
                      std::vector<RangeRule>& bad) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, cls, mcr_text;
    ss >> id >> cls >> mcr_text;
    std::string formula_text;
    std::getline(ss, formula_text);
    formula_text = trim(formula_text);
    if (formula_text.empty() || (cls != "good" && cls != "bad")) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected '<id> <good|bad> <mcr|-> <formula>'");
    }
    double mcr = std::numeric_limits<double>::quiet_NaN();
    if (mcr_text != "-") mcr = to_double("mcr", mcr_text);
    try {
      (cls == "good" ? good : bad).push_back({id, parse(formula_text), mcr});
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void write_ranges(Workspace& ws) {
  std::vector<RangeRule> good, bad;
  parse_rules_file(ws.cfg.rules_path, good, bad);
  RangeTable table = derive_ranges(good, bad, ws.cfg.analyze_variable,
                                   ws.cfg.analyze_condition, ws.cfg.analyze_quantum);
  emit(ws, "analysis/ranges.json", range_table_json(table));
  emit(ws, "analysis/ranges.txt", format_range_table(table));
}

void write_run_summary(Workspace& ws) {
  ordered_json j;
  j["mode"] = ws.cfg.mode;
  j["seed"] = ws.cfg.seed;
  j["patients"] = ordered_json::array();
  for (const PatientData& p : ws.patients) {
    ordered_json e;
    e["id"] = p.id;
    e["ok"] = p.ok;
    if (!p.ok) e["error"] = p.error;
    e["chunks"] = p.chunks.size();
    e["valid_chunks"] = p.valid_chunks;
    j["patients"].push_back(std::move(e));
  }
  std::vector<std::string> sorted = ws.artifacts;
  sorted.push_back("run_summary.json");
  std::sort(sorted.begin(), sorted.end());
  j["artifacts"] = sorted;
  emit(ws, "run_summary.json", json_text(j));
}

StageResult guard(std::ostream& log, const std::function<StageResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    StageResult r;
    r.exit_code = 2;
    return r;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// config

void PipelineConfig::validate() const {
  if (mode != "individual" && mode != "population") {
    throw ConfigError("mode must be 'individual' or 'population', got '" + mode + "'");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (analyze_quantum <= 0.0) throw ConfigError("analyze.quantum must be positive");
  if (labels.band_lo >= labels.band_hi) throw ConfigError("labels band is inverted");
  try {
    ga.validate();
    gp.validate();
    synth.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "input_dir") cfg.input_dir = value;
  else if (key == "output_dir") cfg.output_dir = value;
  else if (key == "mode") cfg.mode = value;
  else if (key == "jobs") cfg.jobs = static_cast<int>(to_int(key, value));
  else if (key == "top_k") cfg.top_k = static_cast<int>(to_int(key, value));
  else if (key == "seed") {
    cfg.seed = to_seed(key, value);
    cfg.ga.seed = cfg.seed;
    cfg.gp.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
  } else if (key == "ga.population") cfg.ga.population = static_cast<int>(to_int(key, value));
  else if (key == "ga.generations") cfg.ga.generations = static_cast<int>(to_int(key, value));
  else if (key == "ga.mutation_rate") cfg.ga.mutation_rate = to_double(key, value);
  else if (key == "ga.crossover_rate") cfg.ga.crossover_rate = to_double(key, value);
  else if (key == "ga.max_depth") cfg.ga.max_depth = static_cast<int>(to_int(key, value));
  else if (key == "ga.elitism") cfg.ga.elitism = static_cast<int>(to_int(key, value));
  else if (key == "ga.tournament") cfg.ga.tournament = static_cast<int>(to_int(key, value));
  else if (key == "ga.seed") cfg.ga.seed = to_seed(key, value);
  else if (key == "gp.budget") cfg.gp.budget = static_cast<int>(to_int(key, value));
  else if (key == "gp.init_points") cfg.gp.init_points = static_cast<int>(to_int(key, value));
  else if (key == "gp.candidate_pool") {
    cfg.gp.candidate_pool = static_cast<int>(to_int(key, value));
  } else if (key == "gp.polish_rounds") {
    cfg.gp.polish_rounds = static_cast<int>(to_int(key, value));
  } else if (key == "gp.length_scale") cfg.gp.length_scale = to_double(key, value);
  else if (key == "gp.signal_var") cfg.gp.signal_var = to_double(key, value);
  else if (key == "gp.noise_var") cfg.gp.noise_var = to_double(key, value);
  else if (key == "gp.optimize_accuracy") cfg.gp.optimize_accuracy = to_bool(key, value);
  else if (key == "gp.seed") cfg.gp.seed = to_seed(key, value);
  else if (key == "labels.band_lo") cfg.labels.band_lo = to_double(key, value);
  else if (key == "labels.band_hi") cfg.labels.band_hi = to_double(key, value);
  else if (key == "labels.cut_c100") cfg.labels.cut_c100 = to_double(key, value);
  else if (key == "labels.cut_c75") cfg.labels.cut_c75 = to_double(key, value);
  else if (key == "labels.cut_c50") cfg.labels.cut_c50 = to_double(key, value);
  else if (key == "labels.cluster_hi") cfg.labels.cluster_hi = to_double(key, value);
  else if (key == "labels.cluster_mid") cfg.labels.cluster_mid = to_double(key, value);
  else if (key == "labels.cluster_lo") cfg.labels.cluster_lo = to_double(key, value);
  else if (key == "labels.cluster_pos_cut") {
    cfg.labels.cluster_pos_cut = to_double(key, value);
  } else if (key == "synth.patients") cfg.synth.patients = static_cast<int>(to_int(key, value));
  else if (key == "synth.days") cfg.synth.days = static_cast<int>(to_int(key, value));
  else if (key == "synth.alpha_lo") cfg.synth.alpha_lo = static_cast<int>(to_int(key, value));
  else if (key == "synth.alpha_hi") cfg.synth.alpha_hi = static_cast<int>(to_int(key, value));
  else if (key == "synth.beta_lo") cfg.synth.beta_lo = static_cast<int>(to_int(key, value));
  else if (key == "synth.beta_hi") cfg.synth.beta_hi = static_cast<int>(to_int(key, value));
  else if (key == "synth.excursion_rate") cfg.synth.excursion_rate = to_double(key, value);
  else if (key == "synth.poor_rate") cfg.synth.poor_rate = to_double(key, value);
  else if (key == "synth.smbg_per_day") {
    cfg.synth.smbg_per_day = static_cast<int>(to_int(key, value));
  } else if (key == "synth.noise") cfg.synth.noise = to_double(key, value);
  else if (key == "synth.start_epoch_s") cfg.synth.start_epoch_s = to_int(key, value);
  else if (key == "synth.seed") cfg.synth.seed = to_seed(key, value);
  else if (key == "analyze.variable") cfg.analyze_variable = value;
  else if (key == "analyze.condition") cfg.analyze_condition = value;
  else if (key == "analyze.quantum") cfg.analyze_quantum = to_double(key, value);
  else if (key == "analyze.rules") cfg.rules_path = value;
  else if (key == "analyze.event_rule") cfg.event_rule = value;
  else if (key == "analyze.amount") cfg.amount_variable = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// stage drivers

StageResult cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, false);
    SyntheticCohort cohort = synth_cohort(cfg.synth);
    write_cohort_csv(cohort, ws.out.string());
    for (const SyntheticPatient& p : cohort.patients) {
      ws.artifacts.push_back(p.truth.id + ".csv");
      log << "patient " << p.truth.id << ": in-band fraction "
          << format_double(p.truth.in_band_fraction) << "\n";
      if (p.truth.in_band_fraction < 0.95) {
        log << "warning: patient " << p.truth.id << " in-band fraction below 0.95\n";
      }
    }
    ws.artifacts.push_back("manifest.json");
    log << "wrote " << cohort.patients.size() << " patients to " << ws.out.string() << "\n";
    return finish(ws, log, false);
  });
}

StageResult cmd_ingest(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    write_ingest_summary(ws);
    report_patients(ws, log);
    return finish(ws, log, true);
  });
}

StageResult cmd_preprocess(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    write_preprocess(ws);
    report_patients(ws, log);
    return finish(ws, log, true);
  });
}

StageResult cmd_label(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    write_labels(ws);
    report_patients(ws, log);
    return finish(ws, log, true);
  });
}

StageResult cmd_cluster(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    ClusterAssignment assignment = write_clusters(ws);
    for (const auto& [id, cluster] : assignment.cluster_of) {
      log << "patient " << id << ": cluster " << cluster << "\n";
    }
    for (const std::string& w : assignment.warnings) log << w << "\n";
    return finish(ws, log, true);
  });
}

StageResult cmd_learn(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    if (cfg.mode == "individual") {
      learn_individual(ws, log);
    } else {
      ClusterAssignment assignment = cluster_patients(all_valid_chunks(ws), cfg.labels);
      learn_population(ws, assignment, log);
    }
    report_patients(ws, log);
    return finish(ws, log, true);
  });
}

StageResult cmd_analyze(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    // a rules file alone is analyzable without any patient data
    bool ranges_only = !cfg.rules_path.empty() && cfg.input_dir.empty();
    Workspace ws = open_workspace(cfg, !ranges_only);
    if (!cfg.rules_path.empty()) write_ranges(ws);
    if (!ranges_only) {
      if (cfg.mode == "individual") {
        learn_individual(ws, log);
        write_groups(ws);
      } else {
        ClusterAssignment assignment = cluster_patients(all_valid_chunks(ws), cfg.labels);
        learn_population(ws, assignment, log);
        write_events(ws, assignment);
      }
      report_patients(ws, log);
    }
    return finish(ws, log, !ranges_only);
  });
}

StageResult cmd_run(const PipelineConfig& cfg, std::ostream& log) {
  return guard(log, [&] {
    Workspace ws = open_workspace(cfg, true);
    write_ingest_summary(ws);
    write_preprocess(ws);
    write_labels(ws);
    ClusterAssignment assignment = write_clusters(ws);
    if (cfg.mode == "individual") {
      learn_individual(ws, log);
      write_groups(ws);
    } else {
      learn_population(ws, assignment, log);
      write_events(ws, assignment);
    }
    if (!cfg.rules_path.empty()) write_ranges(ws);
    write_run_summary(ws);
    report_patients(ws, log);
    return finish(ws, log, true);
  });
}

}  // namespace stlmine
