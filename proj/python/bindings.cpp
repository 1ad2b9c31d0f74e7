// Python bindings for the mining toolkit. The module mirrors the C++ API
// closely: traces and formulas are first-class objects, datasets are chunk
// lists with +1/-1 labels, and the pipeline stages are callable with the
// same key=value options the command line accepts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stlmine/analysis.hpp"
#include "stlmine/dataset.hpp"
#include "stlmine/labeling.hpp"
#include "stlmine/learner.hpp"
#include "stlmine/pipeline.hpp"
#include "stlmine/report.hpp"
#include "stlmine/stl/ast.hpp"
#include "stlmine/stl/monitor.hpp"
#include "stlmine/stl/parser.hpp"
#include "stlmine/synth.hpp"
#include "stlmine/trace.hpp"
#include "stlmine/util.hpp"

namespace py = pybind11;
using namespace stlmine;

namespace {

TirClass tir_class_from_name(const std::string& name) {
  for (TirClass c : kAllTirClasses)
    if (name == tir_class_name(c)) return c;
  throw std::invalid_argument("unknown TIR class '" + name +
                              "', expected c100, c7599, c5074 or lt50");
}

// Ingest one patient CSV and cut it into hour chunks on the grid the
// pipeline derives: the grid starts at the first timestamp rounded down to
// five minutes and ends one step past the last event.
std::vector<Chunk> load_chunks(const std::string& csv_path) {
  RawRecordStream raw = ingest_csv(csv_path);
  std::int64_t first = raw.first_timestamp();
  std::int64_t last = raw.last_timestamp();
  std::int64_t start = first - (((first % 300) + 300) % 300);
  std::int64_t steps = (last - start + 299) / 300;
  std::int64_t end = start + (steps + 1) * 300;
  std::string stem = csv_path;
  std::size_t slash = stem.find_last_of("/\\");
  if (slash != std::string::npos) stem = stem.substr(slash + 1);
  std::size_t dot = stem.rfind('.');
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  PatientSeries series = detect_exercise(align_resample(raw, start, end, stem));
  return chunk(series);
}

std::vector<RangeRule> rules_from_tuples(
    const std::vector<std::tuple<std::string, std::string, py::object>>& rows) {
  std::vector<RangeRule> rules;
  rules.reserve(rows.size());
  for (const auto& [id, text, mcr] : rows) {
    double rate = std::numeric_limits<double>::quiet_NaN();
    if (!mcr.is_none()) rate = mcr.cast<double>();
    rules.push_back({id, parse(text), rate});
  }
  return rules;
}

std::pair<int, std::string> run_stage(const std::string& stage,
                                      const std::map<std::string, std::string>& options) {
  PipelineConfig cfg;
  for (const auto& [key, value] : options) apply_setting(cfg, key, value);
  using Fn = StageResult (*)(const PipelineConfig&, std::ostream&);
  static const std::map<std::string, Fn> stages = {
      {"synth", cmd_synth},     {"ingest", cmd_ingest},
      {"preprocess", cmd_preprocess}, {"label", cmd_label},
      {"cluster", cmd_cluster}, {"learn", cmd_learn},
      {"analyze", cmd_analyze}, {"run", cmd_run},
  };
  auto it = stages.find(stage);
  if (it == stages.end())
    throw std::invalid_argument("unknown stage '" + stage + "'");
  std::ostringstream log;
  StageResult result = it->second(cfg, log);
  return {result.exit_code, log.str()};
}

}  // namespace

PYBIND11_MODULE(_stlmine, m) {
  m.doc() = "Temporal-logic specification mining for glycemic time series";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DatasetError>(m, "DatasetError", PyExc_ValueError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);
  py::register_exception<SynthError>(m, "SynthError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<Trace>(m, "Trace")
      .def(py::init([](const std::map<std::string, std::vector<double>>& channels,
                       double step_minutes, std::int64_t start_epoch_s) {
             Trace tr;
             tr.start_epoch_s = start_epoch_s;
             tr.step_minutes = step_minutes;
             for (const auto& [name, values] : channels)
               tr.channels[name] = values;
             return tr;
           }),
           py::arg("channels"), py::arg("step_minutes") = 5.0,
           py::arg("start_epoch_s") = 0)
      .def_readonly("start_epoch_s", &Trace::start_epoch_s)
      .def_readonly("step_minutes", &Trace::step_minutes)
      .def_readonly("channels", &Trace::channels)
      .def("size", &Trace::size)
      .def("horizon_minutes", &Trace::horizon_minutes);

  py::class_<ParamRef>(m, "ParamRef")
      .def_readonly("name", &ParamRef::name)
      .def_readonly("lo", &ParamRef::lo)
      .def_readonly("hi", &ParamRef::hi)
      .def("__repr__", [](const ParamRef& p) {
        std::ostringstream os;
        os << "ParamRef(" << p.name << ", " << p.lo << ", " << p.hi << ")";
        return os.str();
      });

  py::class_<Formula>(m, "Formula")
      .def("render", &Formula::render)
      .def("signature", &Formula::signature)
      .def("node_count", &Formula::node_count)
      .def("depth", &Formula::depth)
      .def("is_ground", &Formula::is_ground)
      .def("parameters", &Formula::parameters)
      .def("instantiate", &Formula::instantiate, py::arg("assignment"))
      .def("__str__", &Formula::render)
      .def("__repr__",
           [](const Formula& f) { return "Formula(" + f.render() + ")"; })
      .def("__eq__", &Formula::operator==, py::is_operator());

  m.def("parse", &parse, py::arg("text"),
        "Parses a formula from its text form.");
  m.def("eval_bool", &eval_bool, py::arg("formula"), py::arg("trace"),
        py::arg("t_minutes") = 0.0,
        "Boolean satisfaction of a ground formula at time t.");
  m.def("robustness", &robustness, py::arg("formula"), py::arg("trace"),
        py::arg("t_minutes") = 0.0,
        "Quantitative robustness of a ground formula at time t.");

  py::class_<Chunk>(m, "Chunk")
      .def(py::init([](std::string patient_id, int index, Trace trace,
                       bool valid) {
             std::int64_t start = trace.start_epoch_s;
             return Chunk{std::move(patient_id), index, start, std::move(trace),
                          valid};
           }),
           py::arg("patient_id"), py::arg("index"), py::arg("trace"),
           py::arg("valid") = true)
      .def_readonly("patient_id", &Chunk::patient_id)
      .def_readonly("index", &Chunk::index)
      .def_readonly("start_epoch_s", &Chunk::start_epoch_s)
      .def_readonly("trace", &Chunk::trace)
      .def_readonly("valid", &Chunk::valid);

  m.def("load_chunks", &load_chunks, py::arg("csv_path"),
        "Ingests one patient CSV and returns its aligned hour chunks.");

  py::class_<LabelPolicy>(m, "LabelPolicy")
      .def(py::init<>())
      .def_readwrite("band_lo", &LabelPolicy::band_lo)
      .def_readwrite("band_hi", &LabelPolicy::band_hi)
      .def_readwrite("cut_c100", &LabelPolicy::cut_c100)
      .def_readwrite("cut_c75", &LabelPolicy::cut_c75)
      .def_readwrite("cut_c50", &LabelPolicy::cut_c50)
      .def_readwrite("cluster_hi", &LabelPolicy::cluster_hi)
      .def_readwrite("cluster_mid", &LabelPolicy::cluster_mid)
      .def_readwrite("cluster_lo", &LabelPolicy::cluster_lo)
      .def_readwrite("cluster_pos_cut", &LabelPolicy::cluster_pos_cut);

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def(py::init([](std::string task, std::vector<Chunk> chunks,
                       std::vector<int> labels) {
             return LabeledDataset{std::move(task), std::move(chunks),
                                   std::move(labels)};
           }),
           py::arg("task"), py::arg("chunks"), py::arg("labels"))
      .def_readonly("task", &LabeledDataset::task)
      .def_readonly("chunks", &LabeledDataset::chunks)
      .def_readonly("labels", &LabeledDataset::labels)
      .def("positives", &LabeledDataset::positives)
      .def("negatives", &LabeledDataset::negatives);

  m.def("time_in_range", &time_in_range, py::arg("chunk"),
        py::arg("policy") = LabelPolicy{},
        "Percentage of the chunk's CGM samples inside the band.");
  m.def(
      "tir_class",
      [](double pct, const LabelPolicy& policy) {
        return std::string(tir_class_name(tir_class(pct, policy)));
      },
      py::arg("pct"), py::arg("policy") = LabelPolicy{},
      "TIR class name (c100, c7599, c5074 or lt50) for a percentage.");
  m.def(
      "one_vs_all",
      [](const std::vector<Chunk>& chunks, const std::string& target,
         const LabelPolicy& policy) {
        return one_vs_all(chunks, tir_class_from_name(target), policy);
      },
      py::arg("chunks"), py::arg("target"), py::arg("policy") = LabelPolicy{},
      "One-vs-all dataset for the named TIR class.");
  m.def(
      "cluster_patients",
      [](const std::vector<Chunk>& chunks, const LabelPolicy& policy) {
        ClusterAssignment ca = cluster_patients(chunks, policy);
        return py::make_tuple(ca.cluster_of, ca.avg_tir, ca.warnings);
      },
      py::arg("chunks"), py::arg("policy") = LabelPolicy{},
      "Clusters patients by average TIR; returns (cluster_of, avg_tir, "
      "warnings).");
  m.def("cluster_labels", &cluster_labels, py::arg("chunks"),
        py::arg("policy") = LabelPolicy{},
        "Cluster-level binary dataset: +1 iff chunk TIR >= cluster_pos_cut.");

  py::class_<GaConfig>(m, "GaConfig")
      .def(py::init<>())
      .def_readwrite("population", &GaConfig::population)
      .def_readwrite("generations", &GaConfig::generations)
      .def_readwrite("mutation_rate", &GaConfig::mutation_rate)
      .def_readwrite("crossover_rate", &GaConfig::crossover_rate)
      .def_readwrite("max_depth", &GaConfig::max_depth)
      .def_readwrite("elitism", &GaConfig::elitism)
      .def_readwrite("tournament", &GaConfig::tournament)
      .def_readwrite("seed", &GaConfig::seed);

  py::class_<GpUcbConfig>(m, "GpUcbConfig")
      .def(py::init<>())
      .def_readwrite("budget", &GpUcbConfig::budget)
      .def_readwrite("init_points", &GpUcbConfig::init_points)
      .def_readwrite("candidate_pool", &GpUcbConfig::candidate_pool)
      .def_readwrite("polish_rounds", &GpUcbConfig::polish_rounds)
      .def_readwrite("length_scale", &GpUcbConfig::length_scale)
      .def_readwrite("signal_var", &GpUcbConfig::signal_var)
      .def_readwrite("noise_var", &GpUcbConfig::noise_var)
      .def_readwrite("optimize_accuracy", &GpUcbConfig::optimize_accuracy)
      .def_readwrite("seed", &GpUcbConfig::seed);

  py::class_<FitnessReport>(m, "FitnessReport")
      .def_readonly("fitness", &FitnessReport::fitness)
      .def_readonly("accuracy", &FitnessReport::accuracy)
      .def_readonly("mcr", &FitnessReport::mcr)
      .def_readonly("mean_pos", &FitnessReport::mean_pos)
      .def_readonly("mean_neg", &FitnessReport::mean_neg)
      .def_readonly("std_pos", &FitnessReport::std_pos)
      .def_readonly("std_neg", &FitnessReport::std_neg)
      .def_readonly("n_pos", &FitnessReport::n_pos)
      .def_readonly("n_neg", &FitnessReport::n_neg);

  py::class_<Candidate>(m, "Candidate")
      .def_readonly("pformula", &Candidate::pformula)
      .def_readonly("best_params", &Candidate::best_params)
      .def_readonly("fitness", &Candidate::fitness)
      .def_readonly("accuracy", &Candidate::accuracy)
      .def_readonly("mcr", &Candidate::mcr)
      .def("instantiated", &Candidate::instantiated)
      .def("__repr__", [](const Candidate& c) {
        return "Candidate(" + c.instantiated().render() + ")";
      });

  m.def("objective", &objective, py::arg("formula"), py::arg("dataset"),
        "Robustness-gap statistics of a ground formula over a dataset.");
  m.def("gp_ucb_synthesize", &gp_ucb_synthesize, py::arg("formula"),
        py::arg("dataset"), py::arg("config") = GpUcbConfig{},
        "Synthesizes the parameters of one structure.");
  m.def("learn", &learn, py::arg("dataset"), py::arg("ga") = GaConfig{},
        py::arg("gp") = GpUcbConfig{}, py::arg("jobs") = 1,
        "Bi-level rule search; returns the deduplicated archive by fitness.");
  m.def(
      "learn_multiclass",
      [](const std::vector<Chunk>& chunks, const GaConfig& ga,
         const GpUcbConfig& gp, const LabelPolicy& policy, int jobs) {
        MulticlassResult mr = learn_multiclass(chunks, ga, gp, policy, jobs);
        std::map<std::string, std::vector<Candidate>> per_class;
        for (const auto& [cls, cands] : mr.per_class)
          per_class[tir_class_name(cls)] = cands;
        return py::make_tuple(per_class, mr.skipped);
      },
      py::arg("chunks"), py::arg("ga") = GaConfig{},
      py::arg("gp") = GpUcbConfig{}, py::arg("policy") = LabelPolicy{},
      py::arg("jobs") = 1,
      "One one-vs-all learn per TIR class; returns (per_class, skipped).");

  py::class_<RangeRow>(m, "RangeRow")
      .def_readonly("level", &RangeRow::level)
      .def_readonly("has_lower", &RangeRow::has_lower)
      .def_readonly("has_upper", &RangeRow::has_upper)
      .def_readonly("lower", &RangeRow::lower)
      .def_readonly("upper", &RangeRow::upper)
      .def_readonly("source_ids", &RangeRow::source_ids)
      .def_readonly("has_mcr_good", &RangeRow::has_mcr_good)
      .def_readonly("has_mcr_bad", &RangeRow::has_mcr_bad)
      .def_readonly("mcr_good", &RangeRow::mcr_good)
      .def_readonly("mcr_bad", &RangeRow::mcr_bad)
      .def_readonly("conflict", &RangeRow::conflict);

  py::class_<RangeTable>(m, "RangeTable")
      .def_readonly("variable", &RangeTable::variable)
      .def_readonly("condition_variable", &RangeTable::condition_variable)
      .def_readonly("quantum", &RangeTable::quantum)
      .def_readonly("rows", &RangeTable::rows)
      .def_readonly("warnings", &RangeTable::warnings)
      .def("text", [](const RangeTable& t) { return format_range_table(t); })
      .def("json", [](const RangeTable& t) { return range_table_json(t); });

  m.def(
      "derive_ranges",
      [](const std::vector<std::tuple<std::string, std::string, py::object>>& good,
         const std::vector<std::tuple<std::string, std::string, py::object>>& bad,
         const std::string& variable, const std::string& condition_variable,
         double quantum) {
        return derive_ranges(rules_from_tuples(good), rules_from_tuples(bad),
                             variable, condition_variable, quantum);
      },
      py::arg("good"), py::arg("bad"), py::arg("variable"),
      py::arg("condition_variable"), py::arg("quantum") = 0.001,
      "Per-level variable ranges from (id, formula_text, mcr_or_None) rules.");

  m.def(
      "write_synthetic_cohort",
      [](const std::string& out_dir, int patients, int days, std::uint64_t seed,
         double excursion_rate, double poor_rate, int smbg_per_day,
         double noise) {
        SyntheticCohortSpec spec;
        spec.patients = patients;
        spec.days = days;
        spec.seed = seed;
        spec.excursion_rate = excursion_rate;
        spec.poor_rate = poor_rate;
        spec.smbg_per_day = smbg_per_day;
        spec.noise = noise;
        write_cohort_csv(synth_cohort(spec), out_dir);
      },
      py::arg("out_dir"), py::arg("patients") = 8, py::arg("days") = 3,
      py::arg("seed") = 1, py::arg("excursion_rate") = 0.35,
      py::arg("poor_rate") = 0.0, py::arg("smbg_per_day") = 3,
      py::arg("noise") = 1.0,
      "Writes a synthetic cohort (per-patient CSVs plus manifest.json).");

  m.def("run_stage", &run_stage, py::arg("stage"),
        py::arg("options") = std::map<std::string, std::string>{},
        "Runs one pipeline stage with key=value options; returns "
        "(exit_code, log).");
}
