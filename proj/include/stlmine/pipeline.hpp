#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlmine/labeling.hpp"
#include "stlmine/learner.hpp"
#include "stlmine/synth.hpp"

namespace stlmine {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one invocation needs. Built from a key=value config file plus
/// command-line overrides, applied in order; the last assignment wins.
struct PipelineConfig {
  std::string input_dir;
  std::string output_dir = "out";
  std::string mode = "individual";  // individual or population
  int jobs = 1;
  std::uint64_t seed = 1;
  int top_k = 5;  // candidates kept per task report

  GaConfig ga;
  GpUcbConfig gp;
  LabelPolicy labels;
  SyntheticCohortSpec synth;

  std::string rules_path;  // study rules for the ranges report, optional
  std::string analyze_variable = "basalBolus";
  std::string analyze_condition = "activityLevel";
  double analyze_quantum = 0.001;
  std::string event_rule = "F[0,55](smbg >= 1)";
  std::string amount_variable = "smbg";

  void validate() const;  // throws ConfigError on an unusable config
};

/// Applies one key=value assignment. `seed` also resets ga.seed, gp.seed
/// and synth.seed, so a later stage-specific seed key can still override.
/// Throws ConfigError on unknown keys or unparsable values.
void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// One assignment per line, blank lines and text after `#` ignored.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

struct PatientOutcome {
  std::string id;
  bool ok = false;
  std::string error;
  std::size_t chunks = 0;
  std::size_t valid_chunks = 0;
};

struct StageResult {
  int exit_code = 0;
  std::vector<PatientOutcome> outcomes;   // one per discovered input file
  std::vector<std::string> artifacts;     // paths written, relative to output_dir
};

/// Stage drivers shared by the command-line tool and the tests. Each command
/// runs its prerequisite stages in memory but writes only its own artifacts;
/// `run` writes everything plus run_summary.json. A patient whose file fails
/// to parse is reported and skipped without touching the others; the exit
/// code is nonzero only when no patient survives or the inputs are missing.
/// Identical configs produce byte-identical artifacts at any jobs count.
StageResult cmd_synth(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_ingest(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_preprocess(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_label(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_cluster(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_learn(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_analyze(const PipelineConfig& cfg, std::ostream& log);
StageResult cmd_run(const PipelineConfig& cfg, std::ostream& log);

}  // namespace stlmine
