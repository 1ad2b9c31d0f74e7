#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "stlmine/pipeline.hpp"

using namespace stlmine;

int main(int argc, char** argv) {
  CLI::App app{"Mines temporal-logic rules from glycemic time series"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string input_dir;
  std::string out_dir;
  std::string mode;
  std::string rules_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  auto* config_opt =
      app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
  auto* input_opt = app.add_option("--input", input_dir, "directory of patient csv files");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (default: out)");
  auto* mode_opt = app.add_option("--mode", mode, "individual or population");
  auto* seed_opt = app.add_option("--seed", seed, "master seed for every stage");
  auto* jobs_opt = app.add_option("--jobs", jobs, "worker thread bound")->check(CLI::PositiveNumber);
  auto* rules_opt = app.add_option("--rules", rules_path, "rule list for the ranges report");

  const std::map<std::string, std::pair<const char*, StageResult (*)(const PipelineConfig&,
                                                                     std::ostream&)>>
      stages = {
          {"synth", {"generate a synthetic cohort with a ground-truth manifest", cmd_synth}},
          {"ingest", {"parse patient csv files and summarize their events", cmd_ingest}},
          {"preprocess", {"resample onto the 5-minute grid and cut hour chunks", cmd_preprocess}},
          {"label", {"compute time-in-range classes per chunk", cmd_label}},
          {"cluster", {"assign patients to average-TIR clusters", cmd_cluster}},
          {"learn", {"search rule structures and synthesize their parameters", cmd_learn}},
          {"analyze", {"group repeated rules, derive ranges, count events", cmd_analyze}},
          {"run", {"full pipeline: ingest through analyze plus a run summary", cmd_run}},
      };
  for (const auto& [name, stage] : stages) app.add_subcommand(name, stage.first);

  CLI11_PARSE(app, argc, argv);

  PipelineConfig cfg;
  try {
    if (config_opt->count()) cfg = load_config(config_path);
    if (input_opt->count()) apply_setting(cfg, "input_dir", input_dir);
    if (out_opt->count()) apply_setting(cfg, "output_dir", out_dir);
    if (mode_opt->count()) apply_setting(cfg, "mode", mode);
    if (jobs_opt->count()) cfg.jobs = jobs;
    if (seed_opt->count()) apply_setting(cfg, "seed", std::to_string(seed));
    if (rules_opt->count()) apply_setting(cfg, "analyze.rules", rules_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  StageResult result = stages.at(name).second(cfg, std::cout);
  return result.exit_code;
}
