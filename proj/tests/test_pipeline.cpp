#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stlmine/pipeline.hpp"

using namespace stlmine;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("stlmine_pipe_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// small enough to keep the end-to-end cases fast
PipelineConfig tiny_config(const fs::path& root) {
  PipelineConfig cfg;
  cfg.input_dir = (root / "data").string();
  cfg.output_dir = (root / "out").string();
  cfg.ga.population = 6;
  cfg.ga.generations = 1;
  cfg.gp.budget = 16;
  cfg.gp.init_points = 6;
  cfg.gp.candidate_pool = 32;
  cfg.synth.patients = 2;
  cfg.synth.days = 1;
  apply_setting(cfg, "seed", "11");
  return cfg;
}

StageResult quiet(StageResult (*stage)(const PipelineConfig&, std::ostream&),
                  const PipelineConfig& cfg, std::string* text = nullptr) {
  std::ostringstream log;
  StageResult r = stage(cfg, log);
  if (text) *text = log.str();
  return r;
}

const char* kStudyRules =
    "# basal rate study rules\n"
    "g4 good 0.1484 (G[540,661](basalBolus <= 0.072)) U[550,661] (activityLevel >= 4)\n"
    "g3 good 0.1623 G[540,660](activityLevel <= 3 & basalBolus <= 0.072)\n"
    "g2 good 0 G[538,660](activityLevel <= 2 & basalBolus <= 0.089)\n"
    "g1 good 0.2635 G[535,657](activityLevel <= 1 & basalBolus >= 0.091)\n"
    "b4 bad 0 G[540,665](activityLevel >= 4 & basalBolus <= 0.065)\n"
    "b3 bad 0.1012 G[542,659](activityLevel >= 3 & basalBolus >= 0.078)\n"
    "b1 bad 0.018 (G[535,665](basalBolus <= 0.122)) U[550,661] (activityLevel >= 1)\n";

}  // namespace

TEST_CASE("config text parses every section") {
  PipelineConfig cfg = parse_config_text(
      "# comment line\n"
      "input_dir = data   # trailing comment\n"
      "output_dir = results\n"
      "mode = population\n"
      "jobs = 4\n"
      "top_k = 3\n"
      "ga.population = 10\n"
      "ga.generations = 5\n"
      "ga.mutation_rate = 0.4\n"
      "ga.crossover_rate = 0.7\n"
      "ga.max_depth = 3\n"
      "ga.elitism = 1\n"
      "ga.tournament = 2\n"
      "gp.budget = 48\n"
      "gp.init_points = 12\n"
      "gp.candidate_pool = 128\n"
      "gp.polish_rounds = 1\n"
      "gp.length_scale = 0.1\n"
      "gp.signal_var = 2\n"
      "gp.noise_var = 1e-3\n"
      "gp.optimize_accuracy = true\n"
      "labels.band_lo = 65\n"
      "labels.band_hi = 190\n"
      "labels.cut_c75 = 80\n"
      "labels.cluster_pos_cut = 70\n"
      "synth.patients = 5\n"
      "synth.days = 4\n"
      "synth.alpha_lo = 70\n"
      "synth.alpha_hi = 75\n"
      "synth.beta_lo = 170\n"
      "synth.beta_hi = 175\n"
      "synth.excursion_rate = 0.2\n"
      "synth.poor_rate = 0.3\n"
      "synth.smbg_per_day = 2\n"
      "synth.noise = 0.5\n"
      "synth.start_epoch_s = 1767225600\n"
      "analyze.variable = corrBolus\n"
      "analyze.condition = exercising\n"
      "analyze.quantum = 0.01\n"
      "analyze.rules = rules.txt\n"
      "analyze.event_rule = F[0,30](meal >= 1)\n"
      "analyze.amount = meal\n");
  CHECK(cfg.input_dir == "data");
  CHECK(cfg.output_dir == "results");
  CHECK(cfg.mode == "population");
  CHECK(cfg.jobs == 4);
  CHECK(cfg.top_k == 3);
  CHECK(cfg.ga.population == 10);
  CHECK(cfg.ga.generations == 5);
  CHECK(cfg.ga.mutation_rate == 0.4);
  CHECK(cfg.ga.crossover_rate == 0.7);
  CHECK(cfg.ga.max_depth == 3);
  CHECK(cfg.ga.elitism == 1);
  CHECK(cfg.ga.tournament == 2);
  CHECK(cfg.gp.budget == 48);
  CHECK(cfg.gp.init_points == 12);
  CHECK(cfg.gp.candidate_pool == 128);
  CHECK(cfg.gp.polish_rounds == 1);
  CHECK(cfg.gp.length_scale == 0.1);
  CHECK(cfg.gp.signal_var == 2.0);
  CHECK(cfg.gp.noise_var == 1e-3);
  CHECK(cfg.gp.optimize_accuracy);
  CHECK(cfg.labels.band_lo == 65.0);
  CHECK(cfg.labels.band_hi == 190.0);
  CHECK(cfg.labels.cut_c75 == 80.0);
  CHECK(cfg.labels.cluster_pos_cut == 70.0);
  CHECK(cfg.synth.patients == 5);
  CHECK(cfg.synth.days == 4);
  CHECK(cfg.synth.alpha_lo == 70);
  CHECK(cfg.synth.beta_hi == 175);
  CHECK(cfg.synth.excursion_rate == 0.2);
  CHECK(cfg.synth.poor_rate == 0.3);
  CHECK(cfg.synth.smbg_per_day == 2);
  CHECK(cfg.synth.noise == 0.5);
  CHECK(cfg.analyze_variable == "corrBolus");
  CHECK(cfg.analyze_condition == "exercising");
  CHECK(cfg.analyze_quantum == 0.01);
  CHECK(cfg.rules_path == "rules.txt");
  CHECK(cfg.event_rule == "F[0,30](meal >= 1)");
  CHECK(cfg.amount_variable == "meal");
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("master seed feeds every stage until overridden") {
  PipelineConfig cfg = parse_config_text("seed = 77\n");
  CHECK(cfg.seed == 77);
  CHECK(cfg.ga.seed == 77);
  CHECK(cfg.gp.seed == 77);
  CHECK(cfg.synth.seed == 77);

  cfg = parse_config_text("seed = 77\nga.seed = 5\n");
  CHECK(cfg.ga.seed == 5);
  CHECK(cfg.gp.seed == 77);

  // order matters: a later master seed wins, mirroring flag overrides
  cfg = parse_config_text("ga.seed = 5\nseed = 77\n");
  CHECK(cfg.ga.seed == 77);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_WITH_AS(parse_config_text("nope = 1\n"),
                       "line 1: unknown config key 'nope'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("jobs = many\n"),
                       "line 1: jobs: expected an integer, got 'many'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("gp.length_scale = wide\n"),
                       "line 1: gp.length_scale: expected a number, got 'wide'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("gp.optimize_accuracy = yep\n"),
                       "line 1: gp.optimize_accuracy: expected true or false, got 'yep'",
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("jobs 4\n"),
                       "line 1: expected key = value", ConfigError);
  CHECK_THROWS_AS(parse_config_text("seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("config validation catches unusable settings") {
  auto broken = [](auto&& tweak) {
    PipelineConfig cfg;
    tweak(cfg);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  };
  broken([](auto& c) { c.mode = "both"; });
  broken([](auto& c) { c.jobs = 0; });
  broken([](auto& c) { c.top_k = 0; });
  broken([](auto& c) { c.analyze_quantum = 0.0; });
  broken([](auto& c) { c.labels.band_lo = 200.0; });
  broken([](auto& c) { c.ga.population = 0; });
  broken([](auto& c) { c.gp.budget = 0; });
  broken([](auto& c) { c.synth.days = 0; });
}

TEST_CASE("synth stage writes a cohort the ingest stage accepts") {
  fs::path root = fresh_dir("synth");
  PipelineConfig cfg = tiny_config(root);
  PipelineConfig synth_cfg = cfg;
  synth_cfg.output_dir = cfg.input_dir;
  StageResult s = quiet(cmd_synth, synth_cfg);
  REQUIRE(s.exit_code == 0);
  CHECK(fs::exists(fs::path(cfg.input_dir) / "p01.csv"));
  CHECK(fs::exists(fs::path(cfg.input_dir) / "manifest.json"));

  std::string log;
  StageResult r = quiet(cmd_ingest, cfg, &log);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.outcomes.size() == 2);
  CHECK(r.outcomes[0].id == "p01");
  CHECK(r.outcomes[0].ok);
  CHECK(r.outcomes[0].chunks == 24);
  CHECK(r.outcomes[0].valid_chunks == 24);
  CHECK(log.find("patient p01: 24 chunks (24 valid)") != std::string::npos);
  CHECK(slurp(fs::path(cfg.output_dir) / "ingest.json").find("\"cgm\": 288") !=
        std::string::npos);
}

TEST_CASE("run stage in individual mode writes the full artifact set") {
  fs::path root = fresh_dir("run_ind");
  PipelineConfig cfg = tiny_config(root);
  PipelineConfig synth_cfg = cfg;
  synth_cfg.output_dir = cfg.input_dir;
  REQUIRE(quiet(cmd_synth, synth_cfg).exit_code == 0);

  StageResult r = quiet(cmd_run, cfg);
  REQUIRE(r.exit_code == 0);
  fs::path out(cfg.output_dir);
  for (const char* rel :
       {"ingest.json", "chunks.json", "labels.json", "clusters.json", "series/p01.csv",
        "labels/p01.csv", "analysis/groups.json", "analysis/groups.txt",
        "analysis/bounds.csv", "run_summary.json"}) {
    CAPTURE(rel);
    CHECK(fs::exists(out / rel));
  }
  // every learned task report is listed in the summary
  std::string summary = slurp(out / "run_summary.json");
  for (const std::string& rel : r.artifacts) {
    CHECK(summary.find("\"" + rel + "\"") != std::string::npos);
  }
  CHECK(summary.find("\"mode\": \"individual\"") != std::string::npos);
  CHECK(summary.find("\"jobs\"") == std::string::npos);  // reports stay jobs-free
}

TEST_CASE("identical seeds give byte-identical artifacts at any jobs count") {
  fs::path root = fresh_dir("deterministic");
  PipelineConfig cfg = tiny_config(root);
  PipelineConfig synth_cfg = cfg;
  synth_cfg.output_dir = cfg.input_dir;
  REQUIRE(quiet(cmd_synth, synth_cfg).exit_code == 0);

  PipelineConfig again = cfg;
  again.output_dir = (root / "out_again").string();
  PipelineConfig threaded = cfg;
  threaded.output_dir = (root / "out_jobs").string();
  threaded.jobs = 3;

  StageResult r1 = quiet(cmd_run, cfg);
  StageResult r2 = quiet(cmd_run, again);
  StageResult r3 = quiet(cmd_run, threaded);
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  REQUIRE(r3.exit_code == 0);
  REQUIRE(r1.artifacts == r2.artifacts);
  REQUIRE(r1.artifacts == r3.artifacts);
  for (const std::string& rel : r1.artifacts) {
    CAPTURE(rel);
    std::string base = slurp(fs::path(cfg.output_dir) / rel);
    CHECK(base == slurp(fs::path(again.output_dir) / rel));
    CHECK(base == slurp(fs::path(threaded.output_dir) / rel));
  }
}

TEST_CASE("population mode learns per cluster and counts events") {
  fs::path root = fresh_dir("run_pop");
  PipelineConfig cfg = tiny_config(root);
  cfg.mode = "population";
  cfg.synth.patients = 4;
  cfg.synth.poor_rate = 0.5;  // tiers spread patients across clusters
  PipelineConfig synth_cfg = cfg;
  synth_cfg.output_dir = cfg.input_dir;
  REQUIRE(quiet(cmd_synth, synth_cfg).exit_code == 0);

  StageResult r = quiet(cmd_run, cfg);
  REQUIRE(r.exit_code == 0);
  fs::path out(cfg.output_dir);
  CHECK(fs::exists(out / "analysis/events.json"));
  CHECK(fs::exists(out / "analysis/events.txt"));
  CHECK(!fs::exists(out / "analysis/groups.json"));
  bool cluster_rules = false;
  for (const std::string& rel : r.artifacts) {
    if (rel.rfind("rules/cluster", 0) == 0) cluster_rules = true;
  }
  CHECK(cluster_rules);
  // 3 checks per day x 1 day, every patient assigned
  std::string events = slurp(out / "analysis/events.json");
  CHECK(events.find("\"rule\": \"F[0,55](smbg >= 1)\"") != std::string::npos);
  CHECK(slurp(out / "clusters.json").find("\"cluster\": 2") != std::string::npos);
}

TEST_CASE("one malformed patient file never blocks the others") {
  fs::path root = fresh_dir("crash_isolation");
  PipelineConfig cfg = tiny_config(root);
  PipelineConfig synth_cfg = cfg;
  synth_cfg.output_dir = cfg.input_dir;
  REQUIRE(quiet(cmd_synth, synth_cfg).exit_code == 0);
  {
    std::ofstream bad(fs::path(cfg.input_dir) / "broken.csv");
    bad << "timestamp,cgm\n2026-01-01T00:00:00,not_a_number\n";
  }

  std::string log;
  StageResult r = quiet(cmd_run, cfg, &log);
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.outcomes.size() == 3);
  CHECK(r.outcomes[0].id == "broken");
  CHECK(!r.outcomes[0].ok);
  CHECK(r.outcomes[0].error.find("bad number") != std::string::npos);
  CHECK(r.outcomes[1].ok);
  CHECK(r.outcomes[2].ok);
  CHECK(log.find("patient broken: error:") != std::string::npos);
  CHECK(!fs::exists(fs::path(cfg.output_dir) / "series/broken.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "series/p01.csv"));
  std::string summary = slurp(fs::path(cfg.output_dir) / "run_summary.json");
  CHECK(summary.find("\"ok\": false") != std::string::npos);
}

TEST_CASE("missing or empty inputs exit nonzero with a message") {
  fs::path root = fresh_dir("empty_inputs");
  fs::create_directories(root / "none");
  PipelineConfig cfg;
  cfg.input_dir = (root / "none").string();
  cfg.output_dir = (root / "out").string();
  std::string log;
  CHECK(quiet(cmd_run, cfg, &log).exit_code == 2);
  CHECK(log.find("no usable patient data") != std::string::npos);

  cfg.input_dir = (root / "missing").string();
  CHECK(quiet(cmd_run, cfg, &log).exit_code == 2);

  cfg.input_dir.clear();
  std::string log2;
  CHECK(quiet(cmd_ingest, cfg, &log2).exit_code == 2);
  CHECK(log2.find("input_dir is not set") != std::string::npos);
}

TEST_CASE("analyze consumes a rules file without patient data") {
  fs::path root = fresh_dir("ranges_only");
  fs::path rules = root / "study.rules";
  {
    std::ofstream out(rules);
    out << kStudyRules;
  }
  PipelineConfig cfg;
  cfg.output_dir = (root / "out").string();
  cfg.rules_path = rules.string();
  StageResult r = quiet(cmd_analyze, cfg);
  REQUIRE(r.exit_code == 0);
  std::string json = slurp(root / "out/analysis/ranges.json");
  CHECK(json.find("\"lower\": 0.066") != std::string::npos);
  CHECK(json.find("\"upper\": 0.072") != std::string::npos);
  std::string text = slurp(root / "out/analysis/ranges.txt");
  CHECK(text.find("4      0.066 - 0.072  14.84%    0%       g4, b4") != std::string::npos);
  CHECK(text.find("2      0.078 - 0.089  0%        N/A      g2") != std::string::npos);
}

TEST_CASE("rules files reject malformed lines") {
  fs::path root = fresh_dir("bad_rules");
  auto write_rules = [&](const char* body) {
    fs::path p = root / "r.rules";
    std::ofstream out(p);
    out << body;
    return p;
  };
  PipelineConfig cfg;
  cfg.output_dir = (root / "out").string();

  cfg.rules_path = write_rules("g1 fine 0.5 G[0,55](cgm >= 70)\n").string();
  std::string log;
  CHECK(quiet(cmd_analyze, cfg, &log).exit_code == 2);
  CHECK(log.find("expected '<id> <good|bad> <mcr|-> <formula>'") != std::string::npos);

  cfg.rules_path = write_rules("g1 good 0.5 G[0,55](cgm >=\n").string();
  CHECK(quiet(cmd_analyze, cfg, &log).exit_code == 2);

  cfg.rules_path = (root / "missing.rules").string();
  CHECK(quiet(cmd_analyze, cfg, &log).exit_code == 2);
  CHECK(log.find("cannot open rules file") != std::string::npos);
}
