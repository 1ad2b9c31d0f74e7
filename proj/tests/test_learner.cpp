#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "stlmine/learner.hpp"
#include "stlmine/stl/monitor.hpp"
#include "stlmine/stl/parser.hpp"
#include "support/planted.hpp"

using namespace stlmine;

namespace {

std::vector<double> spike_chunk_values(double base, double spike, std::size_t at) {
  std::vector<double> v(12, base);
  v[at] = spike;
  return v;
}

GaConfig small_ga() {
  GaConfig ga;
  ga.population = 12;
  ga.generations = 3;
  ga.seed = 7;
  return ga;
}

GpUcbConfig small_gp() {
  GpUcbConfig gp;
  gp.budget = 96;
  gp.init_points = 24;
  gp.candidate_pool = 128;
  gp.optimize_accuracy = true;
  gp.seed = 11;
  return gp;
}

}  // namespace

TEST_CASE("discrimination objective matches hand arithmetic") {
  FitnessReport rep =
      objective_from_robustness({3.0, 5.0, -1.0, -3.0}, {1, 1, -1, -1});
  CHECK(rep.n_pos == 2);
  CHECK(rep.n_neg == 2);
  CHECK(rep.mean_pos == 4.0);
  CHECK(rep.mean_neg == -2.0);
  CHECK(rep.std_pos == 1.0);
  CHECK(rep.std_neg == 1.0);
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.mcr == 0.0);
  CHECK(rep.fitness == doctest::Approx(3.0).epsilon(1e-7));
  CHECK(rep.fitness < 3.0);
}

TEST_CASE("accuracy counts eight true positives and three true negatives as 11 of 12") {
  std::vector<double> rob;
  std::vector<int> labels;
  for (int i = 0; i < 8; ++i) {
    rob.push_back(2.0);
    labels.push_back(1);
  }
  rob.push_back(-1.0);
  labels.push_back(1);
  for (int i = 0; i < 3; ++i) {
    rob.push_back(-2.0);
    labels.push_back(-1);
  }
  FitnessReport rep = objective_from_robustness(rob, labels);
  CHECK(rep.accuracy == 11.0 / 12.0);
  CHECK(rep.mcr == 1.0 - 11.0 / 12.0);
  CHECK(rep.accuracy + rep.mcr == 1.0);
}

TEST_CASE("zero robustness predicts the positive class") {
  FitnessReport rep = objective_from_robustness({0.0, -1.0}, {1, -1});
  CHECK(rep.accuracy == 1.0);
}

TEST_CASE("fitness is invariant under positive rescaling of robustness") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int rep_i = 0; rep_i < 50; ++rep_i) {
    std::vector<double> rob(20);
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < rob.size(); ++i) {
      rob[i] = val(rng);
      labels[i] = i % 2 ? 1 : -1;
    }
    double base = objective_from_robustness(rob, labels).fitness;
    for (double c : {1e-3, 7.0, 1e5}) {
      std::vector<double> scaled = rob;
      for (auto& r : scaled) r *= c;
      double got = objective_from_robustness(scaled, labels).fitness;
      CHECK(got == doctest::Approx(base).epsilon(1e-9));
    }
  }
}

TEST_CASE("objective rejects degenerate label vectors") {
  CHECK_THROWS_AS(objective_from_robustness({1.0, 2.0}, {1, 1}), LearnError);
  CHECK_THROWS_AS(objective_from_robustness({-1.0}, {-1}), LearnError);
  CHECK_THROWS_AS(objective_from_robustness({}, {}), LearnError);
  CHECK_THROWS_AS(objective_from_robustness({1.0}, {1, -1}), LearnError);
}

TEST_CASE("infinite robustness is clamped to a finite fitness") {
  double inf = std::numeric_limits<double>::infinity();
  FitnessReport rep = objective_from_robustness({inf, -inf}, {1, -1});
  CHECK(std::isfinite(rep.fitness));
  CHECK(rep.fitness == doctest::Approx(1e9));
  CHECK(rep.accuracy == 1.0);
}

TEST_CASE("seed population cycles families and stays well formed") {
  GaConfig cfg;
  std::vector<std::string> vars = {"cgm", "hr", "steps"};
  auto pop = seed_population(default_template_families(), vars, cfg);
  REQUIRE(pop.size() == 32);

  CHECK(pop[0].kind() == NodeKind::Always);
  CHECK(pop[1].kind() == NodeKind::Eventually);
  CHECK(pop[2].kind() == NodeKind::Always);
  CHECK(pop[3].kind() == NodeKind::Eventually);
  CHECK(pop[4].kind() == NodeKind::Eventually);
  CHECK(pop[5].kind() == NodeKind::Until);

  for (const auto& f : pop) {
    CHECK(f.depth() <= cfg.max_depth);
    CHECK(parse(f.render()) == f);
    for (const auto& p : f.parameters()) CHECK(p.lo < p.hi);
  }

  auto again = seed_population(default_template_families(), vars, cfg);
  REQUIRE(again.size() == pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) CHECK(again[i] == pop[i]);

  CHECK_THROWS_AS(seed_population({"nope"}, vars, cfg), LearnError);
  CHECK_THROWS_AS(seed_population(default_template_families(), {}, cfg), LearnError);
}

TEST_CASE("mutation keeps formulas parseable, bounded and uniquely parameterized") {
  GaConfig cfg;
  std::vector<std::string> vars = {"cgm", "hr", "steps", "meal"};
  auto pop = seed_population(default_template_families(), vars, cfg);
  std::mt19937_64 rng(20260814);
  for (int i = 0; i < 1000; ++i) {
    const Formula& base = pop[static_cast<std::size_t>(i) % pop.size()];
    Formula m = mutate(base, vars, cfg, rng);
    CAPTURE(m.render());
    CHECK(m.depth() <= cfg.max_depth);
    CHECK(parse(m.render()) == m);
    for (const auto& p : m.parameters()) CHECK(p.lo <= p.hi);
  }
}

TEST_CASE("crossover children re-parse and respect the depth bound") {
  GaConfig cfg;
  std::vector<std::string> vars = {"cgm", "hr", "steps"};
  auto pop = seed_population(default_template_families(), vars, cfg);
  std::mt19937_64 rng(111);
  for (int i = 0; i < 500; ++i) {
    const Formula& a = pop[rng() % pop.size()];
    const Formula& b = pop[rng() % pop.size()];
    auto [c1, c2] = crossover(a, b, cfg, rng);
    for (const Formula& c : {c1, c2}) {
      CAPTURE(c.render());
      CHECK(c.depth() <= cfg.max_depth);
      CHECK(parse(c.render()) == c);
      CHECK_NOTHROW(c.parameters());
    }
  }
}

TEST_CASE("parameter synthesis matches the grid oracle on a one parameter problem") {
  std::mt19937_64 rng(31);
  LabeledDataset ds;
  ds.task = "ceiling";
  int idx = 0;
  for (int i = 0; i < 20; ++i) {
    std::uniform_real_distribution<double> lows(100.0, 160.0);
    std::vector<double> v(12);
    for (auto& x : v) x = lows(rng);
    ds.chunks.push_back(planted::cgm_chunk("p", idx++, v));
    ds.labels.push_back(1);
  }
  for (int i = 0; i < 20; ++i) {
    std::uniform_real_distribution<double> lows(100.0, 160.0);
    std::vector<double> v(12);
    for (auto& x : v) x = lows(rng);
    v[rng() % 12] = 190.0 + static_cast<double>(rng() % 60);
    ds.chunks.push_back(planted::cgm_chunk("p", idx++, v));
    ds.labels.push_back(-1);
  }

  Formula pf = parse("G[0,55](cgm <= ?a{0,400})");
  double oracle = planted::grid_best_accuracy(pf, ds, 401);
  CHECK(oracle == 1.0);

  GpUcbConfig cfg;
  cfg.budget = 48;
  cfg.init_points = 12;
  cfg.candidate_pool = 128;
  cfg.optimize_accuracy = true;
  cfg.seed = 5;
  Candidate cand = gp_ucb_synthesize(pf, ds, cfg);
  CHECK(cand.accuracy >= oracle - 0.02);
  CHECK(cand.best_params.at("a") >= 0.0);
  CHECK(cand.best_params.at("a") <= 400.0);

  Candidate again = gp_ucb_synthesize(pf, ds, cfg);
  CHECK(again.best_params == cand.best_params);
  CHECK(again.fitness == cand.fitness);
}

TEST_CASE("parameter synthesis matches the grid oracle on a two parameter band") {
  std::mt19937_64 rng(77);
  auto ds = planted::band_dataset(rng, {80.0, 170.0}, 24, 24);
  Formula pf = parse("G[0,55](cgm >= ?a{0,400} & cgm <= ?b{0,400})");
  double oracle = planted::grid_best_accuracy(pf, ds, 401);
  CHECK(oracle == 1.0);

  Candidate cand = gp_ucb_synthesize(pf, ds, planted::recovery_gp(9));
  CHECK(cand.accuracy >= oracle - 0.02);
  CHECK(std::fabs(cand.best_params.at("a") - 80.0) <= 10.0);
  CHECK(std::fabs(cand.best_params.at("b") - 170.0) <= 10.0);
}

TEST_CASE("interval parameters come back ordered and inside their ranges") {
  LabeledDataset ds;
  ds.task = "late-spike";
  int idx = 0;
  for (int i = 0; i < 12; ++i) {
    ds.chunks.push_back(
        planted::cgm_chunk("p", idx++, spike_chunk_values(120.0, 240.0, 10)));
    ds.labels.push_back(1);
  }
  for (int i = 0; i < 12; ++i) {
    ds.chunks.push_back(
        planted::cgm_chunk("p", idx++, spike_chunk_values(120.0, 240.0, 1)));
    ds.labels.push_back(-1);
  }

  Formula pf = parse("F[?u{0,55},?v{0,55}](cgm >= 200)");
  double oracle = planted::grid_best_accuracy(pf, ds, 56);
  CHECK(oracle == 1.0);

  GpUcbConfig cfg;
  cfg.optimize_accuracy = true;
  cfg.seed = 3;
  Candidate cand = gp_ucb_synthesize(pf, ds, cfg);
  CHECK(cand.accuracy >= oracle - 0.02);
  double u = cand.best_params.at("u");
  double v = cand.best_params.at("v");
  CHECK(u <= v);
  CHECK(u >= 0.0);
  CHECK(v <= 55.0);
  CHECK_NOTHROW(cand.instantiated());
}

TEST_CASE("a ground formula is scored with a single evaluation") {
  std::mt19937_64 rng(5);
  auto ds = planted::band_dataset(rng, {75.0, 175.0}, 10, 10);
  Formula pf = parse("G[0,55](cgm <= 180)");
  Candidate cand = gp_ucb_synthesize(pf, ds, GpUcbConfig{});
  CHECK(cand.best_params.empty());
  FitnessReport direct = objective(pf, ds);
  CHECK(cand.fitness == direct.fitness);
  CHECK(cand.accuracy == direct.accuracy);
}

TEST_CASE("learning separates a planted band and is deterministic across runs and jobs") {
  std::mt19937_64 rng(12345);
  auto ds = planted::band_dataset(rng, {85.0, 165.0}, 20, 20);

  auto r1 = learn(ds, small_ga(), small_gp(), 1);
  auto r2 = learn(ds, small_ga(), small_gp(), 1);
  auto r4 = learn(ds, small_ga(), small_gp(), 4);

  REQUIRE(!r1.empty());
  CHECK(r1.front().accuracy >= 0.9);
  for (std::size_t i = 1; i < r1.size(); ++i)
    CHECK(r1[i - 1].fitness >= r1[i].fitness);

  REQUIRE(r2.size() == r1.size());
  REQUIRE(r4.size() == r1.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].pformula.render() == r2[i].pformula.render());
    CHECK(r1[i].best_params == r2[i].best_params);
    CHECK(r1[i].fitness == r2[i].fitness);
    CHECK(r1[i].pformula.render() == r4[i].pformula.render());
    CHECK(r1[i].best_params == r4[i].best_params);
    CHECK(r1[i].fitness == r4[i].fitness);
  }

  for (const auto& c : r1) {
    Formula g = c.instantiated();
    CHECK(g.is_ground());
    CHECK(parse(g.render()) == g);
  }

  // Perfect classifiers must never rank below badly misclassifying rules.
  std::size_t last_perfect = 0;
  for (std::size_t i = 0; i < r1.size(); ++i)
    if (r1[i].accuracy == 1.0) last_perfect = i;
  for (std::size_t i = 0; i < last_perfect; ++i) CHECK(r1[i].accuracy >= 0.5);
}

TEST_CASE("more generations never lose the best archived candidate") {
  std::mt19937_64 rng(54321);
  auto ds = planted::band_dataset(rng, {90.0, 160.0}, 14, 14);
  GaConfig ga = small_ga();
  GpUcbConfig gp = small_gp();

  ga.generations = 1;
  auto short_run = learn(ds, ga, gp, 1);
  ga.generations = 3;
  auto long_run = learn(ds, ga, gp, 1);

  REQUIRE(!short_run.empty());
  REQUIRE(!long_run.empty());
  CHECK(long_run.front().fitness >= short_run.front().fitness);
}

TEST_CASE("learning refuses single label datasets") {
  LabeledDataset ds;
  ds.task = "degenerate";
  for (int i = 0; i < 4; ++i) {
    ds.chunks.push_back(planted::cgm_chunk("p", i, std::vector<double>(12, 100.0)));
    ds.labels.push_back(1);
  }
  CHECK_THROWS_AS(learn(ds, small_ga(), small_gp(), 1), LearnError);
}

TEST_CASE("multiclass learning runs one task per represented class and skips the rest") {
  std::vector<Chunk> chunks;
  for (int i = 0; i < 6; ++i)
    chunks.push_back(planted::cgm_chunk("p", i, std::vector<double>(12, 110.0)));
  for (int i = 6; i < 12; ++i) {
    std::vector<double> v(12, 110.0);
    for (int k = 0; k < 5; ++k) v[static_cast<std::size_t>(k)] = 250.0;
    chunks.push_back(planted::cgm_chunk("p", i, v));
  }

  GaConfig ga = small_ga();
  ga.population = 6;
  ga.generations = 1;
  GpUcbConfig gp = small_gp();
  gp.budget = 10;
  gp.init_points = 5;
  gp.candidate_pool = 32;

  MulticlassResult res = learn_multiclass(chunks, ga, gp, LabelPolicy{}, 1);
  CHECK(res.per_class.size() == 2);
  CHECK(res.per_class.count(TirClass::C100) == 1);
  CHECK(res.per_class.count(TirClass::C50_74) == 1);
  REQUIRE(res.skipped.size() == 2);
  CHECK(res.skipped[0].find("class_c7599") != std::string::npos);
  CHECK(res.skipped[1].find("class_lt50") != std::string::npos);
}

TEST_CASE("the learned rule scores at chance on permuted labels") {
  std::mt19937_64 rng(999);
  auto ds = planted::band_dataset(rng, {85.0, 165.0}, 20, 20);
  auto result = learn(ds, small_ga(), small_gp(), 1);
  REQUIRE(!result.empty());
  auto deployed = std::max_element(
      result.begin(), result.end(),
      [](const Candidate& a, const Candidate& b) { return a.accuracy < b.accuracy; });
  Formula rule = deployed->instantiated();

  std::vector<double> rob(ds.chunks.size());
  for (std::size_t i = 0; i < ds.chunks.size(); ++i)
    rob[i] = robustness(rule, ds.chunks[i].trace, 0.0);
  CHECK(objective_from_robustness(rob, ds.labels).accuracy >= 0.9);

  std::mt19937_64 shuffle_rng(1000);
  double total = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<int> labels = ds.labels;
    std::shuffle(labels.begin(), labels.end(), shuffle_rng);
    total += objective_from_robustness(rob, labels).accuracy;
  }
  double mean = total / 100.0;
  CHECK(mean > 0.4);
  CHECK(mean < 0.6);
}
