#include "stlmine/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>

#include "stlmine/gp.hpp"
#include "stlmine/stl/monitor.hpp"
#include "stlmine/util.hpp"

namespace stlmine {

namespace {

// Robustness can be +-inf on vacuous windows; statistics use a finite clamp.
constexpr double kRobClamp = 1e6;
constexpr double kRelEps = 1e-9;
constexpr double kChunkWindowHi = 55.0;  // last grid point of a 12-sample hour

double clamp_rob(double r) { return std::clamp(r, -kRobClamp, kRobClamp); }

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

ParamRef fresh_threshold(const std::string& name, const std::string& variable) {
  auto [lo, hi] = threshold_range(variable);
  return ParamRef{name, ParamKind::Threshold, lo, hi};
}

ParamRef fresh_offset(const std::string& name) {
  return ParamRef{name, ParamKind::TimeOffset, 0.0, kChunkWindowHi};
}

Interval hour_window() { return Interval{Value{0.0}, Value{kChunkWindowHi}}; }

std::string pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
  return pool[rng() % pool.size()];
}

std::string pick_other(const std::vector<std::string>& pool, const std::string& not_this,
                       std::mt19937_64& rng) {
  if (pool.size() < 2) return pool.front();
  std::string v = pick(pool, rng);
  while (v == not_this) v = pick(pool, rng);
  return v;
}

// Rebuilds a tree applying a value transform to every parameter slot.
template <typename Fn>
Formula map_params(const Formula& f, const Fn& fn) {
  auto map_value = [&](const Value& v) -> Value {
    if (!v.is_param()) return v;
    return fn(v.param());
  };
  auto map_interval = [&](const Interval& iv) -> Interval {
    return Interval{map_value(iv.lo), map_value(iv.hi)};
  };
  const auto& nd = f.node();
  switch (f.kind()) {
    case NodeKind::Predicate:
      return Formula::predicate(nd.variable, nd.cmp, map_value(nd.threshold));
    case NodeKind::Not:
      return Formula::negation(map_params(f.left(), fn));
    case NodeKind::And:
      return Formula::conjunction(map_params(f.left(), fn), map_params(f.right(), fn));
    case NodeKind::Or:
      return Formula::disjunction(map_params(f.left(), fn), map_params(f.right(), fn));
    case NodeKind::Always:
      return Formula::always(map_interval(nd.interval), map_params(f.left(), fn));
    case NodeKind::Eventually:
      return Formula::eventually(map_interval(nd.interval), map_params(f.left(), fn));
    case NodeKind::Until:
      return Formula::until(map_interval(nd.interval), map_params(f.left(), fn),
                            map_params(f.right(), fn));
  }
  throw std::logic_error("unreachable");
}

std::set<std::string> param_names(const Formula& f) {
  std::set<std::string> out;
  map_params(f, [&](const ParamRef& p) -> Value {
    out.insert(p.name);
    return Value{p};
  });
  return out;
}

Formula rename_collisions(const Formula& transplant, const std::set<std::string>& taken) {
  std::map<std::string, std::string> ren;
  std::set<std::string> used = taken;
  for (const auto& name : param_names(transplant)) used.insert(name);
  return map_params(transplant, [&](const ParamRef& p) -> Value {
    auto it = ren.find(p.name);
    if (it == ren.end()) {
      std::string name = p.name;
      if (taken.count(name)) {
        int k = 2;
        while (used.count(name + std::to_string(k))) ++k;
        name += std::to_string(k);
        used.insert(name);
      }
      it = ren.emplace(p.name, name).first;
    }
    return Value{ParamRef{it->second, p.kind, p.lo, p.hi}};
  });
}

std::string fresh_name(const std::set<std::string>& taken) {
  for (char c = 'a'; c <= 'z'; ++c) {
    std::string name(1, c);
    if (!taken.count(name)) return name;
  }
  int k = 0;
  while (taken.count("q" + std::to_string(k))) ++k;
  return "q" + std::to_string(k);
}

// Substitutes rounded parameter values without range checks; used only to
// build the dedup key, where rounding may nudge a value off its range edge.
Formula substituted_rounded(const Formula& pf,
                            const std::map<std::string, double>& params) {
  return map_params(pf, [&](const ParamRef& p) -> Value {
    auto it = params.find(p.name);
    if (it == params.end()) return Value{p};
    return Value{round3(it->second)};
  });
}

std::string dedup_key(const Candidate& c) {
  return substituted_rounded(c.pformula, c.best_params).render();
}

}  // namespace

void GaConfig::validate() const {
  if (population < 2) throw LearnError("population must be at least 2");
  if (generations < 1) throw LearnError("generations must be at least 1");
  if (mutation_rate < 0 || mutation_rate > 1 || crossover_rate < 0 || crossover_rate > 1)
    throw LearnError("rates must lie in [0,1]");
  if (max_depth < 1) throw LearnError("max depth must be at least 1");
  if (elitism < 0 || elitism >= population)
    throw LearnError("elitism must be in [0, population)");
  if (tournament < 1) throw LearnError("tournament size must be at least 1");
}

void GpUcbConfig::validate() const {
  if (init_points < 1) throw LearnError("gp-ucb needs at least one design point");
  if (budget < init_points) throw LearnError("gp-ucb budget below design size");
  if (candidate_pool < 1) throw LearnError("gp-ucb candidate pool must be positive");
  if (polish_rounds < 0) throw LearnError("gp-ucb polish rounds must be non-negative");
  if (length_scale <= 0 || signal_var <= 0 || noise_var < 0)
    throw LearnError("gp kernel hyperparameters must be positive");
}

Formula Candidate::instantiated() const { return pformula.instantiate(best_params); }

std::pair<double, double> threshold_range(const std::string& variable) {
  if (variable == "cgm" || variable == "smbg" || variable == "smbgHypo") return {0, 400};
  if (variable == "hr") return {0, 220};
  if (variable == "steps") return {0, 5000};
  if (variable == "calories") return {0, 1000};
  if (variable == "distance") return {0, 10};
  if (variable == "activityLevel") return {0, 4};
  if (variable == "exercising") return {0, 1};
  if (variable == "meal") return {0, 200};
  if (variable == "basalBolus") return {0, 2};
  if (variable == "totalBolus" || variable == "mealBolus") return {0, 25};
  if (variable == "corrBolus") return {0, 10};
  return {0, 200};
}

const std::vector<std::string>& default_template_families() {
  static const std::vector<std::string> families = {
      "always_band",   "eventually_band",   "always_single",
      "eventually_single", "eventually_conj", "until_pair"};
  return families;
}

namespace {

Formula make_template(const std::string& family, const std::string& x,
                      const std::vector<std::string>& variables, std::mt19937_64& rng) {
  Cmp dir = rng() % 2 ? Cmp::Ge : Cmp::Le;
  if (family == "always_band") {
    return Formula::always(
        hour_window(),
        Formula::conjunction(
            Formula::predicate(x, Cmp::Ge, Value{fresh_threshold("a", x)}),
            Formula::predicate(x, Cmp::Le, Value{fresh_threshold("b", x)})));
  }
  if (family == "eventually_band") {
    return Formula::eventually(
        hour_window(),
        Formula::conjunction(
            Formula::predicate(x, Cmp::Ge, Value{fresh_threshold("a", x)}),
            Formula::predicate(x, Cmp::Le, Value{fresh_threshold("b", x)})));
  }
  if (family == "always_single") {
    return Formula::always(hour_window(),
                           Formula::predicate(x, dir, Value{fresh_threshold("a", x)}));
  }
  if (family == "eventually_single") {
    return Formula::eventually(Interval{Value{fresh_offset("u")}, Value{fresh_offset("v")}},
                               Formula::predicate(x, dir, Value{fresh_threshold("a", x)}));
  }
  if (family == "eventually_conj") {
    std::string y = pick_other(variables, x, rng);
    return Formula::eventually(
        Interval{Value{fresh_offset("u")}, Value{fresh_offset("v")}},
        Formula::conjunction(
            Formula::predicate(x, Cmp::Le, Value{fresh_threshold("k", x)}),
            Formula::predicate(y, Cmp::Ge, Value{fresh_threshold("l", y)})));
  }
  // until_pair
  std::string y = pick_other(variables, x, rng);
  return Formula::until(hour_window(),
                        Formula::predicate(x, dir, Value{fresh_threshold("a", x)}),
                        Formula::predicate(y, rng() % 2 ? Cmp::Ge : Cmp::Le,
                                           Value{fresh_threshold("b", y)}));
}

}  // namespace

std::vector<Formula> seed_population(const std::vector<std::string>& families,
                                     const std::vector<std::string>& variables,
                                     const GaConfig& cfg) {
  cfg.validate();
  if (families.empty()) throw LearnError("no template families given");
  if (variables.empty()) throw LearnError("empty variable registry");
  const auto& known = default_template_families();
  for (const auto& f : families)
    if (std::find(known.begin(), known.end(), f) == known.end())
      throw LearnError("unknown template family '" + f + "'");

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eedul));
  std::vector<Formula> out;
  out.reserve(static_cast<std::size_t>(cfg.population));
  for (int i = 0; i < cfg.population; ++i) {
    const std::string& family = families[static_cast<std::size_t>(i) % families.size()];
    std::string x = pick(variables, rng);
    out.push_back(make_template(family, x, variables, rng));
    if (out.back().depth() > cfg.max_depth)
      throw LearnError("template family '" + family + "' exceeds the depth bound");
  }
  return out;
}

namespace {

std::vector<int> nodes_of_kind(const Formula& f, std::initializer_list<NodeKind> kinds) {
  std::vector<int> out;
  int n = f.node_count();
  for (int i = 0; i < n; ++i) {
    NodeKind k = f.subtree(i).kind();
    if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) out.push_back(i);
  }
  return out;
}

Formula swap_comparator(const Formula& f, std::mt19937_64& rng) {
  auto preds = nodes_of_kind(f, {NodeKind::Predicate});
  int at = preds[rng() % preds.size()];
  const auto& nd = f.subtree(at).node();
  return f.with_subtree(at, Formula::predicate(nd.variable, flipped(nd.cmp), nd.threshold));
}

Formula swap_variable(const Formula& f, const std::vector<std::string>& variables,
                      std::mt19937_64& rng) {
  auto preds = nodes_of_kind(f, {NodeKind::Predicate});
  int at = preds[rng() % preds.size()];
  const auto& nd = f.subtree(at).node();
  std::string var = pick_other(variables, nd.variable, rng);
  Value threshold = nd.threshold;
  auto [lo, hi] = threshold_range(var);
  if (threshold.is_param()) {
    const ParamRef& p = threshold.param();
    threshold = Value{ParamRef{p.name, p.kind, lo, hi}};
  } else {
    threshold = Value{std::clamp(threshold.number(), lo, hi)};
  }
  return f.with_subtree(at, Formula::predicate(var, nd.cmp, threshold));
}

Formula swap_temporal(const Formula& f, std::mt19937_64& rng) {
  auto nodes = nodes_of_kind(f, {NodeKind::Always, NodeKind::Eventually});
  int at = nodes[rng() % nodes.size()];
  Formula sub = f.subtree(at);
  const auto& nd = sub.node();
  Formula swapped = sub.kind() == NodeKind::Always
                        ? Formula::eventually(nd.interval, sub.left())
                        : Formula::always(nd.interval, sub.left());
  return f.with_subtree(at, swapped);
}

// Halves or doubles one parameter's search range around its midpoint. For a
// parameter sitting in a temporal interval the edit is applied to both
// endpoints, keeping the pair's ranges identical so the synthesis-time
// swap repair stays range-safe.
Formula scale_range(const Formula& f, std::mt19937_64& rng) {
  std::vector<std::string> names;
  for (const auto& p : f.parameters()) names.push_back(p.name);
  if (names.empty()) return f;
  std::set<std::string> chosen{names[rng() % names.size()]};
  for (const auto& [lo_name, hi_name] : f.interval_param_pairs())
    if (chosen.count(lo_name) || chosen.count(hi_name)) {
      chosen.insert(lo_name);
      chosen.insert(hi_name);
    }
  double factor = rng() % 2 ? 2.0 : 0.5;
  return map_params(f, [&](const ParamRef& p) -> Value {
    if (!chosen.count(p.name)) return Value{p};
    double mid = (p.lo + p.hi) / 2.0;
    double half = (p.hi - p.lo) / 2.0 * factor;
    double lo = mid - half, hi = mid + half;
    if (p.kind == ParamKind::TimeOffset && lo < 0) lo = 0;
    if (hi - lo < 1e-6) hi = lo + 1e-6;
    return Value{ParamRef{p.name, p.kind, lo, hi}};
  });
}

Formula replace_subtree(const Formula& f, const std::vector<std::string>& variables,
                        const GaConfig& cfg, std::mt19937_64& rng) {
  int at = static_cast<int>(rng() % static_cast<unsigned>(f.node_count()));
  Formula removed = f.subtree(at);
  std::set<std::string> taken = param_names(f);
  for (const auto& name : param_names(removed)) taken.erase(name);
  std::string var = pick(variables, rng);
  Formula leaf = Formula::predicate(var, rng() % 2 ? Cmp::Ge : Cmp::Le,
                                    Value{fresh_threshold(fresh_name(taken), var)});
  Formula wrapped = rng() % 2 ? leaf
                              : (rng() % 2 ? Formula::always(hour_window(), leaf)
                                           : Formula::eventually(hour_window(), leaf));
  Formula out = f.with_subtree(at, wrapped);
  if (out.depth() > cfg.max_depth) out = f.with_subtree(at, leaf);
  return out;
}

}  // namespace

Formula mutate(const Formula& pf, const std::vector<std::string>& variables,
               const GaConfig& cfg, std::mt19937_64& rng) {
  if (variables.empty()) throw LearnError("empty variable registry");
  for (int attempt = 0; attempt < 8; ++attempt) {
    switch (rng() % 5) {
      case 0:
        return swap_comparator(pf, rng);
      case 1:
        return swap_variable(pf, variables, rng);
      case 2:
        if (nodes_of_kind(pf, {NodeKind::Always, NodeKind::Eventually}).empty()) break;
        return swap_temporal(pf, rng);
      case 3:
        if (pf.parameters().empty()) break;
        return scale_range(pf, rng);
      default: {
        Formula out = replace_subtree(pf, variables, cfg, rng);
        if (out.depth() <= cfg.max_depth) return out;
        break;
      }
    }
  }
  return swap_comparator(pf, rng);
}

std::pair<Formula, Formula> crossover(const Formula& a, const Formula& b,
                                      const GaConfig& cfg, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    int i = static_cast<int>(rng() % static_cast<unsigned>(a.node_count()));
    int j = static_cast<int>(rng() % static_cast<unsigned>(b.node_count()));
    Formula sa = a.subtree(i);
    Formula sb = b.subtree(j);

    std::set<std::string> host_a = param_names(a);
    for (const auto& name : param_names(sa)) host_a.erase(name);
    std::set<std::string> host_b = param_names(b);
    for (const auto& name : param_names(sb)) host_b.erase(name);

    Formula c1 = a.with_subtree(i, rename_collisions(sb, host_a));
    Formula c2 = b.with_subtree(j, rename_collisions(sa, host_b));
    if (c1.depth() <= cfg.max_depth && c2.depth() <= cfg.max_depth) return {c1, c2};
  }
  return {a, b};
}

FitnessReport objective_from_robustness(const std::vector<double>& rob,
                                        const std::vector<int>& labels) {
  if (rob.size() != labels.size() || rob.empty())
    throw LearnError("objective needs matching nonempty robustness and labels");
  FitnessReport rep;
  double sum_pos = 0, sum_neg = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rob.size(); ++i) {
    double r = clamp_rob(rob[i]);
    int predicted = r >= 0 ? 1 : -1;
    if (predicted == labels[i]) ++hits;
    if (labels[i] > 0) {
      sum_pos += r;
      ++rep.n_pos;
    } else {
      sum_neg += r;
      ++rep.n_neg;
    }
  }
  if (rep.n_pos == 0 || rep.n_neg == 0) throw LearnError("single-label dataset");
  rep.mean_pos = sum_pos / static_cast<double>(rep.n_pos);
  rep.mean_neg = sum_neg / static_cast<double>(rep.n_neg);
  double ss_pos = 0, ss_neg = 0;
  for (std::size_t i = 0; i < rob.size(); ++i) {
    double r = clamp_rob(rob[i]);
    if (labels[i] > 0)
      ss_pos += (r - rep.mean_pos) * (r - rep.mean_pos);
    else
      ss_neg += (r - rep.mean_neg) * (r - rep.mean_neg);
  }
  rep.std_pos = std::sqrt(ss_pos / static_cast<double>(rep.n_pos));
  rep.std_neg = std::sqrt(ss_neg / static_cast<double>(rep.n_neg));

  double scale = std::fabs(rep.mean_pos) + std::fabs(rep.mean_neg) + rep.std_pos +
                 rep.std_neg;
  double denom = rep.std_pos + rep.std_neg + kRelEps * scale;
  rep.fitness = denom > 0 ? (rep.mean_pos - rep.mean_neg) / denom : 0.0;
  rep.accuracy = static_cast<double>(hits) / static_cast<double>(rob.size());
  rep.mcr = 1.0 - rep.accuracy;
  return rep;
}

FitnessReport objective(const Formula& f, const LabeledDataset& ds) {
  if (ds.chunks.empty()) throw LearnError("empty dataset");
  std::vector<double> rob(ds.chunks.size());
  for (std::size_t i = 0; i < ds.chunks.size(); ++i)
    rob[i] = robustness(f, ds.chunks[i].trace, 0.0);
  return objective_from_robustness(rob, ds.labels);
}

namespace {

struct EvalPoint {
  std::map<std::string, double> assignment;
  FitnessReport report;
  double target = 0.0;
};

class SynthesisProblem {
 public:
  SynthesisProblem(const Formula& pf, const LabeledDataset& ds, bool optimize_accuracy)
      : pf_(pf), ds_(ds), optimize_accuracy_(optimize_accuracy),
        params_(pf.parameters()) {
    for (const auto& [lo, hi] : pf.interval_param_pairs()) {
      pairs_.emplace_back(index_of(lo), index_of(hi));
    }
  }

  std::size_t dims() const { return params_.size(); }

  // Unit-box point -> in-range assignment, with inverted interval pairs
  // repaired by swapping (and clamping, should the pair ranges differ).
  std::map<std::string, double> denormalize(std::vector<double> x) const {
    std::vector<double> vals(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i)
      vals[i] = params_[i].lo + x[i] * (params_[i].hi - params_[i].lo);
    for (auto [i, j] : pairs_) {
      if (vals[i] > vals[j]) std::swap(vals[i], vals[j]);
      vals[i] = std::clamp(vals[i], params_[i].lo, params_[i].hi);
      vals[j] = std::clamp(vals[j], params_[j].lo, params_[j].hi);
    }
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < params_.size(); ++i) out[params_[i].name] = vals[i];
    return out;
  }

  // In accuracy mode the surrogate target blends in a bounded transform of
  // the smooth gap fitness: the gap surface guides the search into the
  // separating region from anywhere in the box, while the accuracy term
  // dominates once plateaus differ. Selection of the returned point uses
  // accuracy alone (fitness only breaks ties).
  EvalPoint evaluate(const std::vector<double>& x) const {
    EvalPoint pt;
    pt.assignment = denormalize(x);
    pt.report = objective(pf_.instantiate(pt.assignment), ds_);
    pt.target = optimize_accuracy_
                    ? pt.report.accuracy + 0.25 * std::tanh(pt.report.fitness / 5.0)
                    : pt.report.fitness;
    return pt;
  }

  bool improves(const EvalPoint& challenger, const EvalPoint& best) const {
    if (!optimize_accuracy_) return challenger.target > best.target;
    if (challenger.report.accuracy != best.report.accuracy)
      return challenger.report.accuracy > best.report.accuracy;
    return challenger.report.fitness > best.report.fitness;
  }

 private:
  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    throw LearnError("interval parameter '" + name + "' not found");
  }

  const Formula& pf_;
  const LabeledDataset& ds_;
  bool optimize_accuracy_;
  std::vector<ParamRef> params_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t d,
                                                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> xs(n, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<std::size_t> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = i;
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t i = 0; i < n; ++i)
      xs[i][j] = (static_cast<double>(strata[i]) + unit(rng)) / static_cast<double>(n);
  }
  return xs;
}

}  // namespace

Candidate gp_ucb_synthesize(const Formula& pf, const LabeledDataset& ds,
                            const GpUcbConfig& cfg) {
  cfg.validate();
  SynthesisProblem problem(pf, ds, cfg.optimize_accuracy);

  Candidate out{.pformula = pf, .best_params = {}, .report = {}};
  if (problem.dims() == 0) {
    out.report = objective(pf, ds);
    out.fitness = out.report.fitness;
    out.accuracy = out.report.accuracy;
    out.mcr = out.report.mcr;
    return out;
  }

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x9cbul));
  std::size_t d = problem.dims();
  std::size_t n0 = std::min<std::size_t>(static_cast<std::size_t>(cfg.init_points),
                                         static_cast<std::size_t>(cfg.budget));

  std::vector<std::vector<double>> xs = latin_hypercube(n0, d, rng);
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(cfg.budget));
  EvalPoint best;
  std::vector<double> best_x;
  bool have_best = false;
  auto consume = [&](const std::vector<double>& x) {
    EvalPoint pt = problem.evaluate(x);
    ys.push_back(pt.target);
    if (!have_best || problem.improves(pt, best)) {
      best = pt;
      best_x = x;
      have_best = true;
    }
  };
  for (const auto& x : xs) consume(x);

  GaussianProcess gp(cfg.length_scale, cfg.signal_var, cfg.noise_var);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (int i = static_cast<int>(n0) + 1; i <= cfg.budget; ++i) {
    gp.fit(xs, ys);
    double beta = std::sqrt(
        2.0 * std::log(static_cast<double>(i) * static_cast<double>(i) *
                       std::numbers::pi * std::numbers::pi / 0.6));
    // The acquisition argmax is approximated over a finite pool; half the
    // pool samples the whole box, the other half perturbs the incumbent so
    // the maximizer near the current best is located precisely.
    const std::vector<double>& incumbent =
        xs[static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) -
                                    ys.begin())];
    std::vector<double> chosen;
    double best_ucb = 0.0;
    for (int c = 0; c < cfg.candidate_pool; ++c) {
      std::vector<double> x(d);
      if (c % 2 == 0) {
        for (auto& v : x) v = unit(rng);
      } else {
        for (std::size_t k = 0; k < d; ++k)
          x[k] = std::clamp(incumbent[k] + jitter(rng), 0.0, 1.0);
      }
      auto [mu, sigma] = gp.predict(x);
      double ucb = mu + beta * sigma;
      if (chosen.empty() || ucb > best_ucb) {
        best_ucb = ucb;
        chosen = std::move(x);
      }
    }
    xs.push_back(chosen);
    consume(chosen);
  }

  // Deterministic coordinate refinement around the incumbent closes the last
  // stretch that the exploration-heavy UCB schedule tends to leave open.
  for (int round = 0; round < cfg.polish_rounds; ++round) {
    for (std::size_t k = 0; k < d; ++k) {
      for (double step : {-0.04, -0.02, -0.01, -0.005, 0.005, 0.01, 0.02, 0.04}) {
        std::vector<double> x = best_x;
        x[k] = std::clamp(x[k] + step, 0.0, 1.0);
        EvalPoint pt = problem.evaluate(x);
        if (problem.improves(pt, best)) {
          best = pt;
          best_x = x;
        }
      }
    }
  }

  out.best_params = best.assignment;
  out.report = best.report;
  out.fitness = best.report.fitness;
  out.accuracy = best.report.accuracy;
  out.mcr = best.report.mcr;
  return out;
}

namespace {

std::vector<std::string> dataset_variables(const LabeledDataset& ds) {
  std::vector<std::string> vars;
  for (const auto& [name, col] : ds.chunks.front().trace.channels) vars.push_back(name);
  return vars;
}

bool better(const Candidate& a, const Candidate& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return dedup_key(a) < dedup_key(b);
}

std::size_t tournament_pick(const std::vector<std::optional<Candidate>>& scored,
                            const GaConfig& ga, std::mt19937_64& rng) {
  std::size_t winner = rng() % scored.size();
  for (int k = 1; k < ga.tournament; ++k) {
    std::size_t challenger = rng() % scored.size();
    if (scored[challenger]->fitness > scored[winner]->fitness) winner = challenger;
  }
  return winner;
}

}  // namespace

std::vector<Candidate> learn(const LabeledDataset& ds, const GaConfig& ga,
                             const GpUcbConfig& gp, int jobs) {
  ga.validate();
  gp.validate();
  if (ds.chunks.empty()) throw LearnError("empty dataset");
  if (ds.positives() == 0 || ds.negatives() == 0)
    throw LearnError("single-label dataset");

  std::vector<std::string> variables = dataset_variables(ds);
  std::vector<Formula> structures =
      seed_population(default_template_families(), variables, ga);
  std::vector<std::optional<Candidate>> scored(structures.size());
  std::map<std::string, Candidate> archive;

  // Stream of family x variable templates in a seed-shuffled order, spent on
  // offspring slots that would re-explore an already tried structure. Keeps a
  // converging population paying for unexplored structure space, so every
  // template shape gets synthesized at least once when the run is long enough.
  std::vector<std::pair<std::string, std::string>> coverage;
  for (const auto& family : default_template_families())
    for (const auto& v : variables) coverage.emplace_back(family, v);
  {
    std::mt19937_64 shuffle_rng(mix_seed(ga.seed, 0xc0feul));
    for (std::size_t i = coverage.size(); i > 1; --i)
      std::swap(coverage[i - 1], coverage[shuffle_rng() % i]);
  }
  std::size_t cover_next = 0;
  std::set<std::string> tried;

  for (int gen = 0; gen < ga.generations; ++gen) {
    parallel_for(structures.size(), jobs, [&](std::size_t i) {
      if (scored[i]) return;
      GpUcbConfig inner = gp;
      inner.seed = mix_seed(gp.seed, (static_cast<std::uint64_t>(gen) << 24) ^ i);
      scored[i] = gp_ucb_synthesize(structures[i], ds, inner);
    });
    for (std::size_t i = 0; i < scored.size(); ++i) {
      tried.insert(structures[i].signature());
      const auto& cand = scored[i];
      std::string key = dedup_key(*cand);
      auto it = archive.find(key);
      if (it == archive.end() || cand->fitness > it->second.fitness)
        archive.insert_or_assign(key, *cand);
    }
    if (gen + 1 == ga.generations) break;

    std::mt19937_64 breeding(mix_seed(ga.seed, static_cast<std::uint64_t>(gen) + 1));
    std::vector<std::size_t> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return better(*scored[a], *scored[b]);
    });

    std::vector<Formula> next_structures;
    std::vector<std::optional<Candidate>> next_scored;
    std::set<std::string> next_sigs;
    for (int e = 0; e < ga.elitism; ++e) {
      std::size_t idx = order[static_cast<std::size_t>(e)];
      next_sigs.insert(structures[idx].signature());
      next_structures.push_back(structures[idx]);
      next_scored.push_back(scored[idx]);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (next_structures.size() < structures.size()) {
      std::size_t p1 = tournament_pick(scored, ga, breeding);
      std::size_t p2 = tournament_pick(scored, ga, breeding);
      Formula c1 = structures[p1];
      Formula c2 = structures[p2];
      if (unit(breeding) < ga.crossover_rate)
        std::tie(c1, c2) = crossover(c1, c2, ga, breeding);
      for (Formula* child : {&c1, &c2}) {
        if (next_structures.size() >= structures.size()) break;
        Formula offspring = unit(breeding) < ga.mutation_rate
                                ? mutate(*child, variables, ga, breeding)
                                : *child;
        std::string sig = offspring.signature();
        if (tried.count(sig) > 0 || next_sigs.count(sig) > 0) {
          while (cover_next < coverage.size()) {
            const auto& [family, x] = coverage[cover_next++];
            Formula fresh = make_template(family, x, variables, breeding);
            std::string fresh_sig = fresh.signature();
            if (fresh.depth() <= ga.max_depth && tried.count(fresh_sig) == 0 &&
                next_sigs.count(fresh_sig) == 0) {
              offspring = std::move(fresh);
              sig = std::move(fresh_sig);
              break;
            }
          }
        }
        next_sigs.insert(sig);
        next_structures.push_back(std::move(offspring));
        next_scored.emplace_back(std::nullopt);
      }
    }
    structures = std::move(next_structures);
    scored = std::move(next_scored);
  }

  std::vector<Candidate> out;
  out.reserve(archive.size());
  for (auto& [key, c] : archive) out.push_back(std::move(c));
  std::sort(out.begin(), out.end(), better);
  return out;
}

MulticlassResult learn_multiclass(const std::vector<Chunk>& chunks, const GaConfig& ga,
                                  const GpUcbConfig& gp, const LabelPolicy& policy,
                                  int jobs) {
  if (chunks.empty()) throw LearnError("empty chunk list");
  MulticlassResult out;
  for (TirClass t : kAllTirClasses) {
    LabeledDataset ds = one_vs_all(chunks, t, policy);
    if (ds.chunks.empty() || ds.positives() == 0 || ds.negatives() == 0) {
      out.skipped.push_back(std::string("class_") + tir_class_name(t) +
                            ": single-label dataset");
      continue;
    }
    out.per_class[t] = learn(ds, ga, gp, jobs);
  }
  return out;
}

}  // namespace stlmine
