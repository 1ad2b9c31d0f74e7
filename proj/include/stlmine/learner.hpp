#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlmine/labeling.hpp"
#include "stlmine/stl/ast.hpp"

namespace stlmine {

class LearnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Genetic-search settings. Defaults are desk-scale; everything is
/// overridable from the config file.
struct GaConfig {
  int population = 32;
  int generations = 30;
  double mutation_rate = 0.3;
  double crossover_rate = 0.8;
  int max_depth = 4;
  int elitism = 2;
  int tournament = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Parameter-synthesis settings for the GP-UCB inner loop.
struct GpUcbConfig {
  int budget = 64;       // total objective evaluations including the design
  int init_points = 16;  // Latin-hypercube design size
  int candidate_pool = 256;
  int polish_rounds = 2;  // coordinate-refinement sweeps after the UCB loop
  double length_scale = 0.05;
  double signal_var = 1.0;
  double noise_var = 1e-4;
  bool optimize_accuracy = false;  // default target is the robustness gap
  std::uint64_t seed = 1;

  void validate() const;
};

/// Robustness-gap statistics of one formula over a labeled dataset.
struct FitnessReport {
  double fitness = 0.0;
  double accuracy = 0.0;
  double mcr = 1.0;
  double mean_pos = 0.0;
  double mean_neg = 0.0;
  double std_pos = 0.0;
  double std_neg = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// One structure with its synthesized parameters and scores.
struct Candidate {
  Formula pformula;
  std::map<std::string, double> best_params;
  double fitness = 0.0;
  double accuracy = 0.0;
  double mcr = 1.0;
  FitnessReport report;

  Formula instantiated() const;  // pformula with best_params substituted
};

/// Threshold search range for a registered variable, used when templates
/// and mutations mint parameter slots.
std::pair<double, double> threshold_range(const std::string& variable);

/// Template family names accepted by seed_population:
/// always_band, eventually_band, always_single, eventually_single,
/// eventually_conj, until_pair.
const std::vector<std::string>& default_template_families();

/// Builds an initial population of parametric formulas by drawing template
/// families over randomly chosen variables. Deterministic under the config
/// seed. Throws LearnError on an empty registry or unknown family name.
std::vector<Formula> seed_population(const std::vector<std::string>& families,
                                     const std::vector<std::string>& variables,
                                     const GaConfig& cfg);

/// Applies exactly one structural edit: comparator swap, variable swap,
/// G<->F swap, parameter-range widen/narrow, or subtree replacement.
/// Total: always returns a valid formula within the depth bound.
Formula mutate(const Formula& pf, const std::vector<std::string>& variables,
               const GaConfig& cfg, std::mt19937_64& rng);

/// Exchanges random subtrees; children respect the depth bound and keep
/// parameter names unique (transplanted parameters renamed on collision).
std::pair<Formula, Formula> crossover(const Formula& a, const Formula& b,
                                      const GaConfig& cfg, std::mt19937_64& rng);

/// Evaluates robustness(f, chunk, 0) over the whole dataset.
/// fitness = (mean+ - mean-) / (std+ + std- + eps) with a relative eps, so
/// scaling every robustness by a positive constant leaves it unchanged.
/// accuracy counts sign matches, zero robustness reading as +1.
/// Throws LearnError on an empty or single-label dataset.
FitnessReport objective(const Formula& f, const LabeledDataset& ds);

/// Same statistics from precomputed per-chunk robustness values.
FitnessReport objective_from_robustness(const std::vector<double>& rob,
                                        const std::vector<int>& labels);

/// GP-UCB synthesis of the parameters of one structure: Latin-hypercube
/// design, then UCB-guided evaluations over the normalized parameter box.
/// Interval parameter pairs are kept ordered by swapping sampled endpoints.
/// Parameter-free formulas return their direct objective after one
/// evaluation.
Candidate gp_ucb_synthesize(const Formula& pf, const LabeledDataset& ds,
                            const GpUcbConfig& cfg);

/// Bi-level search: GA over structures, GP-UCB per structure. Offspring that
/// duplicate an already tried structure are reassigned to unexplored template
/// family and variable pairs, so long runs cover the whole template space
/// instead of collapsing onto the first good rule. Returns the evaluated
/// candidate archive sorted by fitness (best first), deduplicated by
/// structural equality after rounding parameters to 3 decimals.
/// Deterministic for fixed seeds regardless of the jobs count.
std::vector<Candidate> learn(const LabeledDataset& ds, const GaConfig& ga,
                             const GpUcbConfig& gp, int jobs = 1);

struct MulticlassResult {
  std::map<TirClass, std::vector<Candidate>> per_class;
  std::vector<std::string> skipped;  // classes without both labels, with reason
};

/// One one-vs-all learn() per TIR class; single-label classes are skipped
/// and reported rather than failed.
MulticlassResult learn_multiclass(const std::vector<Chunk>& chunks, const GaConfig& ga,
                                  const GpUcbConfig& gp,
                                  const LabelPolicy& policy = {}, int jobs = 1);

}  // namespace stlmine
