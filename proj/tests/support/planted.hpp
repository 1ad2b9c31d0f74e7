#pragma once

// Planted parameter-synthesis problems with a brute-force grid oracle.
// The oracle enumerates instantiations directly over the declared ranges,
// independent of the optimizer's unit-box mapping and repair logic.

#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlmine/dataset.hpp"
#include "stlmine/labeling.hpp"
#include "stlmine/learner.hpp"

namespace planted {

constexpr std::int64_t kBase = 1767225600;  // 2026-01-01T00:00:00, hour aligned

inline stlmine::Chunk cgm_chunk(const std::string& pid, int index,
                                const std::vector<double>& cgm) {
  stlmine::Trace tr;
  tr.start_epoch_s = kBase + static_cast<std::int64_t>(index) * 3600;
  tr.step_minutes = 5.0;
  tr.channels["cgm"] = cgm;
  return stlmine::Chunk{pid, index, tr.start_epoch_s, tr, true};
}

struct Band {
  double lo;
  double hi;
};

// Positives sweep the whole band with the chunk envelope forced to within a
// few units of each edge, which pins the right edge of every perfect
// separator near the planted bound. Negatives leave the band at one sample
// with depths spread over [10,30]; the first two negatives are sentinels at
// depth exactly 10, so every perfect separator sits within +-10 of the
// planted bounds, and the depth spread turns the accuracy landscape into a
// ramp that guides the optimizer toward the separating corner.
inline stlmine::LabeledDataset band_dataset(std::mt19937_64& rng, Band band, int n_pos,
                                            int n_neg) {
  std::uniform_real_distribution<double> inside(band.lo + 4.0, band.hi - 4.0);
  std::uniform_real_distribution<double> slack(1.0, 4.0);
  std::uniform_real_distribution<double> depth(10.0, 30.0);
  stlmine::LabeledDataset ds;
  ds.task = "planted";
  int idx = 0;
  auto fill_inside = [&](std::vector<double>& v) {
    for (auto& x : v) x = inside(rng);
    v[rng() % v.size()] = band.lo + slack(rng);
    v[rng() % v.size()] = band.hi - slack(rng);
  };
  for (int i = 0; i < n_pos; ++i) {
    std::vector<double> v(12);
    fill_inside(v);
    ds.chunks.push_back(cgm_chunk("p", idx++, v));
    ds.labels.push_back(1);
  }
  for (int i = 0; i < n_neg; ++i) {
    std::vector<double> v(12);
    fill_inside(v);
    double d = i < 2 ? 10.0 : depth(rng);
    v[rng() % v.size()] = i % 2 ? band.lo - d : band.hi + d;
    ds.chunks.push_back(cgm_chunk("p", idx++, v));
    ds.labels.push_back(-1);
  }
  return ds;
}

// Synthesis settings tuned for planted-recovery problems: larger budget and a
// short kernel length-scale resolve the separating corner reliably.
inline stlmine::GpUcbConfig recovery_gp(std::uint64_t seed) {
  stlmine::GpUcbConfig cfg;
  cfg.budget = 192;
  cfg.init_points = 48;
  cfg.candidate_pool = 256;
  cfg.length_scale = 0.05;
  cfg.optimize_accuracy = true;
  cfg.seed = seed;
  return cfg;
}

// Exhaustive search over an axis-aligned grid of instantiations. Assignments
// that invert a temporal interval are skipped rather than repaired.
inline double grid_best_accuracy(const stlmine::Formula& pf,
                                 const stlmine::LabeledDataset& ds, int steps) {
  auto ps = pf.parameters();
  if (ps.empty() || ps.size() > 2)
    throw std::logic_error("grid oracle handles one or two parameters");
  auto value_at = [&](const stlmine::ParamRef& p, int k) {
    return p.lo + (p.hi - p.lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
  };
  auto accuracy_of = [&](const std::map<std::string, double>& a) {
    try {
      return stlmine::objective(pf.instantiate(a), ds).accuracy;
    } catch (const std::invalid_argument&) {
      return -1.0;
    }
  };
  double best = -1.0;
  if (ps.size() == 1) {
    for (int k = 0; k < steps; ++k) {
      double acc = accuracy_of({{ps[0].name, value_at(ps[0], k)}});
      if (acc > best) best = acc;
    }
  } else {
    for (int k0 = 0; k0 < steps; ++k0)
      for (int k1 = 0; k1 < steps; ++k1) {
        double acc = accuracy_of(
            {{ps[0].name, value_at(ps[0], k0)}, {ps[1].name, value_at(ps[1], k1)}});
        if (acc > best) best = acc;
      }
  }
  return best;
}

}  // namespace planted
