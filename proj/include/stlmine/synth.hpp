#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stlmine/dataset.hpp"

namespace stlmine {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MealPlan {
  int day = 0;
  int minute = 0;  // minute of day
  int grams = 0;
};

struct ExercisePlan {
  int day = 0;
  int start_minute = 0;
  int duration_minutes = 30;
  int level = 3;   // planted activityLevel during the window
  int steps = 0;   // steps per 5-minute sample inside the window
};

struct SmbgPlan {
  int day = 0;
  int second = 0;  // second of day
};

/// Ground truth for one generated patient, written to the manifest.
struct PlantedPatient {
  std::string id;
  int alpha = 70;  // planted CGM band
  int beta = 180;
  double basal_rate = 0.07;
  int carb_ratio = 10;
  double excursion_rate = 0.0;
  double poor_rate = 0.0;
  int smbg_per_day = 0;
  double in_band_fraction = 1.0;  // self-check over the emitted CGM samples
  std::vector<MealPlan> meals;
  std::vector<ExercisePlan> exercise;
  std::vector<SmbgPlan> smbg;
};

/// Cohort recipe. The generated CGM is a mean-reverting integer walk inside
/// the planted band, shaped by meal rises and exercise dips; a test fixture,
/// not a physiological model. The walk keeps a strict excursion geometry so
/// planted bands are recoverable from labels:
///   in-band samples stay within [alpha+1, beta-1], with each day grazing
///   within 1 to 4 units of both edges;
///   every out-of-band sample sits at least 10 units beyond its edge, and
///   each patient gets one excursion at exactly 10 on each side.
struct SyntheticCohortSpec {
  int patients = 8;
  int days = 3;
  int alpha_lo = 72;  // planted lower bounds drawn from [alpha_lo, alpha_hi]
  int alpha_hi = 77;
  int beta_lo = 173;  // planted upper bounds drawn from [beta_lo, beta_hi]
  int beta_hi = 178;
  double excursion_rate = 0.35;  // chance an unplanned hour leaves the band once
  double poor_rate = 0.0;        // ceiling for multi-sample excursion hours,
                                 // scaled per patient by the quality tier (i mod 4)/3
  int smbg_per_day = 3;          // checks per day, each in its own hour
  double noise = 1.0;            // walk jitter scale
  std::int64_t start_epoch_s = 1767225600;  // 2026-01-01T00:00:00Z, hour aligned
  std::uint64_t seed = 1;

  void validate() const;  // throws SynthError with the offending field
};

struct SyntheticPatient {
  PlantedPatient truth;
  RawRecordStream raw;  // event streams in the input CSV schema
};

struct SyntheticCohort {
  SyntheticCohortSpec spec;
  std::vector<SyntheticPatient> patients;
};

/// Deterministic generation: identical specs give identical cohorts.
SyntheticCohort synth_cohort(const SyntheticCohortSpec& spec);

/// Ground-truth manifest as JSON text (two-space indent, stable ordering).
std::string manifest_json(const SyntheticCohort& cohort);

/// Writes <patient id>.csv per patient in the input schema plus
/// manifest.json under dir. Creates the directory if needed.
void write_cohort_csv(const SyntheticCohort& cohort, const std::string& dir);

}  // namespace stlmine
