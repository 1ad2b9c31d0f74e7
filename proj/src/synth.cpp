#include "stlmine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "stlmine/report.hpp"
#include "stlmine/util.hpp"

namespace stlmine {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kSamplesPerDay = 288;
constexpr int kHoursPerDay = 24;

int int_in(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

double real01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

enum class HourKind { Mid, GrazeLow, GrazeHigh, NegLow, NegHigh, Poor };

struct HourPlan {
  HourKind kind = HourKind::Mid;
  int graze = 2;                                 // units inside the band edge
  int depth = 10;                                // units beyond the band edge
  int slot = 6;                                  // excursion sample within the hour
  double corr_bolus = 0.0;                       // dose after a high excursion
  std::vector<std::pair<int, int>> poor_values;  // (slot, value) overwrites
};

double tenth(long long k) { return decimal_product(k, 0.1); }
double thousandth(long long k) { return decimal_product(k, 0.001); }

struct PatientBuild {
  PlantedPatient truth;
  std::vector<HourPlan> plans;       // one per hour
  std::vector<int> cgm;              // per 5-minute sample
  std::vector<int> act_level;        // activityLevel where > 0
  std::vector<int> ex_steps;         // planned steps during windows, else 0
  std::map<int, double> meal_bolus;  // sample index -> dose
  std::map<int, double> corr_bolus;
  int hr_base = 68;
};

void plan_patient(const SyntheticCohortSpec& spec, int index, std::mt19937_64& rng,
                  PatientBuild* b) {
  PlantedPatient& t = b->truth;
  char idbuf[16];
  std::snprintf(idbuf, sizeof(idbuf), "p%02d", index + 1);
  t.id = idbuf;
  t.alpha = int_in(rng, spec.alpha_lo, spec.alpha_hi);
  t.beta = int_in(rng, spec.beta_lo, spec.beta_hi);
  t.basal_rate = thousandth(int_in(rng, 60, 100));
  t.carb_ratio = int_in(rng, 8, 12);
  t.excursion_rate = spec.excursion_rate;
  t.poor_rate = spec.poor_rate * (index % 4) / 3.0;
  t.smbg_per_day = spec.smbg_per_day;
  b->hr_base = int_in(rng, 62, 74);

  int n = spec.days * kSamplesPerDay;
  b->plans.assign(static_cast<std::size_t>(spec.days) * kHoursPerDay, HourPlan{});
  b->cgm.assign(n, 0);
  b->act_level.assign(n, 0);
  b->ex_steps.assign(n, 0);

  auto mark_window = [&](int day, int start_minute, int duration, int level, int steps) {
    int from = day * kSamplesPerDay + start_minute / 5;
    int to = from + duration / 5;
    for (int i = from; i < to && i < n; ++i) {
      b->act_level[i] = level;
      b->ex_steps[i] = steps;
    }
    t.exercise.push_back({day, start_minute, duration, level, steps});
  };

  bool neg_high_next = true;  // alternate unplanned excursion sides
  for (int d = 0; d < spec.days; ++d) {
    HourPlan* day_plans = &b->plans[static_cast<std::size_t>(d) * kHoursPerDay];

    int e_hour = int_in(rng, 14, 18);
    const int durations[] = {30, 45, 60};
    mark_window(d, e_hour * 60, durations[rng() % 3], 3 + static_cast<int>(rng() % 2),
                int_in(rng, 520, 650));
    if (real01(rng) < 0.5) {
      // brisk walk: step volume trips the detector, activity level stays low
      mark_window(d, int_in(rng, 9, 11) * 60, 30, 2, int_in(rng, 520, 650));
    }
    if (real01(rng) < 0.3) {
      // low-motion session: activity level trips the detector, steps stay low
      mark_window(d, int_in(rng, 20, 21) * 60, 30, 3, int_in(rng, 30, 80));
    }

    int m0 = int_in(rng, 6, 8);
    int m1 = int_in(rng, 11, 13);
    int m2 = int_in(rng, 17, 19);
    for (int mh : {m0, m1, m2}) {
      int grams = int_in(rng, 25, 85);
      int minute = mh * 60 + int_in(rng, 5, 45);
      t.meals.push_back({d, minute, grams});
      int bolus_at = d * kSamplesPerDay + (minute + 10 + 4) / 5;
      if (bolus_at < n) {
        b->meal_bolus[bolus_at] += tenth(std::llround(grams * 10.0 / t.carb_ratio));
      }
    }

    std::vector<int> hours(kHoursPerDay);
    for (int h = 0; h < kHoursPerDay; ++h) hours[h] = h;
    for (int h = kHoursPerDay - 1; h > 0; --h) std::swap(hours[h], hours[rng() % (h + 1)]);
    for (int k = 0; k < spec.smbg_per_day; ++k) {
      t.smbg.push_back({d, hours[k] * 3600 + int_in(rng, 0, 54) * 60 + int_in(rng, 0, 59)});
    }

    auto set_kind = [&](int hour, HourKind kind, int depth) {
      HourPlan& hp = day_plans[hour];
      hp.kind = kind;
      hp.graze = int_in(rng, 1, 4);
      hp.depth = depth;
      hp.slot = int_in(rng, 2, 9);
      if (kind == HourKind::NegHigh) hp.corr_bolus = int_in(rng, 2, 6) * 0.5;
    };

    // daily anchors: a controlled dip after exercise, a controlled rise
    // after breakfast; day 0 adds one excursion at depth exactly 10 per side
    set_kind(e_hour + 1, HourKind::GrazeLow, 10);
    set_kind(m0 + 1, HourKind::GrazeHigh, 10);
    if (d == 0) {
      set_kind(e_hour + 2, HourKind::NegLow, 10);
      set_kind(m1 + 1, HourKind::NegHigh, 10);
    }

    for (int h = 0; h < kHoursPerDay; ++h) {
      if (day_plans[h].kind != HourKind::Mid) continue;
      double u = real01(rng);
      if (u < t.excursion_rate) {
        set_kind(h, neg_high_next ? HourKind::NegHigh : HourKind::NegLow, int_in(rng, 10, 30));
        neg_high_next = !neg_high_next;
      } else if (u < t.excursion_rate + t.poor_rate) {
        HourPlan& hp = day_plans[h];
        hp.kind = HourKind::Poor;
        int n_out = int_in(rng, 3, 11);
        std::vector<int> slots(12);
        for (int s = 0; s < 12; ++s) slots[s] = s;
        for (int s = 11; s > 0; --s) std::swap(slots[s], slots[rng() % (s + 1)]);
        for (int k = 0; k < n_out; ++k) {
          int v = rng() % 2 ? t.beta + int_in(rng, 10, 40) : t.alpha - int_in(rng, 10, 40);
          hp.poor_values.push_back({slots[k], v});
        }
      }
    }
  }
  std::sort(t.smbg.begin(), t.smbg.end(), [](const SmbgPlan& a, const SmbgPlan& b2) {
    return a.day * 86400 + a.second < b2.day * 86400 + b2.second;
  });
}

void fill_cgm(const SyntheticCohortSpec& spec, std::mt19937_64& rng, PatientBuild* b) {
  const PlantedPatient& t = b->truth;
  double mid = (t.alpha + t.beta) / 2.0;
  double v = mid;
  std::normal_distribution<double> gauss(0.0, 1.0);
  int hour_count = static_cast<int>(b->plans.size());
  for (int hour = 0; hour < hour_count; ++hour) {
    const HourPlan& hp = b->plans[hour];
    int lo = t.alpha + 5;
    int hi = t.beta - 5;
    double target = mid;
    switch (hp.kind) {
      case HourKind::Mid:
        break;
      case HourKind::GrazeLow:
        lo = t.alpha + hp.graze;
        target = t.alpha + hp.graze + 5;
        break;
      case HourKind::GrazeHigh:
        hi = t.beta - hp.graze;
        target = t.beta - hp.graze - 5;
        break;
      case HourKind::NegLow:
      case HourKind::NegHigh:
      case HourKind::Poor:
        lo = t.alpha + 4;
        hi = t.beta - 4;
        break;
    }
    int base = hour * 12;
    for (int s = 0; s < 12; ++s) {
      double goal = target;
      if (b->act_level[base + s] >= 3) goal -= 8.0;  // exercise dips the walk
      v += 0.35 * (goal - v) + 4.0 * spec.noise * gauss(rng);
      int x = static_cast<int>(std::llround(v));
      x = std::clamp(x, lo, hi);
      b->cgm[base + s] = x;
      v = x;
    }
    switch (hp.kind) {
      case HourKind::GrazeLow:
        b->cgm[base + hp.slot] = t.alpha + hp.graze;
        break;
      case HourKind::GrazeHigh:
        b->cgm[base + hp.slot] = t.beta - hp.graze;
        break;
      case HourKind::NegLow:
        b->cgm[base + hp.slot] = t.alpha - hp.depth;
        break;
      case HourKind::NegHigh:
        b->cgm[base + hp.slot] = t.beta + hp.depth;
        if (hp.corr_bolus > 0.0) {
          b->corr_bolus[base + std::min(hp.slot + 2, 11)] += hp.corr_bolus;
        }
        break;
      case HourKind::Poor:
        for (const auto& [slot, value] : hp.poor_values) b->cgm[base + slot] = value;
        break;
      case HourKind::Mid:
        break;
    }
  }
  int inside = 0;
  for (int x : b->cgm) {
    if (x >= t.alpha && x <= t.beta) ++inside;
  }
  b->truth.in_band_fraction =
      b->cgm.empty() ? 1.0 : static_cast<double>(inside) / static_cast<double>(b->cgm.size());
}

void emit_events(const SyntheticCohortSpec& spec, std::mt19937_64& rng, PatientBuild* b,
                 RawRecordStream* raw) {
  const PlantedPatient& t = b->truth;
  auto put = [raw](const char* channel, std::int64_t ts, double value) {
    raw->events[channel].push_back({ts, value});
  };
  long long basal_milli = std::llround(t.basal_rate * 1000.0);
  int n = static_cast<int>(b->cgm.size());
  for (int i = 0; i < n; ++i) {
    std::int64_t ts = spec.start_epoch_s + static_cast<std::int64_t>(i) * 300;
    put("cgm", ts, b->cgm[i]);

    bool working_out = b->act_level[i] >= 3 || b->ex_steps[i] >= 400;
    int hr = b->hr_base + (working_out ? 45 + int_in(rng, 0, 14) : int_in(rng, -3, 3));
    put("hr", ts, hr);

    int minute_of_day = i % kSamplesPerDay * 5;
    int steps = 0;
    if (b->ex_steps[i] > 0) {
      steps = b->ex_steps[i] + int_in(rng, 0, 30);
    } else if (minute_of_day >= 420 && minute_of_day < 1320) {
      steps = rng() % 2 ? int_in(rng, 0, 150) : 0;
    } else if (rng() % 10 == 0) {
      steps = int_in(rng, 0, 20);
    }
    if (steps > 0) {
      put("steps", ts, steps);
      put("calories", ts, tenth(std::llround(steps * 0.5)));
      put("distance", ts, decimal_product(std::llround(steps * 7.0), 0.0001));
    }
    if (b->act_level[i] > 0) put("activityLevel", ts, b->act_level[i]);

    double basal = b->act_level[i] >= 3 ? thousandth(basal_milli * 8 / 10)
                                        : thousandth(basal_milli);
    put("basalBolus", ts, basal);
    double total = basal;
    if (auto it = b->meal_bolus.find(i); it != b->meal_bolus.end()) {
      put("mealBolus", ts, it->second);
      total += it->second;
    }
    if (auto it = b->corr_bolus.find(i); it != b->corr_bolus.end()) {
      put("corrBolus", ts, it->second);
      total += it->second;
    }
    put("totalBolus", ts, total);
  }
  for (const MealPlan& m : t.meals) {
    std::int64_t ts = spec.start_epoch_s + static_cast<std::int64_t>(m.day) * 86400 +
                      static_cast<std::int64_t>(m.minute) * 60 + int_in(rng, 0, 59);
    put("meal", ts, m.grams);
  }
  for (const SmbgPlan& s : t.smbg) {
    std::int64_t ts = spec.start_epoch_s + static_cast<std::int64_t>(s.day) * 86400 + s.second;
    int sample = s.day * kSamplesPerDay + (s.second + 299) / 300;
    if (sample >= n) sample = n - 1;
    int value = b->cgm[sample] + int_in(rng, -8, 8);
    put("smbg", ts, value);
    if (value < 70) put("smbgHypo", ts, value);
  }
  for (auto& [channel, events] : raw->events) {
    std::sort(events.begin(), events.end(),
              [](const auto& a, const auto& b2) { return a.first < b2.first; });
  }
}

}  // namespace

void SyntheticCohortSpec::validate() const {
  if (patients < 0) throw SynthError("patients must be >= 0");
  if (days < 1) throw SynthError("days must be >= 1");
  if (alpha_lo > alpha_hi) throw SynthError("alpha_lo must be <= alpha_hi");
  if (beta_lo > beta_hi) throw SynthError("beta_lo must be <= beta_hi");
  if (alpha_lo < 45) throw SynthError("alpha_lo must be >= 45 to keep excursions positive");
  if (beta_hi > 350) throw SynthError("beta_hi must be <= 350 to stay in sensor range");
  if (beta_lo - alpha_hi < 30) throw SynthError("band too narrow: need beta_lo - alpha_hi >= 30");
  if (excursion_rate < 0.0 || excursion_rate > 1.0)
    throw SynthError("excursion_rate must be in [0,1]");
  if (poor_rate < 0.0 || poor_rate > 1.0) throw SynthError("poor_rate must be in [0,1]");
  if (excursion_rate + poor_rate > 1.0)
    throw SynthError("excursion_rate + poor_rate must be <= 1");
  if (smbg_per_day < 0 || smbg_per_day > 23) throw SynthError("smbg_per_day must be in [0,23]");
  if (noise < 0.0 || noise > 5.0) throw SynthError("noise must be in [0,5]");
  if (start_epoch_s % 3600 != 0) throw SynthError("start_epoch_s must be hour aligned");
}

SyntheticCohort synth_cohort(const SyntheticCohortSpec& spec) {
  spec.validate();
  SyntheticCohort cohort;
  cohort.spec = spec;
  for (int p = 0; p < spec.patients; ++p) {
    std::mt19937_64 rng(mix_seed(spec.seed, static_cast<std::uint64_t>(p) + 101));
    PatientBuild build;
    plan_patient(spec, p, rng, &build);
    fill_cgm(spec, rng, &build);
    SyntheticPatient patient;
    emit_events(spec, rng, &build, &patient.raw);
    patient.truth = std::move(build.truth);
    cohort.patients.push_back(std::move(patient));
  }
  return cohort;
}

std::string manifest_json(const SyntheticCohort& cohort) {
  const SyntheticCohortSpec& spec = cohort.spec;
  ordered_json j;
  j["spec"] = {{"patients", spec.patients},
               {"days", spec.days},
               {"alpha_lo", spec.alpha_lo},
               {"alpha_hi", spec.alpha_hi},
               {"beta_lo", spec.beta_lo},
               {"beta_hi", spec.beta_hi},
               {"excursion_rate", spec.excursion_rate},
               {"poor_rate", spec.poor_rate},
               {"smbg_per_day", spec.smbg_per_day},
               {"noise", spec.noise},
               {"start_epoch_s", spec.start_epoch_s},
               {"seed", spec.seed}};
  j["patients"] = ordered_json::array();
  for (const SyntheticPatient& p : cohort.patients) {
    const PlantedPatient& t = p.truth;
    ordered_json e;
    e["id"] = t.id;
    e["alpha"] = t.alpha;
    e["beta"] = t.beta;
    e["basal_rate"] = t.basal_rate;
    e["carb_ratio"] = t.carb_ratio;
    e["excursion_rate"] = t.excursion_rate;
    e["poor_rate"] = t.poor_rate;
    e["smbg_per_day"] = t.smbg_per_day;
    e["in_band_fraction"] = t.in_band_fraction;
    e["meals"] = ordered_json::array();
    for (const MealPlan& m : t.meals) {
      e["meals"].push_back({{"day", m.day}, {"minute", m.minute}, {"grams", m.grams}});
    }
    e["exercise"] = ordered_json::array();
    for (const ExercisePlan& w : t.exercise) {
      e["exercise"].push_back({{"day", w.day},
                               {"start_minute", w.start_minute},
                               {"duration_minutes", w.duration_minutes},
                               {"level", w.level},
                               {"steps", w.steps}});
    }
    e["smbg"] = ordered_json::array();
    for (const SmbgPlan& s : t.smbg) {
      e["smbg"].push_back({{"day", s.day}, {"second", s.second}});
    }
    j["patients"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

void write_cohort_csv(const SyntheticCohort& cohort, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SynthError("cannot create directory " + dir + ": " + ec.message());

  const std::vector<std::string> columns = {
      "cgm",  "totalBolus", "mealBolus", "basalBolus", "corrBolus",
      "meal", "smbg",       "smbgHypo",  "hr",         "steps",
      "calories", "distance", "activityLevel"};
  for (const SyntheticPatient& p : cohort.patients) {
    std::map<std::int64_t, std::map<std::size_t, std::string>> rows;
    for (const auto& [channel, events] : p.raw.events) {
      auto col = std::find(columns.begin(), columns.end(), channel);
      if (col == columns.end()) throw SynthError("unknown channel " + channel);
      std::size_t idx = static_cast<std::size_t>(col - columns.begin());
      for (const auto& [ts, value] : events) rows[ts][idx] = format_double(value);
    }
    std::string body = "timestamp";
    for (const std::string& c : columns) body += "," + c;
    body += "\n";
    for (const auto& [ts, cells] : rows) {
      body += format_iso8601(ts);
      for (std::size_t i = 0; i < columns.size(); ++i) {
        body += ",";
        if (auto it = cells.find(i); it != cells.end()) body += it->second;
      }
      body += "\n";
    }
    write_text_file((fs::path(dir) / (p.truth.id + ".csv")).string(), body);
  }
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest_json(cohort));
}

}  // namespace stlmine
