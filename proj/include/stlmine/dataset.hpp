#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stlmine/trace.hpp"

namespace stlmine {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw signal channels accepted from input files, in schema column order.
/// `exercising` is derived later and is not part of the input schema.
const std::vector<std::string>& variable_registry();
bool is_registered(const std::string& name);

/// "YYYY-MM-DD[T ]HH:MM:SS[Z]" with a fixed UTC reading -> epoch seconds.
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_s);

/// Irregular per-variable event lists, sorted by timestamp after ingest.
struct RawRecordStream {
  std::map<std::string, std::vector<std::pair<std::int64_t, double>>> events;
  std::vector<std::string> warnings;

  std::int64_t first_timestamp() const;  // throws DatasetError if empty
  std::int64_t last_timestamp() const;
  bool empty() const;
};

/// One patient's signals aligned on the 5-minute grid. cgm_valid[i] is false
/// where the CGM value is synthetic beyond the forward-fill tolerance.
struct PatientSeries {
  std::string patient_id;
  Trace trace;
  std::vector<bool> cgm_valid;
};

/// One hour (12 samples) of a PatientSeries. Chunks whose CGM coverage is
/// too gapped carry valid=false and are excluded from labeling and learning.
struct Chunk {
  std::string patient_id;
  int index = 0;
  std::int64_t start_epoch_s = 0;
  Trace trace;
  bool valid = true;
};

/// Reads one patient CSV (schema in the README). Empty cells are absent
/// readings. Rows out of time order are accepted with a warning and sorted.
RawRecordStream ingest_csv(const std::string& path);

/// Places events on the grid start, start+5min, ..., < end using right-aligned
/// (t-5, t] windows: hr is averaged; steps, calories, distance, boluses and
/// meals are summed; cgm, smbg, smbgHypo and activityLevel keep the last
/// observation. Windows with no events become 0, except CGM which is
/// forward-filled for up to kCgmFillLimit consecutive missing samples and
/// flagged invalid beyond that.
PatientSeries align_resample(const RawRecordStream& raw, std::int64_t start_epoch_s,
                             std::int64_t end_epoch_s, std::string patient_id = {});

inline constexpr int kCgmFillLimit = 2;
inline constexpr int kStepSeconds = 300;
inline constexpr std::size_t kChunkSamples = 12;

/// Adds the derived `exercising` channel: 1 where activityLevel >= 3 or the
/// rolling 6-sample step total (30 minutes, clipped at the series start)
/// reaches 3000, else 0.
PatientSeries detect_exercise(PatientSeries series);

/// Consecutive non-overlapping 12-sample hours starting at the first hour
/// boundary at or after the series start; the trailing partial hour is
/// dropped. A series shorter than one hour yields no chunks plus a warning.
std::vector<Chunk> chunk(const PatientSeries& series,
                         std::vector<std::string>* warnings = nullptr);

/// Bit-stable round-trip serialization of an aligned series.
void write_series_csv(const PatientSeries& series, const std::string& path);
PatientSeries read_series_csv(const std::string& path, std::string patient_id = {});

}  // namespace stlmine
