#include "stlmine/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "stlmine/util.hpp"

namespace stlmine {

namespace {

const std::vector<std::string> kInputColumns = {
    "cgm",  "totalBolus", "mealBolus", "basalBolus", "corrBolus",
    "meal", "smbg",       "smbgHypo",  "hr",         "steps",
    "calories", "distance", "activityLevel"};

enum class Agg { Mean, Sum, Last };

Agg policy_of(const std::string& name) {
  if (name == "hr") return Agg::Mean;
  if (name == "cgm" || name == "smbg" || name == "smbgHypo" || name == "activityLevel")
    return Agg::Last;
  return Agg::Sum;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  return out;
}

}  // namespace

const std::vector<std::string>& variable_registry() {
  static const std::vector<std::string> all = [] {
    std::vector<std::string> v = kInputColumns;
    v.push_back("exercising");
    return v;
  }();
  return all;
}

bool is_registered(const std::string& name) {
  const auto& reg = variable_registry();
  return std::find(reg.begin(), reg.end(), name) != reg.end();
}

std::int64_t parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h,
                  &mi, &s, &consumed) != 7 ||
      (sep != 'T' && sep != ' ')) {
    throw std::invalid_argument("bad timestamp '" + text + "'");
  }
  std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest != "Z")
    throw std::invalid_argument("bad timestamp '" + text + "'");
  std::chrono::year_month_day ymd{std::chrono::year{y},
                                  std::chrono::month{static_cast<unsigned>(mo)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60)
    throw std::invalid_argument("bad timestamp '" + text + "'");
  auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return days * 86400LL + h * 3600LL + mi * 60LL + s;
}

std::string format_iso8601(std::int64_t epoch_s) {
  std::int64_t day = epoch_s / 86400;
  std::int64_t rem = epoch_s % 86400;
  if (rem < 0) {
    rem += 86400;
    --day;
  }
  std::chrono::year_month_day ymd{
      std::chrono::sys_days{std::chrono::days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

std::int64_t RawRecordStream::first_timestamp() const {
  bool any = false;
  std::int64_t best = 0;
  for (const auto& [name, evs] : events)
    if (!evs.empty() && (!any || evs.front().first < best)) {
      best = evs.front().first;
      any = true;
    }
  if (!any) throw DatasetError("record stream is empty");
  return best;
}

std::int64_t RawRecordStream::last_timestamp() const {
  bool any = false;
  std::int64_t best = 0;
  for (const auto& [name, evs] : events)
    if (!evs.empty() && (!any || evs.back().first > best)) {
      best = evs.back().first;
      any = true;
    }
  if (!any) throw DatasetError("record stream is empty");
  return best;
}

bool RawRecordStream::empty() const {
  for (const auto& [name, evs] : events)
    if (!evs.empty()) return false;
  return true;
}

RawRecordStream ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path + ": empty file");

  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "timestamp")
    throw DatasetError(path + ": first column must be 'timestamp'");
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (std::find(kInputColumns.begin(), kInputColumns.end(), header[i]) ==
        kInputColumns.end())
      throw DatasetError(path + ": unknown column '" + header[i] + "'");
    if (std::count(header.begin(), header.end(), header[i]) > 1)
      throw DatasetError(path + ": duplicate column '" + header[i] + "'");
  }

  RawRecordStream raw;
  for (const auto& name : kInputColumns) raw.events[name];

  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DatasetError(path + ": row " + std::to_string(row) + ": expected " +
                         std::to_string(header.size()) + " cells, got " +
                         std::to_string(cells.size()));
    std::int64_t ts;
    try {
      ts = parse_iso8601(cells[0]);
    } catch (const std::invalid_argument& e) {
      throw DatasetError(path + ": row " + std::to_string(row) + ": " + e.what());
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
      if (cells[i].empty()) continue;
      double v;
      try {
        v = parse_double(cells[i]);
      } catch (const std::invalid_argument&) {
        throw DatasetError(path + ": row " + std::to_string(row) + ": bad number '" +
                           cells[i] + "' in column " + header[i]);
      }
      raw.events[header[i]].emplace_back(ts, v);
    }
  }

  for (auto& [name, evs] : raw.events) {
    if (!std::is_sorted(evs.begin(), evs.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
      raw.warnings.push_back(path + ": column " + name +
                             " has out-of-order timestamps; sorted");
      std::stable_sort(evs.begin(), evs.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
    }
  }
  return raw;
}

PatientSeries align_resample(const RawRecordStream& raw, std::int64_t start_epoch_s,
                             std::int64_t end_epoch_s, std::string patient_id) {
  if (start_epoch_s % kStepSeconds != 0)
    throw DatasetError("series start must sit on a 5-minute boundary");
  if (start_epoch_s >= end_epoch_s) throw DatasetError("series start must precede end");
  std::size_t n = static_cast<std::size_t>((end_epoch_s - start_epoch_s) / kStepSeconds);
  if (n == 0) throw DatasetError("series span shorter than one sample period");

  PatientSeries out;
  out.patient_id = std::move(patient_id);
  out.trace.start_epoch_s = start_epoch_s;
  out.trace.step_minutes = 5.0;

  // Index of the right-aligned (t-5, t] window holding an event, or -1.
  auto window_of = [&](std::int64_t ts) -> std::ptrdiff_t {
    std::int64_t delta = ts - start_epoch_s;
    if (delta <= -kStepSeconds) return -1;
    std::ptrdiff_t i = delta <= 0 ? 0 : (delta + kStepSeconds - 1) / kStepSeconds;
    if (i >= static_cast<std::ptrdiff_t>(n)) return -1;
    return i;
  };

  std::vector<bool> cgm_observed(n, false);
  for (const auto& name : kInputColumns) {
    auto& col = out.trace.channels[name];
    col.assign(n, 0.0);
    auto it = raw.events.find(name);
    if (it == raw.events.end()) continue;
    switch (policy_of(name)) {
      case Agg::Mean: {
        std::vector<double> sum(n, 0.0);
        std::vector<int> cnt(n, 0);
        for (const auto& [ts, v] : it->second) {
          auto i = window_of(ts);
          if (i < 0) continue;
          sum[static_cast<std::size_t>(i)] += v;
          ++cnt[static_cast<std::size_t>(i)];
        }
        for (std::size_t i = 0; i < n; ++i)
          if (cnt[i] > 0) col[i] = sum[i] / cnt[i];
        break;
      }
      case Agg::Sum: {
        for (const auto& [ts, v] : it->second) {
          auto i = window_of(ts);
          if (i >= 0) col[static_cast<std::size_t>(i)] += v;
        }
        break;
      }
      case Agg::Last: {
        for (const auto& [ts, v] : it->second) {
          auto i = window_of(ts);
          if (i < 0) continue;
          col[static_cast<std::size_t>(i)] = v;
          if (name == "cgm") cgm_observed[static_cast<std::size_t>(i)] = true;
        }
        break;
      }
    }
  }

  // CGM gaps: forward-fill short runs, flag anything longer (or leading).
  out.cgm_valid.assign(n, true);
  auto& cgm = out.trace.channels["cgm"];
  std::size_t i = 0;
  bool have_prev = false;
  double prev = 0.0;
  while (i < n) {
    if (cgm_observed[i]) {
      prev = cgm[i];
      have_prev = true;
      ++i;
      continue;
    }
    std::size_t run = i;
    while (run < n && !cgm_observed[run]) ++run;
    bool ok = have_prev && (run - i) <= kCgmFillLimit;
    for (std::size_t j = i; j < run; ++j) {
      cgm[j] = have_prev ? prev : 0.0;
      out.cgm_valid[j] = ok;
    }
    i = run;
  }
  return out;
}

PatientSeries detect_exercise(PatientSeries series) {
  const auto& level = series.trace.channel("activityLevel");
  const auto& steps = series.trace.channel("steps");
  std::size_t n = series.trace.size();
  std::vector<double> ex(n, 0.0);
  double rolling = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rolling += steps[i];
    if (i >= 6) rolling -= steps[i - 6];
    if (level[i] >= 3.0 || rolling >= 3000.0) ex[i] = 1.0;
  }
  series.trace.channels["exercising"] = std::move(ex);
  return series;
}

std::vector<Chunk> chunk(const PatientSeries& series, std::vector<std::string>* warnings) {
  std::size_t n = series.trace.size();
  std::int64_t start = series.trace.start_epoch_s;
  std::int64_t mod = ((start % 3600) + 3600) % 3600;
  std::int64_t aligned = start + (3600 - mod) % 3600;
  std::size_t offset = static_cast<std::size_t>((aligned - start) / kStepSeconds);

  std::vector<Chunk> out;
  std::size_t usable = n > offset ? n - offset : 0;
  std::size_t count = usable / kChunkSamples;
  if (count == 0) {
    if (warnings)
      warnings->push_back("series " + series.patient_id +
                          " shorter than one aligned hour; no chunks");
    return out;
  }
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Chunk c;
    c.patient_id = series.patient_id;
    c.index = static_cast<int>(k);
    c.start_epoch_s = aligned + static_cast<std::int64_t>(k) * 3600;
    c.trace.start_epoch_s = c.start_epoch_s;
    c.trace.step_minutes = series.trace.step_minutes;
    std::size_t begin = offset + k * kChunkSamples;
    for (const auto& [name, col] : series.trace.channels)
      c.trace.channels[name] =
          std::vector<double>(col.begin() + static_cast<std::ptrdiff_t>(begin),
                              col.begin() + static_cast<std::ptrdiff_t>(begin + kChunkSamples));
    c.valid = true;
    if (!series.cgm_valid.empty())
      for (std::size_t j = begin; j < begin + kChunkSamples; ++j)
        if (!series.cgm_valid[j]) {
          c.valid = false;
          break;
        }
    out.push_back(std::move(c));
  }
  return out;
}

void write_series_csv(const PatientSeries& series, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw DatasetError("cannot write '" + path + "'");
  std::vector<std::string> cols;
  for (const auto& name : variable_registry())
    if (series.trace.has_channel(name)) cols.push_back(name);
  for (const auto& [name, col] : series.trace.channels)
    if (!is_registered(name)) cols.push_back(name);

  outf << "timestamp";
  for (const auto& c : cols) outf << ',' << c;
  bool with_valid = !series.cgm_valid.empty();
  if (with_valid) outf << ",cgm_valid";
  outf << '\n';
  std::size_t n = series.trace.size();
  for (std::size_t i = 0; i < n; ++i) {
    outf << format_iso8601(series.trace.start_epoch_s +
                           static_cast<std::int64_t>(i) * kStepSeconds);
    for (const auto& c : cols) outf << ',' << format_double(series.trace.channel(c)[i]);
    if (with_valid) outf << ',' << (series.cgm_valid[i] ? 1 : 0);
    outf << '\n';
  }
  if (!outf) throw DatasetError("write failed for '" + path + "'");
}

PatientSeries read_series_csv(const std::string& path, std::string patient_id) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DatasetError(path + ": empty file");
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "timestamp")
    throw DatasetError(path + ": first column must be 'timestamp'");

  PatientSeries out;
  out.patient_id = std::move(patient_id);
  bool with_valid = !header.empty() && header.back() == "cgm_valid";
  std::size_t ncols = header.size() - (with_valid ? 1 : 0);
  for (std::size_t i = 1; i < ncols; ++i) out.trace.channels[header[i]];

  int row = 1;
  bool first = true;
  std::int64_t prev_ts = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DatasetError(path + ": row " + std::to_string(row) + ": cell count mismatch");
    std::int64_t ts = parse_iso8601(cells[0]);
    if (first) {
      out.trace.start_epoch_s = ts;
      first = false;
    } else if (ts != prev_ts + kStepSeconds) {
      throw DatasetError(path + ": row " + std::to_string(row) +
                         ": timestamps must advance by 5 minutes");
    }
    prev_ts = ts;
    for (std::size_t i = 1; i < ncols; ++i)
      out.trace.channels[header[i]].push_back(parse_double(cells[i]));
    if (with_valid) out.cgm_valid.push_back(parse_double(cells.back()) != 0.0);
  }
  return out;
}

}  // namespace stlmine
