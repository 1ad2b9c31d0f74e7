#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlmine {

/// Multivariate signal sampled on a uniform grid. Sample i of every channel
/// is at absolute time start_epoch_s + i * step_minutes * 60. Immutable by
/// convention once filled; evaluation never mutates a trace.
struct Trace {
  std::int64_t start_epoch_s = 0;
  double step_minutes = 5.0;
  std::map<std::string, std::vector<double>> channels;

  /// Samples per channel. Throws if channels have unequal lengths.
  std::size_t size() const;

  bool has_channel(const std::string& name) const { return channels.count(name) != 0; }

  const std::vector<double>& channel(const std::string& name) const;

  /// Total time span covered by the grid, in minutes (0 for a single sample).
  double horizon_minutes() const { return size() == 0 ? 0.0 : (size() - 1) * step_minutes; }
};

}  // namespace stlmine
