#pragma once

#include <stdexcept>

#include "stlmine/stl/ast.hpp"
#include "stlmine/trace.hpp"

namespace stlmine {

class MonitorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Boolean satisfaction of a ground formula at time offset `t_minutes`
/// (a grid point of the trace). Temporal windows are evaluated over the
/// piecewise-constant extension at grid points and clipped to the trace
/// horizon; a window entirely past the end makes Always vacuously true
/// and Eventually false.
bool eval_bool(const Formula& f, const Trace& trace, double t_minutes);

/// Quantitative robustness under the same window conventions. Positive
/// means satisfied with margin, negative violated; comparator strictness
/// is ignored. An empty Always window yields +infinity, an empty
/// Eventually window -infinity.
double robustness(const Formula& f, const Trace& trace, double t_minutes);

}  // namespace stlmine
