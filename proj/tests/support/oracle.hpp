#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "stlmine/stl/ast.hpp"
#include "stlmine/trace.hpp"

// Definition-literal semantics used as an independent check of the monitor.
// Windows are found by scanning every grid point and testing time membership,
// and Until re-scans its prefix for every candidate witness. Quadratic and
// slow on purpose; keep this header free of monitor.hpp so the two
// evaluation routes never share index arithmetic.

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kTimeEps = 1e-9;

inline std::vector<std::size_t> window_indices(const stlmine::Trace& tr,
                                               double t, double lo, double hi) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < tr.size(); ++j) {
    double tj = static_cast<double>(j) * tr.step_minutes;
    if (tj >= t + lo - kTimeEps && tj <= t + hi + kTimeEps) out.push_back(j);
  }
  return out;
}

inline std::size_t index_of(const stlmine::Trace& tr, double t) {
  for (std::size_t j = 0; j < tr.size(); ++j) {
    double tj = static_cast<double>(j) * tr.step_minutes;
    if (tj >= t - kTimeEps && tj <= t + kTimeEps) return j;
  }
  throw std::runtime_error("oracle: t is not a grid point");
}

inline double margin(const stlmine::Formula::Node& nd, double v) {
  double c = nd.threshold.number();
  switch (nd.cmp) {
    case stlmine::Cmp::Ge:
    case stlmine::Cmp::Gt:
      return v - c;
    default:
      return c - v;
  }
}

inline bool holds(const stlmine::Formula::Node& nd, double v) {
  double c = nd.threshold.number();
  switch (nd.cmp) {
    case stlmine::Cmp::Ge: return v >= c;
    case stlmine::Cmp::Gt: return v > c;
    case stlmine::Cmp::Le: return v <= c;
    case stlmine::Cmp::Lt: return v < c;
  }
  return false;
}

inline double rob(const stlmine::Formula& f, const stlmine::Trace& tr, double t);

inline double rob_node(const stlmine::Formula& f, const stlmine::Trace& tr,
                       double t) {
  using stlmine::NodeKind;
  const auto& nd = f.node();
  switch (f.kind()) {
    case NodeKind::Predicate:
      return margin(nd, tr.channel(nd.variable).at(index_of(tr, t)));
    case NodeKind::Not:
      return -rob(f.left(), tr, t);
    case NodeKind::And:
      return std::min(rob(f.left(), tr, t), rob(f.right(), tr, t));
    case NodeKind::Or:
      return std::max(rob(f.left(), tr, t), rob(f.right(), tr, t));
    case NodeKind::Always: {
      double best = kInf;
      for (std::size_t j :
           window_indices(tr, t, nd.interval.lo.number(), nd.interval.hi.number()))
        best = std::min(best, rob(f.left(), tr, static_cast<double>(j) * tr.step_minutes));
      return best;
    }
    case NodeKind::Eventually: {
      double best = -kInf;
      for (std::size_t j :
           window_indices(tr, t, nd.interval.lo.number(), nd.interval.hi.number()))
        best = std::max(best, rob(f.left(), tr, static_cast<double>(j) * tr.step_minutes));
      return best;
    }
    case NodeKind::Until: {
      std::size_t at = index_of(tr, t);
      double best = -kInf;
      for (std::size_t j : window_indices(tr, t, nd.interval.lo.number(),
                                          nd.interval.hi.number())) {
        double v = rob(f.right(), tr, static_cast<double>(j) * tr.step_minutes);
        for (std::size_t k = at; k < j; ++k)
          v = std::min(v, rob(f.left(), tr, static_cast<double>(k) * tr.step_minutes));
        best = std::max(best, v);
      }
      return best;
    }
  }
  throw std::runtime_error("oracle: unreachable");
}

inline double rob(const stlmine::Formula& f, const stlmine::Trace& tr, double t) {
  return rob_node(f, tr, t);
}

inline bool sat(const stlmine::Formula& f, const stlmine::Trace& tr, double t) {
  using stlmine::NodeKind;
  const auto& nd = f.node();
  switch (f.kind()) {
    case NodeKind::Predicate:
      return holds(nd, tr.channel(nd.variable).at(index_of(tr, t)));
    case NodeKind::Not:
      return !sat(f.left(), tr, t);
    case NodeKind::And:
      return sat(f.left(), tr, t) && sat(f.right(), tr, t);
    case NodeKind::Or:
      return sat(f.left(), tr, t) || sat(f.right(), tr, t);
    case NodeKind::Always: {
      for (std::size_t j :
           window_indices(tr, t, nd.interval.lo.number(), nd.interval.hi.number()))
        if (!sat(f.left(), tr, static_cast<double>(j) * tr.step_minutes)) return false;
      return true;
    }
    case NodeKind::Eventually: {
      for (std::size_t j :
           window_indices(tr, t, nd.interval.lo.number(), nd.interval.hi.number()))
        if (sat(f.left(), tr, static_cast<double>(j) * tr.step_minutes)) return true;
      return false;
    }
    case NodeKind::Until: {
      std::size_t at = index_of(tr, t);
      for (std::size_t j : window_indices(tr, t, nd.interval.lo.number(),
                                          nd.interval.hi.number())) {
        if (!sat(f.right(), tr, static_cast<double>(j) * tr.step_minutes)) continue;
        bool prefix = true;
        for (std::size_t k = at; k < j; ++k)
          if (!sat(f.left(), tr, static_cast<double>(k) * tr.step_minutes)) {
            prefix = false;
            break;
          }
        if (prefix) return true;
      }
      return false;
    }
  }
  throw std::runtime_error("oracle: unreachable");
}

}  // namespace oracle
