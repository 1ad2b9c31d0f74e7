#include "stlmine/stl/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "stlmine/util.hpp"

namespace stlmine {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Tolerance (in grid-step units) absorbing float noise in time arithmetic.
constexpr double kGridEps = 1e-9;

using Node = Formula::Node;

struct Context {
  const Trace& trace;
  std::ptrdiff_t n;
  double step;
  // Channel arrays resolved once per evaluation.
  mutable std::unordered_map<const Node*, const std::vector<double>*> resolved;

  const std::vector<double>& samples(const Node& pred) const {
    auto it = resolved.find(&pred);
    if (it != resolved.end()) return *it->second;
    auto ch = trace.channels.find(pred.variable);
    if (ch == trace.channels.end()) {
      throw MonitorError("unknown variable '" + pred.variable + "'");
    }
    resolved.emplace(&pred, &ch->second);
    return ch->second;
  }
};

struct Window {
  std::ptrdiff_t first, last;  // inclusive grid index range; empty if first > last
};

Window window_at(const Context& ctx, std::ptrdiff_t at, const Interval& iv) {
  double lo = iv.lo.number();
  double hi = iv.hi.number();
  double t = static_cast<double>(at) * ctx.step;
  std::ptrdiff_t first =
      std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil((t + lo) / ctx.step - kGridEps)));
  std::ptrdiff_t last = ctx.n - 1;
  if (std::isfinite(hi)) {
    last = std::min<std::ptrdiff_t>(
        last, static_cast<std::ptrdiff_t>(std::floor((t + hi) / ctx.step + kGridEps)));
  }
  return Window{first, last};
}

bool predicate_holds(const Node& node, double v) {
  double c = node.threshold.number();
  switch (node.cmp) {
    case Cmp::Ge: return v >= c;
    case Cmp::Le: return v <= c;
    case Cmp::Gt: return v > c;
    case Cmp::Lt: return v < c;
  }
  return false;
}

double predicate_margin(const Node& node, double v) {
  double c = node.threshold.number();
  switch (node.cmp) {
    case Cmp::Ge:
    case Cmp::Gt: return v - c;
    case Cmp::Le:
    case Cmp::Lt: return c - v;
  }
  return 0;
}

bool eval_at(const Context& ctx, const Node& node, std::ptrdiff_t at) {
  switch (node.kind) {
    case NodeKind::Predicate:
      return predicate_holds(node, ctx.samples(node)[static_cast<std::size_t>(at)]);
    case NodeKind::Not:
      return !eval_at(ctx, *node.left, at);
    case NodeKind::And:
      return eval_at(ctx, *node.left, at) && eval_at(ctx, *node.right, at);
    case NodeKind::Or:
      return eval_at(ctx, *node.left, at) || eval_at(ctx, *node.right, at);
    case NodeKind::Always: {
      Window w = window_at(ctx, at, node.interval);
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        if (!eval_at(ctx, *node.left, j)) return false;
      }
      return true;
    }
    case NodeKind::Eventually: {
      Window w = window_at(ctx, at, node.interval);
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        if (eval_at(ctx, *node.left, j)) return true;
      }
      return false;
    }
    case NodeKind::Until: {
      Window w = window_at(ctx, at, node.interval);
      bool lhs_holds_so_far = true;
      for (std::ptrdiff_t k = at; k < w.first && lhs_holds_so_far; ++k) {
        lhs_holds_so_far = eval_at(ctx, *node.left, k);
      }
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        if (!lhs_holds_so_far) return false;
        if (eval_at(ctx, *node.right, j)) return true;
        lhs_holds_so_far = eval_at(ctx, *node.left, j);
      }
      return false;
    }
  }
  return false;
}

double rob_at(const Context& ctx, const Node& node, std::ptrdiff_t at) {
  switch (node.kind) {
    case NodeKind::Predicate:
      return predicate_margin(node, ctx.samples(node)[static_cast<std::size_t>(at)]);
    case NodeKind::Not:
      return -rob_at(ctx, *node.left, at);
    case NodeKind::And:
      return std::min(rob_at(ctx, *node.left, at), rob_at(ctx, *node.right, at));
    case NodeKind::Or:
      return std::max(rob_at(ctx, *node.left, at), rob_at(ctx, *node.right, at));
    case NodeKind::Always: {
      Window w = window_at(ctx, at, node.interval);
      double acc = kInf;
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        acc = std::min(acc, rob_at(ctx, *node.left, j));
      }
      return acc;
    }
    case NodeKind::Eventually: {
      Window w = window_at(ctx, at, node.interval);
      double acc = -kInf;
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        acc = std::max(acc, rob_at(ctx, *node.left, j));
      }
      return acc;
    }
    case NodeKind::Until: {
      Window w = window_at(ctx, at, node.interval);
      double lhs_min = kInf;
      for (std::ptrdiff_t k = at; k < w.first; ++k) {
        lhs_min = std::min(lhs_min, rob_at(ctx, *node.left, k));
      }
      double acc = -kInf;
      for (std::ptrdiff_t j = w.first; j <= w.last; ++j) {
        acc = std::max(acc, std::min(rob_at(ctx, *node.right, j), lhs_min));
        lhs_min = std::min(lhs_min, rob_at(ctx, *node.left, j));
      }
      return acc;
    }
  }
  return 0;
}

Context make_context(const Formula& f, const Trace& trace, double t_minutes, std::ptrdiff_t& at) {
  if (!f.is_ground()) {
    throw MonitorError("formula has unbound parameters; instantiate it first");
  }
  std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trace.size());
  if (n == 0) throw MonitorError("empty trace");
  double step = trace.step_minutes;
  double pos = t_minutes / step;
  at = static_cast<std::ptrdiff_t>(std::llround(pos));
  if (std::abs(pos - static_cast<double>(at)) > 1e-6) {
    throw MonitorError("time offset " + format_double(t_minutes) + " is not on the sample grid");
  }
  if (at < 0 || at >= n) {
    throw MonitorError("time offset " + format_double(t_minutes) + " outside the trace");
  }
  return Context{trace, n, step, {}};
}

}  // namespace

bool eval_bool(const Formula& f, const Trace& trace, double t_minutes) {
  std::ptrdiff_t at = 0;
  Context ctx = make_context(f, trace, t_minutes, at);
  return eval_at(ctx, f.node(), at);
}

double robustness(const Formula& f, const Trace& trace, double t_minutes) {
  std::ptrdiff_t at = 0;
  Context ctx = make_context(f, trace, t_minutes, at);
  return rob_at(ctx, f.node(), at);
}

}  // namespace stlmine
