#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace stlmine {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Cmp { Ge, Le, Gt, Lt };

const char* cmp_text(Cmp c);

/// Flips the direction of a comparator (Ge<->Le, Gt<->Lt).
Cmp flipped(Cmp c);

enum class ParamKind { Threshold, TimeOffset };

/// Named placeholder with its finite search range, e.g. ?a{0,400}.
struct ParamRef {
  std::string name;
  ParamKind kind = ParamKind::Threshold;
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const ParamRef&) const = default;
};

/// A numeric slot: either a concrete value or a parameter placeholder.
class Value {
 public:
  Value(double v) : slot_(v) {}
  Value(ParamRef p) : slot_(std::move(p)) {}

  bool is_param() const { return std::holds_alternative<ParamRef>(slot_); }
  double number() const;
  const ParamRef& param() const;

  bool operator==(const Value&) const = default;

 private:
  std::variant<double, ParamRef> slot_;
};

/// Time window of a temporal operator, in minutes from the evaluation point.
struct Interval {
  Value lo{0.0};
  Value hi{std::numeric_limits<double>::infinity()};

  static Interval unbounded() { return Interval{}; }
  bool is_unbounded() const;

  bool operator==(const Interval&) const = default;
};

enum class NodeKind { Predicate, Not, And, Or, Always, Eventually, Until };

/// Immutable formula tree with value semantics (nodes shared on copy).
/// A formula with no parameter slots is "ground" and can be evaluated;
/// a parametric one must be instantiated first.
class Formula {
 public:
  struct Node {
    NodeKind kind;
    // Predicate payload
    std::string variable;
    Cmp cmp = Cmp::Ge;
    Value threshold{0.0};
    // Temporal payload
    Interval interval;
    // Children; unary operators use left only
    std::shared_ptr<const Node> left, right;
  };

  static Formula predicate(std::string variable, Cmp cmp, Value threshold);
  static Formula negation(Formula f);
  static Formula conjunction(Formula a, Formula b);
  static Formula disjunction(Formula a, Formula b);
  static Formula always(Interval iv, Formula f);
  static Formula eventually(Interval iv, Formula f);
  static Formula until(Interval iv, Formula a, Formula b);

  NodeKind kind() const { return root_->kind; }
  const Node& node() const { return *root_; }
  Formula left() const;
  Formula right() const;

  int depth() const;
  int node_count() const;
  bool is_ground() const;

  /// Parameters in first-occurrence (preorder) order. Throws
  /// std::invalid_argument if a name is declared twice.
  std::vector<ParamRef> parameters() const;

  /// Pairs of parameter names (lo, hi) that share one temporal interval;
  /// substituting values with lo > hi for such a pair is an error.
  std::vector<std::pair<std::string, std::string>> interval_param_pairs() const;

  /// Substitutes every parameter. Throws std::invalid_argument on a missing
  /// name, an out-of-range value, or an interval inverted by substitution.
  Formula instantiate(const std::map<std::string, double>& assignment) const;

  /// Rewrites Or(a,b) as Not(And(Not a, Not b)). Semantics-preserving.
  Formula desugared() const;

  /// Concrete text form; parse(render(f)) reproduces the tree exactly.
  std::string render() const;

  /// Tree shape with every numeric slot abstracted to '_'. Rules that differ
  /// only in thresholds or window endpoints share a signature.
  std::string signature() const;

  /// Subtree rooted at the preorder index (0 is the whole formula).
  Formula subtree(int preorder_index) const;
  /// Copy with the subtree at the preorder index replaced.
  Formula with_subtree(int preorder_index, const Formula& replacement) const;

  bool operator==(const Formula& other) const;
  bool operator!=(const Formula& other) const { return !(*this == other); }

 private:
  explicit Formula(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

std::string render(const Formula& f);

}  // namespace stlmine
