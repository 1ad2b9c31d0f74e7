#include "stlmine/stl/ast.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stlmine/util.hpp"

namespace stlmine {

namespace {

using NodePtr = std::shared_ptr<const Formula::Node>;

NodePtr make_node(Formula::Node n) { return std::make_shared<const Formula::Node>(std::move(n)); }

bool value_equal(const Value& a, const Value& b) { return a == b; }

bool node_equal(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case NodeKind::Predicate:
      return a->variable == b->variable && a->cmp == b->cmp &&
             value_equal(a->threshold, b->threshold);
    case NodeKind::Not:
      return node_equal(a->left, b->left);
    case NodeKind::And:
    case NodeKind::Or:
      return node_equal(a->left, b->left) && node_equal(a->right, b->right);
    case NodeKind::Always:
    case NodeKind::Eventually:
      return a->interval == b->interval && node_equal(a->left, b->left);
    case NodeKind::Until:
      return a->interval == b->interval && node_equal(a->left, b->left) &&
             node_equal(a->right, b->right);
  }
  return false;
}

int node_depth(const NodePtr& n) {
  if (!n) return 0;
  return 1 + std::max(node_depth(n->left), node_depth(n->right));
}

int count_nodes(const NodePtr& n) {
  if (!n) return 0;
  return 1 + count_nodes(n->left) + count_nodes(n->right);
}

void walk(const NodePtr& n, const std::function<void(const Formula::Node&)>& fn) {
  if (!n) return;
  fn(*n);
  walk(n->left, fn);
  walk(n->right, fn);
}

bool has_interval(NodeKind k) {
  return k == NodeKind::Always || k == NodeKind::Eventually || k == NodeKind::Until;
}

std::string value_text(const Value& v) {
  if (!v.is_param()) return format_double(v.number());
  const ParamRef& p = v.param();
  return "?" + p.name + "{" + format_double(p.lo) + "," + format_double(p.hi) + "}";
}

std::string interval_text(const Interval& iv) {
  if (iv.is_unbounded()) return "";
  return "[" + value_text(iv.lo) + "," + value_text(iv.hi) + "]";
}

bool is_atom(const NodePtr& n) { return n->kind == NodeKind::Predicate; }

// Grammar terms are atoms or parenthesized formulas; everything that is not
// an atom gets wrapped when it appears in a term position.
std::string term_text(const NodePtr& n, const std::function<std::string(const NodePtr&)>& rec) {
  if (is_atom(n)) return rec(n);
  return "(" + rec(n) + ")";
}

std::string render_node(const NodePtr& n) {
  std::function<std::string(const NodePtr&)> rec = [&](const NodePtr& node) -> std::string {
    switch (node->kind) {
      case NodeKind::Predicate:
        return node->variable + " " + cmp_text(node->cmp) + " " + value_text(node->threshold);
      case NodeKind::Not:
        return "!" + term_text(node->left, rec);
      case NodeKind::And:
        return term_text(node->left, rec) + " & " + term_text(node->right, rec);
      case NodeKind::Or:
        return term_text(node->left, rec) + " | " + term_text(node->right, rec);
      case NodeKind::Always:
        return "G" + interval_text(node->interval) + "(" + rec(node->left) + ")";
      case NodeKind::Eventually:
        return "F" + interval_text(node->interval) + "(" + rec(node->left) + ")";
      case NodeKind::Until:
        return "(" + rec(node->left) + ") U" + interval_text(node->interval) + " (" +
               rec(node->right) + ")";
    }
    return {};
  };
  return rec(n);
}

std::string signature_node(const NodePtr& n) {
  std::function<std::string(const NodePtr&)> rec = [&](const NodePtr& node) -> std::string {
    switch (node->kind) {
      case NodeKind::Predicate:
        return node->variable + " " + cmp_text(node->cmp) + " _";
      case NodeKind::Not:
        return "!(" + rec(node->left) + ")";
      case NodeKind::And:
        return "(" + rec(node->left) + ") & (" + rec(node->right) + ")";
      case NodeKind::Or:
        return "(" + rec(node->left) + ") | (" + rec(node->right) + ")";
      case NodeKind::Always:
        return "G[_](" + rec(node->left) + ")";
      case NodeKind::Eventually:
        return "F[_](" + rec(node->left) + ")";
      case NodeKind::Until:
        return "(" + rec(node->left) + ") U[_] (" + rec(node->right) + ")";
    }
    return {};
  };
  return rec(n);
}

Value substituted(const Value& v, const std::map<std::string, double>& assignment) {
  if (!v.is_param()) return v;
  const ParamRef& p = v.param();
  auto it = assignment.find(p.name);
  if (it == assignment.end()) {
    throw std::invalid_argument("missing parameter '" + p.name + "'");
  }
  double x = it->second;
  if (x < p.lo || x > p.hi) {
    throw std::invalid_argument("parameter '" + p.name + "' value " + format_double(x) +
                                " outside declared range [" + format_double(p.lo) + "," +
                                format_double(p.hi) + "]");
  }
  return Value(x);
}

NodePtr instantiate_node(const NodePtr& n, const std::map<std::string, double>& assignment) {
  Formula::Node out = *n;
  if (n->kind == NodeKind::Predicate) {
    out.threshold = substituted(n->threshold, assignment);
  }
  if (has_interval(n->kind)) {
    out.interval.lo = substituted(n->interval.lo, assignment);
    out.interval.hi = substituted(n->interval.hi, assignment);
    if (out.interval.lo.number() > out.interval.hi.number()) {
      throw std::invalid_argument("interval inverted after substitution: [" +
                                  format_double(out.interval.lo.number()) + "," +
                                  format_double(out.interval.hi.number()) + "]");
    }
  }
  if (n->left) out.left = instantiate_node(n->left, assignment);
  if (n->right) out.right = instantiate_node(n->right, assignment);
  return make_node(std::move(out));
}

NodePtr desugar_node(const NodePtr& n) {
  if (!n) return nullptr;
  Formula::Node out = *n;
  out.left = desugar_node(n->left);
  out.right = desugar_node(n->right);
  if (n->kind == NodeKind::Or) {
    auto neg = [](NodePtr child) {
      Formula::Node m;
      m.kind = NodeKind::Not;
      m.left = std::move(child);
      return make_node(std::move(m));
    };
    Formula::Node conj;
    conj.kind = NodeKind::And;
    conj.left = neg(out.left);
    conj.right = neg(out.right);
    Formula::Node top;
    top.kind = NodeKind::Not;
    top.left = make_node(std::move(conj));
    return make_node(std::move(top));
  }
  return make_node(std::move(out));
}

NodePtr subtree_at(const NodePtr& n, int target, int& cursor) {
  if (!n) return nullptr;
  if (cursor == target) return n;
  ++cursor;
  if (NodePtr hit = subtree_at(n->left, target, cursor)) return hit;
  return subtree_at(n->right, target, cursor);
}

NodePtr replace_at(const NodePtr& n, int target, const NodePtr& replacement, int& cursor) {
  if (!n) return nullptr;
  if (cursor == target) {
    ++cursor;
    cursor += count_nodes(n) - 1;
    return replacement;
  }
  ++cursor;
  Formula::Node out = *n;
  out.left = replace_at(n->left, target, replacement, cursor);
  out.right = replace_at(n->right, target, replacement, cursor);
  return make_node(std::move(out));
}

}  // namespace

const char* cmp_text(Cmp c) {
  switch (c) {
    case Cmp::Ge: return ">=";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Lt: return "<";
  }
  return "?";
}

Cmp flipped(Cmp c) {
  switch (c) {
    case Cmp::Ge: return Cmp::Le;
    case Cmp::Le: return Cmp::Ge;
    case Cmp::Gt: return Cmp::Lt;
    case Cmp::Lt: return Cmp::Gt;
  }
  return c;
}

double Value::number() const {
  if (is_param()) throw std::logic_error("value is a parameter placeholder");
  return std::get<double>(slot_);
}

const ParamRef& Value::param() const {
  if (!is_param()) throw std::logic_error("value is a concrete number");
  return std::get<ParamRef>(slot_);
}

bool Interval::is_unbounded() const {
  return !lo.is_param() && !hi.is_param() && lo.number() == 0.0 &&
         std::isinf(hi.number()) && hi.number() > 0;
}

Formula Formula::predicate(std::string variable, Cmp cmp, Value threshold) {
  Node n;
  n.kind = NodeKind::Predicate;
  n.variable = std::move(variable);
  n.cmp = cmp;
  n.threshold = std::move(threshold);
  return Formula(make_node(std::move(n)));
}

Formula Formula::negation(Formula f) {
  Node n;
  n.kind = NodeKind::Not;
  n.left = std::move(f.root_);
  return Formula(make_node(std::move(n)));
}

Formula Formula::conjunction(Formula a, Formula b) {
  Node n;
  n.kind = NodeKind::And;
  n.left = std::move(a.root_);
  n.right = std::move(b.root_);
  return Formula(make_node(std::move(n)));
}

Formula Formula::disjunction(Formula a, Formula b) {
  Node n;
  n.kind = NodeKind::Or;
  n.left = std::move(a.root_);
  n.right = std::move(b.root_);
  return Formula(make_node(std::move(n)));
}

namespace {
void check_interval(const Interval& iv) {
  if (!iv.lo.is_param() && (iv.lo.number() < 0 || std::isnan(iv.lo.number()))) {
    throw std::invalid_argument("interval lower bound must be non-negative");
  }
  if (!iv.lo.is_param() && !iv.hi.is_param() && iv.lo.number() > iv.hi.number()) {
    throw std::invalid_argument("malformed interval: lower bound exceeds upper bound");
  }
}
}  // namespace

Formula Formula::always(Interval iv, Formula f) {
  check_interval(iv);
  Node n;
  n.kind = NodeKind::Always;
  n.interval = std::move(iv);
  n.left = std::move(f.root_);
  return Formula(make_node(std::move(n)));
}

Formula Formula::eventually(Interval iv, Formula f) {
  check_interval(iv);
  Node n;
  n.kind = NodeKind::Eventually;
  n.interval = std::move(iv);
  n.left = std::move(f.root_);
  return Formula(make_node(std::move(n)));
}

Formula Formula::until(Interval iv, Formula a, Formula b) {
  check_interval(iv);
  Node n;
  n.kind = NodeKind::Until;
  n.interval = std::move(iv);
  n.left = std::move(a.root_);
  n.right = std::move(b.root_);
  return Formula(make_node(std::move(n)));
}

Formula Formula::left() const {
  if (!root_->left) throw std::logic_error("node has no left child");
  return Formula(root_->left);
}

Formula Formula::right() const {
  if (!root_->right) throw std::logic_error("node has no right child");
  return Formula(root_->right);
}

int Formula::depth() const { return node_depth(root_); }

int Formula::node_count() const { return count_nodes(root_); }

bool Formula::is_ground() const {
  bool ground = true;
  walk(root_, [&](const Node& n) {
    if (n.kind == NodeKind::Predicate && n.threshold.is_param()) ground = false;
    if (has_interval(n.kind) && (n.interval.lo.is_param() || n.interval.hi.is_param())) {
      ground = false;
    }
  });
  return ground;
}

std::vector<ParamRef> Formula::parameters() const {
  std::vector<ParamRef> out;
  std::set<std::string> seen;
  auto add = [&](const Value& v) {
    if (!v.is_param()) return;
    const ParamRef& p = v.param();
    if (!seen.insert(p.name).second) {
      throw std::invalid_argument("duplicate parameter name '" + p.name + "'");
    }
    out.push_back(p);
  };
  walk(root_, [&](const Node& n) {
    if (n.kind == NodeKind::Predicate) add(n.threshold);
    if (has_interval(n.kind)) {
      add(n.interval.lo);
      add(n.interval.hi);
    }
  });
  return out;
}

std::vector<std::pair<std::string, std::string>> Formula::interval_param_pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  walk(root_, [&](const Node& n) {
    if (has_interval(n.kind) && n.interval.lo.is_param() && n.interval.hi.is_param()) {
      out.emplace_back(n.interval.lo.param().name, n.interval.hi.param().name);
    }
  });
  return out;
}

Formula Formula::instantiate(const std::map<std::string, double>& assignment) const {
  return Formula(instantiate_node(root_, assignment));
}

Formula Formula::desugared() const { return Formula(desugar_node(root_)); }

std::string Formula::render() const { return render_node(root_); }

std::string Formula::signature() const { return signature_node(root_); }

Formula Formula::subtree(int preorder_index) const {
  int cursor = 0;
  NodePtr hit = subtree_at(root_, preorder_index, cursor);
  if (!hit) throw std::out_of_range("preorder index out of range");
  return Formula(hit);
}

Formula Formula::with_subtree(int preorder_index, const Formula& replacement) const {
  if (preorder_index < 0 || preorder_index >= node_count()) {
    throw std::out_of_range("preorder index out of range");
  }
  int cursor = 0;
  return Formula(replace_at(root_, preorder_index, replacement.root_, cursor));
}

bool Formula::operator==(const Formula& other) const { return node_equal(root_, other.root_); }

std::string render(const Formula& f) { return f.render(); }

}  // namespace stlmine
