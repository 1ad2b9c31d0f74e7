#include <doctest.h>

#include <cmath>
#include <random>

#include "stlmine/stl/monitor.hpp"
#include "stlmine/stl/parser.hpp"
#include "support/fuzz.hpp"
#include "support/oracle.hpp"

using namespace stlmine;

namespace {

Trace constant_trace(const std::string& var, double value, std::size_t n) {
  Trace tr;
  tr.channels[var] = std::vector<double>(n, value);
  return tr;
}

bool same_rob(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::fabs(a - b) <= 1e-9;
}

}  // namespace

TEST_CASE("band rule hand checks") {
  Formula f = parse("G[0,60](cgm >= 70 & cgm <= 180)");

  Trace mid = constant_trace("cgm", 100.0, 12);
  CHECK(robustness(f, mid, 0.0) == 30.0);
  CHECK(eval_bool(f, mid, 0.0));

  Trace low = constant_trace("cgm", 60.0, 12);
  CHECK(robustness(f, low, 0.0) == -10.0);
  CHECK_FALSE(eval_bool(f, low, 0.0));

  Trace spike = constant_trace("cgm", 100.0, 12);
  spike.channels["cgm"][7] = 190.0;
  CHECK_FALSE(eval_bool(f, spike, 0.0));
  CHECK(robustness(f, spike, 0.0) == -10.0);
}

TEST_CASE("vacuous windows") {
  Trace tr = constant_trace("x", 1.0, 12);
  CHECK(robustness(parse("G[100,200](x >= 5)"), tr, 0.0) == kInf);
  CHECK(eval_bool(parse("G[100,200](x >= 5)"), tr, 0.0));
  CHECK(robustness(parse("F[100,200](x <= 5)"), tr, 0.0) == -kInf);
  CHECK_FALSE(eval_bool(parse("F[100,200](x <= 5)"), tr, 0.0));
  CHECK_FALSE(eval_bool(parse("(x >= 0) U[100,200] (x >= 0)"), tr, 0.0));
}

TEST_CASE("until hand check") {
  Trace tr;
  tr.channels["x"] = {12.0, 11.0, 13.0, 2.0};
  tr.channels["y"] = {0.0, 1.0, 2.0, 14.0};
  Formula f = parse("(x >= 10) U[0,30] (y >= 10)");
  CHECK(robustness(f, tr, 0.0) == 1.0);
  CHECK(eval_bool(f, tr, 0.0));
  CHECK(same_rob(robustness(f, tr, 0.0), oracle::rob(f, tr, 0.0)));

  // Break the prefix before the witness and the property falls.
  Trace broken = tr;
  broken.channels["x"][1] = 0.0;
  CHECK_FALSE(eval_bool(f, broken, 0.0));
  CHECK(robustness(f, broken, 0.0) == oracle::rob(f, broken, 0.0));

  // A witness at the evaluation instant needs no prefix at all.
  Trace instant;
  instant.channels["x"] = {0.0, 0.0};
  instant.channels["y"] = {20.0, 0.0};
  CHECK(eval_bool(parse("(x >= 10) U[0,5] (y >= 10)"), instant, 0.0));
}

TEST_CASE("evaluation at interior grid points") {
  Trace tr;
  tr.channels["x"] = {0.0, 50.0, 100.0, 150.0};
  Formula f = parse("G[0,5](x >= 40)");
  CHECK(robustness(f, tr, 5.0) == 10.0);
  CHECK(robustness(f, tr, 10.0) == 60.0);
  CHECK(eval_bool(f, tr, 5.0));
}

TEST_CASE("strictness matters for booleans but not robustness") {
  Trace tr = constant_trace("x", 70.0, 2);
  CHECK(eval_bool(parse("x >= 70"), tr, 0.0));
  CHECK_FALSE(eval_bool(parse("x > 70"), tr, 0.0));
  CHECK(robustness(parse("x >= 70"), tr, 0.0) == 0.0);
  CHECK(robustness(parse("x > 70"), tr, 0.0) == 0.0);
  CHECK(eval_bool(parse("x <= 70"), tr, 0.0));
  CHECK_FALSE(eval_bool(parse("x < 70"), tr, 0.0));
}

TEST_CASE("monitor matches the brute force oracle") {
  std::mt19937_64 rng(97531);
  std::vector<std::string> vars{"a", "b", "c"};
  int nontrivial = 0;
  for (int i = 0; i < 4000; ++i) {
    Formula f = fuzz::rand_ground(rng, vars, 55.0, 1 + static_cast<int>(rng() % 4));
    Trace tr = fuzz::rand_trace(rng, vars, 12);
    double t = 5.0 * static_cast<double>(rng() % 12);
    bool want = oracle::sat(f, tr, t);
    double want_r = oracle::rob(f, tr, t);
    CAPTURE(f.render());
    CAPTURE(t);
    CHECK(eval_bool(f, tr, t) == want);
    CHECK(same_rob(robustness(f, tr, t), want_r));
    if (want_r > 0) CHECK(eval_bool(f, tr, t));
    if (want_r < 0) CHECK_FALSE(eval_bool(f, tr, t));
    if (std::isfinite(want_r) && want_r != 0.0) ++nontrivial;
  }
  CHECK(nontrivial > 2000);
}

TEST_CASE("or behaves as max and matches its desugaring") {
  std::mt19937_64 rng(24680);
  std::vector<std::string> vars{"a", "b"};
  for (int i = 0; i < 300; ++i) {
    Formula l = fuzz::rand_ground(rng, vars, 55.0, 2);
    Formula r = fuzz::rand_ground(rng, vars, 55.0, 2);
    Formula both = Formula::disjunction(l, r);
    Trace tr = fuzz::rand_trace(rng, vars, 12);
    double t = 5.0 * static_cast<double>(rng() % 12);
    CHECK(eval_bool(both, tr, t) == (eval_bool(l, tr, t) || eval_bool(r, tr, t)));
    double want = std::max(robustness(l, tr, t), robustness(r, tr, t));
    CHECK(same_rob(robustness(both, tr, t), want));
    CHECK(eval_bool(both.desugared(), tr, t) == eval_bool(both, tr, t));
    CHECK(same_rob(robustness(both.desugared(), tr, t), robustness(both, tr, t)));
  }
}

TEST_CASE("widening a window is monotone") {
  std::mt19937_64 rng(13579);
  std::vector<std::string> vars{"a", "b"};
  for (int i = 0; i < 300; ++i) {
    Formula inner = fuzz::rand_ground(rng, vars, 55.0, 2);
    std::uniform_real_distribution<double> d(0.0, 55.0);
    double x1 = d(rng), x2 = d(rng), x3 = d(rng), x4 = d(rng);
    double arr[4] = {x1, x2, x3, x4};
    std::sort(arr, arr + 4);
    Interval narrow{Value{arr[1]}, Value{arr[2]}};
    Interval wide{Value{arr[0]}, Value{arr[3]}};
    Trace tr = fuzz::rand_trace(rng, vars, 12);
    double rf_n = robustness(Formula::eventually(narrow, inner), tr, 0.0);
    double rf_w = robustness(Formula::eventually(wide, inner), tr, 0.0);
    CHECK(rf_w >= rf_n);
    double rg_n = robustness(Formula::always(narrow, inner), tr, 0.0);
    double rg_w = robustness(Formula::always(wide, inner), tr, 0.0);
    CHECK(rg_w <= rg_n);
  }
}

TEST_CASE("monitor input validation") {
  Trace tr = constant_trace("x", 1.0, 4);
  Formula f = parse("x >= 0");
  CHECK_THROWS_AS(robustness(parse("y >= 0"), tr, 0.0), MonitorError);
  CHECK_THROWS_AS(robustness(f, tr, 2.5), MonitorError);
  CHECK_THROWS_AS(robustness(f, tr, -5.0), MonitorError);
  CHECK_THROWS_AS(robustness(f, tr, 20.0), MonitorError);
  CHECK_THROWS_AS(robustness(parse("x >= ?a{0,1}"), tr, 0.0), MonitorError);
  Trace empty;
  CHECK_THROWS_AS(robustness(f, empty, 0.0), MonitorError);
}

TEST_CASE("unbounded intervals clip to the trace horizon") {
  Trace tr;
  tr.channels["x"] = {10.0, 20.0, 5.0, 40.0};
  CHECK(robustness(parse("G(x >= 0)"), tr, 0.0) == 5.0);
  CHECK(robustness(parse("F(x >= 0)"), tr, 0.0) == 40.0);
  CHECK(robustness(parse("G[10,inf](x >= 0)"), tr, 0.0) == 5.0);
}
