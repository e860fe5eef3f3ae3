#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <string>

#include "helpers.hpp"
#include "reference.hpp"
#include "qflan/store.hpp"

using namespace qflan;

namespace {

// Store with exactly the given concrete features installed (plus closure).
Store make_store(const CompiledSpec& cs, std::initializer_list<const char*> concrete) {
  Store st;
  st.flags.assign(cs.num_features(), 0);
  st.vars = cs.var_init;
  for (const char* f : concrete) st.flags[cs.feature_id(f)] = 1;
  apply_closure(cs, st);
  return st;
}

bool flag(const CompiledSpec& cs, const Store& st, const char* f) {
  return st.flags[cs.feature_id(f)] != 0;
}

double attr(const CompiledSpec& cs, const Store& st, const char* pred, const char* f) {
  return attribute_value(cs, st, cs.pred_index.at(pred), cs.feature_id(f));
}

}  // namespace

TEST_CASE("closure installs all ancestors of a concrete feature") {
  auto cs = testutil::compile_model("bikes.qflan");

  auto st = make_store(cs, {"AllYear"});
  CHECK(flag(cs, st, "AllYear"));
  CHECK(flag(cs, st, "Wheels"));
  CHECK(flag(cs, st, "Bike"));
  CHECK_FALSE(flag(cs, st, "Frame"));
  CHECK_FALSE(flag(cs, st, "Energy"));

  auto st2 = make_store(cs, {"Music"});
  CHECK(flag(cs, st2, "Music"));
  CHECK(flag(cs, st2, "CompUnit"));
  CHECK(flag(cs, st2, "Bike"));

  SECTION("closure clears stale abstract flags") {
    st2.flags[cs.feature_id("Music")] = 0;
    apply_closure(cs, st2);
    CHECK_FALSE(flag(cs, st2, "CompUnit"));
    CHECK_FALSE(flag(cs, st2, "Bike"));
  }
}

TEST_CASE("initial store honours the init block") {
  auto cs = testutil::compile_model("bikes.qflan");
  auto st = initial_store(cs);
  CHECK(flag(cs, st, "AllYear"));
  CHECK(flag(cs, st, "Diamond"));
  CHECK(flag(cs, st, "Wheels"));
  CHECK(flag(cs, st, "Frame"));
  CHECK(flag(cs, st, "Bike"));
  CHECK(st.vars[cs.var_id("deploys")] == 0.0);
  CHECK(is_consistent(cs, st));
}

TEST_CASE("abstract attributes sum installed concrete descendants") {
  auto cs = testutil::compile_model("bikes.qflan");

  auto st = initial_store(cs);
  CHECK(attr(cs, st, "price", "Bike") == 200.0);  // AllYear 100 + Diamond 100

  st.flags[cs.feature_id("Battery")] = 1;
  st.flags[cs.feature_id("Engine")] = 1;
  apply_closure(cs, st);
  CHECK(attr(cs, st, "price", "Bike") == 645.0);
  CHECK(attr(cs, st, "price", "Energy") == 145.0);

  auto music = make_store(cs, {"Music"});
  CHECK(attr(cs, music, "load", "Bike") == 5.0);
  CHECK(attr(cs, music, "load", "CompUnit") == 5.0);
  CHECK(attr(cs, music, "price", "CompUnit") == 10.0);

  SECTION("empty abstract subtree sums to zero") {
    Store bare;
    bare.flags.assign(cs.num_features(), 0);
    bare.vars = cs.var_init;
    CHECK(attr(cs, bare, "price", "Bike") == 0.0);
  }

  SECTION("concrete attribute is the table entry, installed or not") {
    CHECK(attr(cs, st, "price", "Basket") == 12.0);
    CHECK(attr(cs, st, "load", "Basket") == 0.0);  // unlisted defaults to 0
  }
}

TEST_CASE("memoized attribute sums match the plain recursion") {
  auto cs = testutil::compile_model("bikes.qflan");
  AttrMemo memo;
  memo.reset(cs);

  std::mt19937 gen(11);
  std::vector<int> concrete;
  for (int f = 0; f < cs.num_features(); ++f)
    if (cs.feature_concrete[f]) concrete.push_back(f);

  for (int round = 0; round < 200; ++round) {
    Store st;
    st.flags.assign(cs.num_features(), 0);
    st.vars = cs.var_init;
    for (int f : concrete)
      if (gen() % 3 == 0) st.flags[f] = 1;
    apply_closure(cs, st);
    memo.bump();
    for (size_t p = 0; p < cs.pred_names.size(); ++p)
      for (int f = 0; f < cs.num_features(); ++f) {
        double plain = attribute_value(cs, st, static_cast<int>(p), f, nullptr);
        double cached = attribute_value(cs, st, static_cast<int>(p), f, &memo);
        // Ask twice to exercise the hit path.
        double again = attribute_value(cs, st, static_cast<int>(p), f, &memo);
        CHECK(plain == cached);
        CHECK(cached == again);
      }
  }
}

TEST_CASE("consistency covers hierarchy, cross-tree and quantitative constraints") {
  auto cs = testutil::compile_model("bikes.qflan");

  CHECK(is_consistent(cs, make_store(cs, {"AllYear", "Diamond"})));

  // GPS excludes Diamond.
  CHECK_FALSE(is_consistent(cs, make_store(cs, {"AllYear", "Diamond", "Battery", "GPS"})));

  // Engine requires Battery.
  CHECK_FALSE(is_consistent(cs, make_store(cs, {"AllYear", "Diamond", "Engine"})));

  // Mandatory subfeatures: a bike without wheels is no bike.
  CHECK_FALSE(is_consistent(cs, make_store(cs, {"Diamond"})));

  // XOR: two frames at once.
  CHECK_FALSE(is_consistent(cs, make_store(cs, {"AllYear", "Diamond", "StepThru"})));

  // OR: Energy without any source only matters when Energy is installed,
  // which closure prevents from happening on its own.
  CHECK(is_consistent(cs, make_store(cs, {"AllYear", "Diamond", "Battery"})));

  SECTION("failed_constraints pinpoints the violation") {
    auto bad = make_store(cs, {"AllYear", "Diamond", "Battery", "GPS"});
    auto failed = failed_constraints(cs, bad);
    REQUIRE(failed.size() == 1);
    CHECK(cs.constraints[failed[0]].text.find("GPS") != std::string::npos);
  }

  SECTION("quantitative caps react to attribute sums") {
    // Engine + Battery push price to 645 (cap 600) and weight to 17.5 (cap 15).
    auto heavy = make_store(cs, {"AllYear", "Diamond", "Battery", "Engine"});
    CHECK_FALSE(is_consistent(cs, heavy));
    auto failed = failed_constraints(cs, heavy);
    REQUIRE(failed.size() == 2);
    CHECK(cs.constraints[failed[0]].text.find("price") != std::string::npos);
    CHECK(cs.constraints[failed[1]].text.find("weight") != std::string::npos);
  }
}

TEST_CASE("store_update applies flags, closure and simultaneous updates") {
  auto cs = testutil::compile_model("bikes.qflan");
  auto st = make_store(cs, {"AllYear", "Diamond", "Battery", "Music"});

  SECTION("uninstalling the last app clears the closure parent") {
    CAction a;
    a.kind = Action::Kind::Uninstall;
    a.feat = cs.feature_id("Music");
    auto out = store_update(cs, st, a, {}, 0);
    CHECK_FALSE(flag(cs, out, "Music"));
    CHECK_FALSE(flag(cs, out, "CompUnit"));
    CHECK(flag(cs, out, "Bike"));  // still anchored by the wheels and frame
  }

  SECTION("replace swaps the two flags atomically") {
    CAction a;
    a.kind = Action::Kind::Replace;
    a.feat = cs.feature_id("AllYear");
    a.feat2 = cs.feature_id("Summer");
    auto out = store_update(cs, st, a, {}, 0);
    CHECK_FALSE(flag(cs, out, "AllYear"));
    CHECK(flag(cs, out, "Summer"));
    CHECK(flag(cs, out, "Wheels"));
  }
}

TEST_CASE("variable updates read pre-update values") {
  auto cs = testutil::compile_text(
      "begin abstract features A end abstract features\n"
      "begin concrete features B end concrete features\n"
      "begin variables x = 3 y = 8 end variables\n"
      "begin actions swap end actions\n"
      "begin feature diagram A -OR-> { B } end feature diagram\n"
      "begin processes diagram begin process p states = s\n"
      "transitions = s -(swap , 1 , { x = y , y = x })-> s\n"
      "end process end processes diagram\n"
      "begin init installedFeatures = { } initialProcesses = p end init\n");

  auto m = initial_model(cs);
  auto dist = enabled_transitions(cs, m);
  REQUIRE(dist.transitions.size() == 1);
  const auto& out = dist.transitions[0].store;
  CHECK(out.vars[cs.var_id("x")] == 8.0);
  CHECK(out.vars[cs.var_id("y")] == 3.0);
}

TEST_CASE("division by zero raises EvalError with the offending text") {
  auto spec = testutil::parse_model("bikes.qflan");
  auto cs = compile_specification(spec);
  int idx = compile_arith(cs, bin(ArithOp::Div, num(1), var_ref("deploys")));
  auto st = initial_store(cs);  // deploys starts at 0
  CHECK_THROWS_AS(evaluate(cs, st, idx, 0), EvalError);
  try {
    evaluate(cs, st, idx, 0);
  } catch (const EvalError& e) {
    CHECK(std::string(e.what()).find("division by zero") != std::string::npos);
  }
  st.vars[cs.var_id("deploys")] = 4.0;
  CHECK(evaluate(cs, st, idx, 0) == 0.25);
}

TEST_CASE("steps pseudo-variable evaluates to the step counter") {
  auto spec = testutil::parse_model("bikes.qflan");
  auto cs = compile_specification(spec);
  int idx = compile_arith(cs, steps_ref());
  auto st = initial_store(cs);
  CHECK(evaluate(cs, st, idx, 0) == 0.0);
  CHECK(evaluate(cs, st, idx, 7) == 7.0);

  int gate = compile_formula(cs, cmp(CmpOp::Ge, steps_ref(), num(5)));
  CHECK_FALSE(holds(cs, st, gate, 4));
  CHECK(holds(cs, st, gate, 5));
}

TEST_CASE("engine agrees with the reference implementation on random stores") {
  auto spec = testutil::parse_model("bikes.qflan");
  auto cs = compile_specification(spec);
  refimpl::RefModel ref(spec);

  std::map<std::string, double> vars;
  for (const auto& v : spec.variables) vars[v.name] = v.init;

  std::vector<int> concrete;
  for (int f = 0; f < cs.num_features(); ++f)
    if (cs.feature_concrete[f]) concrete.push_back(f);

  std::mt19937 gen(20090213);
  int inconsistent = 0;
  for (int round = 0; round < 1000; ++round) {
    // Sweep the density so both sparse and crowded stores show up.
    double density = (round % 10 + 1) / 12.0;
    std::set<std::string> installed;
    Store st;
    st.flags.assign(cs.num_features(), 0);
    st.vars = cs.var_init;
    for (int f : concrete)
      if (std::generate_canonical<double, 32>(gen) < density) {
        st.flags[f] = 1;
        installed.insert(cs.feature_names[f]);
      }
    apply_closure(cs, st);

    auto closed = ref.close(installed);
    INFO("round " << round);

    // Closure must agree feature by feature.
    for (int f = 0; f < cs.num_features(); ++f)
      CHECK(static_cast<bool>(st.flags[f]) == (closed.count(cs.feature_names[f]) != 0));

    // Attribute sums must agree on every (predicate, feature) pair. The two
    // implementations add the same terms in different orders, so allow the
    // last-bit rounding drift that reordering can introduce.
    for (size_t p = 0; p < cs.pred_names.size(); ++p)
      for (int f = 0; f < cs.num_features(); ++f)
        CHECK(attribute_value(cs, st, static_cast<int>(p), f) ==
              Catch::Approx(ref.attribute(cs.pred_names[p], cs.feature_names[f], closed))
                  .margin(1e-9));

    bool engine_ok = is_consistent(cs, st);
    bool ref_ok = ref.consistent(closed, vars);
    CHECK(engine_ok == ref_ok);
    inconsistent += engine_ok ? 0 : 1;

    CHECK(failed_constraints(cs, st).empty() == engine_ok);
  }
  // The sweep must actually exercise both outcomes.
  CHECK(inconsistent > 100);
  CHECK(inconsistent < 1000);
}
