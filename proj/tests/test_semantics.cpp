#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "helpers.hpp"
#include "qflan/dtmc.hpp"
#include "qflan/rng.hpp"
#include "qflan/semantics.hpp"

using namespace qflan;

namespace {

const PrefixSite* find_site(const CompiledSpec& cs, const std::string& text) {
  for (const auto& s : cs.site_arena)
    if (s.action.text == text) return &s;
  return nullptr;
}

std::vector<std::string> labels_of(const StepDistribution& d) {
  std::vector<std::string> out;
  for (const auto& t : d.transitions) out.push_back(t.site->action.text);
  return out;
}

bool same_distribution(const StepDistribution& a, const StepDistribution& b) {
  if (a.transitions.size() != b.transitions.size()) return false;
  if (a.total_rate != b.total_rate) return false;
  for (size_t i = 0; i < a.transitions.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (x.site->action.text != y.site->action.text) return false;
    if (x.rate != y.rate || x.multiplicity != y.multiplicity) return false;
    if (x.group_key != y.group_key) return false;
    if (!(x.store == y.store)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("initial bikes state exposes exactly the admissible moves") {
  auto cs = testutil::compile_model("bikes.qflan");
  auto m = initial_model(cs);
  auto dist = enabled_transitions(cs, m);

  // Hand-enumerated: three viable installs plus three viable swaps. sell is
  // blocked by its action constraint (price 200 is not above 250),
  // install(Engine) and install(Light) fail the consistency check of the
  // successor store, and every other swap lacks its source feature.
  REQUIRE(dist.transitions.size() == 6);
  CHECK(dist.total_rate == 34.0);

  const char* expected[] = {"install(Basket)",          "install(Battery)",
                            "install(Dynamo)",          "replace(AllYear, Summer)",
                            "replace(AllYear, Winter)", "replace(Diamond, StepThru)"};
  const double rates[] = {5, 8, 8, 5, 5, 3};
  for (size_t i = 0; i < 6; ++i) {
    CHECK(dist.transitions[i].site->action.text == expected[i]);
    CHECK(dist.transitions[i].rate == rates[i]);
    CHECK(dist.transitions[i].multiplicity == 1);
    CHECK(dist.probability(i) == Catch::Approx(rates[i] / 34.0).epsilon(1e-12));
  }

  SECTION("probabilities sum to one") {
    double sum = 0.0;
    for (size_t i = 0; i < dist.transitions.size(); ++i) sum += dist.probability(i);
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
  }

  SECTION("the sell gate opens once the configuration is valuable enough") {
    Model rich = initial_model(cs);
    rich.store.flags[cs.feature_id("Battery")] = 1;
    apply_closure(cs, rich.store);
    auto rdist = enabled_transitions(cs, rich);
    bool has_sell = false;
    for (const auto& l : labels_of(rdist)) has_sell |= l == "sell";
    CHECK(has_sell);
  }
}

TEST_CASE("executability side conditions") {
  auto cs = testutil::compile_model("bikes.qflan");
  auto st = initial_store(cs);

  const auto* inst_battery = find_site(cs, "install(Battery)");
  REQUIRE(inst_battery);
  CHECK(is_executable(cs, st, *inst_battery, 0));

  Store with = st;
  with.flags[cs.feature_id("Battery")] = 1;
  apply_closure(cs, with);
  CHECK_FALSE(is_executable(cs, with, *inst_battery, 0));  // double install

  const auto* un_music = find_site(cs, "uninstall(Music)");
  REQUIRE(un_music);
  CHECK_FALSE(is_executable(cs, st, *un_music, 0));  // nothing to remove

  const auto* swap_back = find_site(cs, "replace(Summer, AllYear)");
  REQUIRE(swap_back);
  CHECK_FALSE(is_executable(cs, st, *swap_back, 0));  // no Summer wheels yet

  const auto* swap_away = find_site(cs, "replace(AllYear, Summer)");
  REQUIRE(swap_away);
  CHECK(is_executable(cs, st, *swap_away, 0));

  SECTION("viability is separate from executability") {
    // Installing the engine is executable, but the successor store breaks
    // the Engine-requires-Battery constraint, so no transition appears.
    const auto* inst_engine = find_site(cs, "install(Engine)");
    REQUIRE(inst_engine);
    CHECK(is_executable(cs, st, *inst_engine, 0));

    Store target = store_update(cs, st, inst_engine->action, inst_engine->updates, 0);
    CHECK_FALSE(is_consistent(cs, target, 1));

    auto m = initial_model(cs);
    for (const auto& l : labels_of(enabled_transitions(cs, m))) {
      CHECK(l != "install(Engine)");
      CHECK(l != "install(Light)");
    }
  }
}

TEST_CASE("empty and deadlocked models yield the empty multiset") {
  auto cs = testutil::compile_model("bikes.qflan");
  Model m;
  m.store = initial_store(cs);
  auto dist = enabled_transitions(cs, m);
  CHECK(dist.transitions.empty());
  CHECK(dist.total_rate == 0.0);
}

TEST_CASE("a successful attacker has no further moves") {
  auto cs = testutil::compile_model("safelock_powerful.qflan");
  auto m = initial_model(cs);
  REQUIRE_FALSE(enabled_transitions(cs, m).transitions.empty());

  const auto* pick = find_site(cs, "install(PickLock)");
  REQUIRE(pick);
  m.store = store_update(cs, m.store, pick->action, pick->updates, 0);
  m.steps = 1;
  // OpenSafe is now installed by closure; the blanket install guard turns
  // every remaining prefix off.
  CHECK(m.store.flags[cs.feature_id("OpenSafe")] != 0);
  CHECK(enabled_transitions(cs, m).transitions.empty());
}

TEST_CASE("identical summands merge with a multiplicity") {
  auto cs = testutil::compile_text(
      "begin abstract features A end abstract features\n"
      "begin concrete features B end concrete features\n"
      "begin actions tick tock end actions\n"
      "begin feature diagram A -OR-> { B } end feature diagram\n"
      "begin processes diagram begin process p states = s , t\n"
      "transitions = s -(tick , 1)-> s , s -(tick , 1)-> s , s -(tick , 1)-> t ,\n"
      "s -(tock , 1)-> t\n"
      "end process end processes diagram\n"
      "begin init installedFeatures = { } initialProcesses = p end init\n");

  auto m = initial_model(cs);
  auto dist = enabled_transitions(cs, m);

  // Two self-loops collapse into multiplicity 2; the same label to a
  // different target stays separate.
  REQUIRE(dist.transitions.size() == 3);
  CHECK(dist.transitions[0].site->action.text == "tick");
  CHECK(dist.transitions[0].multiplicity +
            dist.transitions[1].multiplicity == 3);
  CHECK(dist.transitions[2].site->action.text == "tock");
  CHECK(dist.total_rate == 4.0);
  CHECK(dist.probability(2) == Catch::Approx(0.25).epsilon(1e-12));

  bool saw_merged = false;
  for (size_t i = 0; i < 2; ++i)
    if (dist.transitions[i].multiplicity == 2) {
      saw_merged = true;
      CHECK(dist.probability(i) == Catch::Approx(0.5).epsilon(1e-12));
    }
  CHECK(saw_merged);
}

TEST_CASE("transition order is independent of declaration order") {
  // The same machine written twice with permuted transition lists must
  // produce byte-for-byte identical step distributions.
  auto variant = [](const std::string& transitions) {
    return "begin abstract features A end abstract features\n"
           "begin concrete features B C end concrete features\n"
           "begin variables x = 0 end variables\n"
           "begin actions hop skip end actions\n"
           "begin feature diagram A -OR-> { B , C } end feature diagram\n"
           "begin processes diagram begin process p states = s , t\n"
           "transitions = " + transitions + "\n"
           "end process end processes diagram\n"
           "begin init installedFeatures = { } initialProcesses = p end init\n";
  };

  auto cs1 = testutil::compile_text(variant(
      "s -(hop , 2)-> t , s -(skip , 1)-> s , s -(install(B) , 3)-> t , t -(hop , 1)-> s"));
  auto cs2 = testutil::compile_text(variant(
      "s -(install(B) , 3)-> t , t -(hop , 1)-> s , s -(skip , 1)-> s , s -(hop , 2)-> t"));

  auto m1 = initial_model(cs1);
  auto m2 = initial_model(cs2);
  for (int step = 0; step < 30; ++step) {
    auto d1 = enabled_transitions(cs1, m1);
    auto d2 = enabled_transitions(cs2, m2);
    REQUIRE(d1.transitions.size() == d2.transitions.size());
    CHECK(d1.total_rate == d2.total_rate);
    for (size_t i = 0; i < d1.transitions.size(); ++i) {
      CHECK(d1.transitions[i].site->action.text == d2.transitions[i].site->action.text);
      CHECK(d1.transitions[i].rate == d2.transitions[i].rate);
      CHECK(d1.transitions[i].multiplicity == d2.transitions[i].multiplicity);
    }
    if (d1.transitions.empty()) break;
    // Walk both copies down the same branch.
    size_t pick = step % d1.transitions.size();
    m1.store = d1.transitions[pick].store;
    m1.procs = d1.transitions[pick].procs;
    ++m1.steps;
    m2.store = d2.transitions[pick].store;
    m2.procs = d2.transitions[pick].procs;
    ++m2.steps;
  }
}

TEST_CASE("admissibility cache never changes the semantics") {
  auto cs = testutil::compile_model("bikes.qflan");

  Model cached = initial_model(cs);
  Model plain = initial_model(cs);
  AdmissibilityCache cache;
  cache.init(cs);
  AttrMemo memo;
  memo.reset(cs);

  // Same stream on both sides; only the caching differs.
  auto rng_a = sim_stream(977, 3);
  auto rng_b = sim_stream(977, 3);

  for (int step = 0; step < 300; ++step) {
    auto warm = enabled_transitions(cs, cached, &cache, &memo);
    auto cold = enabled_transitions(cs, plain);
    INFO("step " << step);
    REQUIRE(same_distribution(warm, cold));
    simulate_step(cs, cached, rng_a, &cache, &memo);
    simulate_step(cs, plain, rng_b);
    REQUIRE(cached.store == plain.store);
    REQUIRE(components_key(cached.procs) == components_key(plain.procs));
    REQUIRE(cached.steps == plain.steps);
  }
}

TEST_CASE("every reachable state satisfies the constraint store") {
  for (const char* name : {"micro.qflan", "safelock_powerful.qflan"}) {
    INFO(name);
    auto cs = testutil::compile_model(name);
    auto dtmc = build_state_space(cs);
    for (size_t s = 0; s < dtmc.states.size(); ++s) {
      CHECK(is_consistent(cs, dtmc.states[s].store));
      // Stores are closure fixpoints.
      Store copy = dtmc.states[s].store;
      apply_closure(cs, copy);
      CHECK(copy == dtmc.states[s].store);
    }
  }
}

TEST_CASE("initial model rejects an inconsistent init block") {
  auto r = parse_specification(
      "begin abstract features A end abstract features\n"
      "begin concrete features B C end concrete features\n"
      "begin feature diagram A -XOR-> { B , C } end feature diagram\n"
      "begin processes diagram begin process p states = s\n"
      "transitions = s -(install(B) , 1)-> s end process end processes diagram\n"
      "begin init installedFeatures = { B , C } initialProcesses = p end init\n");
  REQUIRE(r.ok());
  REQUIRE(validate_specification(*r.spec).ok());
  auto cs = compile_specification(*r.spec);
  CHECK_THROWS_AS(initial_model(cs), AnalysisError);
}
