#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "qflan/process.hpp"

using namespace qflan;

namespace {

Action user_action(const std::string& name) {
  Action a;
  a.kind = Action::Kind::User;
  a.name = name;
  return a;
}

// Random term over a tiny alphabet; depth-bounded so keys stay small.
TermPtr random_term(std::mt19937& gen, int depth) {
  int pick = depth <= 0 ? static_cast<int>(gen() % 3) : static_cast<int>(gen() % 6);
  switch (pick) {
    case 0: return nil_term();
    case 1: return invoke("P" + std::to_string(gen() % 3));
    case 2: {
      const char* names[] = {"a", "b", "c"};
      return prefix(user_action(names[gen() % 3]), 1.0 + gen() % 4, {},
                    depth <= 0 ? nil_term() : random_term(gen, depth - 1));
    }
    default: {
      auto kind = pick == 3 ? ProcessTerm::Kind::Par : ProcessTerm::Kind::Choice;
      std::vector<TermPtr> kids;
      size_t n = 2 + gen() % 3;
      for (size_t i = 0; i < n; ++i) kids.push_back(random_term(gen, depth - 1));
      return combine(kind, std::move(kids));
    }
  }
}

}  // namespace

TEST_CASE("normalize is idempotent on random terms") {
  std::mt19937 gen(42);
  for (int round = 0; round < 500; ++round) {
    auto t = random_term(gen, 4);
    auto once = normalize(t);
    auto twice = normalize(once);
    INFO("round " << round << ": " << term_key(t));
    CHECK(term_key(once) == term_key(twice));
    CHECK(term_equal(once, twice));
  }
}

TEST_CASE("nil is the unit of choice and parallel") {
  auto p = prefix(user_action("a"), 2.0, {}, nil_term());

  auto choice = normalize(combine(ProcessTerm::Kind::Choice, {p, nil_term()}));
  CHECK(term_equal(choice, p));

  auto par = normalize(combine(ProcessTerm::Kind::Par, {nil_term(), p, nil_term()}));
  CHECK(term_equal(par, p));

  auto nils = normalize(combine(ProcessTerm::Kind::Par, {nil_term(), nil_term()}));
  CHECK(nils->kind == ProcessTerm::Kind::Nil);
}

TEST_CASE("nested sums flatten and commute") {
  auto p = prefix(user_action("a"), 1.0, {}, nil_term());
  auto q = prefix(user_action("b"), 2.0, {}, nil_term());
  auto r = invoke("R");

  auto left = combine(ProcessTerm::Kind::Choice,
                      {combine(ProcessTerm::Kind::Choice, {p, q}), r});
  auto right = combine(ProcessTerm::Kind::Choice,
                       {r, combine(ProcessTerm::Kind::Choice, {q, p})});

  auto ln = normalize(left);
  auto rn = normalize(right);
  REQUIRE(ln->kind == ProcessTerm::Kind::Choice);
  CHECK(ln->children.size() == 3);
  CHECK(term_key(ln) == term_key(rn));
  CHECK(term_equal(ln, rn));

  SECTION("but choice and parallel do not mix") {
    auto par = normalize(combine(ProcessTerm::Kind::Par,
                                 {combine(ProcessTerm::Kind::Choice, {p, q}), r}));
    REQUIRE(par->kind == ProcessTerm::Kind::Par);
    CHECK(par->children.size() == 2);
  }
}

TEST_CASE("normalization reaches under prefixes") {
  auto inner = combine(ProcessTerm::Kind::Choice, {nil_term(), invoke("P")});
  auto t = prefix(user_action("a"), 1.0, {}, inner);
  auto n = normalize(t);
  REQUIRE(n->kind == ProcessTerm::Kind::Prefix);
  CHECK(n->cont->kind == ProcessTerm::Kind::Invoke);
  CHECK(n->cont->name == "P");
}

TEST_CASE("duplicate summands survive normalization") {
  // + is a multiset union, so a repeated branch is meaningful (it doubles
  // the rate mass) and must not be deduplicated.
  auto p1 = prefix(user_action("a"), 1.0, {}, nil_term());
  auto p2 = prefix(user_action("a"), 1.0, {}, nil_term());
  auto n = normalize(combine(ProcessTerm::Kind::Choice, {p1, p2}));
  REQUIRE(n->kind == ProcessTerm::Kind::Choice);
  CHECK(n->children.size() == 2);
}

TEST_CASE("state machines translate to one definition per state") {
  auto spec = testutil::parse_model("bikes.qflan");
  REQUIRE(spec.process_diagrams.size() == 1);
  auto defs = translate_diagram(spec.process_diagrams[0]);
  REQUIRE(defs.size() == 7);

  std::map<std::string, TermPtr> by_name;
  for (const auto& d : defs) by_name[d.name] = d.term;

  SECTION("parked offers exactly book and maintain") {
    auto t = by_name.at("bikesProcess_parked");
    REQUIRE(t->kind == ProcessTerm::Kind::Choice);
    REQUIRE(t->children.size() == 2);
    // Declaration order: book first.
    CHECK(label(t->children[0]->action) == "book");
    CHECK(t->children[0]->rate == 10.0);
    CHECK(t->children[0]->cont->name == "bikesProcess_moving");
    CHECK(label(t->children[1]->action) == "maintain");
    CHECK(t->children[1]->rate == 1.0);
    CHECK(t->children[1]->cont->name == "bikesProcess_deposit");
  }

  SECTION("a state with no outgoing transitions becomes nil") {
    CHECK(by_name.at("bikesProcess_trash")->kind == ProcessTerm::Kind::Nil);
  }

  SECTION("deploy carries its update into the summand") {
    auto t = by_name.at("bikesProcess_deposit");
    REQUIRE(t->kind == ProcessTerm::Kind::Choice);
    bool found = false;
    for (const auto& s : t->children)
      if (label(s->action) == "deploy") {
        found = true;
        REQUIRE(s->updates.size() == 1);
        CHECK(s->updates[0].var == "deploys");
      }
    CHECK(found);
  }
}

TEST_CASE("translation is a bijection between transitions and summands") {
  // Every diagram state maps to a definition whose summand multiset is
  // exactly its outgoing-transition multiset, and nothing else appears.
  const char* names[] = {"bikes.qflan", "safelock_failing_10.qflan", "elevator_10.qflan"};
  for (const char* name : names) {
    INFO(name);
    auto spec = testutil::parse_model(name);
    for (const auto& d : spec.process_diagrams) {
      auto defs = translate_diagram(d);
      REQUIRE(defs.size() == d.states.size());

      std::map<std::string, std::multiset<std::string>> expected;
      for (const auto& s : d.states) expected[s.name];  // states with no exits
      for (const auto& tr : d.transitions)
        expected[tr.src].insert(label(tr.action) + "@" + std::to_string(tr.rate) + ">" +
                                diagram_state_process(d.name, tr.dst));

      for (size_t i = 0; i < defs.size(); ++i) {
        CHECK(defs[i].name == diagram_state_process(d.name, d.states[i].name));
        std::vector<TermPtr> summands;
        if (defs[i].term->kind == ProcessTerm::Kind::Choice)
          summands = defs[i].term->children;
        else if (defs[i].term->kind != ProcessTerm::Kind::Nil)
          summands = {defs[i].term};

        std::multiset<std::string> got;
        for (const auto& s : summands) {
          REQUIRE(s->kind == ProcessTerm::Kind::Prefix);
          REQUIRE(s->cont->kind == ProcessTerm::Kind::Invoke);
          got.insert(label(s->action) + "@" + std::to_string(s->rate) + ">" + s->cont->name);
        }
        CHECK(got == expected.at(d.states[i].name));
      }
    }
  }
}

TEST_CASE("term keys separate structurally different terms") {
  auto p = prefix(user_action("a"), 1.0, {}, nil_term());
  auto q = prefix(user_action("a"), 2.0, {}, nil_term());
  CHECK(term_key(p) != term_key(q));  // rate is part of the key

  auto choice = combine(ProcessTerm::Kind::Choice, {p, q});
  auto par = combine(ProcessTerm::Kind::Par, {p, q});
  CHECK(term_key(choice) != term_key(par));

  Update u;
  u.var = "x";
  u.value = num(1);
  auto with_update = prefix(user_action("a"), 1.0, {u}, nil_term());
  CHECK(term_key(with_update) != term_key(p));
}
