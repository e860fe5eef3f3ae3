#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qflan/ast.hpp"
#include "qflan/lexer.hpp"

namespace qflan {

struct ParseResult {
  std::optional<Specification> spec;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return spec.has_value(); }
};

struct AnalysisParseResult {
  std::optional<AnalysisRequest> request;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return request.has_value(); }
};

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  Specification parse_specification_file() {
    Specification spec;
    bool seen[13] = {};
    auto mark = [&](int idx, const std::string& name, SourceLoc loc) {
      if (seen[idx]) parse_fail("duplicate block '" + name + "'", loc);
      seen[idx] = true;
    };
    while (!at(Token::Kind::End)) {
      SourceLoc loc = cur().loc;
      expect_kw("begin");
      std::string block = parse_block_name();
      if (block == "abstract features") {
        mark(0, block, loc);
        parse_name_list(spec.abstract_features);
      } else if (block == "concrete features") {
        mark(1, block, loc);
        parse_name_list(spec.concrete_features);
      } else if (block == "feature predicates") {
        mark(2, block, loc);
        parse_predicates(spec);
      } else if (block == "variables") {
        mark(3, block, loc);
        parse_variables(spec);
      } else if (block == "actions") {
        mark(4, block, loc);
        parse_name_list(spec.actions);
      } else if (block == "feature diagram") {
        mark(5, block, loc);
        parse_feature_diagram(spec);
      } else if (block == "cross-tree constraints") {
        mark(6, block, loc);
        parse_cross_tree(spec);
      } else if (block == "quantitative constraints") {
        mark(7, block, loc);
        parse_quantitative(spec);
      } else if (block == "action constraints") {
        mark(8, block, loc);
        parse_action_constraints(spec);
      } else if (block == "processes") {
        mark(9, block, loc);
        parse_process_defs(spec);
      } else if (block == "processes diagram") {
        mark(10, block, loc);
        parse_process_diagrams(spec);
      } else if (block == "init") {
        mark(11, block, loc);
        spec.init_loc = loc;
        parse_init(spec);
      } else {
        parse_fail("unknown block '" + block + "'", loc);
      }
      expect_kw("end");
      std::string closing = parse_block_name();
      if (closing != block)
        parse_fail("block '" + block + "' closed by 'end " + closing + "'", loc);
    }
    return spec;
  }

  AnalysisRequest parse_analysis_file() {
    AnalysisRequest req;
    SourceLoc loc = cur().loc;
    req.loc = loc;
    expect_kw("begin");
    expect_kw("analysis");
    bool have_query = false, have_delta = false, have_alpha = false, have_par = false;
    while (!at_ident("end")) {
      SourceLoc item_loc = cur().loc;
      std::string word = expect_ident("analysis item");
      if (word == "query") {
        if (have_query) parse_fail("duplicate query", item_loc);
        have_query = true;
        expect(Token::Kind::Assign, "'='");
        parse_query(req);
      } else if (word == "default") {
        expect_kw("delta");
        if (have_delta) parse_fail("duplicate default delta", item_loc);
        have_delta = true;
        expect(Token::Kind::Assign, "'='");
        req.default_delta = parse_signed_number();
        if (req.default_delta <= 0) parse_fail("default delta must be positive", item_loc);
      } else if (word == "alpha") {
        if (have_alpha) parse_fail("duplicate alpha", item_loc);
        have_alpha = true;
        expect(Token::Kind::Assign, "'='");
        req.alpha = parse_signed_number();
        if (req.alpha <= 0 || req.alpha >= 1) parse_fail("alpha must be in (0, 1)", item_loc);
      } else if (word == "parallelism") {
        if (have_par) parse_fail("duplicate parallelism", item_loc);
        have_par = true;
        expect(Token::Kind::Assign, "'='");
        double v = parse_signed_number();
        if (v < 1 || v != static_cast<long long>(v))
          parse_fail("parallelism must be a positive integer", item_loc);
        req.parallelism = static_cast<int>(v);
      } else {
        parse_fail("unknown analysis item '" + word + "'", item_loc);
      }
    }
    expect_kw("end");
    expect_kw("analysis");
    expect(Token::Kind::End, "end of input");
    if (!have_query) parse_fail("analysis is missing a query", loc);
    if (!have_delta) parse_fail("analysis is missing 'default delta'", loc);
    if (!have_alpha) parse_fail("analysis is missing 'alpha'", loc);
    return req;
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Token::Kind k) const { return cur().kind == k; }
  bool at_ident(const char* w) const {
    return cur().kind == Token::Kind::Ident && cur().text == w;
  }
  Token next() { return toks_[pos_++]; }
  bool accept(Token::Kind k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  Token expect(Token::Kind k, const char* what) {
    if (!at(k))
      parse_fail(std::string("expected ") + what + ", found " + describe(cur()), cur().loc);
    return next();
  }
  std::string describe(const Token& t) const {
    if (t.kind == Token::Kind::Ident) return "'" + t.text + "'";
    if (t.kind == Token::Kind::Number) return "number " + t.text;
    return token_name(t.kind);
  }
  std::string expect_ident(const char* what) {
    if (!at(Token::Kind::Ident))
      parse_fail(std::string("expected ") + what + ", found " + describe(cur()), cur().loc);
    return next().text;
  }
  void expect_kw(const char* w) {
    if (!at_ident(w))
      parse_fail(std::string("expected '") + w + "', found " + describe(cur()), cur().loc);
    ++pos_;
  }

  double parse_signed_number() {
    bool negative = accept(Token::Kind::Minus);
    Token t = expect(Token::Kind::Number, "number");
    return negative ? -t.number : t.number;
  }

  // Block names are short fixed word sequences ("feature diagram",
  // "cross-tree constraints", ...).
  std::string parse_block_name() {
    std::string first = expect_ident("block name");
    if (first == "abstract" || first == "concrete") {
      expect_kw("features");
      return first + " features";
    }
    if (first == "feature") {
      if (at_ident("predicates")) {
        ++pos_;
        return "feature predicates";
      }
      expect_kw("diagram");
      return "feature diagram";
    }
    if (first == "cross") {
      expect(Token::Kind::Minus, "'-'");
      expect_kw("tree");
      expect_kw("constraints");
      return "cross-tree constraints";
    }
    if (first == "quantitative" || first == "action") {
      expect_kw("constraints");
      return first + " constraints";
    }
    if (first == "processes") {
      if (at_ident("diagram")) {
        ++pos_;
        return "processes diagram";
      }
      return "processes";
    }
    return first;  // variables, actions, init, analysis
  }

  void parse_name_list(std::vector<Named>& out) {
    while (!at_ident("end")) {
      SourceLoc loc = cur().loc;
      out.push_back({expect_ident("name"), loc});
      accept(Token::Kind::Comma);
    }
  }

  void parse_predicates(Specification& spec) {
    while (!at_ident("end")) {
      PredicateDecl decl;
      decl.loc = cur().loc;
      decl.name = expect_ident("predicate name");
      expect(Token::Kind::Assign, "'='");
      expect(Token::Kind::LBrace, "'{'");
      while (!accept(Token::Kind::RBrace)) {
        std::string feature = expect_ident("feature name");
        expect(Token::Kind::Assign, "'='");
        decl.values.emplace_back(feature, parse_signed_number());
        if (!accept(Token::Kind::Comma) && !at(Token::Kind::RBrace))
          parse_fail("expected ',' or '}' in predicate values", cur().loc);
      }
      spec.predicates.push_back(std::move(decl));
    }
  }

  void parse_variables(Specification& spec) {
    while (!at_ident("end")) {
      VarDecl v;
      v.loc = cur().loc;
      v.name = expect_ident("variable name");
      expect(Token::Kind::Assign, "'='");
      v.init = parse_signed_number();
      accept(Token::Kind::Comma);
      spec.variables.push_back(std::move(v));
    }
  }

  void parse_feature_diagram(Specification& spec) {
    while (!at_ident("end")) {
      HierarchicalRelation rel;
      rel.loc = cur().loc;
      rel.parent = expect_ident("parent feature");
      if (accept(Token::Kind::Arrow))
        rel.kind = HierarchicalRelation::Kind::And;
      else if (accept(Token::Kind::OrArrow))
        rel.kind = HierarchicalRelation::Kind::Or;
      else if (accept(Token::Kind::XorArrow))
        rel.kind = HierarchicalRelation::Kind::Xor;
      else
        parse_fail("expected '->', '-OR->' or '-XOR->', found " + describe(cur()), cur().loc);
      expect(Token::Kind::LBrace, "'{'");
      while (!accept(Token::Kind::RBrace)) {
        HierarchicalRelation::Child child;
        if (accept(Token::Kind::Question)) {
          if (rel.kind != HierarchicalRelation::Kind::And)
            parse_fail("optional marker '?' is only valid in '->' relations", cur().loc);
          child.optional = true;
        }
        child.name = expect_ident("child feature");
        rel.children.push_back(std::move(child));
        if (!accept(Token::Kind::Comma) && !at(Token::Kind::RBrace))
          parse_fail("expected ',' or '}' in child list", cur().loc);
      }
      if (rel.children.empty()) parse_fail("relation has no children", rel.loc);
      spec.diagram.push_back(std::move(rel));
    }
  }

  void parse_cross_tree(Specification& spec) {
    while (!at_ident("end")) {
      CrossTreeConstraint c;
      c.loc = cur().loc;
      c.lhs = expect_ident("feature name");
      std::string kw = expect_ident("'requires' or 'excludes'");
      if (kw == "requires")
        c.kind = CrossTreeConstraint::Kind::Requires;
      else if (kw == "excludes")
        c.kind = CrossTreeConstraint::Kind::Excludes;
      else
        parse_fail("expected 'requires' or 'excludes', found '" + kw + "'", c.loc);
      c.rhs = expect_ident("feature name");
      accept(Token::Kind::Comma);
      spec.cross_tree.push_back(std::move(c));
    }
  }

  void parse_quantitative(Specification& spec) {
    while (!at_ident("end")) {
      QuantConstraint q;
      q.loc = cur().loc;
      expect(Token::Kind::LBrace, "'{'");
      q.formula = parse_formula();
      expect(Token::Kind::RBrace, "'}'");
      accept(Token::Kind::Comma);
      spec.quantitative.push_back(std::move(q));
    }
  }

  void parse_action_constraints(Specification& spec) {
    while (!at_ident("end")) {
      ActionConstraint c;
      c.loc = cur().loc;
      expect_kw("do");
      expect(Token::Kind::LParen, "'('");
      std::string name = expect_ident("action name");
      if ((name == "install" || name == "uninstall" || name == "replace") &&
          at(Token::Kind::LParen)) {
        ++pos_;
        if (!accept(Token::Kind::Ellipsis))
          parse_fail("action constraints on specific store actions are not supported; "
                     "use the wildcard form do(" + name + "(...))",
                     cur().loc);
        expect(Token::Kind::RParen, "')'");
        c.target = name == "install"     ? ActionConstraint::Target::AnyInstall
                   : name == "uninstall" ? ActionConstraint::Target::AnyUninstall
                                         : ActionConstraint::Target::AnyReplace;
      } else {
        c.target = ActionConstraint::Target::Name;
        c.name = name;
      }
      expect(Token::Kind::RParen, "')'");
      expect(Token::Kind::Arrow, "'->'");
      if (accept(Token::Kind::LBrace)) {
        c.formula = parse_formula();
        expect(Token::Kind::RBrace, "'}'");
      } else {
        c.formula = parse_formula();
      }
      accept(Token::Kind::Comma);
      spec.action_constraints.push_back(std::move(c));
    }
  }

  void parse_process_defs(Specification& spec) {
    while (!at_ident("end")) {
      ProcessDef def;
      def.loc = cur().loc;
      expect_kw("process");
      def.name = expect_ident("process name");
      expect(Token::Kind::Assign, "'='");
      def.term = parse_term();
      spec.process_defs.push_back(std::move(def));
    }
  }

  void parse_process_diagrams(Specification& spec) {
    while (!at_ident("end")) {
      ProcessDiagram d;
      d.loc = cur().loc;
      expect_kw("begin");
      expect_kw("process");
      d.name = expect_ident("process name");
      expect_kw("states");
      expect(Token::Kind::Assign, "'='");
      while (!at_ident("transitions")) {
        SourceLoc loc = cur().loc;
        d.states.push_back({expect_ident("state name"), loc});
        if (!accept(Token::Kind::Comma)) break;
      }
      expect_kw("transitions");
      expect(Token::Kind::Assign, "'='");
      while (!at_ident("end")) {
        d.transitions.push_back(parse_diagram_transition());
        if (!accept(Token::Kind::Comma)) break;
      }
      expect_kw("end");
      expect_kw("process");
      spec.process_diagrams.push_back(std::move(d));
    }
  }

  DiagramTransition parse_diagram_transition() {
    DiagramTransition t;
    t.loc = cur().loc;
    t.src = expect_ident("source state");
    expect(Token::Kind::Minus, "'-('");
    expect(Token::Kind::LParen, "'('");
    t.action = parse_action();
    expect(Token::Kind::Comma, "','");
    t.rate = parse_signed_number();
    if (accept(Token::Kind::Comma)) t.updates = parse_updates();
    expect(Token::Kind::RParen, "')'");
    expect(Token::Kind::Arrow, "'->'");
    t.dst = expect_ident("target state");
    return t;
  }

  Action parse_action() {
    Action a;
    a.loc = cur().loc;
    std::string name = expect_ident("action");
    if (name == "install" || name == "uninstall") {
      a.kind = name == "install" ? Action::Kind::Install : Action::Kind::Uninstall;
      expect(Token::Kind::LParen, "'('");
      a.name = expect_ident("feature name");
      expect(Token::Kind::RParen, "')'");
    } else if (name == "replace") {
      a.kind = Action::Kind::Replace;
      expect(Token::Kind::LParen, "'('");
      a.from = expect_ident("feature name");
      expect(Token::Kind::Comma, "','");
      a.to = expect_ident("feature name");
      expect(Token::Kind::RParen, "')'");
    } else if (name == "ask") {
      a.kind = Action::Kind::Ask;
      expect(Token::Kind::LParen, "'('");
      expect(Token::Kind::LBrace, "'{'");
      a.guard = parse_formula();
      expect(Token::Kind::RBrace, "'}'");
      expect(Token::Kind::RParen, "')'");
    } else {
      // Feature actions are told apart from user actions during compilation.
      a.kind = Action::Kind::User;
      a.name = name;
    }
    return a;
  }

  std::vector<Update> parse_updates() {
    std::vector<Update> out;
    expect(Token::Kind::LBrace, "'{'");
    while (!accept(Token::Kind::RBrace)) {
      Update u;
      u.loc = cur().loc;
      u.var = expect_ident("variable name");
      expect(Token::Kind::Assign, "'='");
      u.value = parse_arith();
      out.push_back(std::move(u));
      if (!accept(Token::Kind::Comma) && !at(Token::Kind::RBrace))
        parse_fail("expected ',' or '}' in update block", cur().loc);
    }
    return out;
  }

  // Process terms, Def. 7 shape: prefixes, +, ||, nil. Invocation names occur
  // only as prefix continuations, which keeps recursion prefix-guarded by
  // construction.
  TermPtr parse_term() {
    SourceLoc loc = cur().loc;
    std::vector<TermPtr> parts{parse_choice()};
    while (accept(Token::Kind::BarBar)) parts.push_back(parse_choice());
    if (parts.size() == 1) return parts[0];
    return combine(ProcessTerm::Kind::Par, std::move(parts), loc);
  }

  TermPtr parse_choice() {
    SourceLoc loc = cur().loc;
    std::vector<TermPtr> parts{parse_primary_term()};
    while (accept(Token::Kind::Plus)) parts.push_back(parse_primary_term());
    if (parts.size() == 1) return parts[0];
    return combine(ProcessTerm::Kind::Choice, std::move(parts), loc);
  }

  TermPtr parse_primary_term() {
    SourceLoc loc = cur().loc;
    if (at_ident("nil")) {
      ++pos_;
      return nil_term(loc);
    }
    expect(Token::Kind::LParen, "'(' or 'nil'");
    if (at(Token::Kind::Ident) && cur().text != "nil") {
      // Prefix: (action , rate [, {updates}]) . continuation
      Action a = parse_action();
      expect(Token::Kind::Comma, "','");
      double rate = parse_signed_number();
      std::vector<Update> updates;
      if (accept(Token::Kind::Comma)) updates = parse_updates();
      expect(Token::Kind::RParen, "')'");
      expect(Token::Kind::Dot, "'.'");
      TermPtr cont;
      if (at(Token::Kind::Ident)) {
        SourceLoc cloc = cur().loc;
        std::string n = next().text;
        cont = n == "nil" ? nil_term(cloc) : invoke(n, cloc);
      } else {
        cont = parse_primary_term();
      }
      return prefix(std::move(a), rate, std::move(updates), std::move(cont), loc);
    }
    TermPtr inner = parse_term();
    expect(Token::Kind::RParen, "')'");
    return inner;
  }

  void parse_init(Specification& spec) {
    expect_kw("installedFeatures");
    expect(Token::Kind::Assign, "'='");
    expect(Token::Kind::LBrace, "'{'");
    while (!accept(Token::Kind::RBrace)) {
      SourceLoc loc = cur().loc;
      spec.init_features.push_back({expect_ident("feature name"), loc});
      if (!accept(Token::Kind::Comma) && !at(Token::Kind::RBrace))
        parse_fail("expected ',' or '}' in installedFeatures", cur().loc);
    }
    expect_kw("initialProcesses");
    expect(Token::Kind::Assign, "'='");
    do {
      SourceLoc loc = cur().loc;
      spec.init_processes.push_back({expect_ident("process name"), loc});
    } while (accept(Token::Kind::Bar));
  }

  // ---- analysis queries ----

  void parse_query(AnalysisRequest& req) {
    expect_kw("eval");
    SourceLoc loc = cur().loc;
    std::string kind = expect_ident("'when', 'for' or 'until'");
    if (kind == "when" || kind == "until") {
      req.kind = kind == "when" ? AnalysisRequest::Kind::When : AnalysisRequest::Kind::Until;
      expect(Token::Kind::LBrace, "'{'");
      req.condition = parse_formula();
      expect(Token::Kind::RBrace, "'}'");
    } else if (kind == "for") {
      req.kind = AnalysisRequest::Kind::For;
      std::string param = expect_ident("parameter");
      if (param != "step" && param != "steps")
        parse_fail("unsupported for-parameter '" + param + "'; only the step counter is supported",
                   loc);
      expect_kw("from");
      req.from = parse_signed_number();
      expect_kw("to");
      req.to = parse_signed_number();
      expect_kw("by");
      req.by = parse_signed_number();
      if (req.by <= 0) parse_fail("'by' must be positive", loc);
      if (req.from < 0 || req.to < req.from) parse_fail("invalid step range", loc);
    } else {
      parse_fail("expected 'when', 'for' or 'until', found '" + kind + "'", loc);
    }
    expect(Token::Kind::Colon, "':'");
    expect(Token::Kind::LBrace, "'{'");
    while (!accept(Token::Kind::RBrace)) {
      Observation obs = parse_observation();
      if (accept(Token::Kind::LBracket)) {
        expect_kw("delta");
        expect(Token::Kind::Assign, "'='");
        obs.delta = parse_signed_number();
        if (*obs.delta <= 0) parse_fail("delta must be positive", obs.loc);
        expect(Token::Kind::RBracket, "']'");
      }
      if (req.kind == AnalysisRequest::Kind::Until && !obs.formula)
        parse_fail("until observations must be boolean formulas", obs.loc);
      req.observations.push_back(std::move(obs));
      if (!accept(Token::Kind::Comma) && !at(Token::Kind::RBrace))
        parse_fail("expected ',' or '}' in observation list", cur().loc);
    }
    if (req.observations.empty()) parse_fail("query has no observations", loc);
  }

  Observation parse_observation() {
    Observation obs;
    obs.loc = cur().loc;
    size_t save = pos_;
    try {
      obs.formula = parse_formula();
      return obs;
    } catch (const ParseError&) {
      pos_ = save;
    }
    obs.expr = parse_arith();
    return obs;
  }

  // ---- formulas ----

  BoolPtr parse_formula() {
    SourceLoc loc = cur().loc;
    BoolPtr lhs = parse_or();
    if (accept(Token::Kind::Arrow)) return implies(std::move(lhs), parse_formula(), loc);
    return lhs;
  }

  BoolPtr parse_or() {
    SourceLoc loc = cur().loc;
    BoolPtr lhs = parse_and();
    while (at(Token::Kind::Bar) || at(Token::Kind::BarBar) || at_ident("or")) {
      ++pos_;
      lhs = bor(std::move(lhs), parse_and(), loc);
    }
    return lhs;
  }

  BoolPtr parse_and() {
    SourceLoc loc = cur().loc;
    BoolPtr lhs = parse_not();
    while (at(Token::Kind::Amp) || at(Token::Kind::AmpAmp) || at_ident("and")) {
      ++pos_;
      lhs = band(std::move(lhs), parse_not(), loc);
    }
    return lhs;
  }

  BoolPtr parse_not() {
    if (at(Token::Kind::Bang)) {
      SourceLoc loc = next().loc;
      return bnot(parse_not(), loc);
    }
    return parse_bool_primary();
  }

  BoolPtr parse_bool_primary() {
    SourceLoc loc = cur().loc;
    if (at_ident("true")) {
      ++pos_;
      return bool_lit(true, loc);
    }
    if (at_ident("false")) {
      ++pos_;
      return bool_lit(false, loc);
    }
    if (at_ident("has")) {
      ++pos_;
      expect(Token::Kind::LParen, "'('");
      std::string f = expect_ident("feature name");
      expect(Token::Kind::RParen, "')'");
      return has(std::move(f), loc);
    }
    if (at(Token::Kind::LParen)) {
      // Either a parenthesized formula or a parenthesized arithmetic
      // expression opening a comparison; backtrack on failure.
      size_t save = pos_;
      try {
        ++pos_;
        BoolPtr inner = parse_formula();
        expect(Token::Kind::RParen, "')'");
        if (is_cmp_token(cur().kind))
          parse_fail("comparison of boolean operand", cur().loc);
        return inner;
      } catch (const ParseError&) {
        pos_ = save;
      }
    }
    ArithPtr lhs = parse_arith();
    if (!is_cmp_token(cur().kind))
      parse_fail("expected comparison operator, found " + describe(cur()), cur().loc);
    CmpOp op = cmp_op(next().kind);
    return cmp(op, std::move(lhs), parse_arith(), loc);
  }

  static bool is_cmp_token(Token::Kind k) {
    return k == Token::Kind::Lt || k == Token::Kind::Le || k == Token::Kind::EqEq ||
           k == Token::Kind::Assign || k == Token::Kind::Ge || k == Token::Kind::Gt ||
           k == Token::Kind::Neq;
  }
  static CmpOp cmp_op(Token::Kind k) {
    switch (k) {
      case Token::Kind::Lt: return CmpOp::Lt;
      case Token::Kind::Le: return CmpOp::Le;
      case Token::Kind::EqEq:
      case Token::Kind::Assign: return CmpOp::Eq;
      case Token::Kind::Ge: return CmpOp::Ge;
      case Token::Kind::Gt: return CmpOp::Gt;
      default: return CmpOp::Ne;
    }
  }

  // ---- arithmetic ----

  ArithPtr parse_arith() {
    SourceLoc loc = cur().loc;
    ArithPtr lhs = parse_arith_term();
    while (at(Token::Kind::Plus) || at(Token::Kind::Minus)) {
      ArithOp op = next().kind == Token::Kind::Plus ? ArithOp::Add : ArithOp::Sub;
      lhs = bin(op, std::move(lhs), parse_arith_term(), loc);
    }
    return lhs;
  }

  ArithPtr parse_arith_term() {
    SourceLoc loc = cur().loc;
    ArithPtr lhs = parse_arith_factor();
    while (at(Token::Kind::Star) || at(Token::Kind::Slash)) {
      ArithOp op = next().kind == Token::Kind::Star ? ArithOp::Mul : ArithOp::Div;
      lhs = bin(op, std::move(lhs), parse_arith_factor(), loc);
    }
    return lhs;
  }

  ArithPtr parse_arith_factor() {
    SourceLoc loc = cur().loc;
    if (accept(Token::Kind::Minus)) return neg(parse_arith_factor(), loc);
    if (at(Token::Kind::Number)) return num(next().number, loc);
    if (accept(Token::Kind::LParen)) {
      ArithPtr inner = parse_arith();
      expect(Token::Kind::RParen, "')'");
      return inner;
    }
    std::string name = expect_ident("expression");
    if (name == "steps" || name == "step") return steps_ref(loc);
    if (at(Token::Kind::LParen)) {
      ++pos_;
      std::string feature = expect_ident("feature name");
      expect(Token::Kind::RParen, "')'");
      return pred_ref(std::move(name), std::move(feature), loc);
    }
    // Bare names resolve to variables or feature indicators at compile time.
    return var_ref(std::move(name), loc);
  }
};

}  // namespace detail

// Parses a full specification file. Never throws; failures come back as
// diagnostics with source positions.
inline ParseResult parse_specification(const std::string& source) {
  ParseResult result;
  try {
    detail::Parser p(source);
    result.spec = p.parse_specification_file();
  } catch (const ParseError& e) {
    result.diagnostics.push_back(e.diag);
  }
  return result;
}

// Parses an analysis file (a begin analysis ... end analysis block).
inline AnalysisParseResult parse_analysis(const std::string& source) {
  AnalysisParseResult result;
  try {
    detail::Parser p(source);
    result.request = p.parse_analysis_file();
  } catch (const ParseError& e) {
    result.diagnostics.push_back(e.diag);
  }
  return result;
}

}  // namespace qflan
