#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "graphgen/error.hpp"
#include "graphgen/query.hpp"
#include "graphgen/store.hpp"

namespace graphgen {

enum class RuleKind { Nodes, Edges };

struct Rule {
  RuleKind kind = RuleKind::Nodes;
  std::vector<std::string> head;
  std::vector<Atom> body;
  int line = 0;
  int col = 0;

  bool operator==(const Rule& o) const { return kind == o.kind && head == o.head && body == o.body; }
};

struct ExtractionProgram {
  std::vector<Rule> nodes_rules;
  std::vector<Rule> edges_rules;

  bool operator==(const ExtractionProgram& o) const {
    return nodes_rules == o.nodes_rules && edges_rules == o.edges_rules;
  }
};

enum class RuleCase { Case1, Case2 };

struct JoinChain {
  std::vector<Atom> atoms;                     // R_1 .. R_n in path order
  std::vector<std::vector<std::string>> joins;  // a_1 .. a_{n-1}; sorted variable names per join
  std::string id1, id2;
  // Constant predicates per atom as (column, constant term).
  std::vector<std::vector<std::pair<std::size_t, Term>>> predicates;

  bool operator==(const JoinChain& o) const {
    return atoms == o.atoms && joins == o.joins && id1 == o.id1 && id2 == o.id2;
  }
};

namespace detail {

struct Token {
  enum Kind { Ident, Int, Str, LParen, RParen, Comma, Dot, Implies, End } kind;
  std::string text;
  std::int64_t ival = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : s_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip();
      Token t;
      t.line = line_;
      t.col = col_;
      if (i_ >= s_.size()) {
        t.kind = Token::End;
        out.push_back(t);
        return out;
      }
      char c = s_[i_];
      if (c == '(') { t.kind = Token::LParen; adv(); }
      else if (c == ')') { t.kind = Token::RParen; adv(); }
      else if (c == ',') { t.kind = Token::Comma; adv(); }
      else if (c == '.') { t.kind = Token::Dot; adv(); }
      else if (c == ':') {
        adv();
        if (i_ >= s_.size() || s_[i_] != '-') throw ParseError(t.line, t.col, "expected ':-'");
        adv();
        t.kind = Token::Implies;
      } else if (c == '"') {
        adv();
        t.kind = Token::Str;
        for (;;) {
          if (i_ >= s_.size() || s_[i_] == '\n') throw ParseError(t.line, t.col, "unterminated string literal");
          char d = s_[i_];
          adv();
          if (d == '"') break;
          if (d == '\\') {
            if (i_ >= s_.size()) throw ParseError(t.line, t.col, "unterminated string literal");
            d = s_[i_];
            adv();
          }
          t.text.push_back(d);
        }
      } else if (c == '-' || word(c)) {
        bool neg = c == '-';
        if (neg) adv();
        std::string w;
        while (i_ < s_.size() && word(s_[i_])) {
          w.push_back(s_[i_]);
          adv();
        }
        bool digits = !w.empty() && std::all_of(w.begin(), w.end(), [](char x) { return x >= '0' && x <= '9'; });
        if (neg && !digits) throw ParseError(t.line, t.col, "expected an integer after '-'");
        if (digits) {
          auto v = parse_int((neg ? "-" : "") + w);
          if (!v) throw ParseError(t.line, t.col, "integer literal out of range");
          t.kind = Token::Int;
          t.ival = *v;
        } else {
          t.kind = Token::Ident;
          t.text = w;
        }
      } else {
        throw ParseError(t.line, t.col, std::string("unexpected character '") + c + "'");
      }
      out.push_back(t);
    }
  }

 private:
  static bool word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
  void adv() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }
  void skip() {
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (c == '#') {
        while (i_ < s_.size() && s_[i_] != '\n') adv();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        adv();
      } else {
        break;
      }
    }
  }
  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1, col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  ExtractionProgram run() {
    ExtractionProgram p;
    while (peek().kind != Token::End) {
      Rule r = rule();
      (r.kind == RuleKind::Nodes ? p.nodes_rules : p.edges_rules).push_back(std::move(r));
    }
    if (p.nodes_rules.empty()) throw ParseError(peek().line, peek().col, "program needs at least one Nodes rule");
    if (p.edges_rules.empty()) throw ParseError(peek().line, peek().col, "program needs at least one Edges rule");
    return p;
  }

 private:
  const Token& peek() const { return t_[i_]; }
  const Token& take(Token::Kind k, const char* what) {
    if (t_[i_].kind != k) throw ParseError(t_[i_].line, t_[i_].col, std::string("expected ") + what);
    return t_[i_++];
  }

  Rule rule() {
    const Token& kw = take(Token::Ident, "'Nodes' or 'Edges'");
    Rule r;
    r.line = kw.line;
    r.col = kw.col;
    if (kw.text == "Nodes") r.kind = RuleKind::Nodes;
    else if (kw.text == "Edges") r.kind = RuleKind::Edges;
    else throw ParseError(kw.line, kw.col, "expected 'Nodes' or 'Edges', got '" + kw.text + "'");
    take(Token::LParen, "'('");
    r.head.push_back(take(Token::Ident, "a head variable").text);
    while (peek().kind == Token::Comma) {
      ++i_;
      r.head.push_back(take(Token::Ident, "a head variable").text);
    }
    take(Token::RParen, "')'");
    if (r.kind == RuleKind::Edges && r.head.size() < 2)
      throw ParseError(r.line, r.col, "Edges head needs at least two attributes (ID1, ID2)");
    take(Token::Implies, "':-'");
    r.body.push_back(atom());
    while (peek().kind == Token::Comma) {
      ++i_;
      r.body.push_back(atom());
    }
    take(Token::Dot, "'.' at end of statement");
    for (const auto& h : r.head) {
      bool found = std::any_of(r.body.begin(), r.body.end(), [&](const Atom& a) { return a.mentions(h); });
      if (!found) throw UnboundHeadVariable(r.line, r.col, h);
    }
    return r;
  }

  Atom atom() {
    const Token& name = take(Token::Ident, "a relation name");
    Atom a;
    a.relation = name.text;
    a.line = name.line;
    a.col = name.col;
    take(Token::LParen, "'('");
    a.args.push_back(term());
    while (peek().kind == Token::Comma) {
      ++i_;
      a.args.push_back(term());
    }
    take(Token::RParen, "')'");
    return a;
  }

  Term term() {
    const Token& t = t_[i_];
    switch (t.kind) {
      case Token::Ident: ++i_; return Term::var(t.text);
      case Token::Int: ++i_; return Term::integer(t.ival);
      case Token::Str: ++i_; return Term::str(t.text);
      default: throw ParseError(t.line, t.col, "expected a variable or constant");
    }
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
};

inline std::string print_term(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Var: return t.text;
    case Term::Kind::Int: return std::to_string(t.ival);
    case Term::Kind::Str: {
      std::string s = "\"";
      for (char c : t.text) {
        if (c == '"' || c == '\\') s.push_back('\\');
        s.push_back(c);
      }
      return s + "\"";
    }
  }
  return {};
}

}  // namespace detail

inline ExtractionProgram parse(const std::string& text) {
  return detail::Parser(detail::Lexer(text).run()).run();
}

inline std::string to_string(const Atom& a) {
  std::string s = a.relation + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) s += (i ? ", " : "") + detail::print_term(a.args[i]);
  return s + ")";
}

inline std::string to_string(const Rule& r) {
  std::string s = r.kind == RuleKind::Nodes ? "Nodes(" : "Edges(";
  for (std::size_t i = 0; i < r.head.size(); ++i) s += (i ? ", " : "") + r.head[i];
  s += ") :- ";
  for (std::size_t i = 0; i < r.body.size(); ++i) s += (i ? ", " : "") + to_string(r.body[i]);
  return s + ".";
}

inline std::string pretty_print(const ExtractionProgram& p) {
  std::string s;
  for (const auto& r : p.nodes_rules) s += to_string(r) + "\n";
  for (const auto& r : p.edges_rules) s += to_string(r) + "\n";
  return s;
}

// Checks relations and arities against the catalog.
inline void validate(const ExtractionProgram& p, const Catalog& cat) {
  auto check = [&](const Rule& r) {
    for (const auto& a : r.body) {
      if (!cat.has_table(a.relation))
        throw CatalogError(std::to_string(a.line) + ":" + std::to_string(a.col) + ": unknown table '" +
                           a.relation + "'");
      if (cat.table(a.relation).arity() != a.args.size())
        throw CatalogError(std::to_string(a.line) + ":" + std::to_string(a.col) + ": " + a.relation +
                           " has " + std::to_string(cat.table(a.relation).arity()) + " columns, atom has " +
                           std::to_string(a.args.size()));
    }
  };
  for (const auto& r : p.nodes_rules) check(r);
  for (const auto& r : p.edges_rules) check(r);
}

namespace detail {

// Returns atom indices in path order from the ID1 atom, or an empty vector when the
// body is not a chain in the Case 1 sense.
inline std::vector<std::size_t> chain_order(const Rule& r) {
  if (r.kind != RuleKind::Edges || r.head.size() < 2) return {};
  const std::string& id1 = r.head[0];
  const std::string& id2 = r.head[1];
  if (id1 == id2) return {};
  const std::size_t n = r.body.size();
  std::map<std::string, std::vector<std::size_t>> occ;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::string> seen;
    for (const auto& t : r.body[i].args) {
      if (!t.is_var()) continue;
      if (!seen.insert(t.text).second) return {};  // repeated variable inside one atom
      occ[t.text].push_back(i);
    }
  }
  for (const auto& [v, atoms] : occ)
    if (atoms.size() > 2) return {};  // variable joins more than two atoms
  if (occ[id1].size() != 1 || occ[id2].size() != 1) return {};
  std::vector<std::set<std::size_t>> adj(n);
  for (const auto& [v, atoms] : occ)
    if (atoms.size() == 2) {
      adj[atoms[0]].insert(atoms[1]);
      adj[atoms[1]].insert(atoms[0]);
    }
  std::size_t start = occ[id1][0], finish = occ[id2][0];
  if (n == 1) return start == finish ? std::vector<std::size_t>{0} : std::vector<std::size_t>{};
  if (start == finish) return {};
  std::size_t edges = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (adj[i].size() > 2) return {};
    edges += adj[i].size();
  }
  if (edges / 2 != n - 1 || adj[start].size() != 1 || adj[finish].size() != 1) return {};
  std::vector<std::size_t> order = {start};
  std::vector<bool> used(n, false);
  used[start] = true;
  while (order.size() < n) {
    std::size_t cur = order.back(), next = n;
    for (auto j : adj[cur])
      if (!used[j]) next = j;
    if (next == n) return {};  // disconnected
    used[next] = true;
    order.push_back(next);
  }
  return order.back() == finish ? order : std::vector<std::size_t>{};
}

}  // namespace detail

inline RuleCase classify(const Rule& r) {
  return detail::chain_order(r).empty() ? RuleCase::Case2 : RuleCase::Case1;
}

inline std::vector<RuleCase> classify(const ExtractionProgram& p, const Catalog& cat) {
  validate(p, cat);
  std::vector<RuleCase> out;
  for (const auto& r : p.edges_rules) out.push_back(classify(r));
  return out;
}

inline JoinChain normalize_chain(const Rule& r) {
  auto order = detail::chain_order(r);
  if (order.empty()) throw NotChainable("Edges rule at line " + std::to_string(r.line) + " is not a join chain");
  JoinChain c;
  c.id1 = r.head[0];
  c.id2 = r.head[1];
  for (auto i : order) c.atoms.push_back(r.body[i]);
  for (std::size_t i = 0; i + 1 < c.atoms.size(); ++i) {
    std::vector<std::string> shared;
    for (const auto& t : c.atoms[i].args)
      if (t.is_var() && c.atoms[i + 1].mentions(t.text)) shared.push_back(t.text);
    std::sort(shared.begin(), shared.end());
    c.joins.push_back(shared);
  }
  c.predicates.resize(c.atoms.size());
  for (std::size_t i = 0; i < c.atoms.size(); ++i)
    for (std::size_t k = 0; k < c.atoms[i].args.size(); ++k)
      if (!c.atoms[i].args[k].is_var()) c.predicates[i].emplace_back(k, c.atoms[i].args[k]);
  return c;
}

}  // namespace graphgen
