#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace graphgen {

struct Term {
  enum class Kind { Var, Int, Str };
  Kind kind = Kind::Var;
  std::string text;  // variable name or string literal contents
  std::int64_t ival = 0;

  static Term var(std::string name) { return {Kind::Var, std::move(name), 0}; }
  static Term integer(std::int64_t v) { return {Kind::Int, {}, v}; }
  static Term str(std::string s) { return {Kind::Str, std::move(s), 0}; }

  bool is_var() const { return kind == Kind::Var; }
  bool operator==(const Term& o) const {
    return kind == o.kind && text == o.text && ival == o.ival;
  }
};

struct Atom {
  std::string relation;
  std::vector<Term> args;
  int line = 0;
  int col = 0;

  bool mentions(const std::string& var) const {
    for (const auto& t : args)
      if (t.is_var() && t.text == var) return true;
    return false;
  }
  // Structural equality; source positions are ignored.
  bool operator==(const Atom& o) const { return relation == o.relation && args == o.args; }
};

// A conjunctive fragment projected onto two boundary variable lists.
// Each boundary has one variable, or several for a composite join key.
struct Segment {
  std::vector<Atom> atoms;
  std::vector<std::string> left;
  std::vector<std::string> right;
};

}  // namespace graphgen
