#pragma once

#include <angerona/rational.hpp>

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace angerona {

// Grammar-level AST of the ProbLog dialect. Variables start with an uppercase
// letter, constants are lowercase identifiers, quoted strings or integers.

struct Term {
  enum class Kind { Variable, Constant };
  Kind kind = Kind::Constant;
  std::string name;

  bool is_var() const { return kind == Kind::Variable; }
  auto operator<=>(const Term&) const = default;
};

Term mk_var(std::string name);
Term mk_const(std::string name);

struct Atom {
  std::string pred;
  std::vector<Term> args;

  bool ground() const;
  auto operator<=>(const Atom&) const = default;
};

struct GroundAtom {
  std::string pred;
  std::vector<std::string> args;

  auto operator<=>(const GroundAtom&) const = default;
};

std::string to_string(const Atom& a);
std::string to_string(const GroundAtom& a);
GroundAtom to_ground(const Atom& a);     // precondition: a.ground()
Atom to_atom(const GroundAtom& a);

struct Literal {
  bool positive = true;
  Atom atom;

  auto operator<=>(const Literal&) const = default;
};

struct Constraint {
  Term lhs;
  bool eq = true;  // false: inequality
  Term rhs;

  auto operator<=>(const Constraint&) const = default;
};

struct Rule {
  Atom head;
  std::vector<Literal> body;
  std::vector<Constraint> cstr;
  // Present on sugared probabilistic rules / annotated-disjunction heads.
  std::optional<Rat> annotation;

  auto operator<=>(const Rule&) const = default;
};

// One ⟨v⟩a disjunct of an annotated disjunction.
struct Disjunct {
  Rat prob;
  Atom atom;
  auto operator<=>(const Disjunct&) const = default;
};

struct Statement {
  enum class Kind {
    ProbAtom,       // ⟨v⟩a.   (v may be 1: plain fact)
    Disjunction,    // ⟨v1⟩a1; ...; ⟨vn⟩an [:- body].
    Rule,           // h :- body.  or probabilistic ⟨v⟩h :- body.
    Evidence,       // evidence(a, true|false).
  };
  Kind kind = Kind::ProbAtom;

  Rat prob;                          // ProbAtom
  Atom atom;                         // ProbAtom / Evidence
  bool evidence_value = true;        // Evidence
  std::vector<Disjunct> disjuncts;   // Disjunction
  Rule rule;                         // Rule; Disjunction body lives in rule.body/cstr
  int line = 0;

  auto operator<=>(const Statement&) const = default;
};

struct Program {
  std::vector<Statement> statements;
  // All constants appearing anywhere (dom is finite).
  std::set<std::string> domain;
  // Arity per predicate, first use wins.
  std::map<std::string, int> arity;

  auto operator<=>(const Program&) const = default;
};

struct ParseError : std::runtime_error {
  int line;
  int column;
  ParseError(std::string msg, int line_, int col_)
      : std::runtime_error(std::move(msg)), line(line_), column(col_) {}
};

// Parses the ProbLog dialect (see README for the grammar).
Program parse_program(const std::string& text);

// Prints a program in the concrete syntax; parse(print(p)) is structurally
// equal to p.
std::string print_program(const Program& p);
std::string print_rule(const Rule& r);

std::set<std::string> vars_of(const Atom& a);
std::set<std::string> vars_of(const Rule& r);

}  // namespace angerona
