#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcml/common.hpp"

namespace dcml {

// Terms are plain value trees. Special syntactic forms are compounds with
// reserved functors: "~=" (value binding), "==" (equality test), "\\+"
// (negation), "," (n-ary conjunction), "[]" (n-ary list), ":" (prob:label).
struct Term {
  enum class Kind : std::uint8_t { Var, Sym, Num, Cmp };
  Kind kind = Kind::Sym;
  SymId id = 0;  // variable name, symbol, or functor
  double num = 0.0;
  std::vector<Term> args;

  static Term var(std::string_view name);
  static Term sym(std::string_view name);
  static Term sym(SymId id);
  static Term number(double x);
  static Term compound(std::string_view functor, std::vector<Term> args);
  static Term compound(SymId functor, std::vector<Term> args);
  static Term list(std::vector<Term> items);
  static Term from_value(const Value& v);

  bool is_var() const { return kind == Kind::Var; }
  bool is_sym() const { return kind == Kind::Sym; }
  bool is_num() const { return kind == Kind::Num; }
  bool is_cmp() const { return kind == Kind::Cmp; }
  bool is_const() const { return kind == Kind::Sym || kind == Kind::Num; }
  bool is(std::string_view functor, std::size_t arity) const;
  bool is_list() const;
  const std::string& name() const { return symbol_name(id); }
  std::size_t arity() const { return args.size(); }
  bool ground() const;
  std::optional<Value> value() const;

  bool operator==(const Term& o) const;
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const;
};

std::string to_string(const Term& t);

struct SourceLoc {
  std::string file;
  int line = 0;
  int col = 0;
};

struct Clause {
  enum class Kind : std::uint8_t { Fact, Definite, Distributional };
  Kind kind = Kind::Fact;
  Term head;
  std::optional<Term> dist;  // present iff Distributional
  std::vector<Term> body;    // literals
  SourceLoc loc;

  bool operator==(const Clause& o) const {
    return kind == o.kind && head == o.head && dist == o.dist && body == o.body;
  }
};

std::string to_string(const Clause& c, bool precise = false);

struct Program {
  std::vector<Clause> clauses;    // source order
  std::vector<Term> bias;         // type/mode/rand declarations
  std::vector<std::string> rank;  // empty when undeclared

  std::vector<const Clause*> facts() const;
  std::vector<const Clause*> definite_clauses() const;
  std::vector<const Clause*> distributional_clauses() const;
  bool operator==(const Program& o) const {
    return clauses == o.clauses && bias == o.bias && rank == o.rank;
  }
};

// Parse a program. Errors carry file:line:col in their message.
Program parse_program(std::string_view text, const std::string& file = "<input>");
// Parse a single term / literal conjunction (used for queries and tests).
Term parse_term(std::string_view text);
std::vector<Term> parse_body(std::string_view text);

// precise: numbers with 17 significant digits instead of shortest round-trip.
std::string print_program(const Program& p, bool precise = false);

using Substitution = std::map<SymId, Term>;  // variable name -> term

std::optional<Substitution> unify(const Term& a, const Term& b);
Term apply_substitution(const Term& t, const Substitution& s);
Clause apply_substitution(const Clause& c, const Substitution& s);

struct Diagnostic {
  enum class Severity : std::uint8_t { Error, Warning };
  Severity severity = Severity::Error;
  ErrorKind kind = ErrorKind::Stratification;
  SourceLoc loc;
  std::string message;
  std::string str() const;  // file:line:col: severity: message
};

std::vector<Diagnostic> validate_program(const Program& p);

// Attribute names read by value-binding atoms anywhere inside a literal.
void collect_rv_attributes(const Term& lit, std::vector<std::string>& out);
bool is_stat_model_literal(const Term& lit);
bool is_aggregate_literal(const Term& lit);
bool is_aggregator_name(std::string_view name);

}  // namespace dcml
