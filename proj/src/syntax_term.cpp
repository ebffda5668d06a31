#include <algorithm>
#include <cctype>
#include <cmath>

#include "dcml/syntax.hpp"

namespace dcml {

Term Term::var(std::string_view name) {
  Term t;
  t.kind = Kind::Var;
  t.id = intern(name);
  return t;
}

Term Term::sym(std::string_view name) { return sym(intern(name)); }

Term Term::sym(SymId id) {
  Term t;
  t.kind = Kind::Sym;
  t.id = id;
  return t;
}

Term Term::number(double x) {
  Term t;
  t.kind = Kind::Num;
  t.num = x;
  return t;
}

Term Term::compound(std::string_view functor, std::vector<Term> args) {
  return compound(intern(functor), std::move(args));
}

Term Term::compound(SymId functor, std::vector<Term> args) {
  Term t;
  t.kind = Kind::Cmp;
  t.id = functor;
  t.args = std::move(args);
  return t;
}

Term Term::list(std::vector<Term> items) { return compound("[]", std::move(items)); }

Term Term::from_value(const Value& v) { return v.is_num() ? number(v.num) : sym(v.sym); }

bool Term::is(std::string_view functor, std::size_t arity) const {
  return kind == Kind::Cmp && args.size() == arity && name() == functor;
}

bool Term::is_list() const {
  static const SymId list_id = intern("[]");
  return kind == Kind::Cmp && id == list_id;
}

bool Term::ground() const {
  if (kind == Kind::Var) return false;
  for (const auto& a : args)
    if (!a.ground()) return false;
  return true;
}

std::optional<Value> Term::value() const {
  if (kind == Kind::Num) return Value::number(num);
  if (kind == Kind::Sym) return Value::symbol(id);
  return std::nullopt;
}

bool Term::operator==(const Term& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::Num: return num == o.num;
    case Kind::Var:
    case Kind::Sym: return id == o.id;
    case Kind::Cmp: return id == o.id && args == o.args;
  }
  return false;
}

bool Term::operator<(const Term& o) const {
  if (kind != o.kind) return kind < o.kind;
  switch (kind) {
    case Kind::Num: return num < o.num;
    case Kind::Var:
    case Kind::Sym: return symbol_name(id) < symbol_name(o.id);
    case Kind::Cmp:
      if (args.size() != o.args.size()) return args.size() < o.args.size();
      if (id != o.id) return symbol_name(id) < symbol_name(o.id);
      return std::lexicographical_compare(args.begin(), args.end(), o.args.begin(), o.args.end());
  }
  return false;
}

namespace {

bool plain_symbol(const std::string& s) {
  if (s.empty()) return false;
  if (s == "+" || s == "-" || s == "?" || s == "[]") return true;
  if (!(s[0] >= 'a' && s[0] <= 'z')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  out += '\'';
  return out;
}

void print(const Term& t, std::string& out, bool precise);

void print_args(const std::vector<Term>& args, std::string& out, bool precise) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    print(args[i], out, precise);
  }
}

void print(const Term& t, std::string& out, bool precise) {
  switch (t.kind) {
    case Term::Kind::Var: out += t.name(); return;
    case Term::Kind::Sym: {
      const auto& s = t.name();
      out += plain_symbol(s) ? s : quote(s);
      return;
    }
    case Term::Kind::Num: out += precise ? format_number17(t.num) : format_number(t.num); return;
    case Term::Kind::Cmp: break;
  }
  const auto& f = t.name();
  if (t.args.size() == 2 && (f == "~=" || f == "==" || f == ":")) {
    print(t.args[0], out, precise);
    out += f;
    print(t.args[1], out, precise);
    return;
  }
  if (f == "\\+" && t.args.size() == 1) {
    out += "\\+";
    print(t.args[0], out, precise);
    return;
  }
  if (f == ",") {
    out += '(';
    print_args(t.args, out, precise);
    out += ')';
    return;
  }
  if (f == "[]") {
    out += '[';
    print_args(t.args, out, precise);
    out += ']';
    return;
  }
  out += plain_symbol(f) ? f : quote(f);
  out += '(';
  print_args(t.args, out, precise);
  out += ')';
}

}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  print(t, out, false);
  return out;
}

std::string term_text(const Term& t, bool precise) {
  std::string out;
  print(t, out, precise);
  return out;
}

std::string to_string(const Clause& c, bool precise) {
  std::string out = term_text(c.head, precise);
  if (c.dist) {
    out += " ~ ";
    out += term_text(*c.dist, precise);
  }
  if (!c.body.empty()) {
    out += " := ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i) out += ", ";
      out += term_text(c.body[i], precise);
    }
  }
  out += '.';
  return out;
}

std::string print_program(const Program& p, bool precise) {
  std::string out;
  for (const auto& b : p.bias) out += term_text(b, precise) + ".\n";
  if (!p.rank.empty()) {
    std::vector<Term> items;
    for (const auto& r : p.rank) items.push_back(Term::sym(r));
    out += term_text(Term::compound("rank", {Term::list(items)}), precise) + ".\n";
  }
  for (const auto& c : p.clauses) out += to_string(c, precise) + "\n";
  return out;
}

std::vector<const Clause*> Program::facts() const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.kind == Clause::Kind::Fact) out.push_back(&c);
  return out;
}

std::vector<const Clause*> Program::definite_clauses() const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.kind == Clause::Kind::Definite) out.push_back(&c);
  return out;
}

std::vector<const Clause*> Program::distributional_clauses() const {
  std::vector<const Clause*> out;
  for (const auto& c : clauses)
    if (c.kind == Clause::Kind::Distributional) out.push_back(&c);
  return out;
}

// ---- substitution and unification ----

namespace {

const Term* walk(const Term* t, const Substitution& s) {
  while (t->is_var()) {
    auto it = s.find(t->id);
    if (it == s.end()) break;
    t = &it->second;
  }
  return t;
}

bool occurs(SymId v, const Term& t, const Substitution& s) {
  const Term* w = walk(&t, s);
  if (w->is_var()) return w->id == v;
  for (const auto& a : w->args)
    if (occurs(v, a, s)) return true;
  return false;
}

bool unify_into(const Term& a, const Term& b, Substitution& s) {
  const Term* x = walk(&a, s);
  const Term* y = walk(&b, s);
  if (x->is_var() && y->is_var() && x->id == y->id) return true;
  if (x->is_var()) {
    if (occurs(x->id, *y, s)) return false;
    s[x->id] = *y;
    return true;
  }
  if (y->is_var()) {
    if (occurs(y->id, *x, s)) return false;
    s[y->id] = *x;
    return true;
  }
  if (x->kind != y->kind) return false;
  if (x->is_num()) return x->num == y->num;
  if (x->is_sym()) return x->id == y->id;
  if (x->id != y->id || x->args.size() != y->args.size()) return false;
  for (std::size_t i = 0; i < x->args.size(); ++i)
    if (!unify_into(x->args[i], y->args[i], s)) return false;
  return true;
}

Term resolve(const Term& t, const Substitution& s) {
  const Term* w = walk(&t, s);
  if (w->is_var() || w->is_const()) return *w;
  Term out = *w;
  for (auto& a : out.args) a = resolve(a, s);
  return out;
}

}  // namespace

std::optional<Substitution> unify(const Term& a, const Term& b) {
  Substitution tri;
  if (!unify_into(a, b, tri)) return std::nullopt;
  Substitution out;
  for (const auto& [v, t] : tri) out[v] = resolve(t, tri);
  return out;
}

Term apply_substitution(const Term& t, const Substitution& s) {
  if (t.is_var()) {
    auto it = s.find(t.id);
    return it == s.end() ? t : it->second;
  }
  if (!t.is_cmp()) return t;
  Term out = t;
  for (auto& a : out.args) a = apply_substitution(a, s);
  return out;
}

Clause apply_substitution(const Clause& c, const Substitution& s) {
  Clause out = c;
  out.head = apply_substitution(c.head, s);
  if (c.dist) out.dist = apply_substitution(*c.dist, s);
  for (auto& l : out.body) l = apply_substitution(l, s);
  return out;
}

}  // namespace dcml
