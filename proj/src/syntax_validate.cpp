#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "dcml/syntax.hpp"

namespace dcml {

bool is_aggregator_name(std::string_view name) {
  return name == "avg" || name == "sum" || name == "max" || name == "min" || name == "mod" ||
         name == "count";
}

bool is_aggregate_literal(const Term& lit) {
  return lit.is_cmp() && lit.arity() == 3 && is_aggregator_name(lit.name());
}

bool is_stat_model_literal(const Term& lit) {
  return lit.is("linear", 3) || lit.is("logistic", 3) || lit.is("softmax", 3);
}

void collect_rv_attributes(const Term& lit, std::vector<std::string>& out) {
  if (!lit.is_cmp()) return;
  if (lit.is("~=", 2)) {
    const Term& rv = lit.args[0];
    if (rv.is_cmp() || rv.is_sym()) out.push_back(rv.name());
    return;
  }
  if (lit.is("\\+", 1)) {
    collect_rv_attributes(lit.args[0], out);
  } else if (lit.is(",", lit.arity())) {
    for (const auto& a : lit.args) collect_rv_attributes(a, out);
  } else if (is_aggregate_literal(lit)) {
    collect_rv_attributes(lit.args[1], out);
  }
}

namespace {

// Relational predicate calls (name) made by a literal, including nested goals.
void collect_calls(const Term& lit, std::vector<std::string>& out) {
  if (lit.is("~=", 2) || lit.is("==", 2) || is_stat_model_literal(lit)) return;
  if (lit.is("\\+", 1)) {
    collect_calls(lit.args[0], out);
  } else if (lit.is_cmp() && lit.is(",", lit.arity())) {
    for (const auto& a : lit.args) collect_calls(a, out);
  } else if (is_aggregate_literal(lit)) {
    collect_calls(lit.args[1], out);
  } else if (lit.is_cmp() || lit.is_sym()) {
    out.push_back(lit.name());
  }
}

std::string head_attr(const Clause& c) { return c.head.name(); }

// Canonical text of a clause with variables renamed by first occurrence.
std::string canonical(const Clause& c) {
  std::map<SymId, int> names;
  std::function<Term(const Term&)> ren = [&](const Term& t) -> Term {
    if (t.is_var()) {
      auto it = names.find(t.id);
      int n = it == names.end() ? (names[t.id] = static_cast<int>(names.size())) : it->second;
      return Term::var("V" + std::to_string(n));
    }
    if (!t.is_cmp()) return t;
    Term o = t;
    for (auto& a : o.args) a = ren(a);
    return o;
  };
  Clause k = c;
  k.head = ren(c.head);
  k.dist.reset();
  for (auto& l : k.body) l = ren(l);
  return to_string(k);
}

Diagnostic diag(ErrorKind kind, const SourceLoc& loc, std::string msg) {
  Diagnostic d;
  d.kind = kind;
  d.loc = loc;
  d.message = std::string(error_kind_name(kind)) + ": " + std::move(msg);
  return d;
}

}  // namespace

std::string Diagnostic::str() const {
  return loc.file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) + ": " +
         (severity == Severity::Error ? "error" : "warning") + ": " + message;
}

std::vector<Diagnostic> validate_program(const Program& p) {
  std::vector<Diagnostic> out;

  // Attributes each definite predicate reads, transitively.
  std::map<std::string, std::set<std::string>> def_reads;
  std::map<std::string, std::set<std::string>> def_calls;
  for (const auto* c : p.definite_clauses()) {
    auto& reads = def_reads[head_attr(*c)];
    for (const auto& l : c->body) {
      std::vector<std::string> a, k;
      collect_rv_attributes(l, a);
      collect_calls(l, k);
      reads.insert(a.begin(), a.end());
      def_calls[head_attr(*c)].insert(k.begin(), k.end());
    }
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& [pred, calls] : def_calls) {
      for (const auto& q : calls) {
        auto it = def_reads.find(q);
        if (it == def_reads.end() || q == pred) continue;
        for (const auto& a : it->second)
          if (def_reads[pred].insert(a).second) changed = true;
      }
    }
  }

  auto body_reads = [&](const Clause& c) {
    std::set<std::string> reads;
    for (const auto& l : c.body) {
      std::vector<std::string> a, k;
      collect_rv_attributes(l, a);
      collect_calls(l, k);
      reads.insert(a.begin(), a.end());
      for (const auto& q : k) {
        auto it = def_reads.find(q);
        if (it != def_reads.end()) reads.insert(it->second.begin(), it->second.end());
      }
    }
    return reads;
  };

  auto dcs = p.distributional_clauses();
  if (!p.rank.empty()) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < p.rank.size(); ++i) pos.emplace(p.rank[i], i);
    std::set<std::string> reported;
    for (const auto* c : dcs) {
      auto h = head_attr(*c);
      if (!pos.count(h)) {
        if (reported.insert(h).second)
          out.push_back(diag(ErrorKind::MissingRank, c->loc, "attribute " + h + " has no rank"));
        continue;
      }
      for (const auto& a : body_reads(*c)) {
        auto it = pos.find(a);
        if (it != pos.end() && it->second >= pos[h])
          out.push_back(diag(ErrorKind::Stratification, c->loc,
                             "clause for " + h + " reads " + a + ", which does not rank before it"));
      }
    }
  } else {
    // No declared rank: one must exist, i.e. the read graph must be acyclic.
    std::map<std::string, std::set<std::string>> reads;
    std::map<std::string, const Clause*> first;
    for (const auto* c : dcs) {
      auto h = head_attr(*c);
      first.emplace(h, c);
      auto r = body_reads(*c);
      reads[h].insert(r.begin(), r.end());
    }
    std::map<std::string, int> state;  // 0 new, 1 active, 2 done
    std::set<std::string> cyclic;
    std::function<void(const std::string&)> dfs = [&](const std::string& a) {
      state[a] = 1;
      for (const auto& b : reads[a]) {
        if (!reads.count(b)) continue;
        if (state[b] == 1) {
          cyclic.insert(a);
        } else if (state[b] == 0) {
          dfs(b);
        }
      }
      state[a] = 2;
    };
    for (const auto& [a, _] : reads)
      if (state[a] == 0) dfs(a);
    for (const auto& a : cyclic)
      out.push_back(diag(ErrorKind::Stratification, first[a]->loc,
                         "no rank order exists: " + a + " depends on itself"));
  }

  std::map<std::string, const Clause*> seen;
  for (const auto* c : dcs) {
    auto key = canonical(*c);
    auto [it, fresh] = seen.emplace(key, c);
    if (!fresh)
      out.push_back(diag(ErrorKind::Stratification, c->loc,
                         "clause duplicates the body of the clause at line " +
                             std::to_string(it->second->loc.line) + " for the same random variable"));
  }
  return out;
}

}  // namespace dcml
