#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dcml/relational.hpp"

namespace dcml {

namespace {

std::string text_of(const Term& t) { return t.is_sym() ? t.name() : to_string(t); }

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double x = 0;
  const char* b = s.data();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return x;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

void parse_mode(const Term& m, BiasSpec& b) {
  if (!m.is("mode", 3)) fail(ErrorKind::ModeTypeError, "malformed mode declaration " + to_string(m));
  ModeDecl d;
  d.source = m;
  if (!m.args[0].is_sym() || !m.args[1].is_sym())
    fail(ErrorKind::ModeTypeError, "malformed mode declaration " + to_string(m));
  d.target = m.args[0].name();
  d.aggregator = m.args[1].name();
  if (d.aggregator != "none" && !is_aggregator_name(d.aggregator))
    fail(ErrorKind::ModeTypeError, "unknown aggregation function " + d.aggregator + " in " + to_string(m));
  const Term& pat = m.args[2];
  auto attr_atom = [&](const Term& a) {
    if (!a.is_cmp() || a.arity() != 1 || !a.args[0].is_sym() || a.args[0].name() != "+")
      fail(ErrorKind::ModeTypeError, "attribute pattern must be attr(+) in " + to_string(m));
    d.attribute = a.name();
  };
  if (d.aggregator == "none") {
    attr_atom(pat);
  } else {
    if (!pat.is(",", 2)) fail(ErrorKind::ModeTypeError, "aggregation mode needs (link(...), attr(+)) in " + to_string(m));
    const Term& link = pat.args[0];
    if (!link.is_cmp()) fail(ErrorKind::ModeTypeError, "malformed link pattern in " + to_string(m));
    d.link = link.name();
    for (const auto& a : link.args) {
      if (!a.is_sym() || (a.name() != "+" && a.name() != "-"))
        fail(ErrorKind::ModeTypeError, "link arguments must be + or - in " + to_string(m));
      d.link_modes.push_back(a.name()[0]);
    }
    attr_atom(pat.args[1]);
  }
  b.modes.push_back(std::move(d));
}

void check_mode(ModeDecl& d, const BiasSpec& b) {
  std::string where = " in " + to_string(d.source);
  if (!b.rand(d.target)) fail(ErrorKind::UnknownAttribute, "mode target " + d.target + " has no rand declaration");
  if (!b.rand(d.attribute))
    fail(ErrorKind::UnknownAttribute, "mode attribute " + d.attribute + " has no rand declaration");
  std::string target_type = b.entity_type(d.target);
  std::string attr_type = b.entity_type(d.attribute);
  if (!d.link) {
    if (attr_type != target_type)
      fail(ErrorKind::ModeTypeError, d.attribute + "(" + attr_type + ") cannot take the " + target_type +
                                         "-typed head argument of " + d.target + where);
    return;
  }
  const auto* lt = b.type_of(*d.link);
  if (lt && lt->size() != d.link_modes.size())
    fail(ErrorKind::ModeTypeError, "link " + *d.link + " has arity " + std::to_string(lt->size()) + where);
  int n = static_cast<int>(d.link_modes.size());
  if (lt) {
    for (int i = 0; i < n; ++i)
      if (d.link_modes[i] == '+' && (*lt)[i] != target_type)
        fail(ErrorKind::ModeTypeError, "input argument " + std::to_string(i + 1) + " of " + *d.link + " has type " +
                                           (*lt)[i] + ", not the head type " + target_type + where);
    for (int pass = 0; pass < 2 && d.attribute_position < 0; ++pass)
      for (int i = n - 1; i >= 0; --i)
        if ((d.link_modes[i] == '-') == (pass == 0) && (*lt)[i] == attr_type) {
          d.attribute_position = i;
          break;
        }
    if (d.attribute_position < 0)
      fail(ErrorKind::ModeTypeError, "no argument of " + *d.link + " has the type " + attr_type + " of " +
                                         d.attribute + where);
  } else {
    // untyped link (e.g. defined in background knowledge): read the last output
    for (int i = n - 1; i >= 0 && d.attribute_position < 0; --i)
      if (d.link_modes[i] == '-') d.attribute_position = i;
    if (d.attribute_position < 0) d.attribute_position = n - 1;
  }
}

}  // namespace

// ---------------------------------------------------------------- bias

const RandDecl* BiasSpec::rand(const std::string& attribute) const {
  for (const auto& r : rands)
    if (r.attribute == attribute) return &r;
  return nullptr;
}

const std::vector<std::string>* BiasSpec::type_of(const std::string& functor) const {
  auto it = types.find(functor);
  return it == types.end() ? nullptr : &it->second;
}

std::string BiasSpec::entity_type(const std::string& functor) const {
  const auto* t = type_of(functor);
  if (!t || t->size() != 1) fail(ErrorKind::UnknownAttribute, functor + " has no unary type declaration");
  return (*t)[0];
}

std::vector<const ModeDecl*> BiasSpec::modes_for(const std::string& target) const {
  std::vector<const ModeDecl*> out;
  for (const auto& m : modes)
    if (m.target == target) out.push_back(&m);
  return out;
}

int BiasSpec::rank_of(const std::string& attribute) const {
  auto it = std::find(rank.begin(), rank.end(), attribute);
  return it == rank.end() ? -1 : static_cast<int>(it - rank.begin());
}

BiasSpec bias_from_program(const Program& p) {
  BiasSpec b;
  b.rank = p.rank;
  b.background.clauses = p.clauses;
  for (const auto& d : p.bias) {
    if (d.is("type", 1)) {
      const Term& t = d.args[0];
      std::vector<std::string> ts;
      if (!t.is_cmp() && !t.is_sym()) fail(ErrorKind::ModeTypeError, "malformed type declaration " + to_string(d));
      for (const auto& a : t.args) ts.push_back(text_of(a));
      auto it = b.types.find(t.name());
      if (it != b.types.end() && it->second != ts)
        fail(ErrorKind::ModeTypeError, "conflicting type declarations for " + t.name());
      if (it == b.types.end()) b.type_order.push_back(t.name());
      b.types[t.name()] = ts;
    } else if (d.is("rand", 3)) {
      RandDecl r;
      if (!d.args[0].is_sym() || !d.args[1].is_sym() || !d.args[2].is_list())
        fail(ErrorKind::Data, "malformed rand declaration " + to_string(d));
      r.attribute = d.args[0].name();
      const std::string& kind = d.args[1].name();
      if (kind == "continuous")
        r.kind = AttrKind::Continuous;
      else if (kind == "discrete")
        r.kind = AttrKind::Discrete;
      else
        fail(ErrorKind::Data, "rand kind must be continuous or discrete in " + to_string(d));
      for (const auto& l : d.args[2].args) {
        auto v = l.value();
        if (!v) fail(ErrorKind::Data, "discrete labels must be constants in " + to_string(d));
        if (std::find(r.domain.begin(), r.domain.end(), *v) != r.domain.end())
          fail(ErrorKind::Data, "duplicate label " + v->str() + " in " + to_string(d));
        r.domain.push_back(*v);
      }
      if (r.kind == AttrKind::Discrete && r.domain.empty())
        fail(ErrorKind::Data, "discrete attribute " + r.attribute + " needs a label list");
      if (b.rand(r.attribute)) fail(ErrorKind::Data, "duplicate rand declaration for " + r.attribute);
      b.rands.push_back(std::move(r));
    } else if (d.is("mode", 3)) {
      parse_mode(d, b);
    } else {
      fail(ErrorKind::Data, "unknown declaration " + to_string(d));
    }
  }
  for (const auto& r : b.rands) {
    const auto* t = b.type_of(r.attribute);
    if (!t || t->size() != 1)
      fail(ErrorKind::UnknownAttribute, "attribute " + r.attribute + " needs a unary type declaration");
  }
  for (const auto& a : b.rank)
    if (!b.rand(a)) fail(ErrorKind::UnknownAttribute, "ranked attribute " + a + " has no rand declaration");
  for (auto& m : b.modes) check_mode(m, b);
  return b;
}

BiasSpec parse_bias(std::string_view text, const std::string& file) {
  return bias_from_program(parse_program(text, file));
}

// ---------------------------------------------------------------- tables

int EntityTable::attribute_index(const std::string& a) const {
  auto it = std::find(attributes.begin(), attributes.end(), a);
  return it == attributes.end() ? -1 : static_cast<int>(it - attributes.begin());
}

int EntityTable::row_of(const std::string& key) const {
  auto it = std::find(keys.begin(), keys.end(), key);
  return it == keys.end() ? -1 : static_cast<int>(it - keys.begin());
}

const EntityTable* TableBundle::entity(const std::string& name) const {
  for (const auto& e : entities)
    if (e.name == name) return &e;
  return nullptr;
}

EntityTable* TableBundle::entity(const std::string& name) {
  for (auto& e : entities)
    if (e.name == name) return &e;
  return nullptr;
}

const EntityTable* TableBundle::table_of_attribute(const std::string& attribute) const {
  for (const auto& e : entities)
    if (e.attribute_index(attribute) >= 0) return &e;
  return nullptr;
}

std::size_t TableBundle::attribute_cells() const {
  std::size_t n = 0;
  for (const auto& e : entities) n += e.keys.size() * e.attributes.size();
  return n;
}

bool CellRef::operator<(const CellRef& o) const {
  return std::tie(table, key, attribute) < std::tie(o.table, o.key, o.attribute);
}

Term CellRef::rv() const { return Term::compound(attribute, {Term::sym(key)}); }

TableBundle empty_bundle(const BiasSpec& schema) {
  TableBundle b;
  b.schema = schema;
  for (const auto& name : schema.type_order) {
    if (schema.rand(name)) continue;
    const auto& ts = schema.types.at(name);
    if (ts.size() == 1) {
      bool shared = false;
      for (const auto& e : b.entities) shared |= e.type == ts[0];
      if (shared) fail(ErrorKind::Data, "two entity tables share type " + ts[0]);
      EntityTable e;
      e.name = name;
      e.type = ts[0];
      for (const auto& r : schema.rands)
        if (schema.entity_type(r.attribute) == e.type) e.attributes.push_back(r.attribute);
      b.entities.push_back(std::move(e));
    } else if (ts.size() >= 2) {
      LinkTable l;
      l.name = name;
      l.types = ts;
      l.columns = ts;
      b.links.push_back(std::move(l));
    }
  }
  for (const auto& r : schema.rands)
    if (!b.table_of_attribute(r.attribute))
      fail(ErrorKind::Data, "attribute " + r.attribute + " has no entity table of type " +
                                schema.entity_type(r.attribute));
  return b;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, was_quoted = false, any = false;
  std::size_t i = 0, line = 1;
  auto end_field = [&] {
    row.push_back(was_quoted ? field : trim(field));
    field.clear();
    was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty() && !any)) rows.push_back(row);
    row.clear();
    any = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"') {
      if (!trim(field).empty()) fail(ErrorKind::Data, "csv line " + std::to_string(line) + ": stray quote");
      field.clear();
      quoted = was_quoted = any = true;
    } else if (c == ',') {
      end_field();
      any = true;
    } else if (c == '\n' || c == '\r') {
      end_row();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      ++line;
    } else {
      if (was_quoted && c != ' ' && c != '\t')
        fail(ErrorKind::Data, "csv line " + std::to_string(line) + ": text after closing quote");
      if (!was_quoted) field.push_back(c);
      any = true;
    }
    ++i;
  }
  if (quoted) fail(ErrorKind::Data, "csv: unterminated quoted field");
  if (any || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string format_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out.push_back(',');
      const std::string& f = r[i];
      bool quote = f.find_first_of(",\"\n\r") != std::string::npos ||
                   (!f.empty() && (f.front() == ' ' || f.back() == ' ' || f.front() == '\t' || f.back() == '\t'));
      if (!quote) {
        out += f;
        continue;
      }
      out.push_back('"');
      for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    }
    out.push_back('\n');
  }
  return out;
}

namespace {

Cell parse_cell(const RandDecl& r, const std::string& text, const std::string& where) {
  Cell c;
  if (text.empty() || text == "-") return c;
  if (text == "?") {
    c.status = CellStatus::Query;
    return c;
  }
  c.status = CellStatus::Observed;
  if (r.kind == AttrKind::Continuous) {
    auto x = parse_double(text);
    if (!x || !std::isfinite(*x)) fail(ErrorKind::TypeMismatch, where + ": '" + text + "' is not a number");
    c.value = Value::number(*x);
    return c;
  }
  auto x = parse_double(text);
  for (const auto& l : r.domain) {
    if ((l.is_sym() && symbol_name(l.sym) == text) || (l.is_num() && x && *x == l.num)) {
      c.value = l;
      return c;
    }
  }
  fail(ErrorKind::Data, where + ": '" + text + "' is not in the domain of " + r.attribute);
}

}  // namespace

void load_entity_csv(TableBundle& b, const std::string& table, std::string_view csv) {
  EntityTable* t = b.entity(table);
  if (!t) fail(ErrorKind::Data, "no entity table " + table + " in the schema");
  auto rows = parse_csv(csv);
  if (rows.empty()) return;
  const auto& header = rows[0];
  if (header.empty() || header[0].empty()) fail(ErrorKind::Data, table + ": missing key column header");
  t->key_column = header[0];
  std::vector<int> col_attr;
  for (std::size_t j = 1; j < header.size(); ++j) {
    int a = t->attribute_index(header[j]);
    if (a < 0)
      fail(ErrorKind::Data, table + ": column " + header[j] +
                                " is not an attribute of the table (foreign keys belong in link tables)");
    if (std::find(col_attr.begin(), col_attr.end(), a) != col_attr.end())
      fail(ErrorKind::Data, table + ": duplicate column " + header[j]);
    col_attr.push_back(a);
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::string where = table + " row " + std::to_string(i);
    if (r.size() != header.size())
      fail(ErrorKind::Data, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(r.size()));
    if (r[0].empty()) fail(ErrorKind::Data, where + ": empty key");
    if (t->row_of(r[0]) >= 0) fail(ErrorKind::DuplicateKey, table + ": duplicate key " + r[0]);
    std::vector<Cell> cells(t->attributes.size());
    for (std::size_t j = 1; j < r.size(); ++j) {
      const std::string& attr = t->attributes[col_attr[j - 1]];
      cells[col_attr[j - 1]] = parse_cell(*b.schema.rand(attr), r[j], where + " " + attr);
    }
    t->keys.push_back(r[0]);
    t->cells.push_back(std::move(cells));
  }
}

void load_link_csv(TableBundle& b, const std::string& table, std::string_view csv) {
  LinkTable* l = nullptr;
  for (auto& x : b.links)
    if (x.name == table) l = &x;
  if (!l) fail(ErrorKind::Data, "no link table " + table + " in the schema");
  auto rows = parse_csv(csv);
  if (rows.empty()) return;
  if (rows[0].size() != l->types.size())
    fail(ErrorKind::Data, table + ": expected " + std::to_string(l->types.size()) + " columns");
  l->columns = rows[0];
  std::set<std::vector<std::string>> seen(l->rows.begin(), l->rows.end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != l->types.size())
      fail(ErrorKind::Data, table + " row " + std::to_string(i) + ": wrong number of fields");
    for (std::size_t j = 0; j < r.size(); ++j) {
      bool found = false;
      for (const auto& e : b.entities)
        if (e.type == l->types[j] && e.row_of(r[j]) >= 0) found = true;
      if (!found)
        fail(ErrorKind::DanglingForeignKey, table + " row " + std::to_string(i) + ": " + r[j] +
                                                " is not a key of an entity table of type " + l->types[j]);
    }
    if (seen.insert(r).second) l->rows.push_back(r);
  }
}

TableBundle load_tables(const BiasSpec& schema, const std::filesystem::path& dir) {
  TableBundle b = empty_bundle(schema);
  auto read = [&](const std::string& name) {
    auto path = dir / (name + ".csv");
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const auto& e : schema.type_order) {
    if (b.entity(e)) load_entity_csv(b, e, read(e));
  }
  for (std::size_t i = 0; i < b.links.size(); ++i) {
    std::string name = b.links[i].name;
    load_link_csv(b, name, read(name));
  }
  return b;
}

std::string cell_text(const Cell& c) {
  switch (c.status) {
    case CellStatus::Missing: return "-";
    case CellStatus::Query: return "?";
    case CellStatus::Observed: break;
  }
  return c.value.str();
}

std::string entity_csv(const EntityTable& t) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{t.key_column};
  header.insert(header.end(), t.attributes.begin(), t.attributes.end());
  rows.push_back(header);
  for (std::size_t i = 0; i < t.keys.size(); ++i) {
    std::vector<std::string> r{t.keys[i]};
    for (const auto& c : t.cells[i]) r.push_back(cell_text(c));
    rows.push_back(std::move(r));
  }
  return format_csv(rows);
}

std::string link_csv(const LinkTable& t) {
  std::vector<std::vector<std::string>> rows{t.columns};
  rows.insert(rows.end(), t.rows.begin(), t.rows.end());
  return format_csv(rows);
}

void write_tables(const TableBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    auto path = dir / (name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
  };
  for (const auto& e : b.entities) write(e.name, entity_csv(e));
  for (const auto& l : b.links) write(l.name, link_csv(l));
}

// ---------------------------------------------------------------- transform

Program Transformed::program() const {
  Program p;
  p.clauses = relational;
  p.clauses.insert(p.clauses.end(), attributes.begin(), attributes.end());
  return p;
}

Transformed transform_tables(const TableBundle& b) {
  Transformed t;
  for (const auto& e : b.entities) {
    for (const auto& k : e.keys) {
      Clause c;
      c.kind = Clause::Kind::Fact;
      c.head = Term::compound(e.name, {Term::sym(k)});
      t.relational.push_back(std::move(c));
    }
  }
  for (const auto& l : b.links) {
    for (const auto& r : l.rows) {
      std::vector<Term> args;
      for (const auto& k : r) args.push_back(Term::sym(k));
      Clause c;
      c.kind = Clause::Kind::Fact;
      c.head = Term::compound(l.name, std::move(args));
      t.relational.push_back(std::move(c));
    }
  }
  for (const auto& e : b.entities) {
    for (std::size_t i = 0; i < e.keys.size(); ++i) {
      for (std::size_t a = 0; a < e.attributes.size(); ++a) {
        const Cell& cell = e.cells[i][a];
        CellRef ref{e.name, e.keys[i], e.attributes[a]};
        if (cell.status == CellStatus::Missing) {
          t.missing.push_back(ref);
        } else if (cell.status == CellStatus::Query) {
          t.query.push_back(ref);
        } else {
          Clause c;
          c.kind = Clause::Kind::Distributional;
          c.head = ref.rv();
          c.dist = Term::compound("val", {Term::from_value(cell.value)});
          t.attributes.push_back(std::move(c));
        }
      }
    }
  }
  return t;
}

TableBundle reconstruct_tables(const BiasSpec& schema, const Transformed& t) {
  TableBundle b = empty_bundle(schema);
  for (const auto& c : t.relational) {
    const Term& h = c.head;
    if (h.arity() == 1) {
      if (EntityTable* e = b.entity(h.name())) {
        e->keys.push_back(h.args[0].name());
        e->cells.emplace_back(e->attributes.size());
        continue;
      }
    }
    for (auto& l : b.links)
      if (l.name == h.name() && l.types.size() == h.arity()) {
        std::vector<std::string> r;
        for (const auto& a : h.args) r.push_back(a.name());
        l.rows.push_back(std::move(r));
      }
  }
  auto cell_at = [&](const std::string& attribute, const std::string& key) -> Cell& {
    for (auto& e : b.entities) {
      int a = e.attribute_index(attribute);
      int r = e.row_of(key);
      if (a >= 0 && r >= 0) return e.cells[r][a];
    }
    fail(ErrorKind::Data, "no cell " + attribute + "(" + key + ")");
  };
  for (const auto& c : t.attributes) {
    Cell& cell = cell_at(c.head.name(), c.head.args[0].name());
    cell.status = CellStatus::Observed;
    cell.value = *c.dist->args[0].value();
  }
  for (const auto& q : t.query) cell_at(q.attribute, q.key).status = CellStatus::Query;
  return b;
}

TableBundle mark_query_cells(TableBundle b, const std::vector<CellRef>& cells) {
  for (const auto& ref : cells) {
    EntityTable* e = b.entity(ref.table);
    if (!e) fail(ErrorKind::Data, "no table " + ref.table);
    int a = e->attribute_index(ref.attribute);
    int r = e->row_of(ref.key);
    if (a < 0 || r < 0) fail(ErrorKind::Data, "no cell " + ref.table + "/" + ref.key + "/" + ref.attribute);
    Cell& c = e->cells[r][a];
    if (c.status == CellStatus::Observed)
      fail(ErrorKind::CellAlreadyObserved, ref.attribute + "(" + ref.key + ") is observed as " + c.value.str());
    c.status = CellStatus::Query;
  }
  return b;
}

}  // namespace dcml
