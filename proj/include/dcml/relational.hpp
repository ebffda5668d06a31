#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcml/syntax.hpp"

namespace dcml {

// ---------------------------------------------------------------- declarations

enum class AttrKind : std::uint8_t { Continuous, Discrete };

struct RandDecl {
  std::string attribute;
  AttrKind kind = AttrKind::Continuous;
  std::vector<Value> domain;  // discrete labels in declaration order
};

// mode(target, none, attr(+)) or mode(target, aggr, (link(m1,..,mk), attr(+)))
struct ModeDecl {
  std::string target;
  std::string aggregator;            // "none" or an aggregator name
  std::optional<std::string> link;   // link relation (absent for "none")
  std::string link_modes;            // one of '+' / '-' per link argument
  std::string attribute;
  int attribute_position = -1;       // link argument the attribute is read from
  Term source;
};

struct BiasSpec {
  std::map<std::string, std::vector<std::string>> types;  // functor -> argument types
  std::vector<std::string> type_order;                    // declaration order
  std::vector<ModeDecl> modes;
  std::vector<RandDecl> rands;
  std::vector<std::string> rank;
  Program background;  // non-declaration clauses found alongside the bias

  const RandDecl* rand(const std::string& attribute) const;
  const std::vector<std::string>* type_of(const std::string& functor) const;
  // entity type of a unary attribute or entity predicate
  std::string entity_type(const std::string& functor) const;
  std::vector<const ModeDecl*> modes_for(const std::string& target) const;
  int rank_of(const std::string& attribute) const;  // -1 when unranked
};

BiasSpec parse_bias(std::string_view text, const std::string& file = "<bias>");
BiasSpec bias_from_program(const Program& p);

// ---------------------------------------------------------------- tables

enum class CellStatus : std::uint8_t { Observed, Missing, Query };

struct Cell {
  CellStatus status = CellStatus::Missing;
  Value value;
};

struct EntityTable {
  std::string name;  // entity predicate, e.g. client
  std::string type;  // entity type, e.g. c
  std::string key_column = "id";
  std::vector<std::string> attributes;
  std::vector<std::string> keys;
  std::vector<std::vector<Cell>> cells;  // [row][attribute]

  int attribute_index(const std::string& a) const;
  int row_of(const std::string& key) const;
};

struct LinkTable {
  std::string name;
  std::vector<std::string> types;  // entity type per column
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct TableBundle {
  BiasSpec schema;
  std::vector<EntityTable> entities;
  std::vector<LinkTable> links;

  const EntityTable* entity(const std::string& name) const;
  EntityTable* entity(const std::string& name);
  // table holding an attribute, nullptr if none
  const EntityTable* table_of_attribute(const std::string& attribute) const;
  std::size_t attribute_cells() const;
};

struct CellRef {
  std::string table;
  std::string key;
  std::string attribute;
  bool operator==(const CellRef& o) const {
    return table == o.table && key == o.key && attribute == o.attribute;
  }
  bool operator<(const CellRef& o) const;
  Term rv() const;  // attribute(key)
};

// Empty bundle shaped by the schema: one entity table per unary type
// declaration without a rand declaration, one link table per other
// non-attribute declaration.
TableBundle empty_bundle(const BiasSpec& schema);

// RFC-4180 CSV; the first row is the header.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string format_csv(const std::vector<std::vector<std::string>>& rows);

// Adds rows parsed from CSV text. Entity tables: key column first, then
// attribute columns by header name; "-" or "" missing, "?" query.
void load_entity_csv(TableBundle& b, const std::string& table, std::string_view csv);
void load_link_csv(TableBundle& b, const std::string& table, std::string_view csv);
// Reads <table>.csv for every table of the schema from a directory.
TableBundle load_tables(const BiasSpec& schema, const std::filesystem::path& dir);
// Writes one CSV per table (inverse of load_tables).
void write_tables(const TableBundle& b, const std::filesystem::path& dir);
std::string entity_csv(const EntityTable& t);
std::string link_csv(const LinkTable& t);

std::string cell_text(const Cell& c);

struct Transformed {
  std::vector<Clause> relational;  // entity and link facts
  std::vector<Clause> attributes;  // attr(key) ~ val(v)
  std::vector<CellRef> query;
  std::vector<CellRef> missing;

  Program program() const;  // relational then attribute facts
};

Transformed transform_tables(const TableBundle& b);
// Rebuilds the bundle's rows from a transformation (row order may differ).
TableBundle reconstruct_tables(const BiasSpec& schema, const Transformed& t);

TableBundle mark_query_cells(TableBundle b, const std::vector<CellRef>& cells);

}  // namespace dcml
