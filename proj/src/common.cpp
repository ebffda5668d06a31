#include "dcml/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace dcml {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::Arity: return "ArityError";
    case ErrorKind::ArityMismatch: return "ArityMismatch";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::ConflictingDefinition: return "ConflictingDefinition";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::ZeroEvidenceWeight: return "ZeroEvidenceWeight";
    case ErrorKind::DanglingForeignKey: return "DanglingForeignKey";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::UnknownAttribute: return "UnknownAttribute";
    case ErrorKind::ModeTypeError: return "ModeTypeError";
    case ErrorKind::CellAlreadyObserved: return "CellAlreadyObserved";
    case ErrorKind::NoExamples: return "NoExamples";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ZeroRange: return "ZeroRange";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::Stratification: return "StratificationError";
    case ErrorKind::MissingRank: return "MissingRankError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::Usage: return "UsageError";
  }
  return "Error";
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::DegenerateData:
    case ErrorKind::NonTermination:
    case ErrorKind::ZeroEvidenceWeight:
    case ErrorKind::ZeroRange:
    case ErrorKind::SingleClass:
    case ErrorKind::EmptyInput:
      return 3;
    default: return 2;
  }
}

void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, std::string(error_kind_name(kind)) + ": " + msg);
}

namespace {

struct SymbolTable {
  std::shared_mutex mu;
  std::deque<std::string> names;
  std::unordered_map<std::string_view, SymId> ids;
};

SymbolTable& table() {
  static SymbolTable t;
  return t;
}

}  // namespace

SymId intern(std::string_view name) {
  auto& t = table();
  {
    std::shared_lock lock(t.mu);
    auto it = t.ids.find(name);
    if (it != t.ids.end()) return it->second;
  }
  std::unique_lock lock(t.mu);
  auto it = t.ids.find(name);
  if (it != t.ids.end()) return it->second;
  t.names.emplace_back(name);
  auto id = static_cast<SymId>(t.names.size() - 1);
  t.ids.emplace(std::string_view(t.names.back()), id);
  return id;
}

const std::string& symbol_name(SymId id) {
  auto& t = table();
  std::shared_lock lock(t.mu);
  return t.names.at(id);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, res.ptr);
  return s;
}

std::string format_number17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string Value::str() const { return is_num() ? format_number(num) : symbol_name(sym); }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  z += seed * 0xd6e8feb86659fd93ULL;
  z = (z ^ (z >> 32)) * 0x9e3779b97f4a7c15ULL;
  return z ^ (z >> 29);
}

}  // namespace dcml
