#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dcml {

enum class ErrorKind {
  Syntax,
  Arity,
  ArityMismatch,
  TypeMismatch,
  DegenerateData,
  ConflictingDefinition,
  NonTermination,
  ZeroEvidenceWeight,
  DanglingForeignKey,
  DuplicateKey,
  UnknownAttribute,
  ModeTypeError,
  CellAlreadyObserved,
  NoExamples,
  EmptyInput,
  ZeroRange,
  SingleClass,
  Stratification,
  MissingRank,
  Io,
  Data,
  Usage,
};

const char* error_kind_name(ErrorKind k);

// Process exit status for an error: 1 usage, 2 data/validation, 3 numerical.
int exit_code_for(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& msg);

// Interned symbol ids. The table is process-global and thread-safe.
using SymId = std::uint32_t;
SymId intern(std::string_view name);
const std::string& symbol_name(SymId id);

// A ground value: either a number or a symbolic label.
struct Value {
  enum class Kind : std::uint8_t { Num, Sym };
  Kind kind = Kind::Num;
  double num = 0.0;
  SymId sym = 0;

  static Value number(double x) { return Value{Kind::Num, x, 0}; }
  static Value symbol(SymId s) { return Value{Kind::Sym, 0.0, s}; }
  static Value symbol(std::string_view s) { return symbol(intern(s)); }
  bool is_num() const { return kind == Kind::Num; }
  bool is_sym() const { return kind == Kind::Sym; }
  bool operator==(const Value& o) const {
    return kind == o.kind && (kind == Kind::Num ? num == o.num : sym == o.sym);
  }
  bool operator!=(const Value& o) const { return !(*this == o); }
  std::string str() const;
};

// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double x);
// Fixed 17 significant digits.
std::string format_number17(double x);

using Rng = std::mt19937_64;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
inline Rng substream(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

}  // namespace dcml
