#include <cctype>
#include <charconv>
#include <unordered_map>
#include <unordered_set>

#include "dcml/syntax.hpp"

namespace dcml {

namespace {

enum class Tok : std::uint8_t { Name, Var, Num, Punct, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  double num = 0.0;
  int line = 1;
  int col = 1;
  bool space_before = false;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

  [[noreturn]] void error(int line, int col, const std::string& msg) const {
    throw Error(ErrorKind::Syntax, file_ + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                       ": error: " + msg);
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      bool space = skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      t.space_before = space;
      if (pos_ >= src_.size()) {
        t.type = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.text = std::string(src_.substr(start, pos_ - start));
        t.type = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Tok::Var : Tok::Name;
      } else if (c == '\'') {
        advance();
        t.type = Tok::Name;
        for (;;) {
          if (pos_ >= src_.size()) error(t.line, t.col, "unterminated quoted atom");
          char d = src_[pos_];
          if (d == '\\' && pos_ + 1 < src_.size()) {
            advance();
            t.text += src_[pos_];
            advance();
            continue;
          }
          advance();
          if (d == '\'') break;
          t.text += d;
        }
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(src_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  bool skip_space() {
    bool any = false;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        any = true;
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        any = true;
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
        int l = line_, k = col_;
        advance();
        advance();
        while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= src_.size()) error(l, k, "unterminated comment");
        advance();
        advance();
        any = true;
      } else {
        break;
      }
    }
    return any;
  }

  void lex_number(Token& t) {
    std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int sl = line_, sc = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        digits();
      } else {
        pos_ = save;
        line_ = sl;
        col_ = sc;
      }
    }
    std::string_view s = src_.substr(start, pos_ - start);
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) error(t.line, t.col, "bad number '" + std::string(s) + "'");
    t.type = Tok::Num;
    t.num = v;
    t.text = std::string(s);
  }

  void lex_punct(Token& t) {
    static const char* multi[] = {":=", ":-", "~=", "==", "\\+", "::"};
    t.type = Tok::Punct;
    if (src_.substr(pos_, 3) == "\xE2\x86\x90") {  // left arrow
      t.text = ":=";
      advance();
      advance();
      advance();
      return;
    }
    for (const char* m : multi) {
      if (src_.substr(pos_, 2) == m) {
        t.text = m;
        advance();
        advance();
        return;
      }
    }
    char c = src_[pos_];
    static const std::string single = "()[],.|:~+-?";
    if (single.find(c) == std::string::npos)
      error(t.line, t.col, std::string("unexpected character '") + c + "'");
    t.text = std::string(1, c);
    advance();
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, Lexer& lex) : toks_(std::move(toks)), lex_(lex) {}

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().type == Tok::End; }
  bool is_punct(const char* p, std::size_t k = 0) const {
    return peek(k).type == Tok::Punct && peek(k).text == p;
  }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void error(const Token& t, const std::string& msg) const {
    lex_.error(t.line, t.col, msg);
  }

  void expect(const char* p) {
    if (!is_punct(p)) {
      const auto& t = peek();
      error(t, std::string("expected '") + p + "' but found " +
                   (t.type == Tok::End ? std::string("end of input") : "'" + t.text + "'"));
    }
    next();
  }

  void reset_clause_scope() { anon_ = 0; }

  // literal := '\+' literal | expr [('~=' | '==') expr]
  Term literal() {
    if (is_punct("\\+")) {
      next();
      Term inner = literal();
      return Term::compound("\\+", {std::move(inner)});
    }
    Term lhs = expr();
    if (is_punct("~=") || is_punct("==")) {
      std::string op = next().text;
      Term rhs = expr();
      return Term::compound(op, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  std::vector<Term> body() {
    std::vector<Term> out;
    out.push_back(literal());
    while (is_punct(",")) {
      next();
      out.push_back(literal());
    }
    return out;
  }

  Term expr() {
    Term lhs = primary();
    if (is_punct(":")) {
      next();
      Term rhs = primary();
      return Term::compound(":", {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Term primary() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::Num: {
        double v = t.num;
        next();
        return Term::number(v);
      }
      case Tok::Var: {
        std::string name = t.text;
        next();
        if (name == "_") name = "_G" + std::to_string(++anon_);
        return Term::var(name);
      }
      case Tok::Name: {
        std::string name = t.text;
        next();
        if (is_punct("(") && !peek().space_before) {
          next();
          std::vector<Term> args = arg_list(")");
          return Term::compound(name, std::move(args));
        }
        return Term::sym(name);
      }
      case Tok::Punct: {
        if (t.text == "-" && peek(1).type == Tok::Num && !peek(1).space_before) {
          next();
          double v = next().num;
          return Term::number(-v);
        }
        if (t.text == "+" || t.text == "-" || t.text == "?") {
          std::string s = t.text;
          next();
          return Term::sym(s);
        }
        if (t.text == "[") {
          next();
          if (is_punct("]")) {
            next();
            return Term::list({});
          }
          return Term::list(arg_list("]"));
        }
        if (t.text == "(") {
          next();
          std::vector<Term> items = body();
          expect(")");
          if (items.size() == 1) return std::move(items[0]);
          return Term::compound(",", std::move(items));
        }
        error(t, "unexpected '" + t.text + "'");
      }
      case Tok::End: error(t, "unexpected end of input");
    }
    error(t, "unexpected token");
  }

  std::vector<Term> arg_list(const char* close) {
    std::vector<Term> args;
    args.push_back(literal());
    while (is_punct(",")) {
      next();
      args.push_back(literal());
    }
    expect(close);
    return args;
  }

  std::size_t pos_ = 0;

 private:
  std::vector<Token> toks_;
  Lexer& lex_;
  int anon_ = 0;
};

bool reserved_functor(const std::string& f) {
  static const std::unordered_set<std::string> r = {
      "~=", "==", "\\+", ",", "[]", ":", "val", "gaussian", "discrete", "linear", "logistic",
      "softmax", "avg", "sum", "max", "min", "mod", "count", "true"};
  return r.count(f) > 0;
}

struct ArityChecker {
  std::unordered_map<SymId, std::pair<std::size_t, SourceLoc>> seen;
  const std::string* file;

  void visit(const Term& t, const SourceLoc& loc) {
    if (t.is_sym()) {
      check(t.id, 0, loc, false);
      return;
    }
    if (!t.is_cmp()) return;
    if (!reserved_functor(t.name())) check(t.id, t.args.size(), loc, true);
    for (const auto& a : t.args) visit(a, loc);
  }

  void check(SymId f, std::size_t arity, const SourceLoc& loc, bool is_cmp) {
    // bare symbols only clash with functors already used as predicates
    auto it = seen.find(f);
    if (it == seen.end()) {
      if (is_cmp) seen.emplace(f, std::make_pair(arity, loc));
      return;
    }
    if (!is_cmp) return;
    if (it->second.first != arity) {
      throw Error(ErrorKind::Arity,
                  loc.file + ":" + std::to_string(loc.line) + ":" + std::to_string(loc.col) +
                      ": error: functor " + symbol_name(f) + " used with arity " +
                      std::to_string(arity) + " and " + std::to_string(it->second.first));
    }
  }
};

}  // namespace

Program parse_program(std::string_view text, const std::string& file) {
  Lexer lex(text, file);
  Parser ps(lex.run(), lex);
  Program prog;
  ArityChecker arity;
  arity.file = &file;
  while (!ps.at_end()) {
    ps.reset_clause_scope();
    const Token& start = ps.peek();
    Clause c;
    c.loc = SourceLoc{file, start.line, start.col};
    c.head = ps.literal();
    if (!(c.head.is_sym() || c.head.is_cmp()) || c.head.is("~=", 2) || c.head.is("==", 2) ||
        c.head.is("\\+", 1) || c.head.is(",", c.head.arity()) || c.head.is_list())
      ps.error(start, "clause head must be an atom");
    if (ps.is_punct("~")) {
      ps.next();
      c.dist = ps.expr();
      c.kind = Clause::Kind::Distributional;
    }
    if (ps.is_punct(":=") || ps.is_punct(":-")) {
      ps.next();
      c.body = ps.body();
      if (!c.dist) c.kind = Clause::Kind::Definite;
    }
    ps.expect(".");

    if (c.kind == Clause::Kind::Fact) {
      const Term& h = c.head;
      if (h.is("rank", 1) && h.args[0].is_list()) {
        for (const auto& r : h.args[0].args) {
          if (!r.is_sym()) ps.error(start, "rank list must contain attribute names");
          prog.rank.push_back(r.name());
        }
        continue;
      }
      if (h.is("type", 1) || h.is("mode", 3) || h.is("rand", 3)) {
        prog.bias.push_back(h);
        continue;
      }
    }
    arity.visit(c.head, c.loc);
    if (c.dist) arity.visit(*c.dist, c.loc);
    for (const auto& l : c.body) arity.visit(l, c.loc);
    prog.clauses.push_back(std::move(c));
  }
  return prog;
}

Term parse_term(std::string_view text) {
  Lexer lex(text, "<term>");
  Parser ps(lex.run(), lex);
  Term t = ps.literal();
  if (ps.is_punct(".")) ps.next();
  if (!ps.at_end()) ps.error(ps.peek(), "trailing input after term");
  return t;
}

std::vector<Term> parse_body(std::string_view text) {
  Lexer lex(text, "<goal>");
  Parser ps(lex.run(), lex);
  if (ps.at_end()) return {};
  std::vector<Term> b = ps.body();
  if (ps.is_punct(".")) ps.next();
  if (!ps.at_end()) ps.error(ps.peek(), "trailing input after goal");
  return b;
}

}  // namespace dcml
