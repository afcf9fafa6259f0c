#include "pbs/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>

#include "pbs/error.hpp"

namespace pbs {

namespace {

enum class Tok { Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ >= src_.size()) return Token{Tok::End, last_end_, {}};
    const std::size_t start = pos_;
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      ++pos_;
      last_end_ = pos_;
      return Token{k, start, src_.substr(start, 1)};
    };
    switch (c) {
      case '+': return single(Tok::Plus);
      case '-': return single(Tok::Minus);
      case '*': return single(Tok::Star);
      case '/': return single(Tok::Slash);
      case '^': return single(Tok::Caret);
      case '(': return single(Tok::LParen);
      case ')': return single(Tok::RParen);
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
    if (std::isalpha(static_cast<unsigned char>(c))) {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      last_end_ = pos_;
      return Token{Tok::Name, start, src_.substr(start, pos_ - start)};
    }
    throw ParseError(ErrorCode::Parse, start, std::string("unexpected character '") + c + "'");
  }

 private:
  Token number(std::size_t start) {
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError(ErrorCode::Parse, start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;
    }
    last_end_ = pos_;
    const std::string text(src_.substr(start, pos_ - start));
    return Token{Tok::Number, start, src_.substr(start, pos_ - start), std::strtod(text.c_str(), nullptr)};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
};

std::optional<Op> function_op(std::string_view name) {
  if (name == "sqrt") return Op::Sqrt;
  if (name == "exp") return Op::Exp;
  if (name == "ln" || name == "log") return Op::Ln;
  if (name == "sin") return Op::Sin;
  if (name == "cos") return Op::Cos;
  if (name == "arcsin" || name == "asin") return Op::Arcsin;
  if (name == "abs") return Op::Abs;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  Expr parse_all() {
    Expr e = expr();
    if (cur_.kind != Tok::End) fail("unexpected '" + std::string(cur_.text) + "'");
    return e;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(ErrorCode::Parse, cur_.offset, msg);
  }

  Expr expr() {
    Expr lhs = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const Tok op = cur_.kind;
      advance();
      Expr rhs = term();
      lhs = op == Tok::Plus ? lhs + rhs : lhs - rhs;
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const Tok op = cur_.kind;
      advance();
      Expr rhs = unary();
      lhs = op == Tok::Star ? lhs * rhs : lhs / rhs;
    }
    return lhs;
  }

  Expr unary() {
    if (cur_.kind == Tok::Minus) {
      advance();
      return -unary();
    }
    if (cur_.kind == Tok::Plus) {
      advance();
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (cur_.kind != Tok::Caret) return base;
    advance();
    return pow(base, exponent());
  }

  Expr exponent() {
    if (cur_.kind == Tok::Minus) {
      advance();
      return -exponent();
    }
    if (cur_.kind == Tok::Plus) {
      advance();
      return exponent();
    }
    return power();
  }

  Expr primary() {
    switch (cur_.kind) {
      case Tok::Number: {
        const double v = cur_.number;
        advance();
        return Expr::constant(v);
      }
      case Tok::Name: {
        const Token name = cur_;
        advance();
        if (cur_.kind != Tok::LParen) return Expr::variable(std::string(name.text));
        const auto op = function_op(name.text);
        if (!op)
          throw ParseError(ErrorCode::UnknownFunction, name.offset,
                           "unknown function '" + std::string(name.text) + "'");
        advance();
        Expr arg = expr();
        if (cur_.kind != Tok::RParen) fail("expected ')'");
        advance();
        return Expr::unary(*op, arg);
      }
      case Tok::LParen: {
        advance();
        Expr inner = expr();
        if (cur_.kind != Tok::RParen) fail("expected ')'");
        advance();
        return inner;
      }
      case Tok::End: fail("unexpected end of input");
      default: fail("unexpected '" + std::string(cur_.text) + "'");
    }
  }

  Lexer lex_;
  Token cur_{Tok::End, 0, {}};
};

}  // namespace

Expr parse(std::string_view text) {
  Parser p(text);
  return p.parse_all();
}

}  // namespace pbs
