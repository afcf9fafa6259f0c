#pragma once

#include <string_view>

#include "pbs/expr.hpp"

namespace pbs {

/// Parses infix text into an expression.
///
/// Grammar, loosest binding first:
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' exponent)?
///     exponent:= ('-' | '+') exponent | primary ('^' exponent)?
///     primary := number | name | name '(' expr ')' | '(' expr ')'
///
/// so `-x^2` is `-(x^2)` and `^` is right-associative. Names match
/// [A-Za-z][A-Za-z0-9_]*. Known functions: sqrt exp ln (log) sin cos
/// arcsin (asin) abs.
///
/// Throws ParseError with the byte offset of the offending token. Running
/// out of input reports the offset just past the last token.
Expr parse(std::string_view text);

}  // namespace pbs
