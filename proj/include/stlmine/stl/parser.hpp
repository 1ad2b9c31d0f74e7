#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "stlmine/stl/ast.hpp"

namespace stlmine {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, int line, int column)
      : std::runtime_error(message + " at " + std::to_string(line) + ":" +
                           std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

/// Parses formula text into an AST. Grammar (times in minutes):
///
///   formula  := until | unary
///   until    := term "U" interval term
///   term     := "(" formula ")" | atom
///   unary    := ("G"|"F") interval "(" formula ")" | "!" term
///             | term (("&"|"|") term)*
///   interval := "[" bound "," (bound|"inf") "]" | ""
///   bound    := number | param
///   atom     := ident cmp (number | param)
///   cmp      := ">=" | "<=" | ">" | "<"
///   param    := "?" ident "{" number "," number "}"
///
/// An omitted interval means [0, inf). Throws ParseError with 1-based
/// line/column on malformed input.
Formula parse(std::string_view text);

}  // namespace stlmine
