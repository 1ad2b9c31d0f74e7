#include "stlmine/stl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <vector>

namespace stlmine {

namespace {

enum class Tok {
  Ident, Number, KwG, KwF, KwU, KwInf,
  LParen, RParen, LBracket, RBracket, LBrace, RBrace,
  Comma, Question, Amp, Pipe, Bang,
  Ge, Le, Gt, Lt,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0;
  int line = 1, column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t = next();
      bool end = t.kind == Tok::End;
      out.push_back(std::move(t));
      if (end) break;
    }
    return out;
  }

 private:
  void fail(const std::string& msg) const { throw ParseError(msg, line_, column_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  Token make(Tok kind, std::size_t len) {
    Token t{kind, std::string(text_.substr(pos_, len)), 0, line_, column_};
    pos_ += len;
    column_ += static_cast<int>(len);
    return t;
  }

  Token next() {
    if (pos_ >= text_.size()) return Token{Tok::End, "", 0, line_, column_};
    char c = peek();
    switch (c) {
      case '(': return make(Tok::LParen, 1);
      case ')': return make(Tok::RParen, 1);
      case '[': return make(Tok::LBracket, 1);
      case ']': return make(Tok::RBracket, 1);
      case '{': return make(Tok::LBrace, 1);
      case '}': return make(Tok::RBrace, 1);
      case ',': return make(Tok::Comma, 1);
      case '?': return make(Tok::Question, 1);
      case '&': return make(Tok::Amp, 1);
      case '|': return make(Tok::Pipe, 1);
      case '!': return make(Tok::Bang, 1);
      case '>': return peek(1) == '=' ? make(Tok::Ge, 2) : make(Tok::Gt, 1);
      case '<': return peek(1) == '=' ? make(Tok::Le, 2) : make(Tok::Lt, 1);
      case '=':
      case '~':
        fail("unknown operator (expected >=, <=, > or <)");
        break;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
        (c == '-' && (std::isdigit(static_cast<unsigned char>(peek(1))) || peek(1) == '.'))) {
      return lex_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return lex_ident();
    fail(std::string("unexpected character '") + c + "'");
    return {};
  }

  Token lex_number() {
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    double v = 0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc()) fail("malformed number");
    Token t = make(Tok::Number, static_cast<std::size_t>(ptr - begin));
    t.number = v;
    return t;
  }

  Token lex_ident() {
    std::size_t len = 0;
    while (pos_ + len < text_.size()) {
      char c = text_[pos_ + len];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        ++len;
      } else {
        break;
      }
    }
    std::string word(text_.substr(pos_, len));
    Tok kind = Tok::Ident;
    if (word == "G") kind = Tok::KwG;
    else if (word == "F") kind = Tok::KwF;
    else if (word == "U") kind = Tok::KwU;
    else if (word == "inf") kind = Tok::KwInf;
    return make(kind, len);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1, column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  Formula run() {
    Formula f = parse_formula();
    expect(Tok::End, "unexpected trailing input");
    return f;
  }

 private:
  const Token& cur() const { return tokens_[idx_]; }
  const Token& advance() { return tokens_[idx_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur().line, cur().column);
  }

  const Token& expect(Tok kind, const std::string& msg) {
    if (cur().kind != kind) fail(msg);
    return advance();
  }

  bool accept(Tok kind) {
    if (cur().kind != kind) return false;
    ++idx_;
    return true;
  }

  Formula parse_formula() {
    if (cur().kind == Tok::KwG || cur().kind == Tok::KwF) return parse_temporal();
    if (cur().kind == Tok::Bang) {
      advance();
      return Formula::negation(parse_term());
    }
    Formula lhs = parse_term();
    if (cur().kind == Tok::KwU) {
      advance();
      Interval iv = parse_interval();
      Formula rhs = parse_term();
      return make_until(iv, std::move(lhs), std::move(rhs));
    }
    while (cur().kind == Tok::Amp || cur().kind == Tok::Pipe) {
      bool conj = advance().kind == Tok::Amp;
      Formula rhs = parse_term();
      lhs = conj ? Formula::conjunction(std::move(lhs), std::move(rhs))
                 : Formula::disjunction(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula parse_temporal() {
    bool is_always = advance().kind == Tok::KwG;
    const Token& at = cur();
    Interval iv = parse_interval();
    expect(Tok::LParen, "expected '(' after temporal operator");
    Formula body = parse_formula();
    expect(Tok::RParen, "expected ')'");
    try {
      return is_always ? Formula::always(std::move(iv), std::move(body))
                       : Formula::eventually(std::move(iv), std::move(body));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), at.line, at.column);
    }
  }

  Formula make_until(Interval iv, Formula lhs, Formula rhs) {
    try {
      return Formula::until(std::move(iv), std::move(lhs), std::move(rhs));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  Formula parse_term() {
    if (accept(Tok::LParen)) {
      Formula f = parse_formula();
      expect(Tok::RParen, "expected ')'");
      return f;
    }
    return parse_atom();
  }

  Formula parse_atom() {
    if (cur().kind != Tok::Ident) fail("expected a signal variable");
    std::string variable = advance().text;
    Cmp cmp;
    switch (cur().kind) {
      case Tok::Ge: cmp = Cmp::Ge; break;
      case Tok::Le: cmp = Cmp::Le; break;
      case Tok::Gt: cmp = Cmp::Gt; break;
      case Tok::Lt: cmp = Cmp::Lt; break;
      default: fail("unknown operator (expected >=, <=, > or <)");
    }
    advance();
    Value threshold = parse_value(ParamKind::Threshold, /*allow_inf=*/false);
    return Formula::predicate(std::move(variable), cmp, std::move(threshold));
  }

  Interval parse_interval() {
    if (cur().kind != Tok::LBracket) return Interval::unbounded();
    const Token& at = cur();
    advance();
    Value lo = parse_value(ParamKind::TimeOffset, /*allow_inf=*/false);
    expect(Tok::Comma, "expected ',' in interval");
    Value hi = parse_value(ParamKind::TimeOffset, /*allow_inf=*/true);
    expect(Tok::RBracket, "expected ']'");
    if (!lo.is_param()) {
      if (lo.number() < 0) throw ParseError("interval lower bound must be non-negative", at.line, at.column);
      if (!hi.is_param() && lo.number() > hi.number()) {
        throw ParseError("malformed interval: lower bound exceeds upper bound", at.line, at.column);
      }
    }
    return Interval{std::move(lo), std::move(hi)};
  }

  Value parse_value(ParamKind kind, bool allow_inf) {
    if (cur().kind == Tok::Number) return Value(advance().number);
    if (allow_inf && cur().kind == Tok::KwInf) {
      advance();
      return Value(std::numeric_limits<double>::infinity());
    }
    if (cur().kind == Tok::Question) return parse_param(kind);
    fail(allow_inf ? "expected a number, parameter or 'inf'" : "expected a number or parameter");
  }

  Value parse_param(ParamKind kind) {
    advance();  // '?'
    if (cur().kind != Tok::Ident) fail("expected parameter name after '?'");
    const Token& name_tok = advance();
    expect(Tok::LBrace, "expected '{' opening parameter range");
    if (cur().kind != Tok::Number) fail("expected parameter range lower bound");
    double lo = advance().number;
    expect(Tok::Comma, "expected ',' in parameter range");
    if (cur().kind != Tok::Number) fail("expected parameter range upper bound");
    double hi = advance().number;
    expect(Tok::RBrace, "expected '}'");
    if (!(std::isfinite(lo) && std::isfinite(hi)) || lo > hi) {
      throw ParseError("parameter range must be finite with lower <= upper", name_tok.line,
                       name_tok.column);
    }
    return Value(ParamRef{name_tok.text, kind, lo, hi});
  }

  std::vector<Token> tokens_;
  std::size_t idx_ = 0;
};

}  // namespace

Formula parse(std::string_view text) { return Parser(Lexer(text).run()).run(); }

}  // namespace stlmine
