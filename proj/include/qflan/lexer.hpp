#pragma once

#include <cctype>
#include <cstdlib>
#include <string>
#include <vector>

#include "qflan/diagnostics.hpp"

namespace qflan {

// Thrown by the lexer and parser; caught at the public parse_* boundary and
// converted into diagnostics.
struct ParseError {
  Diagnostic diag;
};

[[noreturn]] inline void parse_fail(std::string msg, SourceLoc loc) {
  throw ParseError{{Severity::Error, std::move(msg), loc}};
}

struct Token {
  enum class Kind {
    End,
    Ident,
    Number,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Ellipsis,
    Question,
    Bang,
    Colon,
    Assign,   // =
    EqEq,     // ==
    Neq,      // !=
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,     // ->
    OrArrow,   // -OR->
    XorArrow,  // -XOR->
    Bar,       // |
    BarBar,    // ||
    Amp,       // &
    AmpAmp,    // &&
  };
  Kind kind = Kind::End;
  std::string text;
  double number = 0;
  SourceLoc loc;
};

inline const char* token_name(Token::Kind k) {
  switch (k) {
    case Token::Kind::End: return "end of input";
    case Token::Kind::Ident: return "identifier";
    case Token::Kind::Number: return "number";
    case Token::Kind::LBrace: return "'{'";
    case Token::Kind::RBrace: return "'}'";
    case Token::Kind::LParen: return "'('";
    case Token::Kind::RParen: return "')'";
    case Token::Kind::LBracket: return "'['";
    case Token::Kind::RBracket: return "']'";
    case Token::Kind::Comma: return "','";
    case Token::Kind::Dot: return "'.'";
    case Token::Kind::Ellipsis: return "'...'";
    case Token::Kind::Question: return "'?'";
    case Token::Kind::Bang: return "'!'";
    case Token::Kind::Colon: return "':'";
    case Token::Kind::Assign: return "'='";
    case Token::Kind::EqEq: return "'=='";
    case Token::Kind::Neq: return "'!='";
    case Token::Kind::Le: return "'<='";
    case Token::Kind::Ge: return "'>='";
    case Token::Kind::Lt: return "'<'";
    case Token::Kind::Gt: return "'>'";
    case Token::Kind::Plus: return "'+'";
    case Token::Kind::Minus: return "'-'";
    case Token::Kind::Star: return "'*'";
    case Token::Kind::Slash: return "'/'";
    case Token::Kind::Arrow: return "'->'";
    case Token::Kind::OrArrow: return "'-OR->'";
    case Token::Kind::XorArrow: return "'-XOR->'";
    case Token::Kind::Bar: return "'|'";
    case Token::Kind::BarBar: return "'||'";
    case Token::Kind::Amp: return "'&'";
    case Token::Kind::AmpAmp: return "'&&'";
  }
  return "token";
}

// Tokenizes a whole source buffer. Comments run from // to end of line.
inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;

  auto peek = [&](size_t k = 0) -> char { return i + k < src.size() ? src[i + k] : '\0'; };
  auto advance = [&]() {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto push = [&](Token::Kind kind, SourceLoc loc, std::string text = "") {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.loc = loc;
    out.push_back(std::move(t));
  };

  while (i < src.size()) {
    char c = peek();
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance();
      continue;
    }
    if (c == '/' && peek(1) == '/') {
      while (i < src.size() && peek() != '\n') advance();
      continue;
    }
    SourceLoc loc{line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        word += peek();
        advance();
      }
      push(Token::Kind::Ident, loc, std::move(word));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits += peek();
        advance();
      }
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        digits += '.';
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          digits += peek();
          advance();
        }
      }
      if (peek() == 'e' || peek() == 'E') {
        size_t save = i;
        std::string ex;
        ex += peek();
        advance();
        if (peek() == '+' || peek() == '-') {
          ex += peek();
          advance();
        }
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          while (std::isdigit(static_cast<unsigned char>(peek()))) {
            ex += peek();
            advance();
          }
          digits += ex;
        } else {
          // Not an exponent; rewind (identifier follows, e.g. "10end").
          while (i > save) {
            --i;
            --col;
          }
        }
      }
      Token t;
      t.kind = Token::Kind::Number;
      t.text = digits;
      t.number = std::strtod(digits.c_str(), nullptr);
      t.loc = loc;
      out.push_back(std::move(t));
      continue;
    }
    switch (c) {
      case '{': advance(); push(Token::Kind::LBrace, loc); continue;
      case '}': advance(); push(Token::Kind::RBrace, loc); continue;
      case '(': advance(); push(Token::Kind::LParen, loc); continue;
      case ')': advance(); push(Token::Kind::RParen, loc); continue;
      case '[': advance(); push(Token::Kind::LBracket, loc); continue;
      case ']': advance(); push(Token::Kind::RBracket, loc); continue;
      case ',': advance(); push(Token::Kind::Comma, loc); continue;
      case '?': advance(); push(Token::Kind::Question, loc); continue;
      case ':': advance(); push(Token::Kind::Colon, loc); continue;
      case '+': advance(); push(Token::Kind::Plus, loc); continue;
      case '*': advance(); push(Token::Kind::Star, loc); continue;
      case '/': advance(); push(Token::Kind::Slash, loc); continue;
      case '.':
        if (peek(1) == '.' && peek(2) == '.') {
          advance();
          advance();
          advance();
          push(Token::Kind::Ellipsis, loc);
        } else {
          advance();
          push(Token::Kind::Dot, loc);
        }
        continue;
      case '!':
        advance();
        if (peek() == '=') {
          advance();
          push(Token::Kind::Neq, loc);
        } else {
          push(Token::Kind::Bang, loc);
        }
        continue;
      case '=':
        advance();
        if (peek() == '=') {
          advance();
          push(Token::Kind::EqEq, loc);
        } else {
          push(Token::Kind::Assign, loc);
        }
        continue;
      case '<':
        advance();
        if (peek() == '=') {
          advance();
          push(Token::Kind::Le, loc);
        } else {
          push(Token::Kind::Lt, loc);
        }
        continue;
      case '>':
        advance();
        if (peek() == '=') {
          advance();
          push(Token::Kind::Ge, loc);
        } else {
          push(Token::Kind::Gt, loc);
        }
        continue;
      case '|':
        advance();
        if (peek() == '|') {
          advance();
          push(Token::Kind::BarBar, loc);
        } else {
          push(Token::Kind::Bar, loc);
        }
        continue;
      case '&':
        advance();
        if (peek() == '&') {
          advance();
          push(Token::Kind::AmpAmp, loc);
        } else {
          push(Token::Kind::Amp, loc);
        }
        continue;
      case '-':
        // Longest match first: -OR->, -XOR->, ->, then plain minus.
        if (src.compare(i, 5, "-OR->") == 0) {
          for (int k = 0; k < 5; ++k) advance();
          push(Token::Kind::OrArrow, loc);
        } else if (src.compare(i, 6, "-XOR->") == 0) {
          for (int k = 0; k < 6; ++k) advance();
          push(Token::Kind::XorArrow, loc);
        } else if (peek(1) == '>') {
          advance();
          advance();
          push(Token::Kind::Arrow, loc);
        } else {
          advance();
          push(Token::Kind::Minus, loc);
        }
        continue;
      default:
        parse_fail(std::string("unexpected character '") + c + "'", loc);
    }
  }
  Token t;
  t.kind = Token::Kind::End;
  t.loc = {line, col};
  out.push_back(std::move(t));
  return out;
}

}  // namespace qflan
