// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

namespace gadgetforge {
namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kSet = {
      "alignas", "alignof", "asm", "auto", "bool", "break", "case", "catch", "char", "char8_t", "char16_t",
      "char32_t", "class", "const", "consteval", "constexpr", "constinit", "const_cast", "continue",
      "co_await", "co_return", "co_yield", "decltype", "default", "delete", "do", "double", "dynamic_cast",
      "else", "enum", "explicit", "export", "extern", "false", "float", "for", "friend", "goto", "if",
      "inline", "int", "long", "mutable", "namespace", "new", "noexcept", "nullptr", "operator", "private",
      "protected", "public", "register", "reinterpret_cast", "requires", "restrict", "return", "short",
      "signed", "sizeof", "static", "static_assert", "static_cast", "struct", "switch", "template", "this",
      "thread_local", "throw", "true", "try", "typedef", "typeid", "typename", "union", "unsigned", "using",
      "virtual", "void", "volatile", "wchar_t", "while", "_Bool", "_Complex", "_Imaginary", "_Alignas",
      "_Alignof", "_Atomic", "_Generic", "_Noreturn", "_Static_assert", "_Thread_local", "include",
      "define", "ifdef", "ifndef", "endif", "elif", "pragma", "undef"};
  return kSet;
}

const std::unordered_set<std::string_view>& type_keywords() {
  static const std::unordered_set<std::string_view> kSet = {
      "auto", "bool", "char", "char8_t", "char16_t", "char32_t", "class", "const", "constexpr", "double",
      "enum", "extern", "float", "inline", "int", "long", "mutable", "register", "restrict", "short",
      "signed", "static", "struct", "thread_local", "typename", "union", "unsigned", "void", "volatile",
      "wchar_t", "_Bool", "_Complex", "_Atomic"};
  return kSet;
}

const std::unordered_set<std::string_view>& library_names() {
  static const std::unordered_set<std::string_view> kSet = {
      "size_t", "ssize_t", "ptrdiff_t", "intptr_t", "uintptr_t", "off_t", "time_t", "clock_t", "FILE",
      "NULL", "EOF", "BUFSIZ", "errno", "stdin", "stdout", "stderr", "int8_t", "int16_t", "int32_t",
      "int64_t", "uint8_t", "uint16_t", "uint32_t", "uint64_t", "wint_t", "va_list", "std", "string",
      "wstring", "vector", "map", "cout", "cin", "cerr", "endl", "main", "TRUE", "FALSE",
      "INT_MAX", "INT_MIN", "UINT_MAX", "LONG_MAX", "CHAR_BIT", "RAND_MAX", "EXIT_SUCCESS", "EXIT_FAILURE"};
  return kSet;
}

// Longest first.
constexpr std::array<std::string_view, 27> kOperators = {
    "<=>", "->*", "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
    "||",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "::", "##", ".*"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) { return keywords().contains(word); }
bool is_type_keyword(std::string_view word) { return type_keywords().contains(word); }
bool is_library_name(std::string_view word) { return library_names().contains(word); }

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t line_start = 0;

  auto push = [&](TokenKind kind, std::size_t start, std::size_t end, std::size_t tok_line, std::size_t tok_line_start) {
    tokens.push_back({kind, std::string(text.substr(start, end - start)), tok_line, start - tok_line_start, start});
  };

  auto scan_quoted = [&](std::size_t j, char quote) {
    // j points at the opening quote; returns one past the closing quote (or the end of line).
    ++j;
    while (j < text.size() && text[j] != quote && text[j] != '\n') {
      if (text[j] == '\\' && j + 1 < text.size()) {
        if (text[j + 1] == '\n') {
          ++line;
          line_start = j + 2;
        }
        ++j;
      }
      ++j;
    }
    if (j < text.size() && text[j] == quote) ++j;
    return j;
  };

  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      line_start = i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    const std::size_t tok_line = line;
    const std::size_t tok_line_start = line_start;

    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      const std::string_view word = text.substr(i, j - i);
      if (j < text.size() && (text[j] == '"' || text[j] == '\'') &&
          (word == "L" || word == "u" || word == "U" || word == "u8")) {
        j = scan_quoted(j, text[j]);
        push(TokenKind::Literal, start, j, tok_line, tok_line_start);
      } else {
        push(is_keyword(word) ? TokenKind::Keyword : TokenKind::Ident, start, j, tok_line, tok_line_start);
      }
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i;
      while (j < text.size()) {
        const char d = text[j];
        if (ident_char(d) || d == '.') {
          ++j;
        } else if ((d == '+' || d == '-') && j > i && (text[j - 1] == 'e' || text[j - 1] == 'E' ||
                                                      text[j - 1] == 'p' || text[j - 1] == 'P')) {
          ++j;
        } else {
          break;
        }
      }
      push(TokenKind::Literal, start, j, tok_line, tok_line_start);
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      const std::size_t j = scan_quoted(i, c);
      push(TokenKind::Literal, start, j, tok_line, tok_line_start);
      i = j;
      continue;
    }
    std::size_t len = 1;
    for (std::string_view op : kOperators) {
      if (text.substr(i, op.size()) == op) {
        len = op.size();
        break;
      }
    }
    push(TokenKind::Punct, start, i + len, tok_line, tok_line_start);
    i += len;
  }
  return tokens;
}

}  // namespace gadgetforge
