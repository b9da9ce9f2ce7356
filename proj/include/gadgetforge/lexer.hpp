// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gadgetforge {

enum class TokenKind { Ident, Keyword, Literal, Punct };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t line = 1;    // 1-based
  std::size_t column = 0;  // byte offset within the line
  std::size_t offset = 0;  // byte offset within the whole text

  bool is(std::string_view s) const { return text == s; }
  bool is_ident() const { return kind == TokenKind::Ident; }
};

/// C/C++ token scanner over comment-free text. Multi-character operators are
/// single tokens; string and character literals (with an optional L/u/U/u8
/// prefix) are single Literal tokens.
std::vector<Token> lex(std::string_view text);

bool is_keyword(std::string_view word);

/// Keywords that name or qualify a type (int, unsigned, const, struct, ...).
bool is_type_keyword(std::string_view word);

/// Library typedefs and macros that are never treated as user identifiers
/// (size_t, FILE, NULL, uint8_t, ...).
bool is_library_name(std::string_view word);

}  // namespace gadgetforge
