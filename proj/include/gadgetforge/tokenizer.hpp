// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gadgetforge/corpus_io.hpp"

namespace gadgetforge {

enum class VocabKind { Word, Bpe };

using TokenId = std::uint32_t;

/// Dense token <-> id map. Ids 0-3 are <pad>, <unk>, <s>, </s>. A byte-level
/// BPE vocabulary puts byte b at id 4 + b and merge i at id 260 + i.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr std::size_t kSpecials = 4;

  Vocabulary() : Vocabulary(VocabKind::Word) {}
  explicit Vocabulary(VocabKind kind);

  VocabKind kind() const { return kind_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

  /// Appends a token; returns its id (the existing id when already present).
  TokenId add(std::string token);
  void add_merge(std::string left, std::string right);

  bool operator==(const Vocabulary& other) const {
    return kind_ == other.kind_ && tokens_ == other.tokens_ && merges_ == other.merges_;
  }

 private:
  VocabKind kind_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, std::size_t> merge_rank_;

  friend std::vector<TokenId> bpe_ids(std::string_view text, const Vocabulary& vocab);
};

/// Word-level tokens: C lexer tokens (identifiers, literals, operators).
std::vector<std::string> word_tokens(std::string_view text);

/// Most frequent word tokens with frequency >= min_freq; `max_size` counts
/// the four specials. Frequency ties go to the lexicographically smaller token.
Vocabulary build_word_vocab(const std::vector<std::string>& corpus, std::size_t max_size, std::size_t min_freq = 1);

/// GPT-2 style pre-tokenization: word runs, punctuation runs and whitespace,
/// a single preceding space attaching to the next run. Concatenation of the
/// chunks is the input.
std::vector<std::string_view> bpe_chunks(std::string_view text);

/// Greedy byte-level BPE: `merge_count` times merge the most frequent
/// adjacent pair (ties: earliest first occurrence). Stops early when no pair is left.
Vocabulary train_bpe(const std::vector<std::string>& corpus, std::size_t merge_count);

/// Token ids of the text without BOS/EOS (UNK for unknown words in word mode).
std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

/// Inverse of byte-level BPE tokenization; specials are skipped.
std::string bpe_decode(const std::vector<TokenId>& ids, const Vocabulary& vocab);

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> mask;

  std::size_t length() const { return ids.size(); }
  /// Number of non-PAD positions (always a prefix).
  std::size_t active() const;
  bool operator==(const TokenSequence&) const = default;
};

enum class Truncation { KeepHead, KeepTail };

/// BOS + tokens + EOS, cut to max_len with EOS kept as the last position,
/// then PAD-filled. max_len >= 2.
TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len,
                     Truncation truncation = Truncation::KeepHead);

/// Body lines joined with LF; this is the text a gadget is tokenized from.
std::string gadget_text(const GadgetRecord& record);

/// "token<TAB>id" per line after a "#kind" line; tokens are escaped
/// (backslash, whitespace, control and non-ASCII bytes as \xHH).
std::string write_vocab(const Vocabulary& vocab);
/// "left right" per line, escaped like the vocabulary.
std::string write_merges(const Vocabulary& vocab);
/// Rebuilds a vocabulary; BPE vocabularies need their merges file.
Vocabulary parse_vocab(std::string_view vocab_text, std::string_view merges_text = {});

std::string escape_token(std::string_view token);
std::string unescape_token(std::string_view text);

}  // namespace gadgetforge
