// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <tuple>

#include "gadgetforge/error.hpp"
#include "gadgetforge/lexer.hpp"

namespace gadgetforge {

Vocabulary::Vocabulary(VocabKind kind) : kind_(kind) {
  for (const char* s : {"<pad>", "<unk>", "<s>", "</s>"}) add(s);
  if (kind_ == VocabKind::Bpe) {
    for (int b = 0; b < 256; ++b) {
      const std::string byte(1, static_cast<char>(b));
      const auto id = static_cast<TokenId>(tokens_.size());
      tokens_.push_back(byte);
      ids_.emplace(byte, id);  // bytes never collide with the specials' multi-byte names
    }
  }
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::add(std::string token) {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

void Vocabulary::add_merge(std::string left, std::string right) {
  std::string joined = left + right;
  merge_rank_.emplace(left + '\x01' + right, merges_.size());
  merges_.emplace_back(std::move(left), std::move(right));
  // Merged strings get their own id even when a byte-level token already spells them.
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(joined);
  ids_.try_emplace(std::move(joined), id);
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : lex(text)) out.push_back(std::move(t.text));
  return out;
}

Vocabulary build_word_vocab(const std::vector<std::string>& corpus, std::size_t max_size, std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const auto& text : corpus) {
    for (auto& t : word_tokens(text)) ++freq[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocabulary vocab(VocabKind::Word);
  for (const auto& [tok, n] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.add(tok);
  }
  return vocab;
}

namespace {

enum class CharClass { Space, Word, Other };

CharClass classify(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isspace(u)) return CharClass::Space;
  if (std::isalnum(u) || c == '_' || u >= 0x80) return CharClass::Word;
  return CharClass::Other;
}

}  // namespace

std::vector<std::string_view> bpe_chunks(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const CharClass c = classify(text[i]);
    if (c == CharClass::Space) {
      std::size_t j = i;
      while (j < n && classify(text[j]) == CharClass::Space) ++j;
      // A trailing single space before a non-space run belongs to that run.
      if (j < n && text[j - 1] == ' ') {
        if (j - 1 > i) out.push_back(text.substr(i, j - 1 - i));
        i = j - 1;
      } else {
        out.push_back(text.substr(i, j - i));
        i = j;
        continue;
      }
    }
    std::size_t start = i;
    std::size_t j = i;
    if (text[j] == ' ') ++j;
    const CharClass run = classify(text[j]);
    while (j < n && classify(text[j]) == run) ++j;
    out.push_back(text.substr(start, j - start));
    i = j;
  }
  return out;
}

Vocabulary train_bpe(const std::vector<std::string>& corpus, std::size_t merge_count) {
  Vocabulary vocab(VocabKind::Bpe);

  // Unique chunks in first-appearance order, with frequencies.
  struct Word {
    std::vector<int> symbols;
    std::size_t freq = 0;
  };
  std::vector<Word> words;
  std::unordered_map<std::string_view, std::size_t> word_index;
  for (const auto& text : corpus) {
    for (std::string_view chunk : bpe_chunks(text)) {
      auto [it, inserted] = word_index.try_emplace(chunk, words.size());
      if (inserted) {
        Word w;
        for (char ch : chunk) w.symbols.push_back(static_cast<unsigned char>(ch));
        words.push_back(std::move(w));
      }
      ++words[it->second].freq;
    }
  }

  std::vector<std::string> symbol_text(256);
  for (int b = 0; b < 256; ++b) symbol_text[b] = std::string(1, static_cast<char>(b));

  struct PairStat {
    std::size_t count = 0;
    std::size_t first_word = 0;
    std::size_t first_pos = 0;
  };
  for (std::size_t m = 0; m < merge_count; ++m) {
    std::map<std::pair<int, int>, PairStat> stats;
    for (std::size_t w = 0; w < words.size(); ++w) {
      const auto& sym = words[w].symbols;
      for (std::size_t p = 0; p + 1 < sym.size(); ++p) {
        auto [it, inserted] = stats.try_emplace({sym[p], sym[p + 1]}, PairStat{0, w, p});
        it->second.count += words[w].freq;
      }
    }
    if (stats.empty()) break;
    auto best = stats.begin();
    for (auto it = stats.begin(); it != stats.end(); ++it) {
      const auto& a = it->second;
      const auto& b = best->second;
      if (a.count > b.count ||
          (a.count == b.count && std::tie(a.first_word, a.first_pos) < std::tie(b.first_word, b.first_pos))) {
        best = it;
      }
    }
    const auto [left, right] = best->first;
    const int merged = static_cast<int>(symbol_text.size());
    symbol_text.push_back(symbol_text[left] + symbol_text[right]);
    vocab.add_merge(symbol_text[left], symbol_text[right]);

    for (auto& w : words) {
      auto& sym = w.symbols;
      std::size_t out = 0;
      for (std::size_t p = 0; p < sym.size(); ++p) {
        if (p + 1 < sym.size() && sym[p] == left && sym[p + 1] == right) {
          sym[out++] = merged;
          ++p;
        } else {
          sym[out++] = sym[p];
        }
      }
      sym.resize(out);
    }
  }
  return vocab;
}

std::vector<TokenId> bpe_ids(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  const std::size_t first_merge_id = Vocabulary::kSpecials + 256;
  for (std::string_view chunk : bpe_chunks(text)) {
    // Symbols are token ids; merges apply lowest rank first.
    std::vector<TokenId> sym;
    sym.reserve(chunk.size());
    for (char ch : chunk) sym.push_back(static_cast<TokenId>(Vocabulary::kSpecials + static_cast<unsigned char>(ch)));
    while (sym.size() > 1) {
      std::size_t best_rank = SIZE_MAX;
      for (std::size_t p = 0; p + 1 < sym.size(); ++p) {
        auto it = vocab.merge_rank_.find(vocab.token(sym[p]) + '\x01' + vocab.token(sym[p + 1]));
        if (it != vocab.merge_rank_.end()) best_rank = std::min(best_rank, it->second);
      }
      if (best_rank == SIZE_MAX) break;
      const auto& [left, right] = vocab.merges_[best_rank];
      const auto merged = static_cast<TokenId>(first_merge_id + best_rank);
      std::size_t out_n = 0;
      for (std::size_t p = 0; p < sym.size(); ++p) {
        if (p + 1 < sym.size() && vocab.token(sym[p]) == left && vocab.token(sym[p + 1]) == right) {
          sym[out_n++] = merged;
          ++p;
        } else {
          sym[out_n++] = sym[p];
        }
      }
      sym.resize(out_n);
    }
    out.insert(out.end(), sym.begin(), sym.end());
  }
  return out;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  if (vocab.kind() == VocabKind::Bpe) return bpe_ids(text, vocab);
  std::vector<TokenId> out;
  for (const auto& t : word_tokens(text)) out.push_back(vocab.find(t).value_or(Vocabulary::kUnk));
  return out;
}

std::string bpe_decode(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id < Vocabulary::kSpecials) continue;
    out += vocab.token(id);
  }
  return out;
}

std::size_t TokenSequence::active() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len, Truncation truncation) {
  if (max_len < 2) throw Error(Errc::ConfigMismatch, "max_len must be at least 2");
  std::vector<TokenId> body = tokenize(text, vocab);
  const std::size_t room = max_len - 2;
  if (body.size() > room) {
    if (truncation == Truncation::KeepHead) {
      body.resize(room);
    } else {
      body.erase(body.begin(), body.end() - static_cast<std::ptrdiff_t>(room));
    }
  }
  TokenSequence seq;
  seq.ids.reserve(max_len);
  seq.ids.push_back(Vocabulary::kBos);
  seq.ids.insert(seq.ids.end(), body.begin(), body.end());
  seq.ids.push_back(Vocabulary::kEos);
  seq.mask.assign(seq.ids.size(), 1);
  seq.ids.resize(max_len, Vocabulary::kPad);
  seq.mask.resize(max_len, 0);
  return seq;
}

std::string gadget_text(const GadgetRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < record.body.size(); ++i) {
    if (i) out.push_back('\n');
    out += record.body[i];
  }
  return out;
}

std::string escape_token(std::string_view token) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (char ch : token) {
    const auto u = static_cast<unsigned char>(ch);
    if (ch == '\\') {
      out += "\\\\";
    } else if (u <= 0x20 || u >= 0x7f) {
      out += "\\x";
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xF]);
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

std::string unescape_token(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 >= text.size()) {
      out.push_back(text[i]);
      continue;
    }
    if (text[i + 1] == '\\') {
      out.push_back('\\');
      ++i;
    } else if (text[i + 1] == 'x' && i + 3 < text.size()) {
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + i + 2, text.data() + i + 4, value, 16);
      if (ec != std::errc{} || ptr != text.data() + i + 4) throw Error(Errc::MalformedRecord, "bad escape in token");
      out.push_back(static_cast<char>(value));
      i += 3;
    } else {
      throw Error(Errc::MalformedRecord, "bad escape in token");
    }
  }
  return out;
}

std::string write_vocab(const Vocabulary& vocab) {
  std::string out = vocab.kind() == VocabKind::Bpe ? "#kind\tbpe\n" : "#kind\tword\n";
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out += escape_token(vocab.token(static_cast<TokenId>(id)));
    out += '\t';
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

std::string write_merges(const Vocabulary& vocab) {
  std::string out;
  for (const auto& [l, r] : vocab.merges()) {
    out += escape_token(l);
    out += ' ';
    out += escape_token(r);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> text_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

Vocabulary parse_vocab(std::string_view vocab_text, std::string_view merges_text) {
  auto lines = text_lines(vocab_text);
  if (lines.empty() || !lines.front().starts_with("#kind\t")) {
    throw Error(Errc::MalformedRecord, "vocabulary file must start with a #kind line");
  }
  const std::string_view kind = lines.front().substr(6);
  if (kind != "word" && kind != "bpe") throw Error(Errc::MalformedRecord, "unknown vocabulary kind");

  std::vector<std::string> tokens;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t tab = lines[i].rfind('\t');
    if (tab == std::string_view::npos) throw Error(Errc::MalformedRecord, "vocabulary line without TAB", i + 1);
    std::size_t id = 0;
    const std::string_view id_text = lines[i].substr(tab + 1);
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || id != tokens.size()) throw Error(Errc::MalformedRecord, "vocabulary ids must be dense", i + 1);
    tokens.push_back(unescape_token(lines[i].substr(0, tab)));
  }

  if (kind == "word") {
    Vocabulary vocab(VocabKind::Word);
    for (std::size_t i = Vocabulary::kSpecials; i < tokens.size(); ++i) vocab.add(tokens[i]);
    if (vocab.size() != tokens.size()) throw Error(Errc::MalformedRecord, "duplicate tokens in vocabulary");
    return vocab;
  }
  Vocabulary vocab(VocabKind::Bpe);
  for (std::string_view line : text_lines(merges_text)) {
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos) throw Error(Errc::MalformedRecord, "merge line without separator");
    vocab.add_merge(unescape_token(line.substr(0, sp)), unescape_token(line.substr(sp + 1)));
  }
  if (vocab.size() != tokens.size()) throw Error(Errc::MalformedRecord, "BPE vocabulary and merges disagree");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (vocab.token(static_cast<TokenId>(i)) != tokens[i]) {
      throw Error(Errc::MalformedRecord, "BPE vocabulary and merges disagree", i);
    }
  }
  return vocab;
}

}  // namespace gadgetforge
