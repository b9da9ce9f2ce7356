// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/extractor.hpp"

#include <omp.h>

#include <algorithm>
#include <map>
#include <unordered_map>

#include "gadgetforge/error.hpp"

namespace gadgetforge {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// ---------------------------------------------------------------------------
// normalization

std::string normalize_source(std::string_view text) {
  std::string ascii;
  ascii.reserve(text.size());
  for (char c : text) {
    if (static_cast<unsigned char>(c) < 0x80) ascii.push_back(c);
  }

  std::string out;
  out.reserve(ascii.size());
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = ascii.size();
  while (i < n) {
    const char c = ascii[i];
    if (c == '"' || c == '\'') {
      out.push_back(c);
      ++i;
      while (i < n && ascii[i] != c && ascii[i] != '\n') {
        if (ascii[i] == '\\' && i + 1 < n) {
          out.push_back(ascii[i++]);
          if (ascii[i] == '\n') ++line;
        }
        out.push_back(ascii[i++]);
      }
      if (i < n && ascii[i] == c) out.push_back(ascii[i++]);
      continue;
    }
    if (c == '/' && i + 1 < n && ascii[i + 1] == '/') {
      i += 2;
      while (i < n && ascii[i] != '\n') {
        if (ascii[i] == '\\' && i + 1 < n && ascii[i + 1] == '\n') {
          out.push_back('\n');
          ++line;
          i += 2;
          continue;
        }
        ++i;
      }
      continue;
    }
    if (c == '/' && i + 1 < n && ascii[i + 1] == '*') {
      const std::size_t open_line = line;
      i += 2;
      bool closed = false;
      while (i < n) {
        if (ascii[i] == '*' && i + 1 < n && ascii[i + 1] == '/') {
          i += 2;
          closed = true;
          break;
        }
        if (ascii[i] == '\n') {
          out.push_back('\n');
          ++line;
        }
        ++i;
      }
      if (!closed) throw Error(Errc::UnterminatedComment, "unclosed block comment at line " + std::to_string(open_line), open_line);
      continue;
    }
    if (c == '\n') ++line;
    out.push_back(c);
    ++i;
  }
  return out;
}

SourceUnit make_unit(std::string path, std::string_view normalized_text) {
  SourceUnit unit;
  unit.path = std::move(path);
  std::size_t pos = 0;
  while (pos <= normalized_text.size()) {
    const std::size_t nl = normalized_text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < normalized_text.size()) unit.lines.emplace_back(normalized_text.substr(pos));
      break;
    }
    std::string_view line = normalized_text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    unit.lines.emplace_back(line);
    pos = nl + 1;
  }

  // Preprocessor directives (including continuation lines) carry no code tokens.
  std::vector<bool> directive(unit.lines.size() + 2, false);
  for (std::size_t l = 0; l < unit.lines.size(); ++l) {
    const std::string& text = unit.lines[l];
    const std::size_t first = text.find_first_not_of(" \t");
    const bool continued = l > 0 && directive[l] && !unit.lines[l - 1].empty() && unit.lines[l - 1].back() == '\\';
    if ((first != std::string::npos && text[first] == '#') || continued) {
      directive[l + 1] = true;
      if (!text.empty() && text.back() == '\\') directive[l + 2] = true;
    }
  }
  for (auto& tok : lex(normalized_text)) {
    if (tok.line < directive.size() && directive[tok.line]) continue;
    unit.tokens.push_back(std::move(tok));
  }
  return unit;
}

// ---------------------------------------------------------------------------
// per-unit analysis

namespace {

bool is_assignment_op(std::string_view t) {
  return t == "=" || t == "+=" || t == "-=" || t == "*=" || t == "/=" || t == "%=" || t == "&=" || t == "|=" ||
         t == "^=" || t == "<<=" || t == ">>=";
}

struct FunctionInfo {
  std::string name;
  std::size_t name_token = 0;
  std::size_t lparen = 0;
  std::size_t rparen = 0;
  std::size_t body_open = 0;
  std::size_t body_close = 0;
  std::size_t header_line = 0;
  std::size_t end_line = 0;
  std::size_t body_scope = 0;
  std::size_t def_id = 0;
  std::vector<std::size_t> params;  // def ids in parameter order
};

struct LineFacts {
  std::set<std::size_t> defines;  // variable defs declared or assigned on the line
  std::set<std::size_t> refs;     // variable defs read on the line (declaration tokens excluded)
};

}  // namespace

struct UnitAnalysis {
  SourceUnit unit;
  std::vector<std::size_t> match;
  std::vector<std::size_t> scope_parent;
  std::vector<std::size_t> token_scope;
  std::vector<std::size_t> token_function;  // kNone outside function headers/bodies
  std::vector<FunctionInfo> functions;
  std::vector<Definition> defs;
  std::vector<std::size_t> token_def;
  std::vector<bool> decl_token;
  std::map<std::size_t, LineFacts> lines;
  std::vector<std::size_t> line_function;  // by line number, kNone at file scope

  explicit UnitAnalysis(SourceUnit u);

 private:
  const Token& tok(std::size_t i) const { return unit.tokens[i]; }
  bool tok_is(std::size_t i, std::string_view s) const { return i < unit.tokens.size() && unit.tokens[i].text == s; }
  bool tok_ident(std::size_t i) const { return i < unit.tokens.size() && unit.tokens[i].kind == TokenKind::Ident; }

  void match_brackets();
  void find_scopes_and_functions();
  bool statement_start(std::size_t i) const;
  std::vector<std::size_t> parse_declaration(std::size_t s) const;
  void collect_declarations();
  void collect_parameters();
  void resolve();
  bool assigned_at(std::size_t i) const;
  void add_def(Definition def, std::size_t token);

  std::map<std::pair<std::size_t, std::string>, std::vector<std::size_t>> by_scope_;
  std::unordered_map<std::string, std::size_t> functions_by_name_;
};

UnitAnalysis::UnitAnalysis(SourceUnit u) : unit(std::move(u)) {
  const std::size_t n = unit.tokens.size();
  token_def.assign(n, kNone);
  decl_token.assign(n, false);
  token_function.assign(n, kNone);
  match_brackets();
  find_scopes_and_functions();
  collect_parameters();
  collect_declarations();
  resolve();
}

void UnitAnalysis::match_brackets() {
  const std::size_t n = unit.tokens.size();
  match.assign(n, kNone);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& t = tok(i).text;
    if (tok(i).kind != TokenKind::Punct) continue;
    if (t == "(" || t == "[" || t == "{") {
      stack.push_back(i);
    } else if (t == ")" || t == "]" || t == "}") {
      const char open = t == ")" ? '(' : t == "]" ? '[' : '{';
      // Unbalanced input: drop unmatched openers of a different kind.
      while (!stack.empty() && tok(stack.back()).text[0] != open) stack.pop_back();
      if (!stack.empty()) {
        match[i] = stack.back();
        match[stack.back()] = i;
        stack.pop_back();
      }
    }
  }
}

void UnitAnalysis::find_scopes_and_functions() {
  const std::size_t n = unit.tokens.size();
  token_scope.assign(n, 0);
  scope_parent.assign(1, 0);
  std::vector<std::size_t> stack{0};
  std::size_t current_function = kNone;

  for (std::size_t i = 0; i < n; ++i) {
    if (tok_is(i, "{")) {
      const std::size_t scope = scope_parent.size();
      scope_parent.push_back(stack.back());
      stack.push_back(scope);

      if (current_function == kNone && match[i] != kNone) {
        std::size_t k = i;
        while (k > 0 && (tok_is(k - 1, "const") || tok_is(k - 1, "noexcept") || tok_is(k - 1, "override") ||
                         tok_is(k - 1, "final") || tok_is(k - 1, "volatile"))) {
          --k;
        }
        if (k > 0 && tok_is(k - 1, ")") && match[k - 1] != kNone) {
          const std::size_t lp = match[k - 1];
          if (lp > 0 && tok_ident(lp - 1) && !(lp > 1 && (tok_is(lp - 2, ".") || tok_is(lp - 2, "->")))) {
            FunctionInfo fn;
            fn.name = tok(lp - 1).text;
            fn.name_token = lp - 1;
            fn.lparen = lp;
            fn.rparen = k - 1;
            fn.body_open = i;
            fn.body_close = match[i];
            fn.header_line = tok(lp - 1).line;
            fn.end_line = tok(match[i]).line;
            fn.body_scope = scope;
            current_function = functions.size();
            functions.push_back(std::move(fn));
            for (std::size_t t = lp - 1; t < i; ++t) token_function[t] = current_function;
          }
        }
      }
      token_scope[i] = stack.back();
      if (current_function != kNone) token_function[i] = current_function;
      continue;
    }
    token_scope[i] = stack.back();
    if (current_function != kNone) token_function[i] = current_function;
    if (tok_is(i, "}")) {
      if (stack.size() > 1) stack.pop_back();
      if (current_function != kNone && functions[current_function].body_close == i) current_function = kNone;
    }
  }

  std::size_t max_line = unit.lines.size() + 1;
  for (const auto& t : unit.tokens) max_line = std::max(max_line, t.line + 1);
  line_function.assign(max_line + 1, kNone);
  for (std::size_t f = 0; f < functions.size(); ++f) {
    for (std::size_t l = functions[f].header_line; l <= functions[f].end_line && l < line_function.size(); ++l) {
      line_function[l] = f;
    }
  }
}

void UnitAnalysis::add_def(Definition def, std::size_t token) {
  const std::size_t id = defs.size();
  def.decl_token = token;
  def.decl_line = tok(token).line;
  if (def.kind == DefinitionKind::Variable) {
    by_scope_[{def.scope, def.name}].push_back(id);
    decl_token[token] = true;
    token_def[token] = id;
  } else {
    functions_by_name_.emplace(def.name, id);
  }
  defs.push_back(std::move(def));
}

void UnitAnalysis::collect_parameters() {
  for (std::size_t f = 0; f < functions.size(); ++f) {
    FunctionInfo& fn = functions[f];
    Definition fdef;
    fdef.name = fn.name;
    fdef.kind = DefinitionKind::Function;
    fdef.scope = 0;
    fn.def_id = defs.size();
    add_def(std::move(fdef), fn.name_token);

    std::size_t seg_start = fn.lparen + 1;
    std::size_t index = 0;
    for (std::size_t i = fn.lparen + 1; i <= fn.rparen; ++i) {
      if (i < fn.rparen && match[i] != kNone && (tok_is(i, "(") || tok_is(i, "[") || tok_is(i, "{"))) {
        i = match[i];
        continue;
      }
      if (i != fn.rparen && !tok_is(i, ",")) continue;
      // Segment [seg_start, i): the declared name is the last depth-0 identifier
      // before any '[' or '=' and must follow at least one type token.
      std::size_t name = kNone;
      std::size_t count = 0;
      for (std::size_t j = seg_start; j < i; ++j) {
        if (tok_is(j, "=")) break;
        if (tok_is(j, "[")) break;
        if (match[j] != kNone && tok_is(j, "(")) {
          j = match[j];
          ++count;
          continue;
        }
        if (tok_ident(j) && count > 0) name = j;
        ++count;
      }
      if (name != kNone) {
        Definition p;
        p.name = tok(name).text;
        p.kind = DefinitionKind::Variable;
        p.scope = fn.body_scope;
        p.function = fn.name;
        p.is_parameter = true;
        p.parameter_index = index;
        fn.params.push_back(defs.size());
        add_def(std::move(p), name);
      } else {
        fn.params.push_back(kNone);
      }
      ++index;
      seg_start = i + 1;
    }
  }
}

bool UnitAnalysis::statement_start(std::size_t i) const {
  if (i == 0) return true;
  const std::size_t p = i - 1;
  if (tok_is(p, ";") || tok_is(p, "{") || tok_is(p, "}") || tok_is(p, "else") || tok_is(p, "do")) return true;
  if (tok_is(p, "(") && p > 0 && tok_is(p - 1, "for")) return true;
  if (tok_is(p, ")") && match[p] != kNone && match[p] > 0) {
    const std::size_t kw = match[p] - 1;
    return tok_is(kw, "if") || tok_is(kw, "while") || tok_is(kw, "for") || tok_is(kw, "switch");
  }
  return false;
}

std::vector<std::size_t> UnitAnalysis::parse_declaration(std::size_t s) const {
  const std::size_t n = unit.tokens.size();
  static constexpr std::string_view kNotDecl[] = {"typedef", "return", "goto", "break", "continue", "case",
                                                  "default", "using", "namespace", "template", "friend"};
  for (auto kw : kNotDecl) {
    if (tok_is(s, kw)) return {};
  }
  const bool file_scope = token_function[s] == kNone;

  std::size_t j = s;
  bool typed = false;
  bool named_type = false;
  while (j < n) {
    const Token& t = tok(j);
    if (t.kind == TokenKind::Keyword && is_type_keyword(t.text)) {
      if (t.text == "struct" || t.text == "union" || t.text == "enum" || t.text == "class") {
        ++j;
        if (tok_ident(j)) ++j;
        if (tok_is(j, "{") || tok_is(j, ":")) return {};
        named_type = true;
      } else if (t.text != "const" && t.text != "static" && t.text != "extern" && t.text != "volatile" &&
                 t.text != "register" && t.text != "inline" && t.text != "constexpr" && t.text != "mutable") {
        named_type = true;
        ++j;
      } else {
        ++j;
      }
      typed = true;
      continue;
    }
    if (t.kind == TokenKind::Ident && !named_type) {
      std::size_t k = j + 1;
      while (tok_is(k, "::") && tok_ident(k + 1)) k += 2;
      if (tok_is(k, "<")) {
        int depth = 0;
        std::size_t m = k;
        for (; m < n; ++m) {
          if (tok_is(m, "<")) ++depth;
          else if (tok_is(m, ">")) --depth;
          else if (tok_is(m, ">>")) depth -= 2;
          else if (tok_is(m, ";") || tok_is(m, "{") || tok_is(m, "}") || tok_is(m, "=")) return {};
          if (depth <= 0) break;
        }
        if (m >= n || depth < 0) return {};
        k = m + 1;
      }
      if (tok_ident(k) || tok_is(k, "*") || tok_is(k, "&") || tok_is(k, "&&")) {
        j = k;
        typed = true;
        named_type = true;
        continue;
      }
      return {};
    }
    break;
  }
  if (!typed || !named_type) return {};

  std::vector<std::size_t> names;
  while (j < n) {
    while (tok_is(j, "*") || tok_is(j, "&") || tok_is(j, "&&") || tok_is(j, "const") || tok_is(j, "volatile") ||
           tok_is(j, "restrict")) {
      ++j;
    }
    if (!tok_ident(j)) return names;
    const std::size_t name = j++;
    if (tok_is(j, "(")) {
      if (file_scope || match[j] == kNone) return {};
      j = match[j] + 1;
    }
    while (tok_is(j, "[") && match[j] != kNone) j = match[j] + 1;
    if (tok_is(j, "=")) {
      ++j;
      while (j < n && !tok_is(j, ",") && !tok_is(j, ";") && !tok_is(j, ")")) {
        if ((tok_is(j, "(") || tok_is(j, "[") || tok_is(j, "{")) && match[j] != kNone) {
          j = match[j];
        }
        ++j;
      }
    } else if (tok_is(j, "{") && match[j] != kNone) {
      j = match[j] + 1;
    }
    names.push_back(name);
    if (tok_is(j, ",")) {
      ++j;
      continue;
    }
    if (tok_is(j, ";") || tok_is(j, ":") || tok_is(j, ")")) return names;
    return {};
  }
  return {};
}

void UnitAnalysis::collect_declarations() {
  const std::size_t n = unit.tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!statement_start(i)) continue;
    // Function headers are handled by collect_parameters.
    if (token_function[i] != kNone && i < functions[token_function[i]].body_open) continue;
    for (std::size_t name : parse_declaration(i)) {
      if (decl_token[name]) continue;
      Definition d;
      d.name = tok(name).text;
      d.kind = DefinitionKind::Variable;
      d.scope = token_scope[name];
      if (token_function[name] != kNone) d.function = functions[token_function[name]].name;
      add_def(std::move(d), name);
    }
  }
}

bool UnitAnalysis::assigned_at(std::size_t i) const {
  const std::size_t n = unit.tokens.size();
  std::size_t k = i + 1;
  while (k < n) {
    if (tok_is(k, "[") && match[k] != kNone) {
      k = match[k] + 1;
    } else if ((tok_is(k, ".") || tok_is(k, "->")) && tok_ident(k + 1)) {
      k += 2;
    } else {
      break;
    }
  }
  if (k < n && (is_assignment_op(tok(k).text) || tok_is(k, "++") || tok_is(k, "--"))) {
    if (i > 0 && tok_is(i - 1, "*")) return i < 2 || statement_start(i - 1);
    return true;
  }
  if (i > 0 && (tok_is(i - 1, "++") || tok_is(i - 1, "--"))) return true;
  return false;
}

void UnitAnalysis::resolve() {
  const std::size_t n = unit.tokens.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!tok_ident(i) || decl_token[i]) continue;
    if (i > 0 && (tok_is(i - 1, ".") || tok_is(i - 1, "->") || tok_is(i - 1, "::"))) continue;
    if (tok_is(i + 1, "::")) continue;
    bool is_function_name = false;
    for (const auto& fn : functions) {
      if (fn.name_token == i) is_function_name = true;
    }
    if (is_function_name) continue;

    const std::string& name = tok(i).text;
    std::size_t found = kNone;
    std::size_t scope = token_scope[i];
    // Parameters live in the body scope but their tokens precede the body.
    if (token_function[i] != kNone && i < functions[token_function[i]].body_open) {
      scope = functions[token_function[i]].body_scope;
    }
    while (true) {
      auto it = by_scope_.find({scope, name});
      if (it != by_scope_.end()) {
        for (std::size_t id : it->second) {
          if (defs[id].decl_token < i && (found == kNone || defs[id].decl_token > defs[found].decl_token)) found = id;
        }
      }
      if (found != kNone || scope == 0) break;
      scope = scope_parent[scope];
    }
    if (found == kNone) {
      auto it = functions_by_name_.find(name);
      if (it != functions_by_name_.end()) found = it->second;
    }
    if (found == kNone) continue;
    token_def[i] = found;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = token_def[i];
    if (id == kNone) continue;
    Definition& d = defs[id];
    if (i > d.decl_token) d.uses.push_back(tok(i).line);
    if (d.kind != DefinitionKind::Variable) continue;
    LineFacts& facts = lines[tok(i).line];
    if (decl_token[i]) {
      facts.defines.insert(id);
    } else {
      facts.refs.insert(id);
      if (assigned_at(i)) facts.defines.insert(id);
    }
  }
  for (auto& d : defs) {
    std::sort(d.uses.begin(), d.uses.end());
    d.uses.erase(std::unique(d.uses.begin(), d.uses.end()), d.uses.end());
  }
}

// ---------------------------------------------------------------------------

std::vector<Definition> extract_definitions(const SourceUnit& unit) { return UnitAnalysis(unit).defs; }

namespace {

/// Identifier tokens of an argument expression, skipping nested callees and member names.
std::vector<std::size_t> argument_identifiers(const std::vector<Token>& toks, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  for (std::size_t j = begin; j < end; ++j) {
    if (toks[j].kind != TokenKind::Ident) continue;
    if (j + 1 < toks.size() && toks[j + 1].text == "(") continue;
    if (j > 0 && (toks[j - 1].text == "." || toks[j - 1].text == "->")) continue;
    if (is_library_name(toks[j].text)) continue;
    out.push_back(j);
  }
  return out;
}

/// Splits the tokens between a call's parentheses into depth-0 comma segments.
std::vector<std::pair<std::size_t, std::size_t>> argument_segments(const std::vector<Token>& toks,
                                                                   const std::vector<std::size_t>& match,
                                                                   std::size_t lparen) {
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  const std::size_t rparen = match[lparen];
  if (rparen == kNone) return segs;
  std::size_t start = lparen + 1;
  for (std::size_t j = lparen + 1; j <= rparen; ++j) {
    if (j < rparen && match[j] != kNone && (toks[j].text == "(" || toks[j].text == "[" || toks[j].text == "{")) {
      j = match[j];
      continue;
    }
    if (j == rparen || toks[j].text == ",") {
      if (j > start) segs.emplace_back(start, j);
      start = j + 1;
    }
  }
  return segs;
}

std::vector<CallSite> calls_in(const UnitAnalysis& ua, const ApiList& api) {
  std::vector<CallSite> out;
  const auto& toks = ua.unit.tokens;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::Ident || toks[i + 1].text != "(") continue;
    if (!api.contains(toks[i].text)) continue;
    if (i > 0 && (toks[i - 1].text == "." || toks[i - 1].text == "->")) continue;
    if (ua.match[i + 1] == kNone) continue;
    CallSite site;
    site.callee = toks[i].text;
    site.path = ua.unit.path;
    site.line = toks[i].line;
    site.token = i;
    if (ua.token_function[i] != kNone) site.function = ua.functions[ua.token_function[i]].name;
    for (std::size_t j : argument_identifiers(toks, i + 2, ua.match[i + 1])) {
      if (std::find(site.arguments.begin(), site.arguments.end(), toks[j].text) == site.arguments.end()) {
        site.arguments.push_back(toks[j].text);
      }
    }
    out.push_back(std::move(site));
  }
  return out;
}

}  // namespace

std::vector<CallSite> find_api_calls(const SourceUnit& unit, const ApiList& api) {
  return calls_in(UnitAnalysis(unit), api);
}

// ---------------------------------------------------------------------------

struct ProgramIndex::Impl {
  std::vector<SourceUnit> units;  // mirror of analyses[i].unit for the public accessor
  std::vector<UnitAnalysis> analyses;
  std::map<std::string, std::size_t, std::less<>> by_path;
};

ProgramIndex::ProgramIndex(std::vector<SourceUnit> units) : impl_(std::make_unique<Impl>()) {
  std::sort(units.begin(), units.end(), [](const SourceUnit& a, const SourceUnit& b) { return a.path < b.path; });
  std::vector<std::unique_ptr<UnitAnalysis>> built(units.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(units.size()); ++i) {
    built[i] = std::make_unique<UnitAnalysis>(units[i]);
  }
  impl_->units = std::move(units);
  impl_->analyses.reserve(built.size());
  for (std::size_t i = 0; i < built.size(); ++i) {
    impl_->analyses.push_back(std::move(*built[i]));
    impl_->by_path.emplace(impl_->units[i].path, i);
  }
}

ProgramIndex::~ProgramIndex() = default;
ProgramIndex::ProgramIndex(ProgramIndex&&) noexcept = default;
ProgramIndex& ProgramIndex::operator=(ProgramIndex&&) noexcept = default;

const std::vector<SourceUnit>& ProgramIndex::units() const { return impl_->units; }

const std::vector<Definition>& ProgramIndex::definitions(std::size_t unit) const { return impl_->analyses.at(unit).defs; }

std::size_t ProgramIndex::unit_index(std::string_view path) const {
  auto it = impl_->by_path.find(path);
  if (it == impl_->by_path.end()) throw Error(Errc::IoFailure, "unit not indexed: " + std::string(path));
  return it->second;
}

const std::string& ProgramIndex::line_text(const SliceLine& where) const {
  static const std::string kEmpty;
  const auto& lines = impl_->units[unit_index(where.path)].lines;
  if (where.line == 0 || where.line > lines.size()) return kEmpty;
  return lines[where.line - 1];
}

namespace {

struct Slicer {
  const ProgramIndex::Impl& index;
  const SliceOptions& options;
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (unit, function) being sliced

  /// Lines of one function (or of file scope when fn == kNone) feeding `seeds`, plus caller slices.
  std::vector<SliceLine> slice(std::size_t u, std::size_t fn, std::set<std::size_t> seeds, std::size_t call_line,
                               std::size_t depth) {
    const UnitAnalysis& ua = index.analyses[u];
    std::set<std::size_t> own{call_line};
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [line, facts] : ua.lines) {
        if (line >= call_line || own.contains(line)) continue;
        const std::size_t owner = line < ua.line_function.size() ? ua.line_function[line] : kNone;
        if (owner != kNone && owner != fn) continue;
        const bool hit = std::any_of(facts.defines.begin(), facts.defines.end(),
                                     [&](std::size_t d) { return seeds.contains(d); });
        if (!hit) continue;
        own.insert(line);
        seeds.insert(facts.refs.begin(), facts.refs.end());
        changed = true;
      }
    }

    std::vector<SliceLine> out;
    if (fn != kNone) {
      const FunctionInfo& info = ua.functions[fn];
      std::set<std::size_t> fed_params;
      for (std::size_t p = 0; p < info.params.size(); ++p) {
        if (info.params[p] != kNone && seeds.contains(info.params[p])) fed_params.insert(p);
      }
      if (!fed_params.empty()) {
        stack.emplace_back(u, fn);
        for (auto& part : callers(u, fn, fed_params, depth)) {
          out.insert(out.end(), part.begin(), part.end());
        }
        stack.pop_back();
      }
    }
    for (std::size_t line : own) out.push_back({ua.unit.path, line});
    return out;
  }

  std::vector<std::vector<SliceLine>> callers(std::size_t u, std::size_t fn, const std::set<std::size_t>& params,
                                              std::size_t depth) {
    const std::string& name = index.analyses[u].functions[fn].name;
    std::vector<std::vector<SliceLine>> parts;
    for (std::size_t cu = 0; cu < index.analyses.size(); ++cu) {
      const UnitAnalysis& ca = index.analyses[cu];
      const auto& toks = ca.unit.tokens;
      for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::Ident || toks[i].text != name || toks[i + 1].text != "(") continue;
        if (i > 0 && (toks[i - 1].text == "." || toks[i - 1].text == "->")) continue;
        const std::size_t caller = ca.token_function[i];
        if (caller == kNone || ca.functions[caller].name_token == i) continue;
        if (std::find(stack.begin(), stack.end(), std::make_pair(cu, caller)) != stack.end()) continue;
        if (depth + 1 > options.max_depth) {
          throw Error(Errc::RecursionLimit, "caller back-tracking deeper than " + std::to_string(options.max_depth) +
                                                " at " + ca.functions[caller].name);
        }
        std::set<std::size_t> seeds;
        const auto segs = argument_segments(toks, ca.match, i + 1);
        for (std::size_t p : params) {
          if (p >= segs.size()) continue;
          for (std::size_t j : argument_identifiers(toks, segs[p].first, segs[p].second)) {
            const std::size_t d = ca.token_def[j];
            if (d != kNone && ca.defs[d].kind == DefinitionKind::Variable) seeds.insert(d);
          }
        }
        parts.push_back(slice(cu, caller, std::move(seeds), toks[i].line, depth + 1));
      }
    }
    return parts;
  }
};

}  // namespace

std::vector<SliceLine> backtrack_slice(const CallSite& site, const ProgramIndex& index, const SliceOptions& options) {
  const auto& impl = index.impl();
  const std::size_t u = index.unit_index(site.path);
  const UnitAnalysis& ua = impl.analyses[u];
  if (site.token + 1 >= ua.unit.tokens.size() || ua.match[site.token + 1] == kNone) {
    throw Error(Errc::MalformedRecord, "call site does not refer to a call in " + site.path);
  }
  std::set<std::size_t> seeds;
  for (std::size_t j : argument_identifiers(ua.unit.tokens, site.token + 2, ua.match[site.token + 1])) {
    const std::size_t d = ua.token_def[j];
    if (d != kNone && ua.defs[d].kind == DefinitionKind::Variable) seeds.insert(d);
  }
  Slicer slicer{impl, options, {}};
  auto raw = slicer.slice(u, ua.token_function[site.token], std::move(seeds), site.line, 0);

  std::vector<SliceLine> out;
  std::set<SliceLine> seen;
  for (auto& l : raw) {
    if (seen.insert(l).second) out.push_back(std::move(l));
  }
  return out;
}

GadgetRecord assemble_gadget(const std::vector<SliceLine>& slice, const CallSite& site, const ProgramIndex& index,
                             std::uint64_t id) {
  std::vector<std::string> file_order;
  for (const auto& l : slice) {
    if (std::find(file_order.begin(), file_order.end(), l.path) == file_order.end()) file_order.push_back(l.path);
  }
  GadgetRecord rec;
  rec.id = id;
  rec.header = std::to_string(id) + " " + site.path + " " + site.callee + " " + std::to_string(site.line);
  for (const auto& path : file_order) {
    for (const auto& l : slice) {
      if (l.path != path) continue;
      std::string_view text = index.line_text(l);
      const std::size_t b = text.find_first_not_of(" \t");
      const std::size_t e = text.find_last_not_of(" \t");
      text = b == std::string_view::npos ? std::string_view{} : text.substr(b, e - b + 1);
      if (text.empty() && !rec.body.empty() && rec.body.back().empty()) continue;
      rec.body.emplace_back(text);
    }
  }
  return rec;
}

ApiList parse_api_list(std::string_view text) {
  ApiList api;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) continue;
    const std::size_t e = line.find_last_not_of(" \t\r");
    api.emplace(line.substr(b, e - b + 1));
  }
  return api;
}

const ApiList& default_api_list() {
  static const ApiList kApi = {
      "memcpy",  "memmove", "memset",   "memcmp",  "memchr",   "strcpy",  "strncpy", "strcat",   "strncat",
      "strcmp",  "strncmp", "strlen",   "strchr",  "strrchr",  "strstr",  "strdup",  "strndup",  "strtok",
      "sprintf", "snprintf", "vsprintf", "vsnprintf", "printf", "fprintf", "scanf",  "sscanf",   "fscanf",
      "gets",    "fgets",   "getc",     "fgetc",   "read",     "fread",   "fwrite",  "write",    "recv",
      "malloc",  "calloc",  "realloc",  "free",    "alloca",   "wcscpy",  "wcsncpy", "wcscat",   "wcsncat",
      "wcslen",  "wmemcpy", "wmemset",  "fopen",   "fclose",   "open",    "close",   "atoi",     "atol",
      "strtol",  "strtoul", "getenv",   "system"};
  return kApi;
}

std::vector<GadgetRecord> extract_gadgets(const std::vector<SourceFile>& files, const ApiList& api,
                                          const ExtractOptions& options) {
  std::vector<SourceUnit> units;
  units.reserve(files.size());
  for (const auto& f : files) units.push_back(make_unit(f.path.generic_string(), f.text));
  const ProgramIndex index(std::move(units));

  std::vector<GadgetRecord> out;
  std::uint64_t next_id = 1;
  for (const auto& ua : index.impl().analyses) {
    for (const auto& site : calls_in(ua, api)) {
      const auto slice = backtrack_slice(site, index, options.slice);
      GadgetRecord rec = assemble_gadget(slice, site, index, next_id++);
      rec.origin = options.origin;
      const std::string key = site.path + ":" + std::to_string(site.line);
      rec.label = options.vulnerable_sites.contains(key) ? 1u : 0u;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace gadgetforge
