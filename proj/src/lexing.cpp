#include "autoformal/lexing.hpp"

#include <algorithm>
#include <fstream>

#include "autoformal/error.hpp"

namespace autoformal::lexing {
namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

bool is_ascii_letter(char c) noexcept {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_identifier_char(char c) noexcept {
  return is_ascii_letter(c) || (c >= '0' && c <= '9') || c == '_' || c == '\'';
}

bool is_latex_delimiter(char c) noexcept {
  switch (c) {
    case '$': case '{': case '}': case '[': case ']': case '(': case ')':
    case '^': case '_': case ',': case '.':
      return true;
    default:
      return false;
  }
}

// Byte length of the UTF-8 sequence introduced by `lead`; malformed leads
// count as one byte so scanning always makes progress.
std::size_t utf8_length(unsigned char lead) noexcept {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::size_t code_point_column(std::string_view text, std::size_t offset) {
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) ++column;
  }
  return column;
}

bool has_whitespace(std::string_view s) {
  for (char c : s) {
    if (is_space(c)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(Language lang) noexcept {
  return lang == Language::Latex ? "latex" : "mizar";
}

Language parse_language(std::string_view name) {
  if (name == "latex") return Language::Latex;
  if (name == "mizar") return Language::Mizar;
  throw Error(ErrorKind::InvalidHyperParams,
              "unknown language '" + std::string(name) + "'");
}

std::string TokenSequence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

TokenSequence split_tokens(std::string_view line, Language lang) {
  TokenSequence seq{{}, lang};
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) seq.tokens.emplace_back(line.substr(start, i - start));
  }
  return seq;
}

// ---------------------------------------------------------------------------
// SymbolTable

void SymbolTable::add(Section section, std::string entry) {
  if (entry.empty() || has_whitespace(entry)) {
    throw Error(ErrorKind::InvalidSymbolTable,
                "symbol table entry is empty or contains whitespace: '" +
                    entry + "'");
  }
  if (by_length_.size() <= entry.size()) by_length_.resize(entry.size() + 1);
  by_length_[entry.size()].insert(entry);
  all_.insert(entry);
  switch (section) {
    case Section::Symbols: symbols_.insert(std::move(entry)); break;
    case Section::Identifiers: identifiers_.insert(std::move(entry)); break;
    case Section::Keywords: keywords_.insert(std::move(entry)); break;
  }
}

std::size_t SymbolTable::longest_match(std::string_view text,
                                       std::size_t offset) const {
  if (offset >= text.size() || by_length_.empty()) return 0;
  const std::size_t remaining = text.size() - offset;
  std::size_t len = std::min(remaining, by_length_.size() - 1);
  std::string probe;
  for (; len > 0; --len) {
    const auto& bucket = by_length_[len];
    if (bucket.empty()) continue;
    probe.assign(text.substr(offset, len));
    if (bucket.count(probe)) return len;
  }
  return 0;
}

bool SymbolTable::contains(std::string_view entry) const {
  return all_.count(std::string(entry)) > 0;
}

SymbolTable parse_symbol_table(std::istream& in) {
  SymbolTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_section = false;
  auto section = SymbolTable::Section::Symbols;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "#SYMBOLS") {
      section = SymbolTable::Section::Symbols;
      have_section = true;
      continue;
    }
    if (line == "#IDENTIFIERS") {
      section = SymbolTable::Section::Identifiers;
      have_section = true;
      continue;
    }
    if (line == "#KEYWORDS") {
      section = SymbolTable::Section::Keywords;
      have_section = true;
      continue;
    }
    if (!have_section) {
      throw Error(ErrorKind::InvalidSymbolTable,
                  "entry before any #SYMBOLS/#IDENTIFIERS/#KEYWORDS header",
                  line_no);
    }
    try {
      table.add(section, line);
    } catch (const Error& e) {
      throw e.at_line(line_no);
    }
  }
  return table;
}

SymbolTable load_symbol_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open symbol table '" + path + "'");
  return parse_symbol_table(in);
}

// ---------------------------------------------------------------------------
// Tokenizers

TokenSequence tokenize_mizar(std::string_view raw, const SymbolTable& table) {
  TokenSequence seq{{}, Language::Mizar};
  std::size_t pos = 0;
  while (pos < raw.size()) {
    if (is_space(raw[pos])) {
      ++pos;
      continue;
    }
    const std::size_t table_len = table.longest_match(raw, pos);
    std::size_t ident_len = 0;
    while (pos + ident_len < raw.size() && is_identifier_char(raw[pos + ident_len])) {
      ++ident_len;
    }
    // Maximal munch over table entries and identifier runs; table wins ties.
    const std::size_t len = table_len >= ident_len ? table_len : ident_len;
    if (len == 0) {
      const std::size_t width = utf8_length(static_cast<unsigned char>(raw[pos]));
      throw Error(ErrorKind::UnknownCharacter,
                  "unknown character '" + std::string(raw.substr(pos, width)) +
                      "'",
                  0, code_point_column(raw, pos));
    }
    seq.tokens.emplace_back(raw.substr(pos, len));
    pos += len;
  }
  return seq;
}

TokenSequence tokenize_latex(std::string_view raw) {
  TokenSequence seq{{}, Language::Latex};
  std::size_t pos = 0;
  while (pos < raw.size()) {
    const char c = raw[pos];
    if (is_space(c)) {
      ++pos;
    } else if (is_latex_delimiter(c)) {
      seq.tokens.emplace_back(1, c);
      ++pos;
    } else if (c == '\\') {
      std::size_t end = pos + 1;
      if (end < raw.size() && is_ascii_letter(raw[end])) {
        while (end < raw.size() && is_ascii_letter(raw[end])) ++end;
      } else if (end < raw.size() && !is_space(raw[end])) {
        end += utf8_length(static_cast<unsigned char>(raw[end]));
        end = std::min(end, raw.size());
      }
      seq.tokens.emplace_back(raw.substr(pos, end - pos));
      pos = end;
    } else {
      std::size_t end = pos;
      while (end < raw.size() && !is_space(raw[end]) &&
             !is_latex_delimiter(raw[end]) && raw[end] != '\\') {
        ++end;
      }
      seq.tokens.emplace_back(raw.substr(pos, end - pos));
      pos = end;
    }
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Markup stripping

namespace {

std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && is_space(s[i])) ++i;
  return i;
}

// Index one past the `}` matching the `{` at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;  // escaped character, including \{ and \}
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

// Skips an optional `[...]`; returns `i` unchanged when absent or unclosed.
std::size_t skip_optional(std::string_view s, std::size_t i) {
  const std::size_t j = skip_spaces(s, i);
  if (j >= s.size() || s[j] != '[') return i;
  const std::size_t close = s.find(']', j);
  return close == std::string_view::npos ? i : close + 1;
}

}  // namespace

std::string strip_markup(std::string_view raw, const MarkupBlacklist& blacklist) {
  std::string out;
  out.reserve(raw.size());
  std::size_t pos = 0;
  while (pos < raw.size()) {
    if (raw[pos] != '\\') {
      out.push_back(raw[pos++]);
      continue;
    }
    std::size_t name_end = pos + 1;
    while (name_end < raw.size() && is_ascii_letter(raw[name_end])) ++name_end;
    if (name_end == pos + 1) {
      // Control symbol such as \\ or \{: copy verbatim.
      const std::size_t end = std::min(raw.size(), pos + 2);
      out.append(raw.substr(pos, end - pos));
      pos = end;
      continue;
    }
    const std::string name(raw.substr(pos + 1, name_end - pos - 1));

    if (blacklist.with_argument.count(name)) {
      std::size_t i = skip_optional(raw, name_end);
      const std::size_t open = skip_spaces(raw, i);
      if (open < raw.size() && raw[open] == '{') {
        const std::size_t close = match_brace(raw, open);
        if (close == std::string_view::npos) {
          throw Error(ErrorKind::UnbalancedBraces,
                      "argument of \\" + name + " never closes", 0, open + 1);
        }
        i = close;
      }
      pos = i;
      continue;
    }
    if (blacklist.without_argument.count(name)) {
      pos = skip_optional(raw, name_end);
      continue;
    }
    if (name == "begin" || name == "end") {
      const std::size_t open = skip_spaces(raw, name_end);
      if (open < raw.size() && raw[open] == '{') {
        const std::size_t close = match_brace(raw, open);
        if (close == std::string_view::npos) {
          throw Error(ErrorKind::UnbalancedBraces,
                      "argument of \\" + name + " never closes", 0, open + 1);
        }
        const std::string env(raw.substr(open + 1, close - open - 2));
        if (blacklist.environments.count(env)) {
          pos = name == "begin" ? skip_optional(raw, close) : close;
          continue;
        }
      }
    }
    out.append(raw.substr(pos, name_end - pos));
    pos = name_end;
  }
  return out;
}

}  // namespace autoformal::lexing
