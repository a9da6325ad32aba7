#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace autoformal::lexing {

enum class Language : std::uint8_t { Latex, Mizar };

std::string_view to_string(Language lang) noexcept;
Language parse_language(std::string_view name);

struct TokenSequence {
  std::vector<std::string> tokens;
  Language language = Language::Latex;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  /// Canonical tokenized form: tokens joined by single spaces.
  std::string joined() const;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// Splits a canonical (already tokenized) line on ASCII spaces and tabs.
TokenSequence split_tokens(std::string_view line, Language lang);

/// Symbols, identifiers and reserved words of one Mizar article (or a merged
/// environment). Entries are non-empty and whitespace-free.
class SymbolTable {
 public:
  enum class Section : std::uint8_t { Symbols, Identifiers, Keywords };

  void add(Section section, std::string entry);

  /// Length in bytes of the longest entry of any section that starts at
  /// `offset`, or 0 when none does.
  std::size_t longest_match(std::string_view text, std::size_t offset) const;

  bool contains(std::string_view entry) const;
  std::size_t size() const noexcept { return all_.size(); }

  const std::set<std::string>& symbols() const noexcept { return symbols_; }
  const std::set<std::string>& identifiers() const noexcept { return identifiers_; }
  const std::set<std::string>& keywords() const noexcept { return keywords_; }

 private:
  std::set<std::string> symbols_;
  std::set<std::string> identifiers_;
  std::set<std::string> keywords_;
  // All entries bucketed by byte length for longest-match probing.
  std::vector<std::unordered_set<std::string>> by_length_;
  std::unordered_set<std::string> all_;
};

/// Reads the `#SYMBOLS` / `#IDENTIFIERS` / `#KEYWORDS` sectioned format.
/// Blank lines are skipped.
SymbolTable parse_symbol_table(std::istream& in);
SymbolTable load_symbol_table(const std::string& path);

/// Longest-match segmentation of one Mizar statement. Throws
/// Error{UnknownCharacter} with a 1-based code-point column.
TokenSequence tokenize_mizar(std::string_view raw, const SymbolTable& table);

TokenSequence tokenize_latex(std::string_view raw);

/// Commands removed by strip_markup.
struct MarkupBlacklist {
  /// Commands removed together with an optional `[...]` and one `{...}`.
  std::set<std::string> with_argument{"label", "ref", "eqref", "pageref", "cite"};
  /// Commands removed together with an optional `[...]`.
  std::set<std::string> without_argument{"item", "noindent", "newline",
                                         "hfill", "smallskip", "medskip",
                                         "bigskip"};
  /// `\begin{env}` / `\end{env}` wrappers removed, content kept.
  std::set<std::string> environments{"itemize", "enumerate", "description"};
};

/// Deletes cross-referencing and layout markup. Throws
/// Error{UnbalancedBraces} (column = byte offset + 1 of the opening brace)
/// when a stripped command's argument never closes.
std::string strip_markup(std::string_view raw,
                         const MarkupBlacklist& blacklist = MarkupBlacklist{});

}  // namespace autoformal::lexing
