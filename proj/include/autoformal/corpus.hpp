#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "autoformal/error.hpp"
#include "autoformal/lexing.hpp"
#include "autoformal/rng.hpp"

namespace autoformal::corpus {

using lexing::TokenSequence;

struct Position {
  int line = 1;
  int column = 1;

  friend auto operator<=>(const Position&, const Position&) = default;
};

struct SentencePair {
  TokenSequence latex;
  TokenSequence mizar;
  std::optional<Position> position;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

using TaggedFormula = std::pair<Position, std::string>;

struct AlignResult {
  std::vector<SentencePair> pairs;
  std::size_t dropped_latex = 0;  ///< LaTeX formulas with no Mizar partner
  std::size_t dropped_mizar = 0;  ///< Mizar formulas with no LaTeX partner
  std::size_t dropped_empty = 0;  ///< matched, but a side tokenized to nothing
};

/// Pairs formulas whose (line, column) tags coincide, in LaTeX-list order.
/// The LaTeX side goes through strip_markup before tokenizing.
AlignResult align_by_position(const std::vector<TaggedFormula>& tagged_latex,
                              const std::vector<TaggedFormula>& mizar_source,
                              const lexing::SymbolTable& table,
                              const lexing::MarkupBlacklist& blacklist = {});

struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t inference = 0;

  std::size_t total() const noexcept { return train + dev + test + inference; }
};

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
  std::vector<T> inference;
  std::uint64_t seed = 0;
};

using CorpusSplit = Split<SentencePair>;

/// The permutation used by split_corpus: identity shuffled by SplitMix64(seed)
/// with Fisher-Yates.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

template <class T>
Split<T> split_items(std::vector<T> items, const SplitSizes& sizes,
                     std::uint64_t seed) {
  if (sizes.total() != items.size()) {
    throw Error(ErrorKind::SizeMismatch,
                "split sizes sum to " + std::to_string(sizes.total()) +
                    " but corpus has " + std::to_string(items.size()) +
                    " pairs");
  }
  const auto perm = split_permutation(items.size(), seed);
  Split<T> out;
  out.seed = seed;
  std::size_t k = 0;
  auto take = [&](std::vector<T>& part, std::size_t n) {
    part.reserve(n);
    for (std::size_t i = 0; i < n; ++i) part.push_back(std::move(items[perm[k++]]));
  };
  take(out.train, sizes.train);
  take(out.dev, sizes.dev);
  take(out.test, sizes.test);
  take(out.inference, sizes.inference);
  return out;
}

CorpusSplit split_corpus(std::vector<SentencePair> pairs,
                         const SplitSizes& sizes, std::uint64_t seed);

/// Token <-> id map with `<unk>`, `<s>`, `</s>` at ids 0, 1, 2.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr std::array<std::string_view, 3> kSpecials{"<unk>", "<s>",
                                                             "</s>"};

  Vocabulary();

  /// Appends `token` unless already present; returns its id.
  int add(const std::string& token);

  int id_of(std::string_view token) const;  ///< kUnk when absent
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<int> encode(const TokenSequence& seq) const;
  TokenSequence decode(const std::vector<int>& ids, lexing::Language lang) const;

  /// One token per line, specials first.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Specials followed by unique tokens in first-occurrence order.
Vocabulary build_vocab(const std::vector<TokenSequence>& sentences);

struct OverlapResult {
  std::size_t count = 0;
  std::vector<bool> flags;
};

/// flags[i] is set iff inference[i]'s joined LaTeX side equals the LaTeX side
/// of some training pair. Mizar sides are ignored.
OverlapResult compute_overlap(const std::vector<SentencePair>& train,
                              const std::vector<SentencePair>& inference);

// ---------------------------------------------------------------------------
// On-disk formats

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

std::vector<TokenSequence> read_tokenized(const std::string& path,
                                          lexing::Language lang);
void write_tokenized(const std::string& path,
                     const std::vector<TokenSequence>& sentences);

/// `<prefix>.latex`, `<prefix>.mizar` and, if any pair carries a position,
/// `<prefix>.pos` with lines `L C`.
void write_corpus(const std::string& prefix, const std::vector<SentencePair>& pairs);
std::vector<SentencePair> read_corpus(const std::string& prefix);

/// Position-tagged raw formulas: one per line, `<line> <column><TAB><text>`.
std::vector<TaggedFormula> read_tagged(const std::string& path);

void write_flags(const std::string& path, const std::vector<bool>& flags);
std::vector<bool> read_flags(const std::string& path);

}  // namespace autoformal::corpus
