#include "autoformal/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace autoformal::corpus {

namespace {

std::map<Position, std::size_t> index_by_position(
    const std::vector<TaggedFormula>& entries, std::string_view side) {
  std::map<Position, std::size_t> index;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& pos = entries[i].first;
    if (!index.emplace(pos, i).second) {
      throw Error(ErrorKind::DuplicatePosition,
                  std::string(side) + " side has two formulas at " +
                      std::to_string(pos.line) + ":" + std::to_string(pos.column),
                  static_cast<std::size_t>(pos.line),
                  static_cast<std::size_t>(pos.column));
    }
  }
  return index;
}

}  // namespace

AlignResult align_by_position(const std::vector<TaggedFormula>& tagged_latex,
                              const std::vector<TaggedFormula>& mizar_source,
                              const lexing::SymbolTable& table,
                              const lexing::MarkupBlacklist& blacklist) {
  const auto latex_index = index_by_position(tagged_latex, "latex");
  const auto mizar_index = index_by_position(mizar_source, "mizar");

  AlignResult result;
  std::size_t matched = 0;
  for (const auto& [pos, text] : tagged_latex) {
    const auto it = mizar_index.find(pos);
    if (it == mizar_index.end()) {
      ++result.dropped_latex;
      continue;
    }
    ++matched;
    SentencePair pair;
    pair.latex = lexing::tokenize_latex(lexing::strip_markup(text, blacklist));
    pair.mizar = lexing::tokenize_mizar(mizar_source[it->second].second, table);
    pair.position = pos;
    if (pair.latex.empty() || pair.mizar.empty()) {
      ++result.dropped_empty;
      continue;
    }
    result.pairs.push_back(std::move(pair));
  }
  result.dropped_mizar = mizar_source.size() - matched;
  return result;
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng(seed);
  rng.shuffle(perm);
  return perm;
}

CorpusSplit split_corpus(std::vector<SentencePair> pairs,
                         const SplitSizes& sizes, std::uint64_t seed) {
  return split_items(std::move(pairs), sizes, seed);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (auto s : kSpecials) add(std::string(s));
}

int Vocabulary::add(const std::string& token) {
  const auto [it, inserted] =
      index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::id_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorKind::IdOutOfRange,
                "token id " + std::to_string(id) + " outside vocabulary of size " +
                    std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<int> Vocabulary::encode(const TokenSequence& seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq.tokens) ids.push_back(id_of(t));
  return ids;
}

TokenSequence Vocabulary::decode(const std::vector<int>& ids,
                                 lexing::Language lang) const {
  TokenSequence seq{{}, lang};
  seq.tokens.reserve(ids.size());
  for (int id : ids) seq.tokens.push_back(token(id));
  return seq;
}

void Vocabulary::save(const std::string& path) const { write_lines(path, tokens_); }

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < kSpecials.size()) {
    throw Error(ErrorKind::InvalidVocabulary, "vocabulary lacks special tokens");
  }
  for (std::size_t i = 0; i < kSpecials.size(); ++i) {
    if (tokens[i] != kSpecials[i]) {
      throw Error(ErrorKind::InvalidVocabulary,
                  "expected special token " + std::string(kSpecials[i]) +
                      " at position " + std::to_string(i),
                  i + 1);
    }
  }
  Vocabulary v;
  for (std::size_t i = kSpecials.size(); i < tokens.size(); ++i) {
    if (tokens[i].empty() || v.contains(tokens[i])) {
      throw Error(ErrorKind::InvalidVocabulary,
                  "empty or duplicate vocabulary entry '" + tokens[i] + "'",
                  i + 1);
    }
    v.add(tokens[i]);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  return from_tokens(read_lines(path));
}

Vocabulary build_vocab(const std::vector<TokenSequence>& sentences) {
  Vocabulary v;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) v.add(t);
  }
  return v;
}

OverlapResult compute_overlap(const std::vector<SentencePair>& train,
                              const std::vector<SentencePair>& inference) {
  std::unordered_set<std::string> seen;
  seen.reserve(train.size());
  for (const auto& p : train) seen.insert(p.latex.joined());
  OverlapResult r;
  r.flags.reserve(inference.size());
  for (const auto& p : inference) {
    const bool hit = seen.count(p.latex.joined()) > 0;
    r.flags.push_back(hit);
    r.count += hit ? 1 : 0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Files

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

std::vector<TokenSequence> read_tokenized(const std::string& path,
                                          lexing::Language lang) {
  std::vector<TokenSequence> out;
  for (const auto& line : read_lines(path)) {
    out.push_back(lexing::split_tokens(line, lang));
  }
  return out;
}

void write_tokenized(const std::string& path,
                     const std::vector<TokenSequence>& sentences) {
  std::vector<std::string> lines;
  lines.reserve(sentences.size());
  for (const auto& s : sentences) lines.push_back(s.joined());
  write_lines(path, lines);
}

void write_corpus(const std::string& prefix, const std::vector<SentencePair>& pairs) {
  std::vector<std::string> latex, mizar, pos;
  bool any_pos = false;
  for (const auto& p : pairs) {
    latex.push_back(p.latex.joined());
    mizar.push_back(p.mizar.joined());
    if (p.position) {
      any_pos = true;
      pos.push_back(std::to_string(p.position->line) + " " +
                    std::to_string(p.position->column));
    } else {
      pos.emplace_back("0 0");
    }
  }
  write_lines(prefix + ".latex", latex);
  write_lines(prefix + ".mizar", mizar);
  if (any_pos) write_lines(prefix + ".pos", pos);
}

std::vector<SentencePair> read_corpus(const std::string& prefix) {
  const auto latex = read_tokenized(prefix + ".latex", lexing::Language::Latex);
  const auto mizar = read_tokenized(prefix + ".mizar", lexing::Language::Mizar);
  if (latex.size() != mizar.size()) {
    throw Error(ErrorKind::LengthMismatch,
                prefix + ".latex has " + std::to_string(latex.size()) +
                    " lines but " + prefix + ".mizar has " +
                    std::to_string(mizar.size()));
  }
  std::vector<std::string> pos;
  if (std::filesystem::exists(prefix + ".pos")) {
    pos = read_lines(prefix + ".pos");
    if (pos.size() != latex.size()) {
      throw Error(ErrorKind::LengthMismatch, prefix + ".pos is not line-aligned");
    }
  }
  std::vector<SentencePair> pairs(latex.size());
  for (std::size_t i = 0; i < latex.size(); ++i) {
    pairs[i].latex = latex[i];
    pairs[i].mizar = mizar[i];
    if (!pos.empty()) {
      std::istringstream ss(pos[i]);
      Position p;
      if (!(ss >> p.line >> p.column)) {
        throw Error(ErrorKind::Io, "malformed position line", i + 1);
      }
      if (p.line >= 1 && p.column >= 1) pairs[i].position = p;
    }
  }
  return pairs;
}

std::vector<TaggedFormula> read_tagged(const std::string& path) {
  std::vector<TaggedFormula> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::Io, "tagged line lacks a TAB after the position",
                  line_no);
    }
    std::istringstream ss(line.substr(0, tab));
    Position p;
    if (!(ss >> p.line >> p.column) || p.line < 1 || p.column < 1) {
      throw Error(ErrorKind::Io, "malformed position tag", line_no);
    }
    out.emplace_back(p, line.substr(tab + 1));
  }
  return out;
}

void write_flags(const std::string& path, const std::vector<bool>& flags) {
  std::vector<std::string> lines;
  lines.reserve(flags.size());
  for (bool f : flags) lines.emplace_back(f ? "1" : "0");
  write_lines(path, lines);
}

std::vector<bool> read_flags(const std::string& path) {
  std::vector<bool> flags;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line == "1") {
      flags.push_back(true);
    } else if (line == "0") {
      flags.push_back(false);
    } else {
      throw Error(ErrorKind::Io, "overlap flag must be 0 or 1", line_no);
    }
  }
  return flags;
}

}  // namespace autoformal::corpus
