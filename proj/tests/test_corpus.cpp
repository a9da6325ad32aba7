#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include "autoformal/corpus.hpp"
#include "autoformal/error.hpp"
#include "sample_statements.hpp"

using namespace autoformal;
using namespace autoformal::corpus;
using lexing::Language;

namespace {

lexing::SymbolTable shipped_table() {
  return lexing::load_symbol_table(std::string(AUTOFORMAL_DATA_DIR) + "/mizar_symbols.txt");
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("autoformal_corpus_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

SentencePair pair_of(const std::string& latex, const std::string& mizar) {
  return {lexing::split_tokens(latex, Language::Latex), lexing::split_tokens(mizar, Language::Mizar),
          std::nullopt};
}

}  // namespace

TEST(Align, PairsByPositionInLatexOrder) {
  const std::vector<TaggedFormula> latex = {
      {{12, 3}, autoformal::testing::kBhspLatex},
      {{5, 1}, autoformal::testing::kXbooleLatex},
      {{7, 2}, "$x$"},
  };
  const std::vector<TaggedFormula> mizar = {
      {{5, 1}, autoformal::testing::kXbooleMizar},
      {{12, 3}, autoformal::testing::kBhspMizar},
      {{9, 9}, "x;"},
  };
  const auto result = align_by_position(latex, mizar, shipped_table());
  ASSERT_EQ(result.pairs.size(), 2u);
  EXPECT_EQ(result.pairs[0].latex.joined(), autoformal::testing::kBhspLatexTokens);
  EXPECT_EQ(result.pairs[0].mizar.joined(), autoformal::testing::kBhspMizarTokens);
  EXPECT_EQ(result.pairs[1].position, (Position{5, 1}));
  EXPECT_EQ(result.dropped_latex, 1u);
  EXPECT_EQ(result.dropped_mizar, 1u);
}

TEST(Align, StripsMarkupAndDropsEmptySides) {
  const std::vector<TaggedFormula> latex = {{{1, 1}, "$X$\\label{t1}"}, {{2, 1}, "\\label{x}"}};
  const std::vector<TaggedFormula> mizar = {{{1, 1}, "X;"}, {{2, 1}, "X;"}};
  const auto result = align_by_position(latex, mizar, shipped_table());
  ASSERT_EQ(result.pairs.size(), 1u);
  EXPECT_EQ(result.pairs[0].latex.joined(), "$ X $");
  EXPECT_EQ(result.dropped_empty, 1u);
}

TEST(Align, DuplicatePositionIsAnError) {
  const std::vector<TaggedFormula> latex = {{{1, 1}, "$a$"}, {{1, 1}, "$b$"}};
  try {
    align_by_position(latex, {}, shipped_table());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DuplicatePosition);
  }
}

TEST(Split, ProducesRequestedSizesAndAPartition) {
  std::vector<int> items(1000);
  for (int i = 0; i < 1000; ++i) items[static_cast<std::size_t>(i)] = i;
  const auto split = split_items(items, {900, 30, 30, 40}, 3);
  EXPECT_EQ(split.train.size(), 900u);
  EXPECT_EQ(split.dev.size(), 30u);
  EXPECT_EQ(split.test.size(), 30u);
  EXPECT_EQ(split.inference.size(), 40u);
  std::vector<int> all;
  for (const auto* part : {&split.train, &split.dev, &split.test, &split.inference}) {
    all.insert(all.end(), part->begin(), part->end());
  }
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, items);
}

TEST(Split, DeterministicPerSeedAndSeedSensitive) {
  std::vector<int> items(200);
  for (int i = 0; i < 200; ++i) items[static_cast<std::size_t>(i)] = i;
  const SplitSizes sizes{150, 10, 10, 30};
  EXPECT_EQ(split_items(items, sizes, 1).train, split_items(items, sizes, 1).train);
  EXPECT_NE(split_items(items, sizes, 1).train, split_items(items, sizes, 2).train);
}

TEST(Split, SizeMismatchIsAnError) {
  try {
    split_items(std::vector<int>(10), {5, 1, 1, 1}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SizeMismatch);
  }
}

TEST(Split, PermutationIsABijection) {
  const auto perm = split_permutation(5000, 42);
  std::vector<bool> seen(perm.size());
  for (auto p : perm) {
    ASSERT_LT(p, perm.size());
    EXPECT_FALSE(seen[p]);
    seen[p] = true;
  }
}

TEST(VocabularyTest, SpecialsFirstThenFirstOccurrence) {
  const auto v = build_vocab({lexing::split_tokens("b a b", Language::Mizar),
                              lexing::split_tokens("c a", Language::Mizar)});
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<unk>", "<s>", "</s>", "b", "a", "c"}));
  EXPECT_EQ(v.id_of("c"), 5);
  EXPECT_EQ(v.id_of("zzz"), Vocabulary::kUnk);
}

TEST(VocabularyTest, EncodeDecodeRoundTrip) {
  const auto seq = lexing::split_tokens("X c= Y ;", Language::Mizar);
  const auto v = build_vocab({seq});
  EXPECT_EQ(v.decode(v.encode(seq), Language::Mizar), seq);
  EXPECT_EQ(v.encode(lexing::split_tokens("X in Y", Language::Mizar)),
            (std::vector<int>{3, Vocabulary::kUnk, 5}));
}

TEST(VocabularyTest, TokenOutOfRangeThrows) {
  Vocabulary v;
  try {
    (void)v.token(3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IdOutOfRange);
  }
  EXPECT_THROW((void)v.token(-1), Error);
}

TEST(VocabularyTest, SaveLoadRoundTripAndValidation) {
  const auto dir = scratch_dir("vocab");
  const auto v = build_vocab({lexing::split_tokens("p q r", Language::Latex)});
  v.save((dir / "v.txt").string());
  EXPECT_EQ(Vocabulary::load((dir / "v.txt").string()), v);
  EXPECT_THROW(Vocabulary::from_tokens({"a", "b"}), Error);
  EXPECT_THROW(Vocabulary::from_tokens({"<unk>", "<s>", "</s>", "a", "a"}), Error);
}

TEST(Overlap, FlagsInferenceItemsSeenInTraining) {
  const std::vector<SentencePair> train = {pair_of("$ x $", "x ;"), pair_of("$ y $", "y ;")};
  const std::vector<SentencePair> inference = {pair_of("$ y $", "other ;"), pair_of("$ z $", "z ;"),
                                               pair_of("$ x $", "x ;")};
  const auto overlap = compute_overlap(train, inference);
  EXPECT_EQ(overlap.count, 2u);
  EXPECT_EQ(overlap.flags, (std::vector<bool>{true, false, true}));
}

TEST(Files, CorpusRoundTripWithPositions) {
  const auto dir = scratch_dir("files");
  std::vector<SentencePair> pairs = {pair_of("$ x $", "x ;"), pair_of("If $ a $ .", "a ;")};
  pairs[0].position = Position{3, 4};
  write_corpus((dir / "train").string(), pairs);
  const auto back = read_corpus((dir / "train").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], pairs[0]);
  EXPECT_EQ(back[1].latex, pairs[1].latex);
  EXPECT_FALSE(back[1].position.has_value());
}

TEST(Files, CorpusWithoutPositions) {
  const auto dir = scratch_dir("nopos");
  const std::vector<SentencePair> pairs = {pair_of("$ x $", "x ;")};
  write_corpus((dir / "c").string(), pairs);
  EXPECT_EQ(read_corpus((dir / "c").string()), pairs);
}

TEST(Files, TaggedFormulasAndFlags) {
  const auto dir = scratch_dir("tagged");
  write_lines((dir / "t.txt").string(), {"1 2\t$x$ and $y$", "10 1\tX c= Y;"});
  const auto tagged = read_tagged((dir / "t.txt").string());
  ASSERT_EQ(tagged.size(), 2u);
  EXPECT_EQ(tagged[0].first, (Position{1, 2}));
  EXPECT_EQ(tagged[0].second, "$x$ and $y$");
  write_flags((dir / "f.txt").string(), {true, false, true});
  EXPECT_EQ(read_flags((dir / "f.txt").string()), (std::vector<bool>{true, false, true}));
}

TEST(Files, MissingFileIsIoError) {
  try {
    read_lines("/nonexistent/file.txt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Files, MismatchedCorpusSidesAreRejected) {
  const auto dir = scratch_dir("mismatch");
  write_lines((dir / "c.latex").string(), {"a", "b"});
  write_lines((dir / "c.mizar").string(), {"a"});
  EXPECT_THROW(read_corpus((dir / "c").string()), Error);
}
