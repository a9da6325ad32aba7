#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "autoformal/lexing.hpp"

namespace autoformal::evaluation {

using lexing::TokenSequence;

/// exp(-sum(logprobs) / token count). Throws EmptyEvalSet without tokens.
double perplexity(const std::vector<std::vector<double>>& sentence_logprobs);

/// Corpus BLEU-4 in [0, 100], unsmoothed. Orders without any candidate n-gram
/// are left out of the geometric mean; a remaining order with no match gives
/// 0. Throws LengthMismatch.
double bleu(const std::vector<TokenSequence>& hypotheses,
            const std::vector<TokenSequence>& references);

/// Percentages are 0 when the denominator is 0.
struct Rate {
  std::size_t count = 0;
  std::size_t denominator = 0;
  double percent = 0.0;
};

Rate make_rate(std::size_t count, std::size_t denominator);

struct ExactMatch {
  Rate total;
  Rate no_overlap;  ///< restricted to items whose overlap flag is false
};

/// Token-sequence equality. `overlap_flags` may be empty (no item overlaps).
ExactMatch exact_match(const std::vector<TokenSequence>& hypotheses,
                       const std::vector<TokenSequence>& references,
                       const std::vector<bool>& overlap_flags);

/// Token-level Levenshtein distance.
std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b);
std::size_t edit_distance(const TokenSequence& a, const TokenSequence& b);

struct Bucket {
  double percent_total = 0.0;
  double percent_no_overlap = 0.0;
};

/// For each k the share of items within distance k of the reference; the
/// per-item distance is the minimum over the supplied models.
std::map<int, Bucket> distance_buckets(
    const std::vector<std::vector<TokenSequence>>& hypotheses_per_model,
    const std::vector<TokenSequence>& references, const std::vector<bool>& overlap_flags,
    const std::vector<int>& ks = {0, 1, 2, 3});
std::map<int, Bucket> distance_buckets(const std::vector<TokenSequence>& hypotheses,
                                       const std::vector<TokenSequence>& references,
                                       const std::vector<bool>& overlap_flags,
                                       const std::vector<int>& ks = {0, 1, 2, 3});

/// Indices of the items a model translates exactly.
std::set<std::size_t> correct_set(const std::vector<TokenSequence>& hypotheses,
                                  const std::vector<TokenSequence>& references);

using CorrectSets = std::map<std::string, std::set<std::size_t>>;

struct CoverResult {
  std::vector<std::string> chosen_models;
  std::set<std::size_t> covered;
  std::vector<std::size_t> marginal_gains;  ///< all positive
};

/// Up to n models, each maximizing the number of newly covered items; ties go
/// to the smallest id. Stops early once no model adds anything.
CoverResult greedy_cover(const CorrectSets& correct_sets, std::size_t n);

struct UnionCover {
  Rate total;
  Rate no_overlap;
};

UnionCover union_cover(const CorrectSets& correct_sets, std::size_t item_count,
                       const std::vector<bool>& overlap_flags);

struct EvalReport {
  std::string model_id;
  std::string hyperparams;             ///< HyperParams::to_text(), may be empty
  std::optional<double> perplexity;    ///< absent without a model
  double bleu = 0.0;
  ExactMatch identical;
  std::map<int, Bucket> distance_buckets;
};

EvalReport evaluate(const std::vector<TokenSequence>& hypotheses,
                    const std::vector<TokenSequence>& references,
                    const std::vector<bool>& overlap_flags);

/// Two decimals, as in "65.73".
std::string format_percent(double percent);

/// `key=value` lines in a fixed order.
std::string format_report(const EvalReport& report);

/// Header and row of the tabular summary: model, perplexity, BLEU, identical
/// statements (total, no-overlap) and the distance buckets.
std::string format_table_header();
std::string format_table_row(const EvalReport& report);

/// `key=value` lines describing a cover, including the running coverage.
std::string format_cover(const CoverResult& cover, const UnionCover& all,
                         std::size_t item_count, const std::vector<bool>& overlap_flags);

}  // namespace autoformal::evaluation
