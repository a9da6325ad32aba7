#include "autoformal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "autoformal/error.hpp"

namespace autoformal::evaluation {
namespace {

constexpr int kMaxOrder = 4;

void require_same_length(std::size_t hyps, std::size_t refs) {
  if (hyps != refs) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(hyps) + " hypotheses but " +
                                               std::to_string(refs) + " references");
  }
}

bool overlaps(const std::vector<bool>& flags, std::size_t i) {
  return !flags.empty() && flags[i];
}

void require_flags(const std::vector<bool>& flags, std::size_t items) {
  if (!flags.empty() && flags.size() != items) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(flags.size()) +
                                               " overlap flags for " + std::to_string(items) +
                                               " items");
  }
}

std::size_t non_overlap_count(const std::vector<bool>& flags, std::size_t items) {
  if (flags.empty()) return items;
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), false));
}

// n-grams joined with a separator that cannot occur inside a token.
std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                          int n) {
  std::unordered_map<std::string, std::size_t> counts;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    std::string key = tokens[static_cast<std::size_t>(i)];
    for (int j = 1; j < n; ++j) {
      key += '\n';
      key += tokens[static_cast<std::size_t>(i + j)];
    }
    ++counts[key];
  }
  return counts;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

double perplexity(const std::vector<std::vector<double>>& sentence_logprobs) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& sentence : sentence_logprobs) {
    for (double lp : sentence) sum += lp;
    count += sentence.size();
  }
  if (count == 0) throw Error(ErrorKind::EmptyEvalSet, "perplexity of an empty token set");
  return std::exp(-sum / static_cast<double>(count));
}

double bleu(const std::vector<TokenSequence>& hypotheses,
            const std::vector<TokenSequence>& references) {
  require_same_length(hypotheses.size(), references.size());
  std::size_t matches[kMaxOrder] = {};
  std::size_t candidates[kMaxOrder] = {};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s].tokens;
    const auto& ref = references[s].tokens;
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto hyp_counts = ngram_counts(hyp, n);
      const auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        candidates[n - 1] += count;
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;
  double log_sum = 0.0;
  int orders = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (candidates[n] == 0) continue;
    if (matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matches[n]) / static_cast<double>(candidates[n]));
    ++orders;
  }
  const double precision = std::exp(log_sum / orders);
  const double bp = hyp_len < ref_len
                        ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len))
                        : 1.0;
  return 100.0 * bp * precision;
}

Rate make_rate(std::size_t count, std::size_t denominator) {
  Rate r{count, denominator, 0.0};
  if (denominator > 0) r.percent = 100.0 * static_cast<double>(count) / static_cast<double>(denominator);
  return r;
}

ExactMatch exact_match(const std::vector<TokenSequence>& hypotheses,
                       const std::vector<TokenSequence>& references,
                       const std::vector<bool>& overlap_flags) {
  require_same_length(hypotheses.size(), references.size());
  require_flags(overlap_flags, references.size());
  std::size_t total = 0;
  std::size_t fresh = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (hypotheses[i].tokens != references[i].tokens) continue;
    ++total;
    if (!overlaps(overlap_flags, i)) ++fresh;
  }
  return {make_rate(total, references.size()),
          make_rate(fresh, non_overlap_count(overlap_flags, references.size()))};
}

std::size_t edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t edit_distance(const TokenSequence& a, const TokenSequence& b) {
  return edit_distance(std::span<const std::string>(a.tokens), std::span<const std::string>(b.tokens));
}

std::map<int, Bucket> distance_buckets(
    const std::vector<std::vector<TokenSequence>>& hypotheses_per_model,
    const std::vector<TokenSequence>& references, const std::vector<bool>& overlap_flags,
    const std::vector<int>& ks) {
  require_flags(overlap_flags, references.size());
  std::vector<std::size_t> best(references.size(), std::numeric_limits<std::size_t>::max());
  for (const auto& hyps : hypotheses_per_model) {
    require_same_length(hyps.size(), references.size());
    for (std::size_t i = 0; i < references.size(); ++i) {
      best[i] = std::min(best[i], edit_distance(hyps[i], references[i]));
    }
  }
  const std::size_t fresh_total = non_overlap_count(overlap_flags, references.size());
  std::map<int, Bucket> out;
  for (int k : ks) {
    std::size_t within = 0;
    std::size_t fresh_within = 0;
    for (std::size_t i = 0; i < references.size(); ++i) {
      if (k < 0 || best[i] > static_cast<std::size_t>(k)) continue;
      ++within;
      if (!overlaps(overlap_flags, i)) ++fresh_within;
    }
    out[k] = {make_rate(within, references.size()).percent,
              make_rate(fresh_within, fresh_total).percent};
  }
  return out;
}

std::map<int, Bucket> distance_buckets(const std::vector<TokenSequence>& hypotheses,
                                       const std::vector<TokenSequence>& references,
                                       const std::vector<bool>& overlap_flags,
                                       const std::vector<int>& ks) {
  return distance_buckets(std::vector<std::vector<TokenSequence>>{hypotheses}, references,
                          overlap_flags, ks);
}

std::set<std::size_t> correct_set(const std::vector<TokenSequence>& hypotheses,
                                  const std::vector<TokenSequence>& references) {
  require_same_length(hypotheses.size(), references.size());
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < references.size(); ++i) {
    if (hypotheses[i].tokens == references[i].tokens) out.insert(i);
  }
  return out;
}

CoverResult greedy_cover(const CorrectSets& correct_sets, std::size_t n) {
  CoverResult result;
  std::set<std::string> used;
  while (result.chosen_models.size() < n) {
    const std::string* best = nullptr;
    std::size_t best_gain = 0;
    for (const auto& [id, items] : correct_sets) {
      if (used.count(id)) continue;
      std::size_t gain = 0;
      for (std::size_t i : items) gain += result.covered.count(i) ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = &id;
      }
    }
    if (best == nullptr) break;
    used.insert(*best);
    result.chosen_models.push_back(*best);
    result.marginal_gains.push_back(best_gain);
    const auto& items = correct_sets.at(*best);
    result.covered.insert(items.begin(), items.end());
  }
  return result;
}

UnionCover union_cover(const CorrectSets& correct_sets, std::size_t item_count,
                       const std::vector<bool>& overlap_flags) {
  require_flags(overlap_flags, item_count);
  std::set<std::size_t> all;
  for (const auto& [id, items] : correct_sets) all.insert(items.begin(), items.end());
  std::size_t fresh = 0;
  for (std::size_t i : all) {
    if (i < item_count && !overlaps(overlap_flags, i)) ++fresh;
  }
  return {make_rate(all.size(), item_count),
          make_rate(fresh, non_overlap_count(overlap_flags, item_count))};
}

EvalReport evaluate(const std::vector<TokenSequence>& hypotheses,
                    const std::vector<TokenSequence>& references,
                    const std::vector<bool>& overlap_flags) {
  if (references.empty()) throw Error(ErrorKind::EmptyEvalSet, "no references to evaluate");
  EvalReport report;
  report.bleu = bleu(hypotheses, references);
  report.identical = exact_match(hypotheses, references, overlap_flags);
  report.distance_buckets = distance_buckets(hypotheses, references, overlap_flags);
  return report;
}

std::string format_percent(double percent) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", percent);
  return buf;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "model_id=" << r.model_id << '\n';
  out << "perplexity=" << (r.perplexity ? format_double(*r.perplexity) : "NA") << '\n';
  out << "bleu=" << format_percent(r.bleu) << '\n';
  out << "identical_total_count=" << r.identical.total.count << '\n';
  out << "identical_total_denominator=" << r.identical.total.denominator << '\n';
  out << "identical_total_percent=" << format_percent(r.identical.total.percent) << '\n';
  out << "identical_no_overlap_count=" << r.identical.no_overlap.count << '\n';
  out << "identical_no_overlap_denominator=" << r.identical.no_overlap.denominator << '\n';
  out << "identical_no_overlap_percent=" << format_percent(r.identical.no_overlap.percent) << '\n';
  for (const auto& [k, b] : r.distance_buckets) {
    out << "distance_le_" << k << "_percent_total=" << format_percent(b.percent_total) << '\n';
    out << "distance_le_" << k << "_percent_no_overlap=" << format_percent(b.percent_no_overlap)
        << '\n';
  }
  std::istringstream hp(r.hyperparams);
  for (std::string line; std::getline(hp, line);) {
    if (!line.empty()) out << "hp." << line << '\n';
  }
  return out.str();
}

std::string format_table_header() {
  return "model\tperplexity\tbleu\tidentical_total\tidentical_no_overlap\t0\t<=1\t<=2\t<=3";
}

std::string format_table_row(const EvalReport& r) {
  std::ostringstream out;
  out << r.model_id << '\t' << (r.perplexity ? format_percent(*r.perplexity) : "NA") << '\t'
      << format_percent(r.bleu) << '\t' << r.identical.total.count << " ("
      << format_percent(r.identical.total.percent) << "%)\t" << r.identical.no_overlap.count
      << " (" << format_percent(r.identical.no_overlap.percent) << "%)";
  for (int k = 0; k <= 3; ++k) {
    const auto it = r.distance_buckets.find(k);
    out << '\t';
    if (it == r.distance_buckets.end()) {
      out << "NA";
    } else {
      out << format_percent(it->second.percent_total) << "% / "
          << format_percent(it->second.percent_no_overlap) << '%';
    }
  }
  return out.str();
}

std::string format_cover(const CoverResult& cover, const UnionCover& all,
                         std::size_t item_count, const std::vector<bool>& overlap_flags) {
  std::ostringstream out;
  std::set<std::size_t> running;
  std::size_t fresh_total = non_overlap_count(overlap_flags, item_count);
  for (std::size_t r = 0; r < cover.chosen_models.size(); ++r) {
    out << "rank_" << (r + 1) << "_model=" << cover.chosen_models[r] << '\n';
    out << "rank_" << (r + 1) << "_gain=" << cover.marginal_gains[r] << '\n';
  }
  std::size_t fresh = 0;
  for (std::size_t i : cover.covered) {
    if (i < item_count && !overlaps(overlap_flags, i)) ++fresh;
  }
  out << "chosen_count=" << cover.chosen_models.size() << '\n';
  out << "covered_count=" << cover.covered.size() << '\n';
  out << "covered_percent_total=" << format_percent(make_rate(cover.covered.size(), item_count).percent)
      << '\n';
  out << "covered_percent_no_overlap=" << format_percent(make_rate(fresh, fresh_total).percent)
      << '\n';
  out << "union_count=" << all.total.count << '\n';
  out << "union_percent_total=" << format_percent(all.total.percent) << '\n';
  out << "union_percent_no_overlap=" << format_percent(all.no_overlap.percent) << '\n';
  return out.str();
}

}  // namespace autoformal::evaluation
