#pragma once

#include <string>
#include <utility>
#include <vector>

#include "autoformal/corpus.hpp"
#include "autoformal/lexing.hpp"

namespace autoformal::testing {

// 48 relations between two distinct variables and 16 implications.
inline std::vector<std::pair<std::string, std::string>> toy_raw_pairs() {
  const std::vector<std::pair<std::string, std::string>> relations = {
      {"\\subseteq", "c="}, {"\\in", "in"}, {"=", "="}, {"\\neq", "<>"}};
  const std::vector<std::string> vars = {"X", "Y", "Z", "A"};
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [latex, mizar] : relations) {
    for (const auto& a : vars) {
      for (const auto& b : vars) {
        if (a == b) continue;
        out.emplace_back("$ " + a + " " + latex + " " + b + " $ .", a + " " + mizar + " " + b + " ;");
      }
    }
  }
  for (const auto& [latex, mizar] : relations) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto& a = vars[i];
      const auto& b = vars[(i + 1) % vars.size()];
      out.emplace_back("If $ " + a + " " + latex + " " + b + " $ , then $ " + b + " " + latex +
                           " " + a + " $ .",
                       a + " " + mizar + " " + b + " implies " + b + " " + mizar + " " + a + " ;");
    }
  }
  return out;
}

inline std::vector<corpus::SentencePair> toy_pairs() {
  std::vector<corpus::SentencePair> out;
  for (const auto& [latex, mizar] : toy_raw_pairs()) {
    out.push_back({lexing::tokenize_latex(latex), lexing::split_tokens(mizar, lexing::Language::Mizar),
                   std::nullopt});
  }
  return out;
}

}  // namespace autoformal::testing
