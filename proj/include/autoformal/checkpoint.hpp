#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoformal/corpus.hpp"
#include "autoformal/hyperparams.hpp"
#include "autoformal/lexing.hpp"
#include "autoformal/model.hpp"
#include "autoformal/params.hpp"

namespace autoformal {

/// Everything needed to translate: configuration, both vocabularies, the
/// translation direction and the weights.
struct Model {
  HyperParams hp;
  corpus::Vocabulary src_vocab;
  corpus::Vocabulary tgt_vocab;
  lexing::Language src_language = lexing::Language::Latex;
  lexing::Language tgt_language = lexing::Language::Mizar;
  ModelParams params;
  std::int64_t step = 0;

  /// Greedy translation; unknown source tokens map to `<unk>` and sources
  /// longer than max_src_len are truncated.
  DecodeResult translate(const lexing::TokenSequence& source) const;
  lexing::TokenSequence translate_tokens(const lexing::TokenSequence& source) const;
};

/// Layout: the line "autoformal-checkpoint v1", a line holding the byte length
/// of a JSON header, the header, then every tensor of the header's list as
/// little-endian IEEE 754 doubles in column-major order.
void save_checkpoint(const std::string& path, const Model& model);
/// Throws InvalidCheckpoint on any structural problem and Io when unreadable.
Model load_checkpoint(const std::string& path);

}  // namespace autoformal
