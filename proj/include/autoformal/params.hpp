#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "autoformal/corpus.hpp"
#include "autoformal/hyperparams.hpp"
#include "autoformal/tensor.hpp"

namespace autoformal {

/// Weights of one recurrent cell. Which members are populated depends on the
/// unit type; unused members stay empty (0x0).
///
///   LSTM           w: 4d x 2d (gate rows i, f, g, o), b: 4d x 1
///   GRU            w: 2d x 2d (gate rows z, r), b: 2d x 1,
///                  w_cand: d x 2d, b_cand: d x 1
///   LayerNormLSTM  w: 4d x 2d, gain: 4d x 1, shift: 4d x 1
///
/// The 2d columns are [input; previous hidden].
struct CellWeights {
  Matrix w;
  Matrix b;
  Matrix w_cand;
  Matrix b_cand;
  Matrix gain;
  Matrix shift;
};

/// Attention parameters; populated per variant.
///
///   Luong           score (W_a, d x d), combine
///   ScaledLuong     score, scale (1 x 1), combine
///   Bahdanau        query (W_q), key (W_k), v (d x 1), combine
///   NormedBahdanau  query, key, v, bias (d x 1), scale (1 x 1), combine
///
/// combine is W_c (d x 2d) producing the attentional hidden state
/// tanh(W_c [context; h_top]).
struct AttentionWeights {
  Matrix score;
  Matrix scale;
  Matrix query;
  Matrix key;
  Matrix v;
  Matrix bias;
  Matrix combine;
};

struct NamedTensor {
  std::string name;
  Matrix* value;
};

struct ConstNamedTensor {
  std::string name;
  const Matrix* value;
};

struct ModelParams {
  Matrix src_embedding;  ///< |V_src| x d
  Matrix tgt_embedding;  ///< |V_tgt| x d
  /// Unidirectional: num_layers cells. Bidirectional: num_layers/2 forward
  /// cells followed by num_layers/2 backward cells.
  std::vector<CellWeights> encoder_cells;
  std::vector<CellWeights> decoder_cells;
  Matrix bridge;  ///< bidirectional only: d x 2d, projects [fw; bw] to d
  AttentionWeights attention;
  Matrix output_projection;  ///< d x |V_tgt|

  /// Every populated tensor in a fixed canonical order.
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;

  /// Same structure, all entries zero.
  ModelParams zeros_like() const;
  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Allocates every tensor for (hp, |V_src|, |V_tgt|) and fills it:
/// uniform [-0.1, 0.1] from SplitMix64(hp.seed) in canonical order, then
/// LSTM forget-gate biases (LayerNormLSTM: forget-gate shifts) set to
/// hp.forget_bias, layer-norm gains 1 and other shifts 0, the ScaledLuong
/// scale 1, and the NormedBahdanau scale sqrt(1/d) with zero bias.
ModelParams init_params(const HyperParams& hp, std::size_t src_vocab_size,
                        std::size_t tgt_vocab_size);
ModelParams init_params(const HyperParams& hp, const corpus::Vocabulary& src,
                        const corpus::Vocabulary& tgt);

/// Number of gate blocks stacked in CellWeights::w.
int gate_count(UnitType type) noexcept;

}  // namespace autoformal
