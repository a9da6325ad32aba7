#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "autoformal/attention.hpp"
#include "autoformal/cells.hpp"
#include "autoformal/hyperparams.hpp"
#include "autoformal/params.hpp"
#include "autoformal/rng.hpp"
#include "autoformal/tensor.hpp"

namespace autoformal {

/// One training pair as vocabulary ids. `tgt` carries neither `<s>` nor
/// `</s>`; the decoder reads `<s> tgt` and predicts `tgt </s>`.
struct Example {
  std::vector<int> src;
  std::vector<int> tgt;
};

struct EncoderOutput {
  Matrix annotations;  ///< d x S, one column per source token
  /// Initial decoder state, one entry per decoder layer. For a bidirectional
  /// encoder the forward and backward stacks interleave: decoder layer 2i
  /// starts from forward layer i, layer 2i+1 from backward layer i.
  std::vector<CellState> final_state;
};

/// Runs the encoder over one sentence (no dropout). Throws IdOutOfRange or
/// LengthExceeded.
EncoderOutput encode(const std::vector<int>& src_ids, const HyperParams& hp,
                     const ModelParams& params);

struct DecodeStepResult {
  Vector logits;  ///< |V_tgt|
  std::vector<CellState> state;
  Vector attention_weights;  ///< empty without attention
};

/// Feeds `prev_tgt_id` through the decoder stack and, when configured, the
/// attention layer; logits come from the attentional hidden state
/// tanh(W_c [context; h_top]) or from h_top without attention.
DecodeStepResult decode_step(int prev_tgt_id, const std::vector<CellState>& state,
                             const Matrix& annotations, const HyperParams& hp,
                             const ModelParams& params);

struct LossResult {
  double loss = 0.0;            ///< summed cross-entropy / batch size
  std::size_t token_count = 0;  ///< gold tokens including each `</s>`
};

/// Teacher-forced loss. Dropout is active iff `training` (and then draws its
/// masks from `dropout_rng`, which must be non-null when hp.dropout > 0).
/// Throws NonFiniteLoss.
LossResult forward_loss(std::span<const Example> batch, const HyperParams& hp,
                        const ModelParams& params, bool training,
                        SplitMix64* dropout_rng = nullptr);

/// forward_loss plus backpropagation; gradients are accumulated into `grads`,
/// which must be shaped like `params` (zeros_like()).
LossResult loss_and_gradient(std::span<const Example> batch, const HyperParams& hp,
                             const ModelParams& params, ModelParams& grads,
                             bool training, SplitMix64* dropout_rng = nullptr);

/// Natural-log probability of every gold token (target tokens, then `</s>`)
/// under teacher forcing without dropout, one list per example.
std::vector<std::vector<double>> gold_logprobs(std::span<const Example> batch,
                                               const HyperParams& hp,
                                               const ModelParams& params);

struct DecodeResult {
  std::vector<int> ids;                ///< without `</s>`
  std::vector<double> token_logprobs;  ///< one per id, plus `</s>` if emitted
  bool ended_by_eos = false;
};

/// Greedy decoding from `<s>`: argmax at every step (lowest id on ties) until
/// `</s>` or `max_len` tokens.
DecodeResult greedy_decode(const std::vector<int>& src_ids, const HyperParams& hp,
                           const ModelParams& params, int max_len);

}  // namespace autoformal
