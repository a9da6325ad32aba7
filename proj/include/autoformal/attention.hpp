#pragma once

#include "autoformal/hyperparams.hpp"
#include "autoformal/params.hpp"
#include "autoformal/tensor.hpp"

namespace autoformal {

/// Unnormalized score between one decoder query and one encoder annotation:
///
///   Luong           q' W_a k
///   ScaledLuong     g * q' W_a k
///   Bahdanau        v' tanh(W_q q + W_k k)
///   NormedBahdanau  (g * v / |v|)' tanh(W_q q + W_k k + b)
///
/// Returns 0 for AttentionType::None.
double attention_score(const Vector& query, const Vector& key, AttentionType type,
                       const AttentionWeights& w);

/// Annotations of one source sentence plus the query-independent part of the
/// score (W_a K for Luong variants, W_k K (+ b) for Bahdanau variants).
struct AttentionMemory {
  Matrix keys;       ///< d x S
  Matrix projected;  ///< d x S
  Vector v_eff;      ///< Bahdanau variants: the effective score vector
};

AttentionMemory make_memory(AttentionType type, const AttentionWeights& w,
                            Matrix keys);

struct AttentionResult {
  Vector raw_scores;  ///< before the ScaledLuong scale
  Vector scores;
  Vector weights;     ///< softmax(scores), sums to 1
  Vector context;     ///< keys * weights
  Matrix units;       ///< Bahdanau variants: tanh units, d x S
};

AttentionResult attend(AttentionType type, const AttentionWeights& w,
                       const AttentionMemory& memory, const Vector& query);

/// Numerically stable softmax (max subtraction).
Vector softmax(const Vector& scores);

/// Per-sentence gradient accumulators for one AttentionMemory.
struct AttentionMemoryGrads {
  Matrix d_keys;
  Matrix d_projected;
};

/// Backpropagates d(context) through one attend() call. Adds to `dquery`,
/// `mem_grads`, `d_v_eff` and the query-side / scale weights in `grads`.
void attend_backward(AttentionType type, const AttentionWeights& w,
                     const AttentionMemory& memory, const AttentionResult& result,
                     const Vector& query, const Vector& dcontext, Vector& dquery,
                     AttentionMemoryGrads& mem_grads, Vector& d_v_eff,
                     AttentionWeights& grads);

/// Backpropagates the accumulated d_projected of one memory into its keys and
/// the key-side weights.
void memory_backward(AttentionType type, const AttentionWeights& w,
                     const AttentionMemory& memory, AttentionMemoryGrads& mem_grads,
                     AttentionWeights& grads);

/// Maps the accumulated gradient of the effective score vector onto v (and g
/// for NormedBahdanau).
void v_eff_backward(AttentionType type, const AttentionWeights& w,
                    const Vector& d_v_eff, AttentionWeights& grads);

}  // namespace autoformal
