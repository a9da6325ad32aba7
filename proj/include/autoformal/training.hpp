#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "autoformal/checkpoint.hpp"
#include "autoformal/corpus.hpp"
#include "autoformal/hyperparams.hpp"
#include "autoformal/model.hpp"
#include "autoformal/params.hpp"

namespace autoformal {

struct AdamState {
  std::int64_t t = 0;
  ModelParams m;
  ModelParams v;
};

struct TrainState {
  std::int64_t step = 0;
  ModelParams params;
  std::optional<AdamState> adam;  ///< set iff the optimizer is Adam
  std::uint64_t batch_rng_state = 0;
  std::uint64_t dropout_rng_state = 0;
  std::vector<std::pair<std::int64_t, double>> history;  ///< (step, train loss)
};

struct Snapshot {
  std::int64_t step = 0;
  Model model;
};

/// Throws ShapeMismatch when the structures differ.
void sgd_update(ModelParams& params, const ModelParams& grads, double lr);

/// Advances `state.t`, then applies the bias-corrected update.
void adam_update(ModelParams& params, AdamState& state, const ModelParams& grads, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
AdamState make_adam_state(const ModelParams& params);

/// Rescales all tensors by clip_norm / N when the global L2 norm N exceeds
/// clip_norm. Returns N.
double clip_gradients(ModelParams& grads, double clip_norm);
double global_norm(const ModelParams& grads);

/// Perplexity of the gold targets under teacher forcing, batched by
/// hp.batch_size. Throws EmptyEvalSet.
double dev_perplexity(const ModelParams& params, const HyperParams& hp,
                      const std::vector<Example>& dev);

struct TrainLogEntry {
  std::int64_t step = 0;
  double loss = 0.0;
  std::optional<double> dev_perplexity;
};

/// `step <n> loss <x> dev_ppl <y>`, with `NA` for a missing dev perplexity.
std::string format_log_entry(const TrainLogEntry& entry);

struct TrainOptions {
  std::int64_t snapshot_every = 1000;  ///< 0 disables snapshots
  std::int64_t log_every = 100;        ///< 0 logs only at snapshots and the end
  lexing::Language src_language = lexing::Language::Latex;
  lexing::Language tgt_language = lexing::Language::Mizar;
  /// Fault injection: the gradient of this step becomes NaN.
  std::optional<std::int64_t> inject_nan_at;
  bool keep_snapshots = true;
  std::function<void(const TrainLogEntry&)> on_log;
  std::function<void(const Snapshot&)> on_snapshot;
};

struct TrainResult {
  TrainState state;
  Model model;  ///< final (or last finite) parameters with vocabularies
  std::vector<Snapshot> snapshots;
  bool diverged = false;
};

/// Encodes a pair for the chosen direction, truncating to the length caps.
Example make_example(const corpus::SentencePair& pair, const Model& model);

/// Vocabularies come from corpus.train. Batches: a seeded shuffle cut into
/// pools of several batches, each pool sorted by source length (bucketing)
/// and the batches of a pool visited in shuffled order. A non-finite loss,
/// gradient or parameter stops training with diverged=true and the
/// parameters from before the failing step. Throws EmptyTrainSet.
TrainResult train(const corpus::CorpusSplit& corpus, const HyperParams& hp,
                  const TrainOptions& options = {});

}  // namespace autoformal
