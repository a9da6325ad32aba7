#include "autoformal/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

#include "autoformal/error.hpp"
#include "autoformal/evaluation.hpp"
#include "autoformal/rng.hpp"

namespace autoformal {
namespace {

constexpr std::size_t kBatchesPerPool = 8;

void require_same_shape(const std::vector<NamedTensor>& a, const std::vector<ConstNamedTensor>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::ShapeMismatch, "parameter structures differ in tensor count");
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].name != b[k].name || a[k].value->rows() != b[k].value->rows() ||
        a[k].value->cols() != b[k].value->cols()) {
      throw Error(ErrorKind::ShapeMismatch, "tensor " + a[k].name + " does not match " + b[k].name);
    }
  }
}

// Yields index batches forever, refilling one epoch at a time.
class BatchSource {
 public:
  BatchSource(const std::vector<Example>& examples, std::size_t batch_size, SplitMix64& rng)
      : examples_(examples), batch_size_(batch_size), rng_(rng) {}

  std::vector<std::size_t> next() {
    if (queue_.empty()) refill();
    auto batch = std::move(queue_.front());
    queue_.pop_front();
    return batch;
  }

 private:
  void refill() {
    std::vector<std::size_t> order(examples_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng_.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    const std::size_t pool = batch_size_ * kBatchesPerPool;
    for (std::size_t start = 0; start < order.size(); start += pool) {
      const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
      const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
      std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
        return examples_[a].src.size() < examples_[b].src.size();
      });
      for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(std::min<std::size_t>(batch_size_, static_cast<std::size_t>(last - it)))) {
        const auto end = it + static_cast<std::ptrdiff_t>(std::min<std::size_t>(batch_size_, static_cast<std::size_t>(last - it)));
        batches.emplace_back(it, end);
      }
    }
    rng_.shuffle(batches);
    for (auto& b : batches) queue_.push_back(std::move(b));
  }

  const std::vector<Example>& examples_;
  std::size_t batch_size_;
  SplitMix64& rng_;
  std::deque<std::vector<std::size_t>> queue_;
};

const lexing::TokenSequence& side(const corpus::SentencePair& pair, lexing::Language lang) {
  return lang == lexing::Language::Latex ? pair.latex : pair.mizar;
}

}  // namespace

void sgd_update(ModelParams& params, const ModelParams& grads, double lr) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  require_same_shape(p, g);
  for (std::size_t k = 0; k < p.size(); ++k) *p[k].value -= lr * *g[k].value;
}

AdamState make_adam_state(const ModelParams& params) {
  return AdamState{0, params.zeros_like(), params.zeros_like()};
}

void adam_update(ModelParams& params, AdamState& state, const ModelParams& grads, double lr,
                 double beta1, double beta2, double eps) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  require_same_shape(p, g);
  require_same_shape(m, g);
  require_same_shape(v, g);
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    Matrix& mk = *m[k].value;
    Matrix& vk = *v[k].value;
    const Matrix& gk = *g[k].value;
    mk = beta1 * mk + (1.0 - beta1) * gk;
    vk = beta2 * vk + (1.0 - beta2) * gk.cwiseAbs2();
    *p[k].value -= (lr * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps)).matrix();
  }
}

double global_norm(const ModelParams& grads) {
  double sum = 0.0;
  for (const auto& t : grads.tensors()) sum += t.value->squaredNorm();
  return std::sqrt(sum);
}

double clip_gradients(ModelParams& grads, double clip_norm) {
  const double norm = global_norm(grads);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& t : grads.tensors()) *t.value *= scale;
  }
  return norm;
}

double dev_perplexity(const ModelParams& params, const HyperParams& hp,
                      const std::vector<Example>& dev) {
  if (dev.empty()) throw Error(ErrorKind::EmptyEvalSet, "dev set is empty");
  std::vector<std::vector<double>> logprobs;
  const auto batch = static_cast<std::size_t>(std::max(hp.batch_size, 1));
  for (std::size_t start = 0; start < dev.size(); start += batch) {
    const std::size_t n = std::min(batch, dev.size() - start);
    auto part = gold_logprobs(std::span<const Example>(dev.data() + start, n), hp, params);
    for (auto& s : part) logprobs.push_back(std::move(s));
  }
  return evaluation::perplexity(logprobs);
}

std::string format_log_entry(const TrainLogEntry& entry) {
  char buf[128];
  if (entry.dev_perplexity) {
    std::snprintf(buf, sizeof buf, "step %lld loss %.6f dev_ppl %.6f",
                  static_cast<long long>(entry.step), entry.loss, *entry.dev_perplexity);
  } else {
    std::snprintf(buf, sizeof buf, "step %lld loss %.6f dev_ppl NA",
                  static_cast<long long>(entry.step), entry.loss);
  }
  return buf;
}

Example make_example(const corpus::SentencePair& pair, const Model& model) {
  Example ex{model.src_vocab.encode(side(pair, model.src_language)),
             model.tgt_vocab.encode(side(pair, model.tgt_language))};
  if (static_cast<int>(ex.src.size()) > model.hp.max_src_len) ex.src.resize(static_cast<std::size_t>(model.hp.max_src_len));
  if (static_cast<int>(ex.tgt.size()) > model.hp.max_tgt_len) ex.tgt.resize(static_cast<std::size_t>(model.hp.max_tgt_len));
  return ex;
}

TrainResult train(const corpus::CorpusSplit& corpus, const HyperParams& hp,
                  const TrainOptions& options) {
  hp.validate();
  if (corpus.train.empty()) throw Error(ErrorKind::EmptyTrainSet, "training set is empty");

  TrainResult result;
  Model& model = result.model;
  model.hp = hp;
  model.src_language = options.src_language;
  model.tgt_language = options.tgt_language;
  {
    std::vector<lexing::TokenSequence> src, tgt;
    for (const auto& pair : corpus.train) {
      src.push_back(side(pair, options.src_language));
      tgt.push_back(side(pair, options.tgt_language));
    }
    model.src_vocab = corpus::build_vocab(src);
    model.tgt_vocab = corpus::build_vocab(tgt);
  }
  TrainState& state = result.state;
  state.params = init_params(hp, model.src_vocab, model.tgt_vocab);
  if (hp.optimizer == OptimizerType::Adam) state.adam = make_adam_state(state.params);

  std::vector<Example> train_set, dev_set;
  for (const auto& pair : corpus.train) train_set.push_back(make_example(pair, model));
  for (const auto& pair : corpus.dev) dev_set.push_back(make_example(pair, model));

  SplitMix64 batch_rng(hp.seed + 1);
  SplitMix64 dropout_rng(hp.seed + 2);
  BatchSource batches(train_set, static_cast<std::size_t>(hp.batch_size), batch_rng);
  const double lr = hp.effective_learning_rate();

  auto emit_log = [&](std::int64_t step, double loss, bool with_dev) {
    TrainLogEntry entry{step, loss, std::nullopt};
    if (with_dev && !dev_set.empty()) entry.dev_perplexity = dev_perplexity(state.params, hp, dev_set);
    if (options.on_log) options.on_log(entry);
  };
  auto take_snapshot = [&]() {
    Snapshot snap{state.step, model};
    snap.model.params = state.params;
    snap.model.step = state.step;
    if (options.on_snapshot) options.on_snapshot(snap);
    if (options.keep_snapshots) result.snapshots.push_back(std::move(snap));
  };

  for (std::int64_t step = 1; step <= hp.train_steps; ++step) {
    const auto indices = batches.next();
    std::vector<Example> batch;
    batch.reserve(indices.size());
    for (std::size_t i : indices) batch.push_back(train_set[i]);

    ModelParams grads = state.params.zeros_like();
    double loss = std::numeric_limits<double>::quiet_NaN();
    bool finite = true;
    try {
      loss = loss_and_gradient(batch, hp, state.params, grads, true, &dropout_rng).loss;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFiniteLoss && e.kind() != ErrorKind::NonFiniteActivation) throw;
      finite = false;
    }
    if (options.inject_nan_at && *options.inject_nan_at == step) {
      grads.output_projection(0, 0) = std::numeric_limits<double>::quiet_NaN();
    }
    finite = finite && std::isfinite(loss) && grads.all_finite();

    if (finite) {
      const ModelParams backup = state.params;
      const std::optional<AdamState> adam_backup = state.adam;
      clip_gradients(grads, hp.clip_norm);
      if (state.adam) {
        adam_update(state.params, *state.adam, grads, lr);
      } else {
        sgd_update(state.params, grads, lr);
      }
      if (!state.params.all_finite()) {
        state.params = backup;
        state.adam = adam_backup;
        finite = false;
      }
    }
    if (!finite) {
      result.diverged = true;
      if (options.on_log) options.on_log(TrainLogEntry{step, loss, std::nullopt});
      break;
    }

    state.step = step;
    state.history.emplace_back(step, loss);
    const bool snapshot_now = options.snapshot_every > 0 && step % options.snapshot_every == 0;
    const bool log_now = snapshot_now || step == hp.train_steps ||
                         (options.log_every > 0 && step % options.log_every == 0);
    if (log_now) emit_log(step, loss, snapshot_now || step == hp.train_steps);
    if (snapshot_now) take_snapshot();
  }

  state.batch_rng_state = batch_rng.state();
  state.dropout_rng_state = dropout_rng.state();
  model.params = state.params;
  model.step = state.step;
  return result;
}

}  // namespace autoformal
