#include "autoformal/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "autoformal/corpus.hpp"
#include "autoformal/error.hpp"

namespace autoformal {
namespace {

using Index = Eigen::Index;
using corpus::Vocabulary;

struct Dropout {
  double keep = 1.0;
  SplitMix64* rng = nullptr;

  bool active() const { return rng != nullptr && keep < 1.0; }
};

Matrix dropout_mask(Index rows, Index cols, const Dropout& dropout) {
  Matrix m(rows, cols);
  const double scale = 1.0 / dropout.keep;
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      m(r, c) = dropout.rng->uniform() < dropout.keep ? scale : 0.0;
    }
  }
  return m;
}

// Caches of one stacked-RNN run, indexed by source position t.
struct StackTrace {
  std::vector<std::vector<CellCache>> cells;  // [t][layer]
  std::vector<std::vector<Matrix>> drop;      // [t][layer]; empty without dropout
  std::vector<RowVector> masks;               // [t]; empty means all valid
  bool reverse = false;
};

CellState blend(const CellState& next, const CellState& prev, const RowVector& m) {
  const RowVector keep_prev = RowVector::Ones(m.size()) - m;
  CellState out;
  out.h = (next.h.array().rowwise() * m.array() +
           prev.h.array().rowwise() * keep_prev.array())
              .matrix();
  if (next.c.size() > 0) {
    out.c = (next.c.array().rowwise() * m.array() +
             prev.c.array().rowwise() * keep_prev.array())
                .matrix();
  }
  return out;
}

// One time step through the stack. Layer outputs gain a residual connection
// (output = h + raw input) from the second layer up; dropout acts on each
// layer's input only. Positions with mask 0 keep their previous state.
Matrix stack_step(UnitType type, std::span<const CellWeights> cells, bool residual,
                  const Matrix& input, std::vector<CellState>& state,
                  const RowVector* mask, const Dropout* dropout,
                  std::vector<CellCache>* caches, std::vector<Matrix>* drops) {
  Matrix raw = input;
  for (std::size_t l = 0; l < cells.size(); ++l) {
    Matrix x = raw;
    if (dropout && dropout->active()) {
      Matrix m = dropout_mask(raw.rows(), raw.cols(), *dropout);
      x = raw.cwiseProduct(m);
      if (drops) (*drops)[l] = std::move(m);
    }
    CellState next =
        cell_forward(type, cells[l], x, state[l], caches ? &(*caches)[l] : nullptr);
    Matrix out = next.h;
    if (residual && l > 0) out += raw;
    state[l] = mask ? blend(next, state[l], *mask) : std::move(next);
    raw = std::move(out);
  }
  return raw;
}

std::vector<Matrix> run_stack(UnitType type, std::span<const CellWeights> cells,
                              bool residual, const std::vector<Matrix>& inputs,
                              std::vector<CellState>& state,
                              const std::vector<RowVector>* masks, bool reverse,
                              const Dropout* dropout, StackTrace* trace) {
  const std::size_t steps = inputs.size();
  std::vector<Matrix> outputs(steps);
  if (trace) {
    trace->reverse = reverse;
    trace->cells.assign(steps, std::vector<CellCache>(cells.size()));
    trace->drop.assign(steps, std::vector<Matrix>(cells.size()));
    trace->masks = masks ? *masks : std::vector<RowVector>{};
  }
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    outputs[t] = stack_step(type, cells, residual, inputs[t], state,
                            masks ? &(*masks)[t] : nullptr, dropout,
                            trace ? &trace->cells[t] : nullptr,
                            trace ? &trace->drop[t] : nullptr);
  }
  return outputs;
}

// Reverse-mode pass over run_stack. `d_outputs[t]` may be empty (zero).
// Returns the gradient of the initial state.
std::vector<CellState> backprop_stack(UnitType type, std::span<const CellWeights> cells,
                                      std::span<CellWeights> grads, bool residual,
                                      const StackTrace& trace,
                                      const std::vector<Matrix>& d_outputs,
                                      std::vector<CellState> d_state,
                                      std::vector<Matrix>* d_inputs) {
  const std::size_t steps = trace.cells.size();
  if (d_inputs) d_inputs->assign(steps, Matrix());
  for (std::size_t k = steps; k-- > 0;) {
    const std::size_t t = trace.reverse ? steps - 1 - k : k;
    const RowVector* mask = trace.masks.empty() ? nullptr : &trace.masks[t];
    Matrix d_out = d_outputs[t];
    for (std::size_t l = cells.size(); l-- > 0;) {
      CellState& ds = d_state[l];
      CellState d_next;
      CellState carry;
      if (mask) {
        const RowVector keep_prev = RowVector::Ones(mask->size()) - *mask;
        d_next.h = (ds.h.array().rowwise() * mask->array()).matrix();
        carry.h = (ds.h.array().rowwise() * keep_prev.array()).matrix();
        if (ds.c.size() > 0) {
          d_next.c = (ds.c.array().rowwise() * mask->array()).matrix();
          carry.c = (ds.c.array().rowwise() * keep_prev.array()).matrix();
        }
      } else {
        d_next = std::move(ds);
      }
      if (d_out.size() > 0) d_next.h += d_out;

      CellInputGrads g = cell_backward(type, cells[l], trace.cells[t][l], d_next, grads[l]);
      ds = std::move(g.dstate);
      if (mask) {
        ds.h += carry.h;
        if (ds.c.size() > 0) ds.c += carry.c;
      }
      Matrix d_raw = trace.drop[t][l].size() > 0 ? g.dx.cwiseProduct(trace.drop[t][l])
                                                 : std::move(g.dx);
      if (residual && l > 0 && d_out.size() > 0) d_raw += d_out;
      d_out = std::move(d_raw);
    }
    if (d_inputs) (*d_inputs)[t] = std::move(d_out);
  }
  return d_state;
}

std::vector<CellState> zero_states(UnitType type, std::size_t layers, Index d, Index batch) {
  return std::vector<CellState>(layers, zero_state(type, d, batch));
}

// Encoder over a batch laid out per position.
struct EncoderTrace {
  StackTrace fw;
  StackTrace bw;
  std::vector<Matrix> fw_out;
  std::vector<Matrix> bw_out;
};

struct EncoderRun {
  std::vector<Matrix> annotations;  // [t], d x B
  std::vector<CellState> final_state;
};

EncoderRun run_encoder(const HyperParams& hp, const ModelParams& p,
                       const std::vector<Matrix>& inputs,
                       const std::vector<RowVector>* masks, Index batch,
                       const Dropout* dropout, EncoderTrace* trace) {
  const Index d = hp.num_units;
  const auto type = hp.unit_type;
  const std::span<const CellWeights> cells(p.encoder_cells);
  EncoderRun run;
  if (hp.encoder_type == EncoderType::Unidirectional) {
    run.final_state = zero_states(type, cells.size(), d, batch);
    run.annotations = run_stack(type, cells, hp.residual, inputs, run.final_state,
                                masks, false, dropout, trace ? &trace->fw : nullptr);
    return run;
  }
  const std::size_t half = cells.size() / 2;
  auto fw_state = zero_states(type, half, d, batch);
  auto bw_state = zero_states(type, half, d, batch);
  auto fw_out = run_stack(type, cells.first(half), hp.residual, inputs, fw_state, masks,
                          false, dropout, trace ? &trace->fw : nullptr);
  auto bw_out = run_stack(type, cells.last(half), hp.residual, inputs, bw_state, masks,
                          true, dropout, trace ? &trace->bw : nullptr);
  run.annotations.resize(inputs.size());
  Matrix both(2 * d, batch);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    both << fw_out[t], bw_out[t];
    run.annotations[t] = p.bridge * both;
  }
  for (std::size_t i = 0; i < half; ++i) {
    run.final_state.push_back(std::move(fw_state[i]));
    run.final_state.push_back(std::move(bw_state[i]));
  }
  if (trace) {
    trace->fw_out = std::move(fw_out);
    trace->bw_out = std::move(bw_out);
  }
  return run;
}

void check_ids(const std::vector<int>& ids, Index vocab, const char* side) {
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw Error(ErrorKind::IdOutOfRange,
                  std::string(side) + " id " + std::to_string(id) +
                      " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

void check_example(const Example& ex, const HyperParams& hp, const ModelParams& p) {
  check_ids(ex.src, p.src_embedding.rows(), "source");
  check_ids(ex.tgt, p.tgt_embedding.rows(), "target");
  if (static_cast<int>(ex.src.size()) > hp.max_src_len) {
    throw Error(ErrorKind::LengthExceeded,
                "source length " + std::to_string(ex.src.size()) + " exceeds " +
                    std::to_string(hp.max_src_len));
  }
  if (static_cast<int>(ex.tgt.size()) > hp.max_tgt_len) {
    throw Error(ErrorKind::LengthExceeded,
                "target length " + std::to_string(ex.tgt.size()) + " exceeds " +
                    std::to_string(hp.max_tgt_len));
  }
}

Matrix keys_of(const std::vector<Matrix>& annotations, Index column, Index length) {
  const Index d = annotations.empty() ? 0 : annotations.front().rows();
  Matrix k(d, length);
  for (Index t = 0; t < length; ++t) k.col(t) = annotations[static_cast<std::size_t>(t)].col(column);
  return k;
}

AttentionResult attend_or_empty(AttentionType type, const AttentionWeights& w,
                                const AttentionMemory& mem, const Vector& query) {
  if (mem.keys.cols() == 0) {
    AttentionResult r;
    r.context = Vector::Zero(query.size());
    return r;
  }
  return attend(type, w, mem, query);
}

// Teacher-forced computation over one batch with optional backpropagation.
class Graph {
 public:
  Graph(const HyperParams& hp, const ModelParams& p) : hp_(hp), p_(p) {}

  LossResult forward(std::span<const Example> batch, const Dropout* dropout,
                     bool keep_grads, std::vector<std::vector<double>>* logprobs);
  void backward(ModelParams& g);

 private:
  const HyperParams& hp_;
  const ModelParams& p_;
  Index batch_ = 0;
  std::vector<Index> src_len_;
  std::vector<std::vector<int>> src_ids_;  // [t][b], -1 for padding
  std::vector<std::vector<int>> tgt_in_;   // [t][b], -1 for padding
  EncoderTrace enc_;
  std::vector<Matrix> annotations_;
  StackTrace dec_;
  std::vector<Matrix> queries_;
  std::vector<AttentionMemory> memories_;          // [b]
  std::vector<std::vector<AttentionResult>> attn_;  // [t][b]
  std::vector<Matrix> combine_in_;                  // [t], [context; query]
  std::vector<Matrix> hidden_;                      // [t], attentional hidden
  std::vector<Matrix> d_logits_;                    // [t]
};

LossResult Graph::forward(std::span<const Example> batch, const Dropout* dropout,
                          bool keep_grads, std::vector<std::vector<double>>* logprobs) {
  const Index d = hp_.num_units;
  batch_ = static_cast<Index>(batch.size());
  if (batch_ == 0) throw Error(ErrorKind::EmptyTrainSet, "empty batch");
  for (const auto& ex : batch) check_example(ex, hp_, p_);

  Index src_steps = 0;
  Index tgt_steps = 0;
  src_len_.clear();
  for (const auto& ex : batch) {
    src_len_.push_back(static_cast<Index>(ex.src.size()));
    src_steps = std::max(src_steps, static_cast<Index>(ex.src.size()));
    tgt_steps = std::max(tgt_steps, static_cast<Index>(ex.tgt.size()) + 1);
  }

  // Encoder inputs and validity masks.
  std::vector<Matrix> src_inputs(static_cast<std::size_t>(src_steps), Matrix::Zero(d, batch_));
  std::vector<RowVector> masks(static_cast<std::size_t>(src_steps), RowVector::Zero(batch_));
  src_ids_.assign(static_cast<std::size_t>(src_steps), std::vector<int>(batch_, -1));
  for (Index b = 0; b < batch_; ++b) {
    const auto& src = batch[static_cast<std::size_t>(b)].src;
    for (std::size_t t = 0; t < src.size(); ++t) {
      src_inputs[t].col(b) = p_.src_embedding.row(src[t]).transpose();
      masks[t](b) = 1.0;
      src_ids_[t][b] = src[t];
    }
  }
  EncoderRun enc = run_encoder(hp_, p_, src_inputs, &masks, batch_, dropout,
                               keep_grads ? &enc_ : nullptr);
  annotations_ = std::move(enc.annotations);

  // Decoder inputs `<s> tgt` and gold outputs `tgt </s>`.
  std::vector<Matrix> tgt_inputs(static_cast<std::size_t>(tgt_steps), Matrix::Zero(d, batch_));
  tgt_in_.assign(static_cast<std::size_t>(tgt_steps), std::vector<int>(batch_, -1));
  std::vector<std::vector<int>> gold(static_cast<std::size_t>(tgt_steps),
                                     std::vector<int>(batch_, -1));
  for (Index b = 0; b < batch_; ++b) {
    const auto& tgt = batch[static_cast<std::size_t>(b)].tgt;
    for (std::size_t t = 0; t <= tgt.size(); ++t) {
      const int in = t == 0 ? Vocabulary::kSos : tgt[t - 1];
      tgt_inputs[t].col(b) = p_.tgt_embedding.row(in).transpose();
      tgt_in_[t][b] = in;
      gold[t][b] = t < tgt.size() ? tgt[t] : Vocabulary::kEos;
    }
  }
  std::vector<CellState> dec_state = std::move(enc.final_state);
  queries_ = run_stack(hp_.unit_type, p_.decoder_cells, hp_.residual, tgt_inputs,
                       dec_state, nullptr, false, dropout, keep_grads ? &dec_ : nullptr);

  const bool attention = hp_.attention != AttentionType::None;
  memories_.clear();
  if (attention) {
    for (Index b = 0; b < batch_; ++b) {
      memories_.push_back(make_memory(hp_.attention, p_.attention,
                                      keys_of(annotations_, b, src_len_[static_cast<std::size_t>(b)])));
    }
  }
  attn_.assign(static_cast<std::size_t>(tgt_steps), {});
  combine_in_.assign(static_cast<std::size_t>(tgt_steps), Matrix());
  hidden_.assign(static_cast<std::size_t>(tgt_steps), Matrix());
  d_logits_.assign(keep_grads ? static_cast<std::size_t>(tgt_steps) : 0, Matrix());
  if (logprobs) logprobs->assign(batch.size(), {});

  LossResult result;
  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch_);
  for (std::size_t t = 0; t < static_cast<std::size_t>(tgt_steps); ++t) {
    const Matrix& q = queries_[t];
    Matrix hidden;
    if (attention) {
      Matrix ctx(d, batch_);
      attn_[t].resize(static_cast<std::size_t>(batch_));
      for (Index b = 0; b < batch_; ++b) {
        attn_[t][b] = attend_or_empty(hp_.attention, p_.attention,
                                      memories_[static_cast<std::size_t>(b)], q.col(b));
        ctx.col(b) = attn_[t][b].context;
      }
      Matrix cq(2 * d, batch_);
      cq << ctx, q;
      hidden = (p_.attention.combine * cq).array().tanh().matrix();
      combine_in_[t] = std::move(cq);
    } else {
      hidden = q;
    }
    const Matrix logits = p_.output_projection.transpose() * hidden;
    Matrix dl;
    if (keep_grads) dl = Matrix::Zero(logits.rows(), batch_);
    for (Index b = 0; b < batch_; ++b) {
      const int g = gold[t][b];
      if (g < 0) continue;
      const auto col = logits.col(b);
      const double m = col.maxCoeff();
      const double lse = m + std::log((col.array() - m).exp().sum());
      const double lp = col(g) - lse;
      total -= lp;
      ++result.token_count;
      if (logprobs) (*logprobs)[static_cast<std::size_t>(b)].push_back(lp);
      if (keep_grads) {
        dl.col(b) = (col.array() - lse).exp().matrix() * inv_batch;
        dl(g, b) -= inv_batch;
      }
    }
    hidden_[t] = std::move(hidden);
    if (keep_grads) d_logits_[t] = std::move(dl);
  }
  result.loss = total * inv_batch;
  if (!std::isfinite(result.loss)) {
    throw Error(ErrorKind::NonFiniteLoss, "loss is not finite");
  }
  return result;
}

void Graph::backward(ModelParams& g) {
  const Index d = hp_.num_units;
  const auto type = hp_.unit_type;
  const bool attention = hp_.attention != AttentionType::None;
  const std::size_t tgt_steps = hidden_.size();
  const std::size_t src_steps = annotations_.size();

  std::vector<Matrix> d_queries(tgt_steps);
  std::vector<AttentionMemoryGrads> mem_grads;
  Vector d_v_eff;
  if (attention) {
    for (const auto& mem : memories_) {
      mem_grads.push_back({Matrix::Zero(d, mem.keys.cols()), Matrix::Zero(d, mem.keys.cols())});
    }
    d_v_eff = Vector::Zero(d);
  }

  for (std::size_t t = 0; t < tgt_steps; ++t) {
    g.output_projection.noalias() += hidden_[t] * d_logits_[t].transpose();
    Matrix d_hidden = p_.output_projection * d_logits_[t];
    if (!attention) {
      d_queries[t] = std::move(d_hidden);
      continue;
    }
    const Matrix d_pre =
        (d_hidden.array() * (1.0 - hidden_[t].array().square())).matrix();
    g.attention.combine.noalias() += d_pre * combine_in_[t].transpose();
    const Matrix d_cq = p_.attention.combine.transpose() * d_pre;
    Matrix dq = d_cq.bottomRows(d);
    for (Index b = 0; b < batch_; ++b) {
      const auto& mem = memories_[static_cast<std::size_t>(b)];
      if (mem.keys.cols() == 0) continue;
      Vector dquery = Vector::Zero(d);
      attend_backward(hp_.attention, p_.attention, mem, attn_[t][b],
                      queries_[t].col(b), d_cq.col(b).head(d), dquery,
                      mem_grads[static_cast<std::size_t>(b)], d_v_eff, g.attention);
      dq.col(b) += dquery;
    }
    d_queries[t] = std::move(dq);
  }

  std::vector<Matrix> d_annotations(src_steps);
  if (attention) {
    for (auto& m : d_annotations) m = Matrix::Zero(d, batch_);
    for (Index b = 0; b < batch_; ++b) {
      auto& mg = mem_grads[static_cast<std::size_t>(b)];
      memory_backward(hp_.attention, p_.attention, memories_[static_cast<std::size_t>(b)],
                      mg, g.attention);
      for (Index t = 0; t < mg.d_keys.cols(); ++t) {
        d_annotations[static_cast<std::size_t>(t)].col(b) += mg.d_keys.col(t);
      }
    }
    v_eff_backward(hp_.attention, p_.attention, d_v_eff, g.attention);
  }

  // Decoder stack.
  std::vector<Matrix> d_tgt_inputs;
  auto d_init = backprop_stack(type, p_.decoder_cells, g.decoder_cells, hp_.residual, dec_,
                               d_queries, zero_states(type, p_.decoder_cells.size(), d, batch_),
                               &d_tgt_inputs);
  for (std::size_t t = 0; t < tgt_steps; ++t) {
    for (Index b = 0; b < batch_; ++b) {
      const int id = tgt_in_[t][b];
      if (id >= 0) g.tgt_embedding.row(id) += d_tgt_inputs[t].col(b).transpose();
    }
  }

  // Encoder stack(s).
  std::vector<Matrix> d_src_inputs;
  const std::span<const CellWeights> cells(p_.encoder_cells);
  const std::span<CellWeights> cell_grads(g.encoder_cells);
  if (hp_.encoder_type == EncoderType::Unidirectional) {
    backprop_stack(type, cells, cell_grads, hp_.residual, enc_.fw, d_annotations,
                   std::move(d_init), &d_src_inputs);
  } else {
    const std::size_t half = cells.size() / 2;
    std::vector<Matrix> d_fw(src_steps), d_bw(src_steps);
    if (attention) {
      Matrix both(2 * d, batch_);
      for (std::size_t t = 0; t < src_steps; ++t) {
        both << enc_.fw_out[t], enc_.bw_out[t];
        g.bridge.noalias() += d_annotations[t] * both.transpose();
        const Matrix d_both = p_.bridge.transpose() * d_annotations[t];
        d_fw[t] = d_both.topRows(d);
        d_bw[t] = d_both.bottomRows(d);
      }
    }
    std::vector<CellState> d_fw_final, d_bw_final;
    for (std::size_t i = 0; i < half; ++i) {
      d_fw_final.push_back(std::move(d_init[2 * i]));
      d_bw_final.push_back(std::move(d_init[2 * i + 1]));
    }
    std::vector<Matrix> d_in_fw, d_in_bw;
    backprop_stack(type, cells.first(half), cell_grads.first(half), hp_.residual, enc_.fw,
                   d_fw, std::move(d_fw_final), &d_in_fw);
    backprop_stack(type, cells.last(half), cell_grads.last(half), hp_.residual, enc_.bw,
                   d_bw, std::move(d_bw_final), &d_in_bw);
    d_src_inputs.resize(src_steps);
    for (std::size_t t = 0; t < src_steps; ++t) d_src_inputs[t] = d_in_fw[t] + d_in_bw[t];
  }
  for (std::size_t t = 0; t < src_steps; ++t) {
    for (Index b = 0; b < batch_; ++b) {
      const int id = src_ids_[t][b];
      if (id >= 0) g.src_embedding.row(id) += d_src_inputs[t].col(b).transpose();
    }
  }
}

Dropout make_dropout(const HyperParams& hp, bool training, SplitMix64* rng) {
  Dropout dropout;
  if (training && hp.dropout > 0.0) {
    if (!rng) {
      throw Error(ErrorKind::InvalidHyperParams, "dropout requires a random stream");
    }
    dropout.keep = 1.0 - hp.dropout;
    dropout.rng = rng;
  }
  return dropout;
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

}  // namespace

EncoderOutput encode(const std::vector<int>& src_ids, const HyperParams& hp,
                     const ModelParams& params) {
  check_example(Example{src_ids, {}}, hp, params);
  const Index d = hp.num_units;
  std::vector<Matrix> inputs;
  inputs.reserve(src_ids.size());
  for (int id : src_ids) inputs.emplace_back(params.src_embedding.row(id).transpose());
  EncoderRun run = run_encoder(hp, params, inputs, nullptr, 1, nullptr, nullptr);
  EncoderOutput out;
  out.annotations.resize(d, static_cast<Index>(src_ids.size()));
  for (std::size_t t = 0; t < run.annotations.size(); ++t) {
    out.annotations.col(static_cast<Index>(t)) = run.annotations[t];
  }
  out.final_state = std::move(run.final_state);
  return out;
}

namespace {

DecodeStepResult step_with_memory(int prev_tgt_id, const std::vector<CellState>& state,
                                  const AttentionMemory* memory, const HyperParams& hp,
                                  const ModelParams& p) {
  check_ids({prev_tgt_id}, p.tgt_embedding.rows(), "target");
  DecodeStepResult r;
  r.state = state;
  const Matrix x = p.tgt_embedding.row(prev_tgt_id).transpose();
  const Matrix q = stack_step(hp.unit_type, p.decoder_cells, hp.residual, x, r.state,
                              nullptr, nullptr, nullptr, nullptr);
  Vector hidden;
  if (hp.attention != AttentionType::None) {
    AttentionResult a = attend_or_empty(hp.attention, p.attention, *memory, q.col(0));
    Vector cq(2 * hp.num_units);
    cq << a.context, q.col(0);
    hidden = (p.attention.combine * cq).array().tanh().matrix();
    r.attention_weights = std::move(a.weights);
  } else {
    hidden = q.col(0);
  }
  r.logits = p.output_projection.transpose() * hidden;
  if (!r.logits.allFinite()) {
    throw Error(ErrorKind::NonFiniteActivation, "decoder produced non-finite logits");
  }
  return r;
}

}  // namespace

DecodeStepResult decode_step(int prev_tgt_id, const std::vector<CellState>& state,
                             const Matrix& annotations, const HyperParams& hp,
                             const ModelParams& params) {
  AttentionMemory memory;
  if (hp.attention != AttentionType::None) {
    memory = make_memory(hp.attention, params.attention, annotations);
  }
  return step_with_memory(prev_tgt_id, state, &memory, hp, params);
}

LossResult forward_loss(std::span<const Example> batch, const HyperParams& hp,
                        const ModelParams& params, bool training,
                        SplitMix64* dropout_rng) {
  const Dropout dropout = make_dropout(hp, training, dropout_rng);
  Graph graph(hp, params);
  return graph.forward(batch, &dropout, false, nullptr);
}

LossResult loss_and_gradient(std::span<const Example> batch, const HyperParams& hp,
                             const ModelParams& params, ModelParams& grads,
                             bool training, SplitMix64* dropout_rng) {
  const Dropout dropout = make_dropout(hp, training, dropout_rng);
  Graph graph(hp, params);
  const LossResult r = graph.forward(batch, &dropout, true, nullptr);
  graph.backward(grads);
  return r;
}

std::vector<std::vector<double>> gold_logprobs(std::span<const Example> batch,
                                               const HyperParams& hp,
                                               const ModelParams& params) {
  std::vector<std::vector<double>> out;
  Graph graph(hp, params);
  graph.forward(batch, nullptr, false, &out);
  return out;
}

DecodeResult greedy_decode(const std::vector<int>& src_ids, const HyperParams& hp,
                           const ModelParams& params, int max_len) {
  EncoderOutput enc = encode(src_ids, hp, params);
  AttentionMemory memory;
  if (hp.attention != AttentionType::None) {
    memory = make_memory(hp.attention, params.attention, std::move(enc.annotations));
  }
  DecodeResult result;
  std::vector<CellState> state = std::move(enc.final_state);
  int prev = Vocabulary::kSos;
  for (int step = 0; step < max_len; ++step) {
    DecodeStepResult r = step_with_memory(prev, state, &memory, hp, params);
    const Vector lp = log_softmax(r.logits);
    Index best = 0;
    lp.maxCoeff(&best);
    result.token_logprobs.push_back(lp(best));
    if (best == Vocabulary::kEos) {
      result.ended_by_eos = true;
      break;
    }
    result.ids.push_back(static_cast<int>(best));
    prev = static_cast<int>(best);
    state = std::move(r.state);
  }
  return result;
}

}  // namespace autoformal
