#include "autoformal/attention.hpp"

#include <cmath>

namespace autoformal {
namespace {

bool is_luong(AttentionType t) {
  return t == AttentionType::Luong || t == AttentionType::ScaledLuong;
}

bool is_bahdanau(AttentionType t) {
  return t == AttentionType::Bahdanau || t == AttentionType::NormedBahdanau;
}

Vector effective_v(AttentionType type, const AttentionWeights& w) {
  if (type == AttentionType::NormedBahdanau) {
    return (w.scale(0, 0) / w.v.norm()) * w.v.col(0);
  }
  return w.v.col(0);
}

}  // namespace

double attention_score(const Vector& query, const Vector& key, AttentionType type,
                       const AttentionWeights& w) {
  switch (type) {
    case AttentionType::None:
      return 0.0;
    case AttentionType::Luong:
      return query.dot(w.score * key);
    case AttentionType::ScaledLuong:
      return w.scale(0, 0) * query.dot(w.score * key);
    case AttentionType::Bahdanau:
    case AttentionType::NormedBahdanau: {
      Vector pre = w.query * query + w.key * key;
      if (type == AttentionType::NormedBahdanau) pre += w.bias.col(0);
      return effective_v(type, w).dot(pre.array().tanh().matrix());
    }
  }
  return 0.0;
}

Vector softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp().matrix();
  return e / e.sum();
}

AttentionMemory make_memory(AttentionType type, const AttentionWeights& w,
                            Matrix keys) {
  AttentionMemory mem;
  if (is_luong(type)) {
    mem.projected = w.score * keys;
  } else if (is_bahdanau(type)) {
    mem.projected = w.key * keys;
    if (type == AttentionType::NormedBahdanau) mem.projected.colwise() += w.bias.col(0);
    mem.v_eff = effective_v(type, w);
  }
  mem.keys = std::move(keys);
  return mem;
}

AttentionResult attend(AttentionType type, const AttentionWeights& w,
                       const AttentionMemory& memory, const Vector& query) {
  AttentionResult r;
  if (is_luong(type)) {
    r.raw_scores = memory.projected.transpose() * query;
    r.scores = type == AttentionType::ScaledLuong ? Vector(w.scale(0, 0) * r.raw_scores)
                                                  : r.raw_scores;
  } else {
    const Vector q = w.query * query;
    r.units = (memory.projected.colwise() + q).array().tanh().matrix();
    r.scores = r.units.transpose() * memory.v_eff;
    r.raw_scores = r.scores;
  }
  r.weights = softmax(r.scores);
  r.context = memory.keys * r.weights;
  return r;
}

void attend_backward(AttentionType type, const AttentionWeights& w,
                     const AttentionMemory& memory, const AttentionResult& result,
                     const Vector& query, const Vector& dcontext, Vector& dquery,
                     AttentionMemoryGrads& mem_grads, Vector& d_v_eff,
                     AttentionWeights& grads) {
  const Vector& alpha = result.weights;
  mem_grads.d_keys.noalias() += dcontext * alpha.transpose();
  const Vector dalpha = memory.keys.transpose() * dcontext;
  Vector dscores = (alpha.array() * (dalpha.array() - alpha.dot(dalpha))).matrix();

  if (is_luong(type)) {
    if (type == AttentionType::ScaledLuong) {
      grads.scale(0, 0) += dscores.dot(result.raw_scores);
      dscores *= w.scale(0, 0);
    }
    dquery.noalias() += memory.projected * dscores;
    mem_grads.d_projected.noalias() += query * dscores.transpose();
  } else {
    d_v_eff.noalias() += result.units * dscores;
    const Matrix dpre = ((memory.v_eff * dscores.transpose()).array() *
                         (1.0 - result.units.array().square()))
                            .matrix();
    mem_grads.d_projected += dpre;
    const Vector dq = dpre.rowwise().sum();
    grads.query.noalias() += dq * query.transpose();
    dquery.noalias() += w.query.transpose() * dq;
  }
}

void memory_backward(AttentionType type, const AttentionWeights& w,
                     const AttentionMemory& memory, AttentionMemoryGrads& mem_grads,
                     AttentionWeights& grads) {
  if (is_luong(type)) {
    grads.score.noalias() += mem_grads.d_projected * memory.keys.transpose();
    mem_grads.d_keys.noalias() += w.score.transpose() * mem_grads.d_projected;
  } else if (is_bahdanau(type)) {
    grads.key.noalias() += mem_grads.d_projected * memory.keys.transpose();
    mem_grads.d_keys.noalias() += w.key.transpose() * mem_grads.d_projected;
    if (type == AttentionType::NormedBahdanau) {
      grads.bias += mem_grads.d_projected.rowwise().sum();
    }
  }
}

void v_eff_backward(AttentionType type, const AttentionWeights& w,
                    const Vector& d_v_eff, AttentionWeights& grads) {
  if (type == AttentionType::Bahdanau) {
    grads.v += d_v_eff;
  } else if (type == AttentionType::NormedBahdanau) {
    const double norm = w.v.norm();
    const Vector unit = w.v.col(0) / norm;
    const double g = w.scale(0, 0);
    grads.scale(0, 0) += d_v_eff.dot(unit);
    grads.v += (g / norm) * (d_v_eff - unit * unit.dot(d_v_eff));
  }
}

}  // namespace autoformal
