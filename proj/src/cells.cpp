#include "autoformal/cells.hpp"

#include "autoformal/error.hpp"

namespace autoformal {
namespace {

Matrix sigmoid(const Matrix& m) {
  return (1.0 + (-m.array()).exp()).inverse().matrix();
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

void check_finite(const CellState& s) {
  if (!s.h.allFinite() || (s.c.size() > 0 && !s.c.allFinite())) {
    throw Error(ErrorKind::NonFiniteActivation,
                "recurrent cell produced a non-finite activation");
  }
}

// Per gate block and column: (z - mean) / sqrt(var + eps).
void layer_norm_forward(const Matrix& pre, int gates, Matrix& normed,
                        Matrix& inv_std) {
  const Eigen::Index d = pre.rows() / gates;
  normed.resize(pre.rows(), pre.cols());
  inv_std.resize(gates, pre.cols());
  for (int k = 0; k < gates; ++k) {
    const auto block = pre.middleRows(k * d, d);
    const RowVector mean = block.colwise().mean();
    Matrix centered = block.rowwise() - mean;
    const RowVector var = centered.array().square().colwise().mean();
    const RowVector inv = (var.array() + kLayerNormEpsilon).rsqrt();
    inv_std.row(k) = inv;
    normed.middleRows(k * d, d) = centered.array().rowwise() * inv.array();
  }
}

Matrix layer_norm_backward(const Matrix& dnormed, const Matrix& normed,
                           const Matrix& inv_std, int gates) {
  const Eigen::Index d = normed.rows() / gates;
  Matrix dpre(normed.rows(), normed.cols());
  for (int k = 0; k < gates; ++k) {
    const auto dn = dnormed.middleRows(k * d, d);
    const auto n = normed.middleRows(k * d, d);
    const RowVector mean_dn = dn.colwise().mean();
    const RowVector mean_dn_n = dn.cwiseProduct(n).colwise().mean();
    Matrix g = dn.rowwise() - mean_dn;
    g -= (n.array().rowwise() * mean_dn_n.array()).matrix();
    dpre.middleRows(k * d, d) = g.array().rowwise() * inv_std.row(k).array();
  }
  return dpre;
}

CellState lstm_forward(bool layer_norm, const CellWeights& w, const Matrix& x,
                       const CellState& s, CellCache* cache) {
  const Eigen::Index d = s.h.rows();
  Matrix xh = stack_rows(x, s.h);
  Matrix pre = w.w * xh;
  Matrix normed, inv_std;
  if (layer_norm) {
    layer_norm_forward(pre, 4, normed, inv_std);
    pre = (normed.array().colwise() * w.gain.col(0).array()).matrix();
    pre.colwise() += w.shift.col(0);
  } else {
    pre.colwise() += w.b.col(0);
  }
  Matrix gates(4 * d, x.cols());
  gates.topRows(2 * d) = sigmoid(pre.topRows(2 * d));
  gates.middleRows(2 * d, d) = pre.middleRows(2 * d, d).array().tanh().matrix();
  gates.bottomRows(d) = sigmoid(pre.bottomRows(d));

  const auto i = gates.topRows(d).array();
  const auto f = gates.middleRows(d, d).array();
  const auto g = gates.middleRows(2 * d, d).array();
  const auto o = gates.bottomRows(d).array();
  CellState out;
  out.c = (f * s.c.array() + i * g).matrix();
  Matrix tanh_c = out.c.array().tanh().matrix();
  out.h = (o * tanh_c.array()).matrix();
  check_finite(out);
  if (cache) {
    cache->xh = std::move(xh);
    cache->gates = std::move(gates);
    cache->c_prev = s.c;
    cache->tanh_c = std::move(tanh_c);
    cache->normed = std::move(normed);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

CellState gru_forward(const CellWeights& w, const Matrix& x, const CellState& s,
                      CellCache* cache) {
  const Eigen::Index d = s.h.rows();
  Matrix xh = stack_rows(x, s.h);
  Matrix pre = w.w * xh;
  pre.colwise() += w.b.col(0);
  Matrix gates = sigmoid(pre);
  const auto z = gates.topRows(d).array();
  const auto r = gates.bottomRows(d).array();
  Matrix xrh = stack_rows(x, (r * s.h.array()).matrix());
  Matrix cand_pre = w.w_cand * xrh;
  cand_pre.colwise() += w.b_cand.col(0);
  Matrix cand = cand_pre.array().tanh().matrix();
  CellState out;
  out.h = ((1.0 - z) * s.h.array() + z * cand.array()).matrix();
  check_finite(out);
  if (cache) {
    cache->xh = std::move(xh);
    cache->gates = std::move(gates);
    cache->h_prev = s.h;
    cache->xrh = std::move(xrh);
    cache->candidate = std::move(cand);
  }
  return out;
}

CellInputGrads lstm_backward(bool layer_norm, const CellWeights& w,
                             const CellCache& cache, const CellState& dout,
                             CellWeights& grads) {
  const Eigen::Index d = cache.c_prev.rows();
  const Eigen::Index in = cache.xh.rows() - d;
  const auto i = cache.gates.topRows(d).array();
  const auto f = cache.gates.middleRows(d, d).array();
  const auto g = cache.gates.middleRows(2 * d, d).array();
  const auto o = cache.gates.bottomRows(d).array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXXd dh = dout.h.array();
  Eigen::ArrayXXd dc = dh * o * (1.0 - tc.square());
  if (dout.c.size() > 0) dc += dout.c.array();

  Matrix dpre(4 * d, cache.xh.cols());
  dpre.topRows(d) = (dc * g * i * (1.0 - i)).matrix();
  dpre.middleRows(d, d) = (dc * cache.c_prev.array() * f * (1.0 - f)).matrix();
  dpre.middleRows(2 * d, d) = (dc * i * (1.0 - g.square())).matrix();
  dpre.bottomRows(d) = (dh * tc * o * (1.0 - o)).matrix();

  if (layer_norm) {
    grads.gain += dpre.cwiseProduct(cache.normed).rowwise().sum();
    grads.shift += dpre.rowwise().sum();
    const Matrix dnormed = (dpre.array().colwise() * w.gain.col(0).array()).matrix();
    dpre = layer_norm_backward(dnormed, cache.normed, cache.inv_std, 4);
  } else {
    grads.b += dpre.rowwise().sum();
  }
  grads.w.noalias() += dpre * cache.xh.transpose();
  const Matrix dxh = w.w.transpose() * dpre;

  CellInputGrads out;
  out.dx = dxh.topRows(in);
  out.dstate.h = dxh.bottomRows(d);
  out.dstate.c = (dc * f).matrix();
  return out;
}

CellInputGrads gru_backward(const CellWeights& w, const CellCache& cache,
                            const CellState& dout, CellWeights& grads) {
  const Eigen::Index d = cache.h_prev.rows();
  const Eigen::Index in = cache.xh.rows() - d;
  const auto z = cache.gates.topRows(d).array();
  const auto r = cache.gates.bottomRows(d).array();
  const auto cand = cache.candidate.array();
  const auto h_prev = cache.h_prev.array();
  const auto dh = dout.h.array();

  const Eigen::ArrayXXd dz = dh * (cand - h_prev);
  Matrix dcand_pre = (dh * z * (1.0 - cand.square())).matrix();
  grads.w_cand.noalias() += dcand_pre * cache.xrh.transpose();
  grads.b_cand += dcand_pre.rowwise().sum();
  const Matrix dxrh = w.w_cand.transpose() * dcand_pre;
  const auto drh = dxrh.bottomRows(d).array();

  Matrix dpre(2 * d, cache.xh.cols());
  dpre.topRows(d) = (dz * z * (1.0 - z)).matrix();
  dpre.bottomRows(d) = (drh * h_prev * r * (1.0 - r)).matrix();
  grads.w.noalias() += dpre * cache.xh.transpose();
  grads.b += dpre.rowwise().sum();
  const Matrix dxh = w.w.transpose() * dpre;

  CellInputGrads out;
  out.dx = dxh.topRows(in) + dxrh.topRows(in);
  out.dstate.h = (dxh.bottomRows(d).array() + dh * (1.0 - z) + drh * r).matrix();
  return out;
}

}  // namespace

CellState zero_state(UnitType type, Eigen::Index units, Eigen::Index batch) {
  CellState s;
  s.h = Matrix::Zero(units, batch);
  if (type != UnitType::GRU) s.c = Matrix::Zero(units, batch);
  return s;
}

CellState cell_forward(UnitType type, const CellWeights& w, const Matrix& x,
                       const CellState& state, CellCache* cache) {
  switch (type) {
    case UnitType::LSTM: return lstm_forward(false, w, x, state, cache);
    case UnitType::LayerNormLSTM: return lstm_forward(true, w, x, state, cache);
    case UnitType::GRU: return gru_forward(w, x, state, cache);
  }
  return {};
}

CellInputGrads cell_backward(UnitType type, const CellWeights& w,
                             const CellCache& cache, const CellState& dout,
                             CellWeights& grads) {
  switch (type) {
    case UnitType::LSTM: return lstm_backward(false, w, cache, dout, grads);
    case UnitType::LayerNormLSTM: return lstm_backward(true, w, cache, dout, grads);
    case UnitType::GRU: return gru_backward(w, cache, dout, grads);
  }
  return {};
}

CellState lstm_step(const Matrix& x, const CellState& state, const CellWeights& w) {
  return lstm_forward(false, w, x, state, nullptr);
}

Matrix gru_step(const Matrix& x, const Matrix& h, const CellWeights& w) {
  return gru_forward(w, x, CellState{h, Matrix()}, nullptr).h;
}

CellState layer_norm_lstm_step(const Matrix& x, const CellState& state,
                               const CellWeights& w) {
  return lstm_forward(true, w, x, state, nullptr);
}

}  // namespace autoformal
