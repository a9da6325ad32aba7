#include "autoformal/params.hpp"

#include <cmath>

#include "autoformal/rng.hpp"

namespace autoformal {
namespace {

template <class Cell, class Fn>
void visit_cell(Cell& c, const std::string& prefix, Fn&& fn) {
  fn(prefix + "/w", c.w);
  fn(prefix + "/b", c.b);
  fn(prefix + "/w_cand", c.w_cand);
  fn(prefix + "/b_cand", c.b_cand);
  fn(prefix + "/gain", c.gain);
  fn(prefix + "/shift", c.shift);
}

// Visits all tensors, populated or not, in canonical order.
template <class Params, class Fn>
void visit(Params& p, Fn&& fn) {
  fn("src_embedding", p.src_embedding);
  fn("tgt_embedding", p.tgt_embedding);
  for (std::size_t i = 0; i < p.encoder_cells.size(); ++i) {
    visit_cell(p.encoder_cells[i], "encoder/" + std::to_string(i), fn);
  }
  for (std::size_t i = 0; i < p.decoder_cells.size(); ++i) {
    visit_cell(p.decoder_cells[i], "decoder/" + std::to_string(i), fn);
  }
  fn("bridge", p.bridge);
  fn("attention/score", p.attention.score);
  fn("attention/scale", p.attention.scale);
  fn("attention/query", p.attention.query);
  fn("attention/key", p.attention.key);
  fn("attention/v", p.attention.v);
  fn("attention/bias", p.attention.bias);
  fn("attention/combine", p.attention.combine);
  fn("output_projection", p.output_projection);
}

CellWeights make_cell(UnitType type, Eigen::Index d) {
  const Eigen::Index gates = gate_count(type) * d;
  CellWeights c;
  c.w = Matrix::Zero(gates, 2 * d);
  switch (type) {
    case UnitType::LSTM:
      c.b = Matrix::Zero(gates, 1);
      break;
    case UnitType::GRU:
      c.b = Matrix::Zero(gates, 1);
      c.w_cand = Matrix::Zero(d, 2 * d);
      c.b_cand = Matrix::Zero(d, 1);
      break;
    case UnitType::LayerNormLSTM:
      c.gain = Matrix::Zero(gates, 1);
      c.shift = Matrix::Zero(gates, 1);
      break;
  }
  return c;
}

void set_cell_constants(UnitType type, Eigen::Index d, double forget_bias,
                        CellWeights& c) {
  // Gate order i, f, g, o: the forget block is rows [d, 2d).
  if (type == UnitType::LSTM) {
    c.b.middleRows(d, d).setConstant(forget_bias);
  } else if (type == UnitType::LayerNormLSTM) {
    c.gain.setOnes();
    c.shift.setZero();
    c.shift.middleRows(d, d).setConstant(forget_bias);
  }
}

}  // namespace

int gate_count(UnitType type) noexcept {
  return type == UnitType::GRU ? 2 : 4;
}

std::vector<NamedTensor> ModelParams::tensors() {
  std::vector<NamedTensor> out;
  visit(*this, [&](const std::string& name, Matrix& m) {
    if (m.size() > 0) out.push_back({name, &m});
  });
  return out;
}

std::vector<ConstNamedTensor> ModelParams::tensors() const {
  std::vector<ConstNamedTensor> out;
  visit(*this, [&](const std::string& name, const Matrix& m) {
    if (m.size() > 0) out.push_back({name, &m});
  });
  return out;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& t : z.tensors()) t.value->setZero();
  return z;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors()) {
    if (!t.value->allFinite()) return false;
  }
  return true;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.value->size());
  return n;
}

ModelParams init_params(const HyperParams& hp, std::size_t src_vocab_size,
                        std::size_t tgt_vocab_size) {
  hp.validate();
  const Eigen::Index d = hp.num_units;
  ModelParams p;
  p.src_embedding = Matrix::Zero(static_cast<Eigen::Index>(src_vocab_size), d);
  p.tgt_embedding = Matrix::Zero(static_cast<Eigen::Index>(tgt_vocab_size), d);
  for (int i = 0; i < hp.num_layers; ++i) {
    p.encoder_cells.push_back(make_cell(hp.unit_type, d));
    p.decoder_cells.push_back(make_cell(hp.unit_type, d));
  }
  if (hp.encoder_type == EncoderType::Bidirectional) p.bridge = Matrix::Zero(d, 2 * d);

  auto& a = p.attention;
  switch (hp.attention) {
    case AttentionType::None:
      break;
    case AttentionType::ScaledLuong:
      a.scale = Matrix::Zero(1, 1);
      [[fallthrough]];
    case AttentionType::Luong:
      a.score = Matrix::Zero(d, d);
      break;
    case AttentionType::NormedBahdanau:
      a.bias = Matrix::Zero(d, 1);
      a.scale = Matrix::Zero(1, 1);
      [[fallthrough]];
    case AttentionType::Bahdanau:
      a.query = Matrix::Zero(d, d);
      a.key = Matrix::Zero(d, d);
      a.v = Matrix::Zero(d, 1);
      break;
  }
  if (hp.attention != AttentionType::None) a.combine = Matrix::Zero(d, 2 * d);
  p.output_projection = Matrix::Zero(d, static_cast<Eigen::Index>(tgt_vocab_size));

  SplitMix64 rng(hp.seed);
  for (auto& t : p.tensors()) {
    Matrix& m = *t.value;
    // Column-major fill keeps the stream order independent of Eigen options.
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-0.1, 0.1);
    }
  }

  for (auto& c : p.encoder_cells) set_cell_constants(hp.unit_type, d, hp.forget_bias, c);
  for (auto& c : p.decoder_cells) set_cell_constants(hp.unit_type, d, hp.forget_bias, c);
  if (hp.attention == AttentionType::ScaledLuong) a.scale(0, 0) = 1.0;
  if (hp.attention == AttentionType::NormedBahdanau) {
    a.scale(0, 0) = std::sqrt(1.0 / static_cast<double>(d));
    a.bias.setZero();
  }
  return p;
}

ModelParams init_params(const HyperParams& hp, const corpus::Vocabulary& src,
                        const corpus::Vocabulary& tgt) {
  return init_params(hp, src.size(), tgt.size());
}

}  // namespace autoformal
