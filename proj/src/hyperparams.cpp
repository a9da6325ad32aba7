#include "autoformal/hyperparams.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "autoformal/error.hpp"

namespace autoformal {
namespace {

// Lowercase and drop '_', '-' and spaces so "Scaled Luong", "scaled_luong"
// and "ScaledLuong" all compare equal.
std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view what, std::string_view value) {
  throw Error(ErrorKind::InvalidHyperParams,
              "unknown " + std::string(what) + " '" + std::string(value) + "'");
}

}  // namespace

std::string_view to_string(UnitType v) noexcept {
  switch (v) {
    case UnitType::LSTM: return "lstm";
    case UnitType::GRU: return "gru";
    case UnitType::LayerNormLSTM: return "layer_norm_lstm";
  }
  return "?";
}

std::string_view to_string(AttentionType v) noexcept {
  switch (v) {
    case AttentionType::None: return "none";
    case AttentionType::Bahdanau: return "bahdanau";
    case AttentionType::NormedBahdanau: return "normed_bahdanau";
    case AttentionType::Luong: return "luong";
    case AttentionType::ScaledLuong: return "scaled_luong";
  }
  return "?";
}

std::string_view to_string(OptimizerType v) noexcept {
  return v == OptimizerType::SGD ? "sgd" : "adam";
}

std::string_view to_string(EncoderType v) noexcept {
  return v == EncoderType::Unidirectional ? "uni" : "bi";
}

UnitType parse_unit_type(std::string_view s) {
  const auto n = normalize(s);
  if (n == "lstm") return UnitType::LSTM;
  if (n == "gru") return UnitType::GRU;
  if (n == "layernormlstm") return UnitType::LayerNormLSTM;
  bad_value("unit type", s);
}

AttentionType parse_attention(std::string_view s) {
  const auto n = normalize(s);
  if (n == "none" || n == "noattention" || n.empty()) return AttentionType::None;
  if (n == "bahdanau") return AttentionType::Bahdanau;
  if (n == "normedbahdanau") return AttentionType::NormedBahdanau;
  if (n == "luong") return AttentionType::Luong;
  if (n == "scaledluong") return AttentionType::ScaledLuong;
  bad_value("attention", s);
}

OptimizerType parse_optimizer(std::string_view s) {
  const auto n = normalize(s);
  if (n == "sgd") return OptimizerType::SGD;
  if (n == "adam") return OptimizerType::Adam;
  bad_value("optimizer", s);
}

EncoderType parse_encoder_type(std::string_view s) {
  const auto n = normalize(s);
  if (n == "uni" || n == "unidirectional") return EncoderType::Unidirectional;
  if (n == "bi" || n == "bidirectional") return EncoderType::Bidirectional;
  bad_value("encoder type", s);
}

void HyperParams::validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::InvalidHyperParams, msg);
  };
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (encoder_type == EncoderType::Bidirectional && num_layers % 2 != 0) {
    fail("a bidirectional encoder needs an even number of layers");
  }
  if (num_units < 1) fail("num_units must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!std::isfinite(forget_bias)) fail("forget_bias must be finite");
  if (learning_rate && !(*learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (train_steps < 0) fail("train_steps must be >= 0");
  if (!(clip_norm > 0.0)) fail("clip_norm must be > 0");
  if (max_src_len < 1 || max_tgt_len < 1) fail("length caps must be >= 1");
}

std::string HyperParams::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "unit_type=" << to_string(unit_type) << '\n'
     << "attention=" << to_string(attention) << '\n'
     << "num_layers=" << num_layers << '\n'
     << "residual=" << (residual ? "true" : "false") << '\n'
     << "optimizer=" << to_string(optimizer) << '\n'
     << "encoder_type=" << to_string(encoder_type) << '\n'
     << "num_units=" << num_units << '\n'
     << "dropout=" << dropout << '\n'
     << "forget_bias=" << forget_bias << '\n'
     << "learning_rate=" << effective_learning_rate() << '\n'
     << "batch_size=" << batch_size << '\n'
     << "train_steps=" << train_steps << '\n'
     << "seed=" << seed << '\n'
     << "clip_norm=" << clip_norm << '\n'
     << "max_src_len=" << max_src_len << '\n'
     << "max_tgt_len=" << max_tgt_len << '\n';
  return os.str();
}

}  // namespace autoformal
