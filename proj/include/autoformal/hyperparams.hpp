#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace autoformal {

enum class UnitType : std::uint8_t { LSTM, GRU, LayerNormLSTM };
enum class AttentionType : std::uint8_t {
  None,
  Bahdanau,
  NormedBahdanau,
  Luong,
  ScaledLuong
};
enum class OptimizerType : std::uint8_t { SGD, Adam };
enum class EncoderType : std::uint8_t { Unidirectional, Bidirectional };

std::string_view to_string(UnitType v) noexcept;
std::string_view to_string(AttentionType v) noexcept;
std::string_view to_string(OptimizerType v) noexcept;
std::string_view to_string(EncoderType v) noexcept;

// Accept the names above plus the lowercase flag spellings ("lstm", "gru",
// "layer_norm_lstm", "normed_bahdanau", "scaled_luong", "uni", "bi", ...).
UnitType parse_unit_type(std::string_view s);
AttentionType parse_attention(std::string_view s);
OptimizerType parse_optimizer(std::string_view s);
EncoderType parse_encoder_type(std::string_view s);

/// One point of the experimental configuration space. Defaults are the common
/// settings shared by all reported experiments: 12000 steps, learning rate 1.0
/// (0.001 under Adam), forget bias 1.0, dropout 0.2, batch size 128, greedy
/// decoding, 2-layer unidirectional LSTM with 128 units and no attention.
struct HyperParams {
  UnitType unit_type = UnitType::LSTM;
  AttentionType attention = AttentionType::None;
  int num_layers = 2;
  bool residual = false;
  OptimizerType optimizer = OptimizerType::SGD;
  EncoderType encoder_type = EncoderType::Unidirectional;
  int num_units = 128;
  double dropout = 0.2;
  double forget_bias = 1.0;
  /// Unset means "optimizer default": 1.0 for SGD, 0.001 for Adam.
  std::optional<double> learning_rate;
  int batch_size = 128;
  int train_steps = 12000;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  int max_src_len = 100;
  int max_tgt_len = 100;

  double effective_learning_rate() const noexcept {
    if (learning_rate) return *learning_rate;
    return optimizer == OptimizerType::Adam ? 0.001 : 1.0;
  }

  /// Throws Error{InvalidHyperParams} on any violated constraint, including
  /// an odd layer count with a bidirectional encoder.
  void validate() const;

  /// `key=value` lines, stable order.
  std::string to_text() const;
};

}  // namespace autoformal
