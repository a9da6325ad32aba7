#pragma once

#include "autoformal/hyperparams.hpp"
#include "autoformal/params.hpp"
#include "autoformal/tensor.hpp"

namespace autoformal {

/// Recurrent state for a batch laid out column-wise (d x B). `c` is empty for
/// GRU cells.
struct CellState {
  Matrix h;
  Matrix c;
};

CellState zero_state(UnitType type, Eigen::Index units, Eigen::Index batch);

inline constexpr double kLayerNormEpsilon = 1e-6;

/// Intermediate values kept by cell_forward for cell_backward.
struct CellCache {
  Matrix xh;        ///< [x; h_prev]
  Matrix gates;     ///< post-nonlinearity gate activations
  Matrix c_prev;    ///< LSTM variants
  Matrix tanh_c;    ///< LSTM variants: tanh(c')
  Matrix normed;    ///< LayerNormLSTM: normalized pre-activations
  Matrix inv_std;   ///< LayerNormLSTM: gates x B, 1/sqrt(var + eps)
  Matrix h_prev;    ///< GRU
  Matrix xrh;       ///< GRU: [x; r * h_prev]
  Matrix candidate; ///< GRU: tanh candidate
};

/// One step of `type`. Throws Error{NonFiniteActivation} when the new state
/// holds a NaN or infinity.
CellState cell_forward(UnitType type, const CellWeights& w, const Matrix& x,
                       const CellState& state, CellCache* cache = nullptr);

struct CellInputGrads {
  Matrix dx;
  CellState dstate;
};

/// Backpropagates (dh', dc') through one cached step, accumulating weight
/// gradients into `grads` (same layout as `w`).
CellInputGrads cell_backward(UnitType type, const CellWeights& w,
                             const CellCache& cache, const CellState& dout,
                             CellWeights& grads);

// Single-purpose entry points; x and state columns are batch items.
CellState lstm_step(const Matrix& x, const CellState& state, const CellWeights& w);
Matrix gru_step(const Matrix& x, const Matrix& h, const CellWeights& w);
CellState layer_norm_lstm_step(const Matrix& x, const CellState& state,
                               const CellWeights& w);

}  // namespace autoformal
