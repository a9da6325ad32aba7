#pragma once

#include <Eigen/Dense>

namespace autoformal {

// All network arithmetic is IEEE double.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace autoformal
