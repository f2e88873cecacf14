#pragma once

#include <Eigen/Core>

namespace sfbc {

/// Row-major dense matrix; rows are particles, columns are feature channels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace sfbc
