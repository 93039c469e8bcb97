#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dcmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// (X + Xᵀ)/2.
MatrixXd symmetrize(const MatrixXd& x);

/// Smallest eigenvalue of the symmetric part of `x`.
double min_eigenvalue(const MatrixXd& x);

/// Eigenvalues of the symmetric part of `x`, ascending.
VectorXd symmetric_eigenvalues(const MatrixXd& x);

double spectral_radius(const MatrixXd& x);

/// Largest singular value (induced 2-norm).
double sigma_max(const MatrixXd& x);

/// Max-abs-row-sum norm.
double norm_inf(const MatrixXd& x);

MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks);

/// Offsets of consecutive blocks with the given sizes; has sizes.size()+1 entries.
std::vector<int> block_offsets(const std::vector<int>& sizes);

/// Keeps only the diagonal blocks of `x` partitioned by `sizes`.
MatrixXd keep_diagonal_blocks(const MatrixXd& x, const std::vector<int>& sizes);

}  // namespace dcmpc
