#include "dcmpc/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <numeric>

namespace dcmpc {

MatrixXd symmetrize(const MatrixXd& x) { return 0.5 * (x + x.transpose()); }

VectorXd symmetric_eigenvalues(const MatrixXd& x) {
  if (x.size() == 0) return VectorXd();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  return symmetric_eigenvalues(x).minCoeff();
}

double spectral_radius(const MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(x, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double sigma_max(const MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(x);
  return svd.singularValues()(0);
}

double norm_inf(const MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  return x.cwiseAbs().rowwise().sum().maxCoeff();
}

MatrixXd block_diagonal(const std::vector<MatrixXd>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

std::vector<int> block_offsets(const std::vector<int>& sizes) {
  std::vector<int> offsets(sizes.size() + 1, 0);
  std::partial_sum(sizes.begin(), sizes.end(), offsets.begin() + 1);
  return offsets;
}

MatrixXd keep_diagonal_blocks(const MatrixXd& x, const std::vector<int>& sizes) {
  MatrixXd out = MatrixXd::Zero(x.rows(), x.cols());
  const auto off = block_offsets(sizes);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out.block(off[i], off[i], sizes[i], sizes[i]) = x.block(off[i], off[i], sizes[i], sizes[i]);
  }
  return out;
}

}  // namespace dcmpc
