#pragma once

// Block-structured plant assembly and the state permutation that regroups
// states by the input that drives them.
//
// Original ordering:    x    = [x_11, ..., x_1M, x_21, ..., x_MM]
// Transformed ordering: xbar = [x_11, x_21, ..., x_M1, x_12, ..., x_MM]
// with x = T * xbar.  After the permutation, xbar_i = [x_1i, ..., x_Mi] is
// driven by u_i alone.

#include <optional>
#include <vector>

#include "dcmpc/linalg.hpp"

namespace dcmpc {

/// dims[i][j] = n_ij, the size of the part of subsystem i driven by input j.
using DimsTable = std::vector<std::vector<int>>;

struct SubsystemBlocks {
  int M = 0;
  DimsTable dims;
  std::vector<std::vector<MatrixXd>> A;  // A[i][j]: n_ij x n_ij
  std::vector<std::vector<MatrixXd>> B;  // B[i][j]: n_ij x m_j
  std::vector<std::vector<MatrixXd>> C;  // optional, p_i x n_ij; stored only
  std::vector<int> input_dims;           // m_j
};

struct CompositePlant {
  MatrixXd A;               // diag(A_1, ..., A_M), A_i = diag(A_i1, ..., A_iM)
  std::vector<MatrixXd> B;  // B_i: n x m_i
  int n = 0;
  DimsTable dims;
};

struct PermutationMap {
  MatrixXd T;                 // x = T * xbar
  std::vector<int> bar_dims;  // nbar_i = sum_j n_ji
  DimsTable dims;
  std::vector<int> to_original;  // to_original[k] = original index of xbar(k)

  int size() const { return static_cast<int>(to_original.size()); }
  int agents() const { return static_cast<int>(bar_dims.size()); }

  VectorXd transform(const VectorXd& x) const;  // T^T x
  VectorXd restore(const VectorXd& xbar) const;  // T xbar
  /// T^T X T.
  MatrixXd congruence(const MatrixXd& x) const;
  /// T Xbar T^T.
  MatrixXd inverse_congruence(const MatrixXd& xbar) const;
};

struct TransformedPlant {
  std::vector<MatrixXd> Abar;    // nbar_i x nbar_i
  std::vector<MatrixXd> Btilde;  // nbar_i x m_i
  PermutationMap map;

  int agents() const { return static_cast<int>(Abar.size()); }
  int state_dim() const { return map.size(); }
  std::vector<int> input_dims() const;
  /// diag(Abar_1, ..., Abar_M).
  MatrixXd global_A() const;
  /// [Bbar_1, ..., Bbar_M], Bbar_i zero outside block row i.
  MatrixXd global_B() const;
};

struct CostSpec {
  std::vector<MatrixXd> Q;
  std::vector<MatrixXd> R;
  std::vector<MatrixXd> P;  // empty when terminal weights are still to be selected
  std::vector<double> rho;
  int horizon = 1;
};

struct TransformedCost {
  MatrixXd Qbar, Pbar;
  MatrixXd Rglobal;  // diag(rho_i R_i)
  MatrixXd Qa, Pa;   // diagonal blocks of Qbar, Pbar
  MatrixXd Qtilde, Ptilde;  // hollow residuals
  std::vector<int> bar_dims;
};

CompositePlant build_composite(const SubsystemBlocks& blocks);

PermutationMap build_permutation(const DimsTable& dims);

TransformedPlant transform_plant(const CompositePlant& plant, const PermutationMap& map);

/// Inverse of transform_plant: (T Abar T^T, T Bbar_i).
CompositePlant restore_plant(const TransformedPlant& plant);

/// T^T diag(rho_i X_i) T.
MatrixXd transform_weight(const std::vector<MatrixXd>& blocks, const std::vector<double>& rho,
                          const PermutationMap& map);

/// Recovers X_i = (T Xbar T^T)_ii / rho_i; off-subsystem blocks are discarded.
std::vector<MatrixXd> original_blocks(const MatrixXd& xbar, const std::vector<double>& rho,
                                      const PermutationMap& map);

/// Requires Q_i, P_i >= 0, R_i > 0 and rho_i > 0; symmetrizes weights on the way in.
TransformedCost transform_cost(const CostSpec& cost, const PermutationMap& map);

/// Splits a transformed weight into its diagonal-block part and hollow residual.
std::pair<MatrixXd, MatrixXd> split_hollow(const MatrixXd& xbar, const std::vector<int>& bar_dims);

/// Throws NotPSD unless min eig >= -1e-9.
void require_psd(const MatrixXd& x, const char* what);
/// Throws NotPD unless min eig >= 1e-12 * trace (and > 0).
void require_pd(const MatrixXd& x, const char* what);

}  // namespace dcmpc
