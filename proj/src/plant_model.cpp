#include "dcmpc/plant_model.hpp"

#include <sstream>

#include "dcmpc/errors.hpp"

namespace dcmpc {
namespace {

[[noreturn]] void mismatch(const std::string& msg) { throw Error(ErrorKind::DimensionMismatch, msg); }

std::string at(int i, int j) {
  std::ostringstream os;
  os << "(" << i + 1 << "," << j + 1 << ")";
  return os.str();
}

int count_agents(const DimsTable& dims) {
  const int M = static_cast<int>(dims.size());
  for (const auto& row : dims) {
    if (static_cast<int>(row.size()) != M) mismatch("dims table must be square");
  }
  return M;
}

// Offset of x_ij inside the original state vector.
DimsTable original_offsets(const DimsTable& dims) {
  const int M = count_agents(dims);
  DimsTable off(M, std::vector<int>(M, 0));
  int acc = 0;
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      off[i][j] = acc;
      acc += dims[i][j];
    }
  }
  return off;
}

}  // namespace

VectorXd PermutationMap::transform(const VectorXd& x) const {
  if (x.size() != size()) mismatch("state length does not match permutation");
  VectorXd out(size());
  for (int k = 0; k < size(); ++k) out(k) = x(to_original[k]);
  return out;
}

VectorXd PermutationMap::restore(const VectorXd& xbar) const {
  if (xbar.size() != size()) mismatch("state length does not match permutation");
  VectorXd out(size());
  for (int k = 0; k < size(); ++k) out(to_original[k]) = xbar(k);
  return out;
}

MatrixXd PermutationMap::congruence(const MatrixXd& x) const {
  if (x.rows() != size() || x.cols() != size()) mismatch("matrix size does not match permutation");
  MatrixXd out(size(), size());
  for (int r = 0; r < size(); ++r) {
    for (int c = 0; c < size(); ++c) out(r, c) = x(to_original[r], to_original[c]);
  }
  return out;
}

MatrixXd PermutationMap::inverse_congruence(const MatrixXd& xbar) const {
  if (xbar.rows() != size() || xbar.cols() != size()) mismatch("matrix size does not match permutation");
  MatrixXd out(size(), size());
  for (int r = 0; r < size(); ++r) {
    for (int c = 0; c < size(); ++c) out(to_original[r], to_original[c]) = xbar(r, c);
  }
  return out;
}

std::vector<int> TransformedPlant::input_dims() const {
  std::vector<int> m;
  m.reserve(Btilde.size());
  for (const auto& b : Btilde) m.push_back(static_cast<int>(b.cols()));
  return m;
}

MatrixXd TransformedPlant::global_A() const { return block_diagonal(Abar); }

MatrixXd TransformedPlant::global_B() const { return block_diagonal(Btilde); }

CompositePlant build_composite(const SubsystemBlocks& blocks) {
  const int M = blocks.M;
  if (M < 1) mismatch("at least one subsystem is required");
  if (count_agents(blocks.dims) != M) mismatch("dims table size differs from M");
  if (static_cast<int>(blocks.A.size()) != M || static_cast<int>(blocks.B.size()) != M ||
      static_cast<int>(blocks.input_dims.size()) != M) {
    mismatch("A, B and input_dims need one entry per subsystem");
  }
  for (int i = 0; i < M; ++i) {
    if (static_cast<int>(blocks.A[i].size()) != M || static_cast<int>(blocks.B[i].size()) != M) {
      mismatch("A and B need M blocks per subsystem");
    }
    for (int j = 0; j < M; ++j) {
      const int nij = blocks.dims[i][j];
      if (nij < 0) mismatch("negative block dimension at " + at(i, j));
      const auto& a = blocks.A[i][j];
      const auto& b = blocks.B[i][j];
      if (a.rows() != nij || a.cols() != nij) mismatch("A" + at(i, j) + " is not n_ij x n_ij");
      if (b.rows() != nij || b.cols() != blocks.input_dims[j]) {
        mismatch("B" + at(i, j) + " is not n_ij x m_j");
      }
    }
  }

  const auto off = original_offsets(blocks.dims);
  int n = 0;
  for (const auto& row : blocks.dims) {
    for (int d : row) n += d;
  }

  CompositePlant plant;
  plant.n = n;
  plant.dims = blocks.dims;
  plant.A = MatrixXd::Zero(n, n);
  plant.B.assign(M, MatrixXd());
  for (int j = 0; j < M; ++j) plant.B[j] = MatrixXd::Zero(n, blocks.input_dims[j]);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const int nij = blocks.dims[i][j];
      plant.A.block(off[i][j], off[i][j], nij, nij) = blocks.A[i][j];
      plant.B[j].block(off[i][j], 0, nij, blocks.input_dims[j]) = blocks.B[i][j];
    }
  }
  return plant;
}

PermutationMap build_permutation(const DimsTable& dims) {
  const int M = count_agents(dims);
  const auto off = original_offsets(dims);
  PermutationMap map;
  map.dims = dims;
  map.bar_dims.assign(M, 0);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      if (dims[i][j] < 0) mismatch("negative block dimension at " + at(i, j));
      map.bar_dims[j] += dims[i][j];
    }
  }
  // Zero-sized parts contribute no rows; they are skipped naturally.
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      for (int k = 0; k < dims[i][j]; ++k) map.to_original.push_back(off[i][j] + k);
    }
  }
  const int n = map.size();
  map.T = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) map.T(map.to_original[k], k) = 1.0;
  return map;
}

TransformedPlant transform_plant(const CompositePlant& plant, const PermutationMap& map) {
  if (plant.dims != map.dims) mismatch("permutation was built from a different dims table");
  const int M = map.agents();
  if (static_cast<int>(plant.B.size()) != M) mismatch("one input matrix per agent expected");
  if (plant.A.rows() != map.size()) mismatch("plant state size differs from permutation");

  const MatrixXd abar = map.congruence(plant.A);
  const auto off = block_offsets(map.bar_dims);

  // Everything outside the diagonal blocks must vanish.
  const MatrixXd abar_blocks = keep_diagonal_blocks(abar, map.bar_dims);
  if (norm_inf(abar - abar_blocks) > 0.0) {
    throw Error(ErrorKind::StructureViolation, "T^-1 A T is not block diagonal");
  }

  TransformedPlant out;
  out.map = map;
  for (int i = 0; i < M; ++i) {
    const int ni = map.bar_dims[i];
    out.Abar.push_back(abar.block(off[i], off[i], ni, ni));
    const MatrixXd bbar = map.T.transpose() * plant.B[i];
    for (Eigen::Index r = 0; r < bbar.rows(); ++r) {
      const bool inside = r >= off[i] && r < off[i + 1];
      if (!inside && norm_inf(bbar.row(r)) > 0.0) {
        throw Error(ErrorKind::StructureViolation,
                    "T^-1 B_" + std::to_string(i + 1) + " has entries outside block row " +
                        std::to_string(i + 1));
      }
    }
    out.Btilde.push_back(bbar.middleRows(off[i], ni));
  }
  return out;
}

CompositePlant restore_plant(const TransformedPlant& plant) {
  const auto& map = plant.map;
  CompositePlant out;
  out.n = map.size();
  out.dims = map.dims;
  out.A = map.inverse_congruence(plant.global_A());
  const MatrixXd bglobal = plant.global_B();
  const auto cols = block_offsets(plant.input_dims());
  for (int i = 0; i < plant.agents(); ++i) {
    out.B.push_back(map.T * bglobal.middleCols(cols[i], cols[i + 1] - cols[i]));
  }
  return out;
}

MatrixXd transform_weight(const std::vector<MatrixXd>& blocks, const std::vector<double>& rho,
                          const PermutationMap& map) {
  const int M = map.agents();
  if (static_cast<int>(blocks.size()) != M || static_cast<int>(rho.size()) != M) {
    mismatch("one weight block and one rho per subsystem expected");
  }
  std::vector<MatrixXd> scaled;
  for (int i = 0; i < M; ++i) {
    int ni = 0;
    for (int d : map.dims[i]) ni += d;
    if (blocks[i].rows() != ni || blocks[i].cols() != ni) {
      mismatch("weight of subsystem " + std::to_string(i + 1) + " must be n_i x n_i");
    }
    scaled.push_back(rho[i] * symmetrize(blocks[i]));
  }
  return map.congruence(block_diagonal(scaled));
}

std::vector<MatrixXd> original_blocks(const MatrixXd& xbar, const std::vector<double>& rho,
                                      const PermutationMap& map) {
  const MatrixXd x = map.inverse_congruence(xbar);
  std::vector<int> sizes;
  for (const auto& row : map.dims) {
    int s = 0;
    for (int d : row) s += d;
    sizes.push_back(s);
  }
  const auto off = block_offsets(sizes);
  std::vector<MatrixXd> out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out.push_back(x.block(off[i], off[i], sizes[i], sizes[i]) / rho[i]);
  }
  return out;
}

std::pair<MatrixXd, MatrixXd> split_hollow(const MatrixXd& xbar, const std::vector<int>& bar_dims) {
  MatrixXd diag = keep_diagonal_blocks(xbar, bar_dims);
  MatrixXd hollow = xbar - diag;
  // Exact zeros on the diagonal blocks, independent of rounding in the subtraction.
  const auto off = block_offsets(bar_dims);
  for (std::size_t i = 0; i < bar_dims.size(); ++i) {
    hollow.block(off[i], off[i], bar_dims[i], bar_dims[i]).setZero();
  }
  return {diag, hollow};
}

void require_psd(const MatrixXd& x, const char* what) {
  const double lmin = min_eigenvalue(x);
  if (lmin < -1e-9) {
    throw Error(ErrorKind::NotPSD, std::string(what) + " has eigenvalue " + std::to_string(lmin));
  }
}

void require_pd(const MatrixXd& x, const char* what) {
  const double lmin = min_eigenvalue(x);
  const double tr = x.trace();
  if (!(lmin > 0.0) || lmin < 1e-12 * tr) {
    throw Error(ErrorKind::NotPD, std::string(what) + " has eigenvalue " + std::to_string(lmin));
  }
}

TransformedCost transform_cost(const CostSpec& cost, const PermutationMap& map) {
  const int M = map.agents();
  if (static_cast<int>(cost.Q.size()) != M || static_cast<int>(cost.R.size()) != M ||
      static_cast<int>(cost.P.size()) != M || static_cast<int>(cost.rho.size()) != M) {
    mismatch("cost needs Q, R, P and rho for every subsystem");
  }
  for (int i = 0; i < M; ++i) {
    const std::string tag = std::to_string(i + 1);
    if (!(cost.rho[i] > 0.0)) throw Error(ErrorKind::NotPD, "rho_" + tag + " must be positive");
    require_psd(cost.Q[i], ("Q_" + tag).c_str());
    require_pd(cost.R[i], ("R_" + tag).c_str());
    require_pd(cost.P[i], ("P_" + tag).c_str());
  }

  TransformedCost out;
  out.bar_dims = map.bar_dims;
  out.Qbar = transform_weight(cost.Q, cost.rho, map);
  out.Pbar = transform_weight(cost.P, cost.rho, map);
  std::vector<MatrixXd> r;
  for (int i = 0; i < M; ++i) r.push_back(cost.rho[i] * symmetrize(cost.R[i]));
  out.Rglobal = block_diagonal(r);
  std::tie(out.Qa, out.Qtilde) = split_hollow(out.Qbar, map.bar_dims);
  std::tie(out.Pa, out.Ptilde) = split_hollow(out.Pbar, map.bar_dims);
  return out;
}

}  // namespace dcmpc
