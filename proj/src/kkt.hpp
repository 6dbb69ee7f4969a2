#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

namespace gridopt::detail {

struct Inertia {
  int pos = 0, neg = 0, zero = 0;
  bool factor_ok = false;
};

/// Symmetric indefinite solver for the condensed KKT system.  Entries are
/// supplied as lower-triangle triplets (duplicates are summed).  The dense
/// backend (LAPACK Bunch-Kaufman) reports exact inertia; the sparse backend
/// (LDL^T without pivoting) relies on the system being regularized
/// quasi-definite and reads the inertia off the diagonal of D.
class KktSolver {
 public:
  KktSolver(int dim, bool use_dense);

  int dim() const { return dim_; }
  bool dense() const { return dense_; }

  void begin();
  void add(int row, int col, double value);  // requires row >= col
  Inertia factorize();
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// K * d with the assembled (unfactored) matrix, for iterative refinement.
  Eigen::VectorXd apply(const Eigen::VectorXd& d) const;

 private:
  int dim_;
  bool dense_;

  std::vector<Eigen::Triplet<double>> triplets_;

  // dense backend
  Eigen::MatrixXd dense_mat_;
  Eigen::MatrixXd dense_factor_;
  std::vector<int> ipiv_;

  // sparse backend
  Eigen::SparseMatrix<double> sparse_mat_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
  bool pattern_analyzed_ = false;
};

}  // namespace gridopt::detail
