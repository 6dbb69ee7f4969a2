#include "kkt.hpp"

#include <cmath>

#include <lapacke.h>

namespace gridopt::detail {

namespace {
constexpr double kPivotZero = 1e-14;
}

KktSolver::KktSolver(int dim, bool use_dense) : dim_(dim), dense_(use_dense) {
  if (dense_) {
    dense_mat_.resize(dim_, dim_);
  } else {
    sparse_mat_.resize(dim_, dim_);
  }
}

void KktSolver::begin() { triplets_.clear(); }

void KktSolver::add(int row, int col, double value) { triplets_.emplace_back(row, col, value); }

Inertia KktSolver::factorize() {
  Inertia out;
  if (dense_) {
    dense_mat_.setZero();
    for (const auto& t : triplets_) {
      dense_mat_(t.row(), t.col()) += t.value();
      if (t.row() != t.col()) dense_mat_(t.col(), t.row()) += t.value();
    }
    dense_factor_ = dense_mat_;
    ipiv_.assign(static_cast<size_t>(dim_), 0);
    int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', dim_, dense_factor_.data(), dim_,
                              ipiv_.data());
    if (info < 0) return out;
    out.factor_ok = true;
    // Walk the block-diagonal D of the Bunch-Kaufman factorization.
    for (int k = 0; k < dim_;) {
      if (ipiv_[static_cast<size_t>(k)] > 0) {
        double d = dense_factor_(k, k);
        if (std::abs(d) <= kPivotZero) ++out.zero;
        else if (d > 0) ++out.pos;
        else ++out.neg;
        ++k;
      } else {
        // 2x2 pivot: eigenvalues of [[a, b], [b, c]]
        double a = dense_factor_(k, k);
        double b = dense_factor_(k + 1, k);
        double c = dense_factor_(k + 1, k + 1);
        double det = a * c - b * b;
        if (det < 0) {
          ++out.pos;
          ++out.neg;
        } else if (std::abs(det) <= kPivotZero * kPivotZero) {
          ++out.zero;
          (a + c > 0 ? out.pos : out.neg) += 1;
        } else {
          (a + c > 0 ? out.pos : out.neg) += 2;
        }
        k += 2;
      }
    }
    if (info > 0) out.zero = std::max(out.zero, 1);
    return out;
  }

  sparse_mat_.setFromTriplets(triplets_.begin(), triplets_.end());
  if (!pattern_analyzed_) {
    ldlt_.analyzePattern(sparse_mat_);
    pattern_analyzed_ = true;
  }
  ldlt_.factorize(sparse_mat_);
  if (ldlt_.info() != Eigen::Success) return out;
  out.factor_ok = true;
  const auto& d = ldlt_.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    double di = d[i];
    if (!std::isfinite(di) || std::abs(di) <= kPivotZero) ++out.zero;
    else if (di > 0) ++out.pos;
    else ++out.neg;
  }
  return out;
}

Eigen::VectorXd KktSolver::solve(const Eigen::VectorXd& rhs) const {
  if (dense_) {
    Eigen::VectorXd x = rhs;
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', dim_, 1, dense_factor_.data(), dim_, ipiv_.data(),
                   x.data(), dim_);
    return x;
  }
  return ldlt_.solve(rhs);
}

Eigen::VectorXd KktSolver::apply(const Eigen::VectorXd& d) const {
  if (dense_) return dense_mat_.selfadjointView<Eigen::Lower>() * d;
  return sparse_mat_.selfadjointView<Eigen::Lower>() * d;
}

}  // namespace gridopt::detail
