#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace glsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Rank tolerance rule shared by every rank decision in the library.
///
/// The default is the relative rule max(rows, cols) * eps * largest, where
/// `largest` is the largest eigen- or singular value. Setting `absolute`
/// replaces the rule by a fixed threshold. Values equal to the tolerance are
/// treated as zero.
struct TolerancePolicy {
  std::optional<double> absolute;

  double resolve(double largest, Index rows, Index cols) const;
};

/// Partitioned eigensystem of a symmetric nonnegative definite matrix:
/// source = range_vectors * diag(eigenvalues) * range_vectors'.
struct SpectralDecomposition {
  Index source_dim = 0;
  Matrix null_vectors;   // A: T x (T - M), spans the null space
  Matrix range_vectors;  // F: T x M
  Vector eigenvalues;    // M positive values, descending
  Index rank = 0;
  double tolerance = 0.0;

  /// F * diag(eigenvalues)^-1 * F'
  Matrix pseudo_inverse() const;
  /// diag(eigenvalues)^(-1/2) * F', the whitening map onto the range.
  Matrix whitener() const;
};

struct RankReport {
  Index numeric_rank = 0;
  Vector values;  // singular or eigen values, descending
  double tolerance = 0.0;
  bool deficient = false;
};

SpectralDecomposition spectral_decompose(const Matrix& s, const TolerancePolicy& tol = {});

Matrix pseudo_inverse(const Matrix& s, const TolerancePolicy& tol = {});

/// Moore-Penrose inverse of an arbitrary rectangular matrix (SVD based).
Matrix moore_penrose(const Matrix& b, const TolerancePolicy& tol = {});

/// Orthonormal basis of {x : b x = 0}; zero columns when b has full column rank.
Matrix null_space_basis(const Matrix& b, const TolerancePolicy& tol = {});

RankReport numeric_rank(const Matrix& b, const TolerancePolicy& tol = {});

// Small helpers used across modules.

void require_finite(const Matrix& m, const char* what);

/// Largest absolute entry; zero for empty matrices.
double max_abs(const Matrix& m);

/// Vertical concatenation; either block may have zero rows.
Matrix stack_rows(const Matrix& top, const Matrix& bottom);

/// Horizontal concatenation; either block may have zero columns.
Matrix stack_cols(const Matrix& left, const Matrix& right);

Matrix block_diagonal(const std::vector<Matrix>& blocks);

/// Flip column signs so the first entry of largest magnitude is positive.
void normalize_column_signs(Matrix& m);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace glsid
