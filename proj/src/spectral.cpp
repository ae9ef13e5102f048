#include "glsid/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "glsid/errors.hpp"

namespace glsid {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSymmetryTolerance = 1e-12;

Eigen::JacobiSVD<Matrix> svd_of(const Matrix& b, int options) {
  Eigen::JacobiSVD<Matrix> svd;
  svd.compute(b, options);
  return svd;
}

Index count_above(const Vector& descending, double tol) {
  Index n = 0;
  while (n < descending.size() && descending(n) > tol) ++n;
  return n;
}

}  // namespace

double TolerancePolicy::resolve(double largest, Index rows, Index cols) const {
  if (absolute) return *absolute;
  return static_cast<double>(std::max(rows, cols)) * kEps * std::abs(largest);
}

Matrix SpectralDecomposition::pseudo_inverse() const {
  if (rank == 0) return Matrix::Zero(source_dim, source_dim);
  return range_vectors * eigenvalues.cwiseInverse().asDiagonal() * range_vectors.transpose();
}

Matrix SpectralDecomposition::whitener() const {
  return eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * range_vectors.transpose();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(what) + " contains non-finite entries");
  }
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  if (top.cols() != bottom.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "stack_rows: column counts differ");
  }
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

Matrix stack_cols(const Matrix& left, const Matrix& right) {
  if (left.cols() == 0) return right;
  if (right.cols() == 0) return left;
  if (left.rows() != right.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "stack_cols: row counts differ");
  }
  Matrix out(left.rows(), left.cols() + right.cols());
  out << left, right;
  return out;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

void normalize_column_signs(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < m.rows(); ++i) {
      const double a = std::abs(m(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (m.rows() > 0 && m(best, j) < 0.0) m.col(j) = -m.col(j);
  }
}

SpectralDecomposition spectral_decompose(const Matrix& s, const TolerancePolicy& tol) {
  if (s.rows() != s.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "spectral_decompose: matrix is not square");
  }
  require_finite(s, "spectral_decompose input");
  const Index t = s.rows();

  SpectralDecomposition out;
  out.source_dim = t;
  if (t == 0) return out;

  const double scale = max_abs(s);
  if (max_abs(s - s.transpose()) > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::NonSymmetric, "spectral_decompose: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(s));
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NonFinite, "spectral_decompose: eigensolver did not converge");
  }
  // Eigen returns ascending eigenvalues.
  const Vector& values = eig.eigenvalues();
  const Matrix& vectors = eig.eigenvectors();
  const double largest = std::max(std::abs(values(0)), std::abs(values(t - 1)));
  const double threshold = tol.resolve(largest, t, t);
  if (values(0) < -threshold) {
    throw Error(ErrorCode::IndefiniteInput,
                "spectral_decompose: matrix has a negative eigenvalue below -tolerance");
  }

  Index null_count = 0;
  while (null_count < t && values(null_count) <= threshold) ++null_count;
  const Index m = t - null_count;

  out.rank = m;
  out.tolerance = threshold;
  out.null_vectors = vectors.leftCols(null_count);
  out.range_vectors.resize(t, m);
  out.eigenvalues.resize(m);
  for (Index j = 0; j < m; ++j) {
    out.range_vectors.col(j) = vectors.col(t - 1 - j);
    out.eigenvalues(j) = values(t - 1 - j);
  }
  normalize_column_signs(out.null_vectors);
  normalize_column_signs(out.range_vectors);
  return out;
}

Matrix pseudo_inverse(const Matrix& s, const TolerancePolicy& tol) {
  return spectral_decompose(s, tol).pseudo_inverse();
}

Matrix moore_penrose(const Matrix& b, const TolerancePolicy& tol) {
  require_finite(b, "moore_penrose input");
  if (b.size() == 0) return Matrix::Zero(b.cols(), b.rows());
  auto svd = svd_of(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double threshold = tol.resolve(sv(0), b.rows(), b.cols());
  const Index r = count_above(sv, threshold);
  return svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal() *
         svd.matrixU().leftCols(r).transpose();
}

Matrix null_space_basis(const Matrix& b, const TolerancePolicy& tol) {
  require_finite(b, "null_space_basis input");
  const Index k = b.cols();
  if (b.rows() == 0 || k == 0) return Matrix::Identity(k, k);
  auto svd = svd_of(b, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double threshold = tol.resolve(sv(0), b.rows(), b.cols());
  const Index r = count_above(sv, threshold);
  Matrix n = svd.matrixV().rightCols(k - r);
  normalize_column_signs(n);
  return n;
}

RankReport numeric_rank(const Matrix& b, const TolerancePolicy& tol) {
  require_finite(b, "numeric_rank input");
  RankReport out;
  if (b.size() == 0) {
    out.values.resize(0);
    return out;
  }
  auto svd = svd_of(b, 0);
  out.values = svd.singularValues();
  out.tolerance = tol.resolve(out.values(0), b.rows(), b.cols());
  out.numeric_rank = count_above(out.values, out.tolerance);
  out.deficient = out.numeric_rank < std::min(b.rows(), b.cols());
  return out;
}

}  // namespace glsid
