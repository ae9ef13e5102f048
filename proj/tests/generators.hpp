#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "glsid/fe_panel.hpp"
#include "glsid/model.hpp"
#include "glsid/spectral.hpp"

namespace gen {

using glsid::Index;
using glsid::Matrix;
using glsid::Vector;

inline Matrix normal(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> z;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = z(rng);
  }
  return out;
}

inline Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Index uniform(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

// B B' with B dim x rank, so the rank is exact almost surely.
inline Matrix nnd(std::mt19937_64& rng, Index dim, Index rank) {
  const Matrix b = normal(rng, dim, rank);
  Matrix s = b * b.transpose();
  return (s + s.transpose()) / 2.0;
}

inline Matrix spd(std::mt19937_64& rng, Index dim) {
  Matrix s = nnd(rng, dim, dim) / static_cast<double>(dim) + 0.5 * Matrix::Identity(dim, dim);
  return (s + s.transpose()) / 2.0;
}

struct Regular {
  Vector y;
  Matrix x;
  Matrix omega;
};

// T <= 30, K <= 6, SPD Omega, generic y.
inline Regular regular(std::mt19937_64& rng) {
  const Index k = uniform(rng, 1, 6);
  const Index t = uniform(rng, k + 2, 30);
  return {normal(rng, t, 1).col(0), normal(rng, t, k), spd(rng, t)};
}

// Consistent restrictions: q rows with rank rk <= q, r = R b0.
inline glsid::LinearRestrictions restrictions(std::mt19937_64& rng, Index k, Index q, Index rk) {
  const Matrix r = normal(rng, q, rk) * normal(rng, rk, k);
  return glsid::LinearRestrictions::make(r, r * normal(rng, k, 1).col(0));
}

struct Panel {
  std::vector<Matrix> designs;
  std::vector<Vector> responses;
  Matrix sigma;
  std::vector<Matrix> blocks;
};

// n <= 6, m <= 5, K <= 3 with enough within variation for K slopes.
inline Panel panel(std::mt19937_64& rng) {
  Panel p;
  const Index k = uniform(rng, 1, 3);
  Index n = 0;
  Index m = 0;
  do {
    n = uniform(rng, 1, 6);
    m = uniform(rng, 2, 5);
  } while (n * (m - 1) <= k);
  p.sigma = spd(rng, m);
  for (Index i = 0; i < n; ++i) {
    p.designs.push_back(normal(rng, m, k));
    p.responses.push_back(normal(rng, m, 1).col(0) + Vector::Constant(m, 3.0 * normal(rng, 1, 1)(0, 0)));
    p.blocks.push_back(spd(rng, m));
  }
  return p;
}

// n x n Sigma = F D F' with the single null direction a (unit vector).
inline Matrix sigma_with_null(std::mt19937_64& rng, const Vector& a) {
  const Index n = a.size();
  const Matrix f = glsid::null_space_basis(a.transpose());
  Matrix s = f * spd(rng, n - 1) * f.transpose();
  return (s + s.transpose()) / 2.0;
}

inline Vector random_unit(std::mt19937_64& rng, Index n) {
  const Vector v = normal(rng, n, 1).col(0);
  return v / v.norm();
}

struct Sur {
  std::vector<Matrix> designs;
  std::vector<Matrix> sigmas;  // per period
  Vector a;
  std::vector<Vector> responses;
  Vector beta;  // coefficients used by fill_responses

  glsid::SURLayout layout() const { return glsid::SURLayout::from_blocks(designs); }
};

// Symmetric square root with roundoff-level eigenvalues set to zero, so the
// draws stay exactly in the range.
inline Matrix psd_root(const Matrix& sig) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sig);
  const Vector ev = es.eigenvalues();
  const double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  Vector root = Vector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i) root(i) = ev(i) > cut ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Responses y_i = X_i b_i + u_i with u_t = Sigma_t^{1/2} z, so A'u = 0.
inline void fill_responses(std::mt19937_64& rng, Sur& s) {
  const Index n = static_cast<Index>(s.designs.size());
  const Index m = s.designs.front().rows();
  s.responses.assign(static_cast<size_t>(n), Vector::Zero(m));
  Index k = 0;
  for (const Matrix& x : s.designs) k += x.cols();
  s.beta = normal(rng, k, 1).col(0);
  for (Index i = 0, off = 0; i < n; ++i) {
    const Matrix& x = s.designs[static_cast<size_t>(i)];
    s.responses[static_cast<size_t>(i)] = x * s.beta.segment(off, x.cols());
    off += x.cols();
  }
  for (Index t = 0; t < m; ++t) {
    const Vector u = psd_root(s.sigmas[static_cast<size_t>(t)]) * normal(rng, n, 1).col(0);
    for (Index i = 0; i < n; ++i) s.responses[static_cast<size_t>(i)](t) += u(i);
  }
}

inline Sur sur(std::mt19937_64& rng, Index n, Index m, const std::vector<Index>& widths, const Vector& a) {
  Sur s;
  s.a = a;
  for (Index i = 0; i < n; ++i) s.designs.push_back(normal(rng, m, widths[static_cast<size_t>(i)]));
  for (Index t = 0; t < m; ++t) s.sigmas.push_back(sigma_with_null(rng, a));
  fill_responses(rng, s);
  return s;
}

// Same regressors in every equation and one Sigma for every period.
inline Sur shared_regressors(std::mt19937_64& rng, Index n, Index m, Index k) {
  Sur s;
  s.a = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Matrix common = normal(rng, m, k);
  common.col(0).setOnes();
  s.designs.assign(static_cast<size_t>(n), common);
  s.sigmas.assign(static_cast<size_t>(m), sigma_with_null(rng, s.a));
  fill_responses(rng, s);
  return s;
}

}  // namespace gen
