#include "glsid/identification.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace glsid {

namespace {

// Entries of the unit null vector below this are treated as exact zeros.
constexpr double kWeightZero = 1e-10;
// Minimum |<a_t, a_1>| for two unit null vectors to count as the same direction.
constexpr double kNullAlignment = 1.0 - 1e-8;

struct PeriodSpectra {
  Vector a;
  std::vector<Matrix> range;  // F_t, n x (n - 1)
};

PeriodSpectra shared_null_vector(const std::vector<Matrix>& sigmas, Index n,
                                 const TolerancePolicy& tol) {
  PeriodSpectra out;
  for (size_t t = 0; t < sigmas.size(); ++t) {
    if (sigmas[t].rows() != n || sigmas[t].cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "period dispersion block must be n x n");
    }
    const SpectralDecomposition spec = spectral_decompose(sigmas[t], tol);
    const Index nullity = n - spec.rank;
    if (nullity == 0) {
      throw Error(ErrorCode::NullVectorMismatch,
                  "period " + std::to_string(t + 1) + " dispersion has no zero root");
    }
    if (nullity > 1) {
      throw Error(ErrorCode::UnsupportedNullity,
                  "period " + std::to_string(t + 1) +
                      " dispersion has more than one zero root; use the F'X rank check");
    }
    const Vector at = spec.null_vectors.col(0);
    if (t == 0) {
      out.a = at;
    } else if (std::abs(at.dot(out.a)) < kNullAlignment) {
      throw Error(ErrorCode::NullVectorMismatch,
                  "period " + std::to_string(t + 1) + " dispersion does not share the null vector a");
    }
    out.range.push_back(spec.range_vectors);
  }
  return out;
}

// X_{t,.}: n x K with x'_{t,i} placed in the columns of block i.
Matrix period_design(const SURLayout& layout, Index t) {
  Matrix xt = Matrix::Zero(layout.n, layout.total_width());
  for (Index i = 0; i < layout.n; ++i) {
    const Matrix& block = layout.block_design[static_cast<size_t>(i)];
    xt.block(i, layout.column_offset(i), 1, block.cols()) = block.row(t);
  }
  return xt;
}

double witness_residual(const std::vector<Matrix>& period_x, const std::vector<Matrix>& range,
                        const Vector& d) {
  double worst = 0.0;
  for (size_t t = 0; t < period_x.size(); ++t) {
    worst = std::max(worst, max_abs(range[t].transpose() * (period_x[t] * d)));
  }
  return worst;
}

}  // namespace

std::string_view to_string(WitnessKind kind) {
  switch (kind) {
    case WitnessKind::None: return "none";
    case WitnessKind::WithinEquationCollinearity: return "within-equation-collinearity";
    case WitnessKind::CrossEquationLinearCombination: return "cross-equation-linear-combination";
  }
  return "unknown";
}

ConsistencyReport check_restriction_consistency(const LinearRestrictions& res,
                                                const TolerancePolicy& tol) {
  ConsistencyReport out;
  out.rank_matrix = numeric_rank(res.R, tol);
  out.rank_augmented = numeric_rank(stack_cols(res.R, res.r), tol);
  out.consistent = out.rank_augmented.numeric_rank == out.rank_matrix.numeric_rank;
  return out;
}

RankCheck check_joint_identification(const Matrix& x, const Matrix& r, const TolerancePolicy& tol) {
  if (r.rows() > 0 && r.cols() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "R and X must have the same number of columns");
  }
  RankCheck out;
  out.required = x.cols();
  out.rank = numeric_rank(stack_rows(r, x), tol);
  out.satisfied = out.rank.numeric_rank == out.required;
  return out;
}

ImplicitRestrictions extract_implicit_restrictions(const GaussMarkoffModel& model) {
  const SpectralDecomposition& spec = model.dispersion_spectrum();
  ImplicitRestrictions out;
  out.A = spec.null_vectors;
  out.G = out.A.transpose() * model.X();
  out.g = out.A.transpose() * model.y();
  // A has unit columns, so entries below T * eps * max|X| (resp. max|y|) are
  // roundoff of an exact zero. Left in place they would set the scale of the
  // relative rank rule when no explicit rows are present.
  const double eps = std::numeric_limits<double>::epsilon();
  const double t = static_cast<double>(model.T());
  const double g_floor = t * eps * max_abs(model.X());
  const double y_floor = t * eps * max_abs(model.y());
  out.G = out.G.unaryExpr([g_floor](double v) { return std::abs(v) <= g_floor ? 0.0 : v; });
  out.g = out.g.unaryExpr([y_floor](double v) { return std::abs(v) <= y_floor ? 0.0 : v; });
  return out;
}

CombinedRestrictions combine_restrictions(const LinearRestrictions& explicit_rows,
                                          const ImplicitRestrictions& implicit_rows,
                                          const TolerancePolicy& tol) {
  const bool have_explicit = explicit_rows.q() > 0;
  const bool have_implicit = implicit_rows.rows() > 0;
  if (have_explicit && have_implicit && explicit_rows.K() != implicit_rows.G.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "explicit and implicit restrictions differ in K");
  }
  CombinedRestrictions out;
  const Index k = have_explicit ? explicit_rows.K() : implicit_rows.G.cols();
  out.H = stack_rows(have_explicit ? explicit_rows.R : Matrix(0, k),
                     have_implicit ? implicit_rows.G : Matrix(0, k));
  out.h = stack_rows(explicit_rows.r, implicit_rows.g);
  out.explicit_rows = explicit_rows.q();
  out.implicit_rows = implicit_rows.rows();
  out.rank_H = numeric_rank(out.H, tol);
  out.rank_augmented = numeric_rank(stack_cols(out.H, out.h), tol);
  out.consistent = out.rank_augmented.numeric_rank == out.rank_H.numeric_rank;
  return out;
}

RankCheck check_mls_invertibility(const Matrix& x, const SpectralDecomposition& omega_spec,
                                  const TolerancePolicy& tol) {
  if (x.rows() != omega_spec.source_dim) {
    throw Error(ErrorCode::DimensionMismatch, "design rows differ from dispersion dimension");
  }
  RankCheck out;
  out.required = x.cols();
  out.rank = numeric_rank(omega_spec.range_vectors.transpose() * x, tol);
  out.satisfied = out.rank.numeric_rank == out.required;
  return out;
}

TheilWitness check_theil_condition(const SURLayout& layout,
                                   const std::vector<Matrix>& period_dispersion,
                                   const TolerancePolicy& tol) {
  if (static_cast<Index>(period_dispersion.size()) != layout.m) {
    throw Error(ErrorCode::DimensionMismatch, "one dispersion block per period is required");
  }
  for (const auto& s : period_dispersion) require_finite(s, "period dispersion");
  const PeriodSpectra spectra = shared_null_vector(period_dispersion, layout.n, tol);
  const Index k = layout.total_width();

  std::vector<Matrix> period_x;
  Matrix fx(0, k);
  for (Index t = 0; t < layout.m; ++t) {
    period_x.push_back(period_design(layout, t));
    fx = stack_rows(fx, spectra.range[static_cast<size_t>(t)].transpose() * period_x.back());
  }

  TheilWitness w;
  w.a = spectra.a;
  w.rank = numeric_rank(fx, tol);
  for (Index i = 0; i < layout.n; ++i) {
    if (std::abs(w.a(i)) > kWeightZero) w.weighted_equations.push_back(i);
  }
  w.single_weight = w.weighted_equations.size() == 1;
  if (w.rank.numeric_rank == k) {
    w.d = Vector::Zero(k);
    w.s = Vector::Zero(layout.m);
    return w;
  }

  Vector d = Vector::Zero(k);
  // Case 1: an equation with collinear covariates.
  for (Index j = 0; j < layout.n && !w.violated(); ++j) {
    const Matrix& xj = layout.block_design[static_cast<size_t>(j)];
    if (xj.cols() == 0) continue;
    if (numeric_rank(xj, tol).numeric_rank < xj.cols()) {
      const Matrix f = null_space_basis(xj, tol);
      if (f.cols() == 0) continue;
      d.segment(layout.column_offset(j), xj.cols()) = f.col(0);
      w.kind = WitnessKind::WithinEquationCollinearity;
      w.violating_equation = j;
    }
  }

  // Case 2: a common s in the column spaces of all weighted equations.
  if (!w.violated() && !w.weighted_equations.empty()) {
    const auto& eqs = w.weighted_equations;
    std::vector<Index> offsets{0};
    for (Index i : eqs) offsets.push_back(offsets.back() + layout.block_widths[static_cast<size_t>(i)]);
    const Index width = offsets.back();
    Vector h;
    if (eqs.size() == 1) {
      if (width > 0) h = Vector::Unit(width, 0);
    } else {
      const Index m = layout.m;
      const Matrix& first = layout.block_design[static_cast<size_t>(eqs[0])];
      Matrix system = Matrix::Zero(m * static_cast<Index>(eqs.size() - 1), width);
      for (size_t p = 1; p < eqs.size(); ++p) {
        const Index row = m * static_cast<Index>(p - 1);
        system.block(row, 0, m, first.cols()) = first;
        const Matrix& other = layout.block_design[static_cast<size_t>(eqs[p])];
        system.block(row, offsets[p], m, other.cols()) = -other;
      }
      const Matrix basis = null_space_basis(system, tol);
      if (basis.cols() > 0) h = basis.col(0);
    }
    if (h.size() > 0) {
      for (size_t p = 0; p < eqs.size(); ++p) {
        const Index i = eqs[p];
        const Index wi = layout.block_widths[static_cast<size_t>(i)];
        d.segment(layout.column_offset(i), wi) = w.a(i) * h.segment(offsets[p], wi);
      }
      if (d.norm() > 0.0) w.kind = WitnessKind::CrossEquationLinearCombination;
    }
  }

  // The rank test and the structured search disagree only at the numerical
  // margin; fall back to a direct null vector of F'X, which satisfies the
  // same defining equations.
  if (!w.violated() || witness_residual(period_x, spectra.range, d / d.norm()) >
                           1e-8 * (1.0 + max_abs(fx))) {
    const Matrix basis = null_space_basis(fx, tol);
    d = basis.cols() > 0 ? Vector(basis.col(0)) : Vector(Vector::Unit(k, 0));
    w.kind = WitnessKind::CrossEquationLinearCombination;
    w.violating_equation.reset();
  }

  w.d = d / d.norm();
  w.s.resize(layout.m);
  for (Index t = 0; t < layout.m; ++t) {
    w.s(t) = w.a.dot(period_x[static_cast<size_t>(t)] * w.d);
  }
  w.residual = witness_residual(period_x, spectra.range, w.d);
  return w;
}

std::optional<TheilWitness> theil_witness_for(const GaussMarkoffModel& model) {
  const auto& sur = model.sur();
  if (!sur || sur->order != StackOrder::PeriodMajor || sur->dispersion.empty()) return std::nullopt;
  try {
    return check_theil_condition(sur->layout, sur->dispersion, model.tolerance());
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace glsid
