#include "glsid/model.hpp"

#include <array>
#include <string>
#include <utility>

namespace glsid {

namespace {

SpectralDecomposition decompose_dispersion(const Matrix& omega, const TolerancePolicy& tol) {
  try {
    return spectral_decompose(omega, tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonSymmetric || e.code() == ErrorCode::IndefiniteInput) {
      throw Error(ErrorCode::DispersionNotNND,
                  std::string("dispersion is not symmetric nonnegative definite: ") + e.what());
    }
    throw;
  }
}

// ||(I - P_(X:Omega)) y||. Only the null directions of Omega can leave the
// span: the residual equals that of projecting A'y onto M(A'X).
double range_residual(const Vector& y, const Matrix& x, const SpectralDecomposition& spec,
                      const TolerancePolicy& tol) {
  if (spec.rank == spec.source_dim) return 0.0;
  const Matrix& a = spec.null_vectors;
  const Vector ay = a.transpose() * y;
  const Matrix ax = a.transpose() * x;
  const Vector fitted = ax * (moore_penrose(ax, tol) * ay);
  return (ay - fitted).norm();
}

void check_block(const Matrix& block, Index dim, const TolerancePolicy& tol) {
  if (block.rows() != dim || block.cols() != dim) {
    throw Error(ErrorCode::DimensionMismatch, "dispersion block has wrong dimensions");
  }
  decompose_dispersion(block, tol);
}

}  // namespace

std::string_view to_string(StackOrder order) {
  return order == StackOrder::PeriodMajor ? "period-major" : "equation-major";
}

SURLayout SURLayout::from_blocks(std::vector<Matrix> designs) {
  if (designs.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "SUR layout needs at least one equation");
  }
  SURLayout out;
  out.n = static_cast<Index>(designs.size());
  out.m = designs.front().rows();
  for (const auto& d : designs) {
    if (d.rows() != out.m) {
      throw Error(ErrorCode::DimensionMismatch, "SUR blocks have differing period counts");
    }
    require_finite(d, "SUR design block");
    out.block_widths.push_back(d.cols());
  }
  out.block_design = std::move(designs);
  return out;
}

Index SURLayout::total_width() const {
  Index k = 0;
  for (Index w : block_widths) k += w;
  return k;
}

Index SURLayout::column_offset(Index equation) const {
  Index off = 0;
  for (Index i = 0; i < equation; ++i) off += block_widths[static_cast<size_t>(i)];
  return off;
}

Index SURLayout::row_index(Index period, Index equation, StackOrder order) const {
  return order == StackOrder::PeriodMajor ? period * n + equation : equation * m + period;
}

Matrix SURLayout::stacked_design(StackOrder order) const {
  Matrix x = Matrix::Zero(n * m, total_width());
  for (Index i = 0; i < n; ++i) {
    const Matrix& block = block_design[static_cast<size_t>(i)];
    const Index off = column_offset(i);
    for (Index t = 0; t < m; ++t) {
      x.block(row_index(t, i, order), off, 1, block.cols()) = block.row(t);
    }
  }
  return x;
}

GaussMarkoffModel build_model(const Vector& y, const Matrix& x, const Matrix& dispersion,
                              const ModelOptions& options) {
  const Index t = x.rows();
  if (y.size() != t || dispersion.rows() != t || dispersion.cols() != t) {
    throw Error(ErrorCode::DimensionMismatch,
                "model dimensions do not conform: y " + std::to_string(y.size()) + ", X " +
                    std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", Omega " +
                    std::to_string(dispersion.rows()) + "x" + std::to_string(dispersion.cols()));
  }
  require_finite(y, "response");
  require_finite(x, "design");
  require_finite(dispersion, "dispersion");
  if (t <= x.cols()) {
    throw Error(ErrorCode::TLeqK, "model needs T > K (T = " + std::to_string(t) +
                                      ", K = " + std::to_string(x.cols()) + ")");
  }
  if (options.sigma2 && !(*options.sigma2 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma2 must be positive");
  }

  GaussMarkoffModel model;
  model.spectrum_ = decompose_dispersion(dispersion, options.tol);
  const double residual = range_residual(y, x, model.spectrum_, options.tol);
  if (residual > options.range_tolerance * (1.0 + y.norm())) {
    throw Error(ErrorCode::ResponseOutsideRange,
                "response lies outside M(X : Omega) (residual " + std::to_string(residual) + ")",
                Condition::ResponseInRange);
  }
  model.y_ = y;
  model.x_ = x;
  model.omega_ = dispersion;
  model.sigma2_ = options.sigma2;
  model.tol_ = options.tol;
  return model;
}

GaussMarkoffModel stack_sur(const SURLayout& layout, const std::vector<Vector>& responses,
                            const DispersionBlocks& dispersion, const ModelOptions& options) {
  const Index n = layout.n;
  const Index m = layout.m;
  if (static_cast<Index>(responses.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "one response vector per equation is required");
  }
  for (const auto& r : responses) {
    if (r.size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "response length differs from period count");
    }
  }
  const bool period_major = dispersion.order == StackOrder::PeriodMajor;
  const Index expected_blocks = period_major ? m : n;
  const Index block_dim = period_major ? n : m;
  if (static_cast<Index>(dispersion.blocks.size()) != expected_blocks) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string("expected ") + std::to_string(expected_blocks) +
                    " dispersion blocks for " + std::string(to_string(dispersion.order)) +
                    " stacking");
  }
  for (const auto& b : dispersion.blocks) check_block(b, block_dim, options.tol);

  Vector y(n * m);
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < m; ++t) {
      y(layout.row_index(t, i, dispersion.order)) = responses[static_cast<size_t>(i)](t);
    }
  }
  GaussMarkoffModel model = build_model(y, layout.stacked_design(dispersion.order),
                                        block_diagonal(dispersion.blocks), options);
  model.sur_ = SurStructure{layout, dispersion.order, dispersion.blocks};
  return model;
}

GaussMarkoffModel permute_stacking(const GaussMarkoffModel& model) {
  if (!model.sur_) {
    throw Error(ErrorCode::InvalidArgument, "model carries no SUR structure to permute");
  }
  const SurStructure& sur = *model.sur_;
  const StackOrder target = sur.order == StackOrder::PeriodMajor ? StackOrder::EquationMajor
                                                                 : StackOrder::PeriodMajor;
  const Index n = sur.layout.n;
  const Index m = sur.layout.m;
  // perm[new_row] = old_row
  std::vector<Index> perm(static_cast<size_t>(n * m));
  for (Index i = 0; i < n; ++i) {
    for (Index t = 0; t < m; ++t) {
      perm[static_cast<size_t>(sur.layout.row_index(t, i, target))] =
          sur.layout.row_index(t, i, sur.order);
    }
  }
  const Index rows = n * m;
  Vector y(rows);
  Matrix x(rows, model.K());
  Matrix omega(rows, rows);
  for (Index r = 0; r < rows; ++r) {
    const Index src = perm[static_cast<size_t>(r)];
    y(r) = model.y_(src);
    x.row(r) = model.x_.row(src);
    for (Index c = 0; c < rows; ++c) omega(r, c) = model.omega_(src, perm[static_cast<size_t>(c)]);
  }
  GaussMarkoffModel out = build_model(y, x, omega, {model.sigma2_, model.tol_});
  out.sur_ = SurStructure{sur.layout, target, {}};
  return out;
}

std::vector<EquationData> extract_equations(const GaussMarkoffModel& model) {
  if (!model.sur()) {
    throw Error(ErrorCode::InvalidArgument, "model carries no SUR structure");
  }
  const SurStructure& sur = *model.sur();
  std::vector<EquationData> out;
  for (Index i = 0; i < sur.layout.n; ++i) {
    const Index width = sur.layout.block_widths[static_cast<size_t>(i)];
    const Index off = sur.layout.column_offset(i);
    EquationData eq{Vector(sur.layout.m), Matrix(sur.layout.m, width)};
    for (Index t = 0; t < sur.layout.m; ++t) {
      const Index row = sur.layout.row_index(t, i, sur.order);
      eq.y(t) = model.y()(row);
      eq.X.row(t) = model.X().block(row, off, 1, width);
    }
    out.push_back(std::move(eq));
  }
  return out;
}

GaussMarkoffModel normalize_trace(const GaussMarkoffModel& model) {
  const double trace = model.dispersion().trace();
  if (!(trace > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cannot normalize a dispersion with zero trace");
  }
  const double factor = static_cast<double>(model.T()) / trace;
  GaussMarkoffModel out =
      build_model(model.y(), model.X(), factor * model.dispersion(), {model.sigma2(), model.tolerance()});
  if (model.sur_) {
    out.sur_ = model.sur_;
    for (auto& b : out.sur_->dispersion) b *= factor;
  }
  return out;
}

LinearRestrictions LinearRestrictions::make(Matrix R, Vector r) {
  if (R.rows() != r.size()) {
    throw Error(ErrorCode::DimensionMismatch, "restriction matrix and right-hand side differ in rows");
  }
  require_finite(R, "restriction matrix");
  require_finite(r, "restriction right-hand side");
  return LinearRestrictions{std::move(R), std::move(r)};
}

LinearRestrictions LinearRestrictions::none(Index k) {
  return LinearRestrictions{Matrix(0, k), Vector(0)};
}

RestrictionInverse invert_restrictions(const LinearRestrictions& res, const TolerancePolicy& tol) {
  const RankReport rank_r = numeric_rank(res.R, tol);
  const RankReport rank_aug = numeric_rank(stack_cols(res.R, res.r), tol);
  if (rank_aug.numeric_rank > rank_r.numeric_rank) {
    throw Error(ErrorCode::InconsistentRestrictions, "restrictions are inconsistent: rk(R) < rk(R, r)",
                Condition::RestrictionConsistency);
  }
  return RestrictionInverse{moore_penrose(res.R, tol) * res.r, null_space_basis(res.R, tol)};
}

std::string_view to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::OLS: return "ols";
    case EstimatorTag::GLS: return "gls";
    case EstimatorTag::ROLS: return "rols";
    case EstimatorTag::RGLS: return "rgls";
    case EstimatorTag::Ridge: return "ridge";
    case EstimatorTag::MLS: return "mls";
    case EstimatorTag::TKN: return "tkn";
    case EstimatorTag::ConstrainedSingular: return "constrained";
    case EstimatorTag::StochasticRestricted: return "stochastic";
    case EstimatorTag::PanelGLS: return "panel-gls";
    case EstimatorTag::PanelMLS: return "panel-mls";
  }
  return "unknown";
}

std::optional<EstimatorTag> parse_estimator_tag(std::string_view name) {
  constexpr std::array tags{EstimatorTag::OLS,   EstimatorTag::GLS,
                            EstimatorTag::ROLS,  EstimatorTag::RGLS,
                            EstimatorTag::Ridge, EstimatorTag::MLS,
                            EstimatorTag::TKN,   EstimatorTag::ConstrainedSingular,
                            EstimatorTag::StochasticRestricted,
                            EstimatorTag::PanelGLS, EstimatorTag::PanelMLS};
  for (auto tag : tags) {
    if (to_string(tag) == name) return tag;
  }
  return std::nullopt;
}

}  // namespace glsid
