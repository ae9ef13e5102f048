#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "glsid/errors.hpp"
#include "glsid/spectral.hpp"

namespace glsid {

/// Row ordering of a stacked SUR system. Period-major places observation
/// (t, i) at row t*n + i (blocks Sigma_t); equation-major at row i*m + t
/// (blocks Sigma_ii).
enum class StackOrder { PeriodMajor, EquationMajor };

std::string_view to_string(StackOrder order);

/// Per-equation designs X_{.,i} (m x K_i) of an n-equation, m-period system.
struct SURLayout {
  Index n = 0;
  Index m = 0;
  std::vector<Index> block_widths;
  std::vector<Matrix> block_design;

  /// Validates that every block has the same row count m.
  static SURLayout from_blocks(std::vector<Matrix> designs);

  Index total_width() const;
  Index column_offset(Index equation) const;
  Index row_index(Index period, Index equation, StackOrder order) const;
  Matrix stacked_design(StackOrder order) const;
};

/// Dispersion given blockwise: n x n blocks Sigma_t per period
/// (period-major stacking) or m x m blocks Sigma_ii per equation
/// (equation-major stacking).
struct DispersionBlocks {
  StackOrder order = StackOrder::PeriodMajor;
  std::vector<Matrix> blocks;
};

/// SUR provenance attached to a stacked model. `dispersion` is empty when
/// the stacked dispersion is no longer block diagonal in `order`.
struct SurStructure {
  SURLayout layout;
  StackOrder order = StackOrder::PeriodMajor;
  std::vector<Matrix> dispersion;
};

struct ModelOptions {
  std::optional<double> sigma2;
  TolerancePolicy tol;
  /// Residual bound for y in M(X : Omega), relative to 1 + ||y||.
  double range_tolerance = 1e-8;
};

/// The general Gauss-Markoff model {y, X beta, sigma^2 Omega}. Immutable once
/// built; construction validates dimensions, T > K, Omega nonnegative
/// definite and y in M(X : Omega).
class GaussMarkoffModel {
 public:
  const Vector& y() const { return y_; }
  const Matrix& X() const { return x_; }
  const Matrix& dispersion() const { return omega_; }
  const SpectralDecomposition& dispersion_spectrum() const { return spectrum_; }
  std::optional<double> sigma2() const { return sigma2_; }
  const TolerancePolicy& tolerance() const { return tol_; }
  const std::optional<SurStructure>& sur() const { return sur_; }
  Index T() const { return x_.rows(); }
  Index K() const { return x_.cols(); }
  bool dispersion_regular() const { return spectrum_.rank == T(); }

 private:
  friend GaussMarkoffModel build_model(const Vector&, const Matrix&, const Matrix&,
                                       const ModelOptions&);
  friend GaussMarkoffModel stack_sur(const SURLayout&, const std::vector<Vector>&,
                                     const DispersionBlocks&, const ModelOptions&);
  friend GaussMarkoffModel permute_stacking(const GaussMarkoffModel&);
  friend GaussMarkoffModel normalize_trace(const GaussMarkoffModel&);

  GaussMarkoffModel() = default;

  Vector y_;
  Matrix x_;
  Matrix omega_;
  SpectralDecomposition spectrum_;
  std::optional<double> sigma2_;
  TolerancePolicy tol_;
  std::optional<SurStructure> sur_;
};

GaussMarkoffModel build_model(const Vector& y, const Matrix& x, const Matrix& dispersion,
                              const ModelOptions& options = {});

GaussMarkoffModel stack_sur(const SURLayout& layout, const std::vector<Vector>& responses,
                            const DispersionBlocks& dispersion, const ModelOptions& options = {});

/// Reorders a stacked SUR model between period-major and equation-major rows.
GaussMarkoffModel permute_stacking(const GaussMarkoffModel& model);

struct EquationData {
  Vector y;
  Matrix X;
};

/// Per-equation (y_{.,i}, X_{.,i}) blocks recovered from a stacked SUR model.
std::vector<EquationData> extract_equations(const GaussMarkoffModel& model);

/// Rescales Omega so that tr(Omega) = T. Estimators are invariant to this.
GaussMarkoffModel normalize_trace(const GaussMarkoffModel& model);

/// Explicit linear restrictions R beta = r. Consistency is not assumed; see
/// check_restriction_consistency.
struct LinearRestrictions {
  Matrix R;
  Vector r;

  Index q() const { return R.rows(); }
  Index K() const { return R.cols(); }

  static LinearRestrictions make(Matrix R, Vector r);
  static LinearRestrictions none(Index k);
};

/// Explicit rows R, r stacked over implicit rows G, g: H' = (R', X'A),
/// h' = (r', g').
struct CombinedRestrictions {
  Matrix H;
  Vector h;
  Index explicit_rows = 0;
  Index implicit_rows = 0;
  bool consistent = true;
  RankReport rank_H;
  RankReport rank_augmented;

  Index rows() const { return H.rows(); }
  bool empty() const { return H.rows() == 0; }
  bool redundant() const { return rank_H.numeric_rank < H.rows(); }
};

struct RestrictionInverse {
  Vector particular;  // R+ r
  Matrix null_basis;  // N_R, orthonormal columns
};

/// beta = R+ r + N_R c parametrizes every solution of R beta = r.
RestrictionInverse invert_restrictions(const LinearRestrictions& res,
                                       const TolerancePolicy& tol = {});

enum class EstimatorTag {
  OLS,
  GLS,
  ROLS,
  RGLS,
  Ridge,
  MLS,
  TKN,
  ConstrainedSingular,
  StochasticRestricted,
  PanelGLS,
  PanelMLS,
};

std::string_view to_string(EstimatorTag tag);
std::optional<EstimatorTag> parse_estimator_tag(std::string_view name);

/// One rank or consistency check consulted before estimating.
struct ConditionCheck {
  Condition condition;
  bool satisfied = false;
  Index rank = 0;
  Index required = 0;
};

struct EstimateResult {
  Vector beta_hat;
  /// Dispersion of beta_hat up to sigma^2.
  Matrix covariance_factor;
  Vector residuals;
  EstimatorTag estimator_tag = EstimatorTag::OLS;
  std::vector<ConditionCheck> diagnostics;
  /// beta_hat = linear_map * y + offset for the model's response.
  Matrix linear_map;
  Vector offset;

  Matrix covariance(double sigma2) const { return sigma2 * covariance_factor; }
};

}  // namespace glsid
