#pragma once

#include <optional>
#include <vector>

#include "glsid/identification.hpp"
#include "glsid/model.hpp"

namespace glsid {

/// Ridge penalty Psi; the block form expands to diag(psi_1 I_K1, ..., psi_n I_Kn).
struct RidgeSpec {
  Matrix penalty;

  static RidgeSpec scalar(double psi, Index k);
  static RidgeSpec blocks(const std::vector<double>& psi, const std::vector<Index>& widths);
  static RidgeSpec full(Matrix psi);
};

/// Stochastic prior information r = R X_f beta + v with Var(v) = Theta.
/// With X_f = I this is the mixed-estimation setup; Theta -> 0 recovers exact
/// restrictions.
struct StochasticRestrictions {
  Matrix R;
  Vector r;
  Matrix forecast_design;  // X_f, p x K
  Matrix theta;            // q x q

  Index q() const { return R.rows(); }

  /// An empty `forecast_design` defaults to the K x K identity.
  static StochasticRestrictions make(Matrix R, Vector r, Matrix theta, Matrix forecast_design = {});
};

/// Solution of the bordered normal equations
///   [C+  H'] [beta  ]   [X' Omega+ y]
///   [H   0 ] [lambda] = [h          ].
struct NormalSystemSolution {
  Vector beta_hat;
  Vector lagrange;
  double residual_norm = 0.0;
  /// False when H has redundant rows; lagrange is then the minimum-norm choice.
  bool lagrange_unique = true;
  RankReport rank;
};

EstimateResult ols(const GaussMarkoffModel& model);
EstimateResult gls(const GaussMarkoffModel& model);
EstimateResult rols(const GaussMarkoffModel& model, const LinearRestrictions& res);
EstimateResult rgls(const GaussMarkoffModel& model, const LinearRestrictions& res);
EstimateResult ridge(const GaussMarkoffModel& model, const RidgeSpec& spec);
EstimateResult stochastic_restricted_gls(const GaussMarkoffModel& model,
                                         const StochasticRestrictions& sres);

/// (X' Omega+ X)^-1 X' Omega+ y; requires F'X of full column rank.
EstimateResult mls(const GaussMarkoffModel& model);

/// MLS corrected onto R beta = r.
EstimateResult tkn(const GaussMarkoffModel& model, const LinearRestrictions& res);

NormalSystemSolution solve_normal_system(const GaussMarkoffModel& model,
                                         const CombinedRestrictions& combined);

/// Null-space representation of the restricted estimator for collinear
/// designs and singular dispersion:
///   beta = N S^-1 N' X' Omega+ y + (I - N S^-1 N' C+) beta*,  S = N' C+ N,
/// with covariance factor N S^-1 N'. beta* defaults to H+ h.
EstimateResult constrained_singular_gls(const GaussMarkoffModel& model,
                                        const CombinedRestrictions& combined,
                                        const std::optional<Vector>& particular = std::nullopt);

/// Member of the class of linear representations of the constrained estimator:
/// adds G_free (A'y - g), which vanishes on the observed data.
EstimateResult linear_representation(const GaussMarkoffModel& model,
                                     const CombinedRestrictions& combined, const Matrix& g_free,
                                     const ImplicitRestrictions& implicit, const Vector& particular);

/// Explicit restrictions merged with the implicit ones of the model's dispersion.
CombinedRestrictions combined_restrictions(const GaussMarkoffModel& model,
                                           const LinearRestrictions& res);

}  // namespace glsid
