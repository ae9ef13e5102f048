#pragma once

#include <optional>
#include <vector>

#include "glsid/model.hpp"

namespace glsid {

/// G beta = g induced by the null directions A of Omega: G = A'X, g = A'y.
struct ImplicitRestrictions {
  Matrix G;
  Vector g;
  Matrix A;

  Index rows() const { return G.rows(); }
  bool empty() const { return G.rows() == 0; }
};

enum class WitnessKind { None, WithinEquationCollinearity, CrossEquationLinearCombination };

std::string_view to_string(WitnessKind kind);

/// Outcome of the Theil rank check on a SUR system whose period blocks
/// Sigma_t share one null vector a. When the condition fails, d is a unit
/// vector with F_t' X_{t,.} d = 0 for every t and X_{t,.} d = a s_t.
struct TheilWitness {
  WitnessKind kind = WitnessKind::None;
  Vector d;
  Vector s;
  Vector a;
  std::optional<Index> violating_equation;
  /// Equations i with a_i != 0 (the ones entering the cross-equation case).
  std::vector<Index> weighted_equations;
  /// Exactly one a_i is nonzero: that equation carries no variance at all.
  bool single_weight = false;
  /// max_t ||F_t' X_{t,.} d||_inf for the returned d.
  double residual = 0.0;
  RankReport rank;  // numeric rank of F'X

  bool violated() const { return kind != WitnessKind::None; }
};

struct ConsistencyReport {
  bool consistent = true;
  RankReport rank_matrix;
  RankReport rank_augmented;
};

struct RankCheck {
  bool satisfied = true;
  RankReport rank;
  Index required = 0;
};

/// rk(R) = rk(R, r).
ConsistencyReport check_restriction_consistency(const LinearRestrictions& res,
                                                const TolerancePolicy& tol = {});

/// (R; X) has full column rank.
RankCheck check_joint_identification(const Matrix& x, const Matrix& r,
                                     const TolerancePolicy& tol = {});

ImplicitRestrictions extract_implicit_restrictions(const GaussMarkoffModel& model);

/// Stacks explicit rows over implicit rows and records rk(H) = rk(H, h).
CombinedRestrictions combine_restrictions(const LinearRestrictions& explicit_rows,
                                          const ImplicitRestrictions& implicit_rows,
                                          const TolerancePolicy& tol = {});

/// F'X has full column rank, so X' Omega+ X is invertible.
RankCheck check_mls_invertibility(const Matrix& x, const SpectralDecomposition& omega_spec,
                                  const TolerancePolicy& tol = {});

/// Theil's first rank condition for a SUR layout with per-period blocks
/// Sigma_t that all have the same single null vector a.
///
/// The decision is rank(F'X) == K. On failure a witness is built following
/// the two cases of the characterization: a collinear equation is reported
/// first; otherwise a nonzero s common to the column spaces of every
/// equation with a_i != 0 is found from the stacked system
/// X_{i1} h_1 = X_{i2} h_2 = ..., and d_i = a_i h_i.
TheilWitness check_theil_condition(const SURLayout& layout,
                                   const std::vector<Matrix>& period_dispersion,
                                   const TolerancePolicy& tol = {});

/// Raised by the MLS family when F'X is rank deficient. Carries a witness when
/// the model has period-major SUR structure with a single shared null vector.
class TheilConditionError : public Error {
 public:
  TheilConditionError(const std::string& what, std::optional<TheilWitness> witness)
      : Error(ErrorCode::TheilConditionViolated, what, Condition::MlsInvertibility),
        witness_(std::move(witness)) {}

  const std::optional<TheilWitness>& witness() const noexcept { return witness_; }

 private:
  std::optional<TheilWitness> witness_;
};

/// Witness for a model built by stack_sur in period-major order, or nullopt
/// when the structure does not fit the single-null-vector case.
std::optional<TheilWitness> theil_witness_for(const GaussMarkoffModel& model);

}  // namespace glsid
