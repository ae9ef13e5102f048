#pragma once

#include <vector>

#include "glsid/model.hpp"

namespace glsid {

/// One-way fixed-effects panel y = X beta + Z gamma + u with Z = I_n (x) e_m.
/// Rows are equation-major (row i*m + t). The dispersion is block diagonal
/// with m x m blocks Sigma_ii; the Kronecker case I_n (x) Sigma stores n equal
/// blocks.
class FEPanelModel {
 public:
  Index n() const { return n_; }
  Index m() const { return m_; }
  Index T() const { return n_ * m_; }
  Index K() const { return x_.cols(); }
  const Matrix& X() const { return x_; }
  const Vector& y() const { return y_; }
  bool kronecker() const { return kronecker_; }
  const Matrix& sigma(Index equation) const { return sigma_[static_cast<size_t>(equation)]; }
  const std::vector<Matrix>& sigma_blocks() const { return sigma_; }
  const TolerancePolicy& tolerance() const { return tol_; }

  /// X_{.,i} and y_{.,i}.
  Matrix design_block(Index equation) const { return x_.middleRows(equation * m_, m_); }
  Vector response_block(Index equation) const { return y_.segment(equation * m_, m_); }

  /// Dense T x T system dispersion diag(Sigma_11, ..., Sigma_nn).
  Matrix dispersion() const { return block_diagonal(sigma_); }
  /// Dense Z = I_n (x) e_m.
  Matrix dummies() const;

 private:
  friend FEPanelModel build_fe_model(const std::vector<Matrix>&, const std::vector<Vector>&,
                                     const std::vector<Matrix>&, const TolerancePolicy&);
  friend FEPanelModel build_fe_model(const std::vector<Matrix>&, const std::vector<Vector>&,
                                     const Matrix&, const TolerancePolicy&);
  FEPanelModel() = default;

  Index n_ = 0;
  Index m_ = 0;
  Matrix x_;
  Vector y_;
  std::vector<Matrix> sigma_;
  bool kronecker_ = false;
  TolerancePolicy tol_;
};

/// Kronecker dispersion I_n (x) Sigma.
FEPanelModel build_fe_model(const std::vector<Matrix>& designs, const std::vector<Vector>& responses,
                            const Matrix& sigma, const TolerancePolicy& tol = {});

/// Block-diagonal dispersion diag(Sigma_11, ..., Sigma_nn).
FEPanelModel build_fe_model(const std::vector<Matrix>& designs, const std::vector<Vector>& responses,
                            const std::vector<Matrix>& sigma_blocks, const TolerancePolicy& tol = {});

/// M_m = I_m - e_m e_m' / m.
Matrix centering_matrix(Index m);

struct ProjectorSet {
  Matrix M;          // I_n (x) M_m
  Matrix Q;          // Z (Z' W Z)^-1 Z' W, W = Omega^-1
  Matrix P;          // W (I_T - Q)
  Matrix centering;  // M_m
};

struct ProjectorOptions {
  /// Dense T x T projectors are only materialized up to this T.
  Index dense_cap = 2000;
};

ProjectorSet build_projectors(const FEPanelModel& model, const ProjectorOptions& options = {});

/// P v evaluated blockwise without forming P.
Matrix apply_gls_projector(const FEPanelModel& model, const Matrix& v);

/// Dummy-variable GLS for beta with the fixed effects partialled out:
/// (X'PX)^-1 X'Py.
EstimateResult fe_gls(const FEPanelModel& model);

/// Within model My = MX beta + Mu with dispersion diag(M_m Sigma_ii M_m),
/// of rank n(m - 1).
GaussMarkoffModel within_transform(const FEPanelModel& model);

/// Pseudoinverse estimator on the within model. The null space of each
/// block is fixed to e_m / sqrt(m).
EstimateResult fe_mls(const FEPanelModel& model);

/// GLS on the within model after deleting period `dropped_period`
/// (1-based) from every equation.
EstimateResult fe_drop_period(const FEPanelModel& model, Index dropped_period);

struct EquivalenceReport {
  Vector beta_gls;
  Vector beta_mls;
  double beta_discrepancy = 0.0;       // ||beta_gls - beta_mls||_inf
  double projector_discrepancy = 0.0;  // ||P - M (I (x) M_m Sigma M_m)+ M||_inf
  double tolerance = 1e-8;
  bool beta_pass = false;
  bool projector_pass = false;

  bool pass() const { return beta_pass && projector_pass; }
};

/// Checks the GLS/MLS equality for the fixed-effects panel and the projector
/// identity behind it. Never throws on a failed comparison.
EquivalenceReport verify_fe_equivalence(const FEPanelModel& model, double tolerance = 1e-8);

/// Same, comparing a caller-supplied dense P against M (I (x) M_m Sigma M_m)+ M.
EquivalenceReport verify_fe_equivalence(const FEPanelModel& model, const Matrix& projector,
                               double tolerance = 1e-8);

}  // namespace glsid
