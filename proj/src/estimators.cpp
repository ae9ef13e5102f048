#include "glsid/estimators.hpp"

#include <string>

namespace glsid {

namespace {

constexpr double kRestrictionTolerance = 1e-9;

// Least-squares fit in whitened coordinates: xw = W X, yw = W y.
struct WhitenedFit {
  Vector beta;
  Matrix map;   // beta = map * y
  Matrix cinv;  // (xw' xw)^-1
};

WhitenedFit fit_full_rank(const Matrix& xw, const Vector& yw, const Matrix& whitener) {
  Eigen::HouseholderQR<Matrix> qr(xw);
  WhitenedFit out;
  out.beta = qr.solve(yw);
  out.map = qr.solve(whitener);
  const Index k = xw.cols();
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Matrix rinv = r.triangularView<Eigen::Upper>().solve(Matrix::Identity(k, k));
  out.cinv = symmetrize(rinv * rinv.transpose());
  return out;
}

Matrix cholesky_whitener(const Matrix& omega, const char* what) {
  Eigen::LLT<Matrix> llt(symmetrize(omega));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::DispersionSingular, std::string(what) + " is not positive definite",
                Condition::DispersionRegular);
  }
  return llt.matrixL().solve(Matrix::Identity(omega.rows(), omega.cols()));
}

void require_regular_dispersion(const GaussMarkoffModel& model, std::vector<ConditionCheck>& diag) {
  const Index rank = model.dispersion_spectrum().rank;
  diag.push_back({Condition::DispersionRegular, rank == model.T(), rank, model.T()});
  if (rank != model.T()) {
    throw Error(ErrorCode::DispersionSingular,
                "dispersion is singular (rank " + std::to_string(rank) + " < T = " +
                    std::to_string(model.T()) + "); use mls or the constrained estimator",
                Condition::DispersionRegular);
  }
}

void require_full_rank_design(const Matrix& x, const TolerancePolicy& tol,
                              std::vector<ConditionCheck>& diag) {
  const RankReport rank = numeric_rank(x, tol);
  const bool ok = rank.numeric_rank == x.cols();
  diag.push_back({Condition::DesignFullRank, ok, rank.numeric_rank, x.cols()});
  if (!ok) {
    throw Error(ErrorCode::DesignRankDeficient,
                "design is rank deficient (rank " + std::to_string(rank.numeric_rank) + " < K = " +
                    std::to_string(x.cols()) + ")",
                Condition::DesignFullRank);
  }
}

void require_restrictions_usable(const Matrix& x, const LinearRestrictions& res,
                                 const TolerancePolicy& tol, std::vector<ConditionCheck>& diag) {
  if (res.K() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "restrictions and design differ in K");
  }
  const ConsistencyReport consistency = check_restriction_consistency(res, tol);
  diag.push_back({Condition::RestrictionConsistency, consistency.consistent,
                  consistency.rank_augmented.numeric_rank, consistency.rank_matrix.numeric_rank});
  if (!consistency.consistent) {
    throw Error(ErrorCode::InconsistentRestrictions, "restrictions are inconsistent: rk(R) < rk(R, r)",
                Condition::RestrictionConsistency);
  }
  const RankCheck ident = check_joint_identification(x, res.R, tol);
  diag.push_back({Condition::JointIdentification, ident.satisfied, ident.rank.numeric_rank,
                  ident.required});
  if (!ident.satisfied) {
    throw Error(ErrorCode::IdentificationFailure,
                "identification failed: (R; X) has rank " + std::to_string(ident.rank.numeric_rank) +
                    " < K = " + std::to_string(ident.required),
                Condition::JointIdentification);
  }
}

struct AffineFit {
  Vector beta;
  Matrix map;
  Vector offset;
};

// Restricted least squares in whitened coordinates. Uses the closed-form
// correction when xw and R have full rank, otherwise the reparametrization
// beta = R+ r + N_R c.
AffineFit restricted_fit(const Matrix& xw, const Vector& yw, const Matrix& whitener,
                         const LinearRestrictions& res, const TolerancePolicy& tol) {
  const Index k = xw.cols();
  const bool full_design = numeric_rank(xw, tol).numeric_rank == k;
  const bool full_rows = numeric_rank(res.R, tol).numeric_rank == res.q();
  AffineFit out;
  if (full_design && full_rows) {
    const WhitenedFit base = fit_full_rank(xw, yw, whitener);
    if (res.q() == 0) return {base.beta, base.map, Vector::Zero(k)};
    const Matrix gram = symmetrize(res.R * base.cinv * res.R.transpose());
    const Matrix gain = base.cinv * res.R.transpose() * Eigen::LLT<Matrix>(gram).solve(Matrix::Identity(res.q(), res.q()));
    // Correction oriented so that R beta = r holds exactly.
    out.beta = base.beta + gain * (res.r - res.R * base.beta);
    out.map = (Matrix::Identity(k, k) - gain * res.R) * base.map;
    out.offset = gain * res.r;
    return out;
  }
  const RestrictionInverse inv = invert_restrictions(res, tol);
  const Matrix& n = inv.null_basis;
  if (n.cols() == 0) {
    return {inv.particular, Matrix::Zero(k, whitener.cols()), inv.particular};
  }
  const Matrix xr = xw * n;
  const Matrix solve = fit_full_rank(xr, Vector::Zero(xr.rows()), Matrix::Identity(xr.rows(), xr.rows())).map;
  out.beta = inv.particular + n * (solve * (yw - xw * inv.particular));
  out.map = n * (solve * whitener);
  out.offset = inv.particular - n * (solve * (xw * inv.particular));
  return out;
}

EstimateResult finish(const GaussMarkoffModel& model, EstimatorTag tag, Vector beta, Matrix map,
                      Vector offset, std::vector<ConditionCheck> diag,
                      std::optional<Matrix> covariance = std::nullopt) {
  EstimateResult out;
  out.residuals = model.y() - model.X() * beta;
  out.covariance_factor =
      covariance ? symmetrize(*covariance) : symmetrize(map * model.dispersion() * map.transpose());
  out.beta_hat = std::move(beta);
  out.linear_map = std::move(map);
  out.offset = std::move(offset);
  out.estimator_tag = tag;
  out.diagnostics = std::move(diag);
  return out;
}

struct MlsFit {
  WhitenedFit fit;
  std::vector<ConditionCheck> diag;
};

MlsFit fit_mls(const GaussMarkoffModel& model) {
  const SpectralDecomposition& spec = model.dispersion_spectrum();
  MlsFit out;
  const RankCheck check = check_mls_invertibility(model.X(), spec, model.tolerance());
  out.diag.push_back({Condition::MlsInvertibility, check.satisfied, check.rank.numeric_rank,
                      check.required});
  if (!check.satisfied) {
    throw TheilConditionError("F'X is rank deficient (rank " +
                                  std::to_string(check.rank.numeric_rank) + " < K = " +
                                  std::to_string(check.required) + "): Theil's rank condition fails",
                              theil_witness_for(model));
  }
  const Matrix w = spec.whitener();
  out.fit = fit_full_rank(w * model.X(), w * model.y(), w);
  return out;
}

struct ConstrainedCore {
  Matrix projector;  // N S^-1 N'
  Matrix cplus;
  Matrix weighted_design;  // X' Omega+
  Vector beta_star;
  std::vector<ConditionCheck> diag;
};

ConstrainedCore constrained_core(const GaussMarkoffModel& model, const CombinedRestrictions& combined,
                                 const std::optional<Vector>& particular) {
  const TolerancePolicy& tol = model.tolerance();
  const Index k = model.K();
  if (combined.H.cols() != k && combined.rows() > 0) {
    throw Error(ErrorCode::DimensionMismatch, "combined restrictions and design differ in K");
  }
  ConstrainedCore out;
  out.diag.push_back({Condition::CombinedConsistency, combined.consistent,
                      combined.rank_augmented.numeric_rank, combined.rank_H.numeric_rank});
  if (!combined.consistent) {
    throw Error(ErrorCode::InconsistentRestrictions,
                "combined restrictions are inconsistent: rk(H) < rk(H, h)",
                Condition::CombinedConsistency);
  }
  const Matrix h_matrix = combined.rows() > 0 ? combined.H : Matrix(0, k);
  out.weighted_design = model.X().transpose() * model.dispersion_spectrum().pseudo_inverse();
  out.cplus = symmetrize(out.weighted_design * model.X());

  const Matrix n = null_space_basis(h_matrix, tol);
  if (n.cols() > 0) {
    const Matrix s = symmetrize(n.transpose() * out.cplus * n);
    const SpectralDecomposition s_spec = spectral_decompose(s, tol);
    out.diag.push_back({Condition::SMatrixInvertible, s_spec.rank == s.rows(), s_spec.rank, s.rows()});
    if (s_spec.rank < s.rows()) {
      const RankCheck ident = check_joint_identification(model.X(), h_matrix, tol);
      throw Error(ErrorCode::SMatrixSingular,
                  "S = N'C+N is singular (rank " + std::to_string(s_spec.rank) + " < " +
                      std::to_string(s.rows()) + "); rank of (H; X) is " +
                      std::to_string(ident.rank.numeric_rank) + " for K = " + std::to_string(k),
                  Condition::SMatrixInvertible);
    }
    out.projector = symmetrize(n * s_spec.pseudo_inverse() * n.transpose());
  } else {
    out.diag.push_back({Condition::SMatrixInvertible, true, 0, 0});
    out.projector = Matrix::Zero(k, k);
  }

  out.beta_star = particular ? *particular : Vector(moore_penrose(h_matrix, tol) * combined.h);
  if (out.beta_star.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "particular solution must have K entries");
  }
  if (combined.rows() > 0) {
    const double miss = max_abs(combined.H * out.beta_star - combined.h);
    if (miss > kRestrictionTolerance * (1.0 + max_abs(combined.h))) {
      throw Error(ErrorCode::InfeasibleParticular,
                  "particular point violates H beta* = h (max deviation " + std::to_string(miss) + ")");
    }
  }
  return out;
}

}  // namespace

RidgeSpec RidgeSpec::scalar(double psi, Index k) {
  return full(psi * Matrix::Identity(k, k));
}

RidgeSpec RidgeSpec::blocks(const std::vector<double>& psi, const std::vector<Index>& widths) {
  if (psi.size() != widths.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one ridge parameter per block is required");
  }
  Index k = 0;
  for (Index w : widths) k += w;
  Vector diag(k);
  Index pos = 0;
  for (size_t i = 0; i < psi.size(); ++i) {
    diag.segment(pos, widths[i]).setConstant(psi[i]);
    pos += widths[i];
  }
  return full(diag.asDiagonal());
}

RidgeSpec RidgeSpec::full(Matrix psi) {
  try {
    spectral_decompose(psi);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidArgument,
                std::string("ridge penalty must be symmetric nonnegative definite: ") + e.what());
  }
  return RidgeSpec{std::move(psi)};
}

StochasticRestrictions StochasticRestrictions::make(Matrix R, Vector r, Matrix theta,
                                                    Matrix forecast_design) {
  if (forecast_design.size() == 0) {
    forecast_design = Matrix::Identity(R.cols(), R.cols());
  }
  if (R.rows() != r.size() || theta.rows() != R.rows() || theta.cols() != R.rows() ||
      forecast_design.rows() != R.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "stochastic restriction dimensions do not conform");
  }
  return StochasticRestrictions{std::move(R), std::move(r), std::move(forecast_design),
                                std::move(theta)};
}

EstimateResult ols(const GaussMarkoffModel& model) {
  std::vector<ConditionCheck> diag;
  require_full_rank_design(model.X(), model.tolerance(), diag);
  const Index t = model.T();
  WhitenedFit fit = fit_full_rank(model.X(), model.y(), Matrix::Identity(t, t));
  return finish(model, EstimatorTag::OLS, fit.beta, fit.map, Vector::Zero(model.K()), diag);
}

EstimateResult gls(const GaussMarkoffModel& model) {
  std::vector<ConditionCheck> diag;
  require_regular_dispersion(model, diag);
  require_full_rank_design(model.X(), model.tolerance(), diag);
  const Matrix w = cholesky_whitener(model.dispersion(), "dispersion");
  WhitenedFit fit = fit_full_rank(w * model.X(), w * model.y(), w);
  return finish(model, EstimatorTag::GLS, fit.beta, fit.map, Vector::Zero(model.K()), diag, fit.cinv);
}

EstimateResult rols(const GaussMarkoffModel& model, const LinearRestrictions& res) {
  std::vector<ConditionCheck> diag;
  require_restrictions_usable(model.X(), res, model.tolerance(), diag);
  const Index t = model.T();
  AffineFit fit = restricted_fit(model.X(), model.y(), Matrix::Identity(t, t), res, model.tolerance());
  return finish(model, EstimatorTag::ROLS, fit.beta, fit.map, fit.offset, diag);
}

EstimateResult rgls(const GaussMarkoffModel& model, const LinearRestrictions& res) {
  std::vector<ConditionCheck> diag;
  require_regular_dispersion(model, diag);
  require_restrictions_usable(model.X(), res, model.tolerance(), diag);
  const Matrix w = cholesky_whitener(model.dispersion(), "dispersion");
  AffineFit fit = restricted_fit(w * model.X(), w * model.y(), w, res, model.tolerance());
  return finish(model, EstimatorTag::RGLS, fit.beta, fit.map, fit.offset, diag);
}

EstimateResult ridge(const GaussMarkoffModel& model, const RidgeSpec& spec) {
  const Index k = model.K();
  if (spec.penalty.rows() != k || spec.penalty.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "ridge penalty must be K x K");
  }
  const Matrix shifted = symmetrize(model.X().transpose() * model.X() + spec.penalty);
  const SpectralDecomposition spectrum = spectral_decompose(shifted, model.tolerance());
  if (spectrum.rank < k) {
    throw Error(ErrorCode::ShiftInsufficient,
                "X'X + Psi is numerically singular (rank " + std::to_string(spectrum.rank) + " < K = " +
                    std::to_string(k) + ")");
  }
  const Matrix map = spectrum.pseudo_inverse() * model.X().transpose();
  Vector beta = map * model.y();
  return finish(model, EstimatorTag::Ridge, beta, map, Vector::Zero(k), {});
}

EstimateResult stochastic_restricted_gls(const GaussMarkoffModel& model,
                                         const StochasticRestrictions& sres) {
  const Index k = model.K();
  if (sres.forecast_design.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "R X_f must have K columns");
  }
  if (sres.q() == 0) {
    EstimateResult out = gls(model);
    out.estimator_tag = EstimatorTag::StochasticRestricted;
    return out;
  }
  std::vector<ConditionCheck> diag;
  require_regular_dispersion(model, diag);
  const double sigma2 = model.sigma2().value_or(1.0);
  const Matrix prior_design = sres.R * sres.forecast_design;
  const RankCheck ident = check_joint_identification(model.X(), prior_design, model.tolerance());
  diag.push_back({Condition::JointIdentification, ident.satisfied, ident.rank.numeric_rank, ident.required});
  if (!ident.satisfied) {
    throw Error(ErrorCode::IdentificationFailure, "stacked design (X; R X_f) is rank deficient",
                Condition::JointIdentification);
  }
  const Matrix w_data = cholesky_whitener(sigma2 * model.dispersion(), "sigma2 * dispersion");
  const Matrix w_prior = cholesky_whitener(sres.theta, "Theta");

  // Prior rows first: they carry the largest weights when Theta is small.
  const Index q = sres.q();
  const Index t = model.T();
  const Matrix xa = stack_rows(w_prior * prior_design, w_data * model.X());
  Matrix whitener = Matrix::Zero(q + t, q + t);
  whitener.topLeftCorner(q, q) = w_prior;
  whitener.bottomRightCorner(t, t) = w_data;
  Vector ya(q + t);
  ya << w_prior * sres.r, w_data * model.y();
  const WhitenedFit fit = fit_full_rank(xa, ya, whitener);
  const Matrix map = fit.map.rightCols(t);
  const Vector offset = fit.map.leftCols(q) * sres.r;
  return finish(model, EstimatorTag::StochasticRestricted, fit.beta, map, offset, diag,
                Matrix(fit.cinv / sigma2));
}

EstimateResult mls(const GaussMarkoffModel& model) {
  MlsFit m = fit_mls(model);
  return finish(model, EstimatorTag::MLS, m.fit.beta, m.fit.map, Vector::Zero(model.K()), m.diag,
                m.fit.cinv);
}

EstimateResult tkn(const GaussMarkoffModel& model, const LinearRestrictions& res) {
  if (res.K() != model.K()) {
    throw Error(ErrorCode::DimensionMismatch, "restrictions and design differ in K");
  }
  MlsFit m = fit_mls(model);
  const TolerancePolicy& tol = model.tolerance();
  const ConsistencyReport consistency = check_restriction_consistency(res, tol);
  m.diag.push_back({Condition::RestrictionConsistency, consistency.consistent,
                    consistency.rank_augmented.numeric_rank, consistency.rank_matrix.numeric_rank});
  if (!consistency.consistent) {
    throw Error(ErrorCode::InconsistentRestrictions, "restrictions are inconsistent: rk(R) < rk(R, r)",
                Condition::RestrictionConsistency);
  }
  const Index k = model.K();
  const Index q = res.q();
  if (q == 0) {
    return finish(model, EstimatorTag::TKN, m.fit.beta, m.fit.map, Vector::Zero(k), m.diag, m.fit.cinv);
  }
  const Matrix gram = symmetrize(res.R * m.fit.cinv * res.R.transpose());
  const SpectralDecomposition gram_spec = spectral_decompose(gram, tol);
  m.diag.push_back({Condition::RestrictionGram, gram_spec.rank == q, gram_spec.rank, q});
  if (gram_spec.rank < q) {
    throw Error(ErrorCode::RestrictionGramSingular,
                "R C+^-1 R' is singular (rank " + std::to_string(gram_spec.rank) + " < q = " +
                    std::to_string(q) + ")",
                Condition::RestrictionGram);
  }
  const Matrix gain = m.fit.cinv * res.R.transpose() * gram_spec.pseudo_inverse();
  Vector beta = m.fit.beta + gain * (res.r - res.R * m.fit.beta);
  Matrix map = (Matrix::Identity(k, k) - gain * res.R) * m.fit.map;
  return finish(model, EstimatorTag::TKN, beta, map, gain * res.r, m.diag);
}

NormalSystemSolution solve_normal_system(const GaussMarkoffModel& model,
                                         const CombinedRestrictions& combined) {
  const Index k = model.K();
  const Index p = combined.rows();
  if (p > 0 && combined.H.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "combined restrictions and design differ in K");
  }
  if (!combined.consistent) {
    throw Error(ErrorCode::InconsistentRestrictions,
                "combined restrictions are inconsistent: rk(H) < rk(H, h)",
                Condition::CombinedConsistency);
  }
  const Matrix weighted = model.X().transpose() * model.dispersion_spectrum().pseudo_inverse();
  Matrix bordered = Matrix::Zero(k + p, k + p);
  bordered.topLeftCorner(k, k) = symmetrize(weighted * model.X());
  if (p > 0) {
    bordered.topRightCorner(k, p) = combined.H.transpose();
    bordered.bottomLeftCorner(p, k) = combined.H;
  }
  Vector rhs(k + p);
  rhs.head(k) = weighted * model.y();
  if (p > 0) rhs.tail(p) = combined.h;

  NormalSystemSolution out;
  out.rank = numeric_rank(bordered, model.tolerance());
  const Index rank_h = combined.rank_H.numeric_rank;
  if (out.rank.numeric_rank < k + rank_h) {
    throw Error(ErrorCode::IdentificationFailure,
                "normal equations do not determine beta uniquely (rank " +
                    std::to_string(out.rank.numeric_rank) + " < K + rk(H) = " +
                    std::to_string(k + rank_h) + ")",
                Condition::JointIdentification);
  }
  // Minimum-norm solution; beta is unique, lambda only when H has full row rank.
  const Vector z = moore_penrose(bordered, model.tolerance()) * rhs;
  out.beta_hat = z.head(k);
  out.lagrange = z.tail(p);
  out.residual_norm = (bordered * z - rhs).norm();
  out.lagrange_unique = rank_h == p;
  return out;
}

EstimateResult constrained_singular_gls(const GaussMarkoffModel& model,
                                        const CombinedRestrictions& combined,
                                        const std::optional<Vector>& particular) {
  ConstrainedCore core = constrained_core(model, combined, particular);
  const Index k = model.K();
  const Matrix map = core.projector * core.weighted_design;
  const Vector offset = (Matrix::Identity(k, k) - core.projector * core.cplus) * core.beta_star;
  Vector beta = map * model.y() + offset;
  return finish(model, EstimatorTag::ConstrainedSingular, beta, map, offset, core.diag, core.projector);
}

EstimateResult linear_representation(const GaussMarkoffModel& model,
                                     const CombinedRestrictions& combined, const Matrix& g_free,
                                     const ImplicitRestrictions& implicit, const Vector& particular) {
  const Index k = model.K();
  if (implicit.A.rows() != model.T() || g_free.rows() != k || g_free.cols() != implicit.A.cols() ||
      implicit.g.size() != implicit.A.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "G_free must be K x (T - M) and conform with the implicit restrictions");
  }
  ConstrainedCore core = constrained_core(model, combined, particular);
  const Matrix map = core.projector * core.weighted_design + g_free * implicit.A.transpose();
  const Vector offset =
      (Matrix::Identity(k, k) - core.projector * core.cplus) * core.beta_star - g_free * implicit.g;
  Vector beta = map * model.y() + offset;
  return finish(model, EstimatorTag::ConstrainedSingular, beta, map, offset, core.diag, core.projector);
}

CombinedRestrictions combined_restrictions(const GaussMarkoffModel& model,
                                           const LinearRestrictions& res) {
  return combine_restrictions(res, extract_implicit_restrictions(model), model.tolerance());
}

}  // namespace glsid
