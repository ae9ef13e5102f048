#include "glsid/fe_panel.hpp"

#include <cmath>
#include <string>

#include "glsid/identification.hpp"

namespace glsid {

namespace {

Matrix inverse_spd(const Matrix& s, const char* what, ErrorCode code) {
  Eigen::LLT<Matrix> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) {
    throw Error(code, std::string(what) + " is not positive definite");
  }
  return llt.solve(Matrix::Identity(s.rows(), s.cols()));
}

// P_i = W_i - W_i e (e' W_i e)^-1 e' W_i with W_i = Sigma_ii^-1.
Matrix gls_projector_block(const Matrix& sigma) {
  const Matrix w = inverse_spd(sigma, "Sigma block", ErrorCode::DispersionNotPD);
  const Vector we = w.rowwise().sum();
  return symmetrize(w - we * we.transpose() / we.sum());
}

void require_fe_identification(const FEPanelModel& model, std::vector<ConditionCheck>& diag) {
  const Matrix xz = stack_cols(model.X(), model.dummies());
  const RankReport rank = numeric_rank(xz, model.tolerance());
  const Index required = model.K() + model.n();
  const bool ok = rank.numeric_rank == required;
  diag.push_back({Condition::JointIdentification, ok, rank.numeric_rank, required});
  if (!ok) {
    throw Error(ErrorCode::IdentificationFailure,
                "slopes are not identified apart from the fixed effects: rank of (X, Z) is " +
                    std::to_string(rank.numeric_rank) + " < K + n = " + std::to_string(required),
                Condition::JointIdentification);
  }
}

EstimateResult panel_result(const FEPanelModel& model, EstimatorTag tag, const Matrix& normal,
                            const Matrix& map, std::vector<ConditionCheck> diag) {
  const Matrix cinv = symmetrize(inverse_spd(normal, "normal matrix", ErrorCode::IdentificationFailure));
  EstimateResult out;
  out.linear_map = cinv * map;
  out.beta_hat = out.linear_map * model.y();
  out.offset = Vector::Zero(model.K());
  out.covariance_factor = cinv;
  out.residuals = model.y() - model.X() * out.beta_hat;
  out.estimator_tag = tag;
  out.diagnostics = std::move(diag);
  return out;
}

void validate_layout(const std::vector<Matrix>& designs, const std::vector<Vector>& responses) {
  if (designs.empty() || designs.size() != responses.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one design and one response per equation are required");
  }
  const Index m = designs.front().rows();
  const Index k = designs.front().cols();
  for (size_t i = 0; i < designs.size(); ++i) {
    if (designs[i].rows() != m || designs[i].cols() != k || responses[i].size() != m) {
      throw Error(ErrorCode::DimensionMismatch,
                  "equation " + std::to_string(i + 1) + " does not conform to m x K");
    }
    require_finite(designs[i], "panel design");
    require_finite(responses[i], "panel response");
  }
}

}  // namespace

Matrix FEPanelModel::dummies() const {
  Matrix z = Matrix::Zero(T(), n_);
  for (Index i = 0; i < n_; ++i) z.block(i * m_, i, m_, 1).setOnes();
  return z;
}

FEPanelModel build_fe_model(const std::vector<Matrix>& designs, const std::vector<Vector>& responses,
                            const Matrix& sigma, const TolerancePolicy& tol) {
  std::vector<Matrix> blocks(designs.size(), sigma);
  FEPanelModel model = build_fe_model(designs, responses, blocks, tol);
  model.kronecker_ = true;
  return model;
}

FEPanelModel build_fe_model(const std::vector<Matrix>& designs, const std::vector<Vector>& responses,
                            const std::vector<Matrix>& sigma_blocks, const TolerancePolicy& tol) {
  validate_layout(designs, responses);
  const Index n = static_cast<Index>(designs.size());
  const Index m = designs.front().rows();
  if (static_cast<Index>(sigma_blocks.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "one Sigma block per equation is required");
  }
  for (const auto& s : sigma_blocks) {
    if (s.rows() != m || s.cols() != m) {
      throw Error(ErrorCode::DimensionMismatch, "Sigma blocks must be m x m");
    }
    require_finite(s, "Sigma block");
    SpectralDecomposition spec;
    try {
      spec = spectral_decompose(s, tol);
    } catch (const Error& e) {
      throw Error(ErrorCode::DispersionNotPD, std::string("Sigma is not positive definite: ") + e.what());
    }
    if (spec.rank < m) {
      throw Error(ErrorCode::DispersionNotPD, "Sigma is singular (rank " + std::to_string(spec.rank) +
                                                  " < m = " + std::to_string(m) + ")");
    }
  }
  FEPanelModel model;
  model.n_ = n;
  model.m_ = m;
  model.x_.resize(n * m, designs.front().cols());
  model.y_.resize(n * m);
  for (Index i = 0; i < n; ++i) {
    model.x_.middleRows(i * m, m) = designs[static_cast<size_t>(i)];
    model.y_.segment(i * m, m) = responses[static_cast<size_t>(i)];
  }
  model.sigma_ = sigma_blocks;
  model.tol_ = tol;
  return model;
}

Matrix centering_matrix(Index m) {
  return Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / static_cast<double>(m));
}

ProjectorSet build_projectors(const FEPanelModel& model, const ProjectorOptions& options) {
  const Index t = model.T();
  if (t > options.dense_cap) {
    throw Error(ErrorCode::InvalidArgument,
                "T = " + std::to_string(t) + " exceeds the dense projector cap; use apply_gls_projector");
  }
  const Index m = model.m();
  ProjectorSet out;
  out.centering = centering_matrix(m);
  out.M = Matrix::Zero(t, t);
  std::vector<Matrix> weights;
  for (Index i = 0; i < model.n(); ++i) {
    out.M.block(i * m, i * m, m, m) = out.centering;
    weights.push_back(inverse_spd(model.sigma(i), "Sigma block", ErrorCode::DispersionNotPD));
  }
  const Matrix w = block_diagonal(weights);
  const Matrix z = model.dummies();
  const Matrix zw = z.transpose() * w;
  out.Q = z * (zw * z).ldlt().solve(zw);
  out.P = w * (Matrix::Identity(t, t) - out.Q);
  return out;
}

Matrix apply_gls_projector(const FEPanelModel& model, const Matrix& v) {
  if (v.rows() != model.T()) {
    throw Error(ErrorCode::DimensionMismatch, "operand must have T rows");
  }
  const Index m = model.m();
  Matrix out(v.rows(), v.cols());
  for (Index i = 0; i < model.n(); ++i) {
    out.middleRows(i * m, m) = gls_projector_block(model.sigma(i)) * v.middleRows(i * m, m);
  }
  return out;
}

EstimateResult fe_gls(const FEPanelModel& model) {
  std::vector<ConditionCheck> diag;
  require_fe_identification(model, diag);
  const Matrix px = apply_gls_projector(model, model.X());
  return panel_result(model, EstimatorTag::PanelGLS, symmetrize(model.X().transpose() * px),
                      px.transpose(), diag);
}

GaussMarkoffModel within_transform(const FEPanelModel& model) {
  const Index m = model.m();
  const Matrix mm = centering_matrix(m);
  Matrix x(model.T(), model.K());
  Vector y(model.T());
  std::vector<Matrix> blocks;
  for (Index i = 0; i < model.n(); ++i) {
    x.middleRows(i * m, m) = mm * model.design_block(i);
    y.segment(i * m, m) = mm * model.response_block(i);
    blocks.push_back(symmetrize(mm * model.sigma(i) * mm));
  }
  return build_model(y, x, block_diagonal(blocks), {std::nullopt, model.tolerance()});
}

EstimateResult fe_mls(const FEPanelModel& model) {
  std::vector<ConditionCheck> diag;
  require_fe_identification(model, diag);
  const Index m = model.m();
  const Index k = model.K();
  // Orthonormal complement F of the fixed null direction e_m / sqrt(m).
  const Matrix f = null_space_basis(Matrix::Ones(1, m), model.tolerance());

  Matrix fx(0, k);
  for (Index i = 0; i < model.n(); ++i) fx = stack_rows(fx, f.transpose() * model.design_block(i));
  const RankReport rank = numeric_rank(fx, model.tolerance());
  diag.push_back({Condition::MlsInvertibility, rank.numeric_rank == k, rank.numeric_rank, k});
  if (rank.numeric_rank < k) {
    throw Error(ErrorCode::TheilConditionViolated, "F'MX is rank deficient on the within model",
                Condition::MlsInvertibility);
  }

  Matrix normal = Matrix::Zero(k, k);
  Matrix map(k, model.T());
  for (Index i = 0; i < model.n(); ++i) {
    // Block of M (I (x) M_m Sigma M_m)+ M is F (F' Sigma F)^-1 F'.
    const Matrix inner = pseudo_inverse(symmetrize(f.transpose() * model.sigma(i) * f), model.tolerance());
    const Matrix weight = f * inner * f.transpose();
    const Matrix xi = model.design_block(i);
    normal += xi.transpose() * weight * xi;
    map.middleCols(i * m, m) = xi.transpose() * weight;
  }
  return panel_result(model, EstimatorTag::PanelMLS, symmetrize(normal), map, diag);
}

EstimateResult fe_drop_period(const FEPanelModel& model, Index dropped_period) {
  const Index m = model.m();
  if (dropped_period < 1 || dropped_period > m) {
    throw Error(ErrorCode::InvalidArgument, "dropped period " + std::to_string(dropped_period) +
                                                " is outside 1.." + std::to_string(m));
  }
  std::vector<ConditionCheck> diag;
  require_fe_identification(model, diag);
  const Index k = model.K();
  const Index drop = dropped_period - 1;
  // Selection of the m - 1 retained rows applied to M_m.
  Matrix keep = Matrix::Zero(m - 1, m);
  for (Index t = 0, r = 0; t < m; ++t) {
    if (t != drop) keep(r++, t) = 1.0;
  }
  const Matrix reducer = keep * centering_matrix(m);

  Matrix normal = Matrix::Zero(k, k);
  Matrix map(k, model.T());
  for (Index i = 0; i < model.n(); ++i) {
    const Matrix reduced_sigma = symmetrize(reducer * model.sigma(i) * reducer.transpose());
    const Matrix w = inverse_spd(reduced_sigma, "reduced within dispersion", ErrorCode::DispersionSingular);
    const Matrix xr = reducer * model.design_block(i);
    normal += xr.transpose() * w * xr;
    map.middleCols(i * m, m) = xr.transpose() * w * reducer;
  }
  return panel_result(model, EstimatorTag::PanelGLS, symmetrize(normal), map, diag);
}

EquivalenceReport verify_fe_equivalence(const FEPanelModel& model, double tolerance) {
  EquivalenceReport report;
  report.tolerance = tolerance;
  const Index m = model.m();
  const Matrix mm = centering_matrix(m);
  double worst = 0.0;
  double scale = 0.0;
  try {
    for (Index i = 0; i < model.n(); ++i) {
      const Matrix p = gls_projector_block(model.sigma(i));
      const Matrix target = mm * pseudo_inverse(symmetrize(mm * model.sigma(i) * mm), model.tolerance()) * mm;
      worst = std::max(worst, max_abs(p - target));
      scale = std::max(scale, max_abs(p));
    }
    report.projector_discrepancy = worst;
    report.projector_pass = worst <= tolerance * (1.0 + scale);
    report.beta_gls = fe_gls(model).beta_hat;
    report.beta_mls = fe_mls(model).beta_hat;
    report.beta_discrepancy = max_abs(report.beta_gls - report.beta_mls);
    report.beta_pass = report.beta_discrepancy <= tolerance * (1.0 + max_abs(report.beta_gls));
  } catch (const Error&) {
    report.beta_pass = false;
    report.beta_discrepancy = std::numeric_limits<double>::infinity();
  }
  return report;
}

EquivalenceReport verify_fe_equivalence(const FEPanelModel& model, const Matrix& projector, double tolerance) {
  EquivalenceReport report = verify_fe_equivalence(model, tolerance);
  const Index t = model.T();
  if (projector.rows() != t || projector.cols() != t) {
    throw Error(ErrorCode::DimensionMismatch, "projector must be T x T");
  }
  const Index m = model.m();
  const Matrix mm = centering_matrix(m);
  Matrix target = Matrix::Zero(t, t);
  for (Index i = 0; i < model.n(); ++i) {
    target.block(i * m, i * m, m, m) =
        mm * pseudo_inverse(symmetrize(mm * model.sigma(i) * mm), model.tolerance()) * mm;
  }
  report.projector_discrepancy = max_abs(projector - target);
  report.projector_pass = report.projector_discrepancy <= tolerance * (1.0 + max_abs(projector));
  return report;
}

}  // namespace glsid
