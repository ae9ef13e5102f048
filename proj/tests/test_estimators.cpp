#include <gtest/gtest.h>

#include "generators.hpp"
#include "glsid/estimators.hpp"
#include "oracles.hpp"

using namespace glsid;

namespace {

double rel_diff(const Matrix& a, const Matrix& b) { return max_abs(a - b) / (1.0 + max_abs(b)); }

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

GaussMarkoffModel regular_model(const gen::Regular& inst) { return build_model(inst.y, inst.x, inst.omega); }

// Random point of {b : H b = h}.
Vector feasible_point(std::mt19937_64& rng, const Matrix& h_mat, const Vector& h) {
  const Matrix hp = oracle::cod_pinv(h_mat);
  const Index k = h_mat.cols();
  const Vector free = gen::normal(rng, k, 1).col(0);
  return hp * h + (Matrix::Identity(k, k) - hp * h_mat) * free;
}

// Singular model with one null direction a and a'X = 0, so the implicit
// restrictions carry no information about beta.
GaussMarkoffModel orthogonal_null_model(std::mt19937_64& rng, Index t, Index k) {
  const Vector a = gen::random_unit(rng, t);
  const Matrix proj = Matrix::Identity(t, t) - a * a.transpose();
  const Matrix omega = symmetrize(proj * gen::spd(rng, t) * proj);
  const Matrix x = proj * gen::normal(rng, t, k);
  const Vector y = x * gen::normal(rng, k, 1).col(0) + gen::psd_root(omega) * gen::normal(rng, t, 1).col(0);
  return build_model(y, x, omega);
}

struct AddingUp {
  GaussMarkoffModel model;
  Matrix direct_a;  // T x m, a on the rows of period t
};

AddingUp adding_up(std::mt19937_64& rng, const gen::Sur& s) {
  const SURLayout layout = s.layout();
  Matrix direct = Matrix::Zero(layout.n * layout.m, layout.m);
  for (Index t = 0; t < layout.m; ++t) direct.block(t * layout.n, t, layout.n, 1) = s.a;
  (void)rng;
  return {stack_sur(layout, s.responses, {StackOrder::PeriodMajor, s.sigmas}), direct};
}

}  // namespace

TEST(Ols, Examples) {
  const auto mean = ols(build_model(gen::vec({1, 2, 3}), Matrix::Ones(3, 1), Matrix::Identity(3, 3)));
  EXPECT_NEAR(mean.beta_hat(0), 2.0, 1e-15);

  // T = K is rejected at model construction, so the identity design is repeated.
  Matrix stacked(4, 2);
  stacked << Matrix::Identity(2, 2), Matrix::Identity(2, 2);
  const auto ident = ols(build_model(gen::vec({4.5, -1.25, 4.5, -1.25}), stacked, Matrix::Identity(4, 4)));
  EXPECT_NEAR(ident.beta_hat(0), 4.5, 1e-14);
  EXPECT_NEAR(ident.beta_hat(1), -1.25, 1e-14);

  const std::vector<std::vector<long long>> x = {{1, 2}, {1, -1}, {1, 4}, {1, 0}};
  const std::vector<long long> y = {3, 1, 7, -2};
  Matrix xm(4, 2);
  Vector ym(4);
  for (Index i = 0; i < 4; ++i) {
    xm(i, 0) = static_cast<double>(x[static_cast<size_t>(i)][0]);
    xm(i, 1) = static_cast<double>(x[static_cast<size_t>(i)][1]);
    ym(i) = static_cast<double>(y[static_cast<size_t>(i)]);
  }
  const auto fit = ols(build_model(ym, xm, Matrix::Identity(4, 4)));
  EXPECT_LE(max_abs(fit.beta_hat - oracle::exact_ols(x, y)), 1e-14);
}

TEST(Ols, RankDeficientDesign) {
  Matrix x = Matrix::Ones(4, 2);
  x(0, 1) = 1.0;
  EXPECT_EQ(code_of([&] { ols(build_model(gen::vec({1, 2, 3, 4}), x, Matrix::Identity(4, 4))); }),
            ErrorCode::DesignRankDeficient);
}

TEST(Gls, IdentityAndScaledIdentityEqualOls) {
  std::mt19937_64 rng(51);
  const gen::Regular inst = gen::regular(rng);
  const Index t = inst.x.rows();
  const auto base = ols(build_model(inst.y, inst.x, Matrix::Identity(t, t)));
  EXPECT_LE(rel_diff(gls(build_model(inst.y, inst.x, Matrix::Identity(t, t))).beta_hat, base.beta_hat), 1e-14);
  EXPECT_LE(rel_diff(gls(build_model(inst.y, inst.x, 3.5 * Matrix::Identity(t, t))).beta_hat, base.beta_hat), 1e-12);
}

TEST(Gls, DiagonalWeightsMatchReparametrizedOls) {
  std::mt19937_64 rng(52);
  const Index t = 12;
  const Matrix x = gen::normal(rng, t, 3);
  const Vector y = gen::normal(rng, t, 1).col(0);
  Vector w(t);
  for (Index i = 0; i < t; ++i) w(i) = 0.2 + static_cast<double>(i);
  const auto fit = gls(build_model(y, x, w.asDiagonal()));
  const Vector scale = w.cwiseSqrt().cwiseInverse();
  const Matrix xs = scale.asDiagonal() * x;
  const Vector ys = scale.asDiagonal() * y;
  const Vector expected = (xs.transpose() * xs).ldlt().solve(xs.transpose() * ys);
  EXPECT_LE(rel_diff(fit.beta_hat, expected), 1e-10);
  const Matrix cov = (xs.transpose() * xs).inverse();
  EXPECT_LE(rel_diff(fit.covariance_factor, cov), 1e-10);
}

TEST(Gls, SingularDispersionRejected) {
  Matrix omega = Matrix::Identity(3, 3);
  omega(2, 2) = 0.0;
  const auto model = build_model(gen::vec({1, 2, 3}), Matrix::Ones(3, 1), omega);
  EXPECT_EQ(code_of([&] { gls(model); }), ErrorCode::DispersionSingular);
}

TEST(Rols, Examples) {
  std::mt19937_64 rng(53);
  const Matrix x = gen::normal(rng, 10, 3);
  const Vector y = gen::normal(rng, 10, 1).col(0);
  const auto model = build_model(y, x, Matrix::Identity(10, 10));

  const Vector r0 = gen::vec({0.5, -2, 7});
  const auto pinned = rols(model, LinearRestrictions::make(Matrix::Identity(3, 3), r0));
  EXPECT_LE(max_abs(pinned.beta_hat - r0), 1e-12);

  const Vector b_ols = ols(model).beta_hat;
  const Matrix r = gen::from_rows({{1, 1, 0}});
  const auto satisfied = rols(model, LinearRestrictions::make(r, r * b_ols));
  EXPECT_LE(rel_diff(satisfied.beta_hat, b_ols), 1e-12);

  const Matrix x2 = gen::normal(rng, 9, 2);
  const Vector y2 = gen::normal(rng, 9, 1).col(0);
  const Matrix sum = gen::from_rows({{1, 1}});
  const auto fit = rols(build_model(y2, x2, Matrix::Identity(9, 9)), LinearRestrictions::make(sum, gen::vec({1})));
  const Vector kkt = oracle::kkt_beta(x2, Matrix::Identity(9, 9), y2, sum, gen::vec({1}));
  EXPECT_LE(rel_diff(fit.beta_hat, kkt), 1e-10);
  EXPECT_NEAR(fit.beta_hat.sum(), 1.0, 1e-12);
}

TEST(Rols, CollinearDesignIdentifiedByRestriction) {
  std::mt19937_64 rng(54);
  Matrix x = gen::normal(rng, 8, 3);
  x.col(2) = x.col(0) + x.col(1);
  const Vector y = gen::normal(rng, 8, 1).col(0);
  const Matrix r = gen::from_rows({{0, 0, 1}});
  const auto fit = rols(build_model(y, x, Matrix::Identity(8, 8)), LinearRestrictions::make(r, gen::vec({0.25})));
  EXPECT_LE(rel_diff(fit.beta_hat, oracle::kkt_beta(x, Matrix::Identity(8, 8), y, r, gen::vec({0.25}))), 1e-10);
  EXPECT_NEAR(fit.beta_hat(2), 0.25, 1e-12);
}

TEST(Rols, PreconditionFailures) {
  std::mt19937_64 rng(55);
  Matrix x = gen::normal(rng, 8, 3);
  x.col(2) = x.col(0);
  const auto model = build_model(gen::normal(rng, 8, 1).col(0), x, Matrix::Identity(8, 8));
  const Matrix r = gen::from_rows({{0, 1, 0}});
  EXPECT_EQ(code_of([&] { rols(model, LinearRestrictions::make(r, gen::vec({1}))); }),
            ErrorCode::IdentificationFailure);
  const Matrix twice = gen::from_rows({{0, 1, 0}, {0, 1, 0}});
  EXPECT_EQ(code_of([&] { rols(model, LinearRestrictions::make(twice, gen::vec({1, 2}))); }),
            ErrorCode::InconsistentRestrictions);
  EXPECT_EQ(code_of([&] { rols(model, LinearRestrictions::make(Matrix::Ones(1, 2), gen::vec({1}))); }),
            ErrorCode::DimensionMismatch);
}

TEST(Rgls, Examples) {
  std::mt19937_64 rng(56);
  const gen::Regular inst = gen::regular(rng);
  const Index t = inst.x.rows();
  const Index k = inst.x.cols();
  const LinearRestrictions res = gen::restrictions(rng, k, 1, 1);

  const auto ident = build_model(inst.y, inst.x, Matrix::Identity(t, t));
  EXPECT_LE(rel_diff(rgls(ident, res).beta_hat, rols(ident, res).beta_hat), 1e-12);

  const auto model = regular_model(inst);
  const Vector b_gls = gls(model).beta_hat;
  const auto satisfied = rgls(model, LinearRestrictions::make(res.R, res.R * b_gls));
  EXPECT_LE(rel_diff(satisfied.beta_hat, b_gls), 1e-10);

  const Matrix winv = inst.omega.inverse();
  const Vector kkt = oracle::kkt_beta(inst.x, winv, inst.y, res.R, res.r);
  EXPECT_LE(rel_diff(rgls(model, res).beta_hat, kkt), 1e-10);

  // Whiten with a Cholesky factor computed here, then restricted OLS.
  const Matrix l_inv = inst.omega.llt().matrixL().solve(Matrix::Identity(t, t));
  const auto whitened = build_model(l_inv * inst.y, l_inv * inst.x, Matrix::Identity(t, t));
  EXPECT_LE(rel_diff(rgls(model, res).beta_hat, rols(whitened, res).beta_hat), 1e-10);
}

TEST(Ridge, Examples) {
  std::mt19937_64 rng(57);
  const Matrix x = gen::normal(rng, 12, 3);
  const Vector y = gen::normal(rng, 12, 1).col(0);
  const auto model = build_model(y, x, Matrix::Identity(12, 12));
  EXPECT_LE(rel_diff(ridge(model, RidgeSpec::scalar(0.0, 3)).beta_hat, ols(model).beta_hat), 1e-10);

  const double psi = 0.7;
  const Vector closed = (x.transpose() * x + psi * Matrix::Identity(3, 3)).ldlt().solve(x.transpose() * y);
  EXPECT_LE(rel_diff(ridge(model, RidgeSpec::scalar(psi, 3)).beta_hat, closed), 1e-12);

  Matrix twin = gen::normal(rng, 10, 2);
  twin.col(1) = twin.col(0);
  const auto sym = ridge(build_model(gen::normal(rng, 10, 1).col(0), twin, Matrix::Identity(10, 10)),
                         RidgeSpec::scalar(1.0, 2));
  EXPECT_NEAR(sym.beta_hat(0), sym.beta_hat(1), 1e-12);
  EXPECT_TRUE(sym.beta_hat.allFinite());

  const Vector base = Eigen::SelfAdjointEigenSolver<Matrix>(x.transpose() * x).eigenvalues();
  const Vector shifted = Eigen::SelfAdjointEigenSolver<Matrix>(x.transpose() * x + psi * Matrix::Identity(3, 3)).eigenvalues();
  EXPECT_LE(max_abs(shifted - (base.array() + psi).matrix()), 1e-10);
}

TEST(Ridge, BlockPenaltyAndShiftInsufficient) {
  const RidgeSpec spec = RidgeSpec::blocks({0.5, 2.0}, {2, 1});
  EXPECT_LE(max_abs(Matrix(spec.penalty) - Matrix(gen::vec({0.5, 0.5, 2.0}).asDiagonal())), 0.0);
  EXPECT_EQ(code_of([] { RidgeSpec::blocks({1.0}, {1, 2}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { RidgeSpec::full(-Matrix::Identity(2, 2)); }), ErrorCode::InvalidArgument);

  Matrix twin = Matrix::Ones(5, 2);
  const auto model = build_model(gen::vec({1, 2, 3, 4, 5}), twin, Matrix::Identity(5, 5));
  EXPECT_EQ(code_of([&] { ridge(model, RidgeSpec::scalar(0.0, 2)); }), ErrorCode::ShiftInsufficient);
}

TEST(StochasticRestricted, LimitsAndEmpty) {
  std::mt19937_64 rng(58);
  const gen::Regular inst = gen::regular(rng);
  const auto model = regular_model(inst);
  const Index k = inst.x.cols();
  const LinearRestrictions res = gen::restrictions(rng, k, std::min<Index>(k, 2), std::min<Index>(k, 2));
  const Index q = res.q();

  const auto tight = stochastic_restricted_gls(model, StochasticRestrictions::make(res.R, res.r, 1e-10 * Matrix::Identity(q, q)));
  EXPECT_LE(rel_diff(tight.beta_hat, rgls(model, res).beta_hat), 1e-4);
  const auto loose = stochastic_restricted_gls(model, StochasticRestrictions::make(res.R, res.r, 1e12 * Matrix::Identity(q, q)));
  EXPECT_LE(rel_diff(loose.beta_hat, gls(model).beta_hat), 1e-4);

  const auto none = stochastic_restricted_gls(model, StochasticRestrictions::make(Matrix(0, k), Vector(0), Matrix(0, 0)));
  EXPECT_TRUE((none.beta_hat.array() == gls(model).beta_hat.array()).all());

  // Mixed estimation in closed form: (X'W X + R'T^-1 R)^-1 (X'W y + R'T^-1 r).
  const Matrix theta = 0.3 * Matrix::Identity(q, q);
  const Matrix w = inst.omega.inverse();
  const Matrix lhs = inst.x.transpose() * w * inst.x + res.R.transpose() * theta.inverse() * res.R;
  const Vector rhs = inst.x.transpose() * w * inst.y + res.R.transpose() * theta.inverse() * res.r;
  const auto mixed = stochastic_restricted_gls(model, StochasticRestrictions::make(res.R, res.r, theta));
  EXPECT_LE(rel_diff(mixed.beta_hat, lhs.ldlt().solve(rhs)), 1e-10);
}

TEST(StochasticRestricted, Errors) {
  EXPECT_EQ(code_of([] { StochasticRestrictions::make(Matrix::Ones(1, 2), gen::vec({1, 2}), Matrix::Ones(1, 1)); }),
            ErrorCode::DimensionMismatch);
  std::mt19937_64 rng(59);
  const gen::Regular inst = gen::regular(rng);
  const Index k = inst.x.cols();
  const auto sres = StochasticRestrictions::make(Matrix::Ones(1, k), gen::vec({1}), Matrix::Zero(1, 1));
  EXPECT_EQ(code_of([&] { stochastic_restricted_gls(regular_model(inst), sres); }), ErrorCode::DispersionSingular);
  EXPECT_EQ(sres.forecast_design.rows(), k);
}

TEST(Mls, RegularDispersionEqualsGls) {
  std::mt19937_64 rng(60);
  const auto model = regular_model(gen::regular(rng));
  EXPECT_LE(rel_diff(mls(model).beta_hat, gls(model).beta_hat), 1e-10);
}

TEST(Mls, ZeroVarianceRowIgnored) {
  Matrix omega = Matrix::Identity(3, 3);
  omega(2, 2) = 0.0;
  const auto fit = mls(build_model(gen::vec({1.5, 4.0, -9.0}), Matrix::Ones(3, 1), omega));
  EXPECT_NEAR(fit.beta_hat(0), (1.5 + 4.0) / 2.0, 1e-14);
}

TEST(Mls, SharedRegressorSystemViolatesTheil) {
  std::mt19937_64 rng(61);
  const gen::Sur s = gen::shared_regressors(rng, 4, 10, 3);
  const auto model = stack_sur(s.layout(), s.responses, {StackOrder::PeriodMajor, s.sigmas});
  EXPECT_EQ(code_of([&] { mls(model); }), ErrorCode::TheilConditionViolated);
  EXPECT_EQ(code_of([&] { tkn(model, LinearRestrictions::none(model.K())); }), ErrorCode::TheilConditionViolated);
}

TEST(Tkn, Examples) {
  std::mt19937_64 rng(62);
  const gen::Regular inst = gen::regular(rng);
  const auto model = regular_model(inst);
  const Index k = inst.x.cols();
  const LinearRestrictions res = gen::restrictions(rng, k, 1, 1);
  EXPECT_LE(rel_diff(tkn(model, res).beta_hat, rgls(model, res).beta_hat), 1e-10);
  const Vector b_mls = mls(model).beta_hat;
  EXPECT_LE(rel_diff(tkn(model, LinearRestrictions::make(res.R, res.R * b_mls)).beta_hat, b_mls), 1e-10);
}

TEST(Tkn, SingularDispersionWithExclusionMatchesConstrained) {
  std::mt19937_64 rng(63);
  const auto model = orthogonal_null_model(rng, 9, 3);
  const Matrix exclusion = gen::from_rows({{0, 1, 0}});
  const LinearRestrictions res = LinearRestrictions::make(exclusion, gen::vec({0}));
  const auto t = tkn(model, res);
  const auto c = constrained_singular_gls(model, combined_restrictions(model, res));
  EXPECT_LE(rel_diff(t.beta_hat, c.beta_hat), 1e-10);
  EXPECT_NEAR(t.beta_hat(1), 0.0, 1e-12);
}

TEST(Tkn, RedundantRowsMakeGramSingular) {
  std::mt19937_64 rng(64);
  const auto model = regular_model(gen::regular(rng));
  const Index k = model.K();
  Matrix r = Matrix::Zero(2, k);
  r.row(0).setOnes();
  r.row(1).setOnes();
  EXPECT_EQ(code_of([&] { tkn(model, LinearRestrictions::make(r, gen::vec({1, 1}))); }),
            ErrorCode::RestrictionGramSingular);
}

TEST(NormalSystem, Examples) {
  std::mt19937_64 rng(65);
  const gen::Regular inst = gen::regular(rng);
  const auto model = regular_model(inst);
  const Index k = model.K();
  const auto empty = solve_normal_system(model, combined_restrictions(model, LinearRestrictions::none(k)));
  const Matrix w = oracle::cod_pinv(inst.omega);
  EXPECT_LE(max_abs(inst.x.transpose() * w * inst.x * empty.beta_hat - inst.x.transpose() * w * inst.y),
            1e-9 * (1.0 + max_abs(inst.x.transpose() * w * inst.y)));
  EXPECT_EQ(empty.lagrange.size(), 0);

  const Vector b0 = gen::normal(rng, k, 1).col(0);
  const auto pinned = solve_normal_system(model, combined_restrictions(model, LinearRestrictions::make(Matrix::Identity(k, k), b0)));
  EXPECT_LE(max_abs(pinned.beta_hat - b0), 1e-10 * (1.0 + max_abs(b0)));
  EXPECT_TRUE(pinned.lagrange_unique);

  const LinearRestrictions once = gen::restrictions(rng, k, 1, 1);
  const LinearRestrictions twice = LinearRestrictions::make(stack_rows(once.R, once.R), gen::vec({once.r(0), once.r(0)}));
  const auto unique = solve_normal_system(model, combined_restrictions(model, once));
  const auto redundant = solve_normal_system(model, combined_restrictions(model, twice));
  EXPECT_TRUE(unique.lagrange_unique);
  EXPECT_FALSE(redundant.lagrange_unique);
  EXPECT_LE(rel_diff(redundant.beta_hat, unique.beta_hat), 1e-9);
  EXPECT_LE(rel_diff(redundant.beta_hat, oracle::kkt_beta(inst.x, w, inst.y, twice.R, twice.r)), 1e-9);
  // The minimum-norm multipliers split the single multiplier evenly.
  EXPECT_NEAR(redundant.lagrange(0), redundant.lagrange(1), 1e-8 * (1.0 + std::abs(unique.lagrange(0))));
}

TEST(ConstrainedSingular, EmptyHEqualsMls) {
  std::mt19937_64 rng(66);
  const auto model = regular_model(gen::regular(rng));
  const auto c = constrained_singular_gls(model, combined_restrictions(model, LinearRestrictions::none(model.K())));
  EXPECT_LE(rel_diff(c.beta_hat, mls(model).beta_hat), 1e-10);
  EXPECT_LE(rel_diff(c.covariance_factor, mls(model).covariance_factor), 1e-10);
}

TEST(ConstrainedSingular, CollinearAddingUpSystemMatchesKkt) {
  std::mt19937_64 rng(67);
  const Vector a = Vector::Constant(3, 1.0 / std::sqrt(3.0));
  gen::Sur s = gen::sur(rng, 3, 4, {2, 3, 2}, a);
  s.designs[1].col(2) = s.designs[1].col(0);
  gen::fill_responses(rng, s);
  const AddingUp sys = adding_up(rng, s);
  const Index k = sys.model.K();
  // Pin the coefficient of the duplicated column.
  Matrix r = Matrix::Zero(1, k);
  r(0, 4) = 1.0;
  const LinearRestrictions res = LinearRestrictions::make(r, gen::vec({0.5}));
  EXPECT_EQ(code_of([&] { constrained_singular_gls(sys.model, combined_restrictions(sys.model, LinearRestrictions::none(k))); }),
            ErrorCode::SMatrixSingular);
  const auto fit = constrained_singular_gls(sys.model, combined_restrictions(sys.model, res));

  const Matrix h_oracle = stack_rows(r, sys.direct_a.transpose() * sys.model.X());
  Vector h(1 + sys.direct_a.cols());
  h << 0.5, sys.direct_a.transpose() * sys.model.y();
  const Vector kkt = oracle::kkt_beta(sys.model.X(), oracle::cod_pinv(sys.model.dispersion()), sys.model.y(), h_oracle, h);
  EXPECT_LE(rel_diff(fit.beta_hat, kkt), 1e-9);
  EXPECT_LE(max_abs(h_oracle * fit.beta_hat - h), 1e-9 * (1.0 + max_abs(h)));
}

TEST(ConstrainedSingular, ParticularPointInvariance) {
  std::mt19937_64 rng(68);
  const gen::Sur s = gen::sur(rng, 3, 3, {2, 1, 2}, gen::random_unit(rng, 3));
  const AddingUp sys = adding_up(rng, s);
  const Matrix r = gen::normal(rng, 1, sys.model.K());
  const LinearRestrictions res = LinearRestrictions::make(r, r * s.beta);
  const CombinedRestrictions combined = combined_restrictions(sys.model, res);
  ASSERT_EQ(oracle::cod_rank(combined.H), 4);
  const Vector base = constrained_singular_gls(sys.model, combined).beta_hat;
  for (int draw = 0; draw < 10; ++draw) {
    const Vector star = feasible_point(rng, combined.H, combined.h);
    EXPECT_LE(max_abs(constrained_singular_gls(sys.model, combined, star).beta_hat - base), 1e-10 * (1.0 + max_abs(base)));
  }
  Vector infeasible = feasible_point(rng, combined.H, combined.h);
  infeasible += combined.H.row(0).transpose();
  EXPECT_EQ(code_of([&] { constrained_singular_gls(sys.model, combined, infeasible); }), ErrorCode::InfeasibleParticular);
}

TEST(LinearRepresentation, Examples) {
  std::mt19937_64 rng(69);
  const gen::Sur s = gen::sur(rng, 3, 3, {1, 2, 2}, gen::random_unit(rng, 3));
  const AddingUp sys = adding_up(rng, s);
  const Index k = sys.model.K();
  const Matrix r = gen::normal(rng, 1, k);
  const LinearRestrictions res = LinearRestrictions::make(r, r * s.beta);
  const CombinedRestrictions combined = combined_restrictions(sys.model, res);
  const ImplicitRestrictions implicit = extract_implicit_restrictions(sys.model);
  const Vector star = oracle::cod_pinv(combined.H) * combined.h;
  const Index nulls = implicit.A.cols();

  const auto base = constrained_singular_gls(sys.model, combined);
  const auto zero = linear_representation(sys.model, combined, Matrix::Zero(k, nulls), implicit, star);
  EXPECT_LE(rel_diff(zero.beta_hat, base.beta_hat), 1e-12);
  EXPECT_LE(rel_diff(zero.linear_map, base.linear_map), 1e-12);

  const Matrix g1 = gen::normal(rng, k, nulls);
  const Matrix g2 = gen::normal(rng, k, nulls);
  const auto r1 = linear_representation(sys.model, combined, g1, implicit, star);
  const auto r2 = linear_representation(sys.model, combined, g2, implicit, star);
  EXPECT_LE(rel_diff(r1.beta_hat, base.beta_hat), 1e-10);
  EXPECT_LE(rel_diff(r2.beta_hat, base.beta_hat), 1e-10);
  EXPECT_GT(max_abs(r1.linear_map - r2.linear_map), 1e-3);
  // The maps differ only by terms annihilated on {y : A'y = g}.
  EXPECT_LE(max_abs((r1.linear_map - r2.linear_map) - (g1 - g2) * implicit.A.transpose()), 1e-10);

  EXPECT_EQ(code_of([&] { linear_representation(sys.model, combined, Matrix::Zero(k + 1, nulls), implicit, star); }),
            ErrorCode::DimensionMismatch);
}

TEST(EstimatorProperties, EquivalenceLattice) {
  std::mt19937_64 rng(70);
  for (int rep = 0; rep < 40; ++rep) {
    const gen::Regular inst = gen::regular(rng);
    const Index t = inst.x.rows();
    const Index k = inst.x.cols();
    const auto ident = build_model(inst.y, inst.x, Matrix::Identity(t, t));
    EXPECT_LE(rel_diff(gls(ident).beta_hat, ols(ident).beta_hat), 1e-10);
    const auto model = regular_model(inst);
    EXPECT_LE(rel_diff(mls(model).beta_hat, gls(model).beta_hat), 1e-10);
    const LinearRestrictions res = gen::restrictions(rng, k, gen::uniform(rng, 1, k), gen::uniform(rng, 1, k));
    const Index rk = oracle::cod_rank(res.R);
    if (rk == res.q()) {
      EXPECT_LE(rel_diff(tkn(model, res).beta_hat, rgls(model, res).beta_hat), 1e-10);
    }
    EXPECT_LE(rel_diff(rols(ident, res).beta_hat, oracle::kkt_beta(inst.x, Matrix::Identity(t, t), inst.y, res.R, res.r)),
              1e-9);
    EXPECT_LE(rel_diff(constrained_singular_gls(model, combined_restrictions(model, LinearRestrictions::none(k))).beta_hat,
                       mls(model).beta_hat),
              1e-10);
  }
}

TEST(EstimatorProperties, RestrictionSatisfaction) {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 40; ++rep) {
    const gen::Regular inst = gen::regular(rng);
    const auto model = regular_model(inst);
    const Index k = model.K();
    const Index q = gen::uniform(rng, 1, k);
    const LinearRestrictions res = gen::restrictions(rng, k, q, q);
    const double bound = 1e-9 * (1.0 + max_abs(res.r));
    EXPECT_LE(max_abs(res.R * rols(model, res).beta_hat - res.r), bound);
    EXPECT_LE(max_abs(res.R * rgls(model, res).beta_hat - res.r), bound);
    EXPECT_LE(max_abs(res.R * tkn(model, res).beta_hat - res.r), bound);
    const auto combined = combined_restrictions(model, res);
    EXPECT_LE(max_abs(combined.H * constrained_singular_gls(model, combined).beta_hat - combined.h), bound);
  }
}

TEST(EstimatorProperties, ScaleEquivariance) {
  std::mt19937_64 rng(72);
  const gen::Regular inst = gen::regular(rng);
  const Index k = inst.x.cols();
  const LinearRestrictions res = gen::restrictions(rng, k, 1, 1);
  const auto base = regular_model(inst);
  const auto scaled = build_model(inst.y, inst.x, 17.0 * inst.omega);
  EXPECT_LE(rel_diff(gls(scaled).beta_hat, gls(base).beta_hat), 1e-10);
  EXPECT_LE(rel_diff(mls(scaled).beta_hat, mls(base).beta_hat), 1e-10);
  EXPECT_LE(rel_diff(rgls(scaled, res).beta_hat, rgls(base, res).beta_hat), 1e-10);
  EXPECT_LE(rel_diff(tkn(scaled, res).beta_hat, tkn(base, res).beta_hat), 1e-10);
  EXPECT_LE(rel_diff(constrained_singular_gls(scaled, combined_restrictions(scaled, res)).beta_hat,
                     constrained_singular_gls(base, combined_restrictions(base, res)).beta_hat),
            1e-10);
  EXPECT_LE(rel_diff(normalize_trace(base).dispersion().trace() * Matrix::Ones(1, 1), base.T() * Matrix::Ones(1, 1)), 1e-12);
}

TEST(EstimatorProperties, LinearMapReproducesEstimate) {
  std::mt19937_64 rng(73);
  const gen::Regular inst = gen::regular(rng);
  const auto model = regular_model(inst);
  const LinearRestrictions res = gen::restrictions(rng, model.K(), 1, 1);
  for (const auto& fit : {ols(model), gls(model), mls(model), rols(model, res), rgls(model, res), tkn(model, res)}) {
    EXPECT_LE(max_abs(fit.linear_map * model.y() + fit.offset - fit.beta_hat), 1e-9 * (1.0 + max_abs(fit.beta_hat)));
    EXPECT_LE(max_abs(fit.residuals - (model.y() - model.X() * fit.beta_hat)), 1e-12 * (1.0 + max_abs(model.y())));
  }
}
