#include "glsid/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "glsid/csv.hpp"
#include "glsid/estimators.hpp"
#include "glsid/fe_panel.hpp"
#include "glsid/identification.hpp"
#include "glsid/mc_verify.hpp"
#include "glsid/report.hpp"

namespace glsid {

namespace {

struct Options {
  std::string design;
  std::string response;
  std::string dispersion;
  std::string restrictions;
  std::string panel;
  std::string method;
  std::string output = "human";
  std::string scenario;
  std::string sur_widths;
  double tol = 0.0;
  double ridge_psi = 0.0;
  double theta = 0.0;
  double sigma2 = 1.0;
  double inject_bias = 0.0;
  std::uint64_t seed = 42;
  Index reps = 1000;
  Index drop_period = 0;
  unsigned threads = 1;

  // Which options were given, in declaration order, for the report echo.
  std::vector<std::pair<std::string, std::string>> given;
  bool has(const std::string& name) const {
    return std::any_of(given.begin(), given.end(), [&](const auto& g) { return g.first == name; });
  }
};

std::string base(const std::string& path) { return std::filesystem::path(path).filename().string(); }

TolerancePolicy resolve_tolerance(const Options& o, ReportDocument& doc) {
  TolerancePolicy tol;
  ReportDocument t;
  if (o.has("tol")) {
    tol.absolute = o.tol;
    t["source"] = "flag";
  } else if (const char* env = std::getenv("GLSID_TOL"); env && *env) {
    const std::string s(env);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::InvalidArgument, "GLSID_TOL is not a number: '" + s + "'");
    }
    tol.absolute = v;
    t["source"] = "environment";
  } else {
    t["source"] = "default";
  }
  if (tol.absolute && !(*tol.absolute >= 0.0 && std::isfinite(*tol.absolute))) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be a nonnegative number");
  }
  t["policy"] = tol.absolute ? "absolute" : "max(rows, cols) * eps * largest value";
  t["value"] = tol.absolute ? ReportDocument(*tol.absolute) : ReportDocument(nullptr);
  doc["tolerance"] = t;
  return tol;
}

ReportDocument check_entry(Condition c, bool satisfied, Index rank, Index required) {
  ReportDocument e;
  e["id"] = condition_id(c);
  e["formula"] = condition_formula(c);
  e["satisfied"] = satisfied;
  e["rank"] = rank;
  e["required"] = required;
  return e;
}

ReportDocument diagnostics_report(const std::vector<ConditionCheck>& checks) {
  ReportDocument out = ReportDocument::array();
  for (const auto& c : checks) out.push_back(check_entry(c.condition, c.satisfied, c.rank, c.required));
  return out;
}

ReportDocument witness_report(const TheilWitness& w) {
  ReportDocument out;
  out["violated"] = w.violated();
  out["kind"] = to_string(w.kind);
  out["rank_FX"] = w.rank.numeric_rank;
  out["a"] = to_report(w.a);
  ReportDocument weighted = ReportDocument::array();
  for (Index i : w.weighted_equations) weighted.push_back(i + 1);
  out["weighted_equations"] = weighted;
  out["single_weight"] = w.single_weight;
  if (w.violated()) {
    out["violating_equation"] =
        w.violating_equation ? ReportDocument(*w.violating_equation + 1) : ReportDocument(nullptr);
    out["d"] = to_report(w.d);
    out["s"] = to_report(w.s);
    out["residual"] = w.residual;
  }
  return out;
}

std::vector<Index> parse_widths(const std::string& text) {
  std::vector<Index> out;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string field = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    long v = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || v < 1) {
      throw Error(ErrorCode::InvalidArgument, "--sur-widths must be positive integers separated by commas");
    }
    out.push_back(static_cast<Index>(v));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Period blocks of a period-major T x T dispersion, or nothing if it has
// nonzero entries off the n x n diagonal blocks.
std::optional<std::vector<Matrix>> period_blocks(const Matrix& omega, Index n, Index m) {
  std::vector<Matrix> blocks;
  for (Index t = 0; t < m; ++t) {
    for (Index s = 0; s < m; ++s) {
      if (s != t && omega.block(t * n, s * n, n, n).cwiseAbs().maxCoeff() != 0.0) return std::nullopt;
    }
    blocks.push_back(omega.block(t * n, t * n, n, n));
  }
  return blocks;
}

GaussMarkoffModel load_model(const Options& o, const TolerancePolicy& tol, ReportDocument& doc) {
  if (o.design.empty() || o.response.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--design and --response are required");
  }
  const Matrix x = read_matrix_csv(o.design);
  ModelOptions options;
  options.tol = tol;
  if (o.has("sigma2")) options.sigma2 = o.sigma2;
  ReportDocument inputs;

  std::optional<GaussMarkoffModel> model;
  if (!o.sur_widths.empty()) {
    const std::vector<Index> widths = parse_widths(o.sur_widths);
    const Matrix responses = read_matrix_csv(o.response);
    const Index n = static_cast<Index>(widths.size());
    const Index m = x.rows();
    Index total = 0;
    for (Index w : widths) total += w;
    if (x.cols() != total) {
      throw Error(ErrorCode::DimensionMismatch, "design has " + std::to_string(x.cols()) +
                                                    " columns, --sur-widths sum to " + std::to_string(total));
    }
    if (responses.rows() != m || responses.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "SUR response must be m x n (one column per equation)");
    }
    std::vector<Matrix> blocks;
    std::vector<Vector> ys;
    for (Index i = 0, off = 0; i < n; off += widths[static_cast<size_t>(i)], ++i) {
      blocks.push_back(x.middleCols(off, widths[static_cast<size_t>(i)]));
      ys.push_back(responses.col(i));
    }
    const SURLayout layout = SURLayout::from_blocks(blocks);
    const Index t_total = n * m;
    std::optional<std::vector<Matrix>> sigmas;
    Matrix dense;
    if (o.dispersion.empty()) {
      sigmas = std::vector<Matrix>(static_cast<size_t>(m), Matrix::Identity(n, n));
    } else {
      const Matrix omega = read_matrix_csv(o.dispersion);
      if (omega.rows() == n && omega.cols() == n) {
        sigmas = std::vector<Matrix>(static_cast<size_t>(m), omega);
      } else if (omega.rows() == t_total && omega.cols() == t_total) {
        sigmas = period_blocks(omega, n, m);
        dense = omega;
      } else {
        throw Error(ErrorCode::DimensionMismatch, "SUR dispersion must be n x n or T x T");
      }
    }
    if (sigmas) {
      model = stack_sur(layout, ys, {StackOrder::PeriodMajor, *sigmas}, options);
    } else {
      Vector y(t_total);
      for (Index t = 0; t < m; ++t) {
        for (Index i = 0; i < n; ++i) y(t * n + i) = responses(t, i);
      }
      model = build_model(y, layout.stacked_design(StackOrder::PeriodMajor), dense, options);
    }
    ReportDocument sur;
    sur["equations"] = n;
    sur["periods"] = m;
    sur["widths"] = widths;
    sur["stacking"] = to_string(StackOrder::PeriodMajor);
    inputs["sur"] = sur;
  } else {
    const Vector y = read_vector_csv(o.response);
    const Matrix omega =
        o.dispersion.empty() ? Matrix(Matrix::Identity(x.rows(), x.rows())) : read_matrix_csv(o.dispersion);
    model = build_model(y, x, omega, options);
  }
  inputs["T"] = model->T();
  inputs["K"] = model->K();
  inputs["rank_X"] = numeric_rank(model->X(), tol).numeric_rank;
  inputs["rank_Omega"] = model->dispersion_spectrum().rank;
  inputs["dispersion_tolerance"] = model->dispersion_spectrum().tolerance;
  doc["inputs"] = inputs;
  return *model;
}

LinearRestrictions load_restrictions(const Options& o, Index k) {
  if (o.restrictions.empty()) return LinearRestrictions::none(k);
  const RestrictionTable t = read_restrictions_csv(o.restrictions);
  if (t.R.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "restrictions have " + std::to_string(t.R.cols()) +
                                                  " coefficient columns, K = " + std::to_string(k));
  }
  return LinearRestrictions::make(t.R, t.r);
}

int cmd_estimate(const Options& o, ReportDocument& doc) {
  const TolerancePolicy tol = resolve_tolerance(o, doc);
  const auto tag = parse_estimator_tag(o.method);
  if (!tag) throw Error(ErrorCode::InvalidArgument, "unknown method '" + o.method + "'");
  const GaussMarkoffModel model = load_model(o, tol, doc);
  const LinearRestrictions res = load_restrictions(o, model.K());
  const auto need_restrictions = [&] {
    if (res.q() == 0) throw Error(ErrorCode::InvalidArgument, "method " + o.method + " needs --restrictions");
  };

  EstimateResult est;
  switch (*tag) {
    case EstimatorTag::OLS: est = ols(model); break;
    case EstimatorTag::GLS: est = gls(model); break;
    case EstimatorTag::MLS: est = mls(model); break;
    case EstimatorTag::ROLS: need_restrictions(); est = rols(model, res); break;
    case EstimatorTag::RGLS: need_restrictions(); est = rgls(model, res); break;
    case EstimatorTag::TKN: need_restrictions(); est = tkn(model, res); break;
    case EstimatorTag::Ridge:
      if (!o.has("ridge-psi")) throw Error(ErrorCode::InvalidArgument, "method ridge needs --ridge-psi");
      est = ridge(model, RidgeSpec::scalar(o.ridge_psi, model.K()));
      break;
    case EstimatorTag::StochasticRestricted: {
      need_restrictions();
      if (!o.has("theta")) throw Error(ErrorCode::InvalidArgument, "method stochastic needs --theta");
      const Matrix theta = o.theta * Matrix::Identity(res.q(), res.q());
      est = stochastic_restricted_gls(model, StochasticRestrictions::make(res.R, res.r, theta));
      break;
    }
    case EstimatorTag::ConstrainedSingular:
      est = constrained_singular_gls(model, combined_restrictions(model, res));
      break;
    case EstimatorTag::PanelGLS:
    case EstimatorTag::PanelMLS:
      throw Error(ErrorCode::InvalidArgument, "panel estimators run through the panel command");
  }

  ReportDocument result;
  result["estimator"] = to_string(est.estimator_tag);
  result["beta_hat"] = to_report(est.beta_hat);
  result["covariance_factor"] = to_report(est.covariance_factor);
  result["residual_sum_of_squares"] = est.residuals.squaredNorm();
  if (res.q() > 0) result["restriction_residual"] = max_abs(res.R * est.beta_hat - res.r);
  doc["diagnostics"] = diagnostics_report(est.diagnostics);
  doc["result"] = result;
  return 0;
}

int cmd_diagnose(const Options& o, ReportDocument& doc) {
  const TolerancePolicy tol = resolve_tolerance(o, doc);
  std::optional<GaussMarkoffModel> model;
  try {
    model = load_model(o, tol, doc);
  } catch (const Error& e) {
    if (exit_code_for(e.code()) == 1) throw;
    ReportDocument m;
    m["built"] = false;
    m["code"] = to_string(e.code());
    m["message"] = e.what();
    doc["model"] = m;
    return 0;
  }
  const Index k = model->K();
  const LinearRestrictions res = load_restrictions(o, k);
  ReportDocument checks = ReportDocument::array();

  const RankReport rx = numeric_rank(model->X(), tol);
  checks.push_back(check_entry(Condition::DesignFullRank, rx.numeric_rank == k, rx.numeric_rank, k));
  const Index rank_omega = model->dispersion_spectrum().rank;
  checks.push_back(check_entry(Condition::DispersionRegular, rank_omega == model->T(), rank_omega, model->T()));
  if (res.q() > 0) {
    const ConsistencyReport c = check_restriction_consistency(res, tol);
    checks.push_back(check_entry(Condition::RestrictionConsistency, c.consistent,
                                 c.rank_augmented.numeric_rank, c.rank_matrix.numeric_rank));
    const RankCheck j = check_joint_identification(model->X(), res.R, tol);
    checks.push_back(check_entry(Condition::JointIdentification, j.satisfied, j.rank.numeric_rank, k));
  }
  const RankCheck mi = check_mls_invertibility(model->X(), model->dispersion_spectrum(), tol);
  checks.push_back(check_entry(Condition::MlsInvertibility, mi.satisfied, mi.rank.numeric_rank, k));
  const CombinedRestrictions combined = combined_restrictions(*model, res);
  checks.push_back(check_entry(Condition::CombinedConsistency, combined.consistent,
                               combined.rank_augmented.numeric_rank, combined.rank_H.numeric_rank));
  const Index rank_hx = numeric_rank(stack_rows(combined.H, model->X()), tol).numeric_rank;
  checks.push_back(check_entry(Condition::SMatrixInvertible, rank_hx == k, rank_hx, k));
  doc["checks"] = checks;

  ReportDocument restr;
  restr["explicit_rows"] = combined.explicit_rows;
  restr["implicit_rows"] = combined.implicit_rows;
  restr["rank_H"] = combined.rank_H.numeric_rank;
  doc["restrictions"] = restr;

  const auto& sur = model->sur();
  if (sur && !sur->dispersion.empty()) {
    try {
      doc["theil"] = witness_report(check_theil_condition(sur->layout, sur->dispersion, tol));
    } catch (const Error& e) {
      if (exit_code_for(e.code()) == 1) throw;
      ReportDocument t;
      t["applicable"] = false;
      t["reason"] = e.what();
      doc["theil"] = t;
    }
  }
  return 0;
}

int cmd_panel(const Options& o, ReportDocument& doc) {
  const TolerancePolicy tol = resolve_tolerance(o, doc);
  if (o.panel.empty() || o.dispersion.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--panel and --dispersion are required");
  }
  const PanelTable table = read_panel_csv(o.panel);
  const Matrix sigma = read_matrix_csv(o.dispersion);
  const Index n = static_cast<Index>(table.designs.size());
  const Index m = table.designs.front().rows();
  if (o.has("drop-period") && (o.drop_period < 1 || o.drop_period > m)) {
    throw Error(ErrorCode::InvalidArgument, "--drop-period " + std::to_string(o.drop_period) +
                                                " is outside 1.." + std::to_string(m));
  }
  std::optional<FEPanelModel> model;
  if (sigma.rows() == m && sigma.cols() == m) {
    model = build_fe_model(table.designs, table.responses, sigma, tol);
  } else if (sigma.rows() == n * m && sigma.cols() == m) {
    std::vector<Matrix> blocks;
    for (Index i = 0; i < n; ++i) blocks.push_back(sigma.middleRows(i * m, m));
    model = build_fe_model(table.designs, table.responses, blocks, tol);
  } else {
    throw Error(ErrorCode::DimensionMismatch, "panel dispersion must be m x m or (n m) x m stacked blocks");
  }
  ReportDocument inputs;
  inputs["equations"] = n;
  inputs["periods"] = m;
  inputs["K"] = model->K();
  inputs["dispersion"] = model->kronecker() ? "kronecker" : "block-diagonal";
  doc["inputs"] = inputs;

  const EstimateResult g = fe_gls(*model);
  const EstimateResult w = fe_mls(*model);
  ReportDocument results;
  results["gls"] = {{"beta_hat", to_report(g.beta_hat)}, {"covariance_factor", to_report(g.covariance_factor)}};
  results["mls"] = {{"beta_hat", to_report(w.beta_hat)}};
  ReportDocument drops = ReportDocument::array();
  double drop_gap = 0.0;
  const Index first = o.has("drop-period") ? o.drop_period : 1;
  const Index last = o.has("drop-period") ? o.drop_period : m;
  for (Index t0 = first; t0 <= last; ++t0) {
    const EstimateResult d = fe_drop_period(*model, t0);
    drop_gap = std::max(drop_gap, max_abs(d.beta_hat - g.beta_hat));
    drops.push_back({{"period", t0}, {"beta_hat", to_report(d.beta_hat)}});
  }
  results["drop_period"] = drops;
  doc["estimates"] = results;

  const EquivalenceReport eq = verify_fe_equivalence(*model);
  ReportDocument e;
  e["gls_vs_mls"] = eq.beta_discrepancy;
  e["gls_vs_drop_period"] = drop_gap;
  e["projector"] = eq.projector_discrepancy;
  e["tolerance"] = eq.tolerance;
  e["pass"] = eq.pass() && drop_gap <= eq.tolerance * (1.0 + max_abs(g.beta_hat));
  doc["equivalence"] = e;
  if (!e["pass"].get<bool>()) doc["warnings"].push_back("estimators disagree beyond tolerance");
  return 0;
}

int cmd_simulate(const Options& o, ReportDocument& doc) {
  if (o.scenario.empty()) throw Error(ErrorCode::InvalidArgument, "--scenario is required");
  if (o.reps < 100) {
    throw Error(ErrorCode::InvalidArgument, "--reps must be at least 100, got " + std::to_string(o.reps));
  }
  SimulationConfig config;
  config.scenario = parse_scenario(o.scenario);
  config.replications = o.reps;
  config.seed = o.seed;
  config.sigma2 = o.sigma2;
  config.injected_bias = o.inject_bias;
  config.threads = o.threads;
  std::optional<EstimatorTag> tag;
  if (!o.method.empty()) {
    tag = parse_estimator_tag(o.method);
    if (!tag) throw Error(ErrorCode::InvalidArgument, "unknown method '" + o.method + "'");
  }
  const MCReport r = run_study(config, tag);
  ReportDocument s;
  s["scenario"] = to_string(r.scenario);
  s["estimator"] = to_string(r.estimator_tag);
  s["replications"] = r.replications;
  s["seed"] = r.seed;
  s["true_beta"] = to_report(r.true_beta);
  s["mean_beta"] = to_report(r.mean_beta);
  s["bias"] = to_report(r.bias);
  s["mc_standard_errors"] = to_report(r.mc_standard_errors);
  s["sample_covariance"] = to_report(r.sample_covariance);
  s["covariance_standard_errors"] = to_report(r.covariance_standard_errors);
  s["theoretical_covariance"] = to_report(r.theoretical_covariance);
  s["max_bias_ratio"] = r.max_bias_ratio;
  s["max_covariance_ratio"] = r.max_covariance_ratio;
  s["unbiased_pass"] = r.unbiased_pass;
  s["covariance_pass"] = r.covariance_pass;
  doc["study"] = s;
  return r.pass() ? 0 : 4;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
    case ErrorCode::Io:
    case ErrorCode::Parse:
      return 1;
    case ErrorCode::ShiftInsufficient:
    case ErrorCode::RestrictionGramSingular:
      return 3;
    default:
      return 2;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identification checks and least squares estimators for linear models"};
  app.name("glsid");
  app.require_subcommand(1, 1);
  Options o;

  auto file = [&](CLI::App* sub, const std::string& name, std::string& target, const std::string& help) {
    sub->add_option("--" + name, target, help);
  };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--tol", o.tol, "Absolute zero tolerance for ranks and roots (default: GLSID_TOL or scaled eps)");
    sub->add_option("--output", o.output, "Report format")->check(CLI::IsMember({"human", "machine"}));
  };

  CLI::App* est = app.add_subcommand("estimate", "Run one estimator after its identification checks");
  CLI::App* diag = app.add_subcommand("diagnose", "Report identification and rank conditions");
  for (CLI::App* sub : {est, diag}) {
    file(sub, "design", o.design, "Design matrix CSV (T x K, or m x sum K_i with --sur-widths)");
    file(sub, "response", o.response, "Response CSV (T x 1, or m x n with --sur-widths)");
    file(sub, "dispersion", o.dispersion, "Dispersion CSV (T x T; n x n per period with --sur-widths)");
    file(sub, "restrictions", o.restrictions, "Restrictions CSV: K coefficients then rhs per row");
    sub->add_option("--sur-widths", o.sur_widths, "Comma-separated K_i of a period-major SUR system");
    sub->add_option("--sigma2", o.sigma2, "Known scale sigma^2");
    common(sub);
  }
  est->add_option("--method", o.method, "ols, gls, rols, rgls, ridge, mls, tkn, constrained, stochastic")->required();
  est->add_option("--ridge-psi", o.ridge_psi, "Scalar ridge penalty");
  est->add_option("--theta", o.theta, "Scalar prior variance for stochastic restrictions");

  CLI::App* pan = app.add_subcommand("panel", "Fixed-effects GLS, pseudoinverse and drop-period estimators");
  file(pan, "panel", o.panel, "Long CSV: equation,period,response,x1..xK");
  file(pan, "dispersion", o.dispersion, "Sigma CSV (m x m, or n*m x m stacked blocks)");
  pan->add_option("--drop-period", o.drop_period, "Only drop this period (1-based)");
  common(pan);

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo unbiasedness and covariance checks");
  sim->add_option("--scenario", o.scenario,
                  "regular-gls, singular-adding-up, collinear-restricted, fe-panel-kronecker, fe-panel-block-diagonal");
  sim->add_option("--reps", o.reps, "Replications (at least 100)");
  sim->add_option("--seed", o.seed, "64-bit seed");
  sim->add_option("--method", o.method, "Estimator (default depends on the scenario)");
  sim->add_option("--sigma2", o.sigma2, "Error scale sigma^2");
  sim->add_option("--inject-bias", o.inject_bias, "Shift the data-generating beta (negative control)");
  sim->add_option("--threads", o.threads, "Worker threads; results do not depend on this");
  sim->add_option("--tol", o.tol, "Accepted for uniformity; unused");
  sim->add_option("--output", o.output, "Report format")->check(CLI::IsMember({"human", "machine"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  for (const CLI::Option* opt : chosen->get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    std::string name = opt->get_name();
    if (name.rfind("--", 0) == 0) name = name.substr(2);
    std::string value = opt->as<std::string>();
    if (name == "design" || name == "response" || name == "dispersion" || name == "restrictions" ||
        name == "panel") {
      value = base(value);
    }
    o.given.emplace_back(name, value);
  }

  ReportDocument doc;
  doc["command"] = chosen->get_name();
  ReportDocument echo = ReportDocument::object();
  for (const auto& [k, v] : o.given) echo[k] = v;
  doc["arguments"] = echo;
  doc["warnings"] = ReportDocument::array();

  int code = 0;
  try {
    if (chosen == est) code = cmd_estimate(o, doc);
    else if (chosen == diag) code = cmd_diagnose(o, doc);
    else if (chosen == pan) code = cmd_panel(o, doc);
    else code = cmd_simulate(o, doc);
  } catch (const TheilConditionError& e) {
    code = exit_code_for(e.code());
    ReportDocument er;
    er["code"] = to_string(e.code());
    er["condition"] = condition_id(*e.condition());
    er["formula"] = condition_formula(*e.condition());
    er["message"] = e.what();
    doc["error"] = er;
    if (e.witness()) doc["witness"] = witness_report(*e.witness());
    err << "error: " << condition_id(*e.condition()) << " failed [" << condition_formula(*e.condition())
        << "]: " << e.what() << "\n";
  } catch (const Error& e) {
    code = exit_code_for(e.code());
    ReportDocument er;
    er["code"] = to_string(e.code());
    if (e.condition()) {
      er["condition"] = condition_id(*e.condition());
      er["formula"] = condition_formula(*e.condition());
    }
    er["message"] = e.what();
    doc["error"] = er;
    err << "error: ";
    if (e.condition()) err << condition_id(*e.condition()) << " failed [" << condition_formula(*e.condition()) << "]: ";
    err << e.what() << "\n";
  }
  doc["exit_status"] = code;
  out << (o.output == "machine" ? render_machine(doc) : render_human(doc));
  return code;
}

}  // namespace glsid
