#include "glsid/mc_verify.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "glsid/estimators.hpp"
#include "glsid/identification.hpp"

namespace glsid {

namespace {

constexpr std::uint64_t kDesignStream = 0x9E3779B97F4A7C15ULL;
constexpr double kSigmaThreshold = 4.0;

// Everything that stays fixed across replications.
struct Design {
  SimulationConfig config;
  Vector beta;        // data-generating beta (true_beta + injected bias)
  // Non-panel scenarios.
  Matrix x;
  Matrix omega;
  Matrix factor;      // F Lambda^{1/2}, T x rank
  Matrix null_directions;
  std::optional<SURLayout> layout;
  std::vector<Matrix> period_sigma;
  LinearRestrictions restrictions = LinearRestrictions::none(0);
  // Panel scenarios.
  std::vector<Matrix> panel_x;
  std::vector<Matrix> panel_sigma;
  std::vector<Matrix> panel_factor;
  Vector gamma;
};

bool is_panel(Scenario s) {
  return s == Scenario::FEPanelKronecker || s == Scenario::FEPanelBlockDiagonal;
}

Matrix normal_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> z;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = z(rng);
  }
  return out;
}

Matrix random_spd(std::mt19937_64& rng, Index dim) {
  const Matrix b = normal_matrix(rng, dim, dim);
  return symmetrize(b * b.transpose() / static_cast<double>(dim) + 0.5 * Matrix::Identity(dim, dim));
}

Matrix spectral_factor(const Matrix& s) {
  const SpectralDecomposition spec = spectral_decompose(s);
  const Vector root = spec.eigenvalues.head(spec.rank).cwiseSqrt();
  return spec.range_vectors * root.asDiagonal();
}

Vector default_beta(Index k) {
  Vector b(k);
  for (Index j = 0; j < k; ++j) b(j) = (j % 2 == 0 ? 1.0 : -0.5) / static_cast<double>(1 + j / 2);
  return b;
}

Index total_k(const SimulationConfig& c) {
  return c.scenario == Scenario::SingularAddingUp ? c.dims.n * c.dims.k : c.dims.k;
}

Design build_design(const SimulationConfig& config) {
  Design d;
  d.config = config;
  d.beta = (config.true_beta.array() + config.injected_bias).matrix();
  std::mt19937_64 rng(splitmix64(config.seed ^ kDesignStream));
  const Index n = config.dims.n;
  const Index m = config.dims.m;
  const Index k = config.dims.k;

  switch (config.scenario) {
    case Scenario::RegularGLS: {
      d.x = Matrix::Ones(m, k);
      if (k > 1) d.x.rightCols(k - 1) = 2.0 * normal_matrix(rng, m, k - 1);
      // Heteroskedastic AR(1).
      d.omega.resize(m, m);
      for (Index t = 0; t < m; ++t) {
        for (Index s = 0; s < m; ++s) {
          const double ht = 0.5 + 1.5 * static_cast<double>(t) / static_cast<double>(m);
          const double hs = 0.5 + 1.5 * static_cast<double>(s) / static_cast<double>(m);
          d.omega(t, s) = ht * hs * std::pow(0.6, static_cast<double>(std::abs(t - s)));
        }
      }
      if (k >= 3) {
        Matrix r = Matrix::Zero(1, k);
        r(0, 1) = 1.0;
        r(0, 2) = 1.0;
        d.restrictions = LinearRestrictions::make(r, r * config.true_beta);
      } else {
        d.restrictions = LinearRestrictions::none(k);
      }
      break;
    }
    case Scenario::SingularAddingUp: {
      // Every equation shares the regressors, as in a share system.
      Matrix common = Matrix::Ones(m, k);
      if (k > 1) common.rightCols(k - 1) = (1.0 + normal_matrix(rng, m, k - 1).array()).matrix();
      d.layout = SURLayout::from_blocks(std::vector<Matrix>(static_cast<size_t>(n), common));
      d.x = d.layout->stacked_design(StackOrder::PeriodMajor);
      // Sigma_t = c_t F0 D F0' with the common null vector e_n / sqrt(n).
      const Matrix f0 = null_space_basis(Matrix::Ones(1, n));
      const Matrix base = symmetrize(f0 * random_spd(rng, n - 1) * f0.transpose());
      const Vector a = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
      d.null_directions = Matrix::Zero(n * m, m);
      for (Index t = 0; t < m; ++t) {
        const double c = 0.5 + static_cast<double>(t + 1) / static_cast<double>(m);
        d.period_sigma.push_back(c * base);
        d.null_directions.block(t * n, t, n, 1) = a;
      }
      d.omega = block_diagonal(d.period_sigma);
      d.restrictions = LinearRestrictions::none(n * k);
      break;
    }
    case Scenario::CollinearRestricted: {
      d.x = Matrix::Ones(m, k);
      d.x.middleCols(1, k - 2) = 2.0 * normal_matrix(rng, m, k - 2);
      d.x.col(k - 1) = d.x.col(0) + d.x.col(1);
      Vector h(m);
      for (Index t = 0; t < m; ++t) h(t) = 0.5 + 1.5 * static_cast<double>(t) / static_cast<double>(m);
      d.omega = h.cwiseAbs2().asDiagonal();
      Matrix r = Matrix::Zero(1, k);
      r(0, k - 1) = 1.0;
      d.restrictions = LinearRestrictions::make(r, r * config.true_beta);
      break;
    }
    case Scenario::FEPanelKronecker:
    case Scenario::FEPanelBlockDiagonal: {
      const Matrix shared = random_spd(rng, m);
      for (Index i = 0; i < n; ++i) {
        d.panel_x.push_back(normal_matrix(rng, m, k));
        d.panel_sigma.push_back(config.scenario == Scenario::FEPanelKronecker ? shared : random_spd(rng, m));
        d.panel_factor.push_back(spectral_factor(d.panel_sigma.back()));
      }
      d.gamma = 2.0 * normal_matrix(rng, n, 1).col(0);
      d.restrictions = LinearRestrictions::none(k);
      return d;
    }
  }
  d.factor = spectral_factor(d.omega);
  if (d.null_directions.size() == 0) d.null_directions = Matrix::Zero(d.x.rows(), 0);
  return d;
}

SimulationInstance draw(const Design& d, Index replication) {
  const SimulationConfig& c = d.config;
  std::mt19937_64 rng(splitmix64(c.seed ^ splitmix64(static_cast<std::uint64_t>(replication) + 1)));
  const double sigma = std::sqrt(c.sigma2);
  SimulationInstance inst;
  inst.true_beta = c.true_beta;
  inst.restrictions = d.restrictions;
  ModelOptions options;
  options.sigma2 = c.sigma2;

  if (is_panel(c.scenario)) {
    const Index m = c.dims.m;
    std::vector<Vector> responses;
    inst.errors.resize(c.dims.n * m);
    for (Index i = 0; i < c.dims.n; ++i) {
      const auto& f = d.panel_factor[static_cast<size_t>(i)];
      const Vector u = sigma * f * normal_matrix(rng, f.cols(), 1).col(0);
      inst.errors.segment(i * m, m) = u;
      responses.push_back(d.panel_x[static_cast<size_t>(i)] * d.beta + Vector::Constant(m, d.gamma(i)) + u);
    }
    inst.panel = c.scenario == Scenario::FEPanelKronecker
                     ? build_fe_model(d.panel_x, responses, d.panel_sigma.front())
                     : build_fe_model(d.panel_x, responses, d.panel_sigma);
    inst.null_directions = Matrix::Zero(c.dims.n * m, 0);
    return inst;
  }

  inst.errors = sigma * d.factor * normal_matrix(rng, d.factor.cols(), 1).col(0);
  const Vector y = d.x * d.beta + inst.errors;
  inst.null_directions = d.null_directions;
  if (d.layout) {
    const Index n = c.dims.n;
    std::vector<Vector> responses(static_cast<size_t>(n), Vector(c.dims.m));
    for (Index t = 0; t < c.dims.m; ++t) {
      for (Index i = 0; i < n; ++i) responses[static_cast<size_t>(i)](t) = y(t * n + i);
    }
    inst.model = stack_sur(*d.layout, responses, {StackOrder::PeriodMajor, d.period_sigma}, options);
  } else {
    inst.model = build_model(y, d.x, d.omega, options);
  }
  return inst;
}

EstimateResult estimate(const SimulationInstance& inst, EstimatorTag tag) {
  const bool panel_tag = tag == EstimatorTag::PanelGLS || tag == EstimatorTag::PanelMLS;
  if (panel_tag != inst.panel.has_value()) {
    throw Error(ErrorCode::InvalidConfig,
                "estimator " + std::string(to_string(tag)) + " does not apply to this scenario");
  }
  const auto needs_restrictions = [&] {
    if (inst.restrictions.q() == 0) {
      throw Error(ErrorCode::InvalidConfig,
                  "estimator " + std::string(to_string(tag)) + " needs restrictions the scenario lacks");
    }
  };
  switch (tag) {
    case EstimatorTag::OLS: return ols(*inst.model);
    case EstimatorTag::GLS: return gls(*inst.model);
    case EstimatorTag::MLS: return mls(*inst.model);
    case EstimatorTag::ROLS: needs_restrictions(); return rols(*inst.model, inst.restrictions);
    case EstimatorTag::RGLS: needs_restrictions(); return rgls(*inst.model, inst.restrictions);
    case EstimatorTag::TKN: needs_restrictions(); return tkn(*inst.model, inst.restrictions);
    case EstimatorTag::ConstrainedSingular:
      return constrained_singular_gls(*inst.model, combined_restrictions(*inst.model, inst.restrictions));
    case EstimatorTag::PanelGLS: return fe_gls(*inst.panel);
    case EstimatorTag::PanelMLS: return fe_mls(*inst.panel);
    case EstimatorTag::Ridge:
    case EstimatorTag::StochasticRestricted:
      break;
  }
  throw Error(ErrorCode::InvalidConfig,
              "estimator " + std::string(to_string(tag)) + " is not unbiased under the simulation design");
}

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double ratio(double diff, double se, double floor) {
  if (diff <= floor) return 0.0;
  if (se <= 0.0) return std::numeric_limits<double>::infinity();
  return diff / se;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::RegularGLS: return "regular-gls";
    case Scenario::SingularAddingUp: return "singular-adding-up";
    case Scenario::CollinearRestricted: return "collinear-restricted";
    case Scenario::FEPanelKronecker: return "fe-panel-kronecker";
    case Scenario::FEPanelBlockDiagonal: return "fe-panel-block-diagonal";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::RegularGLS, Scenario::SingularAddingUp, Scenario::CollinearRestricted,
                     Scenario::FEPanelKronecker, Scenario::FEPanelBlockDiagonal}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown scenario '" + std::string(name) + "'");
}

EstimatorTag default_estimator(Scenario scenario) {
  switch (scenario) {
    case Scenario::RegularGLS: return EstimatorTag::GLS;
    case Scenario::SingularAddingUp: return EstimatorTag::ConstrainedSingular;
    case Scenario::CollinearRestricted: return EstimatorTag::RGLS;
    case Scenario::FEPanelKronecker:
    case Scenario::FEPanelBlockDiagonal: return EstimatorTag::PanelGLS;
  }
  return EstimatorTag::GLS;
}

SimulationConfig resolve_config(SimulationConfig c) {
  auto fill = [](Index& v, Index def) {
    if (v == 0) v = def;
  };
  switch (c.scenario) {
    case Scenario::RegularGLS: fill(c.dims.n, 1); fill(c.dims.m, 40); fill(c.dims.k, 3); break;
    case Scenario::SingularAddingUp: fill(c.dims.n, 3); fill(c.dims.m, 20); fill(c.dims.k, 2); break;
    case Scenario::CollinearRestricted: fill(c.dims.n, 1); fill(c.dims.m, 30); fill(c.dims.k, 4); break;
    case Scenario::FEPanelKronecker:
    case Scenario::FEPanelBlockDiagonal: fill(c.dims.n, 5); fill(c.dims.m, 6); fill(c.dims.k, 2); break;
  }
  if (c.dims.n < 0 || c.dims.m < 0 || c.dims.k < 0) {
    throw Error(ErrorCode::InvalidConfig, "dimensions must be positive");
  }
  if (c.replications < 1) throw Error(ErrorCode::InvalidConfig, "replications must be positive");
  if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
    throw Error(ErrorCode::InvalidConfig, "sigma2 must be positive");
  }
  if (!std::isfinite(c.injected_bias)) throw Error(ErrorCode::InvalidConfig, "bias must be finite");
  if (c.threads == 0) c.threads = 1;
  switch (c.scenario) {
    case Scenario::SingularAddingUp:
      if (c.dims.n < 2) throw Error(ErrorCode::InvalidConfig, "adding-up needs n >= 2 equations");
      if (c.dims.m * (c.dims.n - 1) <= c.dims.n * c.dims.k) {
        throw Error(ErrorCode::InvalidConfig, "too few periods for the per-equation width");
      }
      break;
    case Scenario::CollinearRestricted:
      if (c.dims.k < 3) throw Error(ErrorCode::InvalidConfig, "collinear scenario needs K >= 3");
      [[fallthrough]];
    case Scenario::RegularGLS:
      if (c.dims.m <= c.dims.k) throw Error(ErrorCode::InvalidConfig, "need T > K");
      break;
    case Scenario::FEPanelKronecker:
    case Scenario::FEPanelBlockDiagonal:
      if (c.dims.m < 2 || c.dims.n * (c.dims.m - 1) <= c.dims.k) {
        throw Error(ErrorCode::InvalidConfig, "panel too small for K slopes");
      }
      break;
  }
  const Index k = total_k(c);
  if (c.true_beta.size() == 0) c.true_beta = default_beta(k);
  if (c.true_beta.size() != k) {
    throw Error(ErrorCode::InvalidConfig,
                "true_beta has " + std::to_string(c.true_beta.size()) + " entries, expected " + std::to_string(k));
  }
  return c;
}

SimulationInstance generate_instance(const SimulationConfig& config, Index replication) {
  const SimulationConfig c = resolve_config(config);
  if (replication < 0) throw Error(ErrorCode::InvalidConfig, "replication index must be nonnegative");
  return draw(build_design(c), replication);
}

StudyDraws simulate_estimates(const SimulationConfig& config, EstimatorTag tag) {
  const SimulationConfig c = resolve_config(config);
  const Design design = build_design(c);
  const Index reps = c.replications;
  const Index k = total_k(c);
  StudyDraws out;
  out.estimates.resize(reps, k);

  const auto one = [&](Index rep) {
    try {
      const EstimateResult est = estimate(draw(design, rep), tag);
      out.estimates.row(rep) = est.beta_hat.transpose();
      if (rep == 0) out.covariance_factor = est.covariance_factor;
    } catch (const Error& e) {
      throw Error(e.code(), "replication " + std::to_string(rep) + ": " + e.what(), e.condition());
    }
  };

  const unsigned threads = std::min<unsigned>(c.threads, static_cast<unsigned>(reps));
  if (threads <= 1) {
    for (Index rep = 0; rep < reps; ++rep) one(rep);
    return out;
  }
  std::vector<std::exception_ptr> failures(threads);
  std::vector<Index> failed_at(threads, reps);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (Index rep = w; rep < reps; rep += threads) {
        try {
          one(rep);
        } catch (...) {
          failures[w] = std::current_exception();
          failed_at[w] = rep;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  // Report the lowest failing replication so the error does not depend on scheduling.
  unsigned first = threads;
  for (unsigned w = 0; w < threads; ++w) {
    if (failures[w] && (first == threads || failed_at[w] < failed_at[first])) first = w;
  }
  if (first != threads) std::rethrow_exception(failures[first]);
  return out;
}

MCReport summarize(const SimulationConfig& config, EstimatorTag tag, const StudyDraws& draws) {
  const SimulationConfig c = resolve_config(config);
  const Index reps = draws.estimates.rows();
  const Index k = draws.estimates.cols();
  if (reps < 3) throw Error(ErrorCode::InvalidConfig, "at least 3 replications are needed");
  const double rd = static_cast<double>(reps);

  MCReport rep;
  rep.scenario = c.scenario;
  rep.estimator_tag = tag;
  rep.replications = reps;
  rep.seed = c.seed;
  rep.true_beta = c.true_beta;

  rep.mean_beta.resize(k);
  for (Index j = 0; j < k; ++j) {
    CompensatedSum s;
    for (Index r = 0; r < reps; ++r) s.add(draws.estimates(r, j));
    rep.mean_beta(j) = s.value() / rd;
  }
  const Matrix dev = draws.estimates.rowwise() - rep.mean_beta.transpose();
  rep.sample_covariance.resize(k, k);
  rep.covariance_standard_errors.resize(k, k);
  // Jackknife of the unbiased sample covariance: leaving out draw i gives
  // (SS - R/(R-1) d_i d_i') / (R-2), so the pseudo-values differ from their
  // mean by a multiple of d_ij d_ik - mean(d_j d_k).
  const double shrink = rd / (rd - 1.0) / (rd - 2.0);
  for (Index a = 0; a < k; ++a) {
    for (Index b = a; b < k; ++b) {
      CompensatedSum s;
      for (Index r = 0; r < reps; ++r) s.add(dev(r, a) * dev(r, b));
      const double mean_w = s.value() / rd;
      CompensatedSum v;
      for (Index r = 0; r < reps; ++r) {
        const double e = dev(r, a) * dev(r, b) - mean_w;
        v.add(e * e);
      }
      const double cov = s.value() / (rd - 1.0);
      const double se = std::sqrt((rd - 1.0) / rd * shrink * shrink * v.value());
      rep.sample_covariance(a, b) = rep.sample_covariance(b, a) = cov;
      rep.covariance_standard_errors(a, b) = rep.covariance_standard_errors(b, a) = se;
    }
  }
  rep.mc_standard_errors = (rep.sample_covariance.diagonal() / rd).cwiseSqrt();
  rep.bias = rep.mean_beta - rep.true_beta;
  rep.theoretical_covariance = c.sigma2 * draws.covariance_factor;

  rep.max_bias_ratio = 0.0;
  for (Index j = 0; j < k; ++j) {
    const double floor = 1e-10 * (1.0 + std::abs(rep.true_beta(j)));
    rep.max_bias_ratio = std::max(rep.max_bias_ratio,
                                  ratio(std::abs(rep.bias(j)), rep.mc_standard_errors(j), floor));
  }
  rep.max_covariance_ratio = 0.0;
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      const double target = rep.theoretical_covariance(a, b);
      const double floor = 1e-10 * (1.0 + std::abs(target));
      rep.max_covariance_ratio =
          std::max(rep.max_covariance_ratio, ratio(std::abs(rep.sample_covariance(a, b) - target),
                                                   rep.covariance_standard_errors(a, b), floor));
    }
  }
  rep.unbiased_pass = rep.max_bias_ratio <= kSigmaThreshold;
  rep.covariance_pass = rep.max_covariance_ratio <= kSigmaThreshold;
  return rep;
}

MCReport run_study(const SimulationConfig& config, std::optional<EstimatorTag> tag) {
  const EstimatorTag chosen = tag.value_or(default_estimator(config.scenario));
  return summarize(config, chosen, simulate_estimates(config, chosen));
}

}  // namespace glsid
