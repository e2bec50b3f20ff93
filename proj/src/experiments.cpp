#include "mlmc/experiments.hpp"

#include <fmt/format.h>

#include <atomic>
#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "mlmc/baselines.hpp"
#include "mlmc/composite.hpp"
#include "mlmc/error.hpp"
#include "mlmc/harness.hpp"
#include "mlmc/minmax.hpp"
#include "mlmc/moreau_agd.hpp"
#include "mlmc/problems.hpp"
#include "mlmc/thresholds.hpp"

namespace mlmc {

namespace th = thresholds;

namespace {

template <class T>
T param(const ExperimentConfig& config, const char* key, T fallback) {
  return config.params.contains(key) ? config.params.at(key).get<T>() : fallback;
}

std::int64_t replications(const ExperimentConfig& config, std::int64_t fallback) {
  return config.replications > 0 ? config.replications : fallback;
}

std::string num(double v) { return fmt::format("{:.6g}", v); }

Check check(std::string name, bool pass, std::string detail) {
  return Check{std::move(name), pass, std::move(detail)};
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------- estimate

// Stub ODC: a call with budget T spends exactly T queries and returns
// 1 - 1/T in every coordinate, so level j yields x_j = 1 - 2^-j.
OdcSolver unit_cost_stub() {
  OdcSolver stub;
  stub.name = "unit_cost_stub";
  stub.constant = 1.0;
  stub.solve = [](const CompositeObjective& objective, std::int64_t T, Rng& rng) {
    Vector g(objective.oracle.dimension());
    const Vector& at = objective.psi.center();
    for (std::int64_t t = 0; t < T; ++t) objective.oracle.sample_into(at, rng, g);
    return Vector::Constant(objective.oracle.dimension(), 1.0 - 1.0 / static_cast<double>(T));
  };
  return stub;
}

StochasticGradientOracle null_oracle() {
  return StochasticGradientOracle(1, 1.0, [](const Vector&, Rng&, Vector& out) { out.setZero(); }, true);
}

ExperimentReport estimate_telescoping(const ExperimentConfig&) {
  ExperimentReport r;
  r.columns = {"t_max", "expectation", "x_jmax", "abs_error"};
  const StochasticGradientOracle oracle = null_oracle();
  const SimpleRegularizer psi = SimpleRegularizer::zero(1);
  const ConvexDomain domain = ConvexDomain::whole_space(1);
  const CompositeObjective objective{oracle, psi, domain, 1.0};
  double worst = 0.0;
  for (std::int64_t t_max : th::kTelescopeTmax) {
    const MlmcConfig config{t_max, unit_cost_stub(), false, 64};
    Rng rng(0);
    // P(J = j) = 2^-j for j < 64 and 2^-63 for the cap.
    double expectation = 0.0;
    for (int J = 1; J <= 64; ++J) {
      const double weight = J < 64 ? std::ldexp(1.0, -J) : std::ldexp(1.0, -63);
      const int level = std::min(J, mlmc_max_level(t_max) + 1);
      expectation += weight * mlmc_draw_at_level(objective, config, level, rng).point(0);
    }
    const double target = 1.0 - std::ldexp(1.0, -mlmc_max_level(t_max));
    const double error = std::abs(expectation - target);
    worst = std::max(worst, error);
    r.rows.push_back({static_cast<double>(t_max), expectation, target, error});
  }
  r.checks.push_back(check("telescoping", worst <= th::kTelescopeTolerance,
                           fmt::format("max error {} <= {}", num(worst), num(th::kTelescopeTolerance))));
  return r;
}

ExperimentReport estimate_odc(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"T", "mse", "mse_se", "bound", "max_queries"};
  const BenchmarkProblem problem =
      soft_threshold_problem(param(config, "center", 2.0), param(config, "weight", 1.0));
  const Vector x_star = *problem.exact_minimizer;
  const double c = param(config, "c", th::kOdcConstant);
  const std::int64_t M = replications(config, th::kOdcReplications);
  const double scale = problem.G() * problem.G() / (problem.mu() * problem.mu());
  bool within = true, budget = true;
  for (int e = param(config, "min_exp", th::kOdcMinExponent); e <= param(config, "max_exp", th::kOdcMaxExponent);
       ++e) {
    const std::int64_t T = std::int64_t{1} << e;
    std::atomic<std::int64_t> max_queries{0};
    const EstimateStats s = measure_estimator(
        [&](Rng& rng) {
          const StochasticGradientOracle oracle = problem.oracle.with_counter(make_counter());
          const CompositeObjective objective{oracle, problem.regularizer, problem.domain, problem.mu()};
          OptEstimate out{epoch_sgd(objective, T, rng), oracle.queries(), {}};
          std::int64_t seen = max_queries.load();
          while (out.queries > seen && !max_queries.compare_exchange_weak(seen, out.queries)) {
          }
          return out;
        },
        x_star, M, config.seed + static_cast<std::uint64_t>(e));
    const double bound = c * scale / static_cast<double>(T);
    within = within && s.mse <= bound + th::kSe * s.mse_se;
    budget = budget && max_queries.load() <= T;
    r.rows.push_back({static_cast<double>(T), s.mse, s.mse_se, bound, static_cast<double>(max_queries.load())});
  }
  r.checks.push_back(check("odc_bound", within, "mean ||x - x*||^2 <= c G^2/(mu^2 T) + 3 SE at every T"));
  r.checks.push_back(check("odc_budget", budget, "queries <= T on every call"));
  return r;
}

ExperimentReport estimate_tmax_sweep(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"t_max", "bias", "bias_se", "variance", "variance_se", "variance_bound", "mean_queries"};
  const BenchmarkProblem problem =
      soft_threshold_problem(param(config, "center", 2.0), param(config, "weight", 1.0));
  const Vector x_star = *problem.exact_minimizer;
  const std::int64_t M = replications(config, th::kBiasDraws);
  const double c = param(config, "c", th::kOdcConstant);
  const double scale = problem.G() * problem.G() / (problem.mu() * problem.mu());
  std::vector<std::pair<double, double>> bias_points;
  bool variance_ok = true;
  std::string variance_detail;
  for (int e = param(config, "min_exp", th::kBiasMinExponent); e <= param(config, "max_exp", th::kBiasMaxExponent);
       ++e) {
    const std::int64_t t_max = std::int64_t{1} << e;
    const MlmcConfig mlmc{t_max, epoch_sgd_solver(), true, 64};
    const EstimateStats s = measure_estimator(
        [&](Rng& rng) {
          const StochasticGradientOracle oracle = problem.oracle.with_counter(make_counter());
          const CompositeObjective objective{oracle, problem.regularizer, problem.domain, problem.mu()};
          return mlmc_draw(objective, mlmc, rng);
        },
        x_star, M, config.seed + static_cast<std::uint64_t>(e));
    const double bound = th::kVarianceFactor * (c / th::kOdcConstant) * scale * std::log2(static_cast<double>(t_max));
    if (s.variance > bound) {
      variance_ok = false;
      variance_detail += fmt::format(" T_max={} variance {} > {}", t_max, num(s.variance), num(bound));
    }
    bias_points.emplace_back(static_cast<double>(t_max), s.bias_norm);
    r.rows.push_back({static_cast<double>(t_max), s.bias_norm, s.bias_se, s.variance, s.variance_se, bound,
                      s.mean_queries});
  }
  bool positive = true;
  for (const auto& p : bias_points) positive = positive && p.second > 0.0;
  const double slope = positive ? fit_loglog_slope(bias_points) : std::nan("");
  r.summary.emplace_back("bias_slope", slope);
  r.checks.push_back(check("bias_slope", positive && slope <= th::kBiasSlopeMax,
                           fmt::format("slope {} <= {}", num(slope), num(th::kBiasSlopeMax))));
  r.checks.push_back(check("variance_law", variance_ok,
                           variance_ok ? "variance <= 16 c (G/mu)^2 log2(T_max) at every T_max"
                                       : "violations:" + variance_detail));
  return r;
}

ExperimentReport estimate_cost(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"t_max", "mean_queries", "queries_se", "expected"};
  const std::int64_t M = replications(config, th::kCostDraws);
  const StochasticGradientOracle base = null_oracle();
  const SimpleRegularizer psi = SimpleRegularizer::zero(1);
  const ConvexDomain domain = ConvexDomain::whole_space(1);
  bool ok = true;
  for (std::int64_t t_max : th::kCostTmax) {
    const MlmcConfig mlmc{t_max, unit_cost_stub(), false, 64};
    const EstimateStats s = measure_estimator(
        [&](Rng& rng) {
          const StochasticGradientOracle oracle = base.with_counter(make_counter());
          const CompositeObjective objective{oracle, psi, domain, 1.0};
          return mlmc_draw(objective, mlmc, rng);
        },
        Vector::Zero(1), M, config.seed + static_cast<std::uint64_t>(t_max));
    const double expected = 1.0 + 1.5 * mlmc_max_level(t_max);
    ok = ok && std::abs(s.mean_queries - expected) <= th::kSe * s.queries_se;
    r.rows.push_back({static_cast<double>(t_max), s.mean_queries, s.queries_se, expected});
  }
  r.checks.push_back(check("cost_law", ok, "mean queries = 1 + 1.5 floor(log2 T_max) within 3 SE"));
  return r;
}

// ------------------------------------------------------------------ moreau

// Per-thread oracle copy and level cache, rebuilt for each experiment run.
struct WorkerSlot {
  std::uint64_t generation = 0;
  std::optional<StochasticGradientOracle> oracle;
  LevelCache cache;
};

std::atomic<std::uint64_t> g_generation{0};

ExperimentReport moreau_accuracy(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"delta", "sigma2", "lambda", "y",   "true_gradient", "mean", "bias", "bias_se",
               "mse",   "mse_se", "mse_bound", "draws_per_call"};
  const double lambda = param(config, "lambda", 1.0);
  const double y0 = param(config, "y", 2.0);
  const bool use_cache = param(config, "cache", true);
  const std::int64_t M = replications(config, th::kMoreauCalls);
  std::vector<std::array<double, 2>> targets(th::kMoreauTargets.begin(), th::kMoreauTargets.end());
  if (config.params.contains("targets")) targets = config.params.at("targets").get<std::vector<std::array<double, 2>>>();

  const BenchmarkProblem problem = soft_threshold_problem();
  const ConvexDomain domain = ConvexDomain::whole_space(1);
  Vector y(1);
  y(0) = y0;
  const Vector truth = moreau_gradient(problem, lambda, y);
  bool ok = true;
  std::size_t index = 0;
  for (const auto& [delta, sigma2] : targets) {
    const std::uint64_t generation = ++g_generation;
    std::atomic<std::int64_t> draws{0};
    const EstimateStats s = measure_estimator(
        [&](Rng& rng) {
          thread_local WorkerSlot slot;
          if (slot.generation != generation) {
            slot.generation = generation;
            slot.oracle.emplace(problem.oracle.with_counter(make_counter()));
            slot.cache = LevelCache();
          }
          OptEstOptions options;
          if (use_cache) options.cache = &slot.cache;
          const MorGradResult g = mor_grad_est(*slot.oracle, y, lambda, delta, sigma2, domain, rng, options);
          draws = g.params.n;
          return OptEstimate{g.gradient, g.queries, {}};
        },
        truth, M, config.seed + index++);
    const double mse_bound = sigma2 * (1.0 + th::kSe * std::sqrt(2.0 / static_cast<double>(M)));
    const bool bias_ok = s.bias_norm <= delta + th::kSe * s.bias_se;
    const bool mse_ok = s.mse <= mse_bound;
    ok = ok && bias_ok && mse_ok;
    r.rows.push_back({delta, sigma2, lambda, y0, truth(0), s.mean(0), s.bias_norm, s.bias_se, s.mse, s.mse_se,
                      mse_bound, static_cast<double>(draws.load())});
    r.checks.push_back(check(fmt::format("morgrad_delta_{}", num(delta)), bias_ok && mse_ok,
                             fmt::format("bias {} <= {} + 3*{}; mse {} <= {}", num(s.bias_norm), num(delta),
                                         num(s.bias_se), num(s.mse), num(mse_bound))));
  }
  (void)ok;
  return r;
}

// ----------------------------------------------------------------- projeff

struct RegressionInstance {
  BenchmarkProblem problem;
  double f_star;
  double D;
  double R;
};

RegressionInstance regression_instance(const ExperimentConfig& config) {
  const int n = param(config, "n", 200);
  const int d = param(config, "d", 20);
  const RegressionData data = make_regression_data(n, d, param(config, "instance_seed", std::uint64_t{11}));
  const MinMaxLpSolution lp = l1_regression_simplex_lp(data.A, data.b);
  return RegressionInstance{
      l1_regression_problem(data.A, data.b, SimpleRegularizer::zero(d), ConvexDomain::simplex(d)), lp.value,
      std::sqrt(2.0), 1.0};
}

ExperimentReport projeff_runs(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"fraction", "eps", "run", "T", "projections", "queries", "gap"};
  if (config.timing) r.columns.push_back("wall_time");
  const RegressionInstance inst = regression_instance(config);
  const BenchmarkProblem& problem = inst.problem;
  const int d = problem.dimension();
  const double G = problem.G();
  const double GD = G * inst.D;
  std::vector<double> fractions(th::kProjEffFractions.begin(), th::kProjEffFractions.end());
  if (config.params.contains("fractions")) fractions = config.params.at("fractions").get<std::vector<double>>();
  const double gap_fraction = param(config, "gap_fraction", th::kProjEffGapFraction);
  const std::int64_t runs = replications(config, th::kProjEffRuns);
  const std::int64_t slope_runs = param(config, "slope_runs", std::int64_t{3});
  const Vector x0 = Vector::Constant(d, 1.0 / d);

  std::vector<std::pair<double, double>> cost_points;
  bool projections_ok = true;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double fraction = fractions[fi];
    const double eps = fraction * GD;
    const PeConfig pe = pe_params(G, inst.D, inst.R, eps);
    const std::int64_t count = std::abs(fraction - gap_fraction) < 1e-12 ? runs : std::min(runs, slope_runs);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(count));
    const Rng root(config.seed + 1000 * fi);
    parallel_for(count, [&](std::int64_t k) {
      Stopwatch clock;
      Rng rng = root.split(static_cast<std::uint64_t>(k));
      const StochasticGradientOracle oracle = problem.oracle.with_counter(make_counter());
      const PeResult run = agd_moreau(oracle, problem.domain, x0, pe, rng);
      std::vector<double> row = {fraction,
                                 eps,
                                 static_cast<double>(k),
                                 static_cast<double>(pe.T),
                                 static_cast<double>(run.projections),
                                 static_cast<double>(run.queries),
                                 problem.objective(run.x) - inst.f_star};
      if (config.timing) row.push_back(clock.seconds());
      rows[static_cast<std::size_t>(k)] = std::move(row);
    });
    double gap_sum = 0.0, query_sum = 0.0;
    for (auto& row : rows) {
      projections_ok = projections_ok && row[4] == row[3];
      query_sum += row[5];
      gap_sum += row[6];
      r.rows.push_back(std::move(row));
    }
    const double mean_gap = gap_sum / static_cast<double>(count);
    cost_points.emplace_back(1.0 / eps, query_sum / static_cast<double>(count));
    r.summary.emplace_back(fmt::format("mean_gap_{}", num(fraction)), mean_gap);
    if (std::abs(fraction - gap_fraction) < 1e-12) {
      r.checks.push_back(check("projeff_gap", mean_gap <= eps,
                               fmt::format("mean gap {} <= eps {} over {} runs", num(mean_gap), num(eps), count)));
    }
  }
  r.checks.push_back(check("projeff_projections", projections_ok, "Proj_X calls = ceil(7GD/eps) on every run"));
  if (cost_points.size() >= 3) {
    const double slope = fit_loglog_slope(cost_points);
    r.summary.emplace_back("query_slope", slope);
    r.checks.push_back(check("projeff_query_slope", slope >= th::kProjEffSlopeMin && slope <= th::kProjEffSlopeMax,
                             fmt::format("slope {} in [{}, {}]", num(slope), num(th::kProjEffSlopeMin),
                                         num(th::kProjEffSlopeMax))));
  }
  return r;
}

// ------------------------------------------------------------------ minmax

struct MinMaxInstance {
  Matrix A;
  Vector b;
  Vector lower, upper;
  double f_star;
  double G;
  double R;
};

// Unit-norm random rows (G = 1) on the box [-1/sqrt(d), 1/sqrt(d)]^d, which
// lies in ball(0, 1).
MinMaxInstance minmax_instance(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  MinMaxInstance inst;
  inst.A.resize(n, d);
  inst.b.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) inst.A(i, k) = rng.normal();
    inst.A.row(i).normalize();
    inst.b(i) = 0.1 * rng.normal();
  }
  const double h = 1.0 / std::sqrt(static_cast<double>(d));
  inst.lower = Vector::Constant(d, -h);
  inst.upper = Vector::Constant(d, h);
  inst.f_star = minmax_affine_box_lp(inst.A, inst.b, inst.lower, inst.upper).value;
  inst.G = 1.0;
  inst.R = 1.0;
  return inst;
}

MinMaxConfig minmax_preset(const ExperimentConfig& config) {
  MinMaxConfig c;
  const std::string preset = param(config, "preset", std::string("desk"));
  if (preset == "desk") {
    c.estimator_c = 1.0;
    c.sigma_scale = 1.0;
    c.delta_scale = 1.0;
    c.broo.inflate = false;
  } else if (preset != "full") {
    throw InvalidInput("unknown min-max preset: " + preset);
  }
  c.estimator_c = param(config, "estimator_c", c.estimator_c);
  c.sigma_scale = param(config, "sigma_scale", c.sigma_scale);
  c.delta_scale = param(config, "delta_scale", c.delta_scale);
  c.phi_scale = param(config, "phi_scale", c.phi_scale);
  c.k_max_constant = param(config, "k_max_constant", c.k_max_constant);
  c.broo.budget_constant = param(config, "broo_constant", c.broo.budget_constant);
  c.broo.inflate = param(config, "broo_inflate", c.broo.inflate);
  return c;
}

struct MinMaxRun {
  double gap = 0.0;
  bool success = false;
  std::int64_t value_queries = 0;
  std::int64_t grad_queries = 0;
  std::int64_t iterations = 0;
  bool capped = false;
  double seconds = 0.0;
};

MinMaxRun minmax_run(const MinMaxInstance& inst, double eps, const MinMaxConfig& cfg, Rng rng,
                     std::optional<std::int64_t> cap) {
  Stopwatch clock;
  const int d = static_cast<int>(inst.A.cols());
  const MaxProblem problem = MaxProblem::affine(inst.A, inst.b);
  const ConvexDomain domain = ConvexDomain::box(inst.lower, inst.upper);
  const Vector x0 = Vector::Zero(d);
  MinMaxRun out;
  MinMaxResult result;
  const auto solve = [&] {
    result = min_the_max(problem, domain, x0, inst.R, eps, rng, cfg);
    return result.x;
  };
  Vector x;
  if (cap) {
    const CappedRun capped = budget_cap(solve, *problem.total_counter(), *cap, x0);
    x = capped.point;
    out.capped = capped.capped;
  } else {
    x = solve();
  }
  out.gap = problem.max_value_uncounted(x) - inst.f_star;
  out.success = out.gap <= eps;
  out.value_queries = problem.value_queries();
  out.grad_queries = problem.grad_queries();
  out.iterations = result.iterations;
  out.seconds = clock.seconds();
  return out;
}

ExperimentReport minmax_runs(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"run", "n", "d", "eps", "gap", "success", "value_queries", "grad_queries", "iterations"};
  if (config.timing) r.columns.push_back("wall_time");
  const int n = param(config, "n", 20);
  const int d = param(config, "d", 5);
  const MinMaxInstance inst = minmax_instance(n, d, param(config, "instance_seed", std::uint64_t{7}));
  const double eps = param(config, "eps_fraction", th::kMinMaxEpsFraction) * inst.G * inst.R;
  const MinMaxConfig cfg = minmax_preset(config);
  const std::int64_t runs = replications(config, th::kMinMaxRuns);
  std::vector<MinMaxRun> results(static_cast<std::size_t>(runs));
  const Rng root(config.seed);
  parallel_for(runs, [&](std::int64_t k) {
    results[static_cast<std::size_t>(k)] = minmax_run(inst, eps, cfg, root.split(static_cast<std::uint64_t>(k)), {});
  });
  int successes = 0;
  for (std::int64_t k = 0; k < runs; ++k) {
    const MinMaxRun& run = results[static_cast<std::size_t>(k)];
    successes += run.success;
    std::vector<double> row = {static_cast<double>(k),
                               static_cast<double>(n),
                               static_cast<double>(d),
                               eps,
                               run.gap,
                               run.success ? 1.0 : 0.0,
                               static_cast<double>(run.value_queries),
                               static_cast<double>(run.grad_queries),
                               static_cast<double>(run.iterations)};
    if (config.timing) row.push_back(run.seconds);
    r.rows.push_back(std::move(row));
  }
  const int needed = param(config, "required_successes", th::kMinMaxSuccesses);
  r.summary.emplace_back("successes", successes);
  r.checks.push_back(check("minmax_success", successes >= needed,
                           fmt::format("{} of {} runs eps-suboptimal (need {})", successes, runs, needed)));
  return r;
}

ExperimentReport minmax_capped(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"phase", "run", "cap", "gap", "success", "queries", "capped"};
  if (config.timing) r.columns.push_back("wall_time");
  const int n = param(config, "n", 20);
  const int d = param(config, "d", 5);
  const MinMaxInstance inst = minmax_instance(n, d, param(config, "instance_seed", std::uint64_t{7}));
  const double eps = param(config, "eps_fraction", th::kMinMaxEpsFraction) * inst.G * inst.R;
  const MinMaxConfig cfg = minmax_preset(config);
  const std::int64_t calibration = param(config, "calibration_runs", std::int64_t{10});
  const std::int64_t runs = replications(config, th::kCapRuns);
  const double multiplier = param(config, "cap_multiplier", th::kCapMultiplier);

  auto emit = [&](int phase, std::int64_t k, double cap, const MinMaxRun& run) {
    std::vector<double> row = {static_cast<double>(phase), static_cast<double>(k), cap, run.gap,
                               run.success ? 1.0 : 0.0, static_cast<double>(run.value_queries + run.grad_queries),
                               run.capped ? 1.0 : 0.0};
    if (config.timing) row.push_back(run.seconds);
    r.rows.push_back(std::move(row));
  };

  std::vector<MinMaxRun> uncapped(static_cast<std::size_t>(calibration));
  const Rng calibration_root(config.seed);
  parallel_for(calibration, [&](std::int64_t k) {
    uncapped[static_cast<std::size_t>(k)] =
        minmax_run(inst, eps, cfg, calibration_root.split(static_cast<std::uint64_t>(k)), {});
  });
  double mean_queries = 0.0;
  for (const MinMaxRun& run : uncapped) {
    mean_queries += static_cast<double>(run.value_queries + run.grad_queries);
  }
  mean_queries /= static_cast<double>(std::max<std::int64_t>(calibration, 1));
  const std::int64_t cap = static_cast<std::int64_t>(std::floor(multiplier * mean_queries));
  for (std::int64_t k = 0; k < calibration; ++k) emit(0, k, 0.0, uncapped[static_cast<std::size_t>(k)]);

  std::vector<MinMaxRun> capped(static_cast<std::size_t>(runs));
  const Rng root(config.seed + 0x9E3779B9ULL);
  parallel_for(runs, [&](std::int64_t k) {
    capped[static_cast<std::size_t>(k)] = minmax_run(inst, eps, cfg, root.split(static_cast<std::uint64_t>(k)), cap);
  });
  int successes = 0;
  for (std::int64_t k = 0; k < runs; ++k) {
    successes += capped[static_cast<std::size_t>(k)].success;
    emit(1, k, static_cast<double>(cap), capped[static_cast<std::size_t>(k)]);
  }
  const double rate = static_cast<double>(successes) / static_cast<double>(runs);
  const double se = std::sqrt(rate * (1.0 - rate) / static_cast<double>(runs));
  const double floor = th::kCapSuccessFloor - th::kSe * se;
  r.summary.emplace_back("mean_uncapped_queries", mean_queries);
  r.summary.emplace_back("cap", static_cast<double>(cap));
  r.summary.emplace_back("capped_success_rate", rate);
  r.checks.push_back(check("cap_success", rate >= floor,
                           fmt::format("success rate {} >= 1/4 - 3*{} with cap {} x mean queries {}", num(rate),
                                       num(se), num(multiplier), num(mean_queries))));
  return r;
}

ExperimentReport minmax_sampler(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"index", "expected_prob", "observed_freq", "exact_grad_norm"};
  const int n = param(config, "n", 5);
  const int d = param(config, "d", 3);
  const double eps_prime = param(config, "eps_prime", 0.1);
  const double offset = param(config, "offset", 0.7);
  const std::int64_t draws = replications(config, th::kSamplerDraws);
  Rng gen(param(config, "instance_seed", std::uint64_t{5}));
  Matrix A(n, d);
  Vector b(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) A(i, k) = gen.normal();
    A.row(i).normalize();
    b(i) = 0.1 * gen.normal();
  }
  const MaxProblem problem = MaxProblem::affine(A, b);
  Vector anchor(d), dir(d);
  for (int k = 0; k < d; ++k) {
    anchor(k) = 0.2 * gen.normal();
    dir(k) = gen.normal();
  }
  const SoftmaxContext ctx = make_softmax_context(problem, anchor, eps_prime);
  const Vector x = anchor + offset * ctx.radius * dir.normalized();
  const SoftmaxValue exact = softmax_from_values(A * x + b, eps_prime);
  const Vector exact_grad = A.transpose() * exact.probs;

  Rng rng(config.seed);
  RejectionStats stats;
  std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
  Vector g(d), sum = Vector::Zero(d), sum_sq = Vector::Zero(d);
  for (std::int64_t t = 0; t < draws; ++t) {
    const int i = softmax_grad_est(ctx, problem, x, rng, g, &stats);
    ++counts[static_cast<std::size_t>(i)];
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const double m = static_cast<double>(draws);
  double chi2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double expected = m * exact.probs(i);
    const double diff = static_cast<double>(counts[static_cast<std::size_t>(i)]) - expected;
    chi2 += diff * diff / expected;
    r.rows.push_back({static_cast<double>(i), exact.probs(i), static_cast<double>(counts[static_cast<std::size_t>(i)]) / m,
                      A.row(i).norm()});
  }
  const boost::math::chi_squared dist(n - 1);
  const double critical = boost::math::quantile(boost::math::complement(dist, th::kChiSquareSignificance));
  const double acceptance = static_cast<double>(stats.accepted) / static_cast<double>(stats.rounds);
  const Vector mean = sum / m;
  bool mean_ok = true;
  double worst_z = 0.0;
  for (int k = 0; k < d; ++k) {
    const double var = (sum_sq(k) / m - mean(k) * mean(k)) * m / (m - 1.0);
    const double se = std::sqrt(std::max(var, 0.0) / m);
    const double z = std::abs(mean(k) - exact_grad(k)) / std::max(se, 1e-300);
    worst_z = std::max(worst_z, z);
    mean_ok = mean_ok && std::abs(mean(k) - exact_grad(k)) <= th::kSe * se;
  }
  r.summary.emplace_back("chi_square", chi2);
  r.summary.emplace_back("chi_square_critical", critical);
  r.summary.emplace_back("acceptance_rate", acceptance);
  r.summary.emplace_back("max_gradient_z", worst_z);
  r.checks.push_back(check("sampler_chi_square", chi2 <= critical,
                           fmt::format("chi2 {} <= {} (df {}; alpha {})", num(chi2), num(critical), n - 1,
                                       num(th::kChiSquareSignificance))));
  r.checks.push_back(check("sampler_acceptance", acceptance >= th::kMinAcceptance,
                           fmt::format("acceptance {} >= e^-2", num(acceptance))));
  r.checks.push_back(check("sampler_mean_gradient", mean_ok,
                           fmt::format("max |mean - exact|/SE = {} <= 3", num(worst_z))));
  return r;
}

// --------------------------------------------------------------- composite

ExperimentReport composite_runs(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"N", "L", "G", "R", "tau", "grad_evals", "f_queries", "gap", "bound"};
  if (config.timing) r.columns.push_back("wall_time");
  const int n = param(config, "n", 40);
  const int d = param(config, "d", 20);
  Rng gen(param(config, "instance_seed", std::uint64_t{3}));
  Matrix A(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) A(i, k) = gen.normal() / std::sqrt(static_cast<double>(n));
  }
  Vector truth = Vector::Zero(d);
  for (int k = 0; k < d; k += 4) truth(k) = gen.normal();
  Vector b = A * truth;
  for (int i = 0; i < n; ++i) b(i) += 0.05 * gen.normal();
  const double tau = param(config, "tau", 2e-4);
  const FistaResult reference = fista_lasso(A, b, tau);
  const Vector x0 = Vector::Zero(d);
  const double R = param(config, "R", (reference.x - x0).norm());
  std::vector<std::int64_t> iterations(th::kCompositeIterations.begin(), th::kCompositeIterations.end());
  if (config.params.contains("iterations")) {
    iterations = config.params.at("iterations").get<std::vector<std::int64_t>>();
  }
  const double constant = param(config, "constant", th::kCompositeConstant);
  std::vector<std::vector<double>> rows(iterations.size());
  const Rng root(config.seed);
  parallel_for(static_cast<std::int64_t>(iterations.size()), [&](std::int64_t k) {
    Stopwatch clock;
    const CompositeProblem problem = l1_least_squares_problem(A, b, tau, ConvexDomain::whole_space(d), R);
    const std::int64_t N = iterations[static_cast<std::size_t>(k)];
    Rng rng = root.split(static_cast<std::uint64_t>(k));
    const CompositeResult run =
        composite_agd(problem, x0, cagd_schedule_for_iterations(problem.L, R, N), rng);
    const double gap = problem.objective(run.x) - reference.value;
    std::vector<double> row = {static_cast<double>(N),
                               problem.L,
                               problem.f.lipschitz_bound(),
                               R,
                               tau,
                               static_cast<double>(run.gradient_evaluations),
                               static_cast<double>(run.f_queries),
                               gap,
                               constant * problem.L * R * R / static_cast<double>(N * N)};
    if (config.timing) row.push_back(clock.seconds());
    rows[static_cast<std::size_t>(k)] = std::move(row);
  });
  bool rate_ok = true, grads_ok = true;
  std::string detail;
  for (auto& row : rows) {
    rate_ok = rate_ok && row[7] <= row[8];
    grads_ok = grads_ok && row[5] == row[0];
    detail += fmt::format(" N={}: gap {} vs {};", row[0], num(row[7]), num(row[8]));
    r.rows.push_back(std::move(row));
  }
  r.checks.push_back(check("composite_rate", rate_ok, "gap <= 8 L R^2/N^2:" + detail));
  r.checks.push_back(check("composite_gradients", grads_ok, "gradient evaluations of the smooth part = N"));
  return r;
}

// ---------------------------------------------------------------- unbiased

FiniteSumBenchmark unbiased_instance() {
  Matrix centers(2, 4);
  centers << 0.4, 1.6, 0.7, 1.3,  //
      0.6, -0.5, 0.3, 0.0;
  Vector kink(2);
  kink << 0.2, -0.1;
  return piecewise_quadratic_family(centers, 1.0, 0.5, kink, Vector::Zero(2), 3.0);
}

ExperimentReport unbiased_draws(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"n", "d", "J0", "draws", "mean_1", "mean_2", "xstar_1", "xstar_2", "bias", "bias_se",
               "mean_queries", "queries_se", "query_bound"};
  const FiniteSumBenchmark bench = unbiased_instance();
  const int n = bench.family.terms();
  const int d = bench.family.dimension();
  const std::int64_t M = replications(config, th::kUnbiasedDraws);

  // Exhaustive expectation with stub levels x_j = 1 - 2^-j.
  double stub = 0.0;
  for (int J = 1; J <= 64; ++J) {
    const double weight = J < 64 ? std::ldexp(1.0, -J) : std::ldexp(1.0, -63);
    const double prev = 1.0 - std::ldexp(1.0, -(J - 1));
    const double cur = 1.0 - std::ldexp(1.0, -J);
    Vector x0 = Vector::Zero(1), a(1), c(1);
    a(0) = prev;
    c(0) = cur;
    stub += weight * unbiased_combine(J, x0, a, c)(0);
  }
  const double stub_error = std::abs(stub - 1.0);
  r.summary.emplace_back("stub_expectation_error", stub_error);
  r.checks.push_back(check("unbiased_stub", stub_error <= th::kUnbiasedStubTolerance,
                           fmt::format("|E - 1| = {} <= {}", num(stub_error), num(th::kUnbiasedStubTolerance))));

  const EstimateStats s = measure_estimator(
      [&](Rng& rng) {
        const FiniteSumBenchmark fresh = unbiased_instance();
        return unbiased_opt_est(fresh.family, bench.x0, bench.R, bench.mu, bench.G, rng);
      },
      bench.minimizer, M, config.seed);
  const double bound = th::kUnbiasedQuerySlope * std::log2(static_cast<double>(n * d)) + th::kUnbiasedQueryOffset;
  r.rows.push_back({static_cast<double>(n), static_cast<double>(d),
                    static_cast<double>(unbiased_threshold_level(n, d)), static_cast<double>(M), s.mean(0), s.mean(1),
                    bench.minimizer(0), bench.minimizer(1), s.bias_norm, s.bias_se, s.mean_queries, s.queries_se,
                    bound});
  r.checks.push_back(check("unbiased_mean", s.bias_norm <= th::kSe * s.bias_se,
                           fmt::format("||mean - x*|| = {} <= 3*{}", num(s.bias_norm), num(s.bias_se))));
  r.checks.push_back(check("unbiased_queries", s.mean_queries <= bound,
                           fmt::format("mean queries {} <= 4 log2(nd) + 8 = {}", num(s.mean_queries), num(bound))));
  return r;
}

ExperimentReport unbiased_ellipsoid(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"T", "run", "error2", "bound", "queries"};
  const std::int64_t runs = replications(config, 20);
  const double mu = param(config, "mu", 1.0);
  const double R = 1.0;
  const int d = 2;
  Rng gen(config.seed);
  bool ok = true;
  for (std::int64_t k = 0; k < runs; ++k) {
    Vector target(d);
    for (int i = 0; i < d; ++i) target(i) = gen.uniform() * 1.2 - 0.6;
    const double G = mu * (R + target.norm());
    for (std::int64_t T : th::kEllipsoidBudgets) {
      std::int64_t queries = 0;
      const FirstOrderOracle oracle = [&](const Vector& x) {
        ++queries;
        return FirstOrderValue{0.5 * mu * (x - target).squaredNorm(), mu * (x - target)};
      };
      const EllipsoidResult res = ellipsoid(Vector::Zero(d), oracle, R, mu, G, T);
      const double err2 = (res.point - target).squaredNorm();
      const double bound = ellipsoid_error_bound(G, mu, d, T);
      ok = ok && err2 <= bound && queries <= T;
      r.rows.push_back({static_cast<double>(T), static_cast<double>(k), err2, bound, static_cast<double>(queries)});
    }
  }
  r.checks.push_back(check("ellipsoid_bound", ok, "error^2 <= (8G^2/mu^2) exp(-T/(2d^2)) and queries <= T on every run"));
  return r;
}

// ------------------------------------------------------------------ report

ExperimentReport report_inputs(const ExperimentConfig& config) {
  ExperimentReport r;
  r.columns = {"input", "data_rows", "checks_passed", "checks_total"};
  require(config.params.contains("inputs"), "report needs params.inputs (list of CSV paths)");
  const auto inputs = config.params.at("inputs").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::ifstream in(inputs[i]);
    if (!in) throw InvalidInput("cannot read " + inputs[i]);
    std::string line;
    std::getline(in, line);
    if (line.rfind(std::string("# ") + kCsvSchema, 0) != 0) throw InvalidInput(inputs[i] + " is not an mlmc CSV");
    std::getline(in, line);  // column header
    int data = 0, passed = 0, total = 0;
    while (std::getline(in, line)) {
      if (line.rfind("# check,", 0) == 0) {
        std::stringstream fields(line.substr(8));
        std::string name, verdict, detail;
        std::getline(fields, name, ',');
        std::getline(fields, verdict, ',');
        std::getline(fields, detail);
        ++total;
        passed += verdict == "PASS";
        r.checks.push_back(check(inputs[i] + ":" + name, verdict == "PASS", detail));
      } else if (!line.empty() && line[0] != '#') {
        ++data;
      }
    }
    r.rows.push_back({static_cast<double>(i), static_cast<double>(data), static_cast<double>(passed),
                      static_cast<double>(total)});
  }
  return r;
}

using Runner = ExperimentReport (*)(const ExperimentConfig&);

struct Entry {
  const char* experiment;
  const char* mode;
  Runner run;
};

// The first mode listed for an experiment is its default.
constexpr Entry kEntries[] = {
    {"estimate", "tmax-sweep", estimate_tmax_sweep},
    {"estimate", "odc", estimate_odc},
    {"estimate", "cost", estimate_cost},
    {"estimate", "telescoping", estimate_telescoping},
    {"moreau", "accuracy", moreau_accuracy},
    {"projeff", "runs", projeff_runs},
    {"minmax", "runs", minmax_runs},
    {"minmax", "capped", minmax_capped},
    {"minmax", "sampler", minmax_sampler},
    {"composite", "runs", composite_runs},
    {"unbiased", "draws", unbiased_draws},
    {"unbiased", "ellipsoid", unbiased_ellipsoid},
    {"report", "summary", report_inputs},
};

std::string sanitize(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n') ch = ';';
  }
  return s;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.experiment = j.value("experiment", std::string());
  c.mode = j.value("mode", std::string());
  if (j.contains("params")) c.params = j.at("params");
  c.seed = j.value("seed", std::uint64_t{1});
  c.replications = j.value("replications", std::int64_t{0});
  c.output = j.value("output", std::string());
  c.timing = j.value("timing", false);
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"experiment", c.experiment}, {"mode", c.mode},     {"params", c.params}, {"seed", c.seed},
          {"replications", c.replications}, {"output", c.output}, {"timing", c.timing}};
}

bool ExperimentReport::passed() const {
  for (const Check& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string ExperimentReport::csv() const {
  std::string out = fmt::format("# {} experiment={} mode={}\n", kCsvSchema, experiment, mode);
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += fmt::format("{}{}", i ? "," : "", row[i]);
    out += '\n';
  }
  for (const auto& [key, value] : summary) out += fmt::format("# summary,{},{}\n", key, value);
  for (const Check& c : checks) {
    out += fmt::format("# check,{},{},{}\n", c.name, c.pass ? "PASS" : "FAIL", sanitize(c.detail));
  }
  return out;
}

void ExperimentReport::print_summary(std::ostream& out) const {
  out << experiment << " (" << mode << ")\n";
  for (const auto& [key, value] : summary) out << fmt::format("  {} = {}\n", key, num(value));
  for (const Check& c : checks) out << fmt::format("  [{}] {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
}

std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const Entry& e : kEntries) {
    if (names.empty() || names.back() != e.experiment) names.emplace_back(e.experiment);
  }
  return names;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const Entry* match = nullptr;
  bool known = false;
  for (const Entry& e : kEntries) {
    if (config.experiment != e.experiment) continue;
    known = true;
    if (config.mode.empty() || config.mode == e.mode) {
      match = &e;
      break;
    }
  }
  if (!known) throw InvalidInput("unknown experiment: " + config.experiment);
  if (match == nullptr) throw InvalidInput("unknown mode '" + config.mode + "' for experiment " + config.experiment);
  if (!config.params.is_object()) throw InvalidInput("params must be a JSON object");

  ExperimentReport report = match->run(config);
  report.experiment = match->experiment;
  report.mode = match->mode;
  if (!config.output.empty()) {
    std::ofstream out(config.output, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + config.output);
    out << report.csv();
    if (!out) throw InvalidInput("failed writing " + config.output);
  }
  return report;
}

}  // namespace mlmc
