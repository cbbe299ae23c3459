#include "hdrisk/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

#include "hdrisk/errors.hpp"
#include "hdrisk/estimators.hpp"
#include "hdrisk/io.hpp"

namespace hdrisk {

namespace {

using nlohmann::json;

// Stream ids reserved for draws shared by every replication.
constexpr std::uint64_t kCovarianceStream = 0xC0FFEE0000000001ULL;
constexpr std::uint64_t kSignalStream = 0xC0FFEE0000000002ULL;

[[noreturn]] void bad_field(const std::string& field, const std::string& message) {
  throw ValidationError(field + ": " + message);
}

template <class T>
T get_field(const json& doc, const char* field, const T& fallback) {
  if (!doc.contains(field) || doc.at(field).is_null()) return fallback;
  try {
    return doc.at(field).get<T>();
  } catch (const json::exception& e) {
    bad_field(field, std::string("wrong type (") + e.what() + ")");
  }
}

std::vector<double> parse_grid(const json& doc, const char* field,
                               const std::vector<double>& fallback, Index n) {
  if (!doc.contains(field)) return fallback;
  const json& node = doc.at(field);
  if (node.is_array()) {
    std::vector<double> out;
    for (const auto& v : node) {
      if (!v.is_number()) bad_field(field, "grid entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (node.is_object()) {
    const double base = get_field<double>(node, "base", 0.1);
    const double ratio = get_field<double>(node, "ratio", 1.5);
    const int k_min = get_field<int>(node, "k_min", 0);
    const int k_max = get_field<int>(node, "k_max", 0);
    const bool per_sqrt_n = get_field<bool>(node, "per_sqrt_n", true);
    if (k_max < k_min) bad_field(field, "k_max must be >= k_min");
    return geometric_grid(base, ratio, k_min, k_max,
                          per_sqrt_n ? std::optional<Index>(n) : std::nullopt);
  }
  bad_field(field, "expected an array or a {base, ratio, k_min, k_max} object");
}

NoiseSpec parse_noise(const json& node, const NoiseSpec& fallback) {
  if (!node.is_object()) bad_field("noise", "expected an object");
  const auto kind = get_field<std::string>(node, "kind", "");
  if (kind == "gaussian") return GaussianNoise{get_field<double>(node, "sigma", 1.0)};
  if (kind == "student_t") return StudentTNoise{get_field<int>(node, "dof", 2)};
  if (kind == "contaminated") {
    return ContaminatedNoise{get_field<double>(node, "sigma", 1.0), get_field<double>(node, "q", 0.1),
                             get_field<double>(node, "outlier_scale", 10.0)};
  }
  if (kind.empty()) return fallback;
  bad_field("noise.kind", "unknown noise kind '" + kind + "'");
}

CovarianceSpec parse_covariance(const json& node) {
  if (!node.is_object()) bad_field("covariance", "expected an object");
  const auto kind = get_field<std::string>(node, "kind", "identity");
  if (kind == "identity") return IdentityCovariance{};
  if (kind == "scaled_wishart") return ScaledWishart{get_field<int>(node, "dof_multiplier", 5)};
  bad_field("covariance.kind", "unknown covariance kind '" + kind + "'");
}

SignalSpec parse_signal(const json& node, Index p) {
  if (!node.is_object()) bad_field("signal", "expected an object");
  const auto kind = get_field<std::string>(node, "kind", "sparse_flat");
  if (kind == "sparse_flat") {
    SparseFlatSignal s;
    s.s = get_field<Index>(node, "s", 0);
    if (node.contains("amplitude_sqrt_p")) {
      s.amplitude = get_field<double>(node, "amplitude_sqrt_p", 0.0) / std::sqrt(double(p));
    } else {
      s.amplitude = get_field<double>(node, "amplitude", 1.0);
    }
    return s;
  }
  if (kind == "low_rank") {
    return LowRankSignal{get_field<Index>(node, "rows", 0), get_field<Index>(node, "cols", 0),
                         get_field<Index>(node, "rank", 0)};
  }
  bad_field("signal.kind", "unknown signal kind '" + kind + "'");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json noise_to_json(const NoiseSpec& noise) {
  return std::visit(
      Overloaded{
          [](const GaussianNoise& g) { return json{{"kind", "gaussian"}, {"sigma", g.sigma}}; },
          [](const StudentTNoise& t) { return json{{"kind", "student_t"}, {"dof", t.dof}}; },
          [](const ContaminatedNoise& c) {
            return json{{"kind", "contaminated"},
                        {"sigma", c.sigma},
                        {"q", c.q},
                        {"outlier_scale", c.outlier_scale}};
          },
      },
      noise);
}

struct SharedDraws {
  std::shared_ptr<const Covariance> sigma;
  Vector beta;
};

SharedDraws shared_draws(const ExperimentConfig& cfg) {
  RngStream cov_rng(cfg.master_seed, kCovarianceStream);
  RngStream signal_rng(cfg.master_seed, kSignalStream);
  SharedDraws out;
  if (std::holds_alternative<IdentityCovariance>(cfg.covariance)) {
    out.sigma = std::make_shared<const Covariance>(Covariance::identity(cfg.p));
  } else {
    out.sigma = std::make_shared<const Covariance>(gen_covariance(cfg.covariance, cfg.p, cov_rng));
  }
  out.beta = gen_signal(cfg.signal, cfg.p, signal_rng);
  return out;
}

struct GridPoint {
  double lambda = 0.0;
  std::optional<double> lambda_star;
};

std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  switch (cfg.experiment) {
    case ExperimentKind::huber_grid:
      for (double lambda : cfg.lambdas) {
        for (double lambda_star : cfg.lambda_stars) out.push_back({lambda, lambda_star});
      }
      break;
    case ExperimentKind::ols_calibration:
      out.push_back({0.0, std::nullopt});
      break;
    case ExperimentKind::nuclear_norm:
    case ExperimentKind::sigma_recovery:
      for (double lambda : cfg.lambdas) out.push_back({lambda, std::nullopt});
      break;
  }
  return out;
}

std::pair<LossSpec, PenaltySpec> problem_at(const ExperimentConfig& cfg, const GridPoint& point) {
  switch (cfg.experiment) {
    case ExperimentKind::huber_grid:
      return {LossSpec::huber(huber_scale_from_lambda_star(cfg.n, *point.lambda_star)),
              PenaltySpec::l1(point.lambda)};
    case ExperimentKind::nuclear_norm: {
      const auto& low_rank = std::get<LowRankSignal>(cfg.signal);
      return {LossSpec::square(), PenaltySpec::nuclear(point.lambda, low_rank.rows, low_rank.cols)};
    }
    case ExperimentKind::ols_calibration:
      return {LossSpec::square(), PenaltySpec::none()};
    case ExperimentKind::sigma_recovery:
      return {LossSpec::square(), PenaltySpec::elastic_net(point.lambda, cfg.mu)};
  }
  throw ValidationError("experiment: unknown kind");
}

std::vector<ResultRow> run_replication(const ExperimentConfig& cfg, const SharedDraws& shared,
                                       int rep) {
  RngStream rng(cfg.master_seed, static_cast<std::uint64_t>(rep));
  auto [data, truth] = gen_dataset(cfg.n, shared.sigma, shared.beta, cfg.noise, rng);
  RngStream mc_rng = rng.substream(3);

  const auto points = grid_points(cfg);
  std::vector<ResultRow> rows;
  rows.reserve(points.size());
  // Warm start along lambda for a fixed lambda_star (or along the only axis).
  std::vector<std::optional<Vector>> warm(cfg.lambda_stars.empty() ? 1 : cfg.lambda_stars.size());

  for (std::size_t g = 0; g < points.size(); ++g) {
    const auto start = std::chrono::steady_clock::now();
    const GridPoint& point = points[g];
    const std::size_t warm_slot =
        cfg.experiment == ExperimentKind::huber_grid ? g % cfg.lambda_stars.size() : 0;
    ResultRow row;
    row.rep = rep;
    row.grid_index = static_cast<int>(g);
    row.lambda = point.lambda;
    row.lambda_star = point.lambda_star;
    row.sigma2_star = truth.sigma2_star;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.oos_error = row.r_hat = row.df_hat = row.trace_dpsi = row.kkt_gap = nan;

    try {
      const auto [loss, penalty] = problem_at(cfg, point);
      SolverConfig solver = cfg.solver;
      if (cfg.jacobian.method == FactorMethod::monte_carlo) {
        solver.kkt_tol = std::min(solver.kkt_tol, 1e-10);
      }
      const FitResult result = fit(loss, penalty, data, solver, warm[warm_slot]);
      warm[warm_slot] = result.beta_hat;
      row.oos_error = oos_error(result.beta_hat, truth);
      row.n_active = static_cast<Index>(result.active_set.size());
      row.n_inliers = static_cast<Index>(result.inlier_set.size());
      row.kkt_gap = result.kkt_gap;

      JacobianFactors factors =
          cfg.jacobian.method == FactorMethod::closed_form
              ? closed_form_factors(result, loss, penalty, data)
              : mc_factors(result, loss, penalty, data, cfg.solver, cfg.jacobian.a, cfg.jacobian.m,
                           mc_rng);
      row.df_hat = factors.df_hat;
      row.trace_dpsi = factors.trace_dpsi;
      RiskReport report;
      if (loss.kind == LossKind::square) {
        report = square_loss_estimates(result, data, *shared.sigma, factors);
        row.tau2_hat = report.tau2_hat;
        row.sigma2_hat = report.sigma2_hat;
      } else {
        report = hat_r(result, data, *shared.sigma, factors);
      }
      row.r_hat = report.r_hat;
      row.degenerate = report.degenerate;
      if (report.degenerate) row.reason = "small multiplicative factor";
      if (!result.converged) {
        row.degenerate = true;
        row.reason = "solver did not converge";
      }
    } catch (const Error& e) {
      row.degenerate = true;
      row.reason = e.what();
    }
    if (cfg.record_timing) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                        .count();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void append_optional(std::string& line, const std::optional<double>& v) {
  line += ',';
  if (v) line += format_double(*v);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::huber_grid:
      return "huber_grid";
    case ExperimentKind::nuclear_norm:
      return "nuclear_norm";
    case ExperimentKind::ols_calibration:
      return "ols_calibration";
    case ExperimentKind::sigma_recovery:
      return "sigma_recovery";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  if (name == "huber_grid") return ExperimentKind::huber_grid;
  if (name == "nuclear_norm") return ExperimentKind::nuclear_norm;
  if (name == "ols_calibration") return ExperimentKind::ols_calibration;
  if (name == "sigma_recovery") return ExperimentKind::sigma_recovery;
  throw ValidationError("experiment: unknown experiment '" + std::string(name) + "'");
}

std::vector<double> geometric_grid(double base, double ratio, int k_min, int k_max,
                                   std::optional<Index> per_sqrt_n) {
  std::vector<double> out;
  const double scale = per_sqrt_n ? 1.0 / std::sqrt(double(*per_sqrt_n)) : 1.0;
  for (int k = k_min; k <= k_max; ++k) out.push_back(base * std::pow(ratio, k) * scale);
  return out;
}

void ExperimentConfig::validate() const {
  if (n < 1) bad_field("n", "must be >= 1");
  if (p < 1) bad_field("p", "must be >= 1");
  if (reps < 1) bad_field("reps", "must be >= 1");
  if (threads < 1) bad_field("threads", "must be >= 1");
  if (experiment != ExperimentKind::ols_calibration && lambdas.empty()) {
    bad_field("lambda", "grid must be nonempty");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) bad_field("lambda", "entries must be finite and >= 0");
  }
  if (experiment == ExperimentKind::huber_grid) {
    if (lambda_stars.empty()) bad_field("lambda_star", "grid must be nonempty");
    for (double l : lambda_stars) {
      if (!(l > 0.0) || !std::isfinite(l)) bad_field("lambda_star", "entries must be finite and > 0");
    }
    for (double l : lambdas) {
      if (!(l > 0.0)) bad_field("lambda", "huber_grid needs lambda > 0");
    }
  }
  if (experiment == ExperimentKind::nuclear_norm && !std::holds_alternative<LowRankSignal>(signal)) {
    bad_field("signal", "nuclear_norm needs a low_rank signal");
  }
  if (experiment == ExperimentKind::ols_calibration && p >= n) {
    bad_field("p", "ols_calibration needs p < n");
  }
  if (!(mu >= 0.0)) bad_field("mu", "must be >= 0");
  if (jacobian.method == FactorMethod::monte_carlo) {
    if (!(jacobian.a > 0.0)) bad_field("jacobian.a", "must be > 0");
    if (jacobian.m < 1) bad_field("jacobian.m", "must be >= 1");
  }
  if (experiment == ExperimentKind::nuclear_norm && jacobian.method == FactorMethod::closed_form) {
    bad_field("jacobian", "nuclear_norm has no closed form; use monte_carlo");
  }
  try {
    hdrisk::validate(noise);
  } catch (const ValidationError& e) {
    bad_field("noise", e.what());
  }
  try {
    hdrisk::validate(signal, p);
  } catch (const ValidationError& e) {
    bad_field("signal", e.what());
  }
  if (const auto* w = std::get_if<ScaledWishart>(&covariance); w && w->dof_multiplier < 1) {
    bad_field("covariance.dof_multiplier", "must be >= 1");
  }
  try {
    solver.validate();
  } catch (const ValidationError& e) {
    bad_field("solver", e.what());
  }
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::huber_grid:
      cfg.n = 300;
      cfg.p = 300;
      cfg.reps = 30;
      cfg.noise = StudentTNoise{2};
      cfg.signal = SparseFlatSignal{30, 10.0 / std::sqrt(300.0)};
      cfg.lambdas = geometric_grid(0.1, 1.5, 5, 11, cfg.n);
      cfg.lambdas = {cfg.lambdas[0], cfg.lambdas[2], cfg.lambdas[4], cfg.lambdas[6]};
      cfg.lambda_stars = geometric_grid(0.1, 1.5, 4, 8, cfg.n);
      cfg.lambda_stars = {cfg.lambda_stars[0], cfg.lambda_stars[2], cfg.lambda_stars[4]};
      break;
    case ExperimentKind::nuclear_norm:
      cfg.n = 96;
      cfg.p = 120;
      cfg.reps = 3;
      cfg.noise = GaussianNoise{std::sqrt(2.0)};
      cfg.covariance = ScaledWishart{5};
      cfg.signal = LowRankSignal{10, 12, 3};
      cfg.lambdas = geometric_grid(0.5, 1.3, 0, 14, cfg.n);
      cfg.lambdas = {cfg.lambdas[0], cfg.lambdas[3], cfg.lambdas[6], cfg.lambdas[9],
                     cfg.lambdas[12]};
      cfg.jacobian = {FactorMethod::monte_carlo, kDefaultMcScale, kDefaultMcProbes};
      break;
    case ExperimentKind::ols_calibration:
      cfg.n = 200;
      cfg.p = 50;
      cfg.reps = 100;
      cfg.noise = GaussianNoise{1.0};
      cfg.signal = SparseFlatSignal{10, 1.0};
      break;
    case ExperimentKind::sigma_recovery:
      cfg.n = 200;
      cfg.p = 250;
      cfg.reps = 50;
      cfg.mu = 0.5;
      cfg.noise = GaussianNoise{1.0};
      cfg.covariance = ScaledWishart{5};
      cfg.signal = SparseFlatSignal{20, 0.25};
      cfg.lambdas = {0.05};
      break;
  }
  return cfg;
}

ExperimentConfig paper_scale_config(ExperimentKind kind) {
  ExperimentConfig cfg = default_config(kind);
  switch (kind) {
    case ExperimentKind::huber_grid:
      cfg.n = 1001;
      cfg.p = 1000;
      cfg.reps = 100;
      cfg.signal = SparseFlatSignal{100, 10.0 / std::sqrt(1000.0)};
      cfg.lambdas = geometric_grid(0.1, 1.5, 0, 15, cfg.n);
      cfg.lambda_stars = geometric_grid(0.1, 1.5, 0, 8, cfg.n);
      break;
    case ExperimentKind::nuclear_norm:
      cfg.n = 400;
      cfg.p = 500;
      cfg.reps = 10;
      cfg.signal = LowRankSignal{20, 25, 3};
      cfg.lambdas = geometric_grid(0.5, 1.3, 0, 14, cfg.n);
      break;
    case ExperimentKind::ols_calibration:
    case ExperimentKind::sigma_recovery:
      break;
  }
  return cfg;
}

ExperimentConfig config_from_json(const json& doc, bool paper_scale) {
  if (!doc.is_object()) throw ValidationError("config: expected a JSON object");
  if (!doc.contains("experiment")) bad_field("experiment", "missing");
  const auto kind = experiment_kind_from_string(get_field<std::string>(doc, "experiment", ""));
  ExperimentConfig cfg = paper_scale ? paper_scale_config(kind) : default_config(kind);
  if (!paper_scale) {
    cfg.n = get_field<Index>(doc, "n", cfg.n);
    cfg.p = get_field<Index>(doc, "p", cfg.p);
    cfg.reps = get_field<int>(doc, "reps", cfg.reps);
    cfg.lambdas = parse_grid(doc, "lambda", cfg.lambdas, cfg.n);
    cfg.lambda_stars = parse_grid(doc, "lambda_star", cfg.lambda_stars, cfg.n);
    if (doc.contains("signal")) cfg.signal = parse_signal(doc.at("signal"), cfg.p);
  }
  cfg.master_seed = get_field<std::uint64_t>(doc, "master_seed", cfg.master_seed);
  cfg.mu = get_field<double>(doc, "mu", cfg.mu);
  cfg.threads = get_field<int>(doc, "threads", cfg.threads);
  cfg.record_timing = get_field<bool>(doc, "record_timing", cfg.record_timing);
  if (doc.contains("noise")) cfg.noise = parse_noise(doc.at("noise"), cfg.noise);
  if (doc.contains("covariance")) cfg.covariance = parse_covariance(doc.at("covariance"));
  if (doc.contains("jacobian")) {
    const json& node = doc.at("jacobian");
    if (!node.is_object()) bad_field("jacobian", "expected an object");
    const auto method = get_field<std::string>(node, "method", "closed_form");
    if (method == "closed_form") {
      cfg.jacobian.method = FactorMethod::closed_form;
    } else if (method == "monte_carlo") {
      cfg.jacobian.method = FactorMethod::monte_carlo;
    } else {
      bad_field("jacobian.method", "unknown method '" + method + "'");
    }
    cfg.jacobian.a = get_field<double>(node, "a", cfg.jacobian.a);
    cfg.jacobian.m = get_field<int>(node, "m", cfg.jacobian.m);
  }
  if (doc.contains("solver")) {
    const json& node = doc.at("solver");
    if (!node.is_object()) bad_field("solver", "expected an object");
    cfg.solver.max_iters = get_field<int>(node, "max_iters", cfg.solver.max_iters);
    cfg.solver.kkt_tol = get_field<double>(node, "kkt_tol", cfg.solver.kkt_tol);
    cfg.solver.support_tol = get_field<double>(node, "support_tol", cfg.solver.support_tol);
    cfg.solver.algorithm =
        algorithm_from_string(get_field<std::string>(node, "algorithm", "auto"));
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["experiment"] = std::string(to_string(cfg.experiment));
  doc["n"] = cfg.n;
  doc["p"] = cfg.p;
  doc["reps"] = cfg.reps;
  doc["master_seed"] = cfg.master_seed;
  doc["lambda"] = cfg.lambdas;
  doc["lambda_star"] = cfg.lambda_stars;
  doc["mu"] = cfg.mu;
  doc["noise"] = noise_to_json(cfg.noise);
  if (const auto* w = std::get_if<ScaledWishart>(&cfg.covariance)) {
    doc["covariance"] = {{"kind", "scaled_wishart"}, {"dof_multiplier", w->dof_multiplier}};
  } else {
    doc["covariance"] = {{"kind", "identity"}};
  }
  if (const auto* s = std::get_if<SparseFlatSignal>(&cfg.signal)) {
    doc["signal"] = {{"kind", "sparse_flat"}, {"s", s->s}, {"amplitude", s->amplitude}};
  } else {
    const auto& l = std::get<LowRankSignal>(cfg.signal);
    doc["signal"] = {{"kind", "low_rank"}, {"rows", l.rows}, {"cols", l.cols}, {"rank", l.rank}};
  }
  if (cfg.jacobian.method == FactorMethod::closed_form) {
    doc["jacobian"] = {{"method", "closed_form"}};
  } else {
    doc["jacobian"] = {{"method", "monte_carlo"}, {"a", cfg.jacobian.a}, {"m", cfg.jacobian.m}};
  }
  doc["threads"] = cfg.threads;
  doc["record_timing"] = cfg.record_timing;
  doc["solver"] = {{"max_iters", cfg.solver.max_iters},
                   {"kkt_tol", cfg.solver.kkt_tol},
                   {"support_tol", cfg.solver.support_tol},
                   {"algorithm", std::string(to_string(cfg.solver.algorithm))}};
  return doc;
}

std::size_t grid_size(const ExperimentConfig& cfg) { return grid_points(cfg).size(); }

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const SharedDraws shared = shared_draws(cfg);
  std::vector<std::vector<ResultRow>> per_rep(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (int rep = next.fetch_add(1); rep < cfg.reps; rep = next.fetch_add(1)) {
      try {
        per_rep[static_cast<std::size_t>(rep)] = run_replication(cfg, shared, rep);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::min(cfg.threads, cfg.reps);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.reps) * grid_size(cfg));
  for (auto& chunk : per_rep) {
    for (auto& row : chunk) rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultCsvHeader << '\n';
  for (const ResultRow& r : rows) {
    std::string line = std::to_string(r.rep);
    line += ',' + format_double(r.lambda);
    append_optional(line, r.lambda_star);
    line += ',' + format_double(r.oos_error);
    line += ',' + format_double(r.r_hat);
    append_optional(line, r.tau2_hat);
    append_optional(line, r.sigma2_hat);
    line += ',' + format_double(r.sigma2_star);
    line += ',' + format_double(r.df_hat);
    line += ',' + format_double(r.trace_dpsi);
    line += ',' + std::to_string(r.n_active);
    line += ',' + std::to_string(r.n_inliers);
    line += ',' + format_double(r.kkt_gap);
    line += r.degenerate ? ",1" : ",0";
    line += ',' + format_double(r.wall_ms);
    out << line << '\n';
  }
}

}  // namespace hdrisk
