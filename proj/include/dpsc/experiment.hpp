#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "dpsc/accountant.hpp"
#include "dpsc/io.hpp"
#include "dpsc/metrics.hpp"
#include "dpsc/solver.hpp"
#include "dpsc/stats.hpp"
#include "dpsc/synth.hpp"

namespace dpsc {

enum class Algorithm { lla, lha, dpll, dplh };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::lla: return "LLA";
    case Algorithm::lha: return "LHA";
    case Algorithm::dpll: return "DPLL";
    case Algorithm::dplh: return "DPLH";
  }
  return "?";
}

inline Algorithm algorithm_from_name(const std::string& name) {
  if (name == "LLA" || name == "lla") return Algorithm::lla;
  if (name == "LHA" || name == "lha") return Algorithm::lha;
  if (name == "DPLL" || name == "dpll") return Algorithm::dpll;
  if (name == "DPLH" || name == "dplh") return Algorithm::dplh;
  throw ConfigError("unknown algorithm name: " + name);
}

inline bool is_private_algorithm(Algorithm a) {
  return a == Algorithm::dpll || a == Algorithm::dplh;
}

inline bool is_lhalf_family(Algorithm a) {
  return a == Algorithm::lha || a == Algorithm::dplh;
}

enum class LambdaPolicy { fixed_list, cv5_nonprivate_then_reuse };

/// One sweep over privacy budgets and training sizes: every algorithm in
/// {LLA, LHA, DPLL, DPLH} runs `repeats` seeded replicates per cell on fresh
/// synthetic datasets, and per-cell averages are tabulated.
struct ExperimentGrid {
  std::vector<double> epsilons;
  std::vector<long> sizes;  // training sizes; each replicate draws size + test_n rows
  int repeats = 50;
  LambdaPolicy lambda_policy = LambdaPolicy::fixed_list;
  std::vector<double> lambdas;
  long test_n = 1000;
  SolverConfig solver;  // per-run seeds are derived, solver.seed is ignored
  SynthSpec synth;      // n and seed are derived per cell and replicate
  double lhalf_mu = 1e-4;
  int lhalf_reweight_steps = 5;
  double support_threshold = 1e-6;

  void validate() const {
    if (epsilons.empty()) throw ConfigError("experiment grid needs at least one epsilon");
    if (sizes.empty()) throw ConfigError("experiment grid needs at least one size");
    if (lambdas.empty()) throw ConfigError("experiment grid needs at least one lambda");
    if (repeats < 1) throw ConfigError("experiment repeats must be >= 1");
    if (test_n < 1) throw ConfigError("experiment test size must be >= 1");
    for (double eps : epsilons)
      if (!(eps > 0.0)) throw ConfigError("experiment epsilons must be > 0");
    for (long n : sizes)
      if (n < 1) throw ConfigError("experiment sizes must be >= 1");
    solver.validate();
    SynthSpec probe = synth;
    probe.n = sizes.front() + test_n;
    probe.validate();
  }

  PenaltySpec penalty_for(Algorithm algorithm, double lambda) const {
    return is_lhalf_family(algorithm)
               ? PenaltySpec::l_half(lambda, lhalf_mu, lhalf_reweight_steps)
               : PenaltySpec::l1(lambda);
  }
};

struct ExperimentRow {
  std::string algorithm;
  double epsilon = 0.0;
  double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN for noise-off rows
  long n = 0;
  long p = 0;
  double lambda = 0.0;
  int iterations = 0;
  double c = 0.0;
  double alpha = 0.0;
  int inner_steps = 0;
  int repeats = 0;
  double ce_mean = 0.0, ce_sd = 0.0;
  double mse_mean = 0.0, mse_sd = 0.0;
  double can_mean = 0.0, ican_mean = 0.0;
  bool valid = true;
  bool has_metrics = true;  // false for infeasible cells

  static const char* csv_header() {
    return "algorithm,epsilon,gamma,n,p,lambda,K,c,alpha,M,repeats,"
           "ce_mean,ce_sd,mse_mean,mse_sd,can_mean,ican_mean,valid";
  }

  std::string csv_line() const {
    std::ostringstream out;
    out << algorithm << ',' << format_double(epsilon) << ',';
    if (!std::isnan(gamma)) out << format_double(gamma);
    out << ',' << n << ',' << p << ',' << format_double(lambda) << ',' << iterations
        << ',' << format_double(c) << ',' << format_double(alpha) << ',' << inner_steps
        << ',' << repeats << ',';
    if (has_metrics) {
      out << format_double(ce_mean) << ',' << format_double(ce_sd) << ','
          << format_double(mse_mean) << ',' << format_double(mse_sd) << ','
          << format_double(can_mean) << ',' << format_double(ican_mean);
    } else {
      out << ",,,,,";
    }
    out << ',' << (valid ? "true" : "false");
    return out.str();
  }

  static ExperimentRow from_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 18) cells.emplace_back();
    ExperimentRow row;
    row.algorithm = cells[0];
    row.epsilon = std::stod(cells[1]);
    row.gamma = cells[2].empty() ? std::numeric_limits<double>::quiet_NaN()
                                 : std::stod(cells[2]);
    row.n = std::stol(cells[3]);
    row.p = std::stol(cells[4]);
    row.lambda = std::stod(cells[5]);
    row.iterations = std::stoi(cells[6]);
    row.c = std::stod(cells[7]);
    row.alpha = std::stod(cells[8]);
    row.inner_steps = std::stoi(cells[9]);
    row.repeats = std::stoi(cells[10]);
    row.has_metrics = !cells[11].empty();
    if (row.has_metrics) {
      row.ce_mean = std::stod(cells[11]);
      row.ce_sd = std::stod(cells[12]);
      row.mse_mean = std::stod(cells[13]);
      row.mse_sd = std::stod(cells[14]);
      row.can_mean = std::stod(cells[15]);
      row.ican_mean = std::stod(cells[16]);
    }
    row.valid = cells[17] == "true";
    return row;
  }
};

/// One solve inside a grid cell, before averaging.
struct RunRecord {
  std::string algorithm;
  std::size_t eps_index = 0;
  std::size_t size_index = 0;
  std::size_t lambda_index = 0;
  int repeat = 0;
  double ce = 0.0;
  double mse = 0.0;
  double can_zero = 0.0;
  double ican_zero = 0.0;
};

struct ExperimentOptions {
  int threads = 1;
  const std::map<std::string, ExperimentRow>* cached = nullptr;
  std::function<void(const std::string& key, const ExperimentRow& row)> on_row;
  std::function<void(const RunRecord& record)> on_run;  // per-solve metrics
  std::function<void(const std::string& message)> log;
};

// Seed derivation contract for grids. Data replicates are keyed by
// (n, p, replicate) only, never by epsilon or algorithm, so every algorithm
// and budget sees the same datasets and comparisons pair by replicate.

inline std::uint64_t experiment_data_seed(std::uint64_t master, long train_n, long p,
                                          int replicate) {
  return derive_seed(derive_seed(master, "data"),
                     {static_cast<std::uint64_t>(train_n), static_cast<std::uint64_t>(p),
                      static_cast<std::uint64_t>(replicate)});
}

/// Solver streams are keyed by penalty family rather than algorithm, and the
/// budget index enters only when noise is actually drawn. A private run with
/// the noise switched off therefore replays its non-private counterpart
/// exactly (path equivalence through the zero noise vector).
inline std::uint64_t experiment_run_seed(std::uint64_t master, Algorithm algorithm,
                                         long train_n, int replicate,
                                         std::size_t eps_index, bool draws_noise) {
  std::uint64_t seed = derive_seed(derive_seed(master, "run"),
                                   {static_cast<std::uint64_t>(is_lhalf_family(algorithm)),
                                    static_cast<std::uint64_t>(train_n),
                                    static_cast<std::uint64_t>(replicate)});
  if (draws_noise) seed = derive_seed(seed, static_cast<std::uint64_t>(eps_index));
  return seed;
}

namespace detail {

struct RowTask {
  Algorithm algorithm;
  std::size_t eps_index;
  std::size_t size_index;
  std::size_t lambda_index;  // unused under the CV policy

  std::string key(const ExperimentGrid& grid) const {
    std::ostringstream out;
    out << algorithm_name(algorithm) << ':' << eps_index << ':' << size_index;
    if (grid.lambda_policy == LambdaPolicy::fixed_list) out << ':' << lambda_index;
    else out << ":cv";
    return out.str();
  }
};

struct ReplicateData {
  Dataset train;
  Dataset test;
  Eigen::VectorXd true_w;
};

inline ReplicateData make_replicate(const ExperimentGrid& grid, std::uint64_t master,
                                    long train_n, int replicate) {
  SynthSpec spec = grid.synth;
  spec.n = train_n + grid.test_n;
  spec.seed = experiment_data_seed(master, train_n, grid.synth.p, replicate);
  SynthResult synth = synth_generate(spec);
  auto [train, test] =
      train_test_split(synth.data, grid.test_n, derive_seed(spec.seed, "split"));
  return {std::move(train), std::move(test), std::move(synth.true_w)};
}

/// 5-fold cross-validated lambda on the non-private problem of one family.
inline double cv5_lambda(const ExperimentGrid& grid, const ReplicateData& replicate,
                         std::uint64_t data_seed, bool lhalf_family) {
  const long n = replicate.train.n();
  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  RngStream stream(derive_seed(data_seed, "cv"));
  for (long i = n - 1; i > 0; --i) {
    const long j = static_cast<long>(stream.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  double best_lambda = grid.lambdas.front();
  double best_ce = std::numeric_limits<double>::infinity();
  for (std::size_t li = 0; li < grid.lambdas.size(); ++li) {
    std::vector<double> fold_ce;
    for (int fold = 0; fold < 5; ++fold) {
      const long lo = n * fold / 5;
      const long hi = n * (fold + 1) / 5;
      if (hi - lo < 1 || n - (hi - lo) < 1) continue;
      Eigen::MatrixXd fit_x(n - (hi - lo), replicate.train.p());
      Eigen::VectorXd fit_y(n - (hi - lo));
      Eigen::MatrixXd held_x(hi - lo, replicate.train.p());
      Eigen::VectorXd held_y(hi - lo);
      long fit_i = 0;
      long held_i = 0;
      for (long i = 0; i < n; ++i) {
        const long src = order[static_cast<std::size_t>(i)];
        if (i >= lo && i < hi) {
          held_x.row(held_i) = replicate.train.features.row(src);
          held_y[held_i++] = replicate.train.labels[src];
        } else {
          fit_x.row(fit_i) = replicate.train.features.row(src);
          fit_y[fit_i++] = replicate.train.labels[src];
        }
      }
      Dataset fit(std::move(fit_x), std::move(fit_y));
      Dataset held(std::move(held_x), std::move(held_y));

      SolverConfig config = grid.solver;
      config.noise_mode = NoiseMode::off;
      config.seed = derive_seed(data_seed, {fnv1a64("cv-run"),
                                            static_cast<std::uint64_t>(lhalf_family),
                                            static_cast<std::uint64_t>(fold),
                                            static_cast<std::uint64_t>(li)});
      const PenaltySpec penalty = grid.penalty_for(
          lhalf_family ? Algorithm::lha : Algorithm::lla, grid.lambdas[li]);
      const PrivacyPlan plan = PrivacyPlan::non_private(
          config.outer_iterations, config.c, fit.n(), LossSpec::logistic());
      const SolveResult fitted =
          run_dpsc(fit, LossSpec::logistic(), penalty, config, plan);
      fold_ce.push_back(classification_error(fitted.w_final, held));
    }
    const double ce = mean(fold_ce);
    if (ce < best_ce) {
      best_ce = ce;
      best_lambda = grid.lambdas[li];
    }
  }
  return best_lambda;
}

}  // namespace detail

/// Run the grid and return one averaged row per (algorithm, cell), ordered by
/// algorithm, then epsilon, then size, then lambda. Rows found in
/// options.cached are returned as-is without recomputation.
inline std::vector<ExperimentRow> run_experiment(const ExperimentGrid& grid,
                                                 std::uint64_t master_seed,
                                                 const ExperimentOptions& options = {}) {
  grid.validate();

  const std::vector<Algorithm> algorithms = {Algorithm::lla, Algorithm::lha,
                                             Algorithm::dpll, Algorithm::dplh};
  const std::size_t lambda_count =
      grid.lambda_policy == LambdaPolicy::fixed_list ? grid.lambdas.size() : 1;

  std::vector<detail::RowTask> tasks;
  for (Algorithm algorithm : algorithms)
    for (std::size_t ei = 0; ei < grid.epsilons.size(); ++ei)
      for (std::size_t si = 0; si < grid.sizes.size(); ++si)
        for (std::size_t li = 0; li < lambda_count; ++li)
          tasks.push_back({algorithm, ei, si, li});

  std::vector<ExperimentRow> rows(tasks.size());
  std::mutex sink_mutex;

  // Chosen lambdas are shared across rows under the CV policy.
  std::mutex cv_mutex;
  std::map<std::tuple<bool, long, int>, double> cv_memo;

  auto resolve_lambda = [&](bool lhalf_family, long train_n, int replicate,
                            const detail::ReplicateData& data,
                            std::uint64_t data_seed) -> double {
    if (grid.lambda_policy == LambdaPolicy::fixed_list) return 0.0;  // unused
    const auto key = std::make_tuple(lhalf_family, train_n, replicate);
    {
      std::lock_guard<std::mutex> lock(cv_mutex);
      auto it = cv_memo.find(key);
      if (it != cv_memo.end()) return it->second;
    }
    const double chosen = detail::cv5_lambda(grid, data, data_seed, lhalf_family);
    std::lock_guard<std::mutex> lock(cv_mutex);
    return cv_memo.emplace(key, chosen).first->second;
  };

  auto compute_row = [&](const detail::RowTask& task) -> ExperimentRow {
    const long train_n = grid.sizes[task.size_index];
    const double epsilon = grid.epsilons[task.eps_index];
    // grid.solver.noise_mode == off runs the private algorithms through the
    // zero-noise path; their rows then equal the non-private ones.
    const bool draws_noise = is_private_algorithm(task.algorithm) &&
                             grid.solver.noise_mode != NoiseMode::off;
    const bool lhalf_family = is_lhalf_family(task.algorithm);

    ExperimentRow row;
    row.algorithm = algorithm_name(task.algorithm);
    row.epsilon = epsilon;
    row.n = train_n;
    row.p = grid.synth.p;
    row.iterations = grid.solver.outer_iterations;
    row.c = grid.solver.c;
    row.alpha = grid.solver.alpha;
    row.inner_steps = grid.solver.inner_steps;
    row.repeats = grid.repeats;
    if (grid.lambda_policy == LambdaPolicy::fixed_list)
      row.lambda = grid.lambdas[task.lambda_index];

    PrivacyPlan plan = PrivacyPlan::non_private(grid.solver.outer_iterations,
                                                grid.solver.c, train_n,
                                                LossSpec::logistic());
    if (draws_noise) {
      try {
        plan = PrivacyPlan::for_epsilon(epsilon, grid.solver.outer_iterations,
                                        grid.solver.c, train_n, LossSpec::logistic());
        const PlanCheck range = validate_logistic_range(plan.c, plan.n, plan.gamma);
        if (!plan.valid || !range.ok) {
          row.valid = false;
          row.has_metrics = false;
          return row;
        }
        row.gamma = plan.gamma;
      } catch (const AccountantError&) {
        row.valid = false;
        row.has_metrics = false;
        return row;
      }
    }

    std::vector<double> ce, mse, can, ican, chosen_lambdas;
    for (int r = 0; r < grid.repeats; ++r) {
      const std::uint64_t data_seed =
          experiment_data_seed(master_seed, train_n, grid.synth.p, r);
      const detail::ReplicateData replicate =
          detail::make_replicate(grid, master_seed, train_n, r);

      double lambda = grid.lambda_policy == LambdaPolicy::fixed_list
                          ? grid.lambdas[task.lambda_index]
                          : resolve_lambda(lhalf_family, train_n, r, replicate, data_seed);
      chosen_lambdas.push_back(lambda);

      SolverConfig config = grid.solver;
      config.noise_mode = draws_noise ? grid.solver.noise_mode : NoiseMode::off;
      config.seed = experiment_run_seed(master_seed, task.algorithm, train_n, r,
                                     task.eps_index, draws_noise);

      const PenaltySpec penalty = grid.penalty_for(task.algorithm, lambda);
      const SolveResult fit =
          run_dpsc(replicate.train, LossSpec::logistic(), penalty, config, plan);

      ce.push_back(classification_error(fit.w_final, replicate.test));
      mse.push_back(coefficient_mse(fit.w_final, replicate.true_w));
      const SupportCounts counts =
          support_counts(fit.z_final, replicate.true_w, grid.support_threshold);
      can.push_back(static_cast<double>(counts.correct_zeros));
      ican.push_back(static_cast<double>(counts.incorrect_zeros));
      if (options.on_run) {
        std::lock_guard<std::mutex> lock(sink_mutex);
        options.on_run({row.algorithm, task.eps_index, task.size_index,
                        task.lambda_index, r, ce.back(), mse.back(), can.back(),
                        ican.back()});
      }
    }

    row.ce_mean = mean(ce);
    row.ce_sd = sample_sd(ce);
    row.mse_mean = mean(mse);
    row.mse_sd = sample_sd(mse);
    row.can_mean = mean(can);
    row.ican_mean = mean(ican);
    if (grid.lambda_policy == LambdaPolicy::cv5_nonprivate_then_reuse)
      row.lambda = mean(chosen_lambdas);
    return row;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= tasks.size()) return;
      const std::string key = tasks[index].key(grid);
      if (options.cached != nullptr) {
        auto it = options.cached->find(key);
        if (it != options.cached->end()) {
          rows[index] = it->second;
          std::lock_guard<std::mutex> lock(sink_mutex);
          if (options.log) options.log("cell " + key + " reused from cache");
          continue;
        }
      }
      ExperimentRow row = compute_row(tasks[index]);
      {
        std::lock_guard<std::mutex> lock(sink_mutex);
        if (options.on_row) options.on_row(key, row);
        if (options.log)
          options.log("cell " + key + (row.has_metrics ? " done" : " infeasible"));
      }
      rows[index] = std::move(row);
    }
  };

  const int thread_count = std::max(1, options.threads);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return rows;
}

/// Results file: fixed header plus one line per row, already in grid order.
inline void save_results_csv(const std::string& path,
                             const std::vector<ExperimentRow>& rows) {
  std::ofstream out(path);
  if (!out.is_open()) throw IoError("cannot write results file: " + path);
  out << ExperimentRow::csv_header() << "\n";
  for (const ExperimentRow& row : rows) out << row.csv_line() << "\n";
  if (!out) throw IoError("failed while writing results file: " + path);
}

}  // namespace dpsc
