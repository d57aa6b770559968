// Command-line front end: synthetic data generation, single solves, privacy
// accounting, grid experiments, and metrics, all driven by one json config
// tree plus dotted-path overrides. Exit codes: 0 ok, 2 config error,
// 3 accountant rejection, 4 solver failure, 5 i/o error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "dpsc/dpsc.hpp"

namespace {

using dpsc::Json;
using dpsc::RunConfig;

Json json_from(const dpsc::SolverConfig& config) {
  Json j;
  j["c"] = config.c;
  j["K"] = config.outer_iterations;
  j["M"] = config.inner_steps;
  j["alpha"] = config.alpha;
  switch (config.noise_mode) {
    case dpsc::NoiseMode::per_iteration: j["noise_mode"] = "per_iteration"; break;
    case dpsc::NoiseMode::once: j["noise_mode"] = "once"; break;
    case dpsc::NoiseMode::off: j["noise_mode"] = "off"; break;
  }
  switch (config.init) {
    case dpsc::InitMode::penalty_default: j["init"] = "auto"; break;
    case dpsc::InitMode::uniform: j["init"] = "uniform"; break;
    case dpsc::InitMode::ones: j["init"] = "ones"; break;
  }
  j["inner_grad_tol"] = config.inner_grad_tol;
  return j;
}

Json json_from(const dpsc::SynthSpec& spec) {
  Json j;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["rho"] = spec.rho;
  j["stochastic_labels"] = spec.stochastic_labels;
  if (spec.true_w.size() > 0)
    j["true_w"] = std::vector<double>(spec.true_w.data(),
                                      spec.true_w.data() + spec.true_w.size());
  return j;
}

Json json_from(const dpsc::PenaltySpec& penalty) {
  Json j;
  j["kind"] = penalty.kind == dpsc::PenaltyKind::l1 ? "l1" : "lhalf";
  j["lambda"] = penalty.lambda;
  if (penalty.kind == dpsc::PenaltyKind::l_half) {
    j["mu"] = penalty.mu;
    j["reweight_steps"] = penalty.reweight_steps;
  }
  return j;
}

Json json_from(const dpsc::ExperimentGrid& grid) {
  Json j;
  j["epsilons"] = grid.epsilons;
  j["sizes"] = grid.sizes;
  j["repeats"] = grid.repeats;
  j["lambda_policy"] = grid.lambda_policy == dpsc::LambdaPolicy::fixed_list
                           ? "fixed_list"
                           : "cv5_nonprivate_then_reuse";
  j["lambdas"] = grid.lambdas;
  j["test_n"] = grid.test_n;
  j["support_threshold"] = grid.support_threshold;
  j["lhalf_mu"] = grid.lhalf_mu;
  j["lhalf_reweight_steps"] = grid.lhalf_reweight_steps;
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.is_open()) throw dpsc::IoError("cannot write file: " + path);
  out << text;
  if (!out) throw dpsc::IoError("failed while writing file: " + path);
}

void write_manifest(const std::string& output_path, const Json& manifest) {
  RunConfig config;
  config.tree = manifest;
  config.save(output_path + ".manifest.json");
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const RunConfig& config) {
  const dpsc::SynthSpec spec = config.synth_spec();
  const std::string output = config.io_path("output");

  const dpsc::SynthResult result = dpsc::synth_generate(spec);
  dpsc::save_dataset(output, result.data);

  Json sidecar;
  sidecar["seed"] = config.master_seed();
  sidecar["n"] = spec.n;
  sidecar["p"] = spec.p;
  sidecar["rho"] = spec.rho;
  sidecar["stochastic_labels"] = spec.stochastic_labels;
  sidecar["true_w"] = std::vector<double>(result.true_w.data(),
                                          result.true_w.data() + result.true_w.size());
  write_text_file(output + ".meta.json", sidecar.dump(2) + "\n");

  Json manifest;
  manifest["command"] = "generate";
  manifest["seed"] = config.master_seed();
  manifest["synth"] = json_from(spec);
  manifest["io"]["output"] = output;
  write_manifest(output, manifest);

  std::cout << "wrote " << result.data.n() << " rows x " << result.data.p()
            << " columns to " << output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainSetup {
  dpsc::Algorithm algorithm;
  dpsc::PenaltySpec penalty;
  bool is_private;
};

TrainSetup resolve_train_setup(const RunConfig& config) {
  if (!config.tree.contains("algorithm"))
    throw dpsc::ConfigError("train needs an algorithm: LLA, LHA, DPLL, or DPLH");
  const dpsc::Algorithm algorithm =
      dpsc::algorithm_from_name(config.tree["algorithm"].get<std::string>());

  const Json* section = config.find("penalty");
  if (section == nullptr) throw dpsc::ConfigError("config is missing the penalty section");
  const double lambda = section->value("lambda", 0.0);
  dpsc::PenaltySpec penalty =
      dpsc::is_lhalf_family(algorithm)
          ? dpsc::PenaltySpec::l_half(lambda, section->value("mu", 1e-4),
                                      section->value("reweight_steps", 5))
          : dpsc::PenaltySpec::l1(lambda);
  if (section->contains("kind")) {
    const std::string kind = (*section)["kind"].get<std::string>();
    const bool wants_lhalf = kind == "lhalf";
    if (kind != "l1" && kind != "lhalf")
      throw dpsc::ConfigError("unknown penalty kind: " + kind);
    if (wants_lhalf != dpsc::is_lhalf_family(algorithm))
      throw dpsc::ConfigError("penalty kind '" + kind + "' contradicts algorithm " +
                              dpsc::algorithm_name(algorithm));
  }
  return {algorithm, penalty, dpsc::is_private_algorithm(algorithm)};
}

dpsc::PrivacyPlan resolve_privacy_plan(const RunConfig& config, bool is_private,
                                       const dpsc::SolverConfig& solver, long n) {
  const dpsc::LossSpec loss = dpsc::LossSpec::logistic();
  if (!is_private)
    return dpsc::PrivacyPlan::non_private(solver.outer_iterations, solver.c, n, loss);
  const Json* section = config.find("privacy");
  if (section == nullptr)
    throw dpsc::ConfigError("private training needs a privacy section");
  const bool has_epsilon = section->contains("epsilon");
  const bool has_gamma = section->contains("gamma");
  if (has_epsilon == has_gamma)
    throw dpsc::ConfigError("privacy section must set exactly one of epsilon, gamma");
  dpsc::PrivacyPlan plan =
      has_epsilon ? dpsc::PrivacyPlan::for_epsilon((*section)["epsilon"].get<double>(),
                                                   solver.outer_iterations, solver.c, n,
                                                   loss)
                  : dpsc::PrivacyPlan::for_gamma((*section)["gamma"].get<double>(),
                                                 solver.outer_iterations, solver.c, n,
                                                 loss);
  if (!plan.valid) throw dpsc::AccountantError("privacy plan rejected: " + plan.reason);
  const dpsc::PlanCheck range = dpsc::validate_logistic_range(plan.c, plan.n, plan.gamma);
  if (!range.ok) throw dpsc::AccountantError("privacy plan rejected: " + range.reason);
  return plan;
}

int cmd_train(const RunConfig& config) {
  const std::string dataset_path = config.io_path("dataset");
  const std::string output = config.io_path("output");
  const std::string trace_path = config.io_path("trace", output + ".trace.csv");

  // Validate the whole configuration before reading any data.
  const TrainSetup setup = resolve_train_setup(config);
  dpsc::SolverConfig solver = config.solver_config();
  const dpsc::Dataset data = dpsc::load_dataset(dataset_path);
  if (setup.is_private) {
    if (solver.noise_mode == dpsc::NoiseMode::off)
      solver.noise_mode = dpsc::NoiseMode::per_iteration;
  } else {
    solver.noise_mode = dpsc::NoiseMode::off;
  }

  const dpsc::PrivacyPlan plan =
      resolve_privacy_plan(config, setup.is_private, solver, data.n());
  const dpsc::SolveResult result =
      dpsc::run_dpsc(data, dpsc::LossSpec::logistic(), setup.penalty, solver, plan);

  Json model;
  model["algorithm"] = dpsc::algorithm_name(setup.algorithm);
  model["lambda"] = setup.penalty.lambda;
  model["epsilon_spent"] = std::isfinite(result.epsilon_spent)
                               ? Json(result.epsilon_spent)
                               : Json("inf");
  model["seed"] = config.master_seed();
  model["w_final"] = std::vector<double>(result.w_final.data(),
                                         result.w_final.data() + result.w_final.size());
  model["z_final"] = std::vector<double>(result.z_final.data(),
                                         result.z_final.data() + result.z_final.size());
  write_text_file(output, model.dump(2) + "\n");
  dpsc::save_trace_csv(trace_path, result.trace);

  Json manifest;
  manifest["command"] = "train";
  manifest["seed"] = config.master_seed();
  manifest["algorithm"] = dpsc::algorithm_name(setup.algorithm);
  manifest["solver"] = json_from(solver);
  manifest["penalty"] = json_from(setup.penalty);
  if (const Json* privacy = config.find("privacy")) manifest["privacy"] = *privacy;
  manifest["io"]["dataset"] = dataset_path;
  manifest["io"]["output"] = output;
  manifest["io"]["trace"] = trace_path;
  write_manifest(output, manifest);

  const dpsc::TraceRow& last = result.trace.back();
  std::cout << dpsc::algorithm_name(setup.algorithm) << " finished: objective "
            << last.objective << ", primal residual " << last.primal_residual
            << ", epsilon spent "
            << (std::isfinite(result.epsilon_spent)
                    ? dpsc::format_double(result.epsilon_spent)
                    : "inf")
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// accountant

int cmd_accountant(const RunConfig& config) {
  const Json* privacy = config.find("privacy");
  if (privacy == nullptr)
    throw dpsc::ConfigError("accountant needs a privacy section with n and budgets");
  if (!privacy->contains("n"))
    throw dpsc::ConfigError("accountant needs privacy.n (training size)");
  const long n = (*privacy)["n"].get<long>();
  const dpsc::SolverConfig solver = config.solver_config();
  const dpsc::LossSpec loss = dpsc::LossSpec::logistic();

  std::vector<double> epsilons = privacy->value("epsilons", std::vector<double>{});
  if (privacy->contains("epsilon")) epsilons.push_back((*privacy)["epsilon"].get<double>());
  std::vector<double> gammas = privacy->value("gammas", std::vector<double>{});
  if (privacy->contains("gamma")) gammas.push_back((*privacy)["gamma"].get<double>());
  if (epsilons.empty() && gammas.empty())
    throw dpsc::ConfigError("accountant needs epsilon(s) or gamma(s)");

  std::vector<dpsc::PrivacyPlan> plans;
  for (double eps : epsilons) {
    try {
      plans.push_back(dpsc::PrivacyPlan::for_epsilon(eps, solver.outer_iterations,
                                                     solver.c, n, loss));
    } catch (const dpsc::AccountantError&) {
      dpsc::PrivacyPlan rejected;
      rejected.epsilon = eps;
      rejected.gamma = 0.0;
      rejected.per_iteration_epsilon = eps / solver.outer_iterations;
      rejected.iterations = solver.outer_iterations;
      rejected.c = solver.c;
      rejected.n = n;
      rejected.c1 = loss.c1;
      rejected.c2 = loss.c2;
      rejected.valid = false;
      rejected.reason = "epsilon below K*2.8*c2/(c*n)";
      plans.push_back(rejected);
    }
  }
  for (double gamma : gammas)
    plans.push_back(
        dpsc::PrivacyPlan::for_gamma(gamma, solver.outer_iterations, solver.c, n, loss));

  for (dpsc::PrivacyPlan& plan : plans) {
    if (!plan.valid || plan.gamma <= 0.0) continue;
    const dpsc::PlanCheck range = dpsc::validate_logistic_range(plan.c, plan.n, plan.gamma);
    if (!range.ok) {
      plan.valid = false;
      plan.reason = range.reason;
    }
  }

  std::ostringstream csv;
  csv << "epsilon,gamma,eps_per_iter,K,c,n,c1,c2,valid,reason\n";
  for (const dpsc::PrivacyPlan& plan : plans)
    csv << dpsc::format_double(plan.epsilon) << ',' << dpsc::format_double(plan.gamma)
        << ',' << dpsc::format_double(plan.per_iteration_epsilon) << ','
        << plan.iterations << ',' << dpsc::format_double(plan.c) << ',' << plan.n << ','
        << dpsc::format_double(plan.c1) << ',' << dpsc::format_double(plan.c2) << ','
        << (plan.valid ? "true" : "false") << ',' << plan.reason << "\n";

  std::cout << std::left << std::setw(12) << "epsilon" << std::setw(14) << "gamma"
            << std::setw(14) << "eps_per_iter" << std::setw(7) << "K" << std::setw(9)
            << "c" << std::setw(9) << "n" << std::setw(7) << "valid"
            << "reason\n";
  for (const dpsc::PrivacyPlan& plan : plans)
    std::cout << std::left << std::setw(12) << plan.epsilon << std::setw(14) << plan.gamma
              << std::setw(14) << plan.per_iteration_epsilon << std::setw(7)
              << plan.iterations << std::setw(9) << plan.c << std::setw(9) << plan.n
              << std::setw(7) << (plan.valid ? "true" : "false") << plan.reason << "\n";

  if (config.has_io_path("output")) {
    const std::string output = config.io_path("output");
    write_text_file(output, csv.str());
    Json manifest;
    manifest["command"] = "accountant";
    manifest["seed"] = config.master_seed();
    manifest["solver"] = json_from(solver);
    manifest["privacy"] = *privacy;
    manifest["io"]["output"] = output;
    write_manifest(output, manifest);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// experiment

int cmd_experiment(const RunConfig& config, int threads) {
  const dpsc::ExperimentGrid grid = config.experiment_grid();
  const std::string output = config.io_path("output");
  const std::string cells_path = output + ".cells";
  const std::string manifest_path = output + ".manifest.json";

  Json manifest;
  manifest["command"] = "experiment";
  manifest["seed"] = config.master_seed();
  manifest["experiment"] = json_from(grid);
  manifest["solver"] = json_from(grid.solver);
  manifest["synth"] = json_from(grid.synth);
  manifest["io"]["output"] = output;
  // Audit table of the derived per-replicate data seeds; solver streams
  // derive from these same rules (see experiment_run_seed).
  manifest["seeds"]["rule"] =
      "data: hash(master,'data',n,p,repeat); "
      "run: hash(master,'run',family,n,repeat[,eps_index])";
  for (long n : grid.sizes) {
    std::vector<std::uint64_t> data_seeds;
    data_seeds.reserve(static_cast<std::size_t>(grid.repeats));
    for (int r = 0; r < grid.repeats; ++r)
      data_seeds.push_back(
          dpsc::experiment_data_seed(config.master_seed(), n, grid.synth.p, r));
    manifest["seeds"]["data"][std::to_string(n)] = data_seeds;
  }
  const std::string manifest_text = manifest.dump(2) + "\n";

  // Resume only when the manifest on disk matches this exact configuration.
  std::map<std::string, dpsc::ExperimentRow> cached;
  bool resume = false;
  if (std::filesystem::exists(manifest_path) && std::filesystem::exists(cells_path)) {
    std::ifstream in(manifest_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    resume = buffer.str() == manifest_text;
  }
  if (resume) {
    std::ifstream in(cells_path);
    std::string line;
    while (std::getline(in, line)) {
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos) continue;
      try {
        cached[line.substr(0, tab)] =
            dpsc::ExperimentRow::from_csv_line(line.substr(tab + 1));
      } catch (const std::exception&) {
        // Ignore a torn final line from an interrupted run.
      }
    }
    std::cerr << "resuming: " << cached.size() << " cached cells\n";
  } else {
    std::filesystem::remove(cells_path);
  }
  write_text_file(manifest_path, manifest_text);

  std::ofstream cells(cells_path, std::ios::app);
  if (!cells.is_open()) throw dpsc::IoError("cannot write cell cache: " + cells_path);

  dpsc::ExperimentOptions options;
  options.threads = threads;
  options.cached = cached.empty() ? nullptr : &cached;
  options.on_row = [&cells](const std::string& key, const dpsc::ExperimentRow& row) {
    cells << key << '\t' << row.csv_line() << "\n";
    cells.flush();
  };
  options.log = [](const std::string& message) { std::cerr << message << "\n"; };

  const std::vector<dpsc::ExperimentRow> rows =
      dpsc::run_experiment(grid, config.master_seed(), options);
  dpsc::save_results_csv(output, rows);
  std::cout << "wrote " << rows.size() << " rows to " << output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

int cmd_metrics(const RunConfig& config) {
  const std::string model_path = config.io_path("model");
  const std::string dataset_path = config.io_path("dataset");

  std::ifstream model_in(model_path);
  if (!model_in.is_open()) throw dpsc::IoError("cannot open model file: " + model_path);
  Json model;
  try {
    model_in >> model;
  } catch (const Json::exception& e) {
    throw dpsc::IoError("model file is not valid json: " + std::string(e.what()));
  }
  const auto w_values = model["w_final"].get<std::vector<double>>();
  const auto z_values = model["z_final"].get<std::vector<double>>();
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
      w_values.data(), static_cast<long>(w_values.size()));
  const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(
      z_values.data(), static_cast<long>(z_values.size()));

  const dpsc::Dataset data = dpsc::load_dataset(dataset_path);

  double threshold = 1e-6;
  if (const Json* metrics = config.find("metrics"))
    threshold = metrics->value("support_threshold", threshold);

  std::string sidecar_path;
  if (config.has_io_path("sidecar")) sidecar_path = config.io_path("sidecar");
  else if (std::filesystem::exists(dataset_path + ".meta.json"))
    sidecar_path = dataset_path + ".meta.json";

  std::ostringstream out;
  out << "metric,value\n";
  out << "ce," << dpsc::format_double(dpsc::classification_error(w, data)) << "\n";
  out << "brier," << dpsc::format_double(dpsc::brier_score(w, data)) << "\n";
  if (!sidecar_path.empty()) {
    std::ifstream sidecar_in(sidecar_path);
    if (!sidecar_in.is_open())
      throw dpsc::IoError("cannot open sidecar file: " + sidecar_path);
    Json sidecar;
    sidecar_in >> sidecar;
    const auto true_values = sidecar["true_w"].get<std::vector<double>>();
    const Eigen::VectorXd true_w = Eigen::Map<const Eigen::VectorXd>(
        true_values.data(), static_cast<long>(true_values.size()));
    out << "coef_mse," << dpsc::format_double(dpsc::coefficient_mse(w, true_w)) << "\n";
    const dpsc::SupportCounts counts = dpsc::support_counts(z, true_w, threshold);
    out << "can_zero," << counts.correct_zeros << "\n";
    out << "ican_zero," << counts.incorrect_zeros << "\n";
    out << "support_threshold," << dpsc::format_double(threshold) << "\n";
  }

  std::cout << out.str();
  if (config.has_io_path("output")) {
    const std::string output = config.io_path("output");
    write_text_file(output, out.str());
    Json manifest;
    manifest["command"] = "metrics";
    manifest["seed"] = config.master_seed();
    if (const Json* metrics = config.find("metrics")) manifest["metrics"] = *metrics;
    manifest["io"]["model"] = model_path;
    manifest["io"]["dataset"] = dataset_path;
    if (!sidecar_path.empty()) manifest["io"]["sidecar"] = sidecar_path;
    manifest["io"]["output"] = output;
    write_manifest(output, manifest);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::string dataset;
  std::string model;
  std::string sidecar;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

RunConfig assemble_config(const CommonFlags& flags, const std::string& command) {
  RunConfig config;
  if (!flags.config_path.empty()) config = RunConfig::from_file(flags.config_path);
  if (config.tree.is_null()) config.tree = Json::object();
  for (const std::string& assignment : flags.overrides) config.apply_override(assignment);
  if (!flags.output.empty()) config.apply_override("io.output=\"" + flags.output + "\"");
  if (!flags.dataset.empty()) config.apply_override("io.dataset=\"" + flags.dataset + "\"");
  if (!flags.model.empty()) config.apply_override("io.model=\"" + flags.model + "\"");
  if (!flags.sidecar.empty()) config.apply_override("io.sidecar=\"" + flags.sidecar + "\"");
  if (flags.seed_given) config.tree["seed"] = flags.seed;
  const std::string configured = config.command();
  if (!configured.empty() && configured != command)
    throw dpsc::ConfigError("config command '" + configured + "' does not match '" +
                            command + "'");
  config.tree["command"] = command;
  return config;
}

void add_common_flags(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config_path, "json config file");
  app->add_option("--set", flags.overrides, "override, e.g. solver.alpha=0.5");
  app->add_option("--output", flags.output, "output path (io.output)");
  app->add_option("--seed", flags.seed, "master seed")->each([&flags](const std::string&) {
    flags.seed_given = true;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentially private sparse classification toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common_flags(generate, flags);

  CLI::App* train = app.add_subcommand("train", "fit one classifier");
  add_common_flags(train, flags);
  train->add_option("--dataset", flags.dataset, "dataset cache file (io.dataset)");

  CLI::App* accountant = app.add_subcommand("accountant", "tabulate privacy budgets");
  add_common_flags(accountant, flags);

  CLI::App* experiment = app.add_subcommand("experiment", "run a tradeoff grid");
  add_common_flags(experiment, flags);
  experiment->add_option("--threads", threads, "worker threads");

  CLI::App* metrics = app.add_subcommand("metrics", "score a model on a dataset");
  add_common_flags(metrics, flags);
  metrics->add_option("--dataset", flags.dataset, "dataset cache file (io.dataset)");
  metrics->add_option("--model", flags.model, "model file (io.model)");
  metrics->add_option("--sidecar", flags.sidecar, "true coefficient sidecar (io.sidecar)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(assemble_config(flags, "generate"));
    if (train->parsed()) return cmd_train(assemble_config(flags, "train"));
    if (accountant->parsed()) return cmd_accountant(assemble_config(flags, "accountant"));
    if (experiment->parsed())
      return cmd_experiment(assemble_config(flags, "experiment"), threads);
    if (metrics->parsed()) return cmd_metrics(assemble_config(flags, "metrics"));
  } catch (const dpsc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dpsc::AccountantError& e) {
    std::cerr << "accountant rejection: " << e.what() << "\n";
    return 3;
  } catch (const dpsc::SolverError& e) {
    std::cerr << "solver failure at iteration " << e.outer_iteration << ": " << e.what()
              << "\n";
    return 4;
  } catch (const dpsc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 5;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
