#pragma once

#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "dpsc/csv.hpp"
#include "dpsc/errors.hpp"
#include "dpsc/experiment.hpp"
#include "dpsc/penalty.hpp"
#include "dpsc/solver.hpp"
#include "dpsc/synth.hpp"

namespace dpsc {

using Json = nlohmann::ordered_json;

/// One structured configuration tree drives every CLI command; flag overrides
/// address leaves by dotted path. The tree itself is the round-trip unit: a
/// manifest is simply the fully resolved tree written back out.
struct RunConfig {
  Json tree;

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw IoError("cannot open config file: " + path);
    RunConfig config;
    try {
      in >> config.tree;
    } catch (const Json::exception& e) {
      throw ConfigError("config file " + path + " is not valid json: " + e.what());
    }
    if (!config.tree.is_object()) throw ConfigError("config root must be an object");
    return config;
  }

  static RunConfig from_json_text(const std::string& text) {
    RunConfig config;
    try {
      config.tree = Json::parse(text);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config is not valid json: ") + e.what());
    }
    if (!config.tree.is_object()) throw ConfigError("config root must be an object");
    return config;
  }

  std::string serialize() const { return tree.dump(2) + "\n"; }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write config file: " + path);
    out << serialize();
    if (!out) throw IoError("failed while writing config file: " + path);
  }

  /// `--set solver.alpha=0.5` style override. The value text is parsed as
  /// json when possible and kept as a plain string otherwise.
  void apply_override(const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
      value = Json::parse(text);
    } catch (const Json::exception&) {
      value = text;
    }
    Json* node = &tree;
    std::size_t start = 0;
    for (;;) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw ConfigError("bad override path: " + path);
      if (dot == std::string::npos) {
        (*node)[key] = value;
        return;
      }
      node = &(*node)[key];
      if (!node->is_object() && !node->is_null())
        throw ConfigError("override path crosses a non-object: " + path);
      start = dot + 1;
    }
  }

  // -- typed accessors ------------------------------------------------------

  const Json* find(const std::string& section) const {
    auto it = tree.find(section);
    return it == tree.end() ? nullptr : &*it;
  }

  std::string command() const {
    return tree.value("command", std::string{});
  }

  std::uint64_t master_seed() const {
    if (!tree.contains("seed")) return 0;
    if (!tree["seed"].is_number_integer() && !tree["seed"].is_number_unsigned())
      throw ConfigError("seed must be an integer");
    return tree["seed"].get<std::uint64_t>();
  }

  std::string io_path(const std::string& key, const std::string& fallback = {}) const {
    const Json* io = find("io");
    if (io == nullptr || !io->contains(key)) {
      if (fallback.empty())
        throw ConfigError("config is missing required path io." + key);
      return fallback;
    }
    return (*io)[key].get<std::string>();
  }

  bool has_io_path(const std::string& key) const {
    const Json* io = find("io");
    return io != nullptr && io->contains(key);
  }

  /// A missing synth section selects the defaults (n = 11000, p = 100).
  SynthSpec synth_spec() const {
    const Json* section = find("synth");
    SynthSpec spec;
    if (section == nullptr) {
      spec.seed = master_seed();
      return spec;
    }
    try {
      spec.n = section->value("n", spec.n);
      spec.p = section->value("p", spec.p);
      spec.rho = section->value("rho", spec.rho);
      spec.stochastic_labels = section->value("stochastic_labels", false);
      if (section->contains("true_w")) {
        const auto values = (*section)["true_w"].get<std::vector<double>>();
        spec.true_w = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                        static_cast<long>(values.size()));
      }
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("bad synth section: ") + e.what());
    }
    spec.seed = master_seed();
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bad synth section: ") + e.what());
    }
    return spec;
  }

  SolverConfig solver_config() const {
    SolverConfig config;
    const Json* section = find("solver");
    if (section != nullptr) {
      try {
        config.c = section->value("c", config.c);
        config.outer_iterations = section->value("K", config.outer_iterations);
        config.inner_steps = section->value("M", config.inner_steps);
        config.alpha = section->value("alpha", config.alpha);
        config.inner_grad_tol = section->value("inner_grad_tol", config.inner_grad_tol);
        const std::string mode = section->value("noise_mode", "per_iteration");
        if (mode == "per_iteration") config.noise_mode = NoiseMode::per_iteration;
        else if (mode == "once") config.noise_mode = NoiseMode::once;
        else if (mode == "off") config.noise_mode = NoiseMode::off;
        else throw ConfigError("unknown noise_mode: " + mode);
        const std::string init = section->value("init", "auto");
        if (init == "auto") config.init = InitMode::penalty_default;
        else if (init == "uniform") config.init = InitMode::uniform;
        else if (init == "ones") config.init = InitMode::ones;
        else throw ConfigError("unknown init mode: " + init);
      } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad solver section: ") + e.what());
      }
    }
    config.seed = master_seed();
    try {
      config.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("bad solver section: ") + e.what());
    }
    return config;
  }

  PenaltySpec penalty_spec() const {
    const Json* section = find("penalty");
    if (section == nullptr) throw ConfigError("config is missing the penalty section");
    try {
      const std::string kind = section->value("kind", "l1");
      const double lambda = section->value("lambda", 0.0);
      if (kind == "l1") return PenaltySpec::l1(lambda);
      if (kind == "lhalf")
        return PenaltySpec::l_half(lambda, section->value("mu", 1e-4),
                                   section->value("reweight_steps", 5));
      throw ConfigError("unknown penalty kind: " + kind);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("bad penalty section: ") + e.what());
    }
  }

  ExperimentGrid experiment_grid() const {
    const Json* section = find("experiment");
    if (section == nullptr) throw ConfigError("config is missing the experiment section");
    ExperimentGrid grid;
    try {
      grid.epsilons = section->value("epsilons", std::vector<double>{});
      grid.sizes = section->value("sizes", std::vector<long>{});
      grid.repeats = section->value("repeats", grid.repeats);
      grid.lambdas = section->value("lambdas", std::vector<double>{});
      grid.test_n = section->value("test_n", grid.test_n);
      grid.support_threshold = section->value("support_threshold", grid.support_threshold);
      grid.lhalf_mu = section->value("lhalf_mu", grid.lhalf_mu);
      grid.lhalf_reweight_steps =
          section->value("lhalf_reweight_steps", grid.lhalf_reweight_steps);
      const std::string policy = section->value("lambda_policy", "fixed_list");
      if (policy == "fixed_list") grid.lambda_policy = LambdaPolicy::fixed_list;
      else if (policy == "cv5_nonprivate_then_reuse")
        grid.lambda_policy = LambdaPolicy::cv5_nonprivate_then_reuse;
      else throw ConfigError("unknown lambda_policy: " + policy);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("bad experiment section: ") + e.what());
    }
    grid.solver = solver_config();
    grid.synth = synth_spec();
    grid.validate();
    return grid;
  }

  CsvSchema csv_schema() const {
    const Json* section = find("schema");
    if (section == nullptr) throw ConfigError("config is missing the schema section");
    CsvSchema schema;
    try {
      schema.positive_label = section->value("positive_label", std::string{});
      schema.negative_label = section->value("negative_label", std::string{});
      if (section->contains("columns")) {
        for (const auto& [name, kind] : (*section)["columns"].items()) {
          const std::string text = kind.get<std::string>();
          if (text == "numeric") schema.columns[name] = ColumnKind::numeric;
          else if (text == "categorical") schema.columns[name] = ColumnKind::categorical;
          else if (text == "label") schema.columns[name] = ColumnKind::label;
          else throw ConfigError("unknown column kind: " + text);
        }
      }
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("bad schema section: ") + e.what());
    }
    schema.validate();
    return schema;
  }
};

}  // namespace dpsc
