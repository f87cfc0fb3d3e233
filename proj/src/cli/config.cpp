#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "causal/cli/cli.hpp"

namespace causal::cli {

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) items.push_back(item.substr(first, last - first + 1));
  }
  return items;
}

ScenarioId scenario_from(const std::string& text) {
  if (auto s = parse_scenario(text)) return *s;
  throw UsageError("unknown scenario '" + text + "' (expected covid, unmeasured or austin)");
}

Estimand estimand_from(const std::string& text) {
  if (auto e = parse_estimand(text)) return *e;
  throw UsageError("unknown estimand '" + text + "' (expected rd or or)");
}

std::vector<Method> methods_from(const std::vector<std::string>& ids) {
  std::vector<Method> methods;
  for (const auto& id : ids) {
    auto m = parse_method(id);
    if (!m) throw UsageError("unknown method '" + id + "'");
    methods.push_back(*m);
  }
  return methods;
}

unsigned workers_from(const std::string& text) {
  if (text == "auto") return std::max(1u, std::thread::hardware_concurrency());
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || value < 1) {
    throw UsageError("--workers expects a positive integer or 'auto', got '" + text + "'");
  }
  return static_cast<unsigned>(value);
}

std::vector<std::string> string_list(const json& value, const char* key) {
  if (value.is_string()) return split_list(value.get<std::string>());
  if (!value.is_array()) throw UsageError(std::string("config: '") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& item : value) {
    if (!item.is_string()) throw UsageError(std::string("config: '") + key + "' holds a non-string");
    out.push_back(item.get<std::string>());
  }
  return out;
}

template <typename T>
T typed(const json& value, const char* key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config: field '") + key + "' has the wrong type");
  }
}

void apply_json(const json& doc, RunConfig& c) {
  if (!doc.is_object()) throw UsageError("config: top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const char* k = key.c_str();
    if (key == "command") {
      auto cmd = parse_command(typed<std::string>(value, k));
      if (!cmd) throw UsageError("config: unknown command");
      c.command = *cmd;
    } else if (key == "scenario") {
      c.scenario = scenario_from(typed<std::string>(value, k));
    } else if (key == "n") {
      c.n = typed<Index>(value, k);
    } else if (key == "replicates") {
      c.replicates = typed<std::size_t>(value, k);
    } else if (key == "bootstrap") {
      c.bootstrap = typed<std::size_t>(value, k);
    } else if (key == "estimand") {
      c.estimand = estimand_from(typed<std::string>(value, k));
    } else if (key == "methods") {
      c.methods = methods_from(string_list(value, k));
    } else if (key == "seed") {
      c.seed = typed<std::uint64_t>(value, k);
    } else if (key == "workers") {
      c.workers = value.is_string() ? workers_from(value.get<std::string>())
                                    : workers_from(std::to_string(typed<long>(value, k)));
    } else if (key == "beta_trt") {
      c.beta_trt = typed<double>(value, k);
    } else if (key == "target") {
      c.target = typed<double>(value, k);
    } else if (key == "beta0") {
      c.beta0 = typed<double>(value, k);
    } else if (key == "true_effect") {
      c.true_effect = typed<double>(value, k);
    } else if (key == "out") {
      c.out = typed<std::string>(value, k);
    } else if (key == "data") {
      c.data = typed<std::string>(value, k);
    } else if (key == "categorical") {
      c.categorical = string_list(value, k);
    } else if (key == "format") {
      c.format = typed<std::string>(value, k);
    } else if (key == "express") {
      // handled before the profile is applied
    } else if (key == "quiet") {
      c.quiet = typed<bool>(value, k);
    } else if (key == "oracle_datasets") {
      c.oracle.datasets = typed<std::size_t>(value, k);
    } else if (key == "oracle_size") {
      c.oracle.size = typed<Index>(value, k);
    } else {
      throw UsageError("config: unknown field '" + key + "'");
    }
  }
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Calibrate:
      return "calibrate";
    case Command::Simulate:
      return "simulate";
    case Command::Analyze:
      return "analyze";
    case Command::Summarize:
      return "summarize";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view text) {
  if (text == "calibrate") return Command::Calibrate;
  if (text == "simulate") return Command::Simulate;
  if (text == "analyze") return Command::Analyze;
  if (text == "summarize") return Command::Summarize;
  return std::nullopt;
}

std::vector<Method> RunConfig::resolved_methods() const {
  if (!methods.empty()) return methods;
  const auto all = registry(estimand);
  return {all.begin(), all.end()};
}

BootstrapConfig RunConfig::bootstrap_config() const {
  BootstrapConfig b;
  b.replications = bootstrap;
  return b;
}

void RunConfig::validate() const {
  std::set<Method> seen;
  for (const Method m : methods) {
    if (!in_registry(estimand, m)) {
      throw UsageError("method '" + std::string(method_id(m)) + "' is not available for estimand " +
                       std::string(causal::to_string(estimand)));
    }
    if (!seen.insert(m).second) {
      throw UsageError("method '" + std::string(method_id(m)) + "' listed twice");
    }
  }
  if (bootstrap < 2) throw UsageError("--bootstrap must be at least 2");
  if (format != "csv" && format != "json") throw UsageError("--format must be csv or json");
  if (oracle.datasets < 1 || oracle.size < 1) throw UsageError("oracle size must be positive");
  switch (command) {
    case Command::Simulate:
      if (beta_trt.has_value() == target.has_value()) {
        throw UsageError("simulate needs exactly one of --beta-trt and --target");
      }
      if (n < 2) throw UsageError("--n must be at least 2");
      if (replicates < 1) throw UsageError("--replicates must be at least 1");
      if (out.empty()) throw UsageError("simulate needs --out DIR");
      break;
    case Command::Calibrate:
      if (!target) throw UsageError("calibrate needs --target");
      if (beta_trt) throw UsageError("calibrate takes --target, not --beta-trt");
      break;
    case Command::Analyze:
    case Command::Summarize:
      if (data.empty()) throw UsageError(std::string(to_string(command)) + " needs --data PATH");
      break;
  }
}

std::optional<RunConfig> parse_arguments(int argc, const char* const* argv) {
  CLI::App app{"Monte Carlo comparison of causal effect estimators for binary outcomes",
               "causalsim"};
  app.set_version_flag("--version", "causalsim 1.0");

  std::string command;
  std::string config_path, scenario, estimand, workers, methods, out, data, format;
  std::vector<std::string> categorical;
  Index n = 0;
  std::size_t replicates = 0, bootstrap = 0, oracle_datasets = 0;
  Index oracle_size = 0;
  std::uint64_t seed = 0;
  double beta_trt = 0, target = 0, beta0 = 0, true_effect = 0;
  bool express = false, quiet = false;

  app.add_option("command", command, "calibrate | simulate | analyze | summarize");
  auto* o_config = app.add_option("--config", config_path, "JSON config; flags override it");
  auto* o_scenario = app.add_option("--scenario", scenario, "covid | unmeasured | austin");
  auto* o_n = app.add_option("--n", n, "subjects per simulated study");
  auto* o_reps = app.add_option("--replicates", replicates, "simulated studies");
  auto* o_boot = app.add_option("--bootstrap", bootstrap, "bootstrap replications B");
  auto* o_estimand = app.add_option("--estimand", estimand, "rd | or");
  auto* o_seed = app.add_option("--seed", seed, "master seed (unsigned 64-bit)");
  auto* o_workers = app.add_option("--workers", workers, "thread count or 'auto'");
  auto* o_out = app.add_option("--out", out, "output directory (simulate) or file");
  auto* o_beta = app.add_option("--beta-trt", beta_trt, "treatment coefficient in the outcome model");
  auto* o_target = app.add_option("--target", target, "target marginal RD, or marginal OR");
  auto* o_beta0 = app.add_option("--beta0", beta0, "override the treatment-model intercept");
  auto* o_methods = app.add_option("--methods", methods, "comma-separated method ids");
  auto* o_data = app.add_option("--data", data, "dataset CSV (analyze) or replicates CSV/dir");
  auto* o_cat = app.add_option("--categorical", categorical, "categorical columns to expand")
                    ->delimiter(',');
  auto* o_true = app.add_option("--true-effect", true_effect, "true effect for summarize");
  auto* o_format = app.add_option("--format", format, "csv | json (analyze output)");
  auto* o_express = app.add_flag("--express", express, "500 replicates, B = 250 by default");
  auto* o_quiet = app.add_flag("--quiet", quiet, "no progress counter");
  auto* o_od = app.add_option("--oracle-datasets", oracle_datasets, "oracle datasets M");
  auto* o_os = app.add_option("--oracle-size", oracle_size, "subjects per oracle dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return std::nullopt;
  } catch (const CLI::CallForVersion&) {
    std::cout << "causalsim 1.0\n";
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig c;
  json doc;
  if (o_config->count()) doc = load_json(config_path);
  const bool json_express = doc.is_object() && doc.contains("express") &&
                            typed<bool>(doc["express"], "express");
  if (express || json_express) {
    c.express = true;
    c.replicates = kExpressReplicates;
    c.bootstrap = kExpressBootstrap;
  }
  if (!doc.is_null()) apply_json(doc, c);

  if (!command.empty()) {
    auto cmd = parse_command(command);
    if (!cmd) throw UsageError("unknown command '" + command + "'");
    c.command = *cmd;
  } else if (!(doc.is_object() && doc.contains("command"))) {
    throw UsageError("missing command (calibrate, simulate, analyze or summarize)");
  }
  if (o_scenario->count()) c.scenario = scenario_from(scenario);
  if (o_n->count()) c.n = n;
  if (o_reps->count()) c.replicates = replicates;
  if (o_boot->count()) c.bootstrap = bootstrap;
  if (o_estimand->count()) c.estimand = estimand_from(estimand);
  if (o_seed->count()) c.seed = seed;
  if (o_workers->count()) c.workers = workers_from(workers);
  if (o_out->count()) c.out = out;
  if (o_beta->count()) c.beta_trt = beta_trt;
  if (o_target->count()) c.target = target;
  if (o_beta0->count()) c.beta0 = beta0;
  if (o_methods->count()) c.methods = methods_from(split_list(methods));
  if (o_data->count()) c.data = data;
  if (o_cat->count()) c.categorical = categorical;
  if (o_true->count()) c.true_effect = true_effect;
  if (o_format->count()) c.format = format;
  if (o_quiet->count()) c.quiet = quiet;
  if (o_od->count()) c.oracle.datasets = oracle_datasets;
  if (o_os->count()) c.oracle.size = oracle_size;
  (void)o_express;

  // A flag-level beta/target replaces the other one coming from the file.
  if (o_beta->count() && !o_target->count()) c.target.reset();
  if (o_target->count() && !o_beta->count()) c.beta_trt.reset();

  c.validate();
  return c;
}

}  // namespace causal::cli
