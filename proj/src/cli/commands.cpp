#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "causal/cli/cli.hpp"

namespace causal::cli {

namespace {

using nlohmann::ordered_json;

Stream oracle_stream(const RunConfig& c) {
  return derive_substream(c.seed, static_cast<std::uint64_t>(c.scenario), 0, StreamPurpose::Oracle);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

void emit(const RunConfig& c, std::ostream& stdout_stream, const std::string& text) {
  if (c.out.empty()) {
    stdout_stream << text;
    return;
  }
  auto file = open_output(c.out);
  file << text;
  if (!file) throw UsageError("write failed: " + c.out.string());
}

ordered_json method_list(const std::vector<Method>& methods) {
  ordered_json list = ordered_json::array();
  for (const Method m : methods) list.push_back(std::string(method_id(m)));
  return list;
}

ordered_json nullable(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void print_table(std::ostream& out, const MetricsSummary& summary) {
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %11s %10s %10s %9s %11s %9s\n", "method", "mean_bias",
                "rmse", "mae", "coverage", "ci_length", "failures");
  out << line;
  for (const auto& m : summary.methods) {
    std::snprintf(line, sizeof line, "%-20s %11.5f %10.5f %10.5f %9.4f %11.5f %9zu\n",
                  std::string(method_id(m.method)).c_str(), m.mean_bias, m.rmse, m.mae,
                  m.coverage, m.median_ci_length, m.n_failures);
    out << line;
  }
}

double metadata_true_effect(const std::filesystem::path& dir) {
  const auto path = dir / "metadata.json";
  std::ifstream in(path);
  if (!in) {
    throw UsageError("summarize needs --true-effect (no metadata.json next to the replicates)");
  }
  try {
    const auto doc = nlohmann::json::parse(in);
    return doc.at("true_effect").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

}  // namespace

int cmd_calibrate(const RunConfig& c, std::ostream& out) {
  const ScenarioSpec spec = ScenarioSpec::make(c.scenario, c.n, 0.0, c.beta0);
  CalibrationOptions options;
  options.oracle = c.oracle;
  const CalibrationResult result =
      calibrate_beta_trt(spec, c.estimand, *c.target, oracle_stream(c), options);

  ordered_json doc;
  doc["scenario"] = std::string(to_string(c.scenario));
  doc["estimand"] = std::string(causal::to_string(c.estimand));
  doc["target"] = *c.target;
  doc["beta_trt"] = result.beta_trt;
  doc["achieved_effect"] = result.achieved;
  doc["oracle_M"] = c.oracle.datasets;
  doc["oracle_size"] = c.oracle.size;
  doc["seed"] = c.seed;
  emit(c, out, doc.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();

  const Stream oracle_rng = oracle_stream(c);
  double beta_trt = c.beta_trt.value_or(0.0);
  std::optional<CalibrationResult> calibration;
  if (c.target) {
    CalibrationOptions options;
    options.oracle = c.oracle;
    const ScenarioSpec probe = ScenarioSpec::make(c.scenario, c.n, 0.0, c.beta0);
    calibration = calibrate_beta_trt(probe, c.estimand, *c.target, oracle_rng, options);
    beta_trt = calibration->beta_trt;
  }
  const ScenarioSpec spec = ScenarioSpec::make(c.scenario, c.n, beta_trt, c.beta0);
  const double truth =
      c.true_effect ? *c.true_effect : true_marginal_effect(spec, c.estimand, c.oracle, oracle_rng);

  const std::vector<Method> methods = c.resolved_methods();
  ProgressCallback progress;
  if (!c.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0) {
        std::cerr << "\rreplicate " << done << "/" << total << (done == total ? "\n" : "")
                  << std::flush;
      }
    };
  }
  const auto results = run_replicates(spec, methods, c.estimand, c.bootstrap_config(), c.seed,
                                      c.replicates, c.workers, truth, progress);
  const MetricsSummary summary = summarize(results, truth);

  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw UsageError("cannot create " + c.out.string() + ": " + ec.message());
  {
    auto f = open_output(c.out / "replicates.csv");
    write_replicates_csv(f, results);
  }
  {
    auto f = open_output(c.out / "summary.csv");
    write_summary_csv(f, summary);
  }

  ordered_json meta;
  meta["scenario"] = std::string(to_string(c.scenario));
  meta["estimand"] = std::string(causal::to_string(c.estimand));
  meta["n"] = c.n;
  meta["replicates"] = c.replicates;
  meta["bootstrap"] = c.bootstrap;
  meta["methods"] = method_list(methods);
  meta["seed"] = c.seed;
  meta["workers"] = c.workers;
  meta["express"] = c.express;
  meta["beta_trt"] = beta_trt;
  meta["beta0"] = nullable(c.beta0);
  meta["target"] = nullable(c.target);
  meta["calibrated_effect"] = calibration ? ordered_json(calibration->achieved) : ordered_json();
  meta["true_effect"] = truth;
  meta["oracle_M"] = c.oracle.datasets;
  meta["oracle_size"] = c.oracle.size;
  meta["matching"] = "greedy 1:1 on logit PS, treated by descending PS, caliper 0.2 SD";
  meta["bootstrap_refit"] = "propensity model, weights, quintiles and outcome model";
  meta["started_at"] = started_at;
  meta["finished_at"] = utc_now();
  meta["elapsed_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  {
    auto f = open_output(c.out / "metadata.json");
    f << meta.dump(2) << "\n";
  }

  out << "scenario " << to_string(c.scenario) << ", N=" << c.n << ", " << c.replicates
      << " replicates, beta_trt=" << format_number(beta_trt)
      << ", true effect=" << format_number(truth) << "\n";
  print_table(out, summary);
  return 0;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  const Dataset data = dataset_from_table(read_csv_file(c.data), c.categorical);
  const std::vector<Method> methods = c.resolved_methods();
  if (data.covariate_count() == 0) {
    for (const Method m : methods) {
      if (needs_propensity(m)) {
        throw UsageError("method '" + std::string(method_id(m)) +
                         "' needs a propensity model, but the dataset has no covariates");
      }
    }
  }
  BootstrapConfig bootstrap = c.bootstrap_config();
  bootstrap.workers = c.workers;
  const Stream rng = derive_substream(c.seed, 0, 0, StreamPurpose::Bootstrap);
  const auto estimates = estimate_methods(data, c.estimand, methods, bootstrap, rng);

  std::ostringstream text;
  if (c.format == "json") {
    ordered_json doc;
    doc["n"] = data.size();
    doc["covariates"] = data.names();
    doc["bootstrap"] = {{"replications", bootstrap.replications},
                        {"lower_percentile", bootstrap.lower_percentile},
                        {"upper_percentile", bootstrap.upper_percentile},
                        {"seed", c.seed}};
    ordered_json rows = ordered_json::array();
    for (const auto& e : estimates) {
      ordered_json row;
      row["method"] = std::string(method_id(e.method));
      row["estimand"] = std::string(causal::to_string(e.estimand));
      row["point"] = nullable(e.point);
      row["se"] = nullable(e.se);
      row["ci_lo"] = e.ci ? ordered_json(e.ci->lower) : ordered_json();
      row["ci_hi"] = e.ci ? ordered_json(e.ci->upper) : ordered_json();
      row["failed"] = e.failed();
      row["failure_reason"] =
          e.failed() ? ordered_json(std::string(to_string(*e.failure_reason))) : ordered_json();
      rows.push_back(row);
    }
    doc["estimates"] = rows;
    text << doc.dump(2) << "\n";
  } else {
    write_estimates_csv(text, estimates, bootstrap.replications, c.seed);
  }
  emit(c, out, text.str());
  return 0;
}

int cmd_summarize(const RunConfig& c, std::ostream& out) {
  std::filesystem::path file = c.data;
  if (std::filesystem::is_directory(file)) file /= "replicates.csv";
  const double truth = c.true_effect ? *c.true_effect : metadata_true_effect(file.parent_path());
  const auto results = read_replicates_csv(read_csv_file(file), truth);
  std::ostringstream text;
  write_summary_csv(text, summarize(results, truth));
  emit(c, out, text.str());
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_arguments(argc, argv);
    if (!config) return 0;
    switch (config->command) {
      case Command::Calibrate:
        return cmd_calibrate(*config, out);
      case Command::Simulate:
        return cmd_simulate(*config, out);
      case Command::Analyze:
        return cmd_analyze(*config, out);
      case Command::Summarize:
        return cmd_summarize(*config, out);
    }
  } catch (const UsageError& e) {
    err << "causalsim: " << e.what() << "\n";
    return 2;
  } catch (const NotBracketed& e) {
    err << "causalsim: calibration failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "causalsim: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace causal::cli
