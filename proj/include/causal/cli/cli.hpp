#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/estimators.hpp"
#include "causal/simulation.hpp"

namespace causal::cli {

// Bad configuration, bad input files or I/O trouble; mapped to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { Calibrate, Simulate, Analyze, Summarize };

std::string_view to_string(Command c);
std::optional<Command> parse_command(std::string_view text);

// Resolution order, later wins: built-in defaults, express profile,
// --config JSON document, command-line flags.
struct RunConfig {
  Command command = Command::Simulate;
  ScenarioId scenario = ScenarioId::Covid;
  Index n = 1000;
  std::size_t replicates = 2000;
  std::size_t bootstrap = 1000;
  Estimand estimand = Estimand::RiskDifference;
  std::vector<Method> methods;  // empty: the whole registry for the estimand
  std::uint64_t seed = 20240601;
  unsigned workers = 1;  // "auto" resolves to the hardware thread count
  std::optional<double> beta_trt;
  std::optional<double> target;
  std::optional<double> beta0;
  std::optional<double> true_effect;
  std::filesystem::path out;
  std::filesystem::path data;
  std::vector<std::string> categorical;
  std::string format = "csv";
  bool express = false;
  bool quiet = false;
  OracleSize oracle;

  std::vector<Method> resolved_methods() const;
  BootstrapConfig bootstrap_config() const;
  void validate() const;
};

inline constexpr std::size_t kExpressReplicates = 500;
inline constexpr std::size_t kExpressBootstrap = 250;

// Parses argv (argv[0] included). Returns nullopt when help was printed.
std::optional<RunConfig> parse_arguments(int argc, const char* const* argv);

// Shortest round-trip is not used on purpose: a fixed 17 significant
// digits keeps files byte-comparable across platforms. NaN prints as NA.
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

struct ParsedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

ParsedTable read_csv(std::istream& in, std::string_view what);
ParsedTable read_csv_file(const std::filesystem::path& path);

// Columns y and a are required; every other column is a covariate.
// Categorical columns must hold at most 10 integer levels in 0..9 and are
// expanded into dummies name_level, the lowest level being the reference.
Dataset dataset_from_table(const ParsedTable& table, const std::vector<std::string>& categorical);

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateResult>& results);
void write_summary_csv(std::ostream& out, const MetricsSummary& summary);
// Analyze output; the bootstrap settings are repeated on every row.
void write_estimates_csv(std::ostream& out, const std::vector<EffectEstimate>& estimates,
                         std::size_t bootstrap_replications, std::uint64_t seed);

// Inverse of write_replicates_csv; rows grouped back into replicates.
std::vector<ReplicateResult> read_replicates_csv(const ParsedTable& table, double true_effect);

int cmd_calibrate(const RunConfig& config, std::ostream& out);
int cmd_simulate(const RunConfig& config, std::ostream& out);
int cmd_analyze(const RunConfig& config, std::ostream& out);
int cmd_summarize(const RunConfig& config, std::ostream& out);

// Entry point used by the causalsim executable.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace causal::cli
