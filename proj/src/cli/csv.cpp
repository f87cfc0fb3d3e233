#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "causal/cli/cli.hpp"

namespace causal::cli {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start);
    const auto first = field.find_first_not_of(" \t");
    const auto last = field.find_last_not_of(" \t");
    field = first == std::string::npos ? std::string() : field.substr(first, last - first + 1);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
      field = field.substr(1, field.size() - 2);
    }
    fields.push_back(std::move(field));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return value;
}

std::size_t column_index(const ParsedTable& t, std::string_view name, std::string_view what) {
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == name) return j;
  }
  throw UsageError(std::string(what) + ": missing required column '" + std::string(name) + "'");
}

std::optional<double> cell_number(const std::string& text) {
  if (text == "NA" || text.empty()) return std::nullopt;
  auto v = parse_double(text);
  if (!v) throw UsageError("replicates: bad number '" + text + "'");
  return v;
}

void write_estimate_fields(std::ostream& out, const EffectEstimate& e) {
  out << method_id(e.method) << ',' << causal::to_string(e.estimand) << ','
      << format_number(e.point) << ',' << format_number(e.se) << ','
      << format_number(e.ci ? std::optional<double>(e.ci->lower) : std::nullopt) << ','
      << format_number(e.ci ? std::optional<double>(e.ci->upper) : std::nullopt) << ','
      << (e.failed() ? 1 : 0) << ',' << (e.failed() ? causal::to_string(*e.failure_reason) : "");
}

}  // namespace

std::string format_number(double value) {
  if (!std::isfinite(value)) return "NA";
  if (value == 0.0) return "0";
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  return std::string(buffer, result.ptr);
}

std::string format_number(const std::optional<double>& value) {
  return value ? format_number(*value) : "NA";
}

ParsedTable read_csv(std::istream& in, std::string_view what) {
  ParsedTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_row(line);
    if (table.header.empty()) {
      std::set<std::string> unique(fields.begin(), fields.end());
      if (unique.size() != fields.size()) {
        throw UsageError(std::string(what) + ": duplicate column names in header");
      }
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw UsageError(std::string(what) + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw UsageError(std::string(what) + ": empty file");
  return table;
}

ParsedTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  return read_csv(in, path.string());
}

Dataset dataset_from_table(const ParsedTable& table, const std::vector<std::string>& categorical) {
  const std::string what = "dataset";
  const std::size_t iy = column_index(table, "y", what);
  const std::size_t ia = column_index(table, "a", what);
  const std::set<std::string> cat(categorical.begin(), categorical.end());
  for (const auto& c : cat) {
    if (c == "y" || c == "a") throw UsageError("dataset: y and a cannot be categorical");
    column_index(table, c, what);
  }
  const auto n = static_cast<Index>(table.rows.size());
  if (n == 0) throw UsageError("dataset: no data rows");

  const std::size_t ncol = table.header.size();
  Matrix raw(n, static_cast<Index>(ncol));
  for (Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < ncol; ++j) {
      const auto& cell = table.rows[static_cast<std::size_t>(i)][j];
      auto v = parse_double(cell);
      if (!v || !std::isfinite(*v)) {
        throw UsageError("dataset: row " + std::to_string(i + 1) + ", column '" + table.header[j] +
                         "': not a finite number ('" + cell + "')");
      }
      raw(i, static_cast<Index>(j)) = *v;
    }
  }
  for (const std::size_t j : {iy, ia}) {
    for (Index i = 0; i < n; ++i) {
      const double v = raw(i, static_cast<Index>(j));
      if (v != 0.0 && v != 1.0) {
        throw UsageError("dataset: column '" + table.header[j] + "' must be 0/1 (row " +
                         std::to_string(i + 1) + ")");
      }
    }
  }

  std::vector<Vector> columns;
  std::vector<CovariateKind> kinds;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < ncol; ++j) {
    if (j == iy || j == ia) continue;
    const Vector col = raw.col(static_cast<Index>(j));
    const std::string& name = table.header[j];
    if (cat.count(name)) {
      std::set<int> levels;
      for (Index i = 0; i < n; ++i) {
        const double v = col[i];
        if (v != std::floor(v) || v < 0.0 || v > 9.0) {
          throw UsageError("dataset: categorical column '" + name +
                           "' must hold integer levels 0..9");
        }
        levels.insert(static_cast<int>(v));
      }
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        columns.push_back((col.array() == static_cast<double>(*it)).cast<double>().matrix());
        kinds.push_back(CovariateKind::CategoricalDummy);
        names.push_back(name + "_" + std::to_string(*it));
      }
      continue;
    }
    const bool binary = ((col.array() == 0.0) || (col.array() == 1.0)).all();
    columns.push_back(col);
    kinds.push_back(binary ? CovariateKind::Binary : CovariateKind::Continuous);
    names.push_back(name);
  }

  Matrix covariates(n, static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) covariates.col(static_cast<Index>(c)) = columns[c];
  try {
    return Dataset(std::move(covariates), raw.col(static_cast<Index>(ia)),
                   raw.col(static_cast<Index>(iy)), std::move(kinds), std::move(names));
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("dataset: ") + e.what());
  }
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateResult>& results) {
  out << "replicate,method,estimand,point,se,ci_lo,ci_hi,failed,failure_reason\n";
  for (const auto& r : results) {
    for (const auto& e : r.estimates) {
      out << r.replicate_index << ',';
      write_estimate_fields(out, e);
      out << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const MetricsSummary& summary) {
  out << "method,mean_bias,rmse,mae,coverage,median_ci_length,n_failures\n";
  for (const auto& m : summary.methods) {
    out << method_id(m.method) << ',' << format_number(m.mean_bias) << ','
        << format_number(m.rmse) << ',' << format_number(m.mae) << ','
        << format_number(m.coverage) << ',' << format_number(m.median_ci_length) << ','
        << m.n_failures << '\n';
  }
}

void write_estimates_csv(std::ostream& out, const std::vector<EffectEstimate>& estimates,
                         std::size_t bootstrap_replications, std::uint64_t seed) {
  out << "method,estimand,point,se,ci_lo,ci_hi,failed,failure_reason,bootstrap_replications,seed\n";
  for (const auto& e : estimates) {
    write_estimate_fields(out, e);
    out << ',' << bootstrap_replications << ',' << seed << '\n';
  }
}

std::vector<ReplicateResult> read_replicates_csv(const ParsedTable& table, double true_effect) {
  const std::string what = "replicates";
  const auto ir = column_index(table, "replicate", what);
  const auto im = column_index(table, "method", what);
  const auto ie = column_index(table, "estimand", what);
  const auto ip = column_index(table, "point", what);
  const auto is = column_index(table, "se", what);
  const auto il = column_index(table, "ci_lo", what);
  const auto ih = column_index(table, "ci_hi", what);
  const auto iff = column_index(table, "failed", what);
  const auto ifr = column_index(table, "failure_reason", what);

  std::map<std::size_t, ReplicateResult> by_index;
  for (const auto& row : table.rows) {
    const auto index = parse_double(row[ir]);
    if (!index || *index < 0 || *index != std::floor(*index)) {
      throw UsageError("replicates: bad replicate index '" + row[ir] + "'");
    }
    EffectEstimate e;
    const auto method = parse_method(row[im]);
    const auto estimand = parse_estimand(row[ie]);
    if (!method || !estimand) throw UsageError("replicates: unknown method or estimand");
    e.method = *method;
    e.estimand = *estimand;
    if (row[iff] == "1") {
      const auto reason = parse_failure_reason(row[ifr]);
      if (!reason) throw UsageError("replicates: unknown failure reason '" + row[ifr] + "'");
      e.failure_reason = reason;
    } else if (row[iff] != "0") {
      throw UsageError("replicates: failed must be 0 or 1");
    } else {
      e.point = cell_number(row[ip]);
      e.se = cell_number(row[is]);
      const auto lo = cell_number(row[il]);
      const auto hi = cell_number(row[ih]);
      if (lo && hi) e.ci = Interval{*lo, *hi};
    }
    auto& rep = by_index[static_cast<std::size_t>(*index)];
    rep.replicate_index = static_cast<std::size_t>(*index);
    rep.true_effect = true_effect;
    rep.estimates.push_back(e);
  }
  std::vector<ReplicateResult> out;
  out.reserve(by_index.size());
  for (auto& [index, rep] : by_index) out.push_back(std::move(rep));
  return out;
}

}  // namespace causal::cli
