#include "nbreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nbreg {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field.push_back('"');
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("missing column '" + name + "'", 1);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

LoadedData load_csv(const DataFile& file) {
  std::ifstream in(file.path);
  if (!in) throw ParseError("cannot open data file '" + file.path + "'", 0);
  return parse_csv(in, file);
}

LoadedData parse_csv(std::istream& in, const DataFile& file) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_lines;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto fields = split_fields(line, file.delimiter);
    if (file.has_header && header.empty()) {
      for (auto& f : fields) header.push_back(trim(f));
      continue;
    }
    records.push_back(std::move(fields));
    record_lines.push_back(line_no);
  }
  if (records.empty()) throw ParseError("data file has no rows", line_no);

  const std::size_t width = file.has_header ? header.size() : records.front().size();
  if (!file.has_header) {
    for (std::size_t k = 0; k < width; ++k) header.push_back("V" + std::to_string(k + 1));
  }
  if (file.response_column.empty()) throw ConfigError("response column not specified");
  const std::size_t response = column_index(header, file.response_column);
  std::vector<std::size_t> covariates;
  if (file.covariate_columns.empty()) {
    for (std::size_t k = 0; k < width; ++k) {
      if (k != response) covariates.push_back(k);
    }
  } else {
    for (const auto& name : file.covariate_columns) covariates.push_back(column_index(header, name));
  }
  if (covariates.empty()) throw ParseError("no covariate columns", 1);

  const auto n = static_cast<Index>(records.size());
  Eigen::MatrixXd X(n, static_cast<Index>(covariates.size()));
  Eigen::VectorXd y(n);
  for (std::size_t row = 0; row < records.size(); ++row) {
    const auto& fields = records[row];
    const std::size_t at = record_lines[row];
    if (fields.size() != width) {
      throw ParseError("line " + std::to_string(at) + ": expected " + std::to_string(width) +
                           " fields, found " + std::to_string(fields.size()),
                       at);
    }
    double value = 0.0;
    if (!parse_number(fields[response], value)) {
      throw ParseError("line " + std::to_string(at) + ", column " + std::to_string(response + 1) +
                           ": unparseable response '" + fields[response] + "'",
                       at, response + 1);
    }
    if (value < 0.0) {
      throw ParseError("line " + std::to_string(at) + ", column " + std::to_string(response + 1) +
                           ": negative response",
                       at, response + 1);
    }
    if (value != std::floor(value)) {
      throw ParseError("line " + std::to_string(at) + ", column " + std::to_string(response + 1) +
                           ": non-integer response",
                       at, response + 1);
    }
    y[static_cast<Index>(row)] = value;
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      const std::size_t col = covariates[k];
      if (!parse_number(fields[col], value)) {
        throw ParseError("line " + std::to_string(at) + ", column " + std::to_string(col + 1) +
                             ": unparseable covariate '" + fields[col] + "'",
                         at, col + 1);
      }
      X(static_cast<Index>(row), static_cast<Index>(k)) = value;
    }
  }

  LoadedData loaded{Dataset(std::move(X), std::move(y)), header[response], {}};
  for (std::size_t col : covariates) loaded.covariate_names.push_back(header[col]);
  return loaded;
}

bool StandardizationRecord::any_constant() const {
  return std::find(constant.begin(), constant.end(), true) != constant.end();
}

std::pair<Eigen::VectorXd, double> StandardizationRecord::to_original_scale(
    const Eigen::VectorXd& beta) const {
  if (beta.size() != center.size()) throw DomainError("coefficient length mismatch");
  Eigen::VectorXd slopes = beta.cwiseQuotient(scale);
  return {slopes, -slopes.dot(center)};
}

StandardizedData standardize(const Dataset& data) {
  if (data.n() < 2) throw DomainError("standardize needs n >= 2");
  const double n = static_cast<double>(data.n());
  const Index p = data.p();
  StandardizationRecord record;
  record.center.resize(p);
  record.scale.resize(p);
  record.constant.assign(static_cast<std::size_t>(p), false);
  Eigen::MatrixXd X = data.X();
  for (Index j = 0; j < p; ++j) {
    const double center = X.col(j).sum() / n;
    X.col(j).array() -= center;
    // Second centering pass removes the rounding left by the first.
    const double residual = X.col(j).sum() / n;
    X.col(j).array() -= residual;
    const double rms = std::sqrt(X.col(j).squaredNorm() / n);
    const double magnitude = std::max(1.0, std::abs(center));
    record.center[j] = center + residual;
    if (rms <= 1e-12 * magnitude) {
      X.col(j).setZero();
      record.scale[j] = 1.0;
      record.constant[static_cast<std::size_t>(j)] = true;
    } else {
      X.col(j) /= rms;
      record.scale[j] = rms;
    }
  }
  const bool clean = !record.any_constant();
  return {Dataset(std::move(X), data.y(), clean), std::move(record)};
}

Eigen::MatrixXd apply_standardization(const StandardizationRecord& record, const Eigen::MatrixXd& X) {
  if (X.cols() != record.center.size()) throw DomainError("column count mismatch");
  Eigen::MatrixXd out = X.rowwise() - record.center.transpose();
  for (Index j = 0; j < out.cols(); ++j) {
    if (record.constant[static_cast<std::size_t>(j)]) {
      out.col(j).setZero();
    } else {
      out.col(j) /= record.scale[j];
    }
  }
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out(X.rows(), X.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(X.cols()) = X;
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

SummaryRow summary_row(const ScenarioSpec& spec, const MetricsSummary& summary) {
  return {spec.n,
          spec.p,
          spec.r,
          spec.rho,
          summary.est_error_mean,
          summary.est_error_sd,
          summary.sensitivity,
          summary.specificity,
          summary.reps,
          spec.seed};
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& row : rows) {
    out << row.n << ',' << row.p << ',' << format_double(row.r) << ',' << format_double(row.rho)
        << ',' << format_double(row.est_error_mean) << ',' << format_double(row.est_error_sd)
        << ',' << format_double(row.sensitivity) << ',' << format_double(row.specificity) << ','
        << row.reps << ',' << row.seed << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kSummaryHeader) throw ParseError("unexpected summary header", 1);
      continue;
    }
    if (trim(line).empty()) continue;
    const auto f = split_fields(line, ',');
    if (f.size() != 10) throw ParseError("summary row needs 10 fields", line_no);
    try {
      SummaryRow row;
      row.n = std::stol(f[0]);
      row.p = std::stol(f[1]);
      row.r = std::stod(f[2]);
      row.rho = std::stod(f[3]);
      row.est_error_mean = std::stod(f[4]);
      row.est_error_sd = std::stod(f[5]);
      row.sensitivity = std::stod(f[6]);
      row.specificity = std::stod(f[7]);
      row.reps = std::stoi(f[8]);
      row.seed = std::stoull(f[9]);
      rows.push_back(row);
    } catch (const std::logic_error&) {
      throw ParseError("unparseable summary row", line_no);
    }
  }
  return rows;
}

void write_table2_csv(std::ostream& out, const std::vector<Table2Row>& rows) {
  out << "variable,P-NBR,NBR\n";
  for (const auto& row : rows) {
    out << row.label << ',' << (row.penalized ? format_double(*row.penalized) : "") << ','
        << (row.mle ? format_double(*row.mle) : "") << '\n';
  }
}

}  // namespace nbreg
