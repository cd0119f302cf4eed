#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "nbreg/experiments.hpp"
#include "nbreg/model.hpp"

namespace nbreg {

struct DataFile {
  std::string path;
  std::string response_column;
  std::vector<std::string> covariate_columns;  ///< empty: every other column
  bool has_header = true;
  char delimiter = ',';
};

struct LoadedData {
  Dataset data;
  std::string response_name;
  std::vector<std::string> covariate_names;
};

/// Reads a delimited file into an unstandardized Dataset. Errors carry the
/// 1-based line and column of the offending field.
LoadedData load_csv(const DataFile& file);
LoadedData parse_csv(std::istream& in, const DataFile& file);

struct StandardizationRecord {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;       ///< root mean square after centering; 1 for constant columns
  std::vector<bool> constant;  ///< zero-variance columns, left centered only

  bool any_constant() const;
  /// Maps standardized-scale coefficients to the original covariate scale.
  /// Returns (slopes, intercept shift): eta = shift + x_raw' slopes.
  std::pair<Eigen::VectorXd, double> to_original_scale(const Eigen::VectorXd& beta) const;
};

struct StandardizedData {
  Dataset data;
  StandardizationRecord record;
};

/// Centers every column and scales it to mean square 1. The result carries the
/// standardized flag unless some column was constant.
StandardizedData standardize(const Dataset& data);

/// Applies a recorded transform (e.g. fitted on training rows) to new rows.
Eigen::MatrixXd apply_standardization(const StandardizationRecord& record,
                                      const Eigen::MatrixXd& X);

/// Prepends a column of ones.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X);

/// Row of the simulation summary table.
struct SummaryRow {
  Index n = 0;
  Index p = 0;
  double r = 0.0;
  double rho = 0.0;
  double est_error_mean = 0.0;
  double est_error_sd = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  int reps = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kSummaryHeader =
    "n,p,r,rho,est_error_mean,est_error_sd,sensitivity,specificity,reps,seed";

SummaryRow summary_row(const ScenarioSpec& spec, const MetricsSummary& summary);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

/// Coefficient table as CSV: variable,P-NBR,NBR with blanks for exact zeros.
void write_table2_csv(std::ostream& out, const std::vector<Table2Row>& rows);

/// Formats a double with 17 significant digits.
std::string format_double(double value);

}  // namespace nbreg
