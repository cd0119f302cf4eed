#include "nbreg/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace nbreg {
namespace {

std::string data_path(const std::string& name) {
  return std::string(NBREG_TEST_DATA_DIR) + "/" + name;
}

DataFile fixture(const std::string& name, const std::string& response) {
  DataFile file;
  file.path = data_path(name);
  file.response_column = response;
  return file;
}

template <typename F>
std::string parse_error_message(F&& f, std::size_t* line = nullptr) {
  try {
    f();
  } catch (const ParseError& e) {
    if (line) *line = e.line();
    return e.what();
  }
  return "";
}

TEST(LoadCsvTest, SmallFixture) {
  const LoadedData loaded = load_csv(fixture("small.csv", "count"));
  EXPECT_EQ(loaded.data.n(), 3);
  EXPECT_EQ(loaded.data.p(), 2);
  EXPECT_EQ(loaded.response_name, "count");
  EXPECT_EQ(loaded.covariate_names, (std::vector<std::string>{"age", "income"}));
  EXPECT_EQ(loaded.data.y()[2], 7.0);
  EXPECT_EQ(loaded.data.X()(1, 1), 31.5);
  EXPECT_FALSE(loaded.data.standardized());

  DataFile subset = fixture("small.csv", "count");
  subset.covariate_columns = {"income"};
  const LoadedData one = load_csv(subset);
  EXPECT_EQ(one.data.p(), 1);
  EXPECT_EQ(one.data.X()(0, 0), 20.0);
}

TEST(LoadCsvTest, NegativeResponseNamesLine) {
  std::size_t line = 0;
  const std::string message =
      parse_error_message([] { load_csv(fixture("negative_response.csv", "y")); }, &line);
  EXPECT_EQ(line, 7u);
  EXPECT_NE(message.find("line 7"), std::string::npos) << message;
  EXPECT_NE(message.find("negative"), std::string::npos) << message;
}

TEST(LoadCsvTest, FractionalResponse) {
  const std::string message =
      parse_error_message([] { load_csv(fixture("fractional_response.csv", "y")); });
  EXPECT_NE(message.find("non-integer response"), std::string::npos) << message;
}

TEST(LoadCsvTest, RaggedRowsAndMissingColumns) {
  std::size_t line = 0;
  const std::string ragged = parse_error_message([] { load_csv(fixture("ragged.csv", "y")); }, &line);
  EXPECT_EQ(line, 3u);
  EXPECT_NE(ragged.find("expected 3"), std::string::npos) << ragged;
  const std::string missing =
      parse_error_message([] { load_csv(fixture("small.csv", "visits")); });
  EXPECT_NE(missing.find("missing column"), std::string::npos) << missing;
  EXPECT_THROW(load_csv(fixture("no_such_file.csv", "y")), ParseError);
}

TEST(ParseCsvTest, QuotesBomAndCrlf) {
  std::istringstream in("\xEF\xBB\xBF\"y\",\"x, with comma\"\r\n2,\"1.5\"\r\n0,-3e-1\r\n");
  DataFile file;
  file.response_column = "y";
  const LoadedData loaded = parse_csv(in, file);
  EXPECT_EQ(loaded.covariate_names.front(), "x, with comma");
  EXPECT_EQ(loaded.data.n(), 2);
  EXPECT_DOUBLE_EQ(loaded.data.X()(1, 0), -0.3);
}

TEST(ParseCsvTest, UnparseableCovariate) {
  std::istringstream in("y,x\n1,abc\n");
  DataFile file;
  file.response_column = "y";
  std::size_t line = 0;
  const std::string message = parse_error_message([&] { parse_csv(in, file); }, &line);
  EXPECT_EQ(line, 2u);
  EXPECT_NE(message.find("column 2"), std::string::npos) << message;
}

TEST(StandardizeTest, SmallColumnExample) {
  Eigen::MatrixXd X(3, 1);
  X << 1.0, 2.0, 3.0;
  const StandardizedData out = standardize(Dataset(X, Eigen::VectorXd::Zero(3)));
  EXPECT_NEAR(out.data.X()(0, 0), -std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(out.data.X()(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(out.data.X()(2, 0), std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(out.record.center[0], 2.0, 1e-15);
  EXPECT_NEAR(out.record.scale[0], std::sqrt(2.0 / 3.0), 1e-15);
  EXPECT_TRUE(out.data.standardized());
}

TEST(StandardizeTest, IdempotentAndConstantColumns) {
  Eigen::MatrixXd X(6, 3);
  X << 1, 5, 2,
       2, 5, 9,
       4, 5, 1,
       8, 5, 0,
       3, 5, 7,
       1, 5, 3;
  const StandardizedData once = standardize(Dataset(X, Eigen::VectorXd::Zero(6)));
  EXPECT_TRUE(once.record.constant[1]);
  EXPECT_TRUE(once.record.any_constant());
  EXPECT_EQ(once.record.scale[1], 1.0);
  EXPECT_EQ(once.data.X().col(1).lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_FALSE(once.data.standardized());

  Eigen::MatrixXd Y = X;
  Y.col(1) = Eigen::VectorXd::LinSpaced(6, -1.0, 4.0);
  const StandardizedData first = standardize(Dataset(Y, Eigen::VectorXd::Zero(6)));
  const StandardizedData second = standardize(first.data);
  EXPECT_LE((first.data.X() - second.data.X()).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_TRUE(second.data.standardized());
  EXPECT_THROW(standardize(Dataset(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1))),
               DomainError);
}

TEST(StandardizeTest, ApplyAndOriginalScale) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 10,
       2, 30,
       3, 20,
       6, 40;
  const StandardizedData out = standardize(Dataset(X, Eigen::VectorXd::Zero(4)));
  EXPECT_LE((apply_standardization(out.record, X) - out.data.X()).lpNorm<Eigen::Infinity>(),
            1e-14);
  Eigen::VectorXd beta(2);
  beta << 0.7, -0.2;
  const auto [slopes, shift] = out.record.to_original_scale(beta);
  const Eigen::VectorXd eta_std = out.data.X() * beta;
  const Eigen::VectorXd eta_raw = (X * slopes).array() + shift;
  EXPECT_LE((eta_std - eta_raw).lpNorm<Eigen::Infinity>(), 1e-13);

  const Eigen::MatrixXd Xi = with_intercept(X);
  EXPECT_EQ(Xi.cols(), 3);
  EXPECT_EQ(Xi.col(0), Eigen::VectorXd::Ones(4));
  EXPECT_EQ(Xi.col(2), X.col(1));
}

TEST(SummaryCsvTest, RoundTrip) {
  std::vector<SummaryRow> rows = {
      {100, 30, 2.0, 0.5, 0.48412345678901234, 0.188, 0.9876543210123, 0.6, 25, 7},
      {800, 30, 0.25, 0.5, 1.0 / 3.0, 2.0 / 7.0, 1.0, 0.1 + 0.2, 100, 18446744073709551615ull}};
  std::stringstream buffer;
  write_summary_csv(buffer, rows);
  EXPECT_EQ(buffer.str().substr(0, buffer.str().find('\n')), kSummaryHeader);
  const std::vector<SummaryRow> back = read_summary_csv(buffer);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(back[k].n, rows[k].n);
    EXPECT_EQ(back[k].p, rows[k].p);
    EXPECT_NEAR(back[k].r, rows[k].r, 1e-12);
    EXPECT_NEAR(back[k].est_error_mean, rows[k].est_error_mean, 1e-12);
    EXPECT_NEAR(back[k].est_error_sd, rows[k].est_error_sd, 1e-12);
    EXPECT_NEAR(back[k].sensitivity, rows[k].sensitivity, 1e-12);
    EXPECT_NEAR(back[k].specificity, rows[k].specificity, 1e-12);
    EXPECT_EQ(back[k].reps, rows[k].reps);
    EXPECT_EQ(back[k].seed, rows[k].seed);
  }
  std::istringstream bad("n,p\n1,2\n");
  EXPECT_THROW(read_summary_csv(bad), ParseError);
}

TEST(Table2CsvTest, BlankForZeros) {
  std::ostringstream out;
  write_table2_csv(out, {{"PE", 2.5, 3.0}, {"Intercept", 0.1, 0.2}, {"age", std::nullopt, -0.05}});
  EXPECT_EQ(out.str(), "variable,P-NBR,NBR\nPE,2.5,3\nIntercept,0.10000000000000001,"
                       "0.20000000000000001\nage,,-0.050000000000000003\n");
}

TEST(FormatDoubleTest, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace nbreg
