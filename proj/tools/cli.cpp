#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "nbreg/diagnostics.hpp"
#include "nbreg/experiments.hpp"
#include "nbreg/io.hpp"
#include "nbreg/penalty.hpp"
#include "nbreg/report.hpp"
#include "nbreg/solver.hpp"

namespace nbreg::cli {

namespace {

struct CommonOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output;
  std::string format = "json";
};

struct DataOptions {
  std::string path;
  std::string response;
  std::vector<std::string> covariates;
  bool no_header = false;
};

struct RuleOptions {
  std::string rule = "asymptotic";
  std::optional<double> lambda;
  double c = 1.1;
  double alpha = 0.05;
  int mc_reps = 2000;
};

struct SolverOptions {
  int max_iter = 5000;
  double tol = 1e-6;
  bool no_accel = false;

  FitConfig config() const {
    FitConfig config;
    config.max_iter = max_iter;
    config.tol_kkt = tol;
    config.acceleration = !no_accel;
    return config;
  }
};

struct PreparedData {
  std::vector<std::string> names;
  StandardizedData standardized;
};

void add_common(CLI::App* cmd, CommonOptions& common, const std::string& default_format) {
  common.format = default_format;
  common.threads = default_thread_count();
  cmd->add_option("--seed", common.seed, "Master seed")->capture_default_str();
  cmd->add_option("--threads", common.threads, "Worker threads (default $NBREG_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--output,-o", common.output, "Write the report to this file");
  cmd->add_option("--format", common.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void add_data(CLI::App* cmd, DataOptions& data, bool required) {
  auto* path = cmd->add_option("--data", data.path, "Input CSV with a header row");
  auto* response = cmd->add_option("--response", data.response, "Response column name");
  if (required) {
    path->required();
    response->required();
  }
  cmd->add_option("--covariates", data.covariates, "Covariate columns (default: all others)")
      ->delimiter(',');
  cmd->add_flag("--no-header", data.no_header, "Columns are named V1, V2, ...");
}

void add_rule(CLI::App* cmd, RuleOptions& rule) {
  cmd->add_option("--lambda", rule.lambda, "Fixed penalty level (overrides --rule)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--rule", rule.rule, "Penalty rule")
      ->check(CLI::IsMember({"asymptotic", "exact", "cv", "fixed"}))
      ->capture_default_str();
  cmd->add_option("--c", rule.c, "Penalty constant c > 1")->capture_default_str();
  cmd->add_option("--alpha", rule.alpha, "Level alpha in (0, 1)")->capture_default_str();
  cmd->add_option("--mc-reps", rule.mc_reps, "Monte-Carlo replicates for the exact rule")
      ->capture_default_str();
}

void add_solver(CLI::App* cmd, SolverOptions& solver) {
  cmd->add_option("--max-iter", solver.max_iter, "Solver iteration cap")->capture_default_str();
  cmd->add_option("--tol", solver.tol, "KKT tolerance")->capture_default_str();
  cmd->add_flag("--no-accel", solver.no_accel, "Plain proximal gradient without momentum");
}

PreparedData prepare(const DataOptions& options) {
  DataFile file;
  file.path = options.path;
  file.response_column = options.response;
  file.covariate_columns = options.covariates;
  file.has_header = !options.no_header;
  LoadedData loaded = load_csv(file);
  return {std::move(loaded.covariate_names), standardize(loaded.data)};
}

void emit(const CommonOptions& common, std::ostream& out, const std::string& text) {
  if (common.output.empty()) {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream file(common.output);
  if (!file) throw ConfigError("cannot open output file '" + common.output + "'");
  file << text;
  if (!text.empty() && text.back() != '\n') file << '\n';
}

std::string report_text(const CommonOptions&, const Json& report) { return dump_json(report, 2); }

Json common_json(const CommonOptions& common) {
  return {{"seed", common.seed}, {"threads", common.threads}, {"format", common.format}};
}

Eigen::VectorXd read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coefficient file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::vector<double> values;
  const Json doc = Json::parse(text, nullptr, false);
  if (!doc.is_discarded()) {
    if (!doc.is_array()) throw ConfigError("coefficient file must hold a JSON array");
    values = doc.get<std::vector<double>>();
  } else {
    std::istringstream lines(text);
    std::string token;
    while (lines >> token) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::logic_error&) {
        throw ConfigError("unparseable coefficient '" + token + "'");
      }
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

// Penalty level from a data-mode rule. beta* is unknown here, so the
// asymptotic and exact rules use the pilot estimate as a plug-in.
struct RuleLevel {
  double lambda = 0.0;
  std::string rule;
  Json detail = Json::object();
};

RuleLevel data_rule_level(const Dataset& data, double r, const RuleOptions& rule,
                          const CommonOptions& common, const FitConfig& base, int folds,
                          Warnings& warnings) {
  RuleLevel level;
  if (rule.lambda) {
    level.lambda = *rule.lambda;
    level.rule = "fixed";
    return level;
  }
  level.rule = rule.rule;
  const PenaltyKind kind = penalty_kind_from_string(rule.rule);
  if (kind == PenaltyKind::Fixed) throw ConfigError("--rule fixed requires --lambda");
  if (kind == PenaltyKind::CrossValidated) {
    CVSpec cv;
    cv.folds = folds;
    cv.seed = common.seed;
    const CVResult result = cross_validate(data, r, cv, base, common.threads);
    level.lambda = result.lambda_star;
    level.detail = to_json(result);
    return level;
  }
  PilotResult pilot = pilot_beta(data, r, rule.c, rule.alpha, base);
  warnings.insert(warnings.end(), pilot.warnings.begin(), pilot.warnings.end());
  const NBModel plug_in{r, pilot.beta};
  const double v_n = v_weights(plug_in, data).v_max;
  level.detail = {{"pilot_lambda", pilot.lambda}, {"pilot_beta", to_json(pilot.beta)}, {"v_n", v_n}};
  if (kind == PenaltyKind::Asymptotic) {
    level.lambda = lambda_asymptotic(v_n, data.n(), data.p(), rule.c, rule.alpha, &warnings);
  } else {
    level.lambda = lambda_exact(data, plug_in, rule.c, rule.alpha, rule.mc_reps, common.seed,
                                common.threads);
  }
  return level;
}

int run_fit(const CommonOptions& common, const DataOptions& data_opts, double r,
            const RuleOptions& rule, const SolverOptions& solver, bool intercept, int folds,
            std::ostream& out) {
  const PreparedData prepared = prepare(data_opts);
  Warnings warnings;
  const Dataset& data = prepared.standardized.data;
  const RuleLevel level =
      data_rule_level(data, r, rule, common, solver.config(), folds, warnings);

  FitConfig config = solver.config();
  config.lambda = level.lambda;
  std::vector<std::string> names = prepared.names;
  Dataset design = data;
  if (intercept) {
    design = Dataset(with_intercept(data.X()), data.y());
    config.unpenalized = {0};
    names.insert(names.begin(), "Intercept");
  }
  const FitResult result = fit(design, r, config);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());

  const Eigen::VectorXd slopes =
      intercept ? Eigen::VectorXd(result.beta_hat.tail(data.p())) : result.beta_hat;
  auto [original, shift] = prepared.standardized.record.to_original_scale(slopes);
  if (intercept) shift += result.beta_hat[0];

  if (common.format == "csv") {
    std::ostringstream csv;
    csv << "variable,coefficient\n";
    for (std::size_t j = 0; j < names.size(); ++j) {
      csv << names[j] << ',' << format_double(result.beta_hat[static_cast<Index>(j)]) << '\n';
    }
    emit(common, out, csv.str());
  } else {
    Json coefficients = Json::object();
    for (std::size_t j = 0; j < names.size(); ++j) {
      coefficients[names[j]] = result.beta_hat[static_cast<Index>(j)];
    }
    Json results = {{"lambda", level.lambda},
                    {"rule", level.rule},
                    {"rule_detail", level.detail},
                    {"fit", to_json(result)},
                    {"coefficients", coefficients},
                    {"original_scale", {{"slopes", to_json(original)}, {"intercept", shift}}},
                    {"standardization", to_json(prepared.standardized.record)}};
    Json cfg = common_json(common);
    cfg["data"] = data_opts.path;
    cfg["response"] = data_opts.response;
    cfg["r"] = r;
    cfg["intercept"] = intercept;
    cfg["solver"] = to_json(config);
    emit(common, out, report_text(common, make_report("fit", cfg, results, warnings)));
  }
  return kOk;
}

int run_simulate(const CommonOptions& common, const std::string& config_path,
                 const ScenarioSpec& flags, const std::vector<Index>& ns,
                 const std::vector<double>& rs, std::ostream& out) {
  std::vector<ScenarioSpec> grid;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open scenario config '" + config_path + "'");
    Json doc;
    try {
      doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
    }
    grid = scenario_grid_from_json(doc);
  } else {
    for (double r : rs) {
      for (Index n : ns) {
        ScenarioSpec spec = flags;
        spec.n = n;
        spec.r = r;
        spec.validate();
        grid.push_back(spec);
      }
    }
  }

  std::vector<SummaryRow> rows;
  Json cells = Json::array();
  for (const ScenarioSpec& spec : grid) {
    const MetricsSummary summary = run_scenario(spec, common.threads);
    rows.push_back(summary_row(spec, summary));
    cells.push_back({{"scenario", to_json(spec)}, {"summary", to_json(summary)}});
  }
  if (common.format == "csv") {
    std::ostringstream csv;
    write_summary_csv(csv, rows);
    emit(common, out, csv.str());
  } else {
    Json cfg = common_json(common);
    cfg["config"] = config_path;
    emit(common, out, report_text(common, make_report("simulate", cfg, cells, {})));
  }
  return kOk;
}

int run_cv(const CommonOptions& common, const DataOptions& data_opts, double r, CVSpec cv,
           const std::string& score, const SolverOptions& solver, bool intercept,
           std::ostream& out) {
  const PreparedData prepared = prepare(data_opts);
  cv.score = cv_score_from_string(score);
  cv.seed = common.seed;
  FitConfig config = solver.config();
  Dataset design = prepared.standardized.data;
  if (intercept) {
    design = Dataset(with_intercept(design.X()), design.y());
    config.unpenalized = {0};
  }
  const CVResult result = cross_validate(design, r, cv, config, common.threads);
  if (common.format == "csv") {
    std::ostringstream csv;
    csv << "lambda,mean_score\n";
    for (const auto& row : result.table) {
      csv << format_double(row.lambda) << ',' << format_double(row.mean_score) << '\n';
    }
    emit(common, out, csv.str());
  } else {
    Json cfg = common_json(common);
    cfg["data"] = data_opts.path;
    cfg["r"] = r;
    cfg["folds"] = cv.folds;
    cfg["score"] = std::string(to_string(cv.score));
    cfg["intercept"] = intercept;
    emit(common, out, report_text(common, make_report("cv", cfg, to_json(result), {})));
  }
  return kOk;
}

int run_lambda(const CommonOptions& common, const DataOptions& data_opts,
               std::optional<double> r, std::optional<Index> n, std::optional<Index> p,
               std::optional<double> vn, const RuleOptions& rule, const SolverOptions& solver,
               std::ostream& out) {
  Warnings warnings;
  Json results = Json::object();
  Json cfg = common_json(common);
  cfg["c"] = rule.c;
  cfg["alpha"] = rule.alpha;
  if (!data_opts.path.empty()) {
    if (!r) throw ConfigError("--r is required with --data");
    const PreparedData prepared = prepare(data_opts);
    const Dataset& data = prepared.standardized.data;
    PilotResult pilot = pilot_beta(data, *r, rule.c, rule.alpha, solver.config());
    warnings.insert(warnings.end(), pilot.warnings.begin(), pilot.warnings.end());
    const NBModel plug_in{*r, pilot.beta};
    const double v_n = v_weights(plug_in, data).v_max;
    results["v_n"] = v_n;
    results["pilot_lambda"] = pilot.lambda;
    results["asymptotic"] =
        lambda_asymptotic(v_n, data.n(), data.p(), rule.c, rule.alpha, &warnings);
    results["exact"] = lambda_exact(data, plug_in, rule.c, rule.alpha, rule.mc_reps, common.seed,
                                    common.threads);
    cfg["data"] = data_opts.path;
    cfg["r"] = *r;
    cfg["mc_reps"] = rule.mc_reps;
  } else {
    if (!n || !p || !vn) throw ConfigError("lambda needs --n, --p and --vn, or --data and --r");
    results["asymptotic"] = lambda_asymptotic(*vn, *n, *p, rule.c, rule.alpha, &warnings);
    results["v_n"] = *vn;
    cfg["n"] = *n;
    cfg["p"] = *p;
  }
  if (common.format == "csv") {
    std::ostringstream csv;
    csv << "rule,lambda\n";
    for (const char* key : {"asymptotic", "exact"}) {
      if (results.contains(key)) csv << key << ',' << format_double(results[key].get<double>()) << '\n';
    }
    emit(common, out, csv.str());
  } else {
    emit(common, out, report_text(common, make_report("lambda", cfg, results, warnings)));
  }
  return kOk;
}

struct DiagnoseOptions {
  std::string truth_path;
  std::optional<double> gamma;
  int cone_samples = 2000;
  double c1 = 3.0;
  int tail_reps = 10000;
  std::vector<double> tail_grid = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0};
};

int run_diagnose(const CommonOptions& common, const DataOptions& data_opts, double r,
                 const RuleOptions& rule, const SolverOptions& solver,
                 const DiagnoseOptions& options, std::ostream& out) {
  const PreparedData prepared = prepare(data_opts);
  const Dataset& data = prepared.standardized.data;
  Warnings warnings;

  NBModel truth{r, Eigen::VectorXd()};
  std::string truth_source;
  if (!options.truth_path.empty()) {
    truth.beta = read_vector_file(options.truth_path);
    if (truth.beta.size() != data.p()) throw ConfigError("truth length does not match covariates");
    truth_source = "file";
  } else {
    PilotResult pilot = pilot_beta(data, r, rule.c, rule.alpha, solver.config());
    warnings.insert(warnings.end(), pilot.warnings.begin(), pilot.warnings.end());
    truth.beta = pilot.beta;
    truth_source = "pilot";
  }

  double lambda = 0.0;
  if (rule.lambda) {
    lambda = *rule.lambda;
  } else if (rule.rule == "exact") {
    lambda = lambda_exact(data, truth, rule.c, rule.alpha, rule.mc_reps, common.seed,
                          common.threads);
  } else if (rule.rule == "asymptotic") {
    lambda = lambda_asymptotic(v_weights(truth, data).v_max, data.n(), data.p(), rule.c,
                               rule.alpha, &warnings);
  } else {
    throw ConfigError("diagnose supports --rule asymptotic or exact, or --lambda");
  }

  ConditionOptions cond;
  cond.gamma = options.gamma.value_or((rule.c + 1.0) / (rule.c - 1.0));
  cond.n_cone_samples = options.cone_samples;
  cond.seed = common.seed;
  cond.lambda = lambda;
  cond.c = rule.c;
  const ConditionReport report = check_conditions(data, truth, cond);
  if (report.support_empty) warnings.emplace_back("truth has empty support; cone taken over full sphere");
  const TheoremLedger ledger = theorem_ledger(report, lambda, rule.c, options.c1);

  FitConfig config = solver.config();
  config.lambda = lambda;
  const FitResult fitted = fit(data, r, config);
  const BoundCheck bounds = verify_bounds(data, truth, fitted, ledger);
  if (!bounds.hypothesis_met) warnings.emplace_back("hypothesis unmet: lambda smallness condition fails");

  const TailDiagnostic tail = tail_diagnostic(truth, data, options.tail_grid, options.tail_reps,
                                              derive_seed(common.seed, 1), common.threads);

  Json results = {{"truth_source", truth_source},
                  {"truth", to_json(truth.beta)},
                  {"lambda", lambda},
                  {"conditions", to_json(report)},
                  {"ledger", to_json(ledger)},
                  {"fit", to_json(fitted)},
                  {"bounds", to_json(bounds)},
                  {"tail", to_json(tail)}};
  Json cfg = common_json(common);
  cfg["data"] = data_opts.path;
  cfg["r"] = r;
  cfg["c"] = rule.c;
  cfg["c1"] = options.c1;
  cfg["gamma"] = cond.gamma;
  cfg["cone_samples"] = options.cone_samples;
  cfg["tail_reps"] = options.tail_reps;
  emit(common, out, report_text(common, make_report("diagnose", cfg, results, warnings)));
  return kOk;
}

int run_split_fit(const CommonOptions& common, const DataOptions& data_opts, double r,
                  SplitSpec split, CVSpec cv, const std::string& score,
                  const SolverOptions& solver, bool no_intercept, std::ostream& out) {
  DataFile file;
  file.path = data_opts.path;
  file.response_column = data_opts.response;
  file.covariate_columns = data_opts.covariates;
  file.has_header = !data_opts.no_header;
  const LoadedData loaded = load_csv(file);
  split.seed = common.seed;
  cv.seed = derive_seed(common.seed, 1);
  cv.score = cv_score_from_string(score);
  const PipelineReport report =
      train_test_pipeline(loaded.data, r, split, cv, loaded.covariate_names, !no_intercept,
                          solver.config(), common.threads);
  if (common.format == "csv") {
    std::ostringstream csv;
    write_table2_csv(csv, table2_rows(report));
    emit(common, out, csv.str());
  } else {
    Json cfg = common_json(common);
    cfg["data"] = data_opts.path;
    cfg["r"] = r;
    cfg["train"] = split.train_size;
    cfg["test"] = split.test_size;
    cfg["folds"] = cv.folds;
    cfg["score"] = score;
    cfg["intercept"] = !no_intercept;
    emit(common, out,
         report_text(common, make_report("split-fit", cfg, to_json(report), report.warnings)));
  }
  return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"l1-penalized negative binomial regression", "nbreg"};
  app.require_subcommand(1);

  CommonOptions fit_common, sim_common, cv_common, lambda_common, diag_common, split_common;
  DataOptions data;
  RuleOptions rule;
  SolverOptions solver;
  double r = 1.0;
  bool intercept = false;
  int folds = 10;

  auto* fit_cmd = app.add_subcommand("fit", "Fit at a fixed level or a penalty rule");
  add_common(fit_cmd, fit_common, "json");
  add_data(fit_cmd, data, true);
  add_rule(fit_cmd, rule);
  add_solver(fit_cmd, solver);
  fit_cmd->add_option("--r", r, "Dispersion r > 0")->required()->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--intercept", intercept, "Add an unpenalized intercept column");
  fit_cmd->add_option("--folds", folds, "Folds for --rule cv")->capture_default_str();

  ScenarioSpec scenario;
  std::string config_path;
  std::vector<Index> ns = {100, 200, 400, 800};
  std::vector<double> rs = {2.0};
  std::string sim_rule = "asymptotic";
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation grid and summarize it");
  add_common(sim_cmd, sim_common, "csv");
  sim_cmd->add_option("--config", config_path, "JSON scenario grid");
  sim_cmd->add_option("--n", ns, "Sample sizes")->delimiter(',');
  sim_cmd->add_option("--r", rs, "Dispersion values")->delimiter(',');
  sim_cmd->add_option("--p", scenario.p, "Covariates")->capture_default_str();
  sim_cmd->add_option("--rho", scenario.rho, "AR(1) correlation")->capture_default_str();
  sim_cmd->add_option("--s", scenario.s, "Nonzero coefficients")->capture_default_str();
  sim_cmd->add_option("--reps", scenario.reps, "Replications")->capture_default_str();
  sim_cmd->add_option("--rule", sim_rule, "Penalty rule")
      ->check(CLI::IsMember({"asymptotic", "exact", "cv", "fixed"}))
      ->capture_default_str();
  sim_cmd->add_option("--lambda", scenario.penalty.lambda, "Level for --rule fixed");
  sim_cmd->add_option("--c", scenario.penalty.c, "Penalty constant")->capture_default_str();
  sim_cmd->add_option("--alpha", scenario.penalty.alpha, "Level alpha")->capture_default_str();
  sim_cmd->add_option("--mc-reps", scenario.penalty.mc_reps, "Replicates for --rule exact")
      ->capture_default_str();

  CVSpec cv;
  std::string score = "deviance";
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate the penalty level");
  add_common(cv_cmd, cv_common, "json");
  add_data(cv_cmd, data, true);
  add_solver(cv_cmd, solver);
  cv_cmd->add_option("--r", r, "Dispersion r > 0")->required()->check(CLI::PositiveNumber);
  cv_cmd->add_option("--folds", cv.folds, "Folds")->capture_default_str();
  cv_cmd->add_option("--grid", cv.lambda_grid, "Explicit lambda grid")->delimiter(',');
  cv_cmd->add_option("--grid-size", cv.grid_size, "Automatic grid size")->capture_default_str();
  cv_cmd->add_option("--grid-ratio", cv.grid_ratio, "Smallest / largest level")
      ->capture_default_str();
  cv_cmd->add_option("--score", score, "Held-out score")
      ->check(CLI::IsMember({"deviance", "prediction_error"}))
      ->capture_default_str();
  cv_cmd->add_flag("--intercept", intercept, "Add an unpenalized intercept column");

  std::optional<double> lambda_r;
  std::optional<Index> lambda_n, lambda_p;
  std::optional<double> lambda_vn;
  auto* lambda_cmd = app.add_subcommand("lambda", "Penalty levels from both rules");
  add_common(lambda_cmd, lambda_common, "json");
  add_data(lambda_cmd, data, false);
  add_solver(lambda_cmd, solver);
  lambda_cmd->add_option("--n", lambda_n, "Sample size")->check(CLI::PositiveNumber);
  lambda_cmd->add_option("--p", lambda_p, "Covariates")->check(CLI::PositiveNumber);
  lambda_cmd->add_option("--vn", lambda_vn, "Max variance weight v_n")->check(CLI::PositiveNumber);
  lambda_cmd->add_option("--r", lambda_r, "Dispersion (data mode)")->check(CLI::PositiveNumber);
  lambda_cmd->add_option("--c", rule.c, "Penalty constant c > 1")->capture_default_str();
  lambda_cmd->add_option("--alpha", rule.alpha, "Level alpha")->capture_default_str();
  lambda_cmd->add_option("--mc-reps", rule.mc_reps, "Replicates for the exact rule")
      ->capture_default_str();

  DiagnoseOptions diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Condition checks, bound ledger, tail diagnostic");
  add_common(diag_cmd, diag_common, "json");
  add_data(diag_cmd, data, true);
  add_rule(diag_cmd, rule);
  add_solver(diag_cmd, solver);
  diag_cmd->add_option("--r", r, "Dispersion r > 0")->required()->check(CLI::PositiveNumber);
  diag_cmd->add_option("--truth", diag.truth_path, "Coefficient file (JSON array or numbers)");
  diag_cmd->add_option("--gamma", diag.gamma, "Cone parameter (default (c+1)/(c-1))");
  diag_cmd->add_option("--cone-samples", diag.cone_samples, "Cone directions")
      ->capture_default_str();
  diag_cmd->add_option("--c1", diag.c1, "Constant c1 in (2, 3]")->capture_default_str();
  diag_cmd->add_option("--tail-reps", diag.tail_reps, "Tail Monte-Carlo replicates")
      ->capture_default_str();
  diag_cmd->add_option("--tail-grid", diag.tail_grid, "Tail thresholds")->delimiter(',');

  SplitSpec split;
  bool no_intercept = false;
  auto* split_cmd = app.add_subcommand("split-fit", "Train/test pipeline with CV and an MLE baseline");
  add_common(split_cmd, split_common, "json");
  add_data(split_cmd, data, true);
  add_solver(split_cmd, solver);
  split_cmd->add_option("--r", r, "Dispersion r > 0")->required()->check(CLI::PositiveNumber);
  split_cmd->add_option("--train", split.train_size, "Training rows")->capture_default_str();
  split_cmd->add_option("--test", split.test_size, "Test rows")->capture_default_str();
  split_cmd->add_option("--folds", cv.folds, "CV folds")->capture_default_str();
  split_cmd->add_option("--grid-size", cv.grid_size, "Automatic grid size")->capture_default_str();
  split_cmd->add_option("--score", score, "CV score")
      ->check(CLI::IsMember({"deviance", "prediction_error"}))
      ->capture_default_str();
  split_cmd->add_flag("--no-intercept", no_intercept, "Fit without an intercept column");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("nbreg");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    err << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidationError;
  }

  try {
    if (fit_cmd->parsed()) {
      return run_fit(fit_common, data, r, rule, solver, intercept, folds, out);
    }
    if (sim_cmd->parsed()) {
      scenario.penalty.kind = penalty_kind_from_string(sim_rule);
      scenario.seed = sim_common.seed;
      return run_simulate(sim_common, config_path, scenario, ns, rs, out);
    }
    if (cv_cmd->parsed()) return run_cv(cv_common, data, r, cv, score, solver, intercept, out);
    if (lambda_cmd->parsed()) {
      return run_lambda(lambda_common, data, lambda_r, lambda_n, lambda_p, lambda_vn, rule, solver, out);
    }
    if (diag_cmd->parsed()) return run_diagnose(diag_common, data, r, rule, solver, diag, out);
    if (split_cmd->parsed()) {
      return run_split_fit(split_common, data, r, split, cv, score, solver, no_intercept, out);
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericError;
  }
  return kValidationError;
}

}  // namespace nbreg::cli
