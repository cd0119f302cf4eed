#include "nbreg/report.hpp"

#include <cmath>
#include <sstream>

namespace nbreg {

namespace {

void dump_into(std::ostringstream& out, const Json& value, int indent, int depth) {
  const auto newline = [&](int level) {
    if (indent < 0) return;
    out << '\n' << std::string(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (value.type()) {
    case Json::value_t::object: {
      if (value.empty()) {
        out << "{}";
        return;
      }
      out << '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        out << Json(it.key()).dump() << (indent < 0 ? ":" : ": ");
        dump_into(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out << '}';
      return;
    }
    case Json::value_t::array: {
      if (value.empty()) {
        out << "[]";
        return;
      }
      out << '[';
      bool first = true;
      for (const auto& item : value) {
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        dump_into(out, item, indent, depth + 1);
      }
      newline(depth);
      out << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = value.get<double>();
      out << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      out << value.dump();
  }
}

template <typename T>
T get_or(const Json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

template <typename T>
std::vector<T> scalar_or_list(const Json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return {fallback};
  const Json& node = doc.at(key);
  try {
    if (node.is_array()) return node.get<std::vector<T>>();
    return {node.get<T>()};
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

PenaltyChoice penalty_from_json(const Json& doc, PenaltyChoice choice) {
  if (doc.contains("kind")) choice.kind = penalty_kind_from_string(get_or<std::string>(doc, "kind", ""));
  choice.c = get_or(doc, "c", choice.c);
  choice.alpha = get_or(doc, "alpha", choice.alpha);
  choice.mc_reps = get_or(doc, "mc_reps", choice.mc_reps);
  choice.lambda = get_or(doc, "lambda", choice.lambda);
  return choice;
}

}  // namespace

std::string dump_json(const Json& value, int indent) {
  std::ostringstream out;
  dump_into(out, value, indent, 0);
  return out.str();
}

Json make_report(const std::string& command, Json config, Json results, const Warnings& warnings) {
  Json doc = Json::object();
  doc["command"] = command;
  doc["config"] = std::move(config);
  doc["results"] = std::move(results);
  doc["warnings"] = warnings;
  return doc;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index j = 0; j < v.size(); ++j) out.push_back(v[j]);
  return out;
}

Json to_json(const FitConfig& config) {
  return {{"lambda", config.lambda},
          {"max_iter", config.max_iter},
          {"tol_kkt", config.tol_kkt},
          {"backtrack_shrink", config.backtrack_shrink},
          {"init_step", config.init_step},
          {"acceleration", config.acceleration},
          {"unpenalized", config.unpenalized}};
}

Json to_json(const FitResult& result) {
  return {{"beta_hat", to_json(result.beta_hat)},
          {"objective", result.objective},
          {"kkt_residual", result.kkt_residual},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"active_set", result.active_set}};
}

Json to_json(const PenaltyChoice& choice) {
  return {{"kind", std::string(to_string(choice.kind))},
          {"c", choice.c},
          {"alpha", choice.alpha},
          {"mc_reps", choice.mc_reps},
          {"lambda", choice.lambda}};
}

Json to_json(const ConditionReport& report) {
  return {{"n", report.n},
          {"p", report.p},
          {"s", report.s},
          {"R", report.R},
          {"re_phi0_sq", report.re_phi0_sq},
          {"re_phi0_sq_is_upper_bound", true},
          {"gamma", report.gamma},
          {"sparsity_ok", report.sparsity_ok},
          {"c3_ok", report.c3_ok},
          {"lambda_smallness_ok", report.lambda_smallness_ok},
          {"support_empty", report.support_empty},
          {"n_cone_samples", report.n_cone_samples},
          {"lambda", report.lambda},
          {"c", report.c}};
}

Json to_json(const TheoremLedger& ledger) {
  return {{"c", ledger.c},
          {"c1", ledger.c1},
          {"lambda", ledger.lambda},
          {"C", ledger.C},
          {"R_tilde", ledger.R_tilde},
          {"h", ledger.h},
          {"bound_l1", ledger.bound_l1},
          {"bound_loss", ledger.bound_loss},
          {"hypothesis_met", ledger.hypothesis_met}};
}

Json to_json(const BoundCheck& check) {
  return {{"l1_ok", check.l1_ok},
          {"loss_ok", check.loss_ok},
          {"cone_ok", check.cone_ok},
          {"slack_l1", check.slack_l1},
          {"slack_loss", check.slack_loss},
          {"l1_error", check.l1_error},
          {"loss_gap", check.loss_gap},
          {"sup_gradient", check.sup_gradient},
          {"event_holds", check.event_holds},
          {"hypothesis_met", check.hypothesis_met}};
}

Json to_json(const TailDiagnostic& tail) {
  Json rows = Json::array();
  for (const auto& row : tail.rows) rows.push_back({{"a", row.a}, {"exceedance", row.exceedance}});
  return {{"rows", rows},
          {"w1", tail.w1},
          {"r_squared", tail.r_squared},
          {"tail_points", tail.tail_points}};
}

Json to_json(const ScenarioSpec& spec) {
  return {{"n", spec.n},          {"p", spec.p},
          {"r", spec.r},          {"rho", spec.rho},
          {"s", spec.s},          {"beta_range", {spec.beta_lo, spec.beta_hi}},
          {"reps", spec.reps},    {"seed", spec.seed},
          {"penalty", to_json(spec.penalty)}};
}

Json to_json(const MetricsSummary& summary) {
  return {{"est_error_mean", summary.est_error_mean},
          {"est_error_sd", summary.est_error_sd},
          {"sensitivity", summary.sensitivity},
          {"specificity", summary.specificity},
          {"reps", summary.reps},
          {"converged", summary.converged},
          {"mean_lambda", summary.mean_lambda}};
}

Json to_json(const CVResult& cv) {
  Json table = Json::array();
  for (const auto& row : cv.table) {
    table.push_back({{"lambda", row.lambda},
                     {"mean_score", row.mean_score},
                     {"fold_scores", row.fold_scores}});
  }
  return {{"lambda_star", cv.lambda_star}, {"table", table}};
}

Json to_json(const StandardizationRecord& record) {
  return {{"center", to_json(record.center)},
          {"scale", to_json(record.scale)},
          {"constant", record.constant}};
}

Json to_json(const PipelineReport& report) {
  Json rows = Json::array();
  for (const auto& row : table2_rows(report)) {
    rows.push_back({{"variable", row.label},
                    {"P-NBR", row.penalized ? Json(*row.penalized) : Json(nullptr)},
                    {"NBR", row.mle ? Json(*row.mle) : Json(nullptr)}});
  }
  return {{"lambda_star", report.cv.lambda_star},
          {"pe_penalized", report.pe_penalized},
          {"pe_mle", report.pe_mle},
          {"penalized_converged", report.penalized_converged},
          {"mle_converged", report.mle_converged},
          {"names", report.names},
          {"penalized", to_json(report.penalized)},
          {"mle", to_json(report.mle)},
          {"table2", rows},
          {"cv", to_json(report.cv)},
          {"train_rows", report.train_rows},
          {"test_rows", report.test_rows}};
}

std::vector<ScenarioSpec> scenario_grid_from_json(const Json& doc) {
  const Json* cells = &doc;
  Json wrapped;
  if (doc.is_object() && doc.contains("scenarios")) {
    cells = &doc.at("scenarios");
  } else if (doc.is_object()) {
    wrapped = Json::array({doc});
    cells = &wrapped;
  }
  if (!cells->is_array()) throw ConfigError("scenario config must be an object or array");

  std::vector<ScenarioSpec> grid;
  for (const Json& cell : *cells) {
    if (!cell.is_object()) throw ConfigError("scenario entries must be objects");
    ScenarioSpec base;
    base.p = get_or<Index>(cell, "p", base.p);
    base.rho = get_or(cell, "rho", base.rho);
    base.s = get_or<Index>(cell, "s", base.s);
    base.reps = get_or(cell, "reps", base.reps);
    base.seed = get_or<std::uint64_t>(cell, "seed", base.seed);
    if (cell.contains("beta_range")) {
      const auto range = get_or<std::vector<double>>(cell, "beta_range", {});
      if (range.size() != 2) throw ConfigError("beta_range needs two values");
      base.beta_lo = range[0];
      base.beta_hi = range[1];
    }
    if (cell.contains("penalty")) base.penalty = penalty_from_json(cell.at("penalty"), base.penalty);
    if (cell.contains("fit")) {
      const Json& f = cell.at("fit");
      base.fit.max_iter = get_or(f, "max_iter", base.fit.max_iter);
      base.fit.tol_kkt = get_or(f, "tol_kkt", base.fit.tol_kkt);
      base.fit.acceleration = get_or(f, "acceleration", base.fit.acceleration);
    }
    if (cell.contains("cv")) {
      const Json& c = cell.at("cv");
      base.cv.folds = get_or(c, "folds", base.cv.folds);
      base.cv.grid_size = get_or(c, "grid_size", base.cv.grid_size);
      base.cv.grid_ratio = get_or(c, "grid_ratio", base.cv.grid_ratio);
      base.cv.lambda_grid = get_or(c, "lambda_grid", base.cv.lambda_grid);
      if (c.contains("score")) base.cv.score = cv_score_from_string(get_or<std::string>(c, "score", ""));
    }
    for (double r : scalar_or_list<double>(cell, "r", base.r)) {
      for (Index n : scalar_or_list<Index>(cell, "n", base.n)) {
        ScenarioSpec spec = base;
        spec.r = r;
        spec.n = n;
        spec.validate();
        grid.push_back(spec);
      }
    }
  }
  return grid;
}

}  // namespace nbreg
