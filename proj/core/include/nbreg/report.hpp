#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "nbreg/diagnostics.hpp"
#include "nbreg/experiments.hpp"
#include "nbreg/io.hpp"
#include "nbreg/penalty.hpp"
#include "nbreg/solver.hpp"

namespace nbreg {

using Json = nlohmann::json;

/// Serializes with every floating-point value printed to 17 significant
/// digits; non-finite values become null.
std::string dump_json(const Json& value, int indent = 2);

/// Top-level report document: {command, config, results, warnings}.
Json make_report(const std::string& command, Json config, Json results, const Warnings& warnings);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const FitConfig& config);
Json to_json(const FitResult& result);
Json to_json(const PenaltyChoice& choice);
Json to_json(const ConditionReport& report);
Json to_json(const TheoremLedger& ledger);
Json to_json(const BoundCheck& check);
Json to_json(const TailDiagnostic& tail);
Json to_json(const ScenarioSpec& spec);
Json to_json(const MetricsSummary& summary);
Json to_json(const CVResult& cv);
Json to_json(const StandardizationRecord& record);
Json to_json(const PipelineReport& report);

/// Expands a scenario grid document. Keys n and r may be scalars or arrays; the
/// grid is their Cartesian product (r outer, n inner). Missing keys take the
/// ScenarioSpec defaults. Throws ConfigError on invalid content.
std::vector<ScenarioSpec> scenario_grid_from_json(const Json& doc);

}  // namespace nbreg
