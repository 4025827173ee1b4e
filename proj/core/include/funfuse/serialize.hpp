#pragma once

#include <string>

#include "funfuse/dataset.hpp"
#include "funfuse/ecm.hpp"
#include "funfuse/selection.hpp"
#include "funfuse/simulate.hpp"

namespace funfuse {

/// JSON document with the fitted parameters, memberships, labels,
/// objective trace, fused regions, basis and config echo. Round-trips
/// exactly through fit_result_from_json.
std::string fit_result_to_json(const FitResult& result);
FitResult fit_result_from_json(const std::string& text);

/// Applies the fields present in a JSON object (lower_snake_case field
/// names matching FitConfig) on top of an existing config.
void apply_config_json(FitConfig& config, const std::string& text);

std::string ground_truth_to_json(const GroundTruth& truth,
                                 const ScenarioSpec& spec);
GroundTruth ground_truth_from_json(const std::string& text);

/// CSV: G,lambda_s,lambda_l,cv_mean,cv_se,fold_1..fold_K.
std::string cv_table_to_csv(const SelectionResult& result);

/// JSON with the chosen cell, the staged trace and the grid echo.
std::string selection_to_json(const SelectionResult& result);

}  // namespace funfuse
