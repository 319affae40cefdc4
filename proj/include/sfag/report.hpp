#pragma once

#include "sfag/backtest.hpp"
#include "sfag/stylized_facts.hpp"
#include "sfag/trainer.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace sfag {

using Json = nlohmann::json;

/// Common report frame: schema/tool versions, command name, and the full
/// effective config. Reports carry no timestamps so identical runs emit
/// identical bytes.
Json report_envelope(const std::string& command, Json config);

Json to_json(const BacktestResult& r);
Json to_json(const StylizedFactReport& r);
Json to_json(const GpdFit& f);
Json to_json(const AcfVector& a);
Json to_json(const CfvcMatrix& m);
Json to_json(const SideEstimates& s);
Json to_json(const RunEvaluation& ev);

/// One training-log line. wall_seconds is intentionally absent.
Json to_json(const TrainLogRecord& rec);

/// NaN-tolerant read: JSON null (how NaN serializes) maps back to NaN.
double json_number(const Json& j);

void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// Emits the six figure-data CSVs (ACF curves, tail exceedance scatter per
/// side, CFVC matrices per side, gap summary) from an evaluate report.
void write_figure_data(const std::string& dir, const Json& evaluate_report);

} // namespace sfag
