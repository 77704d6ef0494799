#pragma once

#include <string>

#include "advsel/seceval.hpp"

// JSON (de)serialization for the on-disk formats: feature domains, masks,
// models, selection traces, and evaluation summaries. Numbers round-trip
// exactly (shortest decimal form).

namespace advsel {

std::string format_double(double v);  // shortest round-trip decimal

std::string domain_to_json_string(const FeatureDomain& d);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Per-sample attack results as CSV (sample, cost, g_value, evaded, init, iterations).
void save_attack_results_csv(const std::vector<EvasionResult>& results, const std::string& path);

/// Descent-path trace for one sample (iteration, cost, g, phase).
void save_attack_trace_csv(const EvasionResult& result, const std::string& path);

std::string compare_report_to_json(const CompareReport& report);
std::string curve_summary_json(const SecurityCurve& curve, const std::string& config_json);

}  // namespace advsel
