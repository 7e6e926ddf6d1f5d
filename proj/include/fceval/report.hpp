#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fceval/config.hpp"
#include "fceval/evaluation.hpp"

namespace fceval {

inline constexpr const char *kToolName = "fceval";
inline constexpr const char *kToolVersion = "1.0.0";

struct ExperimentReport {
	ExperimentConfig config;
	BiasTestResult global;
	std::optional<BiasTestResult> bootstrap;
	bool buckets_merged = false;
	std::vector<BucketReport> forward;
	std::vector<OutcomeGroupReport> backward;
	CalibrationVerdict calibration;
	std::vector<std::string> warnings;

	bool global_pass() const noexcept { return !global.significant_at_3sigma; }
	bool overall_pass() const noexcept { return global_pass() && calibration.pass; }
};

/// Draws the assortment, realizes sales and applies the configured
/// distortion. Requires a simulate-mode config.
std::vector<ForecastOutcomePair> simulate_pairs(const ExperimentConfig &config);

/// Runs the whole evaluation. Errors keep their type and carry the failing
/// stage as a "[stage] " message prefix.
ExperimentReport run_experiment(const ExperimentConfig &config);

/// Evaluates the given pairs under `config` (mode and input are ignored).
ExperimentReport evaluate_pairs(const ExperimentConfig &config, std::span<const ForecastOutcomePair> pairs);

/// Single self-contained document: config echo, metadata, tables, verdicts.
nlohmann::json report_to_json(const ExperimentReport &report);
std::string report_json_text(const ExperimentReport &report);

std::string global_csv(const ExperimentReport &report);
std::string forward_buckets_csv(const ExperimentReport &report);
std::string backward_groups_csv(const ExperimentReport &report);

/// Writes report.json, or global.csv + forward_buckets.csv +
/// backward_groups.csv, into `dir` (created if missing). Returns the paths.
std::vector<std::filesystem::path> write_report(const ExperimentReport &report, ReportFormat format,
                                                const std::filesystem::path &dir);

} // namespace fceval
