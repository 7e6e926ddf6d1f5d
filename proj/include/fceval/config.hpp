#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fceval/analytic_oracle.hpp"
#include "fceval/evaluation.hpp"
#include "fceval/synthetic_market.hpp"

namespace fceval {

enum class Mode { Simulate, EvaluateFile };
enum class ReportFormat { Json, Csv };

struct OutputSpec {
	std::optional<std::string> dir;
	ReportFormat format = ReportFormat::Json;
	/// Also write the simulated pairs as pairs.csv (simulate mode).
	bool write_pairs = false;
};

/// Everything needed to reproduce one experiment. Parsed from a JSON document;
/// see docs/config.md for the schema.
struct ExperimentConfig {
	Mode mode = Mode::Simulate;
	std::optional<RatePrior> prior;
	std::optional<DemandProcess> process;
	std::size_t n = 0;
	std::optional<std::uint64_t> seed;
	DistortionStrategy distortion = HonestForecast{};
	BucketSpec buckets{};
	double z_crit = 4.0;
	bool oracle = false;
	QuadratureSpec quadrature{};
	std::optional<std::string> input;
	Count max_outcome = kDefaultMaxOutcome;
	/// 0 disables the bootstrap companion test.
	std::size_t bootstrap_resamples = 0;
	unsigned threads = 1;
	/// Largest outcome printed by the `oracle` subcommand.
	Count s_max = 20;
	OutputSpec output{};

	/// Checks the cross-field requirements: simulate needs prior, process, n
	/// and seed; evaluate needs an input path; the oracle needs prior and
	/// process. Throws ConfigError.
	void validate() const;

	OracleContext oracle_context() const;
};

/// Parses a config document. Unknown keys are errors at every nesting level.
ExperimentConfig parse_config(const nlohmann::json &doc);

/// Canonical echo of a config (without the output block). parse_config
/// accepts it and yields an equivalent config.
nlohmann::json config_to_json(const ExperimentConfig &config);

nlohmann::json prior_to_json(const RatePrior &prior);
RatePrior parse_prior(const nlohmann::json &doc);
nlohmann::json process_to_json(const DemandProcess &process);
DemandProcess parse_process(const nlohmann::json &doc);

/// Builds a config fragment from `NAME=VALUE` environment entries whose name
/// starts with `prefix`. The rest of the name is lower-cased and split on
/// "__" into a key path (FCEVAL_PRIOR__SHAPE -> prior.shape). Values are
/// taken as JSON when they parse, as strings otherwise.
nlohmann::json env_overrides(std::string_view prefix, std::span<const std::string> environment);

/// Reads the process environment into `NAME=VALUE` strings.
std::vector<std::string> process_environment();

/// Reads and parses a JSON config file. Throws ConfigError.
nlohmann::json read_config_file(const std::string &path);

std::string_view format_name(ReportFormat format);
ReportFormat parse_format(std::string_view name);

} // namespace fceval
