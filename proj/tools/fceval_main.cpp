// fceval: simulate, evaluate and inspect retail demand forecasts with
// forward-looking (prediction-bucketed) and backward-looking
// (outcome-grouped) procedures.
//
// Exit codes: 0 success, 1 usage/config error, 2 data or evaluation error,
// 3 verdict "fail" with --strict.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fceval/analytic_oracle.hpp"
#include "fceval/config.hpp"
#include "fceval/errors.hpp"
#include "fceval/pairs_io.hpp"
#include "fceval/report.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerdict = 3;

constexpr const char *kEnvPrefix = "FCEVAL_";

struct CommonFlags {
	std::string config_path;
	std::optional<std::uint64_t> seed;
	std::string out_dir;
	std::string format;
	bool strict = false;
};

void add_common(CLI::App *cmd, CommonFlags &flags) {
	cmd->add_option("--config", flags.config_path, "JSON experiment config");
	cmd->add_option("--seed", flags.seed, "Seed (overrides the config)");
	cmd->add_option("--out", flags.out_dir, "Output directory (default: JSON to stdout)");
	cmd->add_option("--format", flags.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
	cmd->add_flag("--strict", flags.strict, "Exit with 3 when a verdict fails");
}

/// Environment (lowest precedence), then config file, then flags.
fceval::ExperimentConfig resolve_config(const CommonFlags &flags, const char *mode,
                                        const std::optional<std::string> &input) {
	json doc = fceval::env_overrides(kEnvPrefix, fceval::process_environment());
	if (!flags.config_path.empty()) {
		doc.merge_patch(fceval::read_config_file(flags.config_path));
	}
	if (mode != nullptr) {
		doc["mode"] = mode;
	}
	if (flags.seed) {
		doc["seed"] = *flags.seed;
	}
	if (input) {
		doc["input"] = *input;
	}
	fceval::ExperimentConfig cfg = fceval::parse_config(doc);
	if (!flags.out_dir.empty()) {
		cfg.output.dir = flags.out_dir;
	}
	if (!flags.format.empty()) {
		cfg.output.format = fceval::parse_format(flags.format);
	}
	return cfg;
}

int emit_report(const fceval::ExperimentReport &report, const std::vector<fceval::ForecastOutcomePair> *pairs,
                bool strict) {
	const auto &cfg = report.config;
	if (cfg.output.dir) {
		for (const auto &path : fceval::write_report(report, cfg.output.format, *cfg.output.dir)) {
			std::cerr << "wrote " << path.string() << '\n';
		}
		if (cfg.output.write_pairs && pairs != nullptr) {
			const auto path = std::filesystem::path(*cfg.output.dir) / "pairs.csv";
			std::ofstream out(path, std::ios::binary | std::ios::trunc);
			fceval::write_pairs(out, *pairs);
			std::cerr << "wrote " << path.string() << '\n';
		}
	} else if (cfg.output.format == fceval::ReportFormat::Json) {
		std::cout << fceval::report_json_text(report);
	} else {
		throw fceval::ConfigError("--format csv needs --out DIR");
	}
	for (const auto &w : report.warnings) {
		std::cerr << "warning: " << w << '\n';
	}
	std::cerr << "global: " << (report.global_pass() ? "pass" : "fail")
	          << ", calibration: " << (report.calibration.pass ? "pass" : "fail") << '\n';
	return strict && !report.overall_pass() ? kExitVerdict : kExitOk;
}

int run_simulate(const CommonFlags &flags) {
	fceval::ExperimentConfig cfg = resolve_config(flags, "simulate", std::nullopt);
	cfg.validate();
	const auto pairs = fceval::simulate_pairs(cfg);
	const auto report = fceval::evaluate_pairs(cfg, pairs);
	return emit_report(report, &pairs, flags.strict);
}

int run_evaluate(const CommonFlags &flags, const std::optional<std::string> &input) {
	const fceval::ExperimentConfig cfg = resolve_config(flags, "evaluate", input);
	const auto report = fceval::run_experiment(cfg);
	return emit_report(report, nullptr, flags.strict);
}

int run_oracle(const CommonFlags &flags, std::optional<fceval::Count> s_max, const std::string &method_name) {
	fceval::ExperimentConfig cfg = resolve_config(flags, nullptr, std::nullopt);
	if (s_max) {
		cfg.s_max = *s_max;
	}
	fceval::OracleMethod method = fceval::OracleMethod::Automatic;
	if (method_name == "closed") {
		method = fceval::OracleMethod::ClosedForm;
	} else if (method_name == "quadrature") {
		method = fceval::OracleMethod::Quadrature;
	}
	const fceval::OracleContext ctx = cfg.oracle_context();
	const auto curve = fceval::hindsight_curve(ctx, cfg.s_max, method);

	std::string csv = "s,target_pmf,hindsight_mean\n";
	json doc;
	doc["prior"] = fceval::prior_to_json(ctx.prior);
	doc["process"] = fceval::process_to_json(ctx.process);
	doc["prior_mean"] = fceval::prior_mean(ctx.prior);
	doc["curve"] = json::array();
	for (const auto &p : curve) {
		csv += std::to_string(p.outcome) + ',' + fceval::format_number(p.target_probability) + ',' +
		       fceval::format_number(p.hindsight_mean) + '\n';
		doc["curve"].push_back({{"s", p.outcome}, {"target_pmf", p.target_probability}, {"hindsight_mean", p.hindsight_mean}});
	}
	const bool as_json = cfg.output.format == fceval::ReportFormat::Json && !flags.format.empty();
	if (cfg.output.dir) {
		std::filesystem::create_directories(*cfg.output.dir);
		const auto path = std::filesystem::path(*cfg.output.dir) / (as_json ? "hindsight_curve.json" : "hindsight_curve.csv");
		std::ofstream out(path, std::ios::binary | std::ios::trunc);
		out << (as_json ? doc.dump(2) + "\n" : csv);
		std::cerr << "wrote " << path.string() << '\n';
	} else {
		std::cout << (as_json ? doc.dump(2) + "\n" : csv);
	}
	return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
	CLI::App app{"Forecast evaluation: forward (prediction-bucketed) vs backward (outcome-grouped)"};
	app.require_subcommand(1);

	CommonFlags simulate_flags;
	auto *simulate = app.add_subcommand("simulate", "Simulate an assortment, realize sales, evaluate the forecast");
	add_common(simulate, simulate_flags);

	CommonFlags evaluate_flags;
	std::optional<std::string> input;
	auto *evaluate = app.add_subcommand("evaluate", "Evaluate forecast/outcome pairs from a CSV file");
	add_common(evaluate, evaluate_flags);
	evaluate->add_option("--input", input, "CSV with item_id,prediction,outcome (overrides the config)");

	CommonFlags oracle_flags;
	std::optional<fceval::Count> s_max;
	std::string method = "auto";
	auto *oracle = app.add_subcommand("oracle", "Print the analytic hindsight curve E(r|s) for s = 0..s_max");
	add_common(oracle, oracle_flags);
	oracle->add_option("--s-max", s_max, "Largest outcome (overrides config s_max)")->check(CLI::NonNegativeNumber);
	oracle->add_option("--method", method, "Oracle route")->check(CLI::IsMember({"auto", "closed", "quadrature"}));

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? kExitOk : kExitUsage;
	}

	try {
		if (*simulate) {
			return run_simulate(simulate_flags);
		}
		if (*evaluate) {
			return run_evaluate(evaluate_flags, input);
		}
		return run_oracle(oracle_flags, s_max, method);
	} catch (const fceval::ConfigError &e) {
		std::cerr << "config error: " << e.what() << '\n';
		return kExitUsage;
	} catch (const fceval::DataError &e) {
		std::cerr << "data error: " << e.what() << '\n';
		return kExitData;
	} catch (const fceval::QuadratureError &e) {
		std::cerr << "quadrature error: " << e.what() << '\n';
		return kExitData;
	} catch (const fceval::DomainError &e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitData;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << '\n';
		return kExitData;
	}
}
