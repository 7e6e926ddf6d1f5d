#include "fceval/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fceval/errors.hpp"
#include "fceval/pairs_io.hpp"

namespace fceval {
namespace {

using json = nlohmann::json;

/// Runs f, re-throwing any library error with "[stage] " prepended while
/// keeping its type (the CLI maps types to exit codes).
template <class F> auto in_stage(const std::string &stage, F &&f) -> decltype(f()) {
	const std::string prefix = "[" + stage + "] ";
	try {
		return f();
	} catch (const QuadratureError &e) {
		throw e.with_context(prefix);
	} catch (const DataError &e) {
		throw DataError(prefix + e.what());
	} catch (const ConfigError &e) {
		throw ConfigError(prefix + e.what());
	} catch (const DomainError &e) {
		throw DomainError(prefix + e.what());
	}
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json optional_number(const std::optional<double> &v) { return v ? number(*v) : json(nullptr); }

std::string csv_number(double v) { return std::isfinite(v) ? format_number(v) : std::string(); }

std::string csv_optional(const std::optional<double> &v) { return v ? csv_number(*v) : std::string(); }

const char *verdict(bool pass) { return pass ? "pass" : "fail"; }

json bias_to_json(const BiasTestResult &r) {
	return json{
	    {"method", r.method == BiasTestMethod::Bootstrap ? "bootstrap" : "normal"},
	    {"n", r.n},
	    {"mean_prediction", number(r.mean_prediction)},
	    {"mean_outcome", number(r.mean_outcome)},
	    {"difference", number(r.difference)},
	    {"stderr", number(r.standard_error)},
	    {"z", optional_number(r.z_score)},
	    {"significant_at_3sigma", r.significant_at_3sigma},
	    {"degenerate", r.degenerate},
	};
}

void write_text(const std::filesystem::path &path, const std::string &text) {
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		throw DataError("cannot write '" + path.string() + "'");
	}
	out << text;
	if (!out) {
		throw DataError("write failed for '" + path.string() + "'");
	}
}

} // namespace

std::vector<ForecastOutcomePair> simulate_pairs(const ExperimentConfig &config) {
	if (config.mode != Mode::Simulate) {
		throw ConfigError("simulate_pairs: config is not in simulate mode");
	}
	config.validate();
	const Assortment assortment = generate_assortment(*config.prior, config.n, *config.seed, config.threads);
	const std::vector<Count> sales = realize_sales(*config.process, assortment, *config.seed, config.threads);
	const std::vector<double> predictions = apply_distortion(assortment, config.distortion);
	return build_pairs(predictions, sales);
}

ExperimentReport run_experiment(const ExperimentConfig &config) {
	in_stage("config", [&] { config.validate(); });
	const std::vector<ForecastOutcomePair> pairs =
	    config.mode == Mode::Simulate ? in_stage("simulate", [&] { return simulate_pairs(config); })
	                                  : in_stage("load", [&] { return load_pairs(*config.input); });
	return evaluate_pairs(config, pairs);
}

ExperimentReport evaluate_pairs(const ExperimentConfig &config, std::span<const ForecastOutcomePair> pairs) {
	ExperimentReport report;
	report.config = config;

	in_stage("validate", [&] {
		if (pairs.empty()) {
			throw DataError("no forecast/outcome pairs");
		}
		validate_pairs(pairs, config.max_outcome);
	});

	report.global = in_stage("global_test", [&] { return global_bias_test(pairs); });
	if (config.bootstrap_resamples > 0) {
		report.bootstrap = in_stage("bootstrap", [&] {
			return bootstrap_bias_test(pairs, config.bootstrap_resamples, config.seed.value_or(0));
		});
	}

	const BucketLayout layout = in_stage("buckets", [&] { return make_buckets(pairs, config.buckets); });
	report.buckets_merged = layout.merged;
	report.forward = in_stage("forward", [&] { return forward_buckets(pairs, config.buckets, layout); });
	report.calibration = in_stage("calibration", [&] { return calibration_verdict(report.forward, config.z_crit); });

	if (config.oracle) {
		const OracleContext ctx = in_stage("oracle", [&] { return config.oracle_context(); });
		report.backward = in_stage("backward", [&] { return backward_groups(pairs, &ctx, config.max_outcome); });
	} else {
		report.backward = in_stage("backward", [&] { return backward_groups(pairs, nullptr, config.max_outcome); });
	}

	if (report.global.degenerate) {
		report.warnings.push_back(pairs.size() < 2 ? "global test: n < 2, standard error undefined"
		                                           : "global test: zero variance of outcome - prediction");
	}
	if (report.buckets_merged) {
		report.warnings.push_back("buckets: tied predictions merged quantile buckets");
	}
	std::size_t flagged = 0;
	for (const auto &b : report.forward) {
		flagged += b.flagged_low_count ? 1 : 0;
	}
	if (flagged > 0) {
		report.warnings.push_back("forward: " + std::to_string(flagged) + " bucket(s) below min_count " +
		                          std::to_string(config.buckets.min_count) + ", z suppressed");
	}
	return report;
}

json report_to_json(const ExperimentReport &report) {
	json doc;
	doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
	doc["config"] = config_to_json(report.config);
	doc["metadata"] = {
	    {"n_pairs", report.global.n},
	    {"threads", report.config.threads},
	    {"oracle_closed_form", report.config.oracle && report.config.prior && report.config.process &&
	                               find_closed_form(report.config.oracle_context()) != nullptr},
	};
	doc["global"] = bias_to_json(report.global);
	if (report.bootstrap) {
		doc["bootstrap"] = bias_to_json(*report.bootstrap);
	}

	json buckets = json::array();
	for (const auto &b : report.forward) {
		buckets.push_back({
		    {"lo", number(b.interval.lo)},
		    {"hi", number(b.interval.hi)},
		    {"count", b.count},
		    {"mean_prediction", number(b.mean_prediction)},
		    {"mean_outcome", number(b.mean_outcome)},
		    {"stderr", number(b.outcome_stderr)},
		    {"z", optional_number(b.z_score)},
		    {"flagged", b.flagged_low_count},
		});
	}
	doc["forward_buckets"] = {{"merged", report.buckets_merged}, {"buckets", buckets}};

	json groups = json::array();
	for (const auto &g : report.backward) {
		groups.push_back({
		    {"s", g.outcome},
		    {"count", g.count},
		    {"mean_prediction", number(g.mean_prediction)},
		    {"stderr", number(g.prediction_stderr)},
		    {"analytic_hindsight_mean", optional_number(g.analytic_hindsight_mean)},
		});
	}
	doc["backward_groups"] = groups;

	doc["verdicts"] = {
	    {"global", verdict(report.global_pass())},
	    {"calibration", verdict(report.calibration.pass)},
	    {"overall", verdict(report.overall_pass())},
	    {"z_crit", report.calibration.z_crit},
	    {"worst_bucket", report.calibration.worst_bucket ? json(*report.calibration.worst_bucket) : json(nullptr)},
	    {"worst_z", optional_number(report.calibration.worst_z)},
	};
	doc["warnings"] = report.warnings;
	return doc;
}

std::string report_json_text(const ExperimentReport &report) { return report_to_json(report).dump(2) + "\n"; }

std::string global_csv(const ExperimentReport &report) {
	const BiasTestResult &g = report.global;
	std::ostringstream out;
	out << "n,mean_prediction,mean_outcome,difference,stderr,z,significant_at_3sigma,degenerate,verdict\n";
	out << std::to_string(g.n) << ',' << csv_number(g.mean_prediction) << ',' << csv_number(g.mean_outcome) << ','
	    << csv_number(g.difference) << ',' << csv_number(g.standard_error) << ',' << csv_optional(g.z_score) << ','
	    << (g.significant_at_3sigma ? "true" : "false") << ',' << (g.degenerate ? "true" : "false") << ','
	    << verdict(report.global_pass()) << '\n';
	return out.str();
}

std::string forward_buckets_csv(const ExperimentReport &report) {
	std::ostringstream out;
	out << "lo,hi,count,mean_prediction,mean_outcome,stderr,z,flagged\n";
	for (const auto &b : report.forward) {
		out << csv_number(b.interval.lo) << ',' << csv_number(b.interval.hi) << ',' << std::to_string(b.count) << ','
		    << csv_number(b.mean_prediction) << ',' << csv_number(b.mean_outcome) << ','
		    << csv_number(b.outcome_stderr) << ',' << csv_optional(b.z_score) << ','
		    << (b.flagged_low_count ? "true" : "false") << '\n';
	}
	return out.str();
}

std::string backward_groups_csv(const ExperimentReport &report) {
	std::ostringstream out;
	out << "s,count,mean_prediction,stderr,analytic_hindsight_mean\n";
	for (const auto &g : report.backward) {
		out << std::to_string(g.outcome) << ',' << std::to_string(g.count) << ',' << csv_number(g.mean_prediction)
		    << ',' << csv_number(g.prediction_stderr) << ',' << csv_optional(g.analytic_hindsight_mean) << '\n';
	}
	return out.str();
}

std::vector<std::filesystem::path> write_report(const ExperimentReport &report, ReportFormat format,
                                                const std::filesystem::path &dir) {
	std::error_code ec;
	std::filesystem::create_directories(dir, ec);
	if (ec) {
		throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
	}
	std::vector<std::filesystem::path> written;
	if (format == ReportFormat::Json) {
		written.push_back(dir / "report.json");
		write_text(written.back(), report_json_text(report));
		return written;
	}
	written.push_back(dir / "global.csv");
	write_text(written.back(), global_csv(report));
	written.push_back(dir / "forward_buckets.csv");
	write_text(written.back(), forward_buckets_csv(report));
	written.push_back(dir / "backward_groups.csv");
	write_text(written.back(), backward_groups_csv(report));
	return written;
}

} // namespace fceval
