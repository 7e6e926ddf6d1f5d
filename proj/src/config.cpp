#include "fceval/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "fceval/errors.hpp"
#include "overloaded.hpp"

extern char **environ;

namespace fceval {
namespace {

using json = nlohmann::json;

std::string join(std::string_view where, std::string_view key) {
	return where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
}

void check_keys(const json &obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
	if (!obj.is_object()) {
		throw ConfigError(std::string(where.empty() ? "config" : where) + " must be an object");
	}
	for (const auto &item : obj.items()) {
		if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
			throw ConfigError("unknown config key '" + join(where, item.key()) + "'");
		}
	}
}

const json &require_key(const json &obj, std::string_view key, std::string_view where) {
	const auto it = obj.find(std::string(key));
	if (it == obj.end()) {
		throw ConfigError("missing config key '" + join(where, key) + "'");
	}
	return *it;
}

double number_at(const json &obj, std::string_view key, std::string_view where) {
	const json &v = require_key(obj, key, where);
	if (!v.is_number()) {
		throw ConfigError("config key '" + join(where, key) + "' must be a number");
	}
	return v.get<double>();
}

double number_or(const json &obj, std::string_view key, std::string_view where, double fallback) {
	return obj.contains(std::string(key)) ? number_at(obj, key, where) : fallback;
}

std::uint64_t unsigned_at(const json &obj, std::string_view key, std::string_view where) {
	const json &v = require_key(obj, key, where);
	// Built-in json values hold small integers as signed.
	if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
		throw ConfigError("config key '" + join(where, key) + "' must be a nonnegative integer");
	}
	return v.get<std::uint64_t>();
}

std::uint64_t unsigned_or(const json &obj, std::string_view key, std::string_view where, std::uint64_t fallback) {
	return obj.contains(std::string(key)) ? unsigned_at(obj, key, where) : fallback;
}

std::string string_at(const json &obj, std::string_view key, std::string_view where) {
	const json &v = require_key(obj, key, where);
	if (!v.is_string()) {
		throw ConfigError("config key '" + join(where, key) + "' must be a string");
	}
	return v.get<std::string>();
}

bool bool_or(const json &obj, std::string_view key, std::string_view where, bool fallback) {
	if (!obj.contains(std::string(key))) {
		return fallback;
	}
	const json &v = obj.at(std::string(key));
	if (!v.is_boolean()) {
		throw ConfigError("config key '" + join(where, key) + "' must be true or false");
	}
	return v.get<bool>();
}

RatePrior parse_prior_at(const json &doc, const std::string &where) {
	if (!doc.is_object()) {
		throw ConfigError(where + " must be an object");
	}
	const std::string family = string_at(doc, "family", where);
	try {
		if (family == "gamma") {
			check_keys(doc, {"family", "shape", "rate"}, where);
			return RatePrior::gamma(number_at(doc, "shape", where), number_at(doc, "rate", where));
		}
		if (family == "lognormal") {
			check_keys(doc, {"family", "mu", "sigma"}, where);
			return RatePrior::lognormal(number_at(doc, "mu", where), number_at(doc, "sigma", where));
		}
		if (family == "uniform") {
			check_keys(doc, {"family", "lo", "hi"}, where);
			return RatePrior::uniform(number_at(doc, "lo", where), number_at(doc, "hi", where));
		}
		if (family == "mixture") {
			check_keys(doc, {"family", "components"}, where);
			const json &comps = require_key(doc, "components", where);
			if (!comps.is_array()) {
				throw ConfigError(where + ".components must be an array");
			}
			std::vector<double> weights;
			std::vector<RatePrior> components;
			for (std::size_t i = 0; i < comps.size(); ++i) {
				const std::string cw = where + ".components[" + std::to_string(i) + "]";
				check_keys(comps[i], {"weight", "prior"}, cw);
				weights.push_back(number_at(comps[i], "weight", cw));
				components.push_back(parse_prior_at(require_key(comps[i], "prior", cw), cw + ".prior"));
			}
			return RatePrior::mixture(std::move(weights), std::move(components));
		}
	} catch (const DomainError &e) {
		throw ConfigError(where + ": " + e.what());
	}
	throw ConfigError(where + ".family must be one of gamma, lognormal, uniform, mixture (got '" + family + "')");
}

DemandProcess parse_process_at(const json &doc, const std::string &where) {
	if (!doc.is_object()) {
		throw ConfigError(where + " must be an object");
	}
	const std::string kind = string_at(doc, "kind", where);
	if (kind == "poisson") {
		check_keys(doc, {"kind"}, where);
		return DemandProcess::poisson();
	}
	if (kind == "negative_binomial") {
		check_keys(doc, {"kind", "shape"}, where);
		try {
			return DemandProcess::negative_binomial(number_at(doc, "shape", where));
		} catch (const DomainError &e) {
			throw ConfigError(where + ": " + e.what());
		}
	}
	throw ConfigError(where + ".kind must be poisson or negative_binomial (got '" + kind + "')");
}

DistortionStrategy parse_distortion(const json &doc) {
	const std::string where = "distortion";
	if (!doc.is_object()) {
		throw ConfigError("distortion must be an object");
	}
	const std::string kind = string_at(doc, "kind", where);
	if (kind == "honest") {
		check_keys(doc, {"kind"}, where);
		return HonestForecast{};
	}
	if (kind == "permutation") {
		check_keys(doc, {"kind", "seed"}, where);
		return PermutedForecast{unsigned_or(doc, "seed", where, 0)};
	}
	if (kind == "constant_mean") {
		check_keys(doc, {"kind"}, where);
		return ConstantMeanForecast{};
	}
	if (kind == "exaggerate") {
		check_keys(doc, {"kind", "stretch", "floor"}, where);
		ExaggeratedForecast e;
		e.stretch = number_or(doc, "stretch", where, e.stretch);
		e.floor = number_or(doc, "floor", where, e.floor);
		if (!(e.stretch > 0.0) || !(e.floor > 0.0)) {
			throw ConfigError("distortion: exaggerate needs stretch > 0 and floor > 0");
		}
		return e;
	}
	throw ConfigError("distortion.kind must be honest, permutation, constant_mean or exaggerate (got '" + kind + "')");
}

BucketSpec parse_buckets(const json &doc) {
	const std::string where = "buckets";
	if (!doc.is_object()) {
		throw ConfigError("buckets must be an object");
	}
	BucketSpec spec;
	const std::string scheme = string_at(doc, "scheme", where);
	if (scheme == "quantile") {
		check_keys(doc, {"scheme", "count", "min_count"}, where);
		spec.scheme = QuantileBuckets{unsigned_or(doc, "count", where, QuantileBuckets{}.buckets)};
	} else if (scheme == "fixed_width") {
		check_keys(doc, {"scheme", "width", "origin", "min_count"}, where);
		spec.scheme = FixedWidthBuckets{number_at(doc, "width", where), number_or(doc, "origin", where, 0.0)};
	} else if (scheme == "log_width") {
		check_keys(doc, {"scheme", "ratio", "min_edge", "min_count"}, where);
		spec.scheme = LogWidthBuckets{number_at(doc, "ratio", where), number_at(doc, "min_edge", where)};
	} else {
		throw ConfigError("buckets.scheme must be quantile, fixed_width or log_width (got '" + scheme + "')");
	}
	spec.min_count = unsigned_or(doc, "min_count", where, spec.min_count);
	if (spec.min_count == 0) {
		throw ConfigError("buckets.min_count must be >= 1");
	}
	return spec;
}

QuadratureSpec parse_quadrature(const json &doc) {
	const std::string where = "quadrature";
	if (!doc.is_object()) {
		throw ConfigError("quadrature must be an object");
	}
	QuadratureSpec spec;
	const std::string scheme = string_at(doc, "scheme", where);
	if (scheme == "adaptive") {
		check_keys(doc, {"scheme", "abs_tol", "rel_tol", "max_subdivisions", "upper_cutoff_mass"}, where);
		AdaptiveInterval a;
		a.abs_tol = number_or(doc, "abs_tol", where, a.abs_tol);
		a.rel_tol = number_or(doc, "rel_tol", where, a.rel_tol);
		a.max_subdivisions = unsigned_or(doc, "max_subdivisions", where, a.max_subdivisions);
		spec.scheme = a;
	} else if (scheme == "gauss_laguerre") {
		check_keys(doc, {"scheme", "node_count", "upper_cutoff_mass"}, where);
		spec.scheme = GaussLaguerre{unsigned_or(doc, "node_count", where, GaussLaguerre{}.node_count)};
	} else {
		throw ConfigError("quadrature.scheme must be adaptive or gauss_laguerre (got '" + scheme + "')");
	}
	spec.upper_cutoff_mass = number_or(doc, "upper_cutoff_mass", where, spec.upper_cutoff_mass);
	spec.validate();
	return spec;
}

json distortion_to_json(const DistortionStrategy &d) {
	return std::visit(detail::Overloaded{
	                      [](const HonestForecast &) { return json{{"kind", "honest"}}; },
	                      [](const PermutedForecast &p) { return json{{"kind", "permutation"}, {"seed", p.seed}}; },
	                      [](const ConstantMeanForecast &) { return json{{"kind", "constant_mean"}}; },
	                      [](const ExaggeratedForecast &e) {
		                      return json{{"kind", "exaggerate"}, {"stretch", e.stretch}, {"floor", e.floor}};
	                      },
	                  },
	                  d);
}

json buckets_to_json(const BucketSpec &spec) {
	json out = std::visit(
	    detail::Overloaded{
	        [](const QuantileBuckets &q) { return json{{"scheme", "quantile"}, {"count", q.buckets}}; },
	        [](const FixedWidthBuckets &f) {
		        return json{{"scheme", "fixed_width"}, {"width", f.width}, {"origin", f.origin}};
	        },
	        [](const LogWidthBuckets &l) {
		        return json{{"scheme", "log_width"}, {"ratio", l.ratio}, {"min_edge", l.min_edge}};
	        },
	    },
	    spec.scheme);
	out["min_count"] = spec.min_count;
	return out;
}

json quadrature_to_json(const QuadratureSpec &spec) {
	json out = std::visit(detail::Overloaded{
	                          [](const AdaptiveInterval &a) {
		                          return json{{"scheme", "adaptive"},
		                                      {"abs_tol", a.abs_tol},
		                                      {"rel_tol", a.rel_tol},
		                                      {"max_subdivisions", a.max_subdivisions}};
	                          },
	                          [](const GaussLaguerre &g) {
		                          return json{{"scheme", "gauss_laguerre"}, {"node_count", g.node_count}};
	                          },
	                      },
	                      spec.scheme);
	out["upper_cutoff_mass"] = spec.upper_cutoff_mass;
	return out;
}

json parse_env_value(const std::string &raw) {
	json v = json::parse(raw, nullptr, false);
	if (v.is_discarded()) {
		return raw;
	}
	return v;
}

} // namespace

RatePrior parse_prior(const json &doc) { return parse_prior_at(doc, "prior"); }
DemandProcess parse_process(const json &doc) { return parse_process_at(doc, "process"); }

json prior_to_json(const RatePrior &prior) {
	return std::visit(detail::Overloaded{
	                      [](const GammaPrior &g) {
		                      return json{{"family", "gamma"}, {"shape", g.shape}, {"rate", g.rate}};
	                      },
	                      [](const LogNormalPrior &l) {
		                      return json{{"family", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
	                      },
	                      [](const UniformPrior &u) { return json{{"family", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
	                      [](const MixturePrior &m) {
		                      json comps = json::array();
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      comps.push_back({{"weight", m.weights[i]}, {"prior", prior_to_json(m.components[i])}});
		                      }
		                      return json{{"family", "mixture"}, {"components", comps}};
	                      },
	                  },
	                  prior.kind());
}

json process_to_json(const DemandProcess &process) {
	return std::visit(detail::Overloaded{
	                      [](const PoissonProcess &) { return json{{"kind", "poisson"}}; },
	                      [](const NegativeBinomialProcess &nb) {
		                      return json{{"kind", "negative_binomial"}, {"shape", nb.blur_shape}};
	                      },
	                  },
	                  process.kind());
}

ExperimentConfig parse_config(const json &doc) {
	try {
		check_keys(doc, {"mode", "prior", "process", "n", "seed", "distortion", "buckets", "z_crit", "oracle",
		                 "quadrature", "input", "max_outcome", "bootstrap_resamples", "threads", "s_max", "output"},
		           "");
		ExperimentConfig cfg;
		if (doc.contains("mode")) {
			const std::string mode = string_at(doc, "mode", "");
			if (mode == "simulate") {
				cfg.mode = Mode::Simulate;
			} else if (mode == "evaluate") {
				cfg.mode = Mode::EvaluateFile;
			} else {
				throw ConfigError("mode must be simulate or evaluate (got '" + mode + "')");
			}
		}
		if (doc.contains("prior")) {
			cfg.prior = parse_prior(doc.at("prior"));
		}
		if (doc.contains("process")) {
			cfg.process = parse_process(doc.at("process"));
		}
		cfg.n = unsigned_or(doc, "n", "", 0);
		if (doc.contains("seed")) {
			cfg.seed = unsigned_at(doc, "seed", "");
		}
		if (doc.contains("distortion")) {
			cfg.distortion = parse_distortion(doc.at("distortion"));
		}
		if (doc.contains("buckets")) {
			cfg.buckets = parse_buckets(doc.at("buckets"));
		}
		cfg.z_crit = number_or(doc, "z_crit", "", cfg.z_crit);
		if (!(cfg.z_crit > 0.0)) {
			throw ConfigError("z_crit must be > 0");
		}
		cfg.oracle = bool_or(doc, "oracle", "", false);
		if (doc.contains("quadrature")) {
			cfg.quadrature = parse_quadrature(doc.at("quadrature"));
		}
		if (doc.contains("input")) {
			cfg.input = string_at(doc, "input", "");
		}
		cfg.max_outcome = static_cast<Count>(unsigned_or(doc, "max_outcome", "", kDefaultMaxOutcome));
		cfg.bootstrap_resamples = unsigned_or(doc, "bootstrap_resamples", "", 0);
		if (cfg.bootstrap_resamples == 1) {
			throw ConfigError("bootstrap_resamples must be 0 (off) or >= 2");
		}
		cfg.threads = static_cast<unsigned>(unsigned_or(doc, "threads", "", 1));
		if (cfg.threads == 0) {
			throw ConfigError("threads must be >= 1");
		}
		cfg.s_max = static_cast<Count>(unsigned_or(doc, "s_max", "", 20));
		if (doc.contains("output")) {
			const json &out = doc.at("output");
			check_keys(out, {"dir", "format", "pairs"}, "output");
			if (out.contains("dir")) {
				cfg.output.dir = string_at(out, "dir", "output");
			}
			if (out.contains("format")) {
				cfg.output.format = parse_format(string_at(out, "format", "output"));
			}
			cfg.output.write_pairs = bool_or(out, "pairs", "output", false);
		}
		return cfg;
	} catch (const json::exception &e) {
		throw ConfigError(std::string("config: ") + e.what());
	}
}

json config_to_json(const ExperimentConfig &config) {
	json out;
	out["mode"] = config.mode == Mode::Simulate ? "simulate" : "evaluate";
	if (config.prior) {
		out["prior"] = prior_to_json(*config.prior);
	}
	if (config.process) {
		out["process"] = process_to_json(*config.process);
	}
	if (config.mode == Mode::Simulate) {
		out["n"] = config.n;
		out["distortion"] = distortion_to_json(config.distortion);
	}
	if (config.seed) {
		out["seed"] = *config.seed;
	}
	out["buckets"] = buckets_to_json(config.buckets);
	out["z_crit"] = config.z_crit;
	out["oracle"] = config.oracle;
	out["quadrature"] = quadrature_to_json(config.quadrature);
	if (config.input) {
		out["input"] = *config.input;
	}
	out["max_outcome"] = config.max_outcome;
	out["bootstrap_resamples"] = config.bootstrap_resamples;
	out["threads"] = config.threads;
	out["s_max"] = config.s_max;
	return out;
}

void ExperimentConfig::validate() const {
	if (mode == Mode::Simulate) {
		if (!prior || !process) {
			throw ConfigError("simulate mode requires 'prior' and 'process'");
		}
		if (n == 0) {
			throw ConfigError("simulate mode requires 'n' >= 1");
		}
		if (!seed) {
			throw ConfigError("simulate mode requires 'seed'");
		}
	} else if (!input) {
		throw ConfigError("evaluate mode requires 'input'");
	}
	if (oracle && (!prior || !process)) {
		throw ConfigError("'oracle': true requires 'prior' and 'process'");
	}
	quadrature.validate();
}

OracleContext ExperimentConfig::oracle_context() const {
	if (!prior || !process) {
		throw ConfigError("oracle requires 'prior' and 'process'");
	}
	return OracleContext{*prior, *process, quadrature};
}

json env_overrides(std::string_view prefix, std::span<const std::string> environment) {
	json out = json::object();
	for (const std::string &entry : environment) {
		const auto eq = entry.find('=');
		if (eq == std::string::npos || entry.compare(0, prefix.size(), prefix) != 0) {
			continue;
		}
		std::string name = entry.substr(prefix.size(), eq - prefix.size());
		std::transform(name.begin(), name.end(), name.begin(),
		               [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
		if (name.empty()) {
			continue;
		}
		json::json_pointer ptr;
		std::size_t start = 0;
		while (true) {
			const auto sep = name.find("__", start);
			ptr /= name.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
			if (sep == std::string::npos) {
				break;
			}
			start = sep + 2;
		}
		out[ptr] = parse_env_value(entry.substr(eq + 1));
	}
	return out;
}

std::vector<std::string> process_environment() {
	std::vector<std::string> out;
	for (char **e = environ; e != nullptr && *e != nullptr; ++e) {
		out.emplace_back(*e);
	}
	return out;
}

json read_config_file(const std::string &path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError("cannot open config file '" + path + "'");
	}
	std::stringstream buffer;
	buffer << in.rdbuf();
	json doc = json::parse(buffer.str(), nullptr, false);
	if (doc.is_discarded()) {
		throw ConfigError("config file '" + path + "' is not valid JSON");
	}
	return doc;
}

std::string_view format_name(ReportFormat format) { return format == ReportFormat::Json ? "json" : "csv"; }

ReportFormat parse_format(std::string_view name) {
	if (name == "json") {
		return ReportFormat::Json;
	}
	if (name == "csv") {
		return ReportFormat::Csv;
	}
	throw ConfigError("format must be json or csv (got '" + std::string(name) + "')");
}

} // namespace fceval
