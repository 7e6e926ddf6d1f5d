#include "fceval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "fceval/errors.hpp"
#include "fceval/summation.hpp"
#include "overloaded.hpp"

namespace fceval {
namespace {

// Sums of squared counts overflow int64 once n * max_outcome^2 passes 9e18.
__extension__ using Wide = __int128;

void require_nonempty(std::span<const ForecastOutcomePair> pairs, const char *op) {
	if (pairs.empty()) {
		throw DataError(std::string(op) + ": no forecast/outcome pairs");
	}
}

/// Exact sample variance of integer data from integer sums.
double integer_sample_variance(std::size_t count, std::int64_t sum, Wide sum_sq) {
	if (count < 2) {
		return 0.0;
	}
	const auto n = static_cast<Wide>(count);
	const Wide num = n * sum_sq - static_cast<Wide>(sum) * sum;
	return static_cast<double>(num) / (static_cast<double>(count) * static_cast<double>(count - 1));
}

/// Two-pass compensated sample variance.
double sample_variance(std::span<const double> values, double mean) {
	if (values.size() < 2) {
		return 0.0;
	}
	CompensatedSum acc;
	for (double v : values) {
		const double d = v - mean;
		acc.add(d * d);
	}
	return acc.value() / static_cast<double>(values.size() - 1);
}

std::vector<ForecastOutcomePair> sorted_by(std::span<const ForecastOutcomePair> pairs, bool by_outcome) {
	std::vector<ForecastOutcomePair> sorted(pairs.begin(), pairs.end());
	if (by_outcome) {
		std::sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) {
			return a.outcome != b.outcome ? a.outcome < b.outcome : a.prediction < b.prediction;
		});
	} else {
		std::sort(sorted.begin(), sorted.end(), [](const auto &a, const auto &b) {
			return a.prediction != b.prediction ? a.prediction < b.prediction : a.outcome < b.outcome;
		});
	}
	return sorted;
}

BiasTestResult finish_bias_test(BiasTestResult result) {
	if (result.degenerate || !(result.standard_error > 0.0)) {
		result.degenerate = true;
		result.z_score.reset();
		result.significant_at_3sigma = false;
		return result;
	}
	result.z_score = result.difference / result.standard_error;
	result.significant_at_3sigma = std::abs(*result.z_score) > 3.0;
	return result;
}

} // namespace

void validate_pairs(std::span<const ForecastOutcomePair> pairs, Count max_outcome) {
	for (std::size_t j = 0; j < pairs.size(); ++j) {
		const auto &p = pairs[j];
		if (!std::isfinite(p.prediction) || p.prediction < 0.0) {
			throw DataError("pair " + std::to_string(j) + " (item " + std::to_string(p.item_id) +
			                "): prediction must be finite and >= 0");
		}
		if (p.outcome < 0) {
			throw DataError("pair " + std::to_string(j) + " (item " + std::to_string(p.item_id) +
			                "): outcome must be >= 0");
		}
		if (p.outcome > max_outcome) {
			throw DataError("pair " + std::to_string(j) + " (item " + std::to_string(p.item_id) + "): outcome " +
			                std::to_string(p.outcome) + " exceeds cap " + std::to_string(max_outcome));
		}
	}
}

GlobalMeans global_means(std::span<const ForecastOutcomePair> pairs) {
	require_nonempty(pairs, "global_means");
	CompensatedSum predictions;
	std::int64_t outcomes = 0;
	for (const auto &p : pairs) {
		predictions.add(p.prediction);
		outcomes += p.outcome;
	}
	const auto n = static_cast<double>(pairs.size());
	return {predictions.value() / n, static_cast<double>(outcomes) / n};
}

BiasTestResult global_bias_test(std::span<const ForecastOutcomePair> pairs) {
	const GlobalMeans means = global_means(pairs);
	BiasTestResult result;
	result.n = pairs.size();
	result.mean_prediction = means.mean_prediction;
	result.mean_outcome = means.mean_outcome;
	result.difference = means.mean_outcome - means.mean_prediction;
	if (pairs.size() < 2) {
		result.degenerate = true;
		return finish_bias_test(result);
	}
	std::vector<double> diffs(pairs.size());
	for (std::size_t j = 0; j < pairs.size(); ++j) {
		diffs[j] = static_cast<double>(pairs[j].outcome) - pairs[j].prediction;
	}
	const double variance = sample_variance(diffs, compensated_mean(diffs));
	result.standard_error = std::sqrt(variance / static_cast<double>(pairs.size()));
	return finish_bias_test(result);
}

BiasTestResult bootstrap_bias_test(std::span<const ForecastOutcomePair> pairs, std::size_t resamples,
                                   std::uint64_t seed) {
	const GlobalMeans means = global_means(pairs);
	if (resamples < 2) {
		throw DomainError("bootstrap_bias_test: need at least 2 resamples");
	}
	BiasTestResult result;
	result.method = BiasTestMethod::Bootstrap;
	result.n = pairs.size();
	result.mean_prediction = means.mean_prediction;
	result.mean_outcome = means.mean_outcome;
	result.difference = means.mean_outcome - means.mean_prediction;

	RandomStream rng(seed, 0, StreamDomain::Bootstrap);
	std::vector<double> replicate_means(resamples);
	for (double &m : replicate_means) {
		CompensatedSum acc;
		for (std::size_t k = 0; k < pairs.size(); ++k) {
			const auto &p = pairs[rng.uniform_index(pairs.size())];
			acc.add(static_cast<double>(p.outcome) - p.prediction);
		}
		m = acc.value() / static_cast<double>(pairs.size());
	}
	result.standard_error = std::sqrt(sample_variance(replicate_means, compensated_mean(replicate_means)));
	result.degenerate = pairs.size() < 2;
	return finish_bias_test(result);
}

BucketLayout make_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec) {
	require_nonempty(pairs, "make_buckets");
	double max_prediction = 0.0;
	for (const auto &p : pairs) {
		if (!std::isfinite(p.prediction) || p.prediction < 0.0) {
			throw DataError("make_buckets: predictions must be finite and >= 0");
		}
		max_prediction = std::max(max_prediction, p.prediction);
	}

	BucketLayout layout;
	auto push_until_covers = [&](double lo, auto next_edge) {
		while (true) {
			const double hi = next_edge(lo);
			if (!(hi > lo)) {
				throw DomainError("make_buckets: bucket width underflows at " + std::to_string(lo));
			}
			layout.intervals.push_back({lo, hi});
			if (layout.intervals.size() > kMaxBuckets) {
				throw DomainError("make_buckets: more than " + std::to_string(kMaxBuckets) + " buckets");
			}
			if (hi > max_prediction) {
				break;
			}
			lo = hi;
		}
	};

	std::visit(detail::Overloaded{
	               [&](const FixedWidthBuckets &f) {
		               if (!(f.width > 0.0) || !std::isfinite(f.width) || !(f.origin >= 0.0) ||
		                   !std::isfinite(f.origin)) {
			               throw DomainError("make_buckets: fixed width needs width > 0 and origin >= 0");
		               }
		               const double k0 = std::floor(-f.origin / f.width);
		               double k = k0;
		               push_until_covers(0.0, [&](double) {
			               k += 1.0;
			               return f.origin + k * f.width;
		               });
	               },
	               [&](const LogWidthBuckets &l) {
		               if (!(l.ratio > 1.0) || !std::isfinite(l.ratio) || !(l.min_edge > 0.0) ||
		                   !std::isfinite(l.min_edge)) {
			               throw DomainError("make_buckets: log width needs ratio > 1 and min_edge > 0");
		               }
		               push_until_covers(0.0, [&](double lo) { return lo == 0.0 ? l.min_edge : lo * l.ratio; });
	               },
	               [&](const QuantileBuckets &q) {
		               if (q.buckets == 0) {
			               throw DomainError("make_buckets: quantile scheme needs at least one bucket");
		               }
		               std::vector<double> sorted(pairs.size());
		               std::transform(pairs.begin(), pairs.end(), sorted.begin(),
		                              [](const auto &p) { return p.prediction; });
		               std::sort(sorted.begin(), sorted.end());
		               double lo = 0.0;
		               double previous_edge = sorted.front();
		               for (std::size_t i = 1; i < q.buckets; ++i) {
			               const double edge = sorted[(i * sorted.size()) / q.buckets];
			               if (edge > previous_edge) {
				               layout.intervals.push_back({lo, edge});
				               lo = edge;
				               previous_edge = edge;
			               }
		               }
		               layout.intervals.push_back(
		                   {lo, std::nextafter(sorted.back(), std::numeric_limits<double>::infinity())});
		               layout.merged = layout.intervals.size() < q.buckets;
	               },
	           },
	           spec.scheme);
	return layout;
}

std::size_t find_bucket(const BucketLayout &layout, double x) {
	const auto &iv = layout.intervals;
	auto it = std::upper_bound(iv.begin(), iv.end(), x, [](double v, const Interval &b) { return v < b.lo; });
	if (it == iv.begin()) {
		return iv.size();
	}
	--it;
	return it->contains(x) ? static_cast<std::size_t>(it - iv.begin()) : iv.size();
}

std::vector<BucketReport> forward_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec) {
	return forward_buckets(pairs, spec, make_buckets(pairs, spec));
}

std::vector<BucketReport> forward_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec,
                                          const BucketLayout &layout) {
	require_nonempty(pairs, "forward_buckets");
	if (spec.min_count == 0) {
		throw DomainError("forward_buckets: min_count must be >= 1");
	}
	const std::vector<ForecastOutcomePair> sorted = sorted_by(pairs, false);

	std::vector<BucketReport> reports;
	std::size_t j = 0;
	for (const Interval &interval : layout.intervals) {
		CompensatedSum prediction_sum;
		std::int64_t outcome_sum = 0;
		Wide outcome_sq = 0;
		std::size_t count = 0;
		for (; j < sorted.size() && sorted[j].prediction < interval.hi; ++j) {
			if (sorted[j].prediction < interval.lo) {
				throw DomainError("forward_buckets: layout does not cover prediction " +
				                  std::to_string(sorted[j].prediction));
			}
			prediction_sum.add(sorted[j].prediction);
			outcome_sum += sorted[j].outcome;
			outcome_sq += static_cast<Wide>(sorted[j].outcome) * sorted[j].outcome;
			++count;
		}
		if (count == 0) {
			continue;
		}
		BucketReport r;
		r.interval = interval;
		r.count = count;
		r.mean_prediction = prediction_sum.value() / static_cast<double>(count);
		r.mean_outcome = static_cast<double>(outcome_sum) / static_cast<double>(count);
		r.outcome_stderr =
		    std::sqrt(integer_sample_variance(count, outcome_sum, outcome_sq) / static_cast<double>(count));
		r.flagged_low_count = count < spec.min_count;
		if (!r.flagged_low_count && r.outcome_stderr > 0.0) {
			r.z_score = (r.mean_outcome - r.mean_prediction) / r.outcome_stderr;
		}
		reports.push_back(r);
	}
	if (j != sorted.size()) {
		throw DomainError("forward_buckets: layout does not cover prediction " + std::to_string(sorted[j].prediction));
	}
	return reports;
}

std::vector<OutcomeGroupReport> backward_groups(std::span<const ForecastOutcomePair> pairs,
                                                const OracleContext *oracle, Count max_outcome) {
	require_nonempty(pairs, "backward_groups");
	validate_pairs(pairs, max_outcome);
	const std::vector<ForecastOutcomePair> sorted = sorted_by(pairs, true);

	std::vector<OutcomeGroupReport> groups;
	std::vector<double> group_predictions;
	for (std::size_t begin = 0; begin < sorted.size();) {
		std::size_t end = begin;
		group_predictions.clear();
		while (end < sorted.size() && sorted[end].outcome == sorted[begin].outcome) {
			group_predictions.push_back(sorted[end].prediction);
			++end;
		}
		OutcomeGroupReport g;
		g.outcome = sorted[begin].outcome;
		g.count = end - begin;
		g.mean_prediction = compensated_mean(group_predictions);
		g.prediction_stderr =
		    std::sqrt(sample_variance(group_predictions, g.mean_prediction) / static_cast<double>(g.count));
		if (oracle != nullptr) {
			g.analytic_hindsight_mean = hindsight_mean(*oracle, g.outcome);
		}
		groups.push_back(g);
		begin = end;
	}
	return groups;
}

CalibrationVerdict calibration_verdict(std::span<const BucketReport> reports, double z_crit) {
	if (!(z_crit > 0.0)) {
		throw DomainError("calibration_verdict: z_crit must be > 0");
	}
	CalibrationVerdict verdict;
	verdict.z_crit = z_crit;
	for (std::size_t i = 0; i < reports.size(); ++i) {
		const auto &r = reports[i];
		if (r.flagged_low_count || !r.z_score) {
			continue;
		}
		if (!verdict.worst_z || std::abs(*r.z_score) > std::abs(*verdict.worst_z)) {
			verdict.worst_z = r.z_score;
			verdict.worst_bucket = i;
		}
		if (std::abs(*r.z_score) > z_crit) {
			verdict.pass = false;
		}
	}
	return verdict;
}

} // namespace fceval
