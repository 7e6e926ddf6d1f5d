#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fceval/analytic_oracle.hpp"
#include "fceval/synthetic_market.hpp"

namespace fceval {

/// Outcomes above this are treated as data errors unless configured otherwise.
inline constexpr Count kDefaultMaxOutcome = 1'000'000;

/// Throws DataError for non-finite or negative predictions, negative outcomes,
/// or outcomes above max_outcome.
void validate_pairs(std::span<const ForecastOutcomePair> pairs, Count max_outcome = kDefaultMaxOutcome);

struct GlobalMeans {
	double mean_prediction;
	double mean_outcome;
};

/// Compensated arithmetic means of predictions and outcomes.
GlobalMeans global_means(std::span<const ForecastOutcomePair> pairs);

enum class BiasTestMethod { NormalApproximation, Bootstrap };

struct BiasTestResult {
	std::size_t n = 0;
	double mean_prediction = 0.0;
	double mean_outcome = 0.0;
	/// mean_outcome - mean_prediction
	double difference = 0.0;
	double standard_error = 0.0;
	/// Empty when the standard error is zero or undefined.
	std::optional<double> z_score;
	bool significant_at_3sigma = false;
	/// n == 1 or zero variance of the paired differences.
	bool degenerate = false;
	BiasTestMethod method = BiasTestMethod::NormalApproximation;
};

/// Paired test of s-bar against r-bar: stderr = sqrt(Var(s - r) / n) with the
/// sample variance.
BiasTestResult global_bias_test(std::span<const ForecastOutcomePair> pairs);

/// Same statistic with the standard error taken from `resamples` seeded
/// bootstrap resamples of the pairs. Intended for small n.
BiasTestResult bootstrap_bias_test(std::span<const ForecastOutcomePair> pairs, std::size_t resamples = 1000,
                                   std::uint64_t seed = 0);

struct FixedWidthBuckets {
	double width = 1.0;  ///< > 0
	double origin = 0.0; ///< >= 0, edges sit at origin + k * width
};

struct QuantileBuckets {
	std::size_t buckets = 20;
};

struct LogWidthBuckets {
	double ratio = 2.0;    ///< > 1
	double min_edge = 0.1; ///< > 0, first bucket is [0, min_edge)
};

struct BucketSpec {
	std::variant<FixedWidthBuckets, QuantileBuckets, LogWidthBuckets> scheme = QuantileBuckets{};
	std::size_t min_count = 30;
};

/// Half-open interval [lo, hi).
struct Interval {
	double lo;
	double hi;

	bool contains(double x) const noexcept { return lo <= x && x < hi; }
	friend bool operator==(const Interval &, const Interval &) = default;
};

struct BucketLayout {
	/// Contiguous, ascending, starting at 0 and ending above the largest prediction.
	std::vector<Interval> intervals;
	/// Quantile scheme produced fewer buckets than requested because of tied
	/// predictions.
	bool merged = false;
};

/// Upper bound on the number of buckets a layout may contain.
inline constexpr std::size_t kMaxBuckets = 1'000'000;

BucketLayout make_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec);

/// Index of the interval containing x, or intervals.size() if none does.
std::size_t find_bucket(const BucketLayout &layout, double x);

struct BucketReport {
	Interval interval{};
	std::size_t count = 0;
	double mean_prediction = 0.0;
	double mean_outcome = 0.0;
	double outcome_stderr = 0.0;
	/// (mean_outcome - mean_prediction) / outcome_stderr; empty when flagged or
	/// the stderr is zero.
	std::optional<double> z_score;
	bool flagged_low_count = false;
};

/// Forward-looking evaluation: mean outcome per prediction bucket. Only
/// populated buckets are reported. Pairs are aggregated in sorted order, so the
/// result is exactly invariant under permutation of the input.
std::vector<BucketReport> forward_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec);
std::vector<BucketReport> forward_buckets(std::span<const ForecastOutcomePair> pairs, const BucketSpec &spec,
                                          const BucketLayout &layout);

struct OutcomeGroupReport {
	Count outcome = 0;
	std::size_t count = 0;
	double mean_prediction = 0.0;
	double prediction_stderr = 0.0;
	std::optional<double> analytic_hindsight_mean;
};

/// Backward-looking evaluation: mean prediction per exact observed outcome,
/// ascending in outcome. With an oracle, each group also carries E(r|s).
std::vector<OutcomeGroupReport> backward_groups(std::span<const ForecastOutcomePair> pairs,
                                                const OracleContext *oracle = nullptr,
                                                Count max_outcome = kDefaultMaxOutcome);

struct CalibrationVerdict {
	bool pass = true;
	double z_crit = 4.0;
	/// Index into the reports of the bucket with the largest |z|.
	std::optional<std::size_t> worst_bucket;
	std::optional<double> worst_z;
};

/// Fails when any unflagged bucket with a defined z has |z| > z_crit.
CalibrationVerdict calibration_verdict(std::span<const BucketReport> reports, double z_crit = 4.0);

} // namespace fceval
