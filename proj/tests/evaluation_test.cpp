#include "fceval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "fceval/errors.hpp"
#include "fceval/random.hpp"
#include "fceval/summation.hpp"

namespace fceval {
namespace {

std::vector<ForecastOutcomePair> make_pairs(std::initializer_list<std::pair<double, Count>> rows) {
	std::vector<ForecastOutcomePair> out;
	std::int64_t id = 0;
	for (const auto &[r, s] : rows) {
		out.push_back({id++, r, s});
	}
	return out;
}

std::vector<ForecastOutcomePair> simulate(const RatePrior &prior, std::size_t n, std::uint64_t seed,
                                          const DistortionStrategy &distortion = HonestForecast{}) {
	const Assortment a = generate_assortment(prior, n, seed);
	return build_pairs(apply_distortion(a, distortion), realize_sales(DemandProcess::poisson(), a, seed));
}

BucketSpec fixed(double width, double origin, std::size_t min_count) {
	return BucketSpec{FixedWidthBuckets{width, origin}, min_count};
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

TEST(GlobalMeans, Examples) {
	const auto m = global_means(make_pairs({{1.0, 1}, {2.0, 3}, {3.0, 2}}));
	EXPECT_DOUBLE_EQ(m.mean_prediction, 2.0);
	EXPECT_DOUBLE_EQ(m.mean_outcome, 2.0);
	const auto single = global_means(make_pairs({{0.5, 0}}));
	EXPECT_DOUBLE_EQ(single.mean_prediction, 0.5);
	EXPECT_DOUBLE_EQ(single.mean_outcome, 0.0);
	EXPECT_THROW(global_means({}), DataError);
}

TEST(GlobalMeans, CalibratedRunNearPriorMean) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 10'000, 31);
	const auto m = global_means(pairs);
	// sd of r is 2, of s is sqrt(6) under Gamma(1, 0.5) + Poisson.
	EXPECT_NEAR(m.mean_prediction, 2.0, 4.0 * 2.0 / 100.0);
	EXPECT_NEAR(m.mean_outcome, 2.0, 4.0 * std::sqrt(6.0) / 100.0);
	EXPECT_FALSE(global_bias_test(pairs).significant_at_3sigma);
}

TEST(GlobalBiasTest, ZeroVarianceIsDegenerate) {
	const auto r = global_bias_test(make_pairs({{1, 5}, {1, 5}, {1, 5}, {1, 5}}));
	EXPECT_DOUBLE_EQ(r.difference, 4.0);
	EXPECT_EQ(r.standard_error, 0.0);
	EXPECT_TRUE(r.degenerate);
	EXPECT_FALSE(r.z_score.has_value());
}

TEST(GlobalBiasTest, SinglePairIsDegenerate) {
	const auto r = global_bias_test(make_pairs({{1.5, 2}}));
	EXPECT_EQ(r.n, 1u);
	EXPECT_TRUE(r.degenerate);
	EXPECT_FALSE(r.z_score.has_value());
	EXPECT_FALSE(r.significant_at_3sigma);
	EXPECT_THROW(global_bias_test({}), DataError);
}

TEST(GlobalBiasTest, HandComputedStatistic) {
	// d = s - r = (1, -1, 2, 0): mean 0.5, sample variance 5/3.
	const auto r = global_bias_test(make_pairs({{1, 2}, {2, 1}, {1, 3}, {4, 4}}));
	EXPECT_DOUBLE_EQ(r.difference, 0.5);
	EXPECT_NEAR(r.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
	ASSERT_TRUE(r.z_score);
	EXPECT_NEAR(*r.z_score, 0.5 / std::sqrt(5.0 / 12.0), 1e-14);
	EXPECT_FALSE(r.significant_at_3sigma);
}

TEST(GlobalBiasTest, DetectsTenPercentShift) {
	auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 100'000, 17);
	for (auto &p : pairs) {
		p.prediction *= 1.1;
	}
	const auto r = global_bias_test(pairs);
	EXPECT_TRUE(r.significant_at_3sigma);
	EXPECT_LT(r.difference, 0.0);
}

TEST(GlobalBiasTest, CalibratedRunsRarelySignificant) {
	int significant = 0;
	for (std::uint64_t seed = 1; seed <= 40; ++seed) {
		significant += global_bias_test(simulate(RatePrior::gamma(1.0, 0.5), 5000, seed)).significant_at_3sigma;
	}
	EXPECT_LE(significant, 2);
}

TEST(BootstrapBiasTest, AgreesWithNormalApproximation) {
	const auto pairs = simulate(RatePrior::gamma(2.0, 1.0), 2000, 3);
	const auto normal = global_bias_test(pairs);
	const auto boot = bootstrap_bias_test(pairs, 1000, 11);
	EXPECT_EQ(boot.method, BiasTestMethod::Bootstrap);
	EXPECT_DOUBLE_EQ(boot.difference, normal.difference);
	// Monte Carlo error of a 1000-replicate sd estimate is about 2.2%.
	EXPECT_NEAR(boot.standard_error / normal.standard_error, 1.0, 0.1);
	const auto again = bootstrap_bias_test(pairs, 1000, 11);
	EXPECT_EQ(again.standard_error, boot.standard_error);
	EXPECT_THROW(bootstrap_bias_test(pairs, 1, 0), DomainError);
}

TEST(ValidatePairs, RejectsBadValues) {
	EXPECT_THROW(validate_pairs(make_pairs({{-1.0, 1}})), DataError);
	EXPECT_THROW(validate_pairs(make_pairs({{NAN, 1}})), DataError);
	EXPECT_THROW(validate_pairs(make_pairs({{1.0, -1}})), DataError);
	EXPECT_THROW(validate_pairs(make_pairs({{1.0, 11}}), 10), DataError);
	EXPECT_NO_THROW(validate_pairs(make_pairs({{0.0, 10}}), 10));
}

TEST(MakeBuckets, FixedWidthExample) {
	const auto layout = make_buckets(make_pairs({{0.3, 0}, {2.5, 1}}), fixed(1.0, 0.0, 30));
	EXPECT_EQ(layout.intervals, (std::vector<Interval>{{0, 1}, {1, 2}, {2, 3}}));
	EXPECT_FALSE(layout.merged);
}

TEST(MakeBuckets, FixedWidthOriginShift) {
	// A centered grid: edges at 0.5 + k.
	const auto layout = make_buckets(make_pairs({{0.2, 0}, {2.0, 1}}), fixed(1.0, 0.5, 30));
	EXPECT_EQ(layout.intervals, (std::vector<Interval>{{0, 0.5}, {0.5, 1.5}, {1.5, 2.5}}));
}

TEST(MakeBuckets, LogWidthExample) {
	const auto layout = make_buckets(make_pairs({{0.1, 0}, {3.0, 1}}), BucketSpec{LogWidthBuckets{2.0, 0.5}, 30});
	EXPECT_EQ(layout.intervals, (std::vector<Interval>{{0, 0.5}, {0.5, 1}, {1, 2}, {2, 4}}));
}

TEST(MakeBuckets, QuantileTiesMerge) {
	const auto layout = make_buckets(make_pairs({{1, 0}, {1, 1}, {1, 2}, {1, 3}}), BucketSpec{QuantileBuckets{2}, 1});
	ASSERT_EQ(layout.intervals.size(), 1u);
	EXPECT_TRUE(layout.merged);
	EXPECT_TRUE(layout.intervals[0].contains(1.0));
}

TEST(MakeBuckets, QuantileEqualCounts) {
	std::vector<ForecastOutcomePair> pairs;
	for (int i = 0; i < 100; ++i) {
		pairs.push_back({i, 0.5 + i, 0});
	}
	const BucketSpec spec{QuantileBuckets{4}, 1};
	const auto layout = make_buckets(pairs, spec);
	ASSERT_EQ(layout.intervals.size(), 4u);
	for (const auto &b : forward_buckets(pairs, spec, layout)) {
		EXPECT_EQ(b.count, 25u);
	}
}

TEST(MakeBuckets, CoverEveryPairExactlyOnce) {
	const auto pairs = simulate(RatePrior::lognormal(0.0, 1.5), 20'000, 12);
	for (const BucketSpec &spec : {fixed(0.7, 0.2, 30), BucketSpec{QuantileBuckets{20}, 30},
	                               BucketSpec{LogWidthBuckets{1.5, 0.05}, 30}}) {
		const auto layout = make_buckets(pairs, spec);
		EXPECT_EQ(layout.intervals.front().lo, 0.0);
		for (std::size_t i = 0; i + 1 < layout.intervals.size(); ++i) {
			ASSERT_EQ(layout.intervals[i].hi, layout.intervals[i + 1].lo);
			ASSERT_LT(layout.intervals[i].lo, layout.intervals[i].hi);
		}
		for (const auto &p : pairs) {
			const std::size_t k = find_bucket(layout, p.prediction);
			ASSERT_LT(k, layout.intervals.size());
			ASSERT_TRUE(layout.intervals[k].contains(p.prediction));
		}
	}
}

TEST(MakeBuckets, RejectsInvalidSpecs) {
	const auto pairs = make_pairs({{1.0, 1}});
	EXPECT_THROW(make_buckets(pairs, fixed(0.0, 0.0, 1)), DomainError);
	EXPECT_THROW(make_buckets(pairs, fixed(1.0, -1.0, 1)), DomainError);
	EXPECT_THROW(make_buckets(pairs, BucketSpec{LogWidthBuckets{1.0, 0.1}, 1}), DomainError);
	EXPECT_THROW(make_buckets(pairs, BucketSpec{QuantileBuckets{0}, 1}), DomainError);
	EXPECT_THROW(make_buckets({}, BucketSpec{}), DataError);
	EXPECT_THROW(make_buckets(make_pairs({{1e9, 0}}), fixed(1e-3, 0.0, 1)), DomainError);
}

TEST(FindBucket, OutsideLayout) {
	BucketLayout layout{{{0, 1}, {1, 2}}, false};
	EXPECT_EQ(find_bucket(layout, 1.0), 1u);
	EXPECT_EQ(find_bucket(layout, 2.0), 2u);
	EXPECT_EQ(find_bucket(layout, -0.5), 2u);
}

TEST(ForwardBuckets, HandCountableExample) {
	const auto reports = forward_buckets(make_pairs({{1.1, 1}, {1.2, 2}, {5.0, 4}}), fixed(1.0, 0.0, 1));
	ASSERT_EQ(reports.size(), 2u);
	EXPECT_EQ(reports[0].interval, (Interval{1, 2}));
	EXPECT_EQ(reports[0].count, 2u);
	EXPECT_DOUBLE_EQ(reports[0].mean_outcome, 1.5);
	EXPECT_DOUBLE_EQ(reports[0].mean_prediction, 1.15);
	// Sample sd of (1, 2) is sqrt(1/2); stderr divides by sqrt(2).
	EXPECT_DOUBLE_EQ(reports[0].outcome_stderr, 0.5);
	ASSERT_TRUE(reports[0].z_score);
	EXPECT_NEAR(*reports[0].z_score, 0.7, 1e-12);
	EXPECT_EQ(reports[1].interval, (Interval{5, 6}));
	EXPECT_EQ(reports[1].count, 1u);
	EXPECT_FALSE(reports[1].z_score.has_value());
}

TEST(ForwardBuckets, LowCountFlaggedAndZSuppressed) {
	const auto reports = forward_buckets(make_pairs({{1.1, 1}, {1.2, 2}, {1.3, 0}}), fixed(1.0, 0.0, 5));
	ASSERT_EQ(reports.size(), 1u);
	EXPECT_TRUE(reports[0].flagged_low_count);
	EXPECT_FALSE(reports[0].z_score.has_value());
	EXPECT_GT(reports[0].outcome_stderr, 0.0);
}

TEST(ForwardBuckets, MeanPredictionInsideInterval) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 10'000, 77);
	for (const auto &b : forward_buckets(pairs, BucketSpec{})) {
		EXPECT_LE(b.interval.lo, b.mean_prediction);
		EXPECT_LT(b.mean_prediction, b.interval.hi);
		EXPECT_GE(b.count, 1u);
	}
}

TEST(ForwardBuckets, PermutationInvariant) {
	auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 10'000, 5);
	const auto before = forward_buckets(pairs, BucketSpec{});
	RandomStream rng(1);
	for (std::size_t i = pairs.size(); i > 1; --i) {
		std::swap(pairs[i - 1], pairs[rng.uniform_index(i)]);
	}
	const auto after = forward_buckets(pairs, BucketSpec{});
	ASSERT_EQ(before.size(), after.size());
	for (std::size_t i = 0; i < before.size(); ++i) {
		EXPECT_EQ(before[i].interval, after[i].interval);
		EXPECT_EQ(before[i].count, after[i].count);
		EXPECT_EQ(before[i].mean_prediction, after[i].mean_prediction);
		EXPECT_EQ(before[i].mean_outcome, after[i].mean_outcome);
		EXPECT_EQ(before[i].outcome_stderr, after[i].outcome_stderr);
		EXPECT_EQ(before[i].z_score, after[i].z_score);
	}
}

TEST(PartitionIdentity, BucketsAndGroupsReproduceGlobalMeans) {
	for (const DistortionStrategy &d : std::vector<DistortionStrategy>{
	         HonestForecast{}, PermutedForecast{9}, ConstantMeanForecast{}, ExaggeratedForecast{}}) {
		const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 20'000, 101, d);
		// Independent reference: long double sums in input order.
		long double r_sum = 0.0L;
		long double s_sum = 0.0L;
		for (const auto &p : pairs) {
			r_sum += p.prediction;
			s_sum += p.outcome;
		}
		const double r_bar = static_cast<double>(r_sum / pairs.size());
		const double s_bar = static_cast<double>(s_sum / pairs.size());

		for (const BucketSpec &spec : {BucketSpec{}, fixed(0.5, 0.0, 30), BucketSpec{LogWidthBuckets{2.0, 0.1}, 30}}) {
			CompensatedSum wr;
			CompensatedSum ws;
			std::size_t total = 0;
			for (const auto &b : forward_buckets(pairs, spec)) {
				wr.add(b.mean_prediction * double(b.count));
				ws.add(b.mean_outcome * double(b.count));
				total += b.count;
			}
			EXPECT_EQ(total, pairs.size());
			EXPECT_LT(relative(wr.value() / double(total), r_bar), 1e-12);
			EXPECT_LT(relative(ws.value() / double(total), s_bar), 1e-12);
		}

		CompensatedSum wg;
		std::size_t total = 0;
		for (const auto &g : backward_groups(pairs)) {
			wg.add(g.mean_prediction * double(g.count));
			total += g.count;
		}
		EXPECT_EQ(total, pairs.size());
		EXPECT_LT(relative(wg.value() / double(total), r_bar), 1e-12);
	}
}

TEST(BackwardGroups, HandCountableExample) {
	const auto groups = backward_groups(make_pairs({{1.0, 0}, {3.0, 0}, {2.0, 5}}));
	ASSERT_EQ(groups.size(), 2u);
	EXPECT_EQ(groups[0].outcome, 0);
	EXPECT_EQ(groups[0].count, 2u);
	EXPECT_DOUBLE_EQ(groups[0].mean_prediction, 2.0);
	EXPECT_DOUBLE_EQ(groups[0].prediction_stderr, 1.0);
	EXPECT_EQ(groups[1].outcome, 5);
	EXPECT_DOUBLE_EQ(groups[1].mean_prediction, 2.0);
	EXPECT_FALSE(groups[0].analytic_hindsight_mean.has_value());
	EXPECT_THROW(backward_groups({}), DataError);
}

TEST(BackwardGroups, CalibratedRunShowsHindsightBias) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 100'000, 2024);
	const OracleContext ctx{RatePrior::gamma(1.0, 0.5), DemandProcess::poisson()};
	const auto groups = backward_groups(pairs, &ctx);
	ASSERT_EQ(groups.front().outcome, 0);
	// (alpha + s) / (beta + 1) with alpha = 1, beta = 0.5.
	EXPECT_NEAR(*groups.front().analytic_hindsight_mean, 1.0 / 1.5, 1e-12);
	EXPECT_GT(groups.front().mean_prediction, 0.5);
	for (const auto &g : groups) {
		EXPECT_NEAR(*g.analytic_hindsight_mean, (1.0 + double(g.outcome)) / 1.5, 1e-12 * (1.0 + g.outcome));
		if (g.count >= 100) {
			EXPECT_LT(std::abs(g.mean_prediction - *g.analytic_hindsight_mean), 4.0 * g.prediction_stderr) << g.outcome;
		}
		if (g.outcome >= 8 && g.count >= 30) {
			EXPECT_LT(g.mean_prediction, double(g.outcome));
		}
		// Above s below the prior mean of 2, below s above it.
		if (g.outcome == 0 || (g.outcome >= 4 && g.count >= 100)) {
			EXPECT_EQ(g.mean_prediction > double(g.outcome), g.outcome < 2) << g.outcome;
		}
	}
}

TEST(CalibrationVerdict, Examples) {
	std::vector<BucketReport> reports(3);
	reports[0].z_score = 1.0;
	reports[1].z_score = -0.5;
	reports[2].z_score = 0.9;
	const auto pass = calibration_verdict(reports);
	EXPECT_TRUE(pass.pass);
	EXPECT_EQ(pass.worst_bucket, 0u);

	reports[1].z_score = 6.0;
	const auto fail = calibration_verdict(reports);
	EXPECT_FALSE(fail.pass);
	EXPECT_EQ(fail.worst_bucket, 1u);
	EXPECT_DOUBLE_EQ(*fail.worst_z, 6.0);

	// Flagged buckets never decide the verdict.
	reports[1].flagged_low_count = true;
	EXPECT_TRUE(calibration_verdict(reports).pass);
	EXPECT_TRUE(calibration_verdict({}).pass);
	EXPECT_THROW(calibration_verdict(reports, 0.0), DomainError);
}

TEST(CalibrationVerdict, PermutationFailsWhileGlobalPasses) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 100'000, 8, PermutedForecast{808});
	EXPECT_FALSE(global_bias_test(pairs).significant_at_3sigma);
	EXPECT_FALSE(calibration_verdict(forward_buckets(pairs, BucketSpec{})).pass);
}

TEST(ForwardBuckets, ConstantMeanSinglePopulatedBucket) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 10'000, 4, ConstantMeanForecast{});
	const auto reports = forward_buckets(pairs, fixed(0.25, 0.0, 30));
	ASSERT_EQ(reports.size(), 1u);
	EXPECT_EQ(reports[0].count, pairs.size());
	EXPECT_LT(std::abs(*reports[0].z_score), 4.0);
}

TEST(ForwardBuckets, ExaggerationOverPredictsTopBucket) {
	const auto pairs = simulate(RatePrior::gamma(1.0, 0.5), 100'000, 15, ExaggeratedForecast{2.0, 1e-9});
	const auto reports = forward_buckets(pairs, BucketSpec{});
	const auto &top = reports.back();
	EXPECT_LT(top.mean_outcome, top.mean_prediction);
	ASSERT_TRUE(top.z_score);
	EXPECT_GT(std::abs(*top.z_score), 3.0);
	EXPECT_FALSE(calibration_verdict(reports).pass);
}

} // namespace
} // namespace fceval
