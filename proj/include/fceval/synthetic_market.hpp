#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fceval/distributions.hpp"

namespace fceval {

/// True selling rates of an assortment for one day.
struct Assortment {
	std::vector<double> true_rates;

	std::size_t size() const noexcept { return true_rates.size(); }
};

/// One item's predicted expectation and realized count.
struct ForecastOutcomePair {
	std::int64_t item_id = 0;
	double prediction = 0.0;
	Count outcome = 0;

	friend bool operator==(const ForecastOutcomePair &, const ForecastOutcomePair &) = default;
};

struct HonestForecast {};

/// Rates reassigned across items by a seeded Fisher-Yates shuffle.
struct PermutedForecast {
	std::uint64_t seed = 0;
};

/// Every item gets the assortment mean.
struct ConstantMeanForecast {};

/// r -> max(floor, mean + stretch * (r - mean)), mean being the honest mean.
struct ExaggeratedForecast {
	double stretch = 2.0;
	double floor = 1e-9;
};

using DistortionStrategy = std::variant<HonestForecast, PermutedForecast, ConstantMeanForecast, ExaggeratedForecast>;

/// n independent draws from `prior`. Item j uses its own stream keyed by
/// (seed, j), so the result does not depend on `threads`.
Assortment generate_assortment(const RatePrior &prior, std::size_t n, std::uint64_t seed, unsigned threads = 1);

/// One count per item, item j drawn from the stream keyed by (seed, j).
std::vector<Count> realize_sales(const DemandProcess &process, const Assortment &assortment, std::uint64_t seed,
                                 unsigned threads = 1);

/// Same as above with explicit item ids: the draw for rates[k] uses the
/// stream of item_ids[k].
std::vector<Count> realize_sales(const DemandProcess &process, std::span<const double> rates,
                                 std::span<const std::int64_t> item_ids, std::uint64_t seed, unsigned threads = 1);

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

std::vector<double> apply_distortion(const Assortment &assortment, const DistortionStrategy &strategy);

/// Zips predictions and outcomes with item ids 0..n-1.
std::vector<ForecastOutcomePair> build_pairs(std::span<const double> predictions, std::span<const Count> outcomes);

} // namespace fceval
