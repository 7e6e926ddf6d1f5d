#include "fceval/synthetic_market.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "fceval/errors.hpp"
#include "fceval/summation.hpp"
#include "overloaded.hpp"

namespace fceval {
namespace {

/// Runs body(begin, end) over contiguous chunks of [0, n).
template <class Body> void for_chunks(std::size_t n, unsigned threads, Body body) {
	const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n / 1024 + 1));
	if (workers == 1) {
		body(std::size_t{0}, n);
		return;
	}
	const std::size_t chunk = (n + workers - 1) / workers;
	std::vector<std::jthread> pool;
	pool.reserve(workers);
	for (std::size_t w = 0; w < workers; ++w) {
		const std::size_t begin = w * chunk;
		const std::size_t end = std::min(n, begin + chunk);
		if (begin >= end) {
			break;
		}
		pool.emplace_back([=] { body(begin, end); });
	}
}

} // namespace

Assortment generate_assortment(const RatePrior &prior, std::size_t n, std::uint64_t seed, unsigned threads) {
	if (n == 0) {
		throw DomainError("generate_assortment: item count must be >= 1");
	}
	Assortment out;
	out.true_rates.resize(n);
	for_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
		for (std::size_t j = begin; j < end; ++j) {
			RandomStream rng(seed, j, StreamDomain::Assortment);
			out.true_rates[j] = sample_rate(prior, rng);
		}
	});
	return out;
}

std::vector<Count> realize_sales(const DemandProcess &process, std::span<const double> rates,
                                 std::span<const std::int64_t> item_ids, std::uint64_t seed, unsigned threads) {
	if (rates.size() != item_ids.size()) {
		throw DomainError("realize_sales: rates and item ids differ in length");
	}
	for (double r : rates) {
		if (!(r >= 0.0) || !std::isfinite(r)) {
			throw DomainError("realize_sales: rates must be finite and >= 0");
		}
	}
	std::vector<Count> out(rates.size());
	for_chunks(rates.size(), threads, [&](std::size_t begin, std::size_t end) {
		for (std::size_t k = begin; k < end; ++k) {
			RandomStream rng(seed, static_cast<std::uint64_t>(item_ids[k]), StreamDomain::Sales);
			out[k] = sample_sales(process, rates[k], rng);
		}
	});
	return out;
}

std::vector<Count> realize_sales(const DemandProcess &process, const Assortment &assortment, std::uint64_t seed,
                                 unsigned threads) {
	std::vector<std::int64_t> ids(assortment.size());
	for (std::size_t j = 0; j < ids.size(); ++j) {
		ids[j] = static_cast<std::int64_t>(j);
	}
	return realize_sales(process, assortment.true_rates, ids, seed, threads);
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
	std::vector<std::size_t> perm(n);
	for (std::size_t i = 0; i < n; ++i) {
		perm[i] = i;
	}
	RandomStream rng(seed, 0, StreamDomain::Permutation);
	for (std::size_t i = n; i > 1; --i) {
		const std::size_t j = rng.uniform_index(i);
		std::swap(perm[i - 1], perm[j]);
	}
	return perm;
}

std::vector<double> apply_distortion(const Assortment &assortment, const DistortionStrategy &strategy) {
	const std::vector<double> &rates = assortment.true_rates;
	return std::visit(
	    detail::Overloaded{
	        [&](const HonestForecast &) { return rates; },
	        [&](const PermutedForecast &p) {
		        const std::vector<std::size_t> perm = random_permutation(rates.size(), p.seed);
		        std::vector<double> out(rates.size());
		        for (std::size_t j = 0; j < rates.size(); ++j) {
			        out[j] = rates[perm[j]];
		        }
		        return out;
	        },
	        [&](const ConstantMeanForecast &) {
		        if (rates.empty()) {
			        return std::vector<double>{};
		        }
		        return std::vector<double>(rates.size(), compensated_mean(rates));
	        },
	        [&](const ExaggeratedForecast &e) {
		        if (!(e.stretch > 0.0) || !std::isfinite(e.stretch)) {
			        throw DomainError("exaggerate: stretch must be finite and > 0");
		        }
		        if (!(e.floor > 0.0) || !std::isfinite(e.floor)) {
			        throw DomainError("exaggerate: floor must be finite and > 0");
		        }
		        if (rates.empty()) {
			        return std::vector<double>{};
		        }
		        const double mean = compensated_mean(rates);
		        std::vector<double> out(rates.size());
		        for (std::size_t j = 0; j < rates.size(); ++j) {
			        const double stretched = e.stretch == 1.0 ? rates[j] : mean + e.stretch * (rates[j] - mean);
			        out[j] = std::max(e.floor, stretched);
		        }
		        return out;
	        },
	    },
	    strategy);
}

std::vector<ForecastOutcomePair> build_pairs(std::span<const double> predictions, std::span<const Count> outcomes) {
	if (predictions.size() != outcomes.size()) {
		throw DataError("build_pairs: length mismatch (" + std::to_string(predictions.size()) + " predictions vs " +
		                std::to_string(outcomes.size()) + " outcomes)");
	}
	std::vector<ForecastOutcomePair> pairs(predictions.size());
	for (std::size_t j = 0; j < pairs.size(); ++j) {
		pairs[j] = {static_cast<std::int64_t>(j), predictions[j], outcomes[j]};
	}
	return pairs;
}

} // namespace fceval
