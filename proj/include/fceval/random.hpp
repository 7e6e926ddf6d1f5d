#pragma once

#include <cstdint>
#include <random>

namespace fceval {

/// Independent substream families. Each family derives its own per-item
/// streams so that, e.g., rates and sales drawn with the same user seed stay
/// uncorrelated.
enum class StreamDomain : std::uint64_t {
	Assortment = 1,
	Sales = 2,
	Permutation = 3,
	Bootstrap = 4,
	Generic = 15,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives the engine seed for stream (seed, domain, stream_id).
std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain, std::uint64_t stream_id) noexcept;

/// A single-owner random stream keyed by (seed, domain, stream id).
///
/// The engine is std::mt19937_64 seeded with a SplitMix64 hash of the key, so
/// a stream's output depends only on its key. Two streams with equal keys
/// produce bit-identical sequences on the same build. Parallel code must give
/// each worker its own stream; streams are never shared.
class RandomStream {
public:
	using engine_type = std::mt19937_64;

	explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0,
	                      StreamDomain domain = StreamDomain::Generic);

	RandomStream(const RandomStream &) = delete;
	RandomStream &operator=(const RandomStream &) = delete;
	RandomStream(RandomStream &&) noexcept = default;
	RandomStream &operator=(RandomStream &&) noexcept = default;

	engine_type &engine() noexcept { return engine_; }

	/// Uniform on [0, 1) with 53 random bits.
	double uniform01() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	std::uint64_t next_u64() noexcept { return engine_(); }

	/// Uniform integer on [0, bound), bound > 0, by rejection sampling.
	std::uint64_t uniform_index(std::uint64_t bound) noexcept;

private:
	engine_type engine_;
};

} // namespace fceval
