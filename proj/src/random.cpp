#include "fceval/random.hpp"

namespace fceval {

std::uint64_t mix64(std::uint64_t x) noexcept {
	x += 0x9E3779B97F4A7C15ULL;
	x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
	x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
	return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, StreamDomain domain, std::uint64_t stream_id) noexcept {
	std::uint64_t h = mix64(seed);
	h = mix64(h ^ static_cast<std::uint64_t>(domain));
	return mix64(h ^ stream_id);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id, StreamDomain domain)
    : engine_(derive_seed(seed, domain, stream_id)) {}

std::uint64_t RandomStream::uniform_index(std::uint64_t bound) noexcept {
	// Reject the top partial block so every residue is equally likely.
	const std::uint64_t limit = engine_type::max() - (engine_type::max() % bound + 1) % bound;
	std::uint64_t x = engine_();
	while (x > limit) {
		x = engine_();
	}
	return x % bound;
}

} // namespace fceval
