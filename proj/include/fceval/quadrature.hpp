#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace fceval {

/// Globally adaptive Gauss-Kronrod (7/15) on the interval set between
/// breakpoints.
struct AdaptiveInterval {
	double abs_tol = 1e-15;
	double rel_tol = 1e-13;
	std::size_t max_subdivisions = 4000;
};

/// Gauss-Laguerre rule on [lower, inf) after an exponential rescaling.
struct GaussLaguerre {
	std::size_t node_count = 64;
};

/// Numerical realization of the integrals over rates.
struct QuadratureSpec {
	std::variant<AdaptiveInterval, GaussLaguerre> scheme = AdaptiveInterval{};
	/// Prior tail mass beyond which the rate axis is truncated (before the
	/// cutoff is doubled).
	double upper_cutoff_mass = 1e-12;

	/// Throws ConfigError when tolerances are not positive, node_count < 16,
	/// or the cutoff mass is outside (0, 1).
	void validate() const;
};

/// Value pair integrated on a shared node set: used for the zeroth and first
/// moment so their quadrature errors are correlated.
using MomentPair = std::array<double, 2>;

struct AdaptiveResult {
	MomentPair value{};
	MomentPair error{};
	std::size_t intervals = 0;
};

/// Integrates f over [breakpoints.front(), breakpoints.back()], starting from
/// the partition the (sorted) breakpoints define. Throws QuadratureError when
/// max_subdivisions is hit before both components meet
/// max(abs_tol, rel_tol * |value|).
AdaptiveResult integrate_adaptive(const std::function<MomentPair(double)> &f, std::span<const double> breakpoints,
                                  const AdaptiveInterval &tolerance);

/// Scalar convenience wrapper over integrate_adaptive on [a, b].
double integrate_adaptive(const std::function<double(double)> &f, double a, double b,
                          const AdaptiveInterval &tolerance = {});

/// Nodes and weights for int_0^inf e^{-x} g(x) dx.
struct LaguerreRule {
	std::vector<double> nodes;
	std::vector<double> weights;
	/// weights[i] * exp(nodes[i]), computed in log space so that large nodes
	/// keep full relative accuracy.
	std::vector<double> scaled_weights;
};

/// Golub-Welsch nodes (Newton-polished) with weights from the
/// x / ((n+1)^2 L_{n+1}(x)^2) identity. Cached per node count.
const LaguerreRule &gauss_laguerre_rule(std::size_t node_count);

/// int_lower^inf f(r) dr ~= scale * sum_i scaled_weights[i] f(lower + scale * x_i).
MomentPair integrate_laguerre(const std::function<MomentPair(double)> &f, double lower, double scale,
                              const LaguerreRule &rule);

} // namespace fceval
