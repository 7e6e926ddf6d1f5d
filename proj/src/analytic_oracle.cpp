#include "fceval/analytic_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "fceval/errors.hpp"
#include "overloaded.hpp"

namespace fceval {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Log drops (from the integrand's peak) at which extra breakpoints are placed
/// on each side of the mode; roughly 2, 6 and 10 standard deviations for a
/// Gaussian-shaped peak.
constexpr std::array<double, 3> kBreakpointDrops{2.0, 18.0, 50.0};
/// The upper limit is extended until the integrand is this far below its peak.
constexpr double kTruncationDrop = 45.0;

struct LogMoments {
	double log_mass = -kInf;
	double log_first = -kInf;
};

double log_add(double a, double b) {
	if (a == -kInf) {
		return b;
	}
	if (b == -kInf) {
		return a;
	}
	const double m = std::max(a, b);
	return m + std::log1p(std::exp(-std::abs(a - b)));
}

template <class F> double golden_section_argmax(F f, double a, double b) {
	const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
	double c = b - ratio * (b - a);
	double d = a + ratio * (b - a);
	double fc = f(c);
	double fd = f(d);
	for (int it = 0; it < 300 && (b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
		if (fc >= fd) {
			b = d;
			d = c;
			fd = fc;
			c = b - ratio * (b - a);
			fc = f(c);
		} else {
			a = c;
			c = d;
			fc = fd;
			d = a + ratio * (b - a);
			fd = f(d);
		}
	}
	return 0.5 * (a + b);
}

/// Point between `inside` (where f >= level) and `outside` (where f < level)
/// at which a monotone f crosses level.
template <class F> double bisect_level(F f, double inside, double outside, double level) {
	for (int it = 0; it < 100; ++it) {
		const double mid = 0.5 * (inside + outside);
		if (mid == inside || mid == outside) {
			break;
		}
		if (f(mid) >= level) {
			inside = mid;
		} else {
			outside = mid;
		}
	}
	return 0.5 * (inside + outside);
}

/// Relative tolerance the adaptive rule can actually reach. The log
/// integrand is a sum of terms like s log r and r, each rounded, so near the
/// peak the integrand carries relative noise of about eps times their size.
AdaptiveInterval noise_limited(AdaptiveInterval tol, const RatePrior &component, Count s, double mode) {
	const double r = std::max(mode, std::numeric_limits<double>::min());
	const double scale = 1.0 + static_cast<double>(s) * std::abs(std::log(r)) + r +
	                     std::abs(prior_log_density(component, r));
	tol.rel_tol = std::max(tol.rel_tol, 8.0 * std::numeric_limits<double>::epsilon() * scale);
	return tol;
}

/// Breakpoints of a unimodal log integrand g on [lo, hi]: the ends, the mode,
/// and the level crossings kBreakpointDrops below the peak on each side.
template <class G> std::vector<double> breakpoints(G g, double lo, double mode, double hi, double peak) {
	std::vector<double> breaks{lo, mode, hi};
	for (double drop : kBreakpointDrops) {
		const double level = peak - drop;
		if (g(lo) < level && mode > lo) {
			breaks.push_back(bisect_level(g, mode, lo, level));
		}
		if (g(hi) < level && hi > mode) {
			breaks.push_back(bisect_level(g, mode, hi, level));
		}
	}
	std::sort(breaks.begin(), breaks.end());
	breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
	return breaks;
}

LogMoments from_scaled(double peak, const MomentPair &moments) {
	LogMoments out;
	out.log_mass = moments[0] > 0.0 ? peak + std::log(moments[0]) : -kInf;
	out.log_first = moments[1] > 0.0 ? peak + std::log(moments[1]) : -kInf;
	return out;
}

/// Adaptive quadrature over u = log r for priors supported on (0, inf). A
/// power law r^{c-1} at the origin (gamma shape + s < 1 is integrable but
/// singular) becomes the smooth e^{cu}; the mass left of the smallest normal
/// double is added from that exponential tail.
template <class F>
LogMoments log_axis_moments(F log_integrand, double hi, const RatePrior &component, Count s,
                            const AdaptiveInterval &tol) {
	const auto g = [&](double u) { return log_integrand(std::exp(u)) + u; };
	const double u_floor = std::log(std::numeric_limits<double>::min());
	double u_hi = std::log(hi);
	double mode = golden_section_argmax(g, u_floor, u_hi);
	for (int it = 0; it < 64 && mode > u_hi - 1.0; ++it) {
		u_hi += std::log(2.0);
		mode = golden_section_argmax(g, mode - 1.0, u_hi);
	}
	const double peak = g(mode);
	if (peak == -kInf || std::isnan(peak)) {
		return {};
	}
	for (int it = 0; it < 64 && g(u_hi) > peak - kTruncationDrop; ++it) {
		u_hi += std::log(2.0);
	}
	double u_lo = mode - 1.0;
	while (u_lo > u_floor && g(u_lo) > peak - kTruncationDrop) {
		u_lo = std::max(u_floor, mode - 2.0 * (mode - u_lo));
	}

	const auto scaled = [&](double u) {
		const double w = std::exp(g(u) - peak);
		return MomentPair{w, std::exp(u) * w};
	};
	MomentPair moments =
	    integrate_adaptive(scaled, breakpoints(g, u_lo, mode, u_hi, peak), noise_limited(tol, component, s, std::exp(mode)))
	        .value;
	// Left tail: g is close to linear there with slope c > 0.
	const double slope = 2.0 * (g(u_lo + 0.5) - g(u_lo));
	if (slope > 0.0 && std::isfinite(slope)) {
		const MomentPair edge = scaled(u_lo);
		moments[0] += edge[0] / slope;
		moments[1] += edge[1] / (slope + 1.0);
	}
	return from_scaled(peak, moments);
}

/// Zeroth and first moment of P_rate(r) P(s|r) for a single (non-mixture)
/// prior component, in log space. The integrand is unimodal for every
/// supported family, so the rate axis is split at the mode and at the points
/// where the log integrand has dropped by fixed amounts.
LogMoments component_moments(const RatePrior &component, const DemandProcess &process, Count s,
                             const QuadratureSpec &spec) {
	const auto log_integrand = [&](double r) {
		return prior_log_density(component, r) + process_log_pmf(process, s, r);
	};
	const Support support = prior_support(component);
	const bool unbounded = !std::isfinite(support.hi);
	const double lo = support.lo;
	double hi = unbounded ? 2.0 * prior_upper_quantile(component, spec.upper_cutoff_mass) : support.hi;
	if (!(hi > lo)) {
		hi = lo + 1.0;
	}

	const auto *adaptive = std::get_if<AdaptiveInterval>(&spec.scheme);
	if (adaptive != nullptr && unbounded && lo == 0.0) {
		return log_axis_moments(log_integrand, hi, component, s, *adaptive);
	}

	double mode = golden_section_argmax(log_integrand, lo, hi);
	if (unbounded) {
		for (int it = 0; it < 64 && mode > 0.5 * hi; ++it) {
			hi *= 2.0;
			mode = golden_section_argmax(log_integrand, lo, hi);
		}
	}
	const double peak = log_integrand(mode);
	if (peak == -kInf || std::isnan(peak)) {
		return {};
	}
	if (unbounded) {
		for (int it = 0; it < 64 && log_integrand(hi) > peak - kTruncationDrop; ++it) {
			hi *= 2.0;
		}
	}

	const auto scaled = [&](double r) {
		const double w = std::exp(log_integrand(r) - peak);
		return MomentPair{w, r * w};
	};
	if (adaptive != nullptr) {
		return from_scaled(peak, integrate_adaptive(scaled, breakpoints(log_integrand, lo, mode, hi, peak),
		                                            noise_limited(*adaptive, component, s, mode))
		                             .value);
	}
	if (!unbounded) {
		throw DomainError("Gauss-Laguerre quadrature needs a prior with unbounded support");
	}
	// Exponential scale from the chord between the mode and the truncation
	// point, so the rescaled integrand decays like e^{-x}.
	const double drop = peak - log_integrand(hi);
	const double scale = drop > 0.0 ? (hi - std::max(mode, lo)) / drop : hi;
	const auto &gl = std::get<GaussLaguerre>(spec.scheme);
	return from_scaled(peak, integrate_laguerre(scaled, lo, scale, gauss_laguerre_rule(gl.node_count)));
}

LogMoments quadrature_moments(const RatePrior &prior, const DemandProcess &process, Count s,
                              const QuadratureSpec &spec) {
	if (const auto *mix = std::get_if<MixturePrior>(&prior.kind())) {
		LogMoments acc;
		for (std::size_t i = 0; i < mix->components.size(); ++i) {
			if (mix->weights[i] <= 0.0) {
				continue;
			}
			const LogMoments c = quadrature_moments(mix->components[i], process, s, spec);
			const double lw = std::log(mix->weights[i]);
			acc.log_mass = log_add(acc.log_mass, lw + c.log_mass);
			acc.log_first = log_add(acc.log_first, lw + c.log_first);
		}
		return acc;
	}
	return component_moments(prior, process, s, spec);
}

void require_count(Count s) {
	if (s < 0) {
		throw DomainError("oracle: outcome count must be >= 0");
	}
}

double gamma_poisson_log_target(const OracleContext &ctx, Count s) {
	const auto &g = std::get<GammaPrior>(ctx.prior.kind());
	return negative_binomial_log_pmf(s, g.shape / g.rate, g.shape);
}

double gamma_poisson_hindsight_mean(const OracleContext &ctx, Count s) {
	const auto &g = std::get<GammaPrior>(ctx.prior.kind());
	return (g.shape + static_cast<double>(s)) / (g.rate + 1.0);
}

constexpr std::array<ClosedFormEntry, 1> kClosedForms{{
    {PriorFamily::Gamma, ProcessKind::Poisson, &gamma_poisson_log_target, &gamma_poisson_hindsight_mean},
}};

const ClosedFormEntry *resolve(const OracleContext &ctx, OracleMethod method) {
	if (method == OracleMethod::Quadrature) {
		return nullptr;
	}
	const ClosedFormEntry *entry = find_closed_form(ctx);
	if (entry == nullptr && method == OracleMethod::ClosedForm) {
		throw DomainError("oracle: no closed form registered for this prior/process pair");
	}
	return entry;
}

} // namespace

std::span<const ClosedFormEntry> closed_form_table() { return kClosedForms; }

const ClosedFormEntry *find_closed_form(const OracleContext &ctx) {
	for (const ClosedFormEntry &e : kClosedForms) {
		if (e.prior == ctx.prior.family() && e.process == ctx.process.process_kind()) {
			return &e;
		}
	}
	return nullptr;
}

double log_target_pmf(const OracleContext &ctx, Count s, OracleMethod method) {
	require_count(s);
	if (const ClosedFormEntry *entry = resolve(ctx, method)) {
		return entry->log_target_pmf(ctx, s);
	}
	ctx.quadrature.validate();
	return quadrature_moments(ctx.prior, ctx.process, s, ctx.quadrature).log_mass;
}

double target_pmf(const OracleContext &ctx, Count s, OracleMethod method) {
	return std::exp(log_target_pmf(ctx, s, method));
}

double forward_mean(const OracleContext &, double r) {
	if (!(r >= 0.0) || !std::isfinite(r)) {
		throw DomainError("forward_mean: rate must be finite and >= 0");
	}
	return r;
}

double hindsight_density(const OracleContext &ctx, double r, Count s) {
	require_count(s);
	if (r < 0.0) {
		return 0.0;
	}
	const double log_target = log_target_pmf(ctx, s);
	if (log_target == -kInf) {
		throw DomainError("hindsight_density: outcome " + std::to_string(s) + " has zero target mass");
	}
	return std::exp(prior_log_density(ctx.prior, r) + process_log_pmf(ctx.process, s, r) - log_target);
}

double hindsight_mean(const OracleContext &ctx, Count s, OracleMethod method) {
	require_count(s);
	if (const ClosedFormEntry *entry = resolve(ctx, method)) {
		return entry->hindsight_mean(ctx, s);
	}
	ctx.quadrature.validate();
	const LogMoments m = quadrature_moments(ctx.prior, ctx.process, s, ctx.quadrature);
	if (m.log_mass == -kInf) {
		throw DomainError("hindsight_mean: outcome " + std::to_string(s) + " has zero target mass");
	}
	return std::exp(m.log_first - m.log_mass);
}

std::vector<HindsightPoint> hindsight_curve(const OracleContext &ctx, Count s_max, OracleMethod method) {
	require_count(s_max);
	std::vector<HindsightPoint> curve;
	curve.reserve(static_cast<std::size_t>(s_max) + 1);
	for (Count s = 0; s <= s_max; ++s) {
		const double log_target = log_target_pmf(ctx, s, method);
		if (log_target == -kInf) {
			continue;
		}
		curve.push_back({s, std::exp(log_target), hindsight_mean(ctx, s, method)});
	}
	return curve;
}

} // namespace fceval
